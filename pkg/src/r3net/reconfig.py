"""Online failure handling: redistribute a failed link's flow instantly.

When link l fails, its share of every commodity is re-spread over the
surviving links in proportion to the protection routing of l's endpoint
pair, rescaled to exclude l itself. The same rule updates the protection
routing, so subsequent failures keep working. Flow conservation survives
these updates; totality and no-return/no-extension may not (a transient
state until a fresh optimization replaces it).

Links whose protection routing sits entirely on themselves cannot be
protected: failing one drops its flow, which is recorded on the state
rather than silently lost. Demands whose destination becomes unreachable
are likewise zeroed and logged.

The state has a single-writer contract: readers should snapshot via
``copy`` (scenario sweeps clone per scenario).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

import numpy as np

from . import _kernels as K
from .topology import VirtualizedTopology

if TYPE_CHECKING:  # pragma: no cover
    from .r3core import R3Solution

EPS_DIAG = 1e-9


@dataclass
class ReconfigState:
    r: np.ndarray                      # (n, n, N) on the derived topology
    p: np.ndarray                      # (N, N)
    active: set[int]
    failed: list[int]
    vt: VirtualizedTopology
    demand: np.ndarray                 # (n, n) derived-padded
    dropped_flows: list[tuple[int, int, int, float]] = field(default_factory=list)
    unreachable_zeroed: list[tuple[int, int, float]] = field(default_factory=list)

    @classmethod
    def from_solution(cls, sol: "R3Solution") -> "ReconfigState":
        derived = sol.instance.vt.derived
        return cls(
            r=np.ascontiguousarray(sol.r, dtype=float).copy(),
            p=np.ascontiguousarray(sol.p, dtype=float).copy(),
            active=set(range(1, derived.n_links + 1)),
            failed=[],
            vt=sol.instance.vt,
            demand=sol.instance.embedded_demand(),
        )

    def copy(self) -> "ReconfigState":
        return ReconfigState(
            r=self.r.copy(),
            p=self.p.copy(),
            active=set(self.active),
            failed=list(self.failed),
            vt=self.vt,
            demand=self.demand.copy(),
            dropped_flows=list(self.dropped_flows),
            unreachable_zeroed=list(self.unreachable_zeroed),
        )


def xi(p: np.ndarray, ell: int, eps_diag: float = EPS_DIAG) -> np.ndarray:
    """Redistribution weights for failing link ``ell``.

    Row ``ell`` of the protection matrix rescaled by 1/(1 - p_l(l)); the
    entry for ``ell`` itself is zero (its former share is what is being
    redistributed). When p_l(l) = 1 within ``eps_diag`` the link is
    unprotected and the weights are identically zero.
    """
    row = np.asarray(p, dtype=float)[ell - 1]
    diag = row[ell - 1]
    if diag >= 1.0 - eps_diag:
        return np.zeros_like(row)
    out = row / (1.0 - diag)
    out[ell - 1] = 0.0
    return out


def apply_failure(state: ReconfigState, ell: int) -> ReconfigState:
    """Fail derived link ``ell`` in place and return the state.

    Uses the pre-failure protection weights for both the base and
    protection updates, zeroes every entry referencing the failed link,
    and zeroes (with a log entry) flows whose destination is now
    unreachable.
    """
    if ell not in state.active:
        raise ValueError(f"link {ell} is not active")
    n = state.vt.derived.n
    N = state.vt.derived.n_links
    weights = xi(state.p, ell)
    protected = state.p[ell - 1, ell - 1] < 1.0 - EPS_DIAG

    if not protected:
        carried = state.demand * state.r[:, :, ell - 1]
        for a, b in zip(*np.nonzero(carried > 0)):
            state.dropped_flows.append(
                (int(a + 1), int(b + 1), ell, float(carried[a, b]))
            )

    K.redistribute_failed(state.r.reshape(n * n, N), weights, ell - 1)
    K.redistribute_failed(state.p, weights, ell - 1)
    state.p[ell - 1, :] = 0.0
    state.active.discard(ell)
    state.failed.append(ell)
    _zero_unreachable(state)
    return state


def apply_failures(state: ReconfigState, sequence: Iterable[int]) -> ReconfigState:
    """Sequential failures; ids must be distinct and initially active."""
    seq = [int(s) for s in sequence]
    if len(set(seq)) != len(seq):
        raise ValueError("failure sequence repeats a link id")
    missing = [s for s in seq if s not in state.active]
    if missing:
        raise ValueError(f"links not active: {missing}")
    for ell in seq:
        apply_failure(state, ell)
    return state


def link_loads(state: ReconfigState) -> tuple[np.ndarray, np.ndarray]:
    """(load, utilization) per derived link; failed links carry zero."""
    loads = np.einsum("ab,abl->l", state.demand, state.r)
    caps = np.array(state.vt.derived.capacities())
    utilization = np.zeros_like(loads)
    nonzero = caps > 0
    utilization[nonzero] = loads[nonzero] / caps[nonzero]
    utilization[~nonzero & (loads > 0)] = np.inf
    return loads, utilization


def _zero_unreachable(state: ReconfigState) -> None:
    derived = state.vt.derived
    adj: dict[int, list[int]] = {}
    for lk in derived.links:
        if lk.id in state.active:
            adj.setdefault(lk.src, []).append(lk.tgt)
    cache: dict[int, set[int]] = {}
    for a, b in zip(*np.nonzero(state.demand > 0)):
        a1, b1 = int(a + 1), int(b + 1)
        if not state.r[a, b].any():
            continue
        if a1 not in cache:
            seen = {a1}
            frontier = [a1]
            while frontier:
                v = frontier.pop()
                for w in adj.get(v, ()):  # noqa: B905
                    if w not in seen:
                        seen.add(w)
                        frontier.append(w)
            cache[a1] = seen
        if b1 not in cache[a1]:
            state.unreachable_zeroed.append(
                (a1, b1, float(state.demand[a, b]))
            )
            state.r[a, b, :] = 0.0
