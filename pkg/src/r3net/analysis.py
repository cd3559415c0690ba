"""Independent checks of a solved instance.

Everything here deliberately avoids the optimization path it audits: the
worst-case virtual load is recomputed greedily (and optionally
cross-checked by an LP solve), failure scenarios are replayed through the
online reconfiguration machinery, and post-failure flow pathologies are
found by plain graph search.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations, islice, permutations, product
from math import comb
from typing import TYPE_CHECKING, Iterable

import networkx as nx
import numpy as np

from .lp import LinearProgram, solve_lp
from .reconfig import EPS_DIAG, ReconfigState, apply_failures, link_loads
from .topology import Topology

if TYPE_CHECKING:  # pragma: no cover
    from .r3core import R3Instance, R3Solution

logger = logging.getLogger(__name__)


def max_virtual_load(
    p: np.ndarray,
    c: np.ndarray,
    F: float,
    ell: int,
    carve_out: bool = False,
    cross_check: bool = True,
) -> float:
    """Worst load link ``ell`` can inherit from failures within budget ``F``.

    Maximizes sum_l z_l p_l(ell) over virtual loads 0 <= z <= c with
    sum_l z_l / c_l <= F. In normalized variables this is a unit-weight
    fractional knapsack, so taking the floor(F) largest coefficients plus
    a fractional remainder is exact; ``cross_check`` verifies the greedy
    value against an LP solve. With ``carve_out``, links whose protection
    routing is stuck on themselves are excluded (they carry no foreign
    demand and cannot be protected).
    """
    p = np.asarray(p, dtype=float)
    c = np.asarray(c, dtype=float).ravel()
    if np.any(c <= 0):
        raise ValueError("capacities must be positive")
    if F < 0:
        raise ValueError("failure budget must be nonnegative")
    chi = c * p[:, ell - 1]
    if carve_out:
        chi = chi.copy()
        chi[np.diagonal(p) >= 1.0 - EPS_DIAG] = 0.0
    order = np.sort(chi)[::-1]
    whole = min(int(np.floor(F)), order.size)
    value = float(order[:whole].sum())
    frac = F - np.floor(F)
    if frac > 0 and whole < order.size:
        value += float(frac * order[whole])
    if cross_check:
        lp = LinearProgram(
            objective=-chi,
            A_le=np.ones((1, chi.size)),
            b_le=[float(F)],
            upper=np.ones(chi.size),
        )
        sol = solve_lp(lp)
        lp_value = -sol.objective_value
        if abs(lp_value - value) > 1e-8 * (1.0 + abs(value)):
            raise RuntimeError(
                f"greedy/LP max-load mismatch: {value} vs {lp_value}"
            )
    return value


@dataclass
class MaxLoadRow:
    link: int
    greedy: float
    lp_value: float
    dual_value: float
    carved: bool


@dataclass
class MaxLoadReport:
    rows: list[MaxLoadRow]

    def worst_gap(self) -> float:
        return max(abs(r.greedy - r.lp_value) for r in self.rows)


def max_load_report(sol: "R3Solution", F: float | None = None) -> MaxLoadReport:
    """Greedy vs LP vs dual-objective view of the virtual load, per link."""
    inst = sol.instance
    F = inst.F if F is None else F
    c = np.array(inst.vt.derived.capacities())
    rows = []
    for ell in range(1, inst.vt.derived.n_links + 1):
        greedy = max_virtual_load(sol.p, c, F, ell, cross_check=False)
        lp_val = _maxload_lp(sol.p, c, F, ell)
        dual = float(sol.pi[ell - 1].sum() + sol.lam[ell - 1] * F)
        rows.append(
            MaxLoadRow(
                link=ell,
                greedy=greedy,
                lp_value=lp_val,
                dual_value=dual,
                carved=bool(sol.p[ell - 1, ell - 1] >= 1.0 - EPS_DIAG),
            )
        )
    return MaxLoadReport(rows)


def _maxload_lp(p, c, F, ell) -> float:
    chi = np.asarray(c, dtype=float) * np.asarray(p, dtype=float)[:, ell - 1]
    sol = solve_lp(
        LinearProgram(
            objective=-chi,
            A_le=np.ones((1, chi.size)),
            b_le=[float(F)],
            upper=np.ones(chi.size),
        )
    )
    return -sol.objective_value


@dataclass
class GapRecord:
    link: int
    dual_value: float
    oracle_value: float
    gap: float
    binding: bool


def duality_audit(
    sol: "R3Solution",
    vt=None,
    F: float | None = None,
    binding_tol: float = 1e-6,
) -> list[GapRecord]:
    """Per-link slack between the dual bound carried by the solution and
    the independent worst-case virtual load.

    Weak duality makes every gap >= 0 up to roundoff; on links whose
    capacity row is binding at the optimum the gap closes to zero.
    """
    inst = sol.instance
    vt = inst.vt if vt is None else vt
    F = inst.F if F is None else F
    c = np.array(vt.derived.capacities())
    loads = sol.link_loads()
    records = []
    for ell in range(1, vt.derived.n_links + 1):
        dual = float(sol.pi[ell - 1].sum() + sol.lam[ell - 1] * F)
        oracle = max_virtual_load(sol.p, c, F, ell, carve_out=False, cross_check=False)
        row_slack = c[ell - 1] * sol.mu - loads[ell - 1] - dual
        records.append(
            GapRecord(
                link=ell,
                dual_value=dual,
                oracle_value=oracle,
                gap=float(dual - oracle),
                binding=bool(abs(row_slack) <= binding_tol * (1.0 + c[ell - 1])),
            )
        )
    return records


@dataclass
class VerificationReport:
    scenarios_checked: int
    exhaustive_up_to: int
    active_links: int
    worst_utilization: dict[int, float]
    violations: list[dict]
    order_invariance_ok: bool
    order_checks: int
    excused: list[dict]

    @property
    def ok(self) -> bool:
        return not self.violations and self.order_invariance_ok

    def expected_exhaustive_count(self) -> int:
        return sum(comb(self.active_links, k) for k in range(self.exhaustive_up_to + 1))


def verify_congestion_free(
    sol: "R3Solution",
    inst: "R3Instance | None" = None,
    exhaustive_up_to: int | None = None,
    sampled: int = 0,
    seed: int = 0,
    tol: float = 1e-6,
    order_invariance_tol: float = 1e-9,
) -> VerificationReport:
    """Replay failure scenarios and check no surviving link is overloaded.

    Scenarios enumerate subsets of *original* links up to
    ``exhaustive_up_to`` (both halves of a split link fail together),
    plus ``sampled`` random larger scenarios. Links carved out at solve
    time are excused from the utilization check, as are demands a
    scenario disconnects (their flow was zeroed and logged). Every subset
    of size <= 3 is replayed under all orderings and the final routings
    compared.
    """
    inst = sol.instance if inst is None else inst
    exhaustive_up_to = inst.F if exhaustive_up_to is None else exhaustive_up_to
    base_ids = [lk.id for lk in inst.vt.base.links]
    excused_links = set(sol.ignored_links)

    worst: dict[int, float] = {}
    violations: list[dict] = []
    excused: list[dict] = []
    scenarios = 0
    order_ok = True
    order_checks = 0

    def run(order: tuple[int, ...]) -> ReconfigState:
        state = ReconfigState.from_solution(sol)
        derived_seq = []
        for orig in order:
            derived_seq.extend(inst.vt.derived_ids(orig))
        apply_failures(state, derived_seq)
        return state

    def check(scenario: tuple[int, ...], state: ReconfigState, is_sampled: bool) -> None:
        nonlocal worst
        _, utils = link_loads(state)
        k = len(scenario)
        scen_worst = 0.0
        for ell in sorted(state.active):
            if ell in excused_links:
                continue
            u = float(utils[ell - 1])
            scen_worst = max(scen_worst, u)
            if u > 1.0 + tol:
                violations.append(
                    {
                        "scenario": list(scenario),
                        "link": ell,
                        "utilization": u,
                        "sampled": is_sampled,
                    }
                )
        worst[k] = max(worst.get(k, 0.0), scen_worst)
        if state.unreachable_zeroed:
            excused.append(
                {
                    "scenario": list(scenario),
                    "demand_pairs": sorted({(a, b) for a, b, _ in state.unreachable_zeroed}),
                }
            )

    for k in range(exhaustive_up_to + 1):
        for scenario in combinations(base_ids, k):
            state = run(scenario)
            check(scenario, state, is_sampled=False)
            scenarios += 1
            if 2 <= k <= 3:
                reference = state.r
                for perm in permutations(scenario):
                    if perm == scenario:
                        continue
                    other = run(perm)
                    order_checks += 1
                    if np.max(np.abs(other.r - reference)) > order_invariance_tol:
                        order_ok = False

    if sampled > 0:
        rng = np.random.default_rng(seed)
        hi = max(int(inst.F), exhaustive_up_to + 1)
        hi = min(hi, len(base_ids))
        for _ in range(sampled):
            if hi <= exhaustive_up_to:
                break
            k = int(rng.integers(exhaustive_up_to + 1, hi + 1))
            scenario = tuple(
                sorted(rng.choice(base_ids, size=k, replace=False).tolist())
            )
            order = tuple(rng.permutation(scenario).tolist())
            check(order, run(order), is_sampled=True)
            scenarios += 1

    return VerificationReport(
        scenarios_checked=scenarios,
        exhaustive_up_to=exhaustive_up_to,
        active_links=len(base_ids),
        worst_utilization=worst,
        violations=violations,
        order_invariance_ok=order_ok,
        order_checks=order_checks,
        excused=excused,
    )


@dataclass
class CycleScan:
    cycles: list[tuple[tuple[int, ...], float]]
    truncated: bool


def _support_graph(tensor_ab: np.ndarray, t: Topology, tol: float) -> nx.MultiDiGraph:
    g = nx.MultiDiGraph()
    g.add_nodes_from(range(1, t.n + 1))
    for lk in t.links:
        if tensor_ab[lk.id - 1] > tol:
            g.add_edge(lk.src, lk.tgt, key=lk.id)
    return g


def _conservation_residual(tensor_ab: np.ndarray, t: Topology, a: int, b: int) -> float:
    worst = 0.0
    for j in range(1, t.n + 1):
        if j in (a, b):
            continue
        outs = sum(tensor_ab[lk.id - 1] for lk in t.links if lk.src == j)
        ins = sum(tensor_ab[lk.id - 1] for lk in t.links if lk.tgt == j)
        if any(lk.src == j for lk in t.links) and any(lk.tgt == j for lk in t.links):
            worst = max(worst, abs(outs - ins))
    return worst


def detect_cycles(
    r: np.ndarray,
    pair: tuple[int, int],
    t: Topology,
    tol: float = 1e-9,
    cap: int = 10_000,
) -> CycleScan:
    """Elementary cycles carrying positive flow for one commodity.

    Each cycle is reported as a link-id tuple with the smallest flow
    around it. Enumeration is capped (flag set when truncated).
    """
    a, b = pair
    tensor = np.asarray(r, dtype=float).reshape(t.n, t.n, t.n_links)[a - 1, b - 1]
    residual = _conservation_residual(tensor, t, a, b)
    if residual > 1e-7 * (1.0 + tensor.max(initial=0.0)):
        raise ValueError(
            f"flow for pair {pair} violates conservation (residual {residual:.3e})"
        )
    g = _support_graph(tensor, t, tol)
    cycles: list[tuple[tuple[int, ...], float]] = []
    truncated = False
    for node_cycle in islice(nx.simple_cycles(g), cap):
        m = len(node_cycle)
        choices = []
        for i in range(m):
            u = node_cycle[i]
            v = node_cycle[(i + 1) % m]
            choices.append([key for key in g[u][v]])
        for combo in product(*choices):
            if len(cycles) >= cap:
                truncated = True
                break
            flow = min(tensor[lid - 1] for lid in combo)
            cycles.append((tuple(combo), float(flow)))
        if truncated:
            break
    return CycleScan(cycles=cycles, truncated=truncated)


def remove_cycles(
    r: np.ndarray,
    t: Topology,
    pairs: Iterable[tuple[int, int]] | None = None,
    tol: float = 1e-9,
) -> np.ndarray:
    """Cancel circulating flow until every commodity's support is acyclic.

    Subtracting a cycle's minimum flow around the cycle leaves
    conservation and net origin->destination throughput untouched and
    never increases any link load.
    """
    out = np.asarray(r, dtype=float).reshape(t.n, t.n, t.n_links).copy()
    if pairs is None:
        pairs = [
            (a + 1, b + 1)
            for a in range(t.n)
            for b in range(t.n)
            if a != b and out[a, b].any()
        ]
    for a, b in pairs:
        tensor = out[a - 1, b - 1]
        while True:
            g = _support_graph(tensor, t, tol)
            try:
                edge_cycle = nx.find_cycle(g, orientation="original")
            except nx.NetworkXNoCycle:
                break
            links = [key for _, _, key, _ in edge_cycle]
            flow = min(tensor[lid - 1] for lid in links)
            for lid in links:
                tensor[lid - 1] = max(tensor[lid - 1] - flow, 0.0)
    return out
