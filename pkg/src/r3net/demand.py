"""Traffic demand proportional to capacity-weighted vertex importance.

Vertex importance is the stationary distribution of a damped random walk
whose step probabilities are proportional to outgoing link capacities
(parallel links pool their capacity; vertices with no out-capacity
redistribute uniformly). Each vertex then emits total demand equal to
``scale`` times its outbound capacity, split across destinations
proportionally to their importance. The diagonal is zeroed and, by
default, each row renormalized so the row sum stays exactly
``scale * outbound capacity``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import Topology


class DemandError(RuntimeError):
    """Non-convergence or a degenerate importance distribution."""


@dataclass
class DemandModel:
    scale: float = 1e-2          # overall demand level, dimensionless
    damping: float = 0.85
    tol: float = 1e-12           # L1 fixed-point tolerance
    max_iter: int = 100_000

    def __post_init__(self) -> None:
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie strictly between 0 and 1")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


def transition_matrix(t: Topology) -> np.ndarray:
    """Row-stochastic capacity-weighted walk matrix."""
    n = t.n
    w = np.zeros((n, n))
    for lk in t.links:
        w[lk.src - 1, lk.tgt - 1] += lk.capacity
    sums = w.sum(axis=1)
    p = np.empty_like(w)
    for a in range(n):
        if sums[a] > 0:
            p[a] = w[a] / sums[a]
        else:
            p[a] = 1.0 / n
    return p


def pagerank(t: Topology, model: DemandModel | None = None) -> np.ndarray:
    """Stationary distribution of the damped capacity-weighted walk."""
    model = model or DemandModel()
    n = t.n
    p = transition_matrix(t)
    pr = np.full(n, 1.0 / n)
    teleport = (1.0 - model.damping) / n
    for _ in range(model.max_iter):
        nxt = model.damping * (p.T @ pr) + teleport
        if np.abs(nxt - pr).sum() < model.tol:
            total = nxt.sum()
            return nxt / total
        pr = nxt
    raise DemandError(f"importance iteration did not converge in {model.max_iter} steps")


def outbound_capacity(t: Topology) -> np.ndarray:
    out = np.zeros(t.n)
    for lk in t.links:
        out[lk.src - 1] += lk.capacity
    return out


def demand_from_importance(
    pr: np.ndarray,
    outcap: np.ndarray,
    scale: float,
    renormalize: bool = True,
) -> np.ndarray:
    """Demand rows from an importance vector and outbound capacities."""
    pr = np.asarray(pr, dtype=float).ravel()
    outcap = np.asarray(outcap, dtype=float).ravel()
    n = pr.size
    d = np.zeros((n, n))
    for a in range(n):
        if outcap[a] == 0:
            continue
        if renormalize:
            rest = 1.0 - pr[a]
            if rest <= 1e-15:
                raise DemandError(
                    f"vertex {a + 1} absorbs the whole walk; cannot renormalize"
                )
            row = scale * outcap[a] * pr / rest
        else:
            row = scale * outcap[a] * pr
        d[a] = row
        d[a, a] = 0.0
    return d


def build_demand(
    t: Topology,
    model: DemandModel | None = None,
    renormalize: bool = True,
) -> np.ndarray:
    """Demand matrix with zero diagonal and capacity-proportional rows.

    With ``renormalize`` (default) each row is rescaled by
    1/(1 - importance(origin)) so the row sum equals
    ``scale * outbound capacity`` exactly despite the zeroed diagonal;
    without it the destination shares are used as-is.
    """
    model = model or DemandModel()
    pr = pagerank(t, model)
    return demand_from_importance(pr, outbound_capacity(t), model.scale, renormalize)
