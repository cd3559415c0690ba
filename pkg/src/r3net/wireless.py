"""Transmitter-group capacity rows as first-class objects.

A point-to-multipoint group shares one radio resource among several
same-source links, so the first-hop traffic the transmitter pushes onto
the group's links is jointly bounded by the group capacity. Rows are
expressed against the virtualized topology: group membership and demand
use original vertex/link ids, while the routing entries they touch use
the derived ids of the transmitter-side halves.

Rows bake the demand coefficients in (the constraint couples demand and
routing multiplicatively); regenerate them when the demand changes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .topology import VirtualizedTopology


@dataclass(frozen=True)
class GroupConstraintRow:
    """sum over terms of coefficient * r[pair, link] <= rhs."""

    vertex: int
    group_id: int
    terms: tuple[tuple[tuple[int, int], int, float], ...]
    rhs: float


def _check_demand(vt: VirtualizedTopology, d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    n = vt.base.n
    if d.shape != (n, n):
        raise ValueError(f"demand must be {n}x{n} on the original vertices")
    if np.any(np.diagonal(d) != 0):
        raise ValueError("demand diagonal must be zero")
    if np.any(d < 0):
        raise ValueError("demand must be nonnegative")
    return d


def build_wireless_rows(
    vt: VirtualizedTopology,
    d: np.ndarray,
    include_singletons: bool = False,
    all_pairs: bool = False,
) -> list[GroupConstraintRow]:
    """One row per transmitter group of the original topology.

    Singleton groups duplicate the plain link-capacity bound and are
    filtered unless ``include_singletons``. With ``all_pairs`` the row
    charges transit traffic relayed through the group against its
    capacity, not just demand originating at the transmitter.
    """
    d = _check_demand(vt, d)
    base = vt.base
    n = base.n
    rows: list[GroupConstraintRow] = []
    for grp in base.groups:
        if len(grp.members) <= 1 and not include_singletons:
            continue
        j = grp.vertex
        terms: list[tuple[tuple[int, int], int, float]] = []
        for member in sorted(grp.members):
            link = base.link(member)
            derived_id = vt.sigma[member - 1]
            if all_pairs:
                for a in range(1, n + 1):
                    for b in range(1, n + 1):
                        if d[a - 1, b - 1] > 0:
                            terms.append(((a, b), derived_id, float(d[a - 1, b - 1])))
            else:
                terms.append(
                    ((j, link.tgt), derived_id, float(d[j - 1, link.tgt - 1]))
                )
        rows.append(
            GroupConstraintRow(
                vertex=j, group_id=grp.group_id, terms=tuple(terms), rhs=grp.capacity
            )
        )
    return rows


def evaluate_group_loads(
    vt: VirtualizedTopology,
    d: np.ndarray,
    r: np.ndarray,
    include_singletons: bool = True,
    all_pairs: bool = False,
) -> list[dict]:
    """Per-group first-hop load, capacity, and utilization under routing ``r``.

    ``r`` is a routing on the derived topology, flat or shaped
    (n', n', N').
    """
    derived = vt.derived
    size = derived.n * derived.n * derived.n_links
    r = np.asarray(r, dtype=float).ravel()
    if r.size != size:
        raise ValueError(f"routing vector has size {r.size}, expected {size}")
    tensor = r.reshape(derived.n, derived.n, derived.n_links)
    out = []
    for row in build_wireless_rows(
        vt, d, include_singletons=include_singletons, all_pairs=all_pairs
    ):
        lhs = sum(
            coef * tensor[a - 1, b - 1, link - 1]
            for (a, b), link, coef in row.terms
        )
        out.append(
            {
                "vertex": row.vertex,
                "group_id": row.group_id,
                "lhs": float(lhs),
                "rhs": row.rhs,
                "utilization": float(lhs / row.rhs) if row.rhs > 0 else np.inf,
            }
        )
    return out


def export_wireless_rows(rows: list[GroupConstraintRow], path) -> None:
    """Audit CSV: one line per term."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vertex", "group", "origin", "destination", "link", "coefficient", "rhs"])
        for row in rows:
            for (a, b), link, coef in row.terms:
                writer.writerow([row.vertex, row.group_id, a, b, link, repr(coef), repr(row.rhs)])
