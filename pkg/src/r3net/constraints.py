"""Flow-routing constraint systems in explicit sparse matrix form.

A routing tensor r has one entry per (origin a, destination b, link l).
The equality system R r = rho encodes, in emission order:

  self          r_aa(l) = 0 for every origin and link
  conservation  out-flow = in-flow at interior vertices (positive in- and
                out-degree, distinct from the origin/destination)
  out_totality  unit out-flow at the origin (origin has out-links)
  in_totality   unit in-flow at the destination (full mode only)
  no_return     no flow on links pointing back into the origin
  no_extension  no flow on links leaving the destination (full mode only)

Rows are sign-normalized (first nonzero becomes +1) and pruned of exact
duplicates in encounter order. A row whose support is empty but whose
right-hand side is nonzero (for example unit in-flow demanded at a vertex
nothing points to) can never be satisfied; such rows are removed from the
solvable system, reported on the result, and logged.

The protection system P p = rho * sigma_mask reuses the columns of R: the
block for link l is the columns of the origin/destination pair
(src(l), tgt(l)), so p stacks one routing problem per link. This requires
source/target pairs to be unique, i.e. a parallel-link-free topology.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
import scipy.sparse as sp

from .topology import Topology, graph_targets, _adjacency

logger = logging.getLogger(__name__)

Mode = Literal["full", "relaxed"]

RowLabel = tuple  # (kind, *indices), 1-based indices


@dataclass(frozen=True)
class RoutingIndexer:
    """Bijective layout of (a, b, l) onto flat vector positions."""

    n: int
    N: int

    @property
    def size(self) -> int:
        return self.n * self.n * self.N

    def vec_index(self, a: int, b: int, l: int) -> int:
        """1-based flat index of (a, b, l)."""
        return ((a - 1) * self.n + (b - 1)) * self.N + l

    def column(self, a: int, b: int, l: int) -> int:
        """0-based column of (a, b, l)."""
        return self.vec_index(a, b, l) - 1

    def label(self, column: int) -> tuple[int, int, int]:
        """Inverse of :meth:`column`."""
        l = column % self.N
        rest = column // self.N
        return rest // self.n + 1, rest % self.n + 1, l + 1

    def pair_slice(self, a: int, b: int) -> slice:
        start = ((a - 1) * self.n + (b - 1)) * self.N
        return slice(start, start + self.N)


@dataclass
class RoutingSystem:
    R: sp.csr_matrix
    rho: np.ndarray
    row_labels: tuple[RowLabel, ...]
    indexer: RoutingIndexer
    mode: Mode
    infeasible_rows: tuple[RowLabel, ...]

    @property
    def n_rows(self) -> int:
        return self.R.shape[0]


@dataclass
class ProtectionSystem:
    P: sp.csr_matrix
    rhs: np.ndarray
    sigma_mask: np.ndarray
    ind_P: tuple[tuple[int, int, int], ...]
    row_labels: tuple[RowLabel, ...]


def _emit_rows(t: Topology, mode: Mode):
    """Yield (columns, coefficients, rhs, label) in specification order."""
    n, N = t.n, t.n_links
    ix = RoutingIndexer(n, N)
    outs, ins = _adjacency(t)
    targets = graph_targets(t)

    for a in range(1, n + 1):
        for l in range(1, N + 1):
            yield [ix.column(a, a, l)], [1.0], 0.0, ("self", a, l)

    for a in range(1, n + 1):
        for b in range(1, n + 1):
            if a == b:
                continue
            for j in range(1, n + 1):
                if j in (a, b) or not outs[j - 1] or not ins[j - 1]:
                    continue
                cols = [ix.column(a, b, l) for l in outs[j - 1]]
                vals = [1.0] * len(outs[j - 1])
                cols += [ix.column(a, b, l) for l in ins[j - 1]]
                vals += [-1.0] * len(ins[j - 1])
                yield cols, vals, 0.0, ("conservation", a, b, j)

    for a in range(1, n + 1):
        if a in targets:
            continue
        for b in range(1, n + 1):
            if a == b:
                continue
            cols = [ix.column(a, b, l) for l in outs[a - 1]]
            yield cols, [1.0] * len(cols), 1.0, ("out_totality", a, b)

    if mode == "full":
        for a in range(1, n + 1):
            for b in range(1, n + 1):
                if a == b or b in targets:
                    continue
                cols = [ix.column(a, b, l) for l in ins[b - 1]]
                yield cols, [1.0] * len(cols), 1.0, ("in_totality", a, b)

    for lk in t.links:
        a = lk.tgt
        for b in range(1, n + 1):
            if b == a:
                continue
            yield [ix.column(a, b, lk.id)], [1.0], 0.0, ("no_return", a, b, lk.id)

    if mode == "full":
        for lk in t.links:
            b = lk.src
            for a in range(1, n + 1):
                if a == b:
                    continue
                yield [ix.column(a, b, lk.id)], [1.0], 0.0, ("no_extension", a, b, lk.id)


def build_routing_system(t: Topology, mode: Mode = "full") -> RoutingSystem:
    """Assemble R r = rho for ``t``; parallel links are allowed here."""
    if mode not in ("full", "relaxed"):
        raise ValueError(f"unknown mode {mode!r}")
    ix = RoutingIndexer(t.n, t.n_links)
    seen: set[tuple] = set()
    data, indices, indptr = [], [], [0]
    rho: list[float] = []
    labels: list[RowLabel] = []
    dropped: list[RowLabel] = []
    for cols, vals, rhs, label in _emit_rows(t, mode):
        order = np.argsort(cols, kind="stable")
        cols_arr = np.asarray(cols)[order]
        vals_arr = np.asarray(vals)[order]
        if cols_arr.size == 0:
            if rhs != 0.0:
                dropped.append(label)
            continue
        lead = vals_arr[0]
        norm_vals = vals_arr / lead
        norm_rhs = rhs / lead
        key = (tuple(cols_arr.tolist()), tuple(norm_vals.tolist()), norm_rhs)
        if key in seen:
            continue
        seen.add(key)
        indices.extend(cols_arr.tolist())
        data.extend(vals_arr.tolist())
        indptr.append(len(indices))
        rho.append(rhs)
        labels.append(label)
    if dropped:
        logger.warning(
            "%d structurally unsatisfiable rows dropped (first: %s)",
            len(dropped),
            dropped[0],
        )
    R = sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(rho), ix.size),
    )
    return RoutingSystem(
        R=R,
        rho=np.asarray(rho),
        row_labels=tuple(labels),
        indexer=ix,
        mode=mode,
        infeasible_rows=tuple(dropped),
    )


def build_protection_system(rs: RoutingSystem, t: Topology) -> ProtectionSystem:
    """Stack per-link routing blocks out of R's columns.

    For each link l in id order the columns of R labeled with the pair
    (src(l), tgt(l)) become the block constraining the detours of l. The
    mask counts, per row, how many blocks touch it; the right-hand side is
    rho multiplied by that mask.
    """
    pairs = [(lk.src, lk.tgt) for lk in t.links]
    if len(set(pairs)) != len(pairs):
        raise ValueError(
            "protection routing is ill-defined with parallel links; "
            "virtualize the topology first"
        )
    ix = rs.indexer
    if (t.n, t.n_links) != (ix.n, ix.N):
        raise ValueError("routing system was built for a different topology")
    R_csc = rs.R.tocsc()
    blocks = []
    mask = np.zeros(rs.n_rows, dtype=np.int64)
    ind_p: list[tuple[int, int, int]] = []
    for lk in t.links:
        block = R_csc[:, ix.pair_slice(lk.src, lk.tgt)]
        blocks.append(block)
        touched = np.asarray((block != 0).sum(axis=1)).ravel() > 0
        mask += touched
        ind_p.extend((lk.src, lk.tgt, lp) for lp in range(1, ix.N + 1))
    P = sp.hstack(blocks, format="csr") if blocks else sp.csr_matrix((rs.n_rows, 0))
    return ProtectionSystem(
        P=P,
        rhs=rs.rho * mask,
        sigma_mask=mask,
        ind_P=tuple(ind_p),
        row_labels=rs.row_labels,
    )


def check_routing(
    t: Topology,
    r: np.ndarray,
    mode: Mode = "full",
    tol: float = 1e-8,
) -> list[tuple[RowLabel, float]]:
    """Residuals of every violated scalar routing constraint.

    Empty result means ``r`` satisfies the (pruned) system for ``mode``.
    """
    rs = build_routing_system(t, mode)
    r = np.asarray(r, dtype=float).ravel()
    if r.size != rs.indexer.size:
        raise ValueError(
            f"routing vector has size {r.size}, expected {rs.indexer.size}"
        )
    residual = rs.R @ r - rs.rho
    bad = np.nonzero(np.abs(residual) > tol)[0]
    return [(rs.row_labels[i], float(residual[i])) for i in bad]


def dump_routing_system(rs: RoutingSystem, path) -> None:
    """Sparse triplet CSV (row, col, value, row_kind, a, b, l) for inspection."""
    coo = rs.R.tocoo()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value", "rhs", "row_label", "col_a", "col_b", "col_l"])
        for i, j, v in zip(coo.row, coo.col, coo.data):
            a, b, l = rs.indexer.label(int(j))
            writer.writerow(
                [int(i), int(j), repr(float(v)), repr(float(rs.rho[i])), "|".join(map(str, rs.row_labels[i])), a, b, l]
            )
