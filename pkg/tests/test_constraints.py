import numpy as np
import pytest

from r3net.constraints import (
    RoutingIndexer,
    _emit_rows,
    build_protection_system,
    build_routing_system,
    check_routing,
    dump_routing_system,
)
from r3net.topology import Topology

from .instances import fan3, mesh6, star_parallel, triangle


def pair_subsystem(rs, pairs):
    """Dense rows/rhs/columns of the system restricted to the given pairs."""
    ix = rs.indexer
    rows = [i for i, lab in enumerate(rs.row_labels) if (lab[1], lab[2]) in pairs]
    cols = []
    for a, b in pairs:
        cols.extend(range(ix.pair_slice(a, b).start, ix.pair_slice(a, b).stop))
    dense = rs.R.toarray()[np.ix_(rows, cols)]
    return dense, rs.rho[rows], cols


def test_fan3_forces_spurious_unit_values():
    rs = build_routing_system(fan3(), mode="full")
    ix = rs.indexer
    # in-flow totality at a vertex nothing points to cannot be satisfied;
    # those rows are reported and removed
    assert ("in_totality", 2, 1) in rs.infeasible_rows
    assert ("in_totality", 3, 1) in rs.infeasible_rows

    for pair, forced_link in (((2, 3), 2), ((3, 1), 3)):
        dense, rhs, cols = pair_subsystem(rs, {pair})
        assert np.linalg.matrix_rank(dense) == len(cols)  # unique solution
        expected = np.zeros(len(cols))
        expected[forced_link - 1] = 1.0
        assert np.array_equal(dense @ expected, rhs)  # integer-exact


def test_single_link_system_pins_everything():
    t = Topology.build(2, [(1, 2, 1.0)])
    rs = build_routing_system(t)
    dense = rs.R.toarray()
    assert np.linalg.matrix_rank(dense) == rs.indexer.size
    x = np.zeros(rs.indexer.size)
    x[rs.indexer.column(1, 2, 1)] = 1.0
    assert np.array_equal(dense @ x, rs.rho)


def test_row_count_bound_on_mesh6():
    t = mesh6()
    rs = build_routing_system(t)
    n, N = 6, 16
    bound = n * N + n * (n - 1) * (n - 2) + 2 * n * (n - 1) + 2 * (n - 1) * N
    assert bound == 436
    assert rs.n_rows <= bound
    assert len(rs.infeasible_rows) == 0  # strongly connected: nothing dropped


def test_entries_are_signs_and_rows_stay_in_one_pair():
    rs = build_routing_system(mesh6())
    assert set(np.unique(rs.R.data)) <= {-1.0, 1.0}
    ix = rs.indexer
    csr = rs.R
    for i in range(rs.n_rows):
        cols = csr.indices[csr.indptr[i] : csr.indptr[i + 1]]
        pairs = {ix.label(int(c))[:2] for c in cols}
        assert len(pairs) == 1


def test_no_duplicate_rows_after_normalization():
    rs = build_routing_system(mesh6())
    seen = set()
    csr = rs.R
    for i in range(rs.n_rows):
        cols = tuple(csr.indices[csr.indptr[i] : csr.indptr[i + 1]].tolist())
        vals = csr.data[csr.indptr[i] : csr.indptr[i + 1]]
        vals = tuple((vals / vals[0]).tolist())
        key = (cols, vals, rs.rho[i] / csr.data[csr.indptr[i]])
        assert key not in seen
        seen.add(key)


def test_pruning_preserves_solution_set():
    for t in (fan3(), triangle()):
        rs = build_routing_system(t)
        raw_rows = []
        raw_rhs = []
        for cols, vals, rhs, label in _emit_rows(t, "full"):
            if not cols:
                continue  # structurally impossible rows excluded from both sides
            row = np.zeros(rs.indexer.size)
            row[cols] = vals
            raw_rows.append(row)
            raw_rhs.append(rhs)
        full = np.array(raw_rows)
        pruned = rs.R.toarray()
        assert np.linalg.matrix_rank(full) == np.linalg.matrix_rank(pruned)
        aug_full = np.column_stack([full, raw_rhs])
        aug_pruned = np.column_stack([pruned, rs.rho])
        assert np.linalg.matrix_rank(aug_full) == np.linalg.matrix_rank(aug_pruned)


def test_relaxed_mode_drops_two_kinds():
    t = mesh6()
    full = build_routing_system(t, "full")
    relaxed = build_routing_system(t, "relaxed")
    kinds_full = {lab[0] for lab in full.row_labels}
    kinds_relaxed = {lab[0] for lab in relaxed.row_labels}
    assert "in_totality" in kinds_full and "no_extension" in kinds_full
    assert "in_totality" not in kinds_relaxed
    assert "no_extension" not in kinds_relaxed
    assert relaxed.n_rows < full.n_rows


def test_protection_single_link():
    t = Topology.build(2, [(1, 2, 1.0)])
    rs = build_routing_system(t)
    ps = build_protection_system(rs, t)
    assert ps.P.shape == (rs.n_rows, 1)
    dense = ps.P.toarray().ravel()
    sol = np.linalg.lstsq(dense.reshape(-1, 1), ps.rhs, rcond=None)[0]
    assert sol[0] == pytest.approx(1.0, abs=1e-12)


def test_protection_block_reuses_pair_columns():
    t = fan3()
    rs = build_routing_system(t)
    ps = build_protection_system(rs, t)
    N = t.n_links
    assert ps.P.shape == (rs.n_rows, N * N)
    assert ps.sigma_mask.max() <= 1
    dense = ps.P.toarray()
    block1 = dense[:, 0:N]  # detour flows for link 1, pair (1,2)
    rows = {tuple(row) for row in block1[np.abs(block1).sum(axis=1) > 0]}
    assert (1.0, 1.0, 0.0) in rows       # p_12(1) + p_12(2) = 1
    assert (0.0, -1.0, 1.0) in rows or (0.0, 1.0, -1.0) in rows  # conservation at 3
    # rows whose pair is not a link pair have zero rhs
    for i, lab in enumerate(rs.row_labels):
        if (lab[1], lab[2]) not in {(l.src, l.tgt) for l in t.links}:
            assert ps.rhs[i] == 0.0


def test_protection_rejects_parallel_links():
    t = star_parallel()
    rs = build_routing_system(t)
    with pytest.raises(ValueError, match="virtualize"):
        build_protection_system(rs, t)


def test_check_routing_on_zero_tensor():
    t = fan3()
    r = np.zeros(RoutingIndexer(3, 3).size)
    violations = check_routing(t, r)
    kinds = {lab[0] for lab, _ in violations}
    assert "out_totality" in kinds
    with pytest.raises(ValueError):
        check_routing(t, np.zeros(5))


def test_shortest_path_routing_satisfies_core_constraints():
    rng = np.random.default_rng(4)
    for _ in range(10):
        n = int(rng.integers(3, 7))
        # random DAG: edges only forward through a random permutation
        perm = rng.permutation(n) + 1
        edges = []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.5:
                    edges.append((int(perm[i]), int(perm[j]), 1.0))
        if not edges:
            continue
        edges.sort(key=lambda e: (e[0], e[1]))
        t = Topology.build(n, edges)
        ix = RoutingIndexer(n, len(edges))
        r = np.zeros(ix.size)
        hops = {}
        for lk in t.links:
            hops.setdefault(lk.src, []).append(lk)
        reach_path = {}
        for a in range(1, n + 1):
            # BFS tree of first-found shortest paths
            frontier = [(a, [])]
            seen = {a}
            while frontier:
                v, trail = frontier.pop(0)
                for lk in hops.get(v, []):
                    if lk.tgt in seen:
                        continue
                    seen.add(lk.tgt)
                    reach_path[(a, lk.tgt)] = trail + [lk.id]
                    frontier.append((lk.tgt, trail + [lk.id]))
        for (a, b), path in reach_path.items():
            for lid in path:
                r[ix.column(a, b, lid)] = 1.0
        violations = check_routing(t, r, mode="full")
        for lab, _ in violations:
            assert lab[0] not in {"self", "conservation", "no_return", "no_extension"}
            if lab[0] == "out_totality":
                assert (lab[1], lab[2]) not in reach_path  # only unreachable pairs


def test_indexer_bijection():
    ix = RoutingIndexer(3, 4)
    seen = set()
    for a in range(1, 4):
        for b in range(1, 4):
            for l in range(1, 5):
                col = ix.column(a, b, l)
                assert ix.vec_index(a, b, l) == col + 1
                assert ix.label(col) == (a, b, l)
                seen.add(col)
    assert seen == set(range(ix.size))


def test_dump_routing_system(tmp_path):
    rs = build_routing_system(fan3())
    path = tmp_path / "system.csv"
    dump_routing_system(rs, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("row,col,value")
    assert len(lines) - 1 == rs.R.nnz
