import numpy as np
import pytest

from r3net.topology import (
    Link,
    Topology,
    graph_sources,
    graph_targets,
    in_links,
    out_links,
    validate_topology,
    virtualize,
)

from .instances import fan3, mesh6, random_multigraph, star_parallel


def reachable(t, start):
    """Oracle BFS over link endpoints."""
    seen = {start}
    frontier = [start]
    while frontier:
        v = frontier.pop()
        for lk in t.links:
            if lk.src == v and lk.tgt not in seen:
                seen.add(lk.tgt)
                frontier.append(lk.tgt)
    return seen


def test_mesh6_is_valid():
    assert validate_topology(mesh6()) == []


def test_self_loop_reported():
    t = Topology(n=2, links=(Link(1, 1, 1, 1.0),))
    kinds = {v.kind for v in validate_topology(t)}
    assert "self-loop" in kinds


def test_uncovered_link_reported():
    t = Topology(n=2, links=(Link(1, 1, 2, 1.0),), groups=())
    kinds = {v.kind for v in validate_topology(t)}
    assert "uncovered link" in kinds


def test_adjacency_and_boundary_vertices():
    t = fan3()
    assert out_links(t, 1) == {1, 2}
    assert in_links(t, 2) == {1, 3}
    assert graph_sources(t) == {1}
    assert graph_targets(t) == {2}
    with pytest.raises(ValueError):
        out_links(t, 4)


def test_isolated_vertex_is_source_and_target():
    t = Topology.build(3, [(1, 2, 1.0)])
    assert 3 in graph_sources(t)
    assert 3 in graph_targets(t)


def test_mesh6_has_no_boundary_vertices():
    t = mesh6()
    # oracle: direct adjacency scan
    srcs = {j for j in range(1, 7) if not any(lk.tgt == j for lk in t.links)}
    tgts = {j for j in range(1, 7) if not any(lk.src == j for lk in t.links)}
    assert graph_sources(t) == srcs == set()
    assert graph_targets(t) == tgts == set()


def test_star_parallel_virtualization_permutation():
    vt = virtualize(star_parallel())
    assert vt.derived.n == 14
    assert vt.derived.n_links == 16
    assert vt.sigma_inv == (3, 4, 9, 10, 1, 2, 5, 6, 7, 8)
    assert vt.sigma == (5, 6, 1, 2, 7, 8, 9, 10, 3, 4)
    # transmitter halves inherit the hub groups
    derived_groups = {
        (g.vertex, g.group_id): g.members for g in vt.derived.groups if g.vertex == 1
    }
    assert derived_groups[(1, 1)] == {5, 1, 7}
    assert derived_groups[(1, 2)] == {6, 2, 9}
    assert derived_groups[(1, 3)] == {8, 10, 3}
    assert derived_groups[(1, 4)] == {4}


def test_no_parallel_links_gives_identity():
    t = mesh6()
    vt = virtualize(t)
    assert vt.sigma == tuple(range(1, 17))
    assert [(l.src, l.tgt, l.capacity) for l in vt.derived.links] == [
        (l.src, l.tgt, l.capacity) for l in t.links
    ]
    assert vt.derived.n == t.n


def test_split_halves_inherit_capacity():
    t = Topology.build(2, [(1, 2, 3.0), (1, 2, 7.0)])
    vt = virtualize(t)
    assert vt.derived.n_links == 4
    for orig in (1, 2):
        tx, rx = vt.half_map[orig]
        assert rx is not None
        cap = t.link(orig).capacity
        assert vt.derived.link(tx).capacity == cap
        assert vt.derived.link(rx).capacity == cap
    # receiver halves become singleton groups with the link capacity
    rx_groups = [g for g in vt.derived.groups if g.vertex > 2]
    assert {tuple(g.members) for g in rx_groups} == {
        (vt.half_map[1][1],),
        (vt.half_map[2][1],),
    }


def test_virtualize_is_idempotent_in_effect():
    vt = virtualize(star_parallel())
    again = virtualize(vt.derived)
    assert again.sigma == tuple(range(1, vt.derived.n_links + 1))
    assert [(l.src, l.tgt) for l in again.derived.links] == [
        (l.src, l.tgt) for l in vt.derived.links
    ]


def test_virtualization_properties_on_random_multigraphs():
    rng = np.random.default_rng(99)
    for _ in range(20):
        t = random_multigraph(rng, int(rng.integers(3, 7)), int(rng.integers(0, 6)), parallel=int(rng.integers(0, 3)))
        vt = virtualize(t)
        siblings = sum(
            1
            for lk in t.links
            if sum(1 for o in t.links if (o.src, o.tgt) == (lk.src, lk.tgt)) > 1
        )
        assert vt.derived.n_links == t.n_links + siblings
        # sigma and sigma_inv invert each other
        for l in range(1, t.n_links + 1):
            assert vt.sigma_inv[vt.sigma[l - 1] - 1] == l
        # capacity preserved through the transmitter half
        for lk in t.links:
            assert vt.derived.link(vt.sigma[lk.id - 1]).capacity == lk.capacity
        # no parallel links remain
        pairs = [(l.src, l.tgt) for l in vt.derived.links]
        assert len(set(pairs)) == len(pairs)
        # reachability among original vertices is preserved
        for v in range(1, t.n + 1):
            before = reachable(t, v) & set(range(1, t.n + 1))
            after = reachable(vt.derived, v) & set(range(1, t.n + 1))
            assert before == after
