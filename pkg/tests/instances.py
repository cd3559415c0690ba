"""Small networks reused across the suite.

Link ids follow the lexicographic (source, target) convention unless a
test deliberately scrambles them.
"""

import numpy as np

from r3net.topology import Topology


def fan3() -> Topology:
    """Three vertices, no 1->2->3 chain: 1->2, 1->3, 3->2."""
    return Topology.build(3, [(1, 2, 1.0), (1, 3, 1.0), (3, 2, 1.0)])


def triangle() -> Topology:
    """1->2, 1->3, 2->3 with unit capacities; direct route for (1,3) is link 2."""
    return Topology.build(3, [(1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)])


def mesh6() -> Topology:
    """Six-vertex mixed wired/wireless mesh: 16 links, four multi-member
    transmitter groups (two ground stations, a coastal relay, ship, plane,
    satellite caricature)."""
    edges = [
        (1, 2), (1, 3),
        (2, 1), (2, 3),
        (3, 1), (3, 2), (3, 5), (3, 6),
        (4, 5), (4, 6),
        (5, 3), (5, 4), (5, 6),
        (6, 3), (6, 4), (6, 5),
    ]
    groups = [
        (3, [7, 8], 1.0),
        (4, [9, 10], 1.0),
        (5, [11, 12, 13], 1.0),
        (6, [14, 15, 16], 1.0),
    ]
    return Topology.build(6, [(s, t, 1.0) for s, t in edges], groups)


def star_parallel() -> Topology:
    """Hub with three parallel families; ten links ordered counterclockwise.

    Transmitter groups at the hub: {1,3,5}, {2,4,7}, {6,8,9}, {10}.
    """
    edges = [
        (1, 2, 1.0),  # 1
        (1, 2, 1.0),  # 2
        (1, 3, 1.0),  # 3
        (1, 4, 1.0),  # 4
        (1, 5, 1.0),  # 5
        (1, 5, 1.0),  # 6
        (1, 6, 1.0),  # 7
        (1, 6, 1.0),  # 8
        (1, 7, 1.0),  # 9
        (1, 8, 1.0),  # 10
    ]
    groups = [
        (1, [1, 3, 5], 1.0),
        (1, [2, 4, 7], 1.0),
        (1, [6, 8, 9], 1.0),
        (1, [10], 1.0),
    ]
    return Topology.build(8, edges, groups)


def detour_square() -> Topology:
    """Regression network where failing link 1 reroutes traffic in a cycle.

    Links: 1:(1,2), 2:(1,4), 3:(2,3), 4:(3,2), 5:(4,3).
    """
    return Topology.build(
        4, [(1, 2, 2.0), (1, 4, 2.0), (2, 3, 2.0), (3, 2, 2.0), (4, 3, 2.0)]
    )


def two_cluster_bridge() -> Topology:
    """Complete 4-cluster and a 2-cluster joined by one asymmetric low-capacity
    bridge pair; the forward bridge is the designed bottleneck."""
    edges = []
    for a in range(1, 5):
        for b in range(1, 5):
            if a != b:
                edges.append((a, b, 3.0))
    edges.append((4, 5, 0.05))   # forward bridge
    edges.append((5, 4, 0.15))   # return bridge
    edges.append((5, 6, 1.0))
    edges.append((6, 5, 1.0))
    return Topology.build(6, edges)


def random_multigraph(rng: np.random.Generator, n: int, extra: int, parallel: int = 0) -> Topology:
    """Strongly connected random multigraph: a spanning cycle plus ``extra``
    random links and ``parallel`` duplicated links."""
    edges = [(i, i % n + 1, float(rng.integers(1, 4))) for i in range(1, n + 1)]
    for _ in range(extra):
        a = int(rng.integers(1, n + 1))
        b = int(rng.integers(1, n + 1))
        while b == a:
            b = int(rng.integers(1, n + 1))
        edges.append((a, b, float(rng.integers(1, 4))))
    for _ in range(parallel):
        a, b, _ = edges[int(rng.integers(0, len(edges)))]
        edges.append((a, b, float(rng.integers(1, 4))))
    edges.sort(key=lambda e: (e[0], e[1]))
    return Topology.build(n, edges)
