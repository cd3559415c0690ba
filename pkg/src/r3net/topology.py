"""Capacitated directed multigraph model with P2MP transmitter groups.

Link and vertex ids are 1-based throughout. A topology is immutable once
constructed and safe to share across threads.

Virtualization removes parallel links by splitting every member of a
parallel family into two halves joined at a fresh virtual vertex, which
makes source/target pairs unique so that a per-link protection routing is
well defined. The transmitter-side halves of the derived topology always
occupy link ids 1..N (virtual vertices are numbered after the real ones,
so receiver-side halves sort last), hence the recorded ``sigma`` is a
permutation of the original link ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Link:
    """Directed capacitated edge; ``id`` is its 1-based position."""

    id: int
    src: int
    tgt: int
    capacity: float


@dataclass(frozen=True)
class P2MPGroup:
    """Set of same-source links sharing one transmitter resource.

    A singleton group is an ordinary dedicated point-to-point link.
    """

    vertex: int
    group_id: int
    members: frozenset[int]
    capacity: float


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


@dataclass(frozen=True)
class Topology:
    """Directed multigraph with ``n`` vertices and links ordered by id."""

    n: int
    links: tuple[Link, ...]
    groups: tuple[P2MPGroup, ...] = ()
    names: tuple[str, ...] = field(default=(), compare=False)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def link(self, link_id: int) -> Link:
        if not 1 <= link_id <= len(self.links):
            raise ValueError(f"link id {link_id} out of range 1..{len(self.links)}")
        return self.links[link_id - 1]

    def capacities(self) -> tuple[float, ...]:
        return tuple(lk.capacity for lk in self.links)

    def vertex_name(self, j: int) -> str:
        if self.names and 1 <= j <= len(self.names):
            return self.names[j - 1]
        return f"v{j}"

    @classmethod
    def build(
        cls,
        n: int,
        edges: Iterable[tuple[int, int, float]],
        groups: Iterable[tuple[int, Sequence[int], float]] = (),
        names: Sequence[str] = (),
    ) -> "Topology":
        """Assemble a topology, completing singleton groups for any
        out-link not covered by an explicit group."""
        links = tuple(
            Link(i + 1, s, t, float(c)) for i, (s, t, c) in enumerate(edges)
        )
        explicit: list[tuple[int, frozenset[int], float]] = [
            (int(v), frozenset(int(m) for m in members), float(cap))
            for v, members, cap in groups
        ]
        covered = set()
        for _, members, _ in explicit:
            covered |= members
        per_vertex: dict[int, list[tuple[frozenset[int], float]]] = {}
        for v, members, cap in explicit:
            per_vertex.setdefault(v, []).append((members, cap))
        for lk in links:
            if lk.id not in covered:
                per_vertex.setdefault(lk.src, []).append(
                    (frozenset({lk.id}), lk.capacity)
                )
        built = []
        for v in sorted(per_vertex):
            for g, (members, cap) in enumerate(per_vertex[v], start=1):
                built.append(P2MPGroup(v, g, members, cap))
        return cls(n=n, links=links, groups=tuple(built), names=tuple(names))


@dataclass(frozen=True, eq=False)
class VirtualizedTopology:
    """Parallel-link-free derived topology plus the link permutation.

    ``sigma[l-1]`` is the derived id of the transmitter-side half of
    original link ``l``; ``half_map`` records both halves (receiver half
    is None for links that were not split).
    """

    base: Topology
    derived: Topology
    sigma: tuple[int, ...]
    sigma_inv: tuple[int, ...]
    virtual_vertices: dict[int, int]
    half_map: dict[int, tuple[int, int | None]]

    def tx_half(self, link_id: int) -> int:
        return self.sigma[link_id - 1]

    def derived_ids(self, link_id: int) -> tuple[int, ...]:
        tx, rx = self.half_map[link_id]
        return (tx,) if rx is None else (tx, rx)


@lru_cache(maxsize=256)
def _adjacency(t: Topology) -> tuple[tuple[tuple[int, ...], ...], tuple[tuple[int, ...], ...]]:
    outs: list[list[int]] = [[] for _ in range(t.n)]
    ins: list[list[int]] = [[] for _ in range(t.n)]
    for lk in t.links:
        outs[lk.src - 1].append(lk.id)
        ins[lk.tgt - 1].append(lk.id)
    return (
        tuple(tuple(o) for o in outs),
        tuple(tuple(i) for i in ins),
    )


def _check_vertex(t: Topology, j: int) -> None:
    if not 1 <= j <= t.n:
        raise ValueError(f"vertex {j} out of range 1..{t.n}")


def out_links(t: Topology, j: int) -> frozenset[int]:
    """Ids of links with source ``j``."""
    _check_vertex(t, j)
    return frozenset(_adjacency(t)[0][j - 1])


def in_links(t: Topology, j: int) -> frozenset[int]:
    """Ids of links with target ``j``."""
    _check_vertex(t, j)
    return frozenset(_adjacency(t)[1][j - 1])


def graph_sources(t: Topology) -> frozenset[int]:
    """Vertices with zero in-degree (exempt from flow conservation)."""
    ins = _adjacency(t)[1]
    return frozenset(j + 1 for j in range(t.n) if not ins[j])


def graph_targets(t: Topology) -> frozenset[int]:
    """Vertices with zero out-degree (exempt from flow conservation)."""
    outs = _adjacency(t)[0]
    return frozenset(j + 1 for j in range(t.n) if not outs[j])


def validate_topology(t: Topology) -> list[Violation]:
    """Structural checks; an empty report means the topology is valid."""
    report: list[Violation] = []
    for pos, lk in enumerate(t.links, start=1):
        if lk.id != pos:
            report.append(Violation("bad-id", f"link at position {pos} has id {lk.id}"))
        if lk.src == lk.tgt:
            report.append(Violation("self-loop", f"link {lk.id} at vertex {lk.src}"))
        for v in (lk.src, lk.tgt):
            if not 1 <= v <= t.n:
                report.append(Violation("dangling-vertex", f"link {lk.id} references vertex {v}"))
        if lk.capacity < 0:
            report.append(Violation("negative-capacity", f"link {lk.id}"))

    valid_ids = {lk.id for lk in t.links}
    seen: dict[int, tuple[int, int]] = {}
    for grp in t.groups:
        if not grp.members:
            report.append(Violation("empty-group", f"group {grp.group_id} at vertex {grp.vertex}"))
        if grp.capacity < 0:
            report.append(Violation("negative-capacity", f"group {grp.group_id} at vertex {grp.vertex}"))
        for m in grp.members:
            if m not in valid_ids:
                report.append(Violation("unknown-member", f"group {grp.group_id} at vertex {grp.vertex} lists link {m}"))
                continue
            if t.links[m - 1].src != grp.vertex:
                report.append(Violation("foreign-member", f"link {m} does not originate at vertex {grp.vertex}"))
            if m in seen:
                report.append(Violation("double-covered", f"link {m} in groups {seen[m]} and {(grp.vertex, grp.group_id)}"))
            seen[m] = (grp.vertex, grp.group_id)
    for lk in t.links:
        if 1 <= lk.src <= t.n and lk.id not in seen:
            report.append(Violation("uncovered link", f"link {lk.id} at vertex {lk.src} belongs to no group"))
    return report


def virtualize(t: Topology) -> VirtualizedTopology:
    """Split every parallel link through a fresh virtual vertex.

    All members of a parallel family are split (links with a unique
    source/target pair are copied unchanged). Virtual vertices are
    numbered ``n+1, n+2, ...`` in increasing order of the split link's
    original id, and derived links are renumbered lexicographically by
    (source, target). Transmitter-side halves inherit the original link's
    group; each receiver-side half becomes a singleton group with the
    link's capacity.
    """
    problems = [v for v in validate_topology(t) if v.kind != "uncovered link"]
    if problems:
        raise ValueError(f"invalid topology: {problems[0]}")

    family_size: dict[tuple[int, int], int] = {}
    for lk in t.links:
        family_size[(lk.src, lk.tgt)] = family_size.get((lk.src, lk.tgt), 0) + 1
    split_ids = [lk.id for lk in t.links if family_size[(lk.src, lk.tgt)] > 1]
    virtual_of = {lid: t.n + k + 1 for k, lid in enumerate(split_ids)}

    # (src, tgt, capacity, original link, is_receiver_half)
    raw: list[tuple[int, int, float, int, bool]] = []
    for lk in t.links:
        w = virtual_of.get(lk.id)
        if w is None:
            raw.append((lk.src, lk.tgt, lk.capacity, lk.id, False))
        else:
            raw.append((lk.src, w, lk.capacity, lk.id, False))
            raw.append((w, lk.tgt, lk.capacity, lk.id, True))
    raw.sort(key=lambda item: (item[0], item[1]))

    derived_links = tuple(
        Link(i + 1, s, tg, c) for i, (s, tg, c, _, _) in enumerate(raw)
    )
    tx_id: dict[int, int] = {}
    rx_id: dict[int, int] = {}
    for i, (_, _, _, orig, is_rx) in enumerate(raw):
        (rx_id if is_rx else tx_id)[orig] = i + 1

    sigma = tuple(tx_id[lk.id] for lk in t.links)
    sigma_inv = [0] * len(sigma)
    for orig_idx, derived in enumerate(sigma):
        sigma_inv[derived - 1] = orig_idx + 1

    groups: list[P2MPGroup] = []
    for grp in t.groups:
        groups.append(
            P2MPGroup(
                grp.vertex,
                grp.group_id,
                frozenset(tx_id[m] for m in grp.members),
                grp.capacity,
            )
        )
    for lid in split_ids:
        groups.append(
            P2MPGroup(virtual_of[lid], 1, frozenset({rx_id[lid]}), t.link(lid).capacity)
        )

    derived = Topology(
        n=t.n + len(split_ids),
        links=derived_links,
        groups=tuple(groups),
        names=tuple(t.names) + tuple(f"via{t.n + k + 1}" for k in range(len(split_ids)))
        if t.names
        else (),
    )
    return VirtualizedTopology(
        base=t,
        derived=derived,
        sigma=sigma,
        sigma_inv=tuple(sigma_inv),
        virtual_vertices={w: lid for lid, w in virtual_of.items()},
        half_map={lk.id: (tx_id[lk.id], rx_id.get(lk.id)) for lk in t.links},
    )
