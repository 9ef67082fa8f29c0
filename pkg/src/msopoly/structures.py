"""Graphs, incidence structures and colored boundaried structures.

A SigmaStructure is the working representation of an [m]-colored
boundaried structure: a universe of natural-number elements partitioned
into vertex-like and edge-like elements, a symmetric incidence relation,
m color sets (the free-variable assignments) and an ordered boundary
tuple of distinct elements.  Boundary positions in the public operations
are 1-based, matching the usual notation; color indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (BadPosition, BoundaryFull, GraphFormatError,
                     IncompatibleStructures)


# ---------------------------------------------------------------------------
# Graphs

@dataclass(frozen=True)
class Graph:
    vertex_ids: tuple
    edges: frozenset  # of (u, v) pairs with u < v

    def __post_init__(self):
        vs = set(self.vertex_ids)
        if list(self.vertex_ids) != sorted(vs) or len(vs) != len(self.vertex_ids):
            raise GraphFormatError("vertex ids must be unique and sorted")
        for u, v in self.edges:
            if u >= v:
                raise GraphFormatError(f"edge ({u},{v}) not normalized")
            if u not in vs or v not in vs:
                raise GraphFormatError(f"edge ({u},{v}) has unknown endpoint")

    @property
    def n(self):
        return len(self.vertex_ids)


def make_graph(vertices, edges):
    norm = frozenset((min(u, v), max(u, v)) for u, v in edges)
    for u, v in norm:
        if u == v:
            raise GraphFormatError(f"self-loop at {u}")
    return Graph(tuple(sorted(set(vertices))), norm)


def parse_dimacs(text):
    """Parse the DIMACS-like graph format: 'c' comments, one
    'p edge <n> <m>' line, then 'e <u> <v>' lines with 1 <= u < v <= n."""
    n = None
    m = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if n is not None:
                raise GraphFormatError(f"line {lineno}: duplicate problem line")
            if len(parts) != 4 or parts[1] != "edge":
                raise GraphFormatError(f"line {lineno}: expected 'p edge <n> <m>'")
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: non-integer sizes")
            if n < 0 or m < 0:
                raise GraphFormatError(f"line {lineno}: negative sizes")
        elif parts[0] == "e":
            if n is None:
                raise GraphFormatError(f"line {lineno}: edge before problem line")
            if len(parts) != 3:
                raise GraphFormatError(f"line {lineno}: expected 'e <u> <v>'")
            try:
                u, v = int(parts[1]), int(parts[2])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: non-integer endpoints")
            if not (1 <= u < v <= n):
                raise GraphFormatError(f"line {lineno}: require 1 <= u < v <= n")
            edges.append((u, v))
        else:
            raise GraphFormatError(f"line {lineno}: unknown line type '{parts[0]}'")
    if n is None:
        raise GraphFormatError("missing problem line")
    if m is not None and m != len(edges):
        raise GraphFormatError(f"problem line announces {m} edges, found {len(edges)}")
    return make_graph(range(1, n + 1), edges)


# ---------------------------------------------------------------------------
# Sigma structures

@dataclass(frozen=True)
class SigmaStructure:
    universe: tuple        # sorted element ids
    inc: frozenset         # of (a, b) pairs, a < b
    isV: frozenset         # vertex-like elements; the rest are edge-like
    colors: tuple          # m frozensets
    boundary: tuple        # distinct elements, positional

    def __post_init__(self):
        us = set(self.universe)
        if list(self.universe) != sorted(us) or len(us) != len(self.universe):
            raise ValueError("universe must be unique and sorted")
        if not self.isV <= us:
            raise ValueError("isV not within universe")
        for a, b in self.inc:
            if a >= b or a not in us or b not in us:
                raise ValueError(f"bad inc pair ({a},{b})")
        for c in self.colors:
            if not c <= us:
                raise ValueError("color not within universe")
        bs = set(self.boundary)
        if len(bs) != len(self.boundary) or not bs <= us:
            raise ValueError("boundary must be distinct universe elements")

    @property
    def isE(self):
        return frozenset(self.universe) - self.isV

    @property
    def m(self):
        return len(self.colors)

    def key(self):
        """Canonical hashable serialization (exact, not up to isomorphism)."""
        return (self.universe,
                tuple(sorted(self.inc)),
                tuple(sorted(self.isV)),
                tuple(tuple(sorted(c)) for c in self.colors),
                self.boundary)


def make_structure(universe, inc, is_vertex, colors=(), boundary=()):
    pairs = frozenset((min(a, b), max(a, b)) for a, b in inc)
    for a, b in pairs:
        if a == b:
            raise ValueError(f"inc is irreflexive; got ({a},{b})")
    return SigmaStructure(tuple(sorted(set(universe))), pairs,
                          frozenset(is_vertex),
                          tuple(frozenset(c) for c in colors),
                          tuple(boundary))


def empty_structure(m):
    return make_structure((), (), (), colors=[()] * m)


def eta(elems):
    """Ascending tuple of an element set."""
    return tuple(sorted(elems))


def incidence_structure(g: Graph):
    """Build I(G): one element per vertex plus one fresh element per edge,
    incident to its endpoints.  Returns the structure and the edge -> element
    id map."""
    base = (max(g.vertex_ids) if g.vertex_ids else 0) + 1
    edge_map = {}
    for i, e in enumerate(sorted(g.edges)):
        edge_map[e] = base + i
    inc = set()
    for (u, v), eid in edge_map.items():
        inc.add((u, eid))
        inc.add((v, eid))
    universe = list(g.vertex_ids) + sorted(edge_map.values())
    return make_structure(universe, inc, g.vertex_ids), edge_map


def _boundary_profile(s: SigmaStructure):
    b = s.boundary
    incs = frozenset((i, j) for i in range(len(b)) for j in range(len(b))
                     if i < j and (min(b[i], b[j]), max(b[i], b[j])) in s.inc)
    sorts = tuple(p in s.isV for p in b)
    cols = tuple(frozenset(i for i, p in enumerate(b) if p in c) for c in s.colors)
    return (len(b), incs, sorts, cols)


def compatible(s1: SigmaStructure, s2: SigmaStructure) -> bool:
    """Positionwise boundary isomorphism check: the map p_i -> q_i must
    preserve incidence, element sort and color membership."""
    if s1.m != s2.m or len(s1.boundary) != len(s2.boundary):
        return False
    return _boundary_profile(s1) == _boundary_profile(s2)


def join(s1: SigmaStructure, s2: SigmaStructure) -> SigmaStructure:
    """Disjoint union identifying boundaries positionwise, keeping s1's ids."""
    if not compatible(s1, s2):
        raise IncompatibleStructures("boundary profiles differ")
    rename = {q: p for q, p in zip(s2.boundary, s1.boundary)}
    nxt = (max(s1.universe) if s1.universe else 0) + 1
    for e in s2.universe:
        if e not in rename:
            while nxt in set(s1.universe):
                nxt += 1
            rename[e] = nxt
            nxt += 1
    universe = set(s1.universe) | {rename[e] for e in s2.universe}
    inc = set(s1.inc)
    for a, b in s2.inc:
        ra, rb = rename[a], rename[b]
        inc.add((min(ra, rb), max(ra, rb)))
    is_vertex = set(s1.isV) | {rename[e] for e in s2.isV}
    colors = [set(c1) | {rename[e] for e in c2}
              for c1, c2 in zip(s1.colors, s2.colors)]
    return make_structure(universe, inc, is_vertex, colors, s1.boundary)


def induced(s: SigmaStructure, keep) -> SigmaStructure:
    """Restriction of every relation, color and the boundary to ``keep``."""
    keep = set(keep)
    return make_structure(
        [e for e in s.universe if e in keep],
        [(a, b) for a, b in s.inc if a in keep and b in keep],
        s.isV & keep,
        [c & keep for c in s.colors],
        [p for p in s.boundary if p in keep])


def introduce_extend(s: SigmaStructure, pos, adj_to_boundary, is_vertex_elem,
                     color_membership=()) -> SigmaStructure:
    """Attach one fresh element, incident only to the given 1-based boundary
    positions, inserted into the boundary tuple at 1-based position ``pos``,
    and added to the 0-based color indices in ``color_membership``."""
    b = len(s.boundary)
    if not 1 <= pos <= b + 1:
        raise BadPosition(f"insert position {pos} outside 1..{b + 1}")
    if any(not 1 <= j <= b for j in adj_to_boundary):
        raise BadPosition("adjacency position outside the boundary")
    if any(not 0 <= i < s.m for i in color_membership):
        raise BadPosition("color index out of range")
    new = (max(s.universe) if s.universe else 0) + 1
    inc = set(s.inc)
    for j in adj_to_boundary:
        p = s.boundary[j - 1]
        inc.add((min(p, new), max(p, new)))
    boundary = s.boundary[:pos - 1] + (new,) + s.boundary[pos - 1:]
    is_v = set(s.isV) | ({new} if is_vertex_elem else set())
    colors = [set(c) | ({new} if i in color_membership else set())
              for i, c in enumerate(s.colors)]
    return make_structure(list(s.universe) + [new], inc, is_v, colors, boundary)


def drop_boundary_at(s: SigmaStructure, d) -> SigmaStructure:
    """Remove 1-based position d from the boundary tuple; the element stays
    in the universe."""
    if not 1 <= d <= len(s.boundary):
        raise BadPosition(f"position {d} outside 1..{len(s.boundary)}")
    boundary = s.boundary[:d - 1] + s.boundary[d:]
    return SigmaStructure(s.universe, s.inc, s.isV, s.colors, boundary)


def with_colors(s: SigmaStructure, colors) -> SigmaStructure:
    return make_structure(s.universe, s.inc, s.isV, colors, s.boundary)


def _refine_partition(universe, neigh, rank):
    """Neighbor-multiset refinement to a fixpoint; returns element -> small
    int class index, classes ordered canonically."""
    for _ in range(len(universe)):
        order = sorted(set(rank.values()))
        idx = {v: i for i, v in enumerate(order)}
        nxt = {e: (idx[rank[e]], tuple(sorted(idx[rank[u]] for u in neigh[e])))
               for e in universe}
        stable = len(set(nxt.values())) == len(set(rank.values()))
        rank = nxt
        if stable:
            break
    order = sorted(set(rank.values()))
    idx = {v: i for i, v in enumerate(order)}
    return {e: idx[rank[e]] for e in universe}


def canonical_relabel(s: SigmaStructure) -> SigmaStructure:
    """Canonically relabel elements to 0..n-1: isomorphic structures relabel
    to the identical structure.

    Color refinement over (sort, boundary position, color memberships)
    handles most inputs outright; remaining symmetric cells are broken by
    individualization-refinement, keeping the lexicographically smallest
    serialized result.  Exponential only in leftover symmetry, which is
    tiny at witness scale.
    """
    n = len(s.universe)
    bpos = {p: i for i, p in enumerate(s.boundary)}
    neigh = {e: [] for e in s.universe}
    for a, b in s.inc:
        neigh[a].append(b)
        neigh[b].append(a)
    base = {e: (e in s.isV, bpos.get(e, -1),
                tuple(e in c for c in s.colors)) for e in s.universe}

    def relabeled(order):
        relabel = {e: i for i, e in enumerate(order)}
        return make_structure(
            range(n),
            [(relabel[a], relabel[b]) for a, b in s.inc],
            [relabel[e] for e in s.isV],
            [[relabel[e] for e in c] for c in s.colors],
            [relabel[p] for p in s.boundary])

    best = None

    def search(rank):
        nonlocal best
        refined = _refine_partition(s.universe, neigh, rank)
        cells = {}
        for e in s.universe:
            cells.setdefault(refined[e], []).append(e)
        target = None
        for ci in sorted(cells):
            if len(cells[ci]) > 1:
                target = ci
                break
        if target is None:
            cand = relabeled(sorted(s.universe, key=lambda e: refined[e]))
            key = cand.key()
            if best is None or key < best[0]:
                best = (key, cand)
            return
        for e in sorted(cells[target]):
            search({u: (refined[u], u == e) for u in s.universe})

    search(base)
    return best[1]
