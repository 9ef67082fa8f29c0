"""Constructive decomposition oracles: split an integer point of the
r-dilated polytope into r integer points of the polytope.

Simplex blocks decompose coordinatewise, lifted blocks through the
projection, and glued systems by recursively decomposing both sides and
pairing parts on their glue-block values (each part carries at most one
1 there, so pairing is by the position of the 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (InconsistentPoint, NotDecomposable, NotInDilate,
                     PairingFailed)
from .polytope import SparseSystem, VertexPolytope
from .treedecomp import JOIN


@dataclass(frozen=True)
class DecompositionRequest:
    r: int
    point: dict          # variable name or column -> integer
    target: str          # "simplex" | "lifted" | "system"


def decompose_simplex(x, r):
    """Write a nonnegative integer vector with coordinate sum r as r unit
    vectors (the multiset with x_j copies of e_j)."""
    x = [int(v) for v in x]
    if any(v < 0 for v in x):
        raise NotInDilate("negative coordinate")
    if sum(x) != r:
        raise NotInDilate(f"coordinates sum to {sum(x)}, expected r={r}")
    parts = []
    for j, v in enumerate(x):
        unit = tuple(1 if i == j else 0 for i in range(len(x)))
        parts.extend([unit] * v)
    return parts


def decompose_lifted(coords, lams, r, vertices):
    """Split a point of the r-dilated simplex lift: lambda decomposes over
    the simplex and each unit pulls its vertex through the projection.
    Returns a list of (vertex, unit lambda) pairs."""
    lam_parts = decompose_simplex(lams, r)
    recon = [sum(int(lams[j]) * v[i] for j, v in enumerate(vertices))
             for i in range(len(coords))]
    if list(map(int, coords)) != recon:
        raise InconsistentPoint(
            "coordinate part is not the projection of the lambda part")
    out = []
    for unit in lam_parts:
        j = unit.index(1)
        out.append((vertices[j], unit))
    return out


def decompose_vertices(p: VertexPolytope, x, r):
    """Exhaustive decomposition over an explicit vertex list (tiny inputs
    only); raises NotDecomposable when no multiset of r vertices sums to x."""
    x = tuple(int(v) for v in x)
    if len(x) != len(p.coord_names):
        raise NotInDilate("dimension mismatch")
    verts = sorted(p.vertices)

    def rec(remaining, r_left, start):
        if r_left == 0:
            return [] if all(v == 0 for v in remaining) else None
        for j in range(start, len(verts)):
            v = verts[j]
            if all(rv >= vv for rv, vv in zip(remaining, v)):
                rest = rec(tuple(rv - vv for rv, vv in zip(remaining, v)),
                           r_left - 1, j)
                if rest is not None:
                    return [v] + rest
        return None

    got = rec(x, r, 0)
    if got is None:
        raise NotDecomposable(f"{x} is not a sum of {r} vertices")
    return got


def _pair_by_block(parts_a, parts_b, block_cols):
    """Greedily pair two part lists on equal glue-block values.  Each part
    has at most one 1 on the block, so the bucket key is the position of
    the 1 (or None)."""
    def bucket_key(part):
        ones = [c for c in block_cols if part.get(c, 0) == 1]
        if len(ones) > 1:
            raise PairingFailed("glue block carries more than one 1")
        return ones[0] if ones else None

    buckets = {}
    for p in parts_b:
        buckets.setdefault(bucket_key(p), []).append(p)
    merged = []
    for p in parts_a:
        key = bucket_key(p)
        pool = buckets.get(key)
        if not pool:
            raise PairingFailed(f"no partner with glue value {key}")
        q = pool.pop()
        merged.append({**q, **p})
    if any(pool for pool in buckets.values()):
        raise PairingFailed("unmatched parts remain")
    return merged


def decompose_glued(pt, r, left, right, glue_cols):
    """Decompose a point of the r-dilate of two simplex-lifted blocks glued
    on shared columns.  left and right are (coord_cols, fcols, vertices)
    triples; pt maps columns to integers.  Returns r merged column maps."""
    sides = []
    for coord_cols, fcols, vertices in (left, right):
        parts = decompose_lifted([pt[c] for c in coord_cols],
                                 [pt[c] for c in fcols], r, vertices)
        side = []
        for vert, unit in parts:
            d = dict(zip(coord_cols, vert))
            d.update(zip(fcols, unit))
            side.append(d)
        sides.append(side)
    return _pair_by_block(sides[0], sides[1], list(glue_cols))


def _node_parts(sys: SparseSystem, node, values, r):
    blk = sys.glue[node]
    parts = decompose_lifted([values[c] for c in blk.coord_cols],
                             [values[c] for c in blk.fcols], r, blk.vertices)
    out = []
    for vert, unit in parts:
        d = dict(zip(blk.coord_cols, vert))
        d.update(zip(blk.fcols, unit))
        out.append(d)
    return out


def decompose_P(sys: SparseSystem, values, r):
    """Decomposition oracle for the assembled system: values maps every
    column to an integer point of r*P; returns r integer points of P as
    full column tuples, canonically ordered.

    Walks the glue tree bottom-up, decomposing each node's simplex lift and
    pairing on the shared t-blocks; y parts are rebuilt from the projection
    rows afterwards."""
    if r < 0:
        raise NotInDilate("negative r")
    values = {c: int(values[c]) for c in range(sys.ncols)}
    for col in sys.nonneg:
        if values[col] < 0:
            raise NotInDilate(f"negative value on nonnegative column {col}")
    for i, (coeffs, rhs) in enumerate(sys.rows):
        s = sum(a * values[c] for c, a in coeffs.items())
        if s != r * rhs:
            raise NotInDilate(f"row {i} sums to {s}, expected {r * rhs}")
    if r == 0:
        return []

    def walk(node):
        local = _node_parts(sys, node, values, r)
        blk = sys.glue[node]
        if not blk.children:
            return local
        if blk.kind == JOIN:
            left, right = blk.children
            lparts = walk(left)
            rparts = walk(right)
            merged = _pair_by_block(local, lparts,
                                    list(sys.glue[left].tcols.values()))
            return _pair_by_block(merged, rparts,
                                  list(sys.glue[right].tcols.values()))
        child = blk.children[0]
        cparts = walk(child)
        return _pair_by_block(local, cparts,
                              list(sys.glue[child].tcols.values()))

    parts = walk(sys.glue_root)
    # rebuild y coordinates through the projection rows, then verify each
    # part satisfies the unscaled system
    out = []
    for part in parts:
        full = dict(part)
        for (v, i), row in sys.proj_rows.items():
            coeffs, _ = sys.rows[row]
            ycol = next(c for c, a in coeffs.items() if a < 0)
            full[ycol] = sum(part.get(c, 0) for c, a in coeffs.items() if a > 0)
        vec = tuple(full.get(c, 0) for c in range(sys.ncols))
        bad = sys.check_point({c: Fraction(vec[c]) for c in range(sys.ncols)})
        if bad:
            raise PairingFailed(f"part violates rows {bad[:3]}")
        out.append(vec)
    if len(out) != r:
        raise PairingFailed(f"got {len(out)} parts, expected {r}")
    total = [sum(p[c] for p in out) for c in range(sys.ncols)]
    if total != [values[c] for c in range(sys.ncols)]:
        raise PairingFailed("parts do not sum to the input point")
    return sorted(out)
