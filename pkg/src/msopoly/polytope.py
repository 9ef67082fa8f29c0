"""Local polytopes, simplex lifts, glued assembly and the final system.

The assembled object is a sparse exact-rational equality system
A y + D t + C f = e with t, f >= 0, built bottom-up over a nice tree
decomposition: every node contributes the simplex lift of its local
polytope, and gluing identifies the child's t-block with the parent's
child-coordinate block as shared columns.  The face row and the y
projection rows are appended afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import EmptyPolytope, InvalidDecomposition
from .structures import Graph, make_graph, make_structure
from .treedecomp import FORGET, INTRODUCE, JOIN, LEAF, TreeDecomposition, validate_td
from .typesig import FeasibleSets

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Vertex polytopes (definition-level, for local polytopes and tests)

@dataclass(frozen=True)
class VertexPolytope:
    coord_names: tuple
    vertices: tuple  # of 0/1 tuples, deduplicated, in insertion order

    def __post_init__(self):
        d = len(self.coord_names)
        seen = set()
        for v in self.vertices:
            if len(v) != d or any(x not in (0, 1) for x in v):
                raise ValueError(f"bad vertex {v}")
            if v in seen:
                raise ValueError(f"duplicate vertex {v}")
            seen.add(v)


def local_polytope(node, td: TreeDecomposition, fs: FeasibleSets) -> VertexPolytope:
    """The node's local polytope: indicator vectors of its feasible types,
    pairs or triples over the discovered-type coordinates."""
    kind = td.kinds[node]
    if kind == LEAF:
        coords = tuple(("t", node, a) for a in fs.F[node])
        verts = []
        for a in fs.F[node]:
            v = [0] * len(coords)
            v[fs.F[node].index(a)] = 1
            verts.append(tuple(v))
        return VertexPolytope(coords, tuple(verts))
    if kind in (INTRODUCE, FORGET):
        child = td.children[node][0]
        dpos = {a: i for i, a in enumerate(fs.F[child])}
        tpos = {a: i for i, a in enumerate(fs.F[node])}
        coords = tuple(("d", node, a) for a in fs.F[child]) + \
            tuple(("t", node, a) for a in fs.F[node])
        verts = []
        for a, b in fs.Fp[node]:
            v = [0] * len(coords)
            v[dpos[a]] = 1
            v[len(dpos) + tpos[b]] = 1
            verts.append(tuple(v))
        return VertexPolytope(coords, tuple(verts))
    if kind == JOIN:
        left, right = td.children[node]
        lpos = {a: i for i, a in enumerate(fs.F[left])}
        rpos = {a: i for i, a in enumerate(fs.F[right])}
        tpos = {a: i for i, a in enumerate(fs.F[node])}
        coords = tuple(("l", node, a) for a in fs.F[left]) + \
            tuple(("r", node, a) for a in fs.F[right]) + \
            tuple(("t", node, a) for a in fs.F[node])
        verts = []
        for a, b, g in fs.Ft[node]:
            v = [0] * len(coords)
            v[lpos[a]] = 1
            v[len(lpos) + rpos[b]] = 1
            v[len(lpos) + len(rpos) + tpos[g]] = 1
            verts.append(tuple(v))
        return VertexPolytope(coords, tuple(verts))
    raise ValueError(f"node {node} has no nice kind")


def glued_product_vertices(p: VertexPolytope, q: VertexPolytope,
                           i_p, i_q) -> VertexPolytope:
    """Definition-level glued product: vertex pairs agreeing on the glued
    coordinate lists, projected to (P minus glue, all of Q)."""
    i_p, i_q = list(i_p), list(i_q)
    if len(i_p) != len(i_q):
        raise ValueError("glued coordinate lists must have equal length")
    keep_p = [i for i in range(len(p.coord_names)) if i not in set(i_p)]
    names = tuple(p.coord_names[i] for i in keep_p) + q.coord_names
    verts = []
    seen = set()
    for x in p.vertices:
        for y in q.vertices:
            if all(x[a] == y[b] for a, b in zip(i_p, i_q)):
                v = tuple(x[i] for i in keep_p) + y
                if v not in seen:
                    seen.add(v)
                    verts.append(v)
    return VertexPolytope(names, tuple(verts))


# ---------------------------------------------------------------------------
# Sparse systems

@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "t" | "f" | "y" | "x"
    tag: tuple = ()


@dataclass
class NodeBlock:
    """Per-node slice of the assembled system, for gluing and decomposition."""
    kind: str
    children: tuple
    tcols: dict          # TypeId -> col (this node's t-block)
    fcols: list          # lambda columns, one per local vertex
    coord_cols: list     # local polytope coordinate columns, in order
    vertices: list       # local 0/1 vertices over coord_cols
    rows: list           # row indices contributed by this node


@dataclass
class SparseSystem:
    variables: list = field(default_factory=list)
    rows: list = field(default_factory=list)   # (coeff dict col->Fraction, rhs)
    nonneg: set = field(default_factory=set)
    glue: dict = field(default_factory=dict)   # node -> NodeBlock
    glue_root: int | None = None
    face_row: int | None = None
    proj_rows: dict = field(default_factory=dict)  # (elem, i) -> row index

    @property
    def ncols(self):
        return len(self.variables)

    @property
    def nrows(self):
        return len(self.rows)

    @property
    def nnz(self):
        return sum(len(c) for c, _ in self.rows)

    def add_var(self, name, kind, tag=(), nonneg=False):
        col = len(self.variables)
        self.variables.append(Variable(name, kind, tag))
        if nonneg:
            self.nonneg.add(col)
        return col

    def add_row(self, coeffs, rhs):
        self.rows.append(({c: Fraction(v) for c, v in coeffs.items() if v != 0},
                          Fraction(rhs)))
        return len(self.rows) - 1

    def copy(self):
        out = SparseSystem(list(self.variables),
                           [(dict(c), r) for c, r in self.rows],
                           set(self.nonneg), dict(self.glue), self.glue_root,
                           self.face_row, dict(self.proj_rows))
        return out

    def check_point(self, values):
        """Row indices violated by a full col->Fraction assignment."""
        bad = []
        for i, (coeffs, rhs) in enumerate(self.rows):
            s = sum((a * values.get(c, ZERO) for c, a in coeffs.items()), ZERO)
            if s != rhs:
                bad.append(i)
        return bad

    def column_order(self):
        """Columns ordered by glue-tree locality: per node bottom-up, lambda
        then t columns, then everything else (y last)."""
        order = []
        seen = set()
        if self.glue:
            stack = [(self.glue_root, False)]
            post = []
            while stack:
                nid, done = stack.pop()
                if done:
                    post.append(nid)
                else:
                    stack.append((nid, True))
                    for ch in reversed(self.glue[nid].children):
                        stack.append((ch, False))
            for nid in post:
                blk = self.glue[nid]
                for col in blk.fcols:
                    if col not in seen:
                        seen.add(col)
                        order.append(col)
                for col in blk.tcols.values():
                    if col not in seen:
                        seen.add(col)
                        order.append(col)
        for col in range(self.ncols):
            if col not in seen:
                order.append(col)
        return order


def simplex_lift_into(sys: SparseSystem, vertices, coord_cols, fname):
    """Append the simplex lift of an explicit vertex list: one nonnegative
    lambda per vertex, a convexity row, and one defining row per coordinate.
    Returns (fcols, row indices)."""
    if not vertices:
        raise EmptyPolytope("cannot lift a polytope with no vertices")
    fcols = [sys.add_var(f"{fname}_{j}", "f", nonneg=True)
             for j in range(len(vertices))]
    rows = [sys.add_row({c: ONE for c in fcols}, ONE)]
    for i, col in enumerate(coord_cols):
        coeffs = {fcols[j]: ONE for j, v in enumerate(vertices) if v[i] == 1}
        coeffs[col] = -ONE
        rows.append(sys.add_row(coeffs, ZERO))
    return fcols, rows


def simplex_lift(p: VertexPolytope) -> SparseSystem:
    """Standalone lifted system of a vertex polytope: coordinates as columns
    plus the simplex block."""
    sys = SparseSystem()
    coord_cols = [sys.add_var(f"x_{i}", "x", tag=(name,))
                  for i, name in enumerate(p.coord_names)]
    simplex_lift_into(sys, list(p.vertices), coord_cols, "f")
    return sys


def assemble(td: TreeDecomposition, fs: FeasibleSets, reg) -> SparseSystem:
    """Glue the simplex-lifted local polytopes bottom-up over the
    decomposition; child t-blocks are shared columns with the parent's
    child-coordinate block."""
    sys = SparseSystem()
    tcols = {}
    for node in td.postorder():
        kind = td.kinds[node]
        tcols[node] = {a: sys.add_var(f"t_{node}_{a}", "t", tag=(node, a), nonneg=True)
                       for a in fs.F[node]}
        own = list(tcols[node].values())
        if kind == LEAF:
            coord_cols = own
            pos = {a: i for i, a in enumerate(fs.F[node])}
            verts = []
            for a in fs.F[node]:
                v = [0] * len(coord_cols)
                v[pos[a]] = 1
                verts.append(tuple(v))
        elif kind in (INTRODUCE, FORGET):
            child = td.children[node][0]
            dcols = [tcols[child][a] for a in fs.F[child]]
            coord_cols = dcols + own
            dpos = {a: i for i, a in enumerate(fs.F[child])}
            tpos = {a: i for i, a in enumerate(fs.F[node])}
            verts = []
            for a, b in fs.Fp[node]:
                v = [0] * len(coord_cols)
                v[dpos[a]] = 1
                v[len(dpos) + tpos[b]] = 1
                verts.append(tuple(v))
        else:
            left, right = td.children[node]
            lcols = [tcols[left][a] for a in fs.F[left]]
            rcols = [tcols[right][a] for a in fs.F[right]]
            coord_cols = lcols + rcols + own
            lpos = {a: i for i, a in enumerate(fs.F[left])}
            rpos = {a: i for i, a in enumerate(fs.F[right])}
            tpos = {a: i for i, a in enumerate(fs.F[node])}
            verts = []
            for a, b, g in fs.Ft[node]:
                v = [0] * len(coord_cols)
                v[lpos[a]] = 1
                v[len(lpos) + rpos[b]] = 1
                v[len(lpos) + len(rpos) + tpos[g]] = 1
                verts.append(tuple(v))
        fcols, rows = simplex_lift_into(sys, verts, coord_cols, f"f_{node}")
        sys.glue[node] = NodeBlock(kind, tuple(td.children[node]), tcols[node],
                                   fcols, coord_cols, verts, rows)
    sys.glue_root = td.root
    budget = (3 * len(reg) + 2) * len(td.bags)
    if sys.nrows > budget:
        raise InvalidDecomposition(
            f"row count {sys.nrows} exceeds the ({3}*|registry|+2)*nodes "
            f"budget {budget}")
    return sys


def apply_face(sys: SparseSystem, rho_values) -> SparseSystem:
    """Append the face row: the rho-weighted convexity of the root t-block
    pinned to one."""
    out = sys.copy()
    root = out.glue_root
    coeffs = {col: ONE for a, col in out.glue[root].tcols.items()
              if rho_values.get(a, 0) == 1}
    out.face_row = out.add_row(coeffs, ONE)
    return out


def add_projection(sys: SparseSystem, fs: FeasibleSets, tops, m,
                   structure) -> SparseSystem:
    """Add one free y variable and defining row per (vertex element, color):
    y_v^i equals the nu-weighted sum over the t-block of top(v)."""
    out = sys.copy()
    for v in sorted(structure.isV):
        node = tops[v]
        for i in range(m):
            ycol = out.add_var(f"y_{v}_{i}", "y", tag=(v, i))
            coeffs = {ycol: -ONE}
            for a, col in out.glue[node].tcols.items():
                if (a, node, v, i) in fs.nu:
                    coeffs[col] = ONE
            out.proj_rows[(v, i)] = out.add_row(coeffs, ZERO)
    return out


def gaifman_graph(sys: SparseSystem) -> Graph:
    """Columns as vertices; an edge wherever two columns share a row."""
    edges = set()
    for coeffs, _ in sys.rows:
        support = sorted(coeffs)
        for i, u in enumerate(support):
            for v in support[i + 1:]:
                edges.add((u, v))
    return make_graph(range(sys.ncols), edges)


@dataclass
class SystemDecomposition:
    tree: TreeDecomposition
    bags: dict
    width: int


def system_decomposition(sys: SparseSystem, td: TreeDecomposition,
                         tops=None) -> SystemDecomposition:
    """The decomposition (T*, B*) of the system's Gaifman graph: T* is the
    build tree, B*(b) holds the node's local columns (own and child t-blocks,
    lambdas) plus the y columns of elements topping at b.  Validated before
    return."""
    bags = {}
    for node, blk in sys.glue.items():
        bag = set(blk.coord_cols) | set(blk.fcols)
        bags[node] = bag
    for col, var in enumerate(sys.variables):
        if var.kind == "y":
            v, i = var.tag
            bags[tops[v]].add(col)
    mirror = TreeDecomposition()
    ids = {}
    for node in td.postorder():
        ids[node] = mirror.add_node(bags[node],
                                    children=[ids[c] for c in td.children[node]])
    mirror.root = ids[td.root]
    g = gaifman_graph(sys)
    shadow = make_structure(range(sys.ncols), g.edges, range(sys.ncols))
    problems = validate_td(shadow, mirror)
    if problems:
        raise InvalidDecomposition("; ".join(problems[:5]))
    # non-neighbor disjointness of t-blocks (neighborhood includes b itself)
    for node, blk in sys.glue.items():
        tset = set(blk.tcols.values())
        allowed = {node, *td.children[node]}
        if td.parent[node] is not None:
            allowed.add(td.parent[node])
        for other, obag in bags.items():
            if other not in allowed and tset & obag:
                raise InvalidDecomposition(
                    f"t-block of node {node} leaks into bag of node {other}")
    width = max(len(b) for b in bags.values()) - 1
    return SystemDecomposition(mirror, {n: frozenset(b) for n, b in bags.items()},
                               width)


# ---------------------------------------------------------------------------
# Lemma-4 style stacked system for two glued vertex polytopes

def stacked_glued_system(p: VertexPolytope, q: VertexPolytope, i_p, i_q):
    """The two simplex lifts sharing the glued coordinates as common columns.
    Its 0/1 points project onto the glued product's vertex set.  Requires the
    gluing premise: at most one 1 among the glued coordinates of every
    vertex.  Returns (system, projection columns of the product's coords)."""
    i_p, i_q = list(i_p), list(i_q)
    if len(i_p) != len(i_q):
        raise ValueError("glued coordinate lists must have equal length")
    for x in p.vertices:
        if sum(x[i] for i in i_p) > 1:
            raise ValueError("gluing premise violated in P")
    for y in q.vertices:
        if sum(y[i] for i in i_q) > 1:
            raise ValueError("gluing premise violated in Q")
    sys = SparseSystem()
    pcols = {}
    for i, name in enumerate(p.coord_names):
        if i not in set(i_p):
            pcols[i] = sys.add_var(f"p_{i}", "x", tag=(name,), nonneg=True)
    shared = {}
    for a, b in zip(i_p, i_q):
        col = sys.add_var(f"z_{a}", "x", tag=(p.coord_names[a], q.coord_names[b]),
                          nonneg=True)
        pcols[a] = col
        shared[b] = col
    qcols = {}
    for i, name in enumerate(q.coord_names):
        qcols[i] = shared.get(i)
        if qcols[i] is None:
            qcols[i] = sys.add_var(f"q_{i}", "x", tag=(name,), nonneg=True)
    simplex_lift_into(sys, list(p.vertices),
                      [pcols[i] for i in range(len(p.coord_names))], "fp")
    simplex_lift_into(sys, list(q.vertices),
                      [qcols[i] for i in range(len(q.coord_names))], "fq")
    keep_p = [i for i in range(len(p.coord_names)) if i not in set(i_p)]
    proj = [pcols[i] for i in keep_p] + [qcols[i] for i in range(len(q.coord_names))]
    return sys, proj


def system_stats(sys: SparseSystem, reg=None, td=None):
    stats = {"rows": sys.nrows, "cols": sys.ncols, "nnz": sys.nnz}
    if reg is not None:
        stats["types"] = len(reg)
    if td is not None:
        stats["nodes"] = len(td.bags)
        stats["td_width"] = td.width()
    if sys.glue:
        stats["node_block_widths"] = {
            str(n): len(set(b.coord_cols) | set(b.fcols))
            for n, b in sorted(sys.glue.items())}
    return stats
