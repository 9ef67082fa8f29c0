"""Independent brute-force ground truth.

Everything here re-implements its job from the definitions, sharing no
construction code with the types or polytope modules: the evaluator is a
plain recursive model checker over explicitly enumerated subsets, the
type computation is the direct signature recursion on the actual
subgraph, and the integer-point enumerator is a backtracking search over
the 0/1 box.  Agreement between these and the construction is what the
acceptance suite tests.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import BudgetExceeded
from .logic import CoreFormula, SET_QUANTIFIERS
from .structures import SigmaStructure

ZERO = Fraction(0)


# ---------------------------------------------------------------------------
# Formula evaluation, written independently of logic.evaluate

class _BruteEvaluator:
    """Straight recursive semantics; quantifiers scan the empty set, then
    singletons, then all remaining subsets, short-circuiting on the first
    decisive witness."""

    def __init__(self, structure: SigmaStructure):
        self.elems = list(structure.universe)
        self.pos = {e: i for i, e in enumerate(self.elems)}
        n = len(self.elems)
        self.n = n
        self.vmask = sum(1 << self.pos[e] for e in structure.isV)
        self.adj = [0] * n
        for a, b in structure.inc:
            self.adj[self.pos[a]] |= 1 << self.pos[b]
            self.adj[self.pos[b]] |= 1 << self.pos[a]
        singles = [1 << i for i in range(n)]
        rest = [x for x in range(1 << n) if x != 0 and x not in set(singles)]
        self.scan_order = [0] + singles + rest

    def mask(self, elems):
        m = 0
        for e in elems:
            m |= 1 << self.pos[e]
        return m

    def run(self, ast, env):
        kind = ast.kind
        if kind == "true":
            return True
        if kind == "false":
            return False
        if kind == "not":
            return not self.run(ast.args[0], env)
        if kind == "and":
            for a in ast.args:
                if not self.run(a, env):
                    return False
            return True
        if kind == "or":
            for a in ast.args:
                if self.run(a, env):
                    return True
            return False
        if kind == "imp":
            if not self.run(ast.args[0], env):
                return True
            return self.run(ast.args[1], env)
        if kind == "iff":
            return self.run(ast.args[0], env) is self.run(ast.args[1], env)
        if kind in SET_QUANTIFIERS:
            want = kind == "existsSet"
            var, body = ast.var, ast.args[0]
            saved = env.get(var)
            for x in self.scan_order:
                env[var] = x
                if self.run(body, env) is want:
                    env[var] = saved
                    return want
            env[var] = saved
            return not want
        a = env[ast.names[0]]
        if kind == "sing":
            return a.bit_count() == 1
        if kind == "isV":
            return a.bit_count() == 1 and a & self.vmask != 0
        if kind == "isE":
            return a.bit_count() == 1 and a & self.vmask == 0
        b = env[ast.names[1]]
        if kind == "sub":
            return a | b == b
        if kind == "inc":
            if a.bit_count() != 1 or b.bit_count() != 1:
                return False
            return self.adj[a.bit_length() - 1] >> (b.bit_length() - 1) & 1 == 1
        raise AssertionError(f"unknown node kind {kind}")


def enumerate_satisfying(f: CoreFormula, structure: SigmaStructure,
                         budget=1 << 26):
    """All m-tuples of universe subsets satisfying f, in canonical order
    (per-variable subsets enumerated as ascending bitmasks, first variable
    slowest).  Returned as tuples of sorted element tuples."""
    ev = _BruteEvaluator(structure)
    n = ev.n
    m = len(f.free_vars)
    if (1 << (n * m)) > budget:
        raise BudgetExceeded(f"2^({n}*{m}) assignments exceed budget {budget}")
    out = []
    total = 1 << (n * m)
    full = (1 << n) - 1
    for combined in range(total):
        env = {}
        rest = combined
        for name in reversed(f.free_vars):
            env[name] = rest & full
            rest >>= n
        if ev.run(f.ast, env):
            out.append(tuple(
                tuple(ev.elems[i] for i in range(n) if env[name] >> i & 1)
                for name in f.free_vars))
    return out


def brute_optimum(f: CoreFormula, structure: SigmaStructure, weights,
                  sense="max", budget=1 << 26):
    """Scan all satisfying assignments; weights maps (vertex element, color
    index) to rationals.  Ties keep the earliest assignment in canonical
    order.  Returns (value, assignment) or (None, None) when unsatisfiable."""
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be min or max, got {sense!r}")
    best = None
    best_a = None
    for assignment in enumerate_satisfying(f, structure, budget):
        val = ZERO
        for i, members in enumerate(assignment):
            for v in members:
                val += weights.get((v, i), ZERO)
        if best is None or (sense == "max" and val > best) or \
                (sense == "min" and val < best):
            best = val
            best_a = assignment
    return best, best_a


# ---------------------------------------------------------------------------
# Direct type computation on actual subgraphs

def _atom_code(n, adj, vmask, bnd, colors):
    """Atomic-sentence truth table, in the shared layout: boundary equalities
    and incidences and sorts, then one block per color (memberships,
    singleton incidences with constants, sing, singleton-vertex flag, and
    pairwise sub/sub/inc with earlier colors)."""
    code = 0
    bit = 0
    b = len(bnd)
    for i in range(b):
        for j in range(i + 1, b):
            if bnd[i] == bnd[j]:
                code |= 1 << bit
            bit += 1
    for i in range(b):
        for j in range(i + 1, b):
            if adj[bnd[i]] >> bnd[j] & 1:
                code |= 1 << bit
            bit += 1
    for i in range(b):
        if vmask >> bnd[i] & 1:
            code |= 1 << bit
        bit += 1
    for j, x in enumerate(colors):
        sing = x.bit_count() == 1
        for i in range(b):
            if x >> bnd[i] & 1:
                code |= 1 << bit
            bit += 1
        for i in range(b):
            if sing and adj[bnd[i]] & x:
                code |= 1 << bit
            bit += 1
        if sing:
            code |= 1 << bit
        bit += 1
        if sing and vmask & x:
            code |= 1 << bit
        bit += 1
        for i in range(j):
            if colors[i] & ~x == 0:
                code |= 1 << bit
            bit += 1
        for i in range(j):
            if x & ~colors[i] == 0:
                code |= 1 << bit
            bit += 1
        for i in range(j):
            ci = colors[i]
            if sing and ci.bit_count() == 1 and adj[ci.bit_length() - 1] & x:
                code |= 1 << bit
            bit += 1
    return code


def brute_type(structure: SigmaStructure, k, budget=1 << 26):
    """Rank-k signature of the structure itself (not a witness), as a
    canonical nested tuple (rank, boundary length, colors, atom code,
    sorted children)."""
    n = len(structure.universe)
    if (1 << n) ** max(k, 1) > budget:
        raise BudgetExceeded(f"(2^{n})^{k} exceeds budget {budget}")
    pos = {e: i for i, e in enumerate(structure.universe)}
    adj = [0] * n
    for a, b in structure.inc:
        adj[pos[a]] |= 1 << pos[b]
        adj[pos[b]] |= 1 << pos[a]
    vmask = sum(1 << pos[e] for e in structure.isV)
    bnd = tuple(pos[p] for p in structure.boundary)
    colors = tuple(sum(1 << pos[e] for e in c) for c in structure.colors)

    def rec(cols, rank):
        code = _atom_code(n, adj, vmask, bnd, cols)
        if rank == 0:
            return (0, len(bnd), len(cols), code, ())
        kids = {rec(cols + (x,), rank - 1) for x in range(1 << n)}
        return (rank, len(bnd), len(cols), code, tuple(sorted(kids)))

    return rec(colors, k)


# ---------------------------------------------------------------------------
# Integer points of sparse equality systems

def integer_points(sys, col_cap=30000):
    """All 0/1 assignments satisfying every row exactly, by backtracking
    over columns in glue order with unit propagation and interval pruning.
    Returns a sorted list of 0/1 tuples indexed by column."""
    ncols = len(sys.variables)
    if ncols > col_cap:
        raise BudgetExceeded(f"{ncols} columns exceed enumeration cap {col_cap}")
    order = sys.column_order()
    rank = {col: i for i, col in enumerate(order)}

    # integerized rows
    rows = []
    for coeffs, rhs in sys.rows:
        denom = 1
        for a in coeffs.values():
            denom = denom * a.denominator // _gcd(denom, a.denominator)
        denom = denom * rhs.denominator // _gcd(denom, rhs.denominator)
        rows.append(({c: int(a * denom) for c, a in coeffs.items()},
                     int(rhs * denom)))

    touching = [[] for _ in range(ncols)]
    for ri, (coeffs, _) in enumerate(rows):
        for c in coeffs:
            touching[c].append(ri)

    nrows = len(rows)
    sum_now = [0] * nrows
    min_add = [0] * nrows
    max_add = [0] * nrows
    unassigned = [0] * nrows
    for ri, (coeffs, _) in enumerate(rows):
        unassigned[ri] = len(coeffs)
        for a in coeffs.values():
            min_add[ri] += min(a, 0)
            max_add[ri] += max(a, 0)

    value = [None] * ncols
    out = []

    def propagate(col0, val0, trail):
        """Assign col0 := val0 and run unit propagation to a fixpoint.
        Returns False on contradiction; the trail records every assignment
        made, so undo stays symmetric either way."""
        queue = [(col0, val0)]
        qi = 0
        while qi < len(queue):
            col, val = queue[qi]
            qi += 1
            if value[col] is not None:
                if value[col] != val:
                    return False
                continue
            value[col] = val
            trail.append(col)
            ok = True
            for ri in touching[col]:
                coeffs, rhs = rows[ri]
                a = coeffs[col]
                sum_now[ri] += a * val
                min_add[ri] -= min(a, 0)
                max_add[ri] -= max(a, 0)
                unassigned[ri] -= 1
                need = rhs - sum_now[ri]
                if not (min_add[ri] <= need <= max_add[ri]):
                    ok = False
                elif unassigned[ri] == 1:
                    coeffs2 = rows[ri][0]
                    last = next(c for c in coeffs2 if value[c] is None)
                    a2 = coeffs2[last]
                    if need % a2 != 0 or need // a2 not in (0, 1):
                        ok = False
                    else:
                        queue.append((last, need // a2))
            if not ok:
                return False
        return True

    def undo(trail):
        while trail:
            col = trail.pop()
            val = value[col]
            value[col] = None
            for ri in touching[col]:
                a = rows[ri][0][col]
                sum_now[ri] -= a * val
                min_add[ri] += min(a, 0)
                max_add[ri] += max(a, 0)
                unassigned[ri] += 1

    def next_unassigned(d):
        while d < ncols and value[order[d]] is not None:
            d += 1
        return d

    # rows with no columns must hold vacuously
    for coeffs, rhs in rows:
        if not coeffs and rhs != 0:
            return []
    if ncols == 0:
        return [()]

    # iterative depth-first search; each frame undoes its own trail when
    # revisited and pops once both values are exhausted
    stack = [[next_unassigned(0), 0, None]]
    if stack[0][0] == ncols:
        return [tuple(value)]
    while stack:
        frame = stack[-1]
        d, tried, trail = frame
        if trail is not None:
            undo(trail)
            frame[2] = None
        if tried == 2:
            stack.pop()
            continue
        frame[1] += 1
        trail = []
        frame[2] = trail
        if propagate(order[d], tried, trail):
            d2 = next_unassigned(d + 1)
            if d2 == ncols:
                out.append(tuple(value))
            else:
                stack.append([d2, 0, None])
    out.sort()
    return out


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a
