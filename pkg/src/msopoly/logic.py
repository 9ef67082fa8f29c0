"""Set-only MSO formulas over incidence structures.

The surface language is an s-expression grammar with set quantifiers,
sugared element quantifiers (vertex and edge sorted) and the atoms
sub/sing/inc/isV/isE plus the sugar in/eq/adj.  The core language keeps
only set quantifiers and the five core atoms.  Atom semantics on set
terms are singleton guarded: inc(X,Y), isV(X), isE(X) hold only when
the argument sets are singletons whose elements satisfy the relation.

Quantifiers range over all subsets of the universe, mixing vertex and
edge elements freely; formulas are expected to guard with isV/isE.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (DuplicateFree, FormulaSyntaxError, ShadowedVariable,
                     UnboundVariable, UniverseTooLarge)

# ---------------------------------------------------------------------------
# AST

CORE_ATOMS = ("sub", "sing", "inc", "isV", "isE")
SUGAR_ATOMS = ("in", "eq", "adj")
ELEMENT_QUANTIFIERS = ("forallV", "existsV", "forallE", "existsE")
SET_QUANTIFIERS = ("forallSet", "existsSet")
CONNECTIVES = ("and", "or", "not", "imp", "iff")


@dataclass(frozen=True)
class Node:
    """One AST node: a connective, quantifier, atom or boolean constant.

    kind is the operator name from the grammar ("and", "existsSet",
    "sub", "true", ...).  For quantifiers ``var`` holds the bound name
    and args has the single body; atoms put their variable names in
    ``names``.
    """
    kind: str
    args: tuple = ()
    var: str | None = None
    names: tuple = ()

    def is_atom(self):
        return self.kind in CORE_ATOMS or self.kind in SUGAR_ATOMS

    def is_quantifier(self):
        return self.kind in SET_QUANTIFIERS or self.kind in ELEMENT_QUANTIFIERS


TRUE = Node("true")
FALSE = Node("false")


@dataclass(frozen=True)
class SurfaceFormula:
    ast: Node
    free_vars: tuple


@dataclass(frozen=True)
class CoreFormula:
    ast: Node
    free_vars: tuple
    qr: int

    @property
    def m(self):
        return len(self.free_vars)


@dataclass
class Assignment:
    """Maps free variable names to element-id subsets of a universe."""
    values: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.values[name]


# ---------------------------------------------------------------------------
# Parsing

_ATOM_ARITY = {"sub": 2, "sing": 1, "inc": 2, "isV": 1, "isE": 1,
               "in": 2, "eq": 2, "adj": 2}


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            col += 1
            i += 1
            continue
        if ch in "()":
            tokens.append((ch, line, col))
            col += 1
            i += 1
            continue
        j = i
        while j < n and text[j] not in " \t\r\n();":
            j += 1
        tokens.append((text[i:j], line, col))
        col += j - i
        i = j
    tokens.append((None, line, col))  # end marker
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected, tok=None):
        tok = tok or self.peek()
        raise FormulaSyntaxError(tok[1], tok[2], expected)

    def expect(self, value, what):
        tok = self.next()
        if tok[0] != value:
            self.fail(what, tok)

    def name(self, what="a variable name"):
        tok = self.next()
        if tok[0] is None or tok[0] in "()":
            self.fail(what, tok)
        return tok[0]

    def parse_file(self):
        self.expect("(", "'(free ...)' header")
        tok = self.next()
        if tok[0] != "free":
            self.fail("'free'", tok)
        free = []
        while self.peek()[0] != ")":
            if self.peek()[0] is None:
                self.fail("')'")
            nm = self.name()
            if nm in free:
                raise DuplicateFree(nm)
            free.append(nm)
        self.next()  # ')'
        ast = self.parse_formula()
        tok = self.peek()
        if tok[0] is not None:
            self.fail("end of input", tok)
        return SurfaceFormula(ast, tuple(free))

    def parse_formula(self):
        tok = self.next()
        if tok[0] == "true":
            return TRUE
        if tok[0] == "false":
            return FALSE
        if tok[0] != "(":
            self.fail("a formula", tok)
        head = self.next()
        op = head[0]
        if op is None:
            self.fail("an operator", head)
        if op in ("and", "or"):
            args = []
            while self.peek()[0] != ")":
                if self.peek()[0] is None:
                    self.fail("')'")
                args.append(self.parse_formula())
            if len(args) < 2:
                self.fail(f"at least two arguments to '{op}'", head)
            self.next()
            return Node(op, tuple(args))
        if op == "not":
            body = self.parse_formula()
            self.expect(")", "')'")
            return Node("not", (body,))
        if op in ("imp", "iff"):
            a = self.parse_formula()
            b = self.parse_formula()
            self.expect(")", "')'")
            return Node(op, (a, b))
        if op in SET_QUANTIFIERS or op in ELEMENT_QUANTIFIERS:
            var = self.name()
            body = self.parse_formula()
            self.expect(")", "')'")
            return Node(op, (body,), var=var)
        if op in _ATOM_ARITY:
            arity = _ATOM_ARITY[op]
            names = tuple(self.name() for _ in range(arity))
            self.expect(")", "')'")
            return Node(op, names=names)
        self.fail("a connective, quantifier or atom", head)


def _check_scopes(ast, free, bound):
    """Enforce the binding invariants: every occurrence bound exactly once,
    no name both free and bound, no rebinding."""
    if ast.is_quantifier():
        if ast.var in free or ast.var in bound:
            raise ShadowedVariable(ast.var)
        _check_scopes(ast.args[0], free, bound | {ast.var})
        return
    for nm in ast.names:
        if nm not in free and nm not in bound:
            raise UnboundVariable(nm)
    for a in ast.args:
        _check_scopes(a, free, bound)


def parse_formula(text):
    """Parse a formula file (header plus one formula) into a SurfaceFormula."""
    f = _Parser(text).parse_file()
    _check_scopes(f.ast, set(f.free_vars), set())
    return f


# ---------------------------------------------------------------------------
# Translation to the sigma_2 core

class _FreshNames:
    def __init__(self, taken):
        self.taken = set(taken)
        self.counter = 0

    def fresh(self, base):
        while True:
            self.counter += 1
            nm = f"_{base}{self.counter}"
            if nm not in self.taken:
                self.taken.add(nm)
                return nm


def _all_names(ast, acc):
    if ast.var:
        acc.add(ast.var)
    acc.update(ast.names)
    for a in ast.args:
        _all_names(a, acc)


def _conj(parts):
    return parts[0] if len(parts) == 1 else Node("and", tuple(parts))


def _translate(ast, sorts, fresh):
    """Rewrite sigma_1 sugar into core sigma_2 atoms.

    sorts maps element-sugar variables to "V" or "E"; all remaining
    names denote set variables.
    """
    if ast.kind in ("true", "false"):
        return ast
    if ast.kind in CONNECTIVES:
        return Node(ast.kind, tuple(_translate(a, sorts, fresh) for a in ast.args))
    if ast.kind in SET_QUANTIFIERS:
        return Node(ast.kind, (_translate(ast.args[0], sorts, fresh),), var=ast.var)
    if ast.kind in ELEMENT_QUANTIFIERS:
        sort = "V" if ast.kind.endswith("V") else "E"
        body = _translate(ast.args[0], {**sorts, ast.var: sort}, fresh)
        guard = [Node("sing", names=(ast.var,)), Node(f"is{sort}", names=(ast.var,))]
        if ast.kind.startswith("exists"):
            parts = guard + (list(body.args) if body.kind == "and" else [body])
            return Node("existsSet", (Node("and", tuple(parts)),), var=ast.var)
        return Node("forallSet", (Node("imp", (_conj(guard), body)),), var=ast.var)
    if ast.kind in CORE_ATOMS:
        return ast
    if ast.kind == "in":
        return Node("sub", names=ast.names)
    if ast.kind == "eq":
        x, y = ast.names
        return Node("and", (Node("sub", names=(x, y)), Node("sub", names=(y, x))))
    if ast.kind == "adj":
        x, y = ast.names
        z = fresh.fresh("e")
        body = Node("and", (Node("sing", names=(z,)), Node("isE", names=(z,)),
                            Node("inc", names=(x, z)), Node("inc", names=(y, z))))
        return Node("existsSet", (body,), var=z)
    raise AssertionError(f"unhandled node kind {ast.kind}")


def translate_mso2(f: SurfaceFormula) -> SurfaceFormula:
    """Expand element-variable and adjacency sugar into sigma_2 set form.

    Identity on formulas that already use only set quantifiers and core
    atoms.
    """
    taken = set(f.free_vars)
    _all_names(f.ast, taken)
    return SurfaceFormula(_translate(f.ast, {}, _FreshNames(taken)), f.free_vars)


def _qr(ast):
    if ast.kind in SET_QUANTIFIERS:
        return 1 + _qr(ast.args[0])
    if ast.args:
        return max(_qr(a) for a in ast.args)
    return 0


def desugar(f: SurfaceFormula) -> CoreFormula:
    """Translate to the core language and compute the quantifier rank.

    The rank is the set-quantifier nesting depth of the result, which
    upper-bounds the prenex rank and is the rank the type computation
    uses.
    """
    g = translate_mso2(f)
    return CoreFormula(g.ast, g.free_vars, _qr(g.ast))


# ---------------------------------------------------------------------------
# Evaluation

def _formula_size(ast):
    return 1 + sum(_formula_size(a) for a in ast.args)


class _Evaluator:
    """Brute-force model checking with guard-based range restriction.

    Quantified subsets are enumerated over the full powerset unless the
    quantifier body syntactically forces the variable to be a singleton
    (or a vertex/edge singleton), in which case only the matching
    singletons are enumerated; non-matching subsets cannot change the
    quantifier's value.  Results are memoized per (node, relevant env).
    """

    def __init__(self, structure):
        self.pos = {e: i for i, e in enumerate(structure.universe)}
        self.n = len(structure.universe)
        self.full = (1 << self.n) - 1
        self.isv_mask = 0
        for e in structure.isV:
            self.isv_mask |= 1 << self.pos[e]
        self.incmask = [0] * self.n
        for a, b in structure.inc:
            self.incmask[self.pos[a]] |= 1 << self.pos[b]
            self.incmask[self.pos[b]] |= 1 << self.pos[a]
        self.memo = {}
        self.free_cache = {}

    def to_mask(self, elems):
        m = 0
        for e in elems:
            m |= 1 << self.pos[e]
        return m

    def free_names(self, ast):
        key = id(ast)
        got = self.free_cache.get(key)
        if got is None:
            if ast.is_quantifier():
                got = self.free_names(ast.args[0]) - {ast.var}
            else:
                got = set(ast.names)
                for a in ast.args:
                    got |= self.free_names(a)
            self.free_cache[key] = got
        return got

    def _guard_domain(self, var, body):
        """Domain restriction implied by top-level guards on var, or None."""
        parts = body.args if body.kind == "and" else (body,)
        mask = None
        for p in parts:
            if p.kind == "sing" and p.names == (var,):
                mask = self.full if mask is None else mask
            elif p.kind == "isV" and p.names == (var,):
                mask = self.isv_mask if mask is None else mask & self.isv_mask
            elif p.kind == "isE" and p.names == (var,):
                ne = self.full & ~self.isv_mask
                mask = ne if mask is None else mask & ne
        return mask

    def _domain(self, var, body, polarity):
        """Iterable of candidate subset masks for a quantified variable."""
        guard = None
        if polarity == "exists":
            guard = self._guard_domain(var, body)
        elif body.kind == "imp":
            guard = self._guard_domain(var, body.args[0])
        if guard is None:
            return range(1 << self.n)
        return [1 << i for i in range(self.n) if guard >> i & 1]

    def eval(self, ast, env):
        k = ast.kind
        if k == "true":
            return True
        if k == "false":
            return False
        if k == "sub":
            a, b = ast.names
            return env[a] & ~env[b] == 0
        if k == "sing":
            return env[ast.names[0]].bit_count() == 1
        if k == "inc":
            a, b = env[ast.names[0]], env[ast.names[1]]
            if a.bit_count() != 1 or b.bit_count() != 1:
                return False
            return self.incmask[a.bit_length() - 1] & b != 0
        if k == "isV":
            a = env[ast.names[0]]
            return a.bit_count() == 1 and a & self.isv_mask != 0
        if k == "isE":
            a = env[ast.names[0]]
            return a.bit_count() == 1 and a & self.isv_mask == 0
        if k == "not":
            return not self.eval(ast.args[0], env)
        if k == "and":
            return all(self.eval(a, env) for a in ast.args)
        if k == "or":
            return any(self.eval(a, env) for a in ast.args)
        if k == "imp":
            return (not self.eval(ast.args[0], env)) or self.eval(ast.args[1], env)
        if k == "iff":
            return self.eval(ast.args[0], env) == self.eval(ast.args[1], env)
        if k in SET_QUANTIFIERS:
            relevant = tuple(sorted((nm, env[nm]) for nm in self.free_names(ast)))
            key = (id(ast), relevant)
            got = self.memo.get(key)
            if got is None:
                body = ast.args[0]
                want = k == "existsSet"
                got = not want
                for x in self._domain(ast.var, body, "exists" if want else "forall"):
                    env2 = dict(env)
                    env2[ast.var] = x
                    if self.eval(body, env2) == want:
                        got = want
                        break
                self.memo[key] = got
            return got
        raise AssertionError(f"cannot evaluate node kind {k}")


def evaluate(f: CoreFormula, structure, assignment, eval_budget=10**8) -> bool:
    """Decide whether the structure with the given assignment satisfies f.

    Quantifiers range over all subsets of the universe.  Raises
    UniverseTooLarge when 2^|universe| times the formula size exceeds
    the budget.
    """
    n = len(structure.universe)
    size = _formula_size(f.ast)
    if (1 << n) * size > eval_budget:
        raise UniverseTooLarge(
            f"2^{n} * {size} exceeds evaluation budget {eval_budget}")
    ev = _Evaluator(structure)
    values = assignment.values if isinstance(assignment, Assignment) else assignment
    env = {}
    for nm in f.free_vars:
        if nm not in values:
            raise UnboundVariable(nm)
        sub = values[nm]
        if any(e not in ev.pos for e in sub):
            raise UnboundVariable(f"assignment for {nm} leaves the universe")
        env[nm] = ev.to_mask(sub)
    return ev.eval(f.ast, env)
