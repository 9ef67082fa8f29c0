"""Rank-k type signatures, the witness registry and feasible-set computation.

A rank-k signature of a colored boundaried structure is computed by the
brute-force recursion: the rank-0 signature is the truth table of all
atomic sentences over the boundary constants and color sets; the rank-k
signature adds the deduplicated set of rank-(k-1) signatures of the
structure extended by one additional color set X, over all subsets X of
the universe.  Two structures get equal signatures iff they satisfy the
same set-quantifier sentences of rank at most k over the core atoms.

Atomic sentence layout (the bit order of the codes, least significant
first; b boundary positions, colors appended one block at a time):

  base block     eq(p_i,p_j) for i<j, inc(p_i,p_j) for i<j, isV(p_i)
  color block j  mem(p_i,C_j) for all i; incS(p_i,C_j) for all i;
                 sing(C_j); isVS(C_j);
                 sub(C_i,C_j) for i<j; sub(C_j,C_i) for i<j;
                 incS(C_i,C_j) for i<j

where incS/isVS are the singleton-guarded forms (false unless the set
arguments are singletons).  Color-major blocks make the code of S+X the
code of S with one block appended, which the subset enumeration exploits.

The enumeration over subsets is vectorized with numpy for the two
innermost ranks; everything is interned into a SignatureSpace so that
signatures are small integers with structural equality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, WitnessTooLarge
from .structures import (SigmaStructure, canonical_relabel, compatible,
                         drop_boundary_at, empty_structure, eta,
                         introduce_extend, join)
from .treedecomp import FORGET, INTRODUCE, JOIN, LEAF
from . import logic

_VECTOR_CAP = 22  # table-driven enumeration needs 2^n entries


def base_width(b):
    return b * (b - 1) + b  # eq pairs + inc pairs (b*(b-1)/2 each) + isV bits


def block_width(b, j):
    return 2 * b + 2 + 3 * j


# ---------------------------------------------------------------------------
# Mask form of a structure

@dataclass(frozen=True)
class _Masks:
    n: int
    inc: tuple      # neighbor bitmask per position
    isv: int
    colors: tuple   # bitmask per color
    bnd: tuple      # boundary positions

    def with_color(self, x):
        return _Masks(self.n, self.inc, self.isv, self.colors + (x,), self.bnd)


def to_masks(s: SigmaStructure) -> _Masks:
    pos = {e: i for i, e in enumerate(s.universe)}
    inc = [0] * len(s.universe)
    for a, b in s.inc:
        inc[pos[a]] |= 1 << pos[b]
        inc[pos[b]] |= 1 << pos[a]
    isv = 0
    for e in s.isV:
        isv |= 1 << pos[e]
    colors = []
    for c in s.colors:
        mask = 0
        for e in c:
            mask |= 1 << pos[e]
        colors.append(mask)
    return _Masks(len(s.universe), tuple(inc), isv, tuple(colors),
                  tuple(pos[p] for p in s.boundary))


def _base_code(ms: _Masks) -> int:
    code = 0
    bit = 0
    b = len(ms.bnd)
    for i in range(b):
        for j in range(i + 1, b):
            if ms.bnd[i] == ms.bnd[j]:
                code |= 1 << bit
            bit += 1
    for i in range(b):
        for j in range(i + 1, b):
            if ms.inc[ms.bnd[i]] >> ms.bnd[j] & 1:
                code |= 1 << bit
            bit += 1
    for i in range(b):
        if ms.isv >> ms.bnd[i] & 1:
            code |= 1 << bit
        bit += 1
    return code


def _color_block(ms: _Masks, x, j) -> int:
    """Bits of color x (appended at index j) against boundary and colors 0..j-1."""
    b = len(ms.bnd)
    sing = x.bit_count() == 1
    code = 0
    bit = 0
    for i in range(b):
        if x >> ms.bnd[i] & 1:
            code |= 1 << bit
        bit += 1
    for i in range(b):
        if sing and ms.inc[ms.bnd[i]] & x:
            code |= 1 << bit
        bit += 1
    if sing:
        code |= 1 << bit
    bit += 1
    if sing and ms.isv & x:
        code |= 1 << bit
    bit += 1
    for i in range(j):
        if ms.colors[i] & ~x == 0:
            code |= 1 << bit
        bit += 1
    for i in range(j):
        if x & ~ms.colors[i] == 0:
            code |= 1 << bit
        bit += 1
    for i in range(j):
        ci = ms.colors[i]
        if sing and ci.bit_count() == 1 and ms.inc[(ci.bit_length() - 1)] & x:
            code |= 1 << bit
        bit += 1
    return code


def full_code(ms: _Masks) -> int:
    code = _base_code(ms)
    shift = base_width(len(ms.bnd))
    for j, x in enumerate(ms.colors):
        code |= _color_block(ms, x, j) << shift
        shift += block_width(len(ms.bnd), j)
    return code


# ---------------------------------------------------------------------------
# Vectorized subset enumeration

class _Tables:
    """Per-(n) numpy lookup tables shared across signature calls."""

    def __init__(self, n):
        self.n = n
        self.xs = np.arange(1 << n, dtype=np.int64)
        self.pop = np.bitwise_count(self.xs).astype(np.int64)
        self.sing = self.pop == 1
        elem = np.zeros(1 << n, dtype=np.int64)
        for i in range(n):
            elem[1 << i] = i
        self.elem = elem


def _relocate_block(vec, b, c, c2):
    """Re-place a color block computed in the c-color layout into the wider
    c2-color layout (the three pair families move to stride c2); works on
    ints and numpy arrays alike."""
    head = vec & ((1 << (2 * b + 2)) - 1)
    out = head
    rest = vec >> (2 * b + 2)
    off = 2 * b + 2
    for _ in range(3):
        out = out | ((rest & ((1 << c) - 1)) << off)
        rest >>= c
        off += c2
    return out


def _block_vec(ms: _Masks, t: _Tables, incvec):
    """Color block of every subset X against ms, as an int64 vector."""
    b = len(ms.bnd)
    xs = t.xs
    sing = t.sing
    code = np.zeros(len(xs), dtype=np.int64)
    bit = 0
    for i in range(b):
        code |= ((xs >> ms.bnd[i]) & 1) << bit
        bit += 1
    for i in range(b):
        code |= (sing & ((xs & ms.inc[ms.bnd[i]]) != 0)).astype(np.int64) << bit
        bit += 1
    code |= sing.astype(np.int64) << bit
    bit += 1
    code |= (sing & ((xs & ms.isv) != 0)).astype(np.int64) << bit
    bit += 1
    j = len(ms.colors)
    for i in range(j):
        code |= ((ms.colors[i] & ~xs) == 0).astype(np.int64) << bit
        bit += 1
    for i in range(j):
        code |= ((xs & ~ms.colors[i]) == 0).astype(np.int64) << bit
        bit += 1
    for i in range(j):
        ci = ms.colors[i]
        if ci.bit_count() == 1:
            code |= (sing & ((xs & incvec[ci.bit_length() - 1]) != 0)).astype(np.int64) << bit
        bit += 1
    return code


class SignatureSpace:
    """Interning store for signatures; ids are small ints, equal ids mean
    structurally equal signatures.

    Node children representation varies by rank: rank-0 nodes have no
    children, rank-1 nodes store the sorted tuple of their children's full
    atom codes (skipping per-leaf interning, the hot path), and nodes of
    rank 2 and higher store sorted child id tuples."""

    def __init__(self):
        self.table = {}
        self.nodes = []
        self.memo = {}
        self._tables = {}
        self._trees = {}
        self.stats = {}

    def _intern(self, rank, b, c, code, children):
        key = (rank, b, c, code, children)
        sid = self.table.get(key)
        if sid is None:
            sid = len(self.nodes)
            self.table[key] = sid
            self.nodes.append(key)
        return sid

    def _tabs(self, n):
        t = self._tables.get(n)
        if t is None:
            t = _Tables(n)
            self._tables[n] = t
        return t

    def sig_of_masks(self, ms: _Masks, k: int) -> int:
        key = (ms, k)
        sid = self.memo.get(key)
        if sid is not None:
            return sid
        b, c = len(ms.bnd), len(ms.colors)
        base = full_code(ms)
        skey = (ms.n, k)
        self.stats[skey] = self.stats.get(skey, 0) + 1
        if k == 0:
            sid = self._intern(0, b, c, base, ())
        elif ms.n == 0:
            if k == 1:
                child = full_code(ms.with_color(0))
                sid = self._intern(1, b, c, base, (child,))
            else:
                child = self.sig_of_masks(ms.with_color(0), k - 1)
                sid = self._intern(k, b, c, base, (child,))
        elif k == 1:
            sid = self._rank1(ms, base)
        elif k == 2:
            sid = self._rank2(ms, base)
        elif k == 3 and ms.n <= 11:
            sid = self._rank3(ms, base)
        else:
            kids = sorted({self.sig_of_masks(ms.with_color(x), k - 1)
                           for x in range(1 << ms.n)})
            sid = self._intern(k, b, c, base, tuple(kids))
        self.memo[key] = sid
        return sid

    def _rank1(self, ms, base):
        b, c = len(ms.bnd), len(ms.colors)
        t = self._tabs(ms.n)
        blocks = np.unique(_block_vec(ms, t, ms.inc))
        shift = base_width(b) + sum(block_width(b, j) for j in range(c))
        kids = tuple(base | int(blk) << shift for blk in blocks.tolist())
        return self._intern(1, b, c, base, kids)

    def _rank1_rows(self, code_matrix, key_col, prefixes, b, c_child, child_shift):
        """Rank-1 ids for each row of a leaf-code matrix: rows are deduped in
        bulk (bitset-of-occurring-codes plus the row's block value key_col,
        which determines its prefix) so Python-level interning runs once per
        distinct rank-1 signature.  prefixes[r] is the full code of the
        row's structure; leaf codes are prefixes[r] | code << child_shift."""
        nrows = code_matrix.shape[0]
        uniq, idx = np.unique(code_matrix, return_inverse=True)
        occurs = np.zeros((nrows, len(uniq)), dtype=bool)
        rows = np.repeat(np.arange(nrows), code_matrix.shape[1])
        occurs[rows, idx.ravel()] = True
        packed = np.packbits(occurs, axis=1)
        key = np.concatenate(
            [np.ascontiguousarray(key_col).view(np.uint8).reshape(nrows, 8),
             packed], axis=1)
        urows, inverse = np.unique(key, axis=0, return_inverse=True)
        row_ids = np.empty(len(urows), dtype=np.int64)
        first = np.full(len(urows), -1, dtype=np.int64)
        rev = np.arange(nrows)[::-1]
        first[inverse[rev]] = rev
        for u in range(len(urows)):
            r = int(first[u])
            prefix = prefixes[r]
            kids = tuple(prefix | int(v) << child_shift
                         for v in uniq[occurs[r]].tolist())
            row_ids[u] = self._intern(1, b, c_child, prefix, kids)
        return row_ids[inverse]

    def _rank2(self, ms, base):
        b, c = len(ms.bnd), len(ms.colors)
        n = ms.n
        t = self._tabs(n)
        xs = t.xs
        shift1 = base_width(b) + sum(block_width(b, j) for j in range(c))
        shift2 = shift1 + block_width(b, c)
        block1 = _block_vec(ms, t, ms.inc)
        # X2 block against boundary and original colors, relocated into the
        # (c+1)-layout which has one extra slot per pair family for X1
        base2 = _relocate_block(block1, b, c, c + 1)
        incof = np.where(t.sing, np.array(list(ms.inc) or [0], dtype=np.int64)[t.elem], 0)
        sub_bit = 2 * b + 2 + c
        sup_bit = 2 * b + 2 + (c + 1) + c
        inc_bit = 2 * b + 2 + 2 * (c + 1) + c
        rank1_ids = []
        chunk = max(1, (1 << 22) // (1 << n))
        for lo in range(0, 1 << n, chunk):
            hi = min(lo + chunk, 1 << n)
            x1 = xs[lo:hi, None]
            s1 = t.sing[lo:hi, None]
            i1 = incof[lo:hi, None]
            code2 = (base2[None, :]
                     | (((x1 & ~xs[None, :]) == 0).astype(np.int64) << sub_bit)
                     | (((xs[None, :] & ~x1) == 0).astype(np.int64) << sup_bit)
                     | ((s1 & t.sing[None, :] & ((i1 & xs[None, :]) != 0)).astype(np.int64) << inc_bit))
            prefixes = [base | int(v) << shift1 for v in block1[lo:hi].tolist()]
            rank1_ids.extend(
                self._rank1_rows(code2, block1[lo:hi], prefixes,
                                 b, c + 1, shift2).tolist())
        kids = tuple(sorted(set(rank1_ids)))
        return self._intern(2, b, c, base, kids)

    def _rank3(self, ms, base):
        """Joint enumeration for rank 3: the pairwise subset matrices are
        hoisted out of the outer color loop."""
        b, c = len(ms.bnd), len(ms.colors)
        n = ms.n
        t = self._tabs(n)
        xs = t.xs
        shift1 = base_width(b) + sum(block_width(b, j) for j in range(c))
        shift2 = shift1 + block_width(b, c)
        shift3 = shift2 + block_width(b, c + 1)
        block1 = _block_vec(ms, t, ms.inc)
        base2 = _relocate_block(block1, b, c, c + 1)
        base3 = _relocate_block(block1, b, c, c + 2)
        incof = np.where(t.sing, np.array(list(ms.inc) or [0], dtype=np.int64)[t.elem], 0)
        sub = ((xs[:, None] & ~xs[None, :]) == 0).astype(np.int64)
        incs = (t.sing[:, None] & t.sing[None, :]
                & ((incof[:, None] & xs[None, :]) != 0)).astype(np.int64)
        head = 2 * b + 2
        # X1 bits (pair slot i = c) inside the X2 block (c+1 layout)
        p21 = (sub << head + c) | (sub.T << head + (c + 1) + c) \
            | (incs << head + 2 * (c + 1) + c)
        # X1 bits (slot i = c) and X2 bits (slot i = c+1) inside the X3 block
        p31 = (sub << head + c) | (sub.T << head + (c + 2) + c) \
            | (incs << head + 2 * (c + 2) + c)
        p32 = (sub << head + c + 1) | (sub.T << head + (c + 2) + c + 1) \
            | (incs << head + 2 * (c + 2) + c + 1)
        m23 = base3[None, :] | p32
        rank2_ids = []
        for x1 in range(1 << n):
            code3 = m23 | p31[x1][None, :]
            pref1 = base | int(block1[x1]) << shift1
            pref2 = base2 | p21[x1]
            prefixes = [pref1 | int(v) << shift2 for v in pref2.tolist()]
            rank1_ids = self._rank1_rows(code3, pref2, prefixes, b, c + 2, shift3)
            rid = self._intern(2, b, c + 1, pref1, tuple(sorted(set(rank1_ids.tolist()))))
            self.memo[(ms.with_color(x1), 2)] = rid
            rank2_ids.append(rid)
        return self._intern(3, b, c, base, tuple(sorted(set(rank2_ids))))

    def as_tree(self, sid):
        """Canonical nested-tuple form (children sorted by tree order)."""
        got = self._trees.get(sid)
        if got is None:
            rank, b, c, code, children = self.nodes[sid]
            if rank == 1:
                kids = tuple((0, b, c + 1, code2, ()) for code2 in children)
            else:
                kids = tuple(sorted(self.as_tree(ch) for ch in children))
            got = (rank, b, c, code, kids)
            self._trees[sid] = got
        return got

    def intern_tree(self, tree):
        """Intern an externally computed signature tree; content addressing
        makes the resulting id comparable with internally computed ones."""
        rank, b, c, code, children = tree
        if rank == 0:
            return self._intern(0, b, c, code, ())
        if rank == 1:
            codes = tuple(sorted({ch[3] for ch in children}))
            return self._intern(1, b, c, code, codes)
        ids = tuple(sorted({self.intern_tree(ch) for ch in children}))
        return self._intern(rank, b, c, code, ids)


@dataclass(frozen=True)
class TypeSignature:
    """Handle to an interned signature."""
    space: SignatureSpace
    sid: int

    @property
    def rank(self):
        return self.space.nodes[self.sid][0]

    @property
    def atom_code(self):
        return self.space.nodes[self.sid][3]

    @property
    def children(self):
        rank, b, c, _, children = self.space.nodes[self.sid]
        if rank == 1:
            return tuple(TypeSignature(self.space,
                                       self.space._intern(0, b, c + 1, code, ()))
                         for code in children)
        return tuple(TypeSignature(self.space, ch) for ch in children)

    def as_tree(self):
        return self.space.as_tree(self.sid)

    def __eq__(self, other):
        if not isinstance(other, TypeSignature):
            return NotImplemented
        if self.space is other.space:
            return self.sid == other.sid
        return self.as_tree() == other.as_tree()

    def __hash__(self):
        return hash((id(self.space), self.sid))


def check_budget(n, k, sig_budget):
    if n * max(k, 1) > sig_budget or n > _VECTOR_CAP:
        raise BudgetExceeded(
            f"signature of a {n}-element structure at rank {k} exceeds "
            f"budget {sig_budget} (cost grows as (2^{n})^{k})")


def signature(s: SigmaStructure, k: int, space=None, sig_budget=30) -> TypeSignature:
    """Rank-k signature of a structure (canonical, isomorphism invariant)."""
    check_budget(len(s.universe), k, sig_budget)
    space = space or SignatureSpace()
    ms = to_masks(canonical_relabel(s))
    return TypeSignature(space, space.sig_of_masks(ms, k))


def equivalent(s1: SigmaStructure, s2: SigmaStructure, k: int,
               space=None, sig_budget=30) -> bool:
    """Rank-k elementary equivalence, decided by signature equality
    (checked along the rank ladder with an early exit)."""
    if s1.m != s2.m or len(s1.boundary) != len(s2.boundary):
        return False
    check_budget(len(s1.universe), k, sig_budget)
    check_budget(len(s2.universe), k, sig_budget)
    space = space or SignatureSpace()
    ms1 = to_masks(canonical_relabel(s1))
    ms2 = to_masks(canonical_relabel(s2))
    if ms1 == ms2:
        return True
    return all(space.sig_of_masks(ms1, j) == space.sig_of_masks(ms2, j)
               for j in range(k + 1))


# ---------------------------------------------------------------------------
# Registry

def truncate_tree(tree, j):
    """Rank-j prefix of a signature tree; rank-k signatures determine all
    lower ranks, so equality of truncations is implied by equality at k."""
    rank, b, c, code, children = tree
    if j >= rank:
        return tree
    if j == 0:
        return (0, b, c, code, ())
    return (j, b, c, code, tuple(sorted({truncate_tree(ch, j - 1)
                                         for ch in children})))


class TypeRegistry:
    """Interned types with first-registered witnesses.

    Types are stratified by boundary length.  TypeId 0 is reserved for
    the empty structure's type.  Two structures receive the same TypeId
    iff their rank-k signatures are equal; the registry decides this
    lazily, refining along the signature ladder rank 0, 1, ..., k only
    when two candidates collide at the shallower ranks (rank-k equality
    implies rank-j equality for all j < k, so distinct shallow signatures
    already separate).  Candidates whose canonical mask forms coincide are
    isomorphic and short-circuit without any deep computation.
    """

    def __init__(self, k, m, max_witness=24, sig_budget=30):
        self.k = k
        self.m = m
        self.max_witness = max_witness
        self.sig_budget = sig_budget
        self.space = SignatureSpace()
        self.witnesses = []
        self.bnd_len = []
        self._inner = set()    # trie paths that have been refined
        self._leaves = {}      # trie path -> TypeId
        self._masks_cache = {}
        self._levels = {}      # (structure key, level) -> sig id
        self.empty_type = self.intern(empty_structure(m))

    def __len__(self):
        return len(self.witnesses)

    def witness(self, t) -> SigmaStructure:
        return self.witnesses[t]

    def _masks(self, s: SigmaStructure) -> _Masks:
        key = s.key()
        ms = self._masks_cache.get(key)
        if ms is None:
            ms = to_masks(canonical_relabel(s))
            self._masks_cache[key] = ms
        return ms

    def level_sig(self, s: SigmaStructure, j) -> int:
        key = (s.key(), j)
        sid = self._levels.get(key)
        if sid is None:
            check_budget(len(s.universe), j, self.sig_budget)
            sid = self.space.sig_of_masks(self._masks(s), j)
            self._levels[key] = sid
        return sid

    def sig_id(self, s: SigmaStructure) -> int:
        """Full rank-k signature id (forces the complete computation)."""
        return self.level_sig(s, self.k)

    def intern(self, s: SigmaStructure):
        if len(s.universe) > self.max_witness:
            raise WitnessTooLarge(
                f"candidate witness has {len(s.universe)} elements, "
                f"cap is {self.max_witness}")
        if s.m != self.m:
            raise ValueError(f"structure has {s.m} colors, registry wants {self.m}")
        path = (len(s.boundary), self.level_sig(s, 0))
        j = 0
        while True:
            if path in self._inner:
                j += 1
                path = path + (self.level_sig(s, j),)
                continue
            t = self._leaves.get(path)
            if t is None:
                t = len(self.witnesses)
                self._leaves[path] = t
                self.witnesses.append(s)
                self.bnd_len.append(len(s.boundary))
                return t
            if j == self.k:
                return t
            w = self.witnesses[t]
            if self._masks(s) == self._masks(w):
                return t  # isomorphic, hence equal at every rank
            # split the leaf one level deeper and retry s against it
            del self._leaves[path]
            self._inner.add(path)
            self._leaves[path + (self.level_sig(w, j + 1),)] = t

    def lookup_structure(self, s: SigmaStructure):
        """TypeId of a structure if its type was interned, else None.
        Read-only on the trie."""
        path = (len(s.boundary), self.level_sig(s, 0))
        j = 0
        while path in self._inner:
            j += 1
            path = path + (self.level_sig(s, j),)
        t = self._leaves.get(path)
        if t is None:
            return None
        w = self.witnesses[t]
        if self._masks(s) == self._masks(w):
            return t
        for jj in range(j + 1, self.k + 1):
            if self.level_sig(s, jj) != self.level_sig(w, jj):
                return None
        return t

    def lookup_tree(self, bnd_len, tree):
        """TypeId matching an externally computed rank-k signature tree."""
        if tree[0] != self.k:
            raise ValueError(f"tree has rank {tree[0]}, registry rank {self.k}")
        ids = [self.space.intern_tree(truncate_tree(tree, j))
               for j in range(self.k + 1)]
        path = (bnd_len, ids[0])
        j = 0
        while path in self._inner:
            j += 1
            path = path + (ids[j],)
        t = self._leaves.get(path)
        if t is None:
            return None
        w = self.witnesses[t]
        for jj in range(j + 1, self.k + 1):
            if self.level_sig(w, jj) != ids[jj]:
                return None
        return t

    def type_signature(self, t) -> TypeSignature:
        """Full rank-k signature of an interned type (computed on demand)."""
        return TypeSignature(self.space, self.sig_id(self.witnesses[t]))


def types_compatible(t1, t2, reg: TypeRegistry) -> bool:
    """Whether structures of the two types can be joined; well defined
    because compatibility only reads boundary-induced data shared by all
    members of a type."""
    return compatible(reg.witness(t1), reg.witness(t2))


def rho(f: logic.CoreFormula, t, reg: TypeRegistry, eval_budget=10**8) -> int:
    """1 iff the type's members satisfy f; decided on the witness with its
    colors bound to the free variables."""
    if reg.k < f.qr:
        raise ValueError(f"registry rank {reg.k} below formula rank {f.qr}")
    if reg.m != f.m:
        raise ValueError(f"registry has {reg.m} colors, formula {f.m} frees")
    w = reg.witness(t)
    env = {name: set(w.colors[i]) for i, name in enumerate(f.free_vars)}
    return 1 if logic.evaluate(f, w, env, eval_budget) else 0


# ---------------------------------------------------------------------------
# Feasible sets

@dataclass
class FeasibleSets:
    F: dict = field(default_factory=dict)     # node -> [TypeId]
    Fp: dict = field(default_factory=dict)    # introduce/forget -> [(child, node)]
    Ft: dict = field(default_factory=dict)    # join -> [(left, right, node)]
    nu: set = field(default_factory=set)      # {(TypeId, node, elem, colorIdx)}

    def stats(self, reg=None):
        out = {
            "feasible_sizes": {str(n): len(ts) for n, ts in sorted(self.F.items())},
            "pair_sizes": {str(n): len(ps) for n, ps in sorted(self.Fp.items())},
            "triple_sizes": {str(n): len(ts) for n, ts in sorted(self.Ft.items())},
            "nu_entries": len(self.nu),
        }
        if reg is not None:
            out["registry_size"] = len(reg)
            out["witness_sizes"] = [len(w.universe) for w in reg.witnesses]
        return out

    def dump_json(self, reg=None):
        return json.dumps(self.stats(reg), sort_keys=True, indent=2)


def _fill_nu(fs, reg, node, bag_sorted):
    for beta in fs.F[node]:
        w = reg.witness(beta)
        for d, v in enumerate(bag_sorted):
            p = w.boundary[d]
            for i in range(reg.m):
                if p in w.colors[i]:
                    fs.nu.add((beta, node, v, i))


def compute_feasible(td, structure: SigmaStructure, k, m, max_witness=24,
                     sig_budget=30):
    """Bottom-up feasible types, pairs and triples over a nice decomposition
    of the (uncolored) structure, with on-the-fly type discovery.

    Returns (FeasibleSets, TypeRegistry)."""
    reg = TypeRegistry(k, m, max_witness=max_witness, sig_budget=sig_budget)
    fs = FeasibleSets()
    inc_neighbors = {e: set() for e in structure.universe}
    for a, b in structure.inc:
        inc_neighbors[a].add(b)
        inc_neighbors[b].add(a)

    for node in td.postorder():
        kind = td.kinds[node]
        bag_sorted = eta(td.bags[node])
        seen = {}
        flist = []
        try:
            if kind == LEAF:
                flist = [reg.empty_type]
            elif kind == INTRODUCE:
                child = td.children[node][0]
                v = td.elems[node]
                child_sorted = eta(td.bags[child])
                pos = bag_sorted.index(v) + 1
                adj = {child_sorted.index(u) + 1
                       for u in inc_neighbors[v] if u in td.bags[child]}
                is_vertex = v in structure.isV
                pairs = []
                pair_seen = set()
                for alpha in fs.F[child]:
                    w = reg.witness(alpha)
                    for colorbits in range(1 << m):
                        members = {i for i in range(m) if colorbits >> i & 1}
                        h = introduce_extend(w, pos, adj, is_vertex, members)
                        beta = reg.intern(h)
                        if beta not in seen:
                            seen[beta] = True
                            flist.append(beta)
                        if (alpha, beta) not in pair_seen:
                            pair_seen.add((alpha, beta))
                            pairs.append((alpha, beta))
                fs.Fp[node] = pairs
            elif kind == FORGET:
                child = td.children[node][0]
                v = td.elems[node]
                child_sorted = eta(td.bags[child])
                d = child_sorted.index(v) + 1
                pairs = []
                pair_seen = set()
                for alpha in fs.F[child]:
                    beta = reg.intern(drop_boundary_at(reg.witness(alpha), d))
                    if beta not in seen:
                        seen[beta] = True
                        flist.append(beta)
                    if (alpha, beta) not in pair_seen:
                        pair_seen.add((alpha, beta))
                        pairs.append((alpha, beta))
                fs.Fp[node] = pairs
            elif kind == JOIN:
                left, right = td.children[node]
                triples = []
                for alpha in fs.F[left]:
                    wa = reg.witness(alpha)
                    for beta in fs.F[right]:
                        wb = reg.witness(beta)
                        if not compatible(wa, wb):
                            continue
                        gamma = reg.intern(join(wa, wb))
                        if gamma not in seen:
                            seen[gamma] = True
                            flist.append(gamma)
                        triples.append((alpha, beta, gamma))
                fs.Ft[node] = triples
            else:
                raise ValueError(f"node {node} has no kind; decomposition not nice")
        except (WitnessTooLarge, BudgetExceeded) as exc:
            raise type(exc)(f"at node {node}: {exc.detail}")
        fs.F[node] = flist
        _fill_nu(fs, reg, node, bag_sorted)
    return fs, reg


def mu(fs: FeasibleSets, tops, beta, v, i) -> int:
    """Color membership of v under type beta at v's topmost node."""
    return 1 if (beta, tops[v], v, i) in fs.nu else 0


__all__ = [
    "FeasibleSets", "SignatureSpace", "TypeRegistry", "TypeSignature",
    "compute_feasible", "equivalent", "mu", "rho", "signature",
    "types_compatible", "to_masks", "full_code",
]
