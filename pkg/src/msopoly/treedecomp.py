"""Tree decompositions: heuristic and exact search, lifting to incidence
structures, nice-form conversion, validation and the top map.

Decompositions are found by min-fill elimination orderings with an exact
branch-and-bound fallback over orderings; both are desk-scale stand-ins
for linear-time treewidth algorithms.
"""

from __future__ import annotations

from .errors import InvalidDecomposition, NoDecomposition, TdFormatError, TooLarge
from .structures import SigmaStructure, eta

LEAF, INTRODUCE, FORGET, JOIN = "leaf", "introduce", "forget", "join"


class TreeDecomposition:
    """Rooted tree of bags; nice decompositions carry node kinds."""

    def __init__(self):
        self.bags = {}
        self.children = {}
        self.parent = {}
        self.kinds = {}
        self.elems = {}
        self.root = None
        self._next = 0

    def add_node(self, bag, kind=None, elem=None, children=()):
        nid = self._next
        self._next += 1
        self.bags[nid] = frozenset(bag)
        self.children[nid] = list(children)
        self.parent[nid] = None
        self.kinds[nid] = kind
        self.elems[nid] = elem
        for c in children:
            self.parent[c] = nid
        return nid

    def nodes(self):
        return sorted(self.bags)

    def postorder(self):
        out = []
        stack = [(self.root, False)]
        while stack:
            nid, seen = stack.pop()
            if seen:
                out.append(nid)
            else:
                stack.append((nid, True))
                for c in reversed(self.children[nid]):
                    stack.append((c, False))
        return out

    def width(self):
        return max((len(b) for b in self.bags.values()), default=0) - 1

    def is_nice(self):
        return all(self.kinds[n] is not None for n in self.bags)


def _adjacency(structure: SigmaStructure):
    adj = {e: set() for e in structure.universe}
    for a, b in structure.inc:
        adj[a].add(b)
        adj[b].add(a)
    return adj


def _search_adjacency(structure: SigmaStructure):
    """Adjacency used by the decomposition search: the incidence relation,
    plus a clique over the neighborhood of every edge-like element.  For
    incidence structures this mirrors the underlying graph's adjacency, so
    widths agree with the lifted decompositions the pipeline builds (an
    edge element always shares a bag with both endpoints)."""
    adj = _adjacency(structure)
    for e in structure.isE:
        ns = sorted(adj[e])
        for i, u in enumerate(ns):
            for v in ns[i + 1:]:
                adj[u].add(v)
                adj[v].add(u)
    return adj


def _td_from_elimination(universe, adj, order):
    """Bags from an elimination order; node i holds order[i] plus its
    neighbors at elimination time, linked to the node of the earliest
    later-eliminated bag member."""
    work = {e: set(adj[e]) for e in universe}
    position = {e: i for i, e in enumerate(order)}
    bags = []
    for x in order:
        nb = work[x]
        bags.append(frozenset({x} | nb))
        for u in nb:
            for v in nb:
                if u < v:
                    work[u].add(v)
                    work[v].add(u)
        for u in nb:
            work[u].discard(x)
        del work[x]
    td = TreeDecomposition()
    ids = [td.add_node(b) for b in bags]
    for i, x in enumerate(order):
        rest = bags[i] - {x}
        if rest:
            j = min(position[e] for e in rest)
            td.parent[ids[i]] = ids[j]
            td.children[ids[j]].append(ids[i])
    root = ids[-1] if ids else td.add_node(())
    for i in range(len(ids)):
        if td.parent[ids[i]] is None and ids[i] != root:
            td.parent[ids[i]] = root
            td.children[root].append(ids[i])
    td.root = root
    return td


def heuristic_td(structure: SigmaStructure) -> TreeDecomposition:
    """Min-fill elimination ordering; validity-checked before return."""
    adj = _search_adjacency(structure)
    work = {e: set(ns) for e, ns in adj.items()}
    order = []
    while work:
        best, best_fill = None, None
        for e in sorted(work):
            ns = work[e]
            fill = sum(1 for u in ns for v in ns if u < v and v not in work[u])
            if best_fill is None or fill < best_fill:
                best, best_fill = e, fill
        order.append(best)
        ns = work[best]
        for u in ns:
            for v in ns:
                if u < v:
                    work[u].add(v)
                    work[v].add(u)
        for u in ns:
            work[u].discard(best)
        del work[best]
    td = _td_from_elimination(structure.universe, adj, order)
    problems = validate_td(structure, td)
    if problems:
        raise InvalidDecomposition("; ".join(problems))
    return td


def exact_td(structure: SigmaStructure, width, cap=16):
    """Branch-and-bound over elimination orderings for a width <= ``width``
    decomposition, or NoDecomposition.  Universes above ``cap`` raise
    TooLarge."""
    n = len(structure.universe)
    if n > cap:
        raise TooLarge(f"exact search capped at {cap} elements, got {n}")
    if n == 0:
        td = TreeDecomposition()
        td.root = td.add_node(())
        return td
    elems = list(structure.universe)
    pos = {e: i for i, e in enumerate(elems)}
    search_adj = _search_adjacency(structure)
    adj = [0] * n
    for a in elems:
        for b in search_adj[a]:
            adj[pos[a]] |= 1 << pos[b]
    limit = width + 1
    dead = set()

    def search(masks, eliminated, order):
        if eliminated == (1 << n) - 1:
            return True
        if eliminated in dead:
            return False
        for i in range(n):
            if eliminated >> i & 1:
                continue
            nb = masks[i] & ~eliminated
            if nb.bit_count() + 1 > limit:
                continue
            new_masks = list(masks)
            members = [j for j in range(n) if nb >> j & 1]
            for j in members:
                new_masks[j] = (new_masks[j] | nb) & ~(1 << j)
            order.append(elems[i])
            if search(new_masks, eliminated | (1 << i), order):
                return True
            order.pop()
        dead.add(eliminated)
        return False

    order = []
    if not search(adj, 0, order):
        raise NoDecomposition(f"no decomposition of width {width}")
    td = _td_from_elimination(structure.universe, search_adj, order)
    problems = validate_td(structure, td)
    if problems:
        raise InvalidDecomposition("; ".join(problems))
    return td


def best_td(structure, cap=16):
    """Minimum-width decomposition when the exact search fits the cap,
    min-fill otherwise."""
    if len(structure.universe) > cap:
        return heuristic_td(structure)
    guess = heuristic_td(structure)
    for w in range(guess.width() + 1):
        try:
            return exact_td(structure, w, cap=cap)
        except NoDecomposition:
            continue
    return guess


def lift_td_to_incidence(td: TreeDecomposition, graph, edge_map) -> TreeDecomposition:
    """Turn a decomposition of G into one of I(G) by inserting each edge
    element into a chain node above one bag containing both endpoints
    (smallest node id wins); width grows by at most one."""
    assigned = {nid: [] for nid in td.bags}
    for e in sorted(graph.edges):
        u, v = e
        host = min(nid for nid, bag in td.bags.items() if u in bag and v in bag)
        assigned[host].append(edge_map[e])
    out = TreeDecomposition()

    def build(nid):
        child_ids = [build(c) for c in td.children[nid]]
        cur = out.add_node(td.bags[nid], children=child_ids)
        for elem in assigned[nid]:
            cur = out.add_node(td.bags[nid] | {elem}, children=(cur,))
        return cur

    out.root = build(td.root)
    return out


def _prune(td: TreeDecomposition) -> TreeDecomposition:
    """Contract tree edges where one bag contains the other."""
    bags = dict(td.bags)
    children = {n: list(cs) for n, cs in td.children.items()}
    parent = dict(td.parent)
    removed = set()
    changed = True
    while changed:
        changed = False
        for nid in sorted(bags):
            if nid in removed or parent[nid] is None:
                continue
            p = parent[nid]
            if bags[nid] <= bags[p] or bags[p] <= bags[nid]:
                bags[p] = bags[p] | bags[nid]
                children[p].remove(nid)
                for c in children[nid]:
                    parent[c] = p
                    children[p].append(c)
                removed.add(nid)
                changed = True
    out = TreeDecomposition()

    def build(nid):
        ids = [build(c) for c in sorted(children[nid])]
        return out.add_node(bags[nid], children=ids)

    out.root = build(td.root)
    return out


def nicify(td: TreeDecomposition) -> TreeDecomposition:
    """Nice form: empty leaf bags, unit introduce/forget steps, binary joins
    with equal bags, and a forget chain above the old root so the root bag
    is empty."""
    td = _prune(td)
    out = TreeDecomposition()

    def chain_up(nid, source_bag, target_bag):
        """Forget then introduce steps from source_bag to target_bag."""
        cur, bag = nid, set(source_bag)
        for e in sorted(source_bag - target_bag):
            bag.discard(e)
            cur = out.add_node(bag, kind=FORGET, elem=e, children=(cur,))
        for e in sorted(target_bag - source_bag):
            bag.add(e)
            cur = out.add_node(bag, kind=INTRODUCE, elem=e, children=(cur,))
        return cur

    def from_leaf(bag):
        cur = out.add_node((), kind=LEAF)
        return chain_up(cur, frozenset(), bag)

    def build(nid):
        bag = td.bags[nid]
        kids = td.children[nid]
        if not kids:
            return from_leaf(bag)
        tops = [chain_up(build(c), td.bags[c], bag) for c in kids]
        cur = tops[0]
        for other in tops[1:]:
            cur = out.add_node(bag, kind=JOIN, children=(cur, other))
        return cur

    top = build(td.root)
    out.root = chain_up(top, td.bags[td.root], frozenset())
    return out


def validate_td(structure: SigmaStructure, td: TreeDecomposition):
    """All violations of the decomposition axioms (and of niceness when the
    decomposition carries node kinds); empty list means valid."""
    problems = []
    universe = set(structure.universe)
    where = {e: [] for e in universe}
    for nid in td.nodes():
        for e in td.bags[nid]:
            if e not in universe:
                problems.append(f"ForeignElement: {e} in bag {nid}")
            else:
                where[e].append(nid)
    for e in sorted(universe):
        if not where[e]:
            problems.append(f"Uncovered: element {e} in no bag")
    for a, b in sorted(structure.inc):
        if not any(a in td.bags[nid] and b in td.bags[nid] for nid in td.bags):
            problems.append(f"EdgeUncovered: pair ({a},{b}) in no bag")
    # connectivity: nodes holding e must form one subtree
    for e in sorted(universe):
        nodes = set(where[e])
        if len(nodes) <= 1:
            continue
        start = next(iter(nodes))
        seen = {start}
        frontier = [start]
        while frontier:
            nid = frontier.pop()
            for nb in td.children[nid] + ([td.parent[nid]] if td.parent[nid] is not None else []):
                if nb in nodes and nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        if seen != nodes:
            problems.append(f"ConnectivityBroken: element {e}")
    if any(td.kinds[n] is not None for n in td.bags):
        for nid in td.nodes():
            kind = td.kinds[nid]
            kids = td.children[nid]
            bag = td.bags[nid]
            if kind == LEAF:
                if kids or bag:
                    problems.append(f"BadLeaf: node {nid}")
            elif kind == INTRODUCE:
                if len(kids) != 1 or td.elems[nid] not in bag or \
                        td.bags[kids[0]] != bag - {td.elems[nid]}:
                    problems.append(f"BadIntroduce: node {nid}")
            elif kind == FORGET:
                if len(kids) != 1 or td.elems[nid] in bag or \
                        td.bags[kids[0]] != bag | {td.elems[nid]}:
                    problems.append(f"BadForget: node {nid}")
            elif kind == JOIN:
                if len(kids) != 2 or any(td.bags[c] != bag for c in kids):
                    problems.append(f"BadJoin: node {nid}")
            else:
                problems.append(f"MissingKind: node {nid}")
    return problems


def top_map(td: TreeDecomposition):
    """Element -> topmost node containing it; with an empty root bag this is
    the child of the element's forget node."""
    tops = {}
    for nid in td.nodes():
        p = td.parent[nid]
        for e in td.bags[nid]:
            if p is None or e not in td.bags[p]:
                if e in tops:
                    raise InvalidDecomposition(f"element {e} has two top nodes")
                tops[e] = nid
    return tops


def parse_td(text, n_expected=None):
    """Parse the tree decomposition exchange format: an 's td' header,
    'b <id> <elem>*' bag lines and '<id> <id>' edge lines."""
    header = None
    bags = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "s":
            if header is not None:
                raise TdFormatError(f"line {lineno}: duplicate header")
            if len(parts) != 5 or parts[1] != "td":
                raise TdFormatError(f"line {lineno}: expected 's td <bags> <width+1> <n>'")
            header = tuple(int(x) for x in parts[2:])
        elif parts[0] == "b":
            if len(parts) < 2:
                raise TdFormatError(f"line {lineno}: bag without id")
            bid = int(parts[1])
            if bid in bags:
                raise TdFormatError(f"line {lineno}: duplicate bag {bid}")
            bags[bid] = frozenset(int(x) for x in parts[2:])
        else:
            if len(parts) != 2:
                raise TdFormatError(f"line {lineno}: expected '<id> <id>' edge")
            edges.append((int(parts[0]), int(parts[1])))
    if header is None:
        raise TdFormatError("missing 's td' header")
    if header[0] != len(bags):
        raise TdFormatError(f"header announces {header[0]} bags, found {len(bags)}")
    if n_expected is not None and header[2] != n_expected:
        raise TdFormatError(f"header is for {header[2]} vertices, expected {n_expected}")
    adj = {bid: [] for bid in bags}
    for a, b in edges:
        if a not in bags or b not in bags:
            raise TdFormatError(f"edge ({a},{b}) references unknown bag")
        adj[a].append(b)
        adj[b].append(a)
    td = TreeDecomposition()
    root_bid = min(bags)
    ids = {}
    orderq = [(root_bid, None)]
    seen = {root_bid}
    order = []
    while orderq:
        bid, par = orderq.pop(0)
        order.append((bid, par))
        for nb in sorted(adj[bid]):
            if nb not in seen:
                seen.add(nb)
                orderq.append((nb, bid))
    if len(seen) != len(bags):
        raise TdFormatError("bag graph is not connected")
    children_of = {bid: [] for bid in bags}
    for bid, par in order:
        if par is not None:
            children_of[par].append(bid)
    for bid, _ in reversed(order):
        ids[bid] = td.add_node(bags[bid], children=[ids[c] for c in children_of[bid]])
    td.root = ids[root_bid]
    return td


def bag_boundary(td: TreeDecomposition, nid):
    return eta(td.bags[nid])
