"""Tree decompositions: validation, elimination heuristics, nice form,
target augmentation, separator checks and the PACE ``.td`` format.

Bags are stored as sorted tuples of vertex ids.  In a
:class:`NiceTreeDecomposition` every child id is smaller than its parent id,
so iterating node ids in increasing order is a post-order traversal.
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .mdp_core import MdpGraph


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str  # "tree", "vertex", "edge", "subtree", "nice"
    message: str
    witness: tuple = ()

    def __str__(self) -> str:
        return self.message


@dataclass
class TreeDecomposition:
    bags: list[tuple[int, ...]]
    tree_edges: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.bags = [tuple(sorted(set(b))) for b in self.bags]
        self.tree_edges = [(int(a), int(b)) for a, b in self.tree_edges]

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.bags]
        for a, b in self.tree_edges:
            adj[a].append(b)
            adj[b].append(a)
        for lst in adj:
            lst.sort()
        return adj


class NodeKind(enum.Enum):
    LEAF = "leaf"
    INTRODUCE = "introduce"
    FORGET = "forget"
    JOIN = "join"


class NiceTreeDecomposition:
    """Rooted nice decomposition; node kinds are derived from the bags."""

    __slots__ = ("bags", "children", "root", "kinds", "vertex", "parent")

    def __init__(self, bags: Sequence[Iterable[int]], children: Sequence[Sequence[int]], root: int):
        self.bags = [tuple(sorted(set(b))) for b in bags]
        self.children = [tuple(c) for c in children]
        self.root = root
        n = len(self.bags)
        if len(self.children) != n or not 0 <= root < n:
            raise DecompositionError("malformed nice decomposition")
        self.parent = [-1] * n
        for d, ch in enumerate(self.children):
            for c in ch:
                if not c < d:
                    raise DecompositionError(f"child {c} of node {d} is not numbered before it")
                if self.parent[c] != -1:
                    raise DecompositionError(f"node {c} has two parents")
                self.parent[c] = d
        if root != n - 1:
            raise DecompositionError("root must be the last node")
        for d in range(n - 1):
            if self.parent[d] == -1:
                raise DecompositionError(f"node {d} is disconnected from the root")
        self.kinds: list[NodeKind] = []
        self.vertex: list[int] = []
        for d in range(n):
            kind, v = self._classify(d)
            self.kinds.append(kind)
            self.vertex.append(v)

    def _classify(self, d: int) -> tuple[NodeKind, int]:
        bag, ch = self.bags[d], self.children[d]
        if not ch:
            if len(bag) != 1:
                raise DecompositionError(f"leaf {d} has bag of size {len(bag)}")
            return NodeKind.LEAF, -1
        if len(ch) == 2:
            if self.bags[ch[0]] != bag or self.bags[ch[1]] != bag:
                raise DecompositionError(f"join {d} has children with different bags")
            return NodeKind.JOIN, -1
        if len(ch) != 1:
            raise DecompositionError(f"node {d} has {len(ch)} children")
        cb = set(self.bags[ch[0]])
        b = set(bag)
        if b > cb and len(b - cb) == 1:
            return NodeKind.INTRODUCE, next(iter(b - cb))
        if cb > b and len(cb - b) == 1:
            return NodeKind.FORGET, next(iter(cb - b))
        raise DecompositionError(f"node {d} is neither introduce nor forget")

    def __len__(self) -> int:
        return len(self.bags)

    @property
    def width(self) -> int:
        return max(len(b) for b in self.bags) - 1

    def to_tree_decomposition(self) -> TreeDecomposition:
        edges = [(c, d) for d, ch in enumerate(self.children) for c in ch]
        return TreeDecomposition(list(self.bags), edges)

    def depths(self) -> list[int]:
        depth = [0] * len(self.bags)
        for d in range(len(self.bags) - 2, -1, -1):
            depth[d] = depth[self.parent[d]] + 1
        return depth

    def subtree_vertices(self) -> list[frozenset[int]]:
        """Vertices covered by each node's subtree (quadratic; test helper)."""
        out: list[frozenset[int]] = []
        for d in range(len(self.bags)):
            acc = set(self.bags[d])
            for c in self.children[d]:
                acc |= out[c]
            out.append(frozenset(acc))
        return out


def _renumber(bags: list, children: list[list[int]], root: int) -> NiceTreeDecomposition:
    """Rebuild with post-order ids (children before parents, root last)."""
    order: list[int] = []
    stack = [(root, False)]
    while stack:
        d, done = stack.pop()
        if done:
            order.append(d)
            continue
        stack.append((d, True))
        for c in reversed(children[d]):
            stack.append((c, False))
    new_id = {d: i for i, d in enumerate(order)}
    return NiceTreeDecomposition(
        [bags[d] for d in order],
        [[new_id[c] for c in children[d]] for d in order],
        len(order) - 1,
    )


# -- validation -----------------------------------------------------------

def _tree_violation(num_bags: int, tree_edges: Sequence[tuple[int, int]]) -> Violation | None:
    if num_bags == 0:
        return Violation("tree", "decomposition has no bags")
    if len(tree_edges) != num_bags - 1:
        return Violation("tree", f"{len(tree_edges)} tree edges for {num_bags} bags (need {num_bags - 1})")
    adj: list[list[int]] = [[] for _ in range(num_bags)]
    for a, b in tree_edges:
        if not (0 <= a < num_bags and 0 <= b < num_bags) or a == b:
            return Violation("tree", f"bad tree edge {a} {b}", (a, b))
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    if len(seen) != num_bags:
        missing = min(set(range(num_bags)) - seen)
        return Violation("tree", f"tree is disconnected (bag {missing} unreachable)", (missing,))
    return None


def _subtree_violation(td: TreeDecomposition) -> Violation | None:
    adj = td.adjacency()
    holders: dict[int, list[int]] = {}
    for i, bag in enumerate(td.bags):
        for v in bag:
            holders.setdefault(v, []).append(i)
    for v in sorted(holders):
        hs = holders[v]
        hset = set(hs)
        seen = {hs[0]}
        queue = deque([hs[0]])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y in hset and y not in seen:
                    seen.add(y)
                    queue.append(y)
        if len(seen) != len(hs):
            other = min(hset - seen)
            return Violation("subtree", f"bags containing vertex {v} are not connected "
                                        f"(bags {hs[0]} and {other})", (v, hs[0], other))
    return None


def validate(td: TreeDecomposition | NiceTreeDecomposition, g: MdpGraph) -> Violation | None:
    """Return the first violated decomposition property, or ``None`` if valid."""
    if isinstance(td, NiceTreeDecomposition):
        td = td.to_tree_decomposition()
    for bag in td.bags:
        for v in bag:
            if not 0 <= v < g.n:
                raise DecompositionError(f"bag vertex {v} is not a graph vertex")
    bad = _tree_violation(len(td.bags), td.tree_edges)
    if bad:
        return bad
    holders: list[set[int]] = [set() for _ in range(g.n)]
    for i, bag in enumerate(td.bags):
        for v in bag:
            holders[v].add(i)
    for v in range(g.n):
        if not holders[v]:
            return Violation("vertex", f"vertex {v} uncovered", (v,))
    for u, v in g.edges:
        if u != v and holders[u].isdisjoint(holders[v]):
            return Violation("edge", f"edge {u} {v} uncovered", (u, v))
    return _subtree_violation(td)


def nice_violation(ntd: NiceTreeDecomposition, g: MdpGraph) -> Violation | None:
    """Validity of the underlying decomposition; niceness is enforced on construction."""
    return validate(ntd, g)


# -- heuristics -----------------------------------------------------------

class Strategy(enum.Enum):
    MIN_DEGREE = "min-degree"
    MIN_FILL = "min-fill"


def _undirected(g: MdpGraph) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(g.n)]
    for u, v in g.edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def _fill(adj: list[set[int]], v: int) -> int:
    nb = sorted(adj[v])
    missing = 0
    for i, a in enumerate(nb):
        na = adj[a]
        for b in nb[i + 1:]:
            if b not in na:
                missing += 1
    return missing


def elimination_order(g: MdpGraph, strategy: Strategy | str = Strategy.MIN_FILL) -> list[int]:
    """Greedy elimination order.

    Min-degree ranks by ``(degree, id)``; min-fill by ``(fill, degree, id)``.
    """
    strategy = Strategy(strategy)
    adj = _undirected(g)
    alive = [True] * g.n

    def key(v):
        if strategy is Strategy.MIN_DEGREE:
            return (len(adj[v]), v)
        return (_fill(adj, v), len(adj[v]), v)

    current = {v: key(v) for v in range(g.n)}
    heap = list(current.values())
    heap = [(k, k[-1]) for k in heap]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        k, v = heapq.heappop(heap)
        if not alive[v] or current[v] != k:
            continue
        alive[v] = False
        order.append(v)
        nb = adj[v]
        for a in nb:
            adj[a].discard(v)
        nbl = sorted(nb)
        for i, a in enumerate(nbl):
            for b in nbl[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
        affected = set(nb)
        if strategy is Strategy.MIN_FILL:
            for a in nb:
                affected |= adj[a]
        adj[v] = set()
        for a in affected:
            if alive[a]:
                ka = key(a)
                if ka != current[a]:
                    current[a] = ka
                    heapq.heappush(heap, (ka, a))
    return order


def decompose_from_order(g: MdpGraph, order: Sequence[int]) -> TreeDecomposition:
    """Tree decomposition induced by an elimination order, with subset bags
    contracted away."""
    if sorted(order) != list(range(g.n)):
        raise DecompositionError("elimination order must be a permutation of the vertices")
    if g.n == 0:
        raise DecompositionError("graph has no vertices")
    pos = {v: i for i, v in enumerate(order)}
    adj = _undirected(g)
    bags: list[tuple[int, ...]] = []
    parent: list[int] = []
    for v in order:
        nb = adj[v]
        bags.append(tuple(sorted(nb | {v})))
        parent.append(pos[min(nb, key=pos.__getitem__)] if nb else -1)
        nbl = sorted(nb)
        for a in nbl:
            adj[a].discard(v)
        for i, a in enumerate(nbl):
            for b in nbl[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
        adj[v] = set()
    roots = [i for i, p in enumerate(parent) if p == -1]
    edges = [(i, p) for i, p in enumerate(parent) if p != -1]
    edges += list(zip(roots, roots[1:]))
    return compress(TreeDecomposition(bags, edges))


def heuristic_decompose(g: MdpGraph, strategy: Strategy | str = Strategy.MIN_FILL) -> TreeDecomposition:
    return decompose_from_order(g, elimination_order(g, strategy))


def compress(td: TreeDecomposition) -> TreeDecomposition:
    """Contract tree edges whose endpoint bags are nested (keeps the larger)."""
    n = len(td.bags)
    if n <= 1:
        return TreeDecomposition(list(td.bags), list(td.tree_edges))
    rep = list(range(n))

    def find(x):
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    bag = {i: set(b) for i, b in enumerate(td.bags)}
    for a, b in sorted(td.tree_edges):
        ra, rb = find(a), find(b)
        if bag[ra] <= bag[rb]:
            rep[ra] = rb
        elif bag[rb] <= bag[ra]:
            rep[rb] = ra
    keep = sorted({find(i) for i in range(n)})
    new_id = {r: i for i, r in enumerate(keep)}
    edges = set()
    for a, b in td.tree_edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            edges.add((min(new_id[ra], new_id[rb]), max(new_id[ra], new_id[rb])))
    return TreeDecomposition([tuple(sorted(bag[r])) for r in keep], sorted(edges))


# -- nice decompositions --------------------------------------------------

def _check_structure(td: TreeDecomposition) -> None:
    bad = _tree_violation(len(td.bags), td.tree_edges) or _subtree_violation(td)
    if bad:
        raise DecompositionError(f"invalid tree decomposition: {bad}")


def _drop_empty_bags(td: TreeDecomposition) -> tuple[TreeDecomposition, int]:
    """Contract empty bags into a neighbour; returns the image of bag 0."""
    if all(td.bags):
        return td, 0
    if not any(td.bags):
        raise DecompositionError("all bags are empty")
    adj = [set(a) for a in td.adjacency()]
    alive = [True] * len(td.bags)
    target = list(range(len(td.bags)))
    for i, b in enumerate(td.bags):
        if b:
            continue
        nbrs = sorted(adj[i])
        keeper = nbrs[0] if nbrs else None
        for x in nbrs:
            adj[x].discard(i)
        if keeper is not None:
            for x in nbrs[1:]:
                adj[x].add(keeper)
                adj[keeper].add(x)
        adj[i] = set()
        alive[i] = False
        target[i] = keeper if keeper is not None else i

    def image(i):
        while not alive[i]:
            i = target[i]
        return i

    keep = [i for i in range(len(td.bags)) if alive[i]]
    new_id = {r: j for j, r in enumerate(keep)}
    edges = sorted({(min(new_id[a], new_id[b]), max(new_id[a], new_id[b]))
                    for a in keep for b in adj[a]})
    return TreeDecomposition([td.bags[i] for i in keep], edges), new_id[image(0)]


def make_nice(td: TreeDecomposition) -> NiceTreeDecomposition:
    """Convert a decomposition into nice form of the same width, rooted at
    the image of bag 0."""
    _check_structure(td)
    td, root_bag = _drop_empty_bags(td)
    adj = td.adjacency()
    bags: list[tuple[int, ...]] = []
    children: list[list[int]] = []

    def node(bag, ch):
        bags.append(tuple(sorted(bag)))
        children.append(list(ch))
        return len(bags) - 1

    def leaf_chain(bag):
        vs = sorted(bag)
        top = node([vs[0]], [])
        for i in range(1, len(vs)):
            top = node(vs[:i + 1], [top])
        return top

    def connect(sub, frm, to):
        cur = set(frm)
        for v in sorted(cur - set(to)):
            cur.discard(v)
            sub = node(cur, [sub])
        for v in sorted(set(to) - cur):
            cur.add(v)
            sub = node(cur, [sub])
        return sub

    # iterative post-order over the original tree
    parent = {root_bag: -1}
    order = []
    stack = [root_bag]
    while stack:
        t = stack.pop()
        order.append(t)
        for c in adj[t]:
            if c not in parent:
                parent[c] = t
                stack.append(c)
    kids: dict[int, list[int]] = {t: [] for t in order}
    for t in order:
        if parent[t] != -1:
            kids[parent[t]].append(t)
    built: dict[int, int] = {}
    for t in reversed(order):
        ch = sorted(kids[t])
        bag = td.bags[t]
        if not ch:
            built[t] = leaf_chain(bag)
            continue
        tops = [connect(built.pop(c), td.bags[c], bag) for c in ch]
        top = tops[0]
        for other in tops[1:]:
            top = node(bag, [top, other])
        built[t] = top
    root = built[root_bag]
    return _renumber(bags, children, root)


def with_singleton_root(ntd: NiceTreeDecomposition, keep: int | None = None) -> NiceTreeDecomposition:
    """Extend the root with forget nodes until its bag is a single vertex
    (``keep``, default the smallest root vertex)."""
    root_bag = ntd.bags[ntd.root]
    if len(root_bag) == 1 and (keep is None or root_bag == (keep,)):
        return ntd
    keep = root_bag[0] if keep is None else keep
    if keep not in root_bag:
        raise DecompositionError(f"vertex {keep} not in root bag")
    bags = list(ntd.bags)
    children = [list(c) for c in ntd.children]
    cur = set(root_bag)
    top = ntd.root
    for v in sorted(cur - {keep}):
        cur.discard(v)
        bags.append(tuple(sorted(cur)))
        children.append([top])
        top = len(bags) - 1
    return NiceTreeDecomposition(bags, children, top)


def root_with_target(ntd: NiceTreeDecomposition, s: int) -> NiceTreeDecomposition:
    """Put ``s`` into every bag and re-root at a bag ``{s}``.

    Steps: add ``s`` everywhere; give each two-vertex leaf a child ``{s}``;
    contract single-child nodes whose bag equals their child's; hang the old
    root below a chain of forget nodes ending in ``{s}``.
    """
    n = len(ntd)
    bags = [tuple(sorted(set(b) | {s})) for b in ntd.bags]
    children = [list(c) for c in ntd.children]
    for d in range(n):
        if not children[d] and len(bags[d]) == 2:
            bags.append((s,))
            children.append([])
            children[d] = [len(bags) - 1]
    # contraction to a fixpoint: a node whose single child has the same bag
    # is represented by that child, followed down the chain.
    rep: dict[int, int] = {}

    def resolve(d):
        path = []
        while d not in rep:
            if len(children[d]) == 1 and bags[children[d][0]] == bags[d]:
                path.append(d)
                d = children[d][0]
            else:
                rep[d] = d
                break
        r = rep[d]
        for x in path:
            rep[x] = r
        return r

    root = resolve(ntd.root)
    new_children: dict[int, list[int]] = {}
    stack = [root]
    while stack:
        d = stack.pop()
        cs = [resolve(c) for c in children[d]]
        new_children[d] = cs
        stack.extend(cs)
    all_bags = list(bags)
    all_children = [new_children.get(d, []) for d in range(len(bags))]
    cur = set(bags[root])
    top = root
    for v in sorted(cur - {s}):
        cur.discard(v)
        all_bags.append(tuple(sorted(cur)))
        all_children.append([top])
        top = len(all_bags) - 1
    return _renumber(all_bags, all_children, top)


# -- separators -------------------------------------------------------------

@dataclass
class SeparatorReport:
    components: list[frozenset[int]]
    subtree: list[int]          # representative neighbour bag of the covering subtree
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_separator(td: TreeDecomposition, t_b: int, g: MdpGraph) -> SeparatorReport:
    """Assign each component of ``G \\ B`` to the subtree of ``T \\ {t_b}`` that covers it."""
    sep = set(td.bags[t_b])
    adj = td.adjacency()
    label = [-1] * len(td.bags)
    for start in adj[t_b]:
        label[start] = start
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y != t_b and label[y] == -1:
                    label[y] = start
                    queue.append(y)
    covering: dict[int, set[int]] = {}
    for i, bag in enumerate(td.bags):
        if i == t_b:
            continue
        for v in bag:
            if v not in sep:
                covering.setdefault(v, set()).add(label[i])
    und = _undirected(g)
    seen = set(sep)
    comps, owners, violations = [], [], []
    for v in range(g.n):
        if v in seen:
            continue
        comp = {v}
        seen.add(v)
        queue = deque([v])
        while queue:
            x = queue.popleft()
            for y in und[x]:
                if y not in seen:
                    seen.add(y)
                    comp.add(y)
                    queue.append(y)
        labels = set()
        for x in comp:
            labels |= covering.get(x, set())
        comps.append(frozenset(comp))
        owners.append(min(labels) if labels else -1)
        if len(labels) != 1:
            violations.append(Violation("subtree", f"component containing {min(comp)} "
                                                  f"is covered by {len(labels)} subtrees", (min(comp),)))
    return SeparatorReport(comps, owners, violations)


# -- PACE .td format --------------------------------------------------------

def format_td(td: TreeDecomposition, n: int) -> str:
    """PACE format; bag ids and vertices are written 1-based."""
    lines = [f"s td {len(td.bags)} {td.width + 1} {n}"]
    for i, bag in enumerate(td.bags):
        lines.append(" ".join(["b", str(i + 1)] + [str(v + 1) for v in bag]))
    for a, b in td.tree_edges:
        lines.append(f"{a + 1} {b + 1}")
    return "\n".join(lines) + "\n"


def format_nice_td(ntd: NiceTreeDecomposition, n: int) -> str:
    td = ntd.to_tree_decomposition()
    lines = [format_td(td, n).rstrip("\n")]
    for d, kind in enumerate(ntd.kinds):
        extra = f" {ntd.vertex[d] + 1}" if kind in (NodeKind.INTRODUCE, NodeKind.FORGET) else ""
        lines.append(f"c nice {d + 1} {kind.value}{extra}")
    lines.append(f"c nice-root {ntd.root + 1}")
    return "\n".join(lines) + "\n"


def parse_td(text: str | bytes) -> TreeDecomposition:
    td, _, _ = _parse_td(text)
    return td


def parse_nice_td(text: str | bytes) -> NiceTreeDecomposition:
    td, root, has_nice = _parse_td(text)
    if not has_nice or root is None:
        raise DecompositionError("file carries no nice-decomposition annotations")
    adj = td.adjacency()
    children: list[list[int]] = [[] for _ in td.bags]
    seen = {root}
    stack = [root]
    while stack:
        d = stack.pop()
        for c in adj[d]:
            if c not in seen:
                seen.add(c)
                children[d].append(c)
                stack.append(c)
    return _renumber(td.bags, children, root)


def _parse_td(text: str | bytes) -> tuple[TreeDecomposition, int | None, bool]:
    if isinstance(text, bytes):
        text = text.decode()
    header = None
    bags: dict[int, tuple[int, ...]] = {}
    edges: list[tuple[int, int]] = []
    root = None
    has_nice = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split()
        if not tok:
            continue
        try:
            if tok[0] == "c":
                if len(tok) >= 2 and tok[1] == "nice":
                    has_nice = True
                elif len(tok) == 3 and tok[1] == "nice-root":
                    root = int(tok[2]) - 1
                continue
            if tok[0] == "s":
                if header is not None or len(tok) != 5 or tok[1] != "td":
                    raise DecompositionError(f"line {lineno}: bad solution line")
                header = (int(tok[2]), int(tok[3]), int(tok[4]))
            elif tok[0] == "b":
                if header is None:
                    raise DecompositionError(f"line {lineno}: bag before 's td' line")
                bid = int(tok[1])
                if not 1 <= bid <= header[0] or bid in bags:
                    raise DecompositionError(f"line {lineno}: bad or duplicate bag id {bid}")
                vs = [int(v) - 1 for v in tok[2:]]
                if any(not 0 <= v < header[2] for v in vs):
                    raise DecompositionError(f"line {lineno}: bag vertex out of range")
                bags[bid] = tuple(vs)
            else:
                if header is None or len(tok) != 2:
                    raise DecompositionError(f"line {lineno}: unrecognised line")
                edges.append((int(tok[0]) - 1, int(tok[1]) - 1))
        except ValueError as exc:
            if isinstance(exc, DecompositionError):
                raise
            raise DecompositionError(f"line {lineno}: expected integers") from None
    if header is None:
        raise DecompositionError("missing 's td' line")
    if len(bags) != header[0]:
        raise DecompositionError(f"header declares {header[0]} bags, found {len(bags)}")
    td = TreeDecomposition([bags[i + 1] for i in range(header[0])], edges)
    if td.bags and td.width + 1 != header[1]:
        raise DecompositionError(f"header declares max bag size {header[1]}, found {td.width + 1}")
    return td, root, has_nice
