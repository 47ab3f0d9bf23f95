"""MDP graphs: representation, text format, target reduction, SCCs and reachability.

Only the graph and the player-1 / probabilistic partition matter for the
qualitative problems handled by this package, so no probabilities are stored.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence


class Owner(enum.IntEnum):
    PLAYER1 = 0
    PROBABILISTIC = 1


class MdpError(ValueError):
    """Raised when a graph violates an MDP invariant."""


class MdpFormatError(MdpError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MdpGraph:
    """Directed graph with a two-way vertex partition.

    Vertices are the integers ``0..n-1``. Instances are immutable; mutation
    is done by building a new graph (see :meth:`without_edges`).
    """

    __slots__ = ("n", "edges", "prob", "succ", "pred", "_edge_set")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]],
                 probabilistic: Iterable[int] = ()):
        if n < 0:
            raise MdpError("vertex count must be non-negative")
        edges = tuple(map(tuple, edges))
        prob = [False] * n
        for v in probabilistic:
            if not 0 <= v < n:
                raise MdpError(f"vertex id {v} out of range 0..{n - 1}")
            prob[v] = True
        succ: list[list[int]] = [[] for _ in range(n)]
        pred: list[list[int]] = [[] for _ in range(n)]
        seen = set(edges)
        if len(seen) != len(edges):
            dup = set()
            for e in edges:
                if e in dup:
                    raise MdpError(f"duplicate edge {e[0]} {e[1]}")
                dup.add(e)
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise MdpError(f"edge {u} {v} references a vertex outside 0..{n - 1}")
            succ[u].append(v)
            pred[v].append(u)
        for v in range(n):
            if prob[v] and not succ[v]:
                raise MdpError(f"probabilistic vertex {v} has no out-edges")
        self.n = n
        self.edges = edges
        self.prob = tuple(prob)
        self.succ = tuple(tuple(s) for s in succ)
        self.pred = tuple(tuple(p) for p in pred)
        self._edge_set = frozenset(seen)

    @property
    def m(self) -> int:
        return len(self.edges)

    def owner(self, v: int) -> Owner:
        return Owner.PROBABILISTIC if self.prob[v] else Owner.PLAYER1

    @property
    def probabilistic(self) -> frozenset[int]:
        return frozenset(v for v in range(self.n) if self.prob[v])

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._edge_set

    def without_edges(self, removed: Iterable[tuple[int, int]]) -> MdpGraph:
        removed = set(removed)
        return MdpGraph(self.n, [e for e in self.edges if e not in removed],
                        self.probabilistic)

    def canonical(self) -> MdpGraph:
        return MdpGraph(self.n, sorted(self.edges), self.probabilistic)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MdpGraph):
            return NotImplemented
        return (self.n == other.n and self.prob == other.prob
                and self._edge_set == other._edge_set)

    def __hash__(self) -> int:
        return hash((self.n, self.prob, self._edge_set))

    def __repr__(self) -> str:
        return f"MdpGraph(n={self.n}, m={self.m}, probabilistic={sorted(self.probabilistic)})"


# -- text format -----------------------------------------------------------

def parse_mdp(text: str | bytes, strict_count: bool = False) -> tuple[MdpGraph, tuple[int, ...] | None]:
    """Parse the line-oriented MDP format.

    Returns the graph and the target ids from a ``t`` line, if there is one.
    The header's edge count is informative unless ``strict_count`` is set.
    """
    if isinstance(text, bytes):
        text = text.decode()
    header = None
    prob: list[int] = []
    edges: list[tuple[int, int]] = []
    edge_lines: list[int] = []
    targets = None
    n = m = 0

    def ids(tokens, lineno):
        try:
            out = [int(t) for t in tokens]
        except ValueError:
            raise MdpFormatError(f"expected integer ids, got {' '.join(tokens)!r}", lineno)
        for v in out:
            if not 0 <= v < n:
                raise MdpFormatError(f"vertex id {v} out of range (n={n})", lineno)
        return out

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if header is None:
            if tok[0] != "mdp" or len(tok) != 3:
                raise MdpFormatError("expected header 'mdp <n> <m>'", lineno)
            try:
                n, m = int(tok[1]), int(tok[2])
            except ValueError:
                raise MdpFormatError("header counts must be integers", lineno)
            if n < 0 or m < 0:
                raise MdpFormatError("header counts must be non-negative", lineno)
            header = lineno
        elif tok[0] == "P":
            if len(tok) != 2:
                raise MdpFormatError("expected 'P <id>'", lineno)
            prob.extend(ids(tok[1:], lineno))
        elif tok[0] == "t":
            if targets is not None:
                raise MdpFormatError("more than one target line", lineno)
            if len(tok) < 2:
                raise MdpFormatError("target line lists no vertices", lineno)
            targets = tuple(ids(tok[1:], lineno))
        elif len(tok) == 2:
            u, v = ids(tok, lineno)
            edges.append((u, v))
            edge_lines.append(lineno)
        else:
            raise MdpFormatError(f"unrecognised line {line!r}", lineno)
    if header is None:
        raise MdpFormatError("missing 'mdp <n> <m>' header")
    if strict_count and len(edges) != m:
        raise MdpFormatError(f"header declares {m} edges, found {len(edges)}")
    seen: dict[tuple[int, int], int] = {}
    for e, lineno in zip(edges, edge_lines):
        if e in seen:
            raise MdpFormatError(f"duplicate edge {e[0]} {e[1]} (first on line {seen[e]})", lineno)
        seen[e] = lineno
    try:
        g = MdpGraph(n, edges, prob)
    except MdpError as exc:
        raise MdpFormatError(str(exc)) from None
    return g, targets


def format_mdp(g: MdpGraph, targets: Iterable[int] | None = None) -> str:
    lines = [f"mdp {g.n} {g.m}"]
    lines += [f"P {v}" for v in range(g.n) if g.prob[v]]
    lines += [f"{u} {v}" for u, v in sorted(g.edges)]
    if targets is not None:
        lines.append("t " + " ".join(str(v) for v in sorted(set(targets))))
    return "\n".join(lines) + "\n"


# -- target reduction -----------------------------------------------------

def reduce_target(g: MdpGraph, targets: Iterable[int]) -> tuple[MdpGraph, int]:
    """Collapse a target set into a fresh player-1 sink ``s = g.n``.

    Every out-edge of a target vertex is replaced by a single edge to ``s``,
    and ``s`` only carries a self-loop.
    """
    tset = set(targets)
    if not tset:
        raise MdpError("target set is empty")
    for t in tset:
        if not 0 <= t < g.n:
            raise MdpError(f"target {t} out of range")
    s = g.n
    edges = [(u, v) for u, v in g.edges if u not in tset]
    edges += [(t, s) for t in sorted(tset)]
    edges.append((s, s))
    return MdpGraph(g.n + 1, edges, g.probabilistic), s


# -- static graph primitives ---------------------------------------------

def tarjan(vertices: Iterable[int], neighbours: Callable[[int], Iterable[int]],
           size: int | None = None) -> list[list[int]]:
    """Strongly connected components, sinks first (reverse topological order).

    ``neighbours(v)`` must only yield vertices from ``vertices``.  Passing
    ``size`` (an upper bound on the ids) switches to list-backed state.
    """
    done = 1 << 62   # low value of vertices whose component is already emitted
    if size is None:
        vertices = list(vertices)
        index = dict.fromkeys(vertices, -1)
        low = dict.fromkeys(vertices, 0)
    else:
        index = [-1] * size
        low = [0] * size
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in vertices:
        if index[root] >= 0:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        work = [(root, iter(neighbours(root)))]
        while work:
            v, it = work[-1]
            for w in it:
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    work.append((w, iter(neighbours(w))))
                    break
                lw = low[w]
                if lw < low[v]:
                    low[v] = lw
            else:
                work.pop()
                lv = low[v]
                if lv == index[v]:
                    comp = [stack.pop()]
                    while comp[-1] != v:
                        comp.append(stack.pop())
                    for w in comp:
                        low[w] = done
                    out.append(comp)
                elif lv < low[work[-1][0]]:
                    low[work[-1][0]] = lv
    return out


@dataclass(frozen=True)
class SccLabeling:
    """SCC ids numbered topologically: an edge between components never goes
    from a higher id to a lower one."""

    scc_id: tuple[int, ...]
    components: tuple[frozenset[int], ...]

    def same(self, u: int, v: int) -> bool:
        return self.scc_id[u] == self.scc_id[v]


def compute_sccs(g: MdpGraph) -> SccLabeling:
    comps = tarjan(range(g.n), g.succ.__getitem__, g.n)
    comps.reverse()
    scc_id = [0] * g.n
    for i, comp in enumerate(comps):
        for v in comp:
            scc_id[v] = i
    return SccLabeling(tuple(scc_id), tuple(frozenset(c) for c in comps))


def reverse_reachable(g: MdpGraph, s: int) -> set[int]:
    """Vertices with a directed path to ``s`` (including ``s``)."""
    seen = {s}
    queue = deque([s])
    while queue:
        v = queue.popleft()
        for u in g.pred[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen


def induced_sccs(g: MdpGraph, vertices: Sequence[int] | set[int]) -> list[list[int]]:
    """SCCs of ``g[vertices]``."""
    vs = set(vertices)
    return tarjan(sorted(vs), lambda v: [w for w in g.succ[v] if w in vs])
