"""Decremental structures and the decremental ASR / MEC maintenance.

The SCC structure recomputes components only inside the component that
lost an edge; it reports each split as the new components in topological
order together with the edges that stopped being intra-component.  The
reachability structure keeps the condensation of the reachable subgraph
and runs zero-in-degree deletion on it, planting split components in place
of the component they replace.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .basic_algorithms import asr_fixpoint, mec_iterative
from .mdp_core import MdpGraph, tarjan
from .mec_dp import MecDecomposition


class EdgeNotFound(KeyError):
    pass


class ProbabilisticEdgeError(ValueError):
    """Only edges leaving a player-1 vertex may be deleted."""


# -- DAG single-source reachability ---------------------------------------

class DagReachability:
    """Vertices reachable from ``source`` in a DAG under edge deletions.

    Total work over all deletions is linear in the initial edge count:
    an edge is examined once, when its tail dies.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int]], source: int):
        self.n = n
        self.source = source
        self.out: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            self.out[u].add(v)
        if len(tarjan(range(n), self.out.__getitem__, n)) != n or any(u in self.out[u] for u in range(n)):
            raise ValueError("input graph is not acyclic")
        self.edges_examined = 0
        self.alive = [False] * n
        self.alive[source] = True
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self.out[u]:
                self.edges_examined += 1
                if not self.alive[v]:
                    self.alive[v] = True
                    queue.append(v)
        self.indeg = [0] * n
        for u in range(n):
            if self.alive[u]:
                for v in self.out[u]:
                    self.indeg[v] += 1

    @property
    def reachable(self) -> set[int]:
        return {v for v in range(self.n) if self.alive[v]}

    def delete_edge(self, u: int, v: int) -> list[int]:
        """Delete ``u -> v``; returns the vertices that died, in deletion order."""
        if v not in self.out[u]:
            raise EdgeNotFound((u, v))
        self.out[u].discard(v)
        if not (self.alive[u] and self.alive[v]):
            return []
        self.indeg[v] -= 1
        if self.indeg[v] or v == self.source:
            return []
        dead = []
        queue = deque([v])
        self.alive[v] = False
        while queue:
            x = queue.popleft()
            dead.append(x)
            for y in self.out[x]:
                self.edges_examined += 1
                if self.alive[y]:
                    self.indeg[y] -= 1
                    if not self.indeg[y] and y != self.source:
                        self.alive[y] = False
                        queue.append(y)
        return dead


# -- decremental SCC ----------------------------------------------------------

@dataclass(frozen=True)
class SplitEvent:
    old: int
    new: tuple[int, ...]                      # replacement components, topological order
    separating: tuple[tuple[int, int], ...]   # edges that became inter-component


class DecrementalScc:
    """SCC ids under edge deletions (recompute-within-component strategy)."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        self.n = n
        self.out: list[set[int]] = [set() for _ in range(n)]
        self.inn: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            self.out[u].add(v)
            self.inn[v].add(u)
        comps = tarjan(range(n), self.out.__getitem__, n)
        comps.reverse()
        self.comp = [0] * n
        self.members: dict[int, set[int]] = {}
        for i, c in enumerate(comps):
            self.members[i] = set(c)
            for v in c:
                self.comp[v] = i
        self._next = len(comps)
        self.work = 0

    def scc_id(self, v: int) -> int:
        return self.comp[v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.out[u]

    def components(self) -> list[frozenset[int]]:
        return [frozenset(m) for m in self.members.values()]

    def delete_edge(self, u: int, v: int) -> list[SplitEvent]:
        if v not in self.out[u]:
            raise EdgeNotFound((u, v))
        self.out[u].discard(v)
        self.inn[v].discard(u)
        c = self.comp[u]
        if self.comp[v] != c or u == v:
            return []
        mem = self.members[c]
        comp, out = self.comp, self.out
        if self._still_reaches(u, v, c):
            return []
        parts = tarjan(sorted(mem), lambda x: [y for y in out[x] if comp[y] == c])
        self.work += len(mem) + sum(len(out[x]) for x in mem)
        if len(parts) == 1:
            return []
        parts.reverse()
        new_ids = []
        del self.members[c]
        for part in parts:
            nid = self._next
            self._next += 1
            self.members[nid] = set(part)
            for x in part:
                comp[x] = nid
            new_ids.append(nid)
        separating = tuple((x, y) for x in sorted(mem) for y in sorted(out[x])
                           if y in mem and comp[y] != comp[x])
        return [SplitEvent(c, tuple(new_ids), separating)]

    def _still_reaches(self, u: int, v: int, c: int) -> bool:
        # u still reaching v means every path through the deleted edge can be
        # rerouted, so the component survives; searched with early exit
        comp, out = self.comp, self.out
        seen = {u}
        stack = [u]
        while stack:
            x = stack.pop()
            for y in out[x]:
                self.work += 1
                if y == v:
                    return True
                if y not in seen and comp[y] == c:
                    seen.add(y)
                    stack.append(y)
        return False


# -- decremental single-source reachability --------------------------------

class DecrementalReachability:
    """Vertices reachable from ``source`` under edge deletions, kept as a
    condensation DAG with zero-in-degree deletion."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]], source: int):
        self.scc = DecrementalScc(n, edges)
        self.source = source
        self.edges_examined = 0
        scc = self.scc
        comp = scc.comp
        self.alive: dict[int, bool] = {c: False for c in scc.members}
        start = comp[source]
        self.alive[start] = True
        queue = deque([start])
        while queue:
            c = queue.popleft()
            for x in scc.members[c]:
                for y in scc.out[x]:
                    if not self.alive[comp[y]]:
                        self.alive[comp[y]] = True
                        queue.append(comp[y])
        self.indeg: dict[int, int] = {c: 0 for c in scc.members}
        for c, mem in scc.members.items():
            if self.alive[c]:
                for x in mem:
                    for y in scc.out[x]:
                        if comp[y] != c:
                            self.indeg[comp[y]] += 1
        self.reachable: set[int] = {v for v in range(n) if self.alive[comp[v]]}

    def has_edge(self, u: int, v: int) -> bool:
        return self.scc.has_edge(u, v)

    def delete_edge(self, u: int, v: int) -> list[int]:
        """Delete ``u -> v``; returns the vertices that became unreachable."""
        scc = self.scc
        cu, cv = scc.comp[u], scc.comp[v]
        events = scc.delete_edge(u, v)
        doomed: list[int] = []
        if cu != cv:
            if self.alive[cu] and self.alive[cv]:
                self.indeg[cv] -= 1
                if not self.indeg[cv] and cv != scc.comp[self.source]:
                    doomed.append(cv)
        for ev in events:
            was_alive = self.alive.pop(ev.old)
            self.indeg.pop(ev.old)
            for c in ev.new:
                self.alive[c] = was_alive
                self.indeg[c] = 0
            if was_alive:
                doomed.extend(self._plant(ev))
        return self._kill(doomed)

    def _plant(self, ev: SplitEvent) -> list[int]:
        scc = self.scc
        comp = scc.comp
        for c in ev.new:
            for y in scc.members[c]:
                for x in scc.inn[y]:
                    cx = comp[x]
                    if cx != c and self.alive[cx]:
                        self.indeg[c] += 1
        src = comp[self.source]
        return [c for c in ev.new if not self.indeg[c] and c != src]

    def _kill(self, doomed: list[int]) -> list[int]:
        scc = self.scc
        comp = scc.comp
        src = comp[self.source]
        dead: list[int] = []
        queue = deque()
        for c in doomed:
            if self.alive[c]:
                self.alive[c] = False
                queue.append(c)
        while queue:
            c = queue.popleft()
            for x in sorted(scc.members[c]):
                self.reachable.discard(x)
                dead.append(x)
                for y in scc.out[x]:
                    self.edges_examined += 1
                    cy = comp[y]
                    if cy != c and self.alive[cy]:
                        self.indeg[cy] -= 1
                        if not self.indeg[cy] and cy != src:
                            self.alive[cy] = False
                            queue.append(cy)
        return dead


class ReverseReachability:
    """Vertices with a path to ``s``, maintained over the reversed graph."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]], s: int):
        self._inner = DecrementalReachability(n, [(v, u) for u, v in edges], s)

    @property
    def reachable(self) -> set[int]:
        return self._inner.reachable

    @property
    def edges_examined(self) -> int:
        return self._inner.edges_examined

    @property
    def scc_work(self) -> int:
        return self._inner.scc.work

    def has_edge(self, u: int, v: int) -> bool:
        return self._inner.has_edge(v, u)

    def delete_edge(self, u: int, v: int) -> list[int]:
        return self._inner.delete_edge(v, u)


# -- decremental ASR and MEC ------------------------------------------------

@dataclass
class DecrementalStats:
    deletions: int = 0
    edges_inspected: int = 0   # local-condition re-checks
    removals: int = 0

    def as_dict(self) -> dict[str, int]:
        return {"deletions": self.deletions, "edges_inspected": self.edges_inspected,
                "removals": self.removals}


class _PlayerOneDeletions:
    def __init__(self, g: MdpGraph):
        self.n = g.n
        self.prob = g.prob
        self.succ = [set(x) for x in g.succ]
        self.pred = [set(x) for x in g.pred]
        self.stats = DecrementalStats()

    def _take(self, u: int, v: int) -> None:
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise EdgeNotFound((u, v))
        if self.prob[u]:
            raise ProbabilisticEdgeError(f"edge {u}->{v} leaves probabilistic vertex {u}")
        if v not in self.succ[u]:
            raise EdgeNotFound((u, v))
        self.succ[u].discard(v)
        self.pred[v].discard(u)
        self.stats.deletions += 1

    def current_graph(self) -> MdpGraph:
        edges = [(u, v) for u in range(self.n) for v in sorted(self.succ[u])]
        return MdpGraph(self.n, edges, [v for v in range(self.n) if self.prob[v]])


class DecrementalAsr(_PlayerOneDeletions):
    """ASR set of target ``s`` under player-1 edge deletions."""

    def __init__(self, g: MdpGraph, s: int):
        super().__init__(g)
        self.s = s
        a, trace = asr_fixpoint(g, s)
        self.removed: set[int] = set(trace.removed)
        self.empty = not a
        kept = [(u, v) for u, v in g.edges if u not in self.removed and v not in self.removed]
        self.reach = ReverseReachability(g.n, kept, s)
        if not self.empty and frozenset(self.reach.reachable) != a:
            raise AssertionError("reachability structure disagrees with the initial ASR set")

    @property
    def asr_set(self) -> frozenset[int]:
        return frozenset() if self.empty else frozenset(self.reach.reachable)

    @property
    def edges_inspected(self) -> int:
        """Local re-checks plus condensation edges examined on deaths."""
        return self.stats.edges_inspected + self.reach.edges_examined

    def delete_player1_edge(self, u: int, v: int) -> list[int]:
        """Delete ``u -> v`` and restore the ASR set; returns the vertices that left it."""
        self._take(u, v)
        if self.empty or u in self.removed or v in self.removed:
            return []
        return self._settle(self.reach.delete_edge(u, v))

    def _settle(self, dead: list[int]) -> list[int]:
        left = list(dead)
        queue = deque(dead)
        reach = self.reach
        while queue:
            y = queue.popleft()
            for x in self.pred[y]:
                self.stats.edges_inspected += 1
                if not self.prob[x] or x in self.removed or x not in reach.reachable:
                    continue
                if x == self.s:
                    self.empty = True
                    gone = sorted(reach.reachable)
                    return left + gone
                self.removed.add(x)
                self.stats.removals += 1
                died = []
                for z in list(self.succ[x]):
                    if reach.has_edge(x, z):
                        died += reach.delete_edge(x, z)
                for z in list(self.pred[x]):
                    if reach.has_edge(z, x):
                        died += reach.delete_edge(z, x)
                left += died
                queue.extend(died)
        return left


class DecrementalMec(_PlayerOneDeletions):
    """MEC decomposition under player-1 edge deletions."""

    def __init__(self, g: MdpGraph):
        super().__init__(g)
        _, trace = mec_iterative(g)
        self.removed: set[int] = set(trace.removed)
        kept = [(u, v) for u, v in g.edges if u not in self.removed and v not in self.removed]
        self.scc = DecrementalScc(g.n, kept)

    def decomposition(self) -> MecDecomposition:
        mecs = []
        for mem in self.scc.members.values():
            if len(mem) > 1:
                mecs.append(mem)
            else:
                (v,) = mem
                if v not in self.removed and v in self.succ[v]:
                    mecs.append(mem)
        covered = set().union(*mecs) if mecs else set()
        return MecDecomposition.build(mecs, set(range(self.n)) - covered)

    def delete_player1_edge(self, u: int, v: int) -> list[int]:
        """Delete ``u -> v``; returns the probabilistic vertices removed as a result."""
        self._take(u, v)
        if u in self.removed or v in self.removed:
            return []
        queue = deque()
        for ev in self.scc.delete_edge(u, v):
            queue.extend(ev.separating)
        return self._settle(queue)

    def _settle(self, queue: deque) -> list[int]:
        removed_now = []
        scc = self.scc
        comp = scc.comp
        while queue:
            x, y = queue.popleft()
            self.stats.edges_inspected += 1
            if not self.prob[x] or x in self.removed:
                continue
            if y not in self.removed and comp[x] == comp[y]:
                continue
            self.removed.add(x)
            self.stats.removals += 1
            removed_now.append(x)
            for z in self.pred[x]:
                if self.prob[z] and z not in self.removed:
                    queue.append((z, x))
            for z in list(self.succ[x]):
                if scc.has_edge(x, z):
                    for ev in scc.delete_edge(x, z):
                        queue.extend(ev.separating)
            for z in list(self.pred[x]):
                if scc.has_edge(z, x):
                    for ev in scc.delete_edge(z, x):
                        queue.extend(ev.separating)
        return removed_now


def refines(after: MecDecomposition, before: MecDecomposition) -> bool:
    """Every MEC of ``after`` lies inside some MEC of ``before``."""
    owner = before.mec_of()
    for m in after.mecs:
        ids = {owner.get(v, -1) for v in m}
        if len(ids) != 1 or -1 in ids:
            return False
    return True


# -- functional entry points ------------------------------------------------

def dag_sssr_init(n: int, edges: Iterable[tuple[int, int]], source: int) -> DagReachability:
    return DagReachability(n, edges, source)


def dag_sssr_delete(dr: DagReachability, edge: tuple[int, int]) -> list[int]:
    return dr.delete_edge(*edge)


def scc_delete_edge(ds: DecrementalScc, edge: tuple[int, int]) -> list[SplitEvent]:
    return ds.delete_edge(*edge)


def decremental_reachability(g: MdpGraph, s: int) -> ReverseReachability:
    return ReverseReachability(g.n, g.edges, s)


def decremental_asr(g: MdpGraph, s: int) -> DecrementalAsr:
    return DecrementalAsr(g, s)


def decremental_mec(g: MdpGraph) -> DecrementalMec:
    return DecrementalMec(g)
