"""Treewidth-oblivious reference algorithms and brute-force oracles.

``mec_iterative`` and ``asr_fixpoint`` repeatedly strip probabilistic
vertices that can leave the current candidate set; the subset oracle
enumerates every vertex set and is only usable on tiny graphs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .mdp_core import MdpGraph, induced_sccs, tarjan
from .mec_dp import MecDecomposition, is_trivial

ORACLE_MAX_N = 15


@dataclass
class RemovalTrace:
    """Removed vertices, each with the edge that forced the removal."""

    steps: list[tuple[int, tuple[int, int]]] = field(default_factory=list)

    @property
    def removed(self) -> list[int]:
        return [u for u, _ in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class Violation:
    kind: str  # "global", "local", "member"
    message: str
    witness: tuple = ()


def _pick(violating: list[int], scan_order: Sequence[int] | None) -> list[int]:
    if scan_order is None:
        return violating
    rank = {v: i for i, v in enumerate(scan_order)}
    # vertices missing from the order come last, smallest id first
    return [min(violating, key=lambda v: (rank.get(v, len(rank)), v))]


def mec_iterative(g: MdpGraph, scan_order: Sequence[int] | None = None) -> tuple[MecDecomposition, RemovalTrace]:
    """MEC decomposition by repeated SCC computation.

    By default every violating vertex found in a round is removed at once.
    With ``scan_order`` only the first violating vertex in that order is
    removed before recomputing, which is the literal one-at-a-time loop.
    Removing vertices only changes the SCCs that contained them, so each
    round recomputes and rescans just those.
    """
    present = [True] * g.n
    out = [set(s) for s in g.succ]
    trace = RemovalTrace()
    scc = [-1] * g.n
    comps: dict[int, list[int]] = {}
    next_id = 0

    def split(vertices, old=None):
        nonlocal next_id
        if old is None:
            nbrs = out.__getitem__
        else:
            nbrs = lambda x: [y for y in out[x] if scc[y] == old]  # noqa: E731
        fresh = []
        for comp in tarjan(vertices, nbrs, g.n):
            comps[next_id] = comp
            for v in comp:
                scc[v] = next_id
            fresh.append(next_id)
            next_id += 1
        return fresh

    dirty = split(range(g.n))
    while True:
        violating = []
        witness = {}
        for c in dirty:
            for u in comps[c]:
                if g.prob[u]:
                    for v in g.succ[u]:
                        if not present[v] or scc[u] != scc[v]:
                            violating.append(u)
                            witness[u] = (u, v)
                            break
        if not violating:
            break
        violating.sort()
        hit = set()
        for u in _pick(violating, scan_order):
            present[u] = False
            trace.steps.append((u, witness[u]))
            out[u] = set()
            for w in g.pred[u]:
                out[w].discard(u)
            hit.add(scc[u])
        # unhit dirty components still hold their violators for the next round
        dirty = [c for c in dirty if c not in hit and c in comps]
        for c in sorted(hit):
            rest = [v for v in comps.pop(c) if present[v]]
            dirty += split(rest, c)
    mecs = [c for c in comps.values() if not is_trivial(g, c)]
    covered = set().union(*mecs) if mecs else set()
    return MecDecomposition.build(mecs, set(range(g.n)) - covered), trace


def _reach_to(s: int, pred: list[set[int]]) -> set[int]:
    seen = {s}
    queue = deque([s])
    while queue:
        v = queue.popleft()
        for u in pred[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen


def asr_fixpoint(g: MdpGraph, s: int, scan_order: Sequence[int] | None = None) -> tuple[frozenset[int], RemovalTrace]:
    """Largest set whose members reach ``s`` inside it and whose probabilistic
    members never leave it.  Empty if ``s`` itself has to be removed."""
    pred = [set(p) for p in g.pred]
    trace = RemovalTrace()
    while True:
        a = _reach_to(s, pred)
        violating = []
        witness = {}
        for u in sorted(a):
            if g.prob[u]:
                for v in g.succ[u]:
                    if v not in a:
                        violating.append(u)
                        witness[u] = (u, v)
                        break
        if not violating:
            return frozenset(a), trace
        for u in _pick(violating, scan_order):
            trace.steps.append((u, witness[u]))
            if u == s:
                return frozenset(), trace
            for v in g.succ[u]:
                pred[v].discard(u)
            pred[u] = set()


def subset_oracle_asr(g: MdpGraph, s: int) -> frozenset[int]:
    """Union of all vertex sets containing ``s`` that satisfy both conditions."""
    if g.n > ORACLE_MAX_N:
        raise ValueError(f"subset oracle limited to n <= {ORACLE_MAX_N}, got {g.n}")
    succ_mask = [sum(1 << v for v in g.succ[u]) for u in range(g.n)]
    pred_mask = [sum(1 << u for u in g.pred[v]) for v in range(g.n)]
    prob = [u for u in range(g.n) if g.prob[u]]
    sbit = 1 << s
    others = [v for v in range(g.n) if v != s]
    union = 0
    for sub in range(1 << len(others)):
        q = sbit
        for i, v in enumerate(others):
            if sub >> i & 1:
                q |= 1 << v
        if any(q >> u & 1 and succ_mask[u] & ~q for u in prob):
            continue
        reach = frontier = sbit
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= pred_mask[low.bit_length() - 1]
                f ^= low
            frontier = nxt & q & ~reach
            reach |= frontier
        if reach == q:
            union |= q
    return frozenset(v for v in range(g.n) if union >> v & 1)


def check_asr_definition(g: MdpGraph, s: int, candidate: Iterable[int]) -> Violation | None:
    """Check the global and local conditions on ``candidate`` directly."""
    q = set(candidate)
    for v in q:
        if not 0 <= v < g.n:
            return Violation("member", f"vertex {v} is not in the graph", (v,))
    for u in sorted(q):
        if g.prob[u]:
            for v in g.succ[u]:
                if v not in q:
                    return Violation("local", f"probabilistic vertex {u} leaves the set via {u}->{v}", (u, v))
    if not q:
        return None
    if s not in q:
        return Violation("global", f"target {s} is not in the set", (s,))
    reach = {s}
    queue = deque([s])
    while queue:
        v = queue.popleft()
        for u in g.pred[v]:
            if u in q and u not in reach:
                reach.add(u)
                queue.append(u)
    missing = q - reach
    if missing:
        v = min(missing)
        return Violation("global", f"vertex {v} has no path to {s} inside the set", (v,))
    return None


def check_end_component(g: MdpGraph, component: Iterable[int]) -> str | None:
    """Return a reason if ``component`` is not an end-component."""
    comp = set(component)
    if not comp:
        return "empty set"
    if is_trivial(g, comp):
        return f"vertex {min(comp)} has no self-loop"
    for u in comp:
        if g.prob[u]:
            for v in g.succ[u]:
                if v not in comp:
                    return f"probabilistic vertex {u} leaves via {u}->{v}"
    if len(induced_sccs(g, comp)) != 1:
        return "not strongly connected"
    return None


def check_mec_decomposition(g: MdpGraph, dec: MecDecomposition) -> str | None:
    """Oracle-free sanity check: end-components, disjoint, partition of V."""
    seen: set[int] = set()
    for comp in dec.mecs:
        why = check_end_component(g, comp)
        if why:
            return f"MEC {sorted(comp)}: {why}"
        if seen & comp:
            return f"MEC {sorted(comp)} overlaps another"
        seen |= comp
    if seen & dec.unassigned:
        return "unassigned vertices overlap a MEC"
    if seen | dec.unassigned != set(range(g.n)):
        return "decomposition does not cover every vertex"
    return None
