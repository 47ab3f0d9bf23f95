"""Maximal end-component decomposition by dynamic programming.

Same tables as the ASR program but without a target vertex, and a forgotten
vertex is only absorbed when it both reaches and is reached from the rest
of the subset.  MECs are then read off rootmost-first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dptables import DpStats, DpTables, compute_tables
from .mdp_core import MdpGraph
from .tree_decomposition import NiceTreeDecomposition, with_singleton_root


@dataclass(frozen=True)
class MecDecomposition:
    mecs: tuple[frozenset[int], ...]
    unassigned: frozenset[int]

    @classmethod
    def build(cls, mecs, unassigned) -> MecDecomposition:
        ordered = sorted((frozenset(m) for m in mecs), key=min)
        return cls(tuple(ordered), frozenset(unassigned))

    def as_set(self) -> frozenset[frozenset[int]]:
        return frozenset(self.mecs)

    def mec_of(self) -> dict[int, int]:
        return {v: i for i, m in enumerate(self.mecs) for v in m}


def is_trivial(g: MdpGraph, component) -> bool:
    """A single vertex without a self-loop does not count as an end-component."""
    if len(component) != 1:
        return False
    (v,) = component
    return not g.has_edge(v, v)


@dataclass
class MecResult:
    decomposition: MecDecomposition
    stats: DpStats = field(default_factory=DpStats)
    tables: DpTables | None = None


def compute_mec_tables(g: MdpGraph, ntd: NiceTreeDecomposition, keep_closures: bool = False) -> DpTables:
    ntd = with_singleton_root(ntd)
    return compute_tables(g, ntd, anchor=None, two_sided=True, keep_closures=keep_closures)


def extract_mecs(tables: DpTables) -> MecDecomposition:
    """Rootmost-first extraction: scan nodes by (depth, id) and bag vertices
    by id, expanding every feasible singleton entry of an unassigned vertex.

    A vertex is only tried at the topmost node whose bag holds it.  Below
    that node some of its out-edges lie outside the subtree, so a feasible
    entry there need not be closed under probabilistic moves in the full graph.
    """
    ntd, g = tables.ntd, tables.g
    depth = ntd.depths()
    assigned = [False] * g.n
    found: list[frozenset[int]] = []
    parent = ntd.parent
    for d in sorted(range(len(ntd)), key=lambda x: (depth[x], x)):
        rules = tables.rules[d]
        above = set(ntd.bags[parent[d]]) if parent[d] != -1 else ()
        for i, v in enumerate(ntd.bags[d]):
            if assigned[v] or v in above or (1 << i) not in rules:
                continue
            comp = tables.expand(d, 1 << i)
            overlap = [u for u in comp if assigned[u]]
            if overlap:
                raise AssertionError(f"extracted set at node {d} overlaps an earlier MEC at {overlap[0]}")
            for u in comp:
                assigned[u] = True
            found.append(frozenset(comp))
    mecs = [c for c in found if not is_trivial(g, c)]
    covered = set().union(*mecs) if mecs else set()
    return MecDecomposition.build(mecs, set(range(g.n)) - covered)


def compute_mec(g: MdpGraph, ntd: NiceTreeDecomposition, keep_tables: bool = False) -> MecResult:
    tables = compute_mec_tables(g, ntd, keep_closures=keep_tables)
    return MecResult(extract_mecs(tables), tables.stats, tables if keep_tables else None)
