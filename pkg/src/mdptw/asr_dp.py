"""Almost-sure reachability by dynamic programming over a target-rooted
nice tree decomposition (every bag contains ``s``, the root bag is ``{s}``)."""

from __future__ import annotations

from dataclasses import dataclass, field

from .dptables import DpStats, DpTables, compute_tables, valid_subsets
from .mdp_core import MdpGraph
from .tree_decomposition import DecompositionError, NiceTreeDecomposition


@dataclass
class AsrResult:
    asr_set: frozenset[int]
    stats: DpStats = field(default_factory=DpStats)
    tables: DpTables | None = None


def enumerate_valid_subsets(rtd: NiceTreeDecomposition, d: int, g: MdpGraph, s: int) -> list[frozenset[int]]:
    """Valid subsets of node ``d``'s bag, in ascending bitmask order."""
    bag = rtd.bags[d]
    return [frozenset(bag[i] for i in range(len(bag)) if m >> i & 1)
            for m in valid_subsets(bag, g, required=s)]


def check_rooted(rtd: NiceTreeDecomposition, s: int) -> None:
    if rtd.bags[rtd.root] != (s,):
        raise DecompositionError(f"root bag is {rtd.bags[rtd.root]}, expected ({s},)")
    for d, bag in enumerate(rtd.bags):
        if s not in bag:
            raise DecompositionError(f"target {s} missing from bag of node {d}")


def compute_asr_tables(g: MdpGraph, rtd: NiceTreeDecomposition, s: int,
                       keep_closures: bool = False) -> DpTables:
    check_rooted(rtd, s)
    return compute_tables(g, rtd, anchor=s, two_sided=False, keep_closures=keep_closures)


def compute_asr(g: MdpGraph, rtd: NiceTreeDecomposition, s: int,
                keep_tables: bool = False) -> AsrResult:
    """ASR set of target ``s``, read off the root entry ``{s}``.

    If ``s`` cannot be kept (a probabilistic target with an escaping edge)
    the root entry is infeasible and the result is empty.
    """
    tables = compute_asr_tables(g, rtd, s, keep_closures=keep_tables)
    root = rtd.root
    asr = frozenset(tables.expand(root, 1)) if tables.has(root, 1) else frozenset()
    return AsrResult(asr, tables.stats, tables if keep_tables else None)
