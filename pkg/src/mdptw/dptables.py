"""Bottom-up table computation over a nice tree decomposition.

Shared by the ASR and MEC dynamic programs.  For every node ``d`` and valid
subset of its bag (a bitmask over the bag's sorted vertex order) a table
entry holds

* the closure rows: ``rows[i]`` is the bitmask of bag positions reachable
  from position ``i`` inside the partial solution (reflexive on the subset);
* a back-pointer to the child entry it was built from, so the partial
  solution itself is only materialised on demand.

An absent entry is the infeasible value; every transition that reads an
absent entry writes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .mdp_core import MdpGraph
from .tree_decomposition import DecompositionError, NiceTreeDecomposition, NodeKind

Rows = tuple[int, ...]
Table = dict[int, Rows]


def iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def insert_bit(x: int, p: int) -> int:
    """Open a zero bit at position ``p``."""
    low = (1 << p) - 1
    return (x & low) | ((x >> p) << (p + 1))


def delete_bit(x: int, p: int) -> int:
    """Remove position ``p``, shifting higher bits down."""
    low = (1 << p) - 1
    return (x & low) | ((x >> (p + 1)) << p)


def boolean_closure(rows: Iterable[int], mask: int | None = None) -> Rows:
    """Reflexive-transitive closure of a small boolean matrix of row bitmasks.

    With ``mask`` the relation is taken on those positions only: rows and
    columns outside it come back empty.
    """
    rows = list(rows)
    if mask is None:
        mask = (1 << len(rows)) - 1
    for i in range(len(rows)):
        rows[i] = (rows[i] | (1 << i)) & mask if mask >> i & 1 else 0
    pivots = [(1 << k, k) for k in iter_bits(mask)]
    for bk, k in pivots:
        rk = rows[k]
        for _, i in pivots:
            if rows[i] & bk:
                rows[i] |= rk
    return tuple(rows)


@dataclass
class DpStats:
    nodes: int = 0
    subsets: int = 0
    closures: int = 0

    def as_dict(self) -> dict[str, int]:
        return {"nodes": self.nodes, "subsets": self.subsets, "closures": self.closures}


class PartialSolutionRef(NamedTuple):
    """How a partial solution is assembled from child entries.

    ``kind`` is one of ``"leaf"``, ``"union"``, ``"child-plus"``,
    ``"child-alias"``; ``refs`` are ``(node, mask)`` child entries.
    """

    kind: str
    refs: tuple[tuple[int, int], ...]
    vertex: int | None = None


class _BagInfo:
    """Edge data of one bag in local bit positions."""

    __slots__ = ("bag", "pos", "out", "inn", "prob_mask")

    def __init__(self, bag: tuple[int, ...], g: MdpGraph):
        self.bag = bag
        self.pos = {v: i for i, v in enumerate(bag)}
        out = [0] * len(bag)
        inn = [0] * len(bag)
        prob_mask = 0
        for i, u in enumerate(bag):
            if g.prob[u]:
                prob_mask |= 1 << i
            for j, v in enumerate(bag):
                if i != j and g.has_edge(u, v):
                    out[i] |= 1 << j
                    inn[j] |= 1 << i
        self.out = out
        self.inn = inn
        self.prob_mask = prob_mask

    def is_valid(self, mask: int) -> bool:
        for i in iter_bits(mask & self.prob_mask):
            if self.out[i] & ~mask:
                return False
        return True


def valid_subsets(bag: tuple[int, ...], g: MdpGraph, required: int | None = None) -> list[int]:
    """All locally closed subsets of ``bag`` as ascending bitmasks.

    A subset is valid when every probabilistic member keeps its in-bag
    successors; with ``required`` set, the subset must also contain it.
    """
    info = _BagInfo(bag, g)
    need = 0 if required is None else 1 << info.pos[required]
    return [m for m in range(1 << len(bag)) if m & need == need and info.is_valid(m)]


# -- transitions ------------------------------------------------------------

def transition_leaf(bag: tuple[int, ...], anchor: int | None) -> tuple[Table, dict[int, int]]:
    if anchor is not None:
        if bag != (anchor,):
            raise DecompositionError(f"leaf bag {bag} is not the target singleton ({anchor},)")
        return {1: (1,)}, {1: 0}
    if len(bag) != 1:
        raise DecompositionError(f"leaf bag {bag} is not a singleton")
    return {0: (0,), 1: (1,)}, {0: 0, 1: 0}


def transition_join(t1: Table, t2: Table, stats: DpStats) -> tuple[Table, dict[int, int]]:
    table: Table = {}
    for m, a in t1.items():
        b = t2.get(m)
        stats.subsets += 1
        if b is None:
            continue
        if a == b:
            table[m] = a
        else:
            stats.closures += 1
            table[m] = boolean_closure([x | y for x, y in zip(a, b)], m)
    return table, {m: m for m in table}


def transition_introduce(info: _BagInfo, w: int, child: Table,
                         stats: DpStats) -> tuple[Table, dict[int, int]]:
    p = info.pos[w]
    wbit = 1 << p
    low = wbit - 1
    out_w = info.out[p]
    in_w = info.inn[p]
    # probabilistic bag vertices that have an edge into w
    guard = in_w & info.prob_mask
    w_prob = bool(info.prob_mask & wbit)
    table: Table = {}
    rules: dict[int, int] = {}
    for cm, crows in child.items():
        m = (cm & low) | ((cm >> p) << (p + 1))
        rows = [(r & low) | ((r >> p) << (p + 1)) for r in crows]
        rows.insert(p, 0)
        stats.subsets += 1
        if not m & guard:
            table[m] = tuple(rows)
            rules[m] = cm
        m1 = m | wbit
        if w_prob and out_w & ~m1:
            continue
        stats.subsets += 1
        stats.closures += 1
        pred_w = in_w & m
        reach = wbit
        for i in iter_bits(out_w & m):
            reach |= rows[i]
        if pred_w:
            for i in iter_bits(m):
                if rows[i] & pred_w:
                    rows[i] |= reach
        rows[p] = reach
        table[m1] = tuple(rows)
        rules[m1] = cm
    return table, rules


def transition_forget(child_info: _BagInfo, w: int, child: Table, two_sided: bool,
                      stats: DpStats) -> tuple[Table, dict[int, int]]:
    p = child_info.pos[w]
    pbit = 1 << p
    table: Table = {}
    rules: dict[int, int] = {}
    parents = {delete_bit(cm, p) for cm in child}
    for m in sorted(parents):
        stats.subsets += 1
        cm0 = insert_bit(m, p)
        cm1 = cm0 | pbit
        rows = child.get(cm1)
        chosen = None
        if rows is not None and rows[p] & cm0:
            if not two_sided or any(rows[i] & pbit for i in iter_bits(cm0)):
                chosen = cm1
        if chosen is None:
            rows = child.get(cm0)
            if rows is None:
                continue
            chosen = cm0
        table[m] = tuple(delete_bit(r, p) for i, r in enumerate(rows) if i != p)
        rules[m] = chosen
    return table, rules


# -- driver -------------------------------------------------------------------

@dataclass
class DpTables:
    """Completed tables: rules for every node, closures only if retained."""

    g: MdpGraph
    ntd: NiceTreeDecomposition
    anchor: int | None
    rules: list[dict[int, int]]
    closures: list[Table] | None
    stats: DpStats = field(default_factory=DpStats)

    def mask_of(self, d: int, vertices: Iterable[int]) -> int:
        bag = self.ntd.bags[d]
        mask = 0
        for v in vertices:
            mask |= 1 << bag.index(v)
        return mask

    def vertices_of(self, d: int, mask: int) -> frozenset[int]:
        bag = self.ntd.bags[d]
        return frozenset(bag[i] for i in iter_bits(mask))

    def has(self, d: int, mask: int) -> bool:
        return mask in self.rules[d]

    def rule(self, d: int, mask: int) -> PartialSolutionRef | None:
        if mask not in self.rules[d]:
            return None
        ntd = self.ntd
        kind = ntd.kinds[d]
        child_mask = self.rules[d][mask]
        if kind is NodeKind.LEAF:
            return PartialSolutionRef("leaf", (), ntd.bags[d][0] if mask else None)
        if kind is NodeKind.JOIN:
            c1, c2 = ntd.children[d]
            return PartialSolutionRef("union", ((c1, mask), (c2, mask)))
        c = ntd.children[d][0]
        if kind is NodeKind.INTRODUCE:
            w = ntd.vertex[d]
            if mask >> ntd.bags[d].index(w) & 1:
                return PartialSolutionRef("child-plus", ((c, child_mask),), w)
        return PartialSolutionRef("child-alias", ((c, child_mask),))

    def expand(self, d: int, mask: int) -> set[int]:
        """Materialise the partial solution of entry ``(d, mask)``."""
        if mask not in self.rules[d]:
            raise KeyError((d, mask))
        ntd = self.ntd
        kinds, bags, children, vertex, rules = ntd.kinds, ntd.bags, ntd.children, ntd.vertex, self.rules
        out: set[int] = set()
        stack = [(d, mask)]
        while stack:
            d, m = stack.pop()
            if not m:
                continue
            kind = kinds[d]
            if kind is NodeKind.LEAF:
                out.add(bags[d][0])
            elif kind is NodeKind.JOIN:
                c1, c2 = children[d]
                stack.append((c1, m))
                stack.append((c2, m))
            else:
                if kind is NodeKind.INTRODUCE and m >> bags[d].index(vertex[d]) & 1:
                    out.add(vertex[d])
                stack.append((children[d][0], rules[d][m]))
        return out

    def closure_pairs(self, d: int, mask: int) -> set[tuple[int, int]]:
        if self.closures is None:
            raise RuntimeError("closures were not retained")
        rows = self.closures[d][mask]
        bag = self.ntd.bags[d]
        return {(bag[i], bag[j]) for i, r in enumerate(rows) for j in iter_bits(r)}


def compute_tables(g: MdpGraph, ntd: NiceTreeDecomposition, anchor: int | None,
                   two_sided: bool, keep_closures: bool = False) -> DpTables:
    """Fill the tables bottom-up.

    ``anchor`` is the target vertex that every bag (and subset) contains, or
    ``None`` for the anchor-free MEC variant; ``two_sided`` requires forgotten
    vertices to be both reachable from and reaching the remaining subset.
    """
    stats = DpStats()
    n = len(ntd)
    rules: list[dict[int, int]] = [None] * n  # type: ignore[list-item]
    live: list[Table | None] = [None] * n
    kept: list[Table] | None = [None] * n if keep_closures else None  # type: ignore[list-item]
    kinds, bags, children, vertex = ntd.kinds, ntd.bags, ntd.children, ntd.vertex
    for d in range(n):
        kind = kinds[d]
        stats.nodes += 1
        if kind is NodeKind.LEAF:
            table, rule = transition_leaf(bags[d], anchor)
            stats.subsets += len(table)
        elif kind is NodeKind.JOIN:
            c1, c2 = children[d]
            table, rule = transition_join(live[c1], live[c2], stats)
            live[c1] = live[c2] = None
        elif kind is NodeKind.INTRODUCE:
            c = children[d][0]
            table, rule = transition_introduce(_BagInfo(bags[d], g), vertex[d], live[c], stats)
            live[c] = None
        else:
            c = children[d][0]
            if vertex[d] == anchor:
                raise DecompositionError("the target vertex may not be forgotten")
            table, rule = transition_forget(_BagInfo(bags[c], g), vertex[d], live[c], two_sided, stats)
            live[c] = None
        rules[d] = rule
        if kept is not None:
            kept[d] = table
        live[d] = table
    return DpTables(g, ntd, anchor, rules, kept, stats)
