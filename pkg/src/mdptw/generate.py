"""Seeded random MDPs of bounded treewidth (partial k-trees) with their
witness decompositions."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .mdp_core import MdpGraph
from .tree_decomposition import TreeDecomposition


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    k: int
    p_prob: float = 0.3
    edge_density: float = 0.8
    seed: int = 0
    # extras beyond the basic model: chance that a kept edge is kept in both
    # directions, and chance that a vertex gets a self-loop
    two_way: float = 0.0
    self_loops: float = 0.0

    def check(self) -> None:
        if not 1 <= self.k < self.n:
            raise ValueError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if not 0.0 <= self.p_prob <= 1.0:
            raise ValueError("p_prob must lie in [0, 1]")
        if not 0.0 < self.edge_density <= 1.0:
            raise ValueError("edge_density must lie in (0, 1]")
        if not (0.0 <= self.two_way <= 1.0 and 0.0 <= self.self_loops <= 1.0):
            raise ValueError("two_way and self_loops must lie in [0, 1]")


@dataclass
class GeneratedInstance:
    graph: MdpGraph
    decomposition: TreeDecomposition
    elimination_order: list[int]


def gen_partial_ktree(cfg: GeneratorConfig) -> GeneratedInstance:
    """Build a k-tree by clique extension, thin it, orient it, assign owners.

    The construction order reversed is a perfect elimination order of the
    k-tree, so its bags (one per added vertex plus the seed clique) form a
    width-k decomposition of every subgraph.
    """
    cfg.check()
    rng = random.Random(cfg.seed)
    n, k = cfg.n, cfg.k
    labels = list(range(n))
    rng.shuffle(labels)
    seed_clique = labels[: k + 1]
    bags = [tuple(sorted(seed_clique))]
    tree_edges: list[tuple[int, int]] = []
    cliques: list[tuple[tuple[int, ...], int]] = []  # (k-clique, bag holding it)
    for i in range(k + 1):
        cliques.append((tuple(sorted(seed_clique[:i] + seed_clique[i + 1:])), 0))
    und: list[tuple[int, int]] = [(a, b) for i, a in enumerate(seed_clique) for b in seed_clique[i + 1:]]
    for v in labels[k + 1:]:
        base, at = cliques[rng.randrange(len(cliques))]
        bag_id = len(bags)
        bags.append(tuple(sorted(base + (v,))))
        tree_edges.append((at, bag_id))
        for u in base:
            und.append((u, v))
        for i in range(k):
            cliques.append((tuple(sorted(base[:i] + base[i + 1:] + (v,))), bag_id))

    prob = [rng.random() < cfg.p_prob for _ in range(n)]
    edges: set[tuple[int, int]] = set()
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for a, b in und:
        nbrs[a].append(b)
        nbrs[b].append(a)
        if rng.random() >= cfg.edge_density:
            continue
        if rng.random() < 0.5:
            a, b = b, a
        edges.add((a, b))
        if rng.random() < cfg.two_way:
            edges.add((b, a))
    for v in range(n):
        if rng.random() < cfg.self_loops:
            edges.add((v, v))
    out_deg = [0] * n
    for a, _ in edges:
        out_deg[a] += 1
    for v in range(n):
        if prob[v] and out_deg[v] == 0:
            edges.add((v, rng.choice(sorted(nbrs[v]))))
            out_deg[v] += 1
    graph = MdpGraph(n, sorted(edges), [v for v in range(n) if prob[v]])
    order = list(reversed(labels[k + 1:])) + seed_clique
    return GeneratedInstance(graph, TreeDecomposition(bags, tree_edges), order)
