"""Shared instance builders and hypothesis strategies for the test suite."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from mdptw.generate import GeneratorConfig, gen_partial_ktree
from mdptw.mdp_core import MdpGraph


def g0() -> MdpGraph:
    # s=0 with a self-loop; 1 chooses between 0 and 2; 2 (probabilistic) and 3 form a cycle
    return MdpGraph(4, [(0, 0), (1, 0), (1, 2), (2, 3), (3, 2)], [2])


G0_TEXT = """mdp 4 5
P 2
0 0
1 0
1 2
2 3
3 2
"""


def small_config(seed: int, n_max: int = 12, k_max: int = 3) -> GeneratorConfig:
    rng = random.Random(seed)
    k = rng.randint(1, k_max)
    n = rng.randint(k + 1, n_max)
    return GeneratorConfig(n=n, k=k, p_prob=rng.choice([0.2, 0.35, 0.5, 0.7]),
                           edge_density=rng.choice([0.5, 0.8, 1.0]), seed=seed,
                           two_way=rng.choice([0.0, 0.3, 0.6]), self_loops=rng.choice([0.0, 0.1, 0.3]))


def small_instance(seed: int, n_max: int = 12, k_max: int = 3):
    return gen_partial_ktree(small_config(seed, n_max, k_max))


@st.composite
def mdp_graphs(draw, max_n: int = 8):
    """Arbitrary small MDPs (no treewidth bound)."""
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=min(len(pairs), 3 * n)))
    has_out = sorted({u for u, _ in edges})
    prob = draw(st.lists(st.sampled_from(has_out), unique=True)) if has_out else []
    return MdpGraph(n, sorted(edges), prob)


@st.composite
def generated(draw, n_max: int = 12, k_max: int = 3):
    """Partial k-tree instances with their witness decompositions."""
    seed = draw(st.integers(0, 2**32 - 1))
    return small_instance(seed, n_max, k_max)
