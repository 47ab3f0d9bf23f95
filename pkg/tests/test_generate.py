from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdptw.generate import GeneratorConfig, gen_partial_ktree
from mdptw.mdp_core import format_mdp, parse_mdp
from mdptw.tree_decomposition import format_td, validate

DATA = Path(__file__).parent / "data"
GOLDEN = GeneratorConfig(n=100, k=3, seed=1234, p_prob=0.3, edge_density=0.8)


def test_tree_when_k_is_one():
    inst = gen_partial_ktree(GeneratorConfig(n=3, k=1, edge_density=1.0, p_prob=0.0, seed=5))
    g = inst.graph
    assert g.m == 2 and inst.decomposition.width == 1
    assert validate(inst.decomposition, g) is None


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_clique_when_n_is_k_plus_one(k):
    inst = gen_partial_ktree(GeneratorConfig(n=k + 1, k=k, edge_density=1.0, p_prob=0.0, seed=k))
    g = inst.graph
    pairs = {frozenset(e) for e in g.edges}
    assert len(pairs) == g.m == k * (k + 1) // 2
    assert inst.decomposition.width == k


def test_golden_file():
    inst = gen_partial_ktree(GOLDEN)
    assert format_mdp(inst.graph) == (DATA / "gen_n100_k3_s1234.mdp").read_text()
    assert format_td(inst.decomposition, 100) == (DATA / "gen_n100_k3_s1234.td").read_text()
    assert parse_mdp((DATA / "gen_n100_k3_s1234.mdp").read_text())[0] == inst.graph


def test_determinism_and_seed_sensitivity():
    a = gen_partial_ktree(GOLDEN)
    b = gen_partial_ktree(GOLDEN)
    assert a.graph == b.graph and a.decomposition == b.decomposition
    other = gen_partial_ktree(GeneratorConfig(n=100, k=3, seed=1235))
    assert other.graph != a.graph


@pytest.mark.parametrize("kw", [
    dict(n=3, k=3), dict(n=3, k=0), dict(n=5, k=2, p_prob=1.5),
    dict(n=5, k=2, edge_density=0.0), dict(n=5, k=2, two_way=-0.1),
])
def test_invalid_configs(kw):
    with pytest.raises(ValueError):
        gen_partial_ktree(GeneratorConfig(**kw))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(0, 60), st.floats(0, 1), st.floats(0.05, 1), st.integers(0, 2**64 - 1))
def test_generator_invariants(k, extra, p, density, seed):
    inst = gen_partial_ktree(GeneratorConfig(n=k + 1 + extra, k=k, p_prob=p, edge_density=density, seed=seed))
    g = inst.graph
    assert validate(inst.decomposition, g) is None
    assert inst.decomposition.width <= k
    assert all(g.succ[v] for v in g.probabilistic)
    assert sorted(inst.elimination_order) == list(range(g.n))
