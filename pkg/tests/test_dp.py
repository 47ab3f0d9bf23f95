import random

import pytest
from hypothesis import given, settings

from _instances import g0, generated, small_instance
from mdptw.asr_dp import compute_asr, compute_asr_tables, enumerate_valid_subsets
from mdptw.basic_algorithms import (asr_fixpoint, check_asr_definition, check_mec_decomposition,
                                    mec_iterative, subset_oracle_asr)
from mdptw.dptables import (DpStats, _BagInfo, boolean_closure, transition_forget, transition_introduce,
                            transition_join, transition_leaf)
from mdptw.generate import GeneratorConfig, gen_partial_ktree
from mdptw.mdp_core import MdpGraph, reduce_target
from mdptw.mec_dp import compute_mec, compute_mec_tables, extract_mecs
from mdptw.tree_decomposition import (DecompositionError, NiceTreeDecomposition, TreeDecomposition,
                                      heuristic_decompose, make_nice, root_with_target)


def chain(bags):
    """Nice decomposition that is a single introduce/forget chain."""
    return NiceTreeDecomposition(bags, [[]] + [[i] for i in range(len(bags) - 1)], len(bags) - 1)


def closure_of(pairs, size):
    rows = [0] * size
    for a, b in pairs:
        rows[a] |= 1 << b
    return boolean_closure(rows)


def pairs(rows):
    return {(i, j) for i, r in enumerate(rows) for j in range(len(rows)) if r >> j & 1}


# -- boolean_closure -----------------------------------------------------------------

def test_closure_identity():
    assert boolean_closure([1, 2, 4]) == (1, 2, 4)


def test_closure_single_edge():
    assert pairs(closure_of([(0, 1)], 3)) == {(0, 0), (1, 1), (2, 2), (0, 1)}


def test_closure_four_cycle():
    assert boolean_closure([0b0010, 0b0100, 0b1000, 0b0001]) == (0b1111,) * 4


def test_closure_respects_mask():
    rows = boolean_closure([0b010, 0b100, 0b001], mask=0b011)
    assert rows == (0b011, 0b010, 0)


def test_closure_matches_matrix_powering():
    rng = random.Random(3)
    for _ in range(200):
        size = rng.randint(1, 7)
        rel = [[rng.random() < 0.3 for _ in range(size)] for _ in range(size)]
        reach = [[i == j or rel[i][j] for j in range(size)] for i in range(size)]
        for _ in range(size):
            reach = [[any(reach[i][k] and reach[k][j] for k in range(size)) for j in range(size)]
                     for i in range(size)]
        rows = boolean_closure([sum(1 << j for j in range(size) if rel[i][j]) for i in range(size)])
        assert [[bool(rows[i] >> j & 1) for j in range(size)] for i in range(size)] == reach


# -- valid subsets ------------------------------------------------------------------

def test_valid_subsets_examples():
    g = MdpGraph(3, [(1, 2)], [1])
    rtd = chain([(0,), (0, 1), (0, 1, 2)])
    assert enumerate_valid_subsets(rtd, 0, g, 0) == [frozenset({0})]
    assert enumerate_valid_subsets(rtd, 1, g, 0) == [frozenset({0}), frozenset({0, 1})]
    assert enumerate_valid_subsets(rtd, 2, g, 0) == [frozenset({0}), frozenset({0, 2}), frozenset({0, 1, 2})]


@settings(max_examples=60, deadline=None)
@given(generated(n_max=10, k_max=3))
def test_valid_subsets_match_definition(inst):
    g = inst.graph
    s = 0
    rtd = root_with_target(make_nice(inst.decomposition), s)
    for d, bag in enumerate(rtd.bags):
        got = enumerate_valid_subsets(rtd, d, g, s)
        want = []
        for m in range(1 << len(bag)):
            sub = {bag[i] for i in range(len(bag)) if m >> i & 1}
            if s in sub and all(u in sub for v in sub if g.prob[v] for u in g.succ[v] if u in bag):
                want.append(frozenset(sub))
        assert got == want


# -- transitions ------------------------------------------------------------------------

def test_leaf():
    table, _ = transition_leaf((0,), 0)
    assert table == {1: (1,)}
    with pytest.raises(DecompositionError):
        transition_leaf((3,), 0)


def test_one_vertex_graph():
    g = MdpGraph(1, [(0, 0)])
    assert compute_asr(g, chain([(0,)]), 0).asr_set == {0}


def test_join_examples():
    stats = DpStats()
    full = 0b111
    # bottom on one side propagates
    assert transition_join({full: (1, 2, 4)}, {}, stats)[0] == {}
    # identical children
    t = {full: closure_of([(0, 1)], 3)}
    assert transition_join(t, dict(t), stats)[0] == t
    # x->y from one child, y->z from the other
    a = {full: closure_of([(0, 1)], 3)}
    b = {full: closure_of([(1, 2)], 3)}
    joined = transition_join(a, b, stats)[0][full]
    assert (0, 2) in pairs(joined)


def test_introduce_isolated_vertex():
    g = MdpGraph(3, [(1, 0)])
    info = _BagInfo((0, 1, 2), g)
    child = {0b11: closure_of([(1, 0)], 2)}
    table, _ = transition_introduce(info, 2, child, DpStats())
    assert pairs(table[0b111]) == {(0, 0), (1, 1), (2, 2), (1, 0)}
    assert table[0b011] == (0b001, 0b011, 0)


def test_introduce_edge_to_target():
    g = MdpGraph(2, [(1, 0)])
    table, _ = transition_introduce(_BagInfo((0, 1), g), 1, {1: (1,)}, DpStats())
    assert (1, 0) in pairs(table[0b11])


def test_introduce_closes_through_new_vertex():
    # positions: s=0, x=1, y=2, w=3; child knows x->y; edges y->w and w->x
    g = MdpGraph(4, [(1, 2), (2, 3), (3, 1)])
    info = _BagInfo((0, 1, 2, 3), g)
    child = {0b111: closure_of([(1, 2)], 3)}
    table, _ = transition_introduce(info, 3, child, DpStats())
    got = pairs(table[0b1111])
    assert {(2, 1), (3, 2), (1, 3)} <= got
    assert not any(a == 0 and b for a, b in got if b != 0)


def test_introduce_guards_probabilistic_neighbours():
    # vertex 1 is probabilistic with an edge to the new vertex 2: dropping 2 is invalid
    g = MdpGraph(3, [(1, 2), (1, 0)], [1])
    info = _BagInfo((0, 1, 2), g)
    table, _ = transition_introduce(info, 2, {0b11: closure_of([(1, 0)], 2)}, DpStats())
    assert 0b011 not in table and 0b111 in table


def test_forget_absorbs_vertex_reaching_target():
    g = MdpGraph(2, [(1, 0)])
    info = _BagInfo((0, 1), g)
    child = {0b01: (0b01, 0), 0b11: closure_of([(1, 0)], 2)}
    table, rules = transition_forget(info, 1, child, False, DpStats())
    assert table == {1: (1,)} and rules[1] == 0b11


def test_forget_copies_when_vertex_is_stuck():
    g = MdpGraph(2, [(1, 1)])
    info = _BagInfo((0, 1), g)
    child = {0b01: (0b01, 0), 0b11: (0b01, 0b10)}
    table, rules = transition_forget(info, 1, child, False, DpStats())
    assert table == {1: (1,)} and rules[1] == 0b01


def test_forget_skips_invalid_subset():
    # w=1 is probabilistic with edges to s=0 and x=2; x never reaches s
    g = MdpGraph(3, [(0, 0), (1, 0), (1, 2), (2, 2)], [1])
    td = TreeDecomposition([(0, 1, 2)])
    rtd = root_with_target(make_nice(td), 0)
    assert compute_asr(g, rtd, 0).asr_set == {0} == subset_oracle_asr(g, 0)
    info = _BagInfo((0, 1, 2), g)
    assert not info.is_valid(0b011)


# -- compute_asr ------------------------------------------------------------------------

def test_asr_g0():
    h, s = reduce_target(g0(), {0})
    rtd = root_with_target(make_nice(heuristic_decompose(h)), s)
    res = compute_asr(h, rtd, s)
    assert res.asr_set == {0, 1, s}
    rtd0 = root_with_target(make_nice(heuristic_decompose(g0())), 0)
    assert compute_asr(g0(), rtd0, 0).asr_set == {0, 1}


def test_asr_rejects_unrooted_decomposition():
    g = g0()
    with pytest.raises(DecompositionError):
        compute_asr(g, make_nice(heuristic_decompose(g)), 0)


@settings(max_examples=150, deadline=None)
@given(generated(n_max=11, k_max=3))
def test_asr_matches_oracle(inst):
    g = inst.graph
    h, s = reduce_target(g, [g.n - 1])
    rtd = root_with_target(make_nice(inst.decomposition), s)
    res = compute_asr(h, rtd, s)
    assert res.asr_set == subset_oracle_asr(h, s) == asr_fixpoint(h, s)[0]
    assert check_asr_definition(h, s, res.asr_set) is None
    assert res.stats.subsets <= res.stats.nodes * 2 ** (rtd.width + 2)


def test_asr_with_probabilistic_target():
    g = MdpGraph(3, [(0, 1), (1, 0), (0, 2)], [0])
    rtd = root_with_target(make_nice(heuristic_decompose(g)), 0)
    assert compute_asr(g, rtd, 0).asr_set == frozenset() == asr_fixpoint(g, 0)[0]


# -- MEC tables and extraction --------------------------------------------------------------

def test_mec_self_loop_singleton():
    g = MdpGraph(1, [(0, 0)])
    tables = compute_mec_tables(g, make_nice(TreeDecomposition([(0,)])))
    assert tables.expand(tables.ntd.root, 1) == {0}


def test_mec_two_cycle_absorbs_partner():
    g = MdpGraph(2, [(0, 1), (1, 0)])
    tables = compute_mec_tables(g, make_nice(TreeDecomposition([(0, 1)])))
    assert tables.ntd.bags[tables.ntd.root] == (0,)
    assert tables.expand(tables.ntd.root, 1) == {0, 1}


def test_mec_one_way_edge_fails_backward_check():
    g = MdpGraph(2, [(0, 1)])
    tables = compute_mec_tables(g, make_nice(TreeDecomposition([(0, 1)])))
    assert tables.expand(tables.ntd.root, 1) == {0}


def test_extract_dag_has_no_mecs():
    g = MdpGraph(4, [(0, 1), (1, 2), (0, 3), (3, 2)])
    dec = compute_mec(g, make_nice(heuristic_decompose(g))).decomposition
    assert dec.mecs == () and dec.unassigned == {0, 1, 2, 3}


def test_extract_g0():
    g = g0()
    dec = compute_mec(g, make_nice(heuristic_decompose(g))).decomposition
    assert dec.as_set() == {frozenset({0}), frozenset({2, 3})} and dec.unassigned == {1}


def test_extract_cycle_with_escaping_probabilistic_vertex():
    g = MdpGraph(4, [(0, 1), (1, 2), (2, 0), (3, 0)], [3])
    dec = compute_mec(g, make_nice(heuristic_decompose(g))).decomposition
    assert dec.as_set() == {frozenset({0, 1, 2})} and dec.unassigned == {3}


def test_mec_empty_edges_and_big_cycle():
    empty = MdpGraph(5, [])
    assert compute_mec(empty, make_nice(heuristic_decompose(empty))).decomposition.mecs == ()
    n = 30
    cyc = MdpGraph(n, [(i, (i + 1) % n) for i in range(n)])
    dec = compute_mec(cyc, make_nice(heuristic_decompose(cyc))).decomposition
    assert dec.as_set() == {frozenset(range(n))}


def test_mec_matches_algorithm_one_on_partial_3_trees():
    for seed in range(500):
        rng = random.Random(seed)
        cfg = GeneratorConfig(n=rng.randint(4, 60), k=3, seed=seed, p_prob=rng.choice([0.2, 0.4, 0.6]),
                              two_way=rng.choice([0.0, 0.4]), self_loops=rng.choice([0.0, 0.2]))
        inst = gen_partial_ktree(cfg)
        dec = compute_mec(inst.graph, make_nice(inst.decomposition)).decomposition
        assert dec == mec_iterative(inst.graph)[0], seed
        assert check_mec_decomposition(inst.graph, dec) is None


def test_extract_is_deterministic():
    inst = small_instance(2, n_max=30)
    tables = compute_mec_tables(inst.graph, make_nice(inst.decomposition))
    assert extract_mecs(tables) == extract_mecs(tables)


def test_asr_tables_keep_closures_on_request():
    inst = small_instance(4)
    h, s = reduce_target(inst.graph, [0])
    rtd = root_with_target(make_nice(inst.decomposition), s)
    tables = compute_asr_tables(h, rtd, s, keep_closures=True)
    assert tables.closures is not None
    assert compute_asr_tables(h, rtd, s).closures is None
