import random

import pytest
from hypothesis import given, settings

from _instances import g0, generated, mdp_graphs, small_instance
from mdptw.basic_algorithms import (ORACLE_MAX_N, asr_fixpoint, check_asr_definition, check_end_component,
                                    check_mec_decomposition, mec_iterative, subset_oracle_asr)
from mdptw.mdp_core import MdpGraph, compute_sccs, reduce_target, reverse_reachable


# -- mec_iterative --------------------------------------------------------------

def test_mec_strongly_connected_player1():
    g = MdpGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    dec, trace = mec_iterative(g)
    assert dec.as_set() == {frozenset(range(4))} and len(trace) == 0


def test_mec_probabilistic_vertex_between_sinks():
    g = MdpGraph(3, [(0, 1), (0, 2), (1, 1), (2, 2)], [0])
    dec, trace = mec_iterative(g)
    assert trace.removed == [0]
    assert dec.as_set() == {frozenset({1}), frozenset({2})} and dec.unassigned == {0}


def test_mec_g0():
    dec, trace = mec_iterative(g0())
    assert dec.as_set() == {frozenset({0}), frozenset({2, 3})}
    assert dec.unassigned == {1} and len(trace) == 0


def test_mec_uses_original_edges():
    # 2 leaves its component only through an edge to a removed vertex
    g = MdpGraph(4, [(0, 1), (0, 3), (1, 2), (2, 1), (2, 0), (3, 3)], [0, 2])
    dec, trace = mec_iterative(g)
    assert dec == mec_iterative(g, scan_order=[3, 2, 1, 0])[0]
    assert check_mec_decomposition(g, dec) is None
    assert set(trace.removed) == {0, 2}


@settings(max_examples=150, deadline=None)
@given(generated(n_max=25, k_max=3))
def test_mec_output_is_valid(inst):
    g = inst.graph
    dec, _ = mec_iterative(g)
    assert check_mec_decomposition(g, dec) is None
    for comp in dec.mecs:
        assert check_end_component(g, comp) is None


def _replay_mec(g, trace):
    # each removal must be witnessed by an original edge that leaves the
    # removed vertex's SCC in the graph as it stood at that step
    present = set(range(g.n))
    for u, (a, b) in trace.steps:
        assert a == u and g.prob[u] and u in present and g.has_edge(a, b)
        sub = MdpGraph(g.n, [(x, y) for x, y in g.edges if x in present and y in present],
                       [v for v in g.probabilistic if v in present and any(w in present for w in g.succ[v])])
        lab = compute_sccs(sub)
        assert b not in present or not lab.same(a, b)
        present.discard(u)


def _replay_asr(g, s, trace):
    present = set(range(g.n))
    for u, (a, b) in trace.steps:
        assert a == u and g.prob[u] and g.has_edge(a, b)
        sub = MdpGraph(g.n, [(x, y) for x, y in g.edges if x in present and y in present])
        reach = reverse_reachable(sub, s) & present
        assert u in reach and b not in reach
        present.discard(u)


def test_orders_and_traces():
    for seed in range(60):
        inst = small_instance(seed, n_max=20)
        g = inst.graph
        h, s = reduce_target(g, [seed % g.n])
        dec, mtrace = mec_iterative(g)
        asr, atrace = asr_fixpoint(h, s)
        _replay_mec(g, mtrace)
        _replay_asr(h, s, atrace)
        rng = random.Random(seed)
        for _ in range(10):
            order = list(range(h.n))
            rng.shuffle(order)
            dec2, t2 = mec_iterative(g, [v for v in order if v < g.n])
            assert dec2 == dec
            _replay_mec(g, t2)
            asr2, t3 = asr_fixpoint(h, s, order)
            assert asr2 == asr
            _replay_asr(h, s, t3)


# -- asr_fixpoint / oracle ------------------------------------------------------------

def test_asr_all_player1():
    g = MdpGraph(4, [(1, 0), (2, 1), (3, 3)])
    asr, trace = asr_fixpoint(g, 0)
    assert asr == {0, 1, 2} and len(trace) == 0


def test_asr_unreachable_target():
    g = MdpGraph(3, [(0, 1), (1, 2)])
    assert asr_fixpoint(g, 0)[0] == {0}


def test_asr_g0():
    asr, trace = asr_fixpoint(g0(), 0)
    assert asr == {0, 1} and 2 not in trace.removed


def test_oracle_examples():
    assert subset_oracle_asr(MdpGraph(1, []), 0) == {0}
    assert subset_oracle_asr(g0(), 0) == {0, 1}
    with pytest.raises(ValueError):
        subset_oracle_asr(MdpGraph(ORACLE_MAX_N + 1, []), 0)


@settings(max_examples=300, deadline=None)
@given(mdp_graphs(max_n=12))
def test_fixpoint_equals_oracle(g):
    for s in {0, g.n - 1}:
        assert asr_fixpoint(g, s)[0] == subset_oracle_asr(g, s)


# -- check_asr_definition -----------------------------------------------------------------

def test_check_asr_singleton_target():
    for t in range(4):
        h, s = reduce_target(g0(), {t})
        assert check_asr_definition(h, s, {s}) is None
    # a probabilistic target that can leave itself breaks the local condition
    assert check_asr_definition(g0(), 2, {2}).kind == "local"


def test_check_asr_local_violation():
    bad = check_asr_definition(g0(), 0, {0, 1, 2})
    assert bad.kind == "local" and bad.witness == (2, 3)


def test_check_asr_global_violation():
    g = MdpGraph(3, [(0, 0), (1, 2), (2, 1)])
    bad = check_asr_definition(g, 0, {0, 1, 2})
    assert bad.kind == "global"
    assert check_asr_definition(g, 0, {1}).kind == "global"


def test_check_asr_on_fixpoint_output():
    for seed in range(1000):
        inst = small_instance(seed, n_max=18)
        g = inst.graph
        h, s = reduce_target(g, [seed % g.n])
        asr, _ = asr_fixpoint(h, s)
        assert check_asr_definition(h, s, asr) is None, seed
        # the answer is maximum, so any strictly larger set is rejected
        extra = next((v for v in range(h.n) if v not in asr), None)
        if extra is not None:
            assert check_asr_definition(h, s, asr | {extra}) is not None
