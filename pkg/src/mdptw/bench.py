"""Size/width sweeps over generated instances, one CSV row per run."""

from __future__ import annotations

import csv
import json
import random
import time
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Iterator, TextIO

from .asr_dp import compute_asr
from .basic_algorithms import asr_fixpoint, mec_iterative
from .decremental import DecrementalAsr, DecrementalMec
from .generate import GeneratorConfig, gen_partial_ktree
from .mdp_core import MdpGraph, reduce_target
from .mec_dp import compute_mec
from .tree_decomposition import TreeDecomposition, make_nice, root_with_target

ALGOS = ("asr-dp", "asr-fixpoint", "mec-dp", "mec-iterative", "asr-decremental", "mec-decremental")


@dataclass(frozen=True)
class BenchRecord:
    algo: str
    n: int
    m: int
    k: int
    wall_ns: int
    closures: int = 0
    subsets: int = 0
    edges_inspected: int = 0

    def __post_init__(self):
        for name in ("wall_ns", "closures", "subsets", "edges_inspected"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


CSV_HEADER = [f.name for f in fields(BenchRecord)]


def _target_for(g: MdpGraph, seed: int) -> int:
    return random.Random(seed).randrange(g.n)


def _script(g: MdpGraph, seed: int) -> list[tuple[int, int]]:
    dels = [e for e in g.edges if not g.prob[e[0]]]
    random.Random(seed).shuffle(dels)
    return dels


def run_one(algo: str, g: MdpGraph, td: TreeDecomposition, seed: int = 0) -> BenchRecord:
    """Time one analysis; DP timings include building the nice decomposition."""
    if algo not in ALGOS:
        raise ValueError(f"unknown algorithm {algo!r}")
    closures = subsets = inspected = 0
    if algo.startswith("asr"):
        gr, s = reduce_target(g, [_target_for(g, seed)])
    t0 = time.perf_counter_ns()
    if algo == "asr-dp":
        res = compute_asr(gr, root_with_target(make_nice(td), s), s)
        closures, subsets = res.stats.closures, res.stats.subsets
    elif algo == "asr-fixpoint":
        asr_fixpoint(gr, s)
    elif algo == "mec-dp":
        res = compute_mec(g, make_nice(td))
        closures, subsets = res.stats.closures, res.stats.subsets
    elif algo == "mec-iterative":
        mec_iterative(g)
    elif algo == "asr-decremental":
        da = DecrementalAsr(gr, s)
        for u, v in _script(gr, seed):
            if u != s:
                da.delete_player1_edge(u, v)
        inspected = da.edges_inspected
    else:
        dm = DecrementalMec(g)
        for u, v in _script(g, seed):
            dm.delete_player1_edge(u, v)
        inspected = dm.stats.edges_inspected
    wall = time.perf_counter_ns() - t0
    return BenchRecord(algo, g.n, g.m, td.width, wall, closures, subsets, inspected)


def _as_list(x) -> list:
    return list(x) if isinstance(x, (list, tuple)) else [x]


def expand_suite(suite: dict) -> Iterator[tuple[str, GeneratorConfig]]:
    """Suite JSON: ``{"cases": [{"algos": [...], "n": [...], "k": [...],
    "seeds": [...], "p_prob": x, "density": x}]}``; list fields are swept."""
    cases = suite.get("cases")
    if not isinstance(cases, list) or not cases:
        raise ValueError("suite needs a non-empty 'cases' list")
    for case in cases:
        algos = _as_list(case.get("algos", ["asr-dp"]))
        for a in algos:
            if a not in ALGOS:
                raise ValueError(f"unknown algorithm {a!r}; choose from {', '.join(ALGOS)}")
        for n in _as_list(case["n"]):
            for k in _as_list(case.get("k", 3)):
                for seed in _as_list(case.get("seeds", 0)):
                    cfg = GeneratorConfig(n=int(n), k=int(k), p_prob=float(case.get("p_prob", 0.3)),
                                          edge_density=float(case.get("density", 0.8)), seed=int(seed))
                    cfg.check()
                    for a in algos:
                        yield a, cfg


def run_suite(suite: dict) -> list[BenchRecord]:
    records = []
    cache: dict[GeneratorConfig, tuple] = {}
    for algo, cfg in expand_suite(suite):
        if cfg not in cache:
            cache.clear()
            inst = gen_partial_ktree(cfg)
            cache[cfg] = (inst.graph, inst.decomposition)
        g, td = cache[cfg]
        records.append(run_one(algo, g, td, cfg.seed))
    return records


def load_suite(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_csv(records: Iterable[BenchRecord], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(astuple(r))
