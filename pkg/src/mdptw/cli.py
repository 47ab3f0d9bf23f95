"""Command-line front end: generation, decomposition, analysis, replay, benchmarks.

Results go to stdout, diagnostics to stderr.  Exit status is 0 on success,
1 on a validation or diff failure and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Iterable, TextIO

from . import bench
from .asr_dp import compute_asr
from .basic_algorithms import ORACLE_MAX_N, asr_fixpoint, mec_iterative, subset_oracle_asr
from .decremental import DecrementalAsr, DecrementalMec, EdgeNotFound, ProbabilisticEdgeError
from .generate import GeneratorConfig, gen_partial_ktree
from .mdp_core import MdpError, MdpGraph, format_mdp, parse_mdp, reduce_target
from .mec_dp import MecDecomposition, compute_mec
from .tree_decomposition import (DecompositionError, Strategy, TreeDecomposition, format_td,
                                 heuristic_decompose, make_nice, parse_td, root_with_target, validate)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FAIL):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_USAGE)


def load_mdp(path: str) -> tuple[MdpGraph, tuple[int, ...] | None]:
    try:
        return parse_mdp(_read(path))
    except MdpError as exc:
        line = getattr(exc, "line", None)
        where = f"{path}:{line}" if line else path
        raise CliError(f"{where}: {exc}")


def load_td(path: str, g: MdpGraph) -> TreeDecomposition:
    try:
        td = parse_td(_read(path))
    except DecompositionError as exc:
        raise CliError(f"{path}: {exc}")
    bad = validate(td, g)
    if bad:
        raise CliError(f"{path}: invalid decomposition: {bad}")
    return td


def decomposition_for(g: MdpGraph, td_path: str | None, err: TextIO) -> TreeDecomposition:
    if td_path:
        return load_td(td_path, g)
    td = heuristic_decompose(g, Strategy.MIN_FILL)
    print(f"warning: no --td given, using min-fill decomposition of width {td.width}", file=err)
    return td


# -- output formats ----------------------------------------------------------

def format_asr(asr: Iterable[int]) -> str:
    ids = sorted(asr)
    return "".join([f"asr {len(ids)}\n"] + [f"{v}\n" for v in ids])


def format_mec(dec: MecDecomposition) -> str:
    lines = [f"mec {len(dec.mecs)}"]
    lines += [" ".join(map(str, sorted(m))) for m in dec.mecs]
    lines.append("unassigned: " + " ".join(map(str, sorted(dec.unassigned))))
    return "\n".join(lines).rstrip() + "\n"


def _stat_lines(stats: dict) -> str:
    return "".join(f"# stat {k} {v}\n" for k, v in stats.items())


# -- subcommands ---------------------------------------------------------------

def cmd_validate(args, out, err) -> int:
    try:
        g, targets = parse_mdp(_read(args.mdp), strict_count=True)
    except MdpError as exc:
        line = getattr(exc, "line", None)
        print(f"invalid: {args.mdp}{':' + str(line) if line else ''}: {exc}", file=out)
        return EXIT_FAIL
    print(f"mdp ok: n={g.n} m={g.m} probabilistic={len(g.probabilistic)}", file=out)
    if args.td:
        try:
            td = parse_td(_read(args.td))
        except DecompositionError as exc:
            print(f"invalid: {args.td}: {exc}", file=out)
            return EXIT_FAIL
        bad = validate(td, g)
        if bad:
            print(f"invalid: {args.td}: {bad}", file=out)
            return EXIT_FAIL
        print(f"td ok: bags={len(td.bags)} width={td.width}", file=out)
    return EXIT_OK


def cmd_decompose(args, out, err) -> int:
    g, _ = load_mdp(args.mdp)
    td = heuristic_decompose(g, Strategy(args.strategy))
    text = format_td(td, g.n)
    if args.output == "-":
        out.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    print(f"width {td.width}", file=err if args.output == "-" else out)
    return EXIT_OK


def _targets(args, file_targets) -> list[int]:
    targets = args.target if args.target else file_targets
    if not targets:
        raise CliError("no target: pass --target or add a 't' line to the MDP file", EXIT_USAGE)
    return list(targets)


def run_asr(g: MdpGraph, targets, algo: str, td: TreeDecomposition | None) -> tuple[frozenset[int], dict]:
    """ASR set of ``targets`` on ``g`` (original ids only) and run statistics."""
    for t in targets:
        if not 0 <= t < g.n:
            raise CliError(f"target {t} out of range 0..{g.n - 1}", EXIT_USAGE)
    gr, s = reduce_target(g, targets)
    if algo == "dp":
        rtd = root_with_target(make_nice(td), s)
        res = compute_asr(gr, rtd, s)
        asr, stats = res.asr_set, {"width": td.width, **res.stats.as_dict()}
    elif algo == "fixpoint":
        asr, trace = asr_fixpoint(gr, s)
        stats = {"removals": len(trace)}
    else:
        if gr.n > ORACLE_MAX_N:
            raise CliError(f"oracle limited to n <= {ORACLE_MAX_N - 1} before target reduction", EXIT_USAGE)
        asr, stats = subset_oracle_asr(gr, s), {}
    return frozenset(v for v in asr if v != s), stats


def cmd_asr(args, out, err) -> int:
    g, file_targets = load_mdp(args.mdp)
    targets = _targets(args, file_targets)
    td = decomposition_for(g, args.td, err) if args.algo == "dp" else None
    asr, stats = run_asr(g, targets, args.algo, td)
    out.write(format_asr(asr))
    if args.stats:
        out.write(_stat_lines(stats))
    return EXIT_OK


def cmd_mec(args, out, err) -> int:
    g, _ = load_mdp(args.mdp)
    if args.algo == "dp":
        td = decomposition_for(g, args.td, err)
        res = compute_mec(g, make_nice(td))
        dec, stats = res.decomposition, {"width": td.width, **res.stats.as_dict()}
    else:
        dec, trace = mec_iterative(g)
        stats = {"removals": len(trace)}
    out.write(format_mec(dec))
    if args.stats:
        out.write(_stat_lines(stats))
    return EXIT_OK


def _parse_expected(rest: list[str], what: str):
    if what == "asr":
        return frozenset(int(t) for t in rest)
    groups, cur = [], []
    for t in rest + [";"]:
        if t == ";":
            if cur:
                groups.append(frozenset(cur))
            cur = []
        else:
            cur.append(int(t))
    return frozenset(groups)


def cmd_decrement(args, out, err) -> int:
    g, file_targets = load_mdp(args.mdp)
    algos = [args.algo] if args.algo else (["asr", "mec"] if (args.target or file_targets) else ["mec"])
    asr_state = mec_state = None
    if "asr" in algos:
        targets = _targets(args, file_targets)
        tset = set(targets)
        gr, s = reduce_target(g, targets)
        asr_state = DecrementalAsr(gr, s)
    if "mec" in algos:
        mec_state = DecrementalMec(g)

    def asr_now():
        return frozenset(v for v in asr_state.asr_set if v != s)

    failures = 0
    pending = None
    for lineno, raw in enumerate(_read(args.script).splitlines(), 1):
        tok = raw.split("#", 1)[0].split()
        if not tok:
            continue
        where = f"{args.script}:{lineno}"
        try:
            if tok[0] == "d" and len(tok) == 3:
                u, v = int(tok[1]), int(tok[2])
                if not g.has_edge(u, v):
                    raise CliError(f"{where}: edge {u} {v} is not in the graph")
                if g.prob[u]:
                    raise CliError(f"{where}: edge {u} {v} leaves probabilistic vertex {u}")
                if mec_state:
                    mec_state.delete_player1_edge(u, v)
                if asr_state and u not in tset:
                    asr_state.delete_player1_edge(u, v)
                # keep the base graph in step so later lines see the deletion
                g = g.without_edges([(u, v)])
                if args.check:
                    failures += _check_step(where, g, asr_state, mec_state, err,
                                            targets if asr_state else None, asr_now if asr_state else None)
            elif tok[0] == "q" and len(tok) == 2 and tok[1] in ("asr", "mec"):
                state = asr_state if tok[1] == "asr" else mec_state
                if state is None:
                    raise CliError(f"{where}: '{tok[1]}' is not being maintained", EXIT_USAGE)
                got = asr_now() if tok[1] == "asr" else mec_state.decomposition()
                out.write(format_asr(got) if tok[1] == "asr" else format_mec(got))
                if pending is not None:
                    want = _parse_expected(pending, tok[1])
                    have = got if tok[1] == "asr" else got.as_set()
                    if want != have:
                        print(f"{where}: expected {_show(want)}, got {_show(have)}", file=err)
                        failures += 1
                    pending = None
            elif tok[0] == "!":
                pending = tok[1:]
            else:
                raise CliError(f"{where}: unrecognised script line {raw.strip()!r}")
        except ValueError as exc:
            if isinstance(exc, ProbabilisticEdgeError):
                raise CliError(f"{where}: {exc}")
            raise CliError(f"{where}: expected integer ids")
        except EdgeNotFound as exc:
            raise CliError(f"{where}: edge {exc.args[0]} is not present")
    if pending is not None:
        print(f"{args.script}: '!' line without a following query", file=err)
        failures += 1
    return EXIT_FAIL if failures else EXIT_OK


def _show(x) -> str:
    if x and isinstance(next(iter(x)), frozenset):
        return " ; ".join(" ".join(map(str, sorted(m))) for m in sorted(x, key=min))
    return " ".join(map(str, sorted(x))) or "(empty)"


def _check_step(where, g, asr_state, mec_state, err, targets, asr_now) -> int:
    bad = 0
    if asr_state is not None:
        gr, s = reduce_target(g, targets)
        want, _ = asr_fixpoint(gr, s)
        want = frozenset(v for v in want if v != s)
        if asr_now() != want:
            print(f"{where}: maintained ASR {_show(asr_now())} != recomputed {_show(want)}", file=err)
            bad += 1
    if mec_state is not None:
        want, _ = mec_iterative(g)
        if mec_state.decomposition() != want:
            print(f"{where}: maintained MECs differ from recomputation", file=err)
            bad += 1
    return bad


def cmd_gen(args, out, err) -> int:
    cfg = GeneratorConfig(n=args.n, k=args.k, p_prob=args.p_prob, edge_density=args.density,
                          seed=args.seed, two_way=args.two_way, self_loops=args.self_loops)
    try:
        cfg.check()
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE)
    inst = gen_partial_ktree(cfg)
    with open(args.output + ".mdp", "w") as fh:
        fh.write(format_mdp(inst.graph))
    with open(args.output + ".td", "w") as fh:
        fh.write(format_td(inst.decomposition, inst.graph.n))
    print(f"wrote {args.output}.mdp (n={inst.graph.n} m={inst.graph.m}) and {args.output}.td "
          f"(width {inst.decomposition.width})", file=err)
    return EXIT_OK


def cmd_bench(args, out, err) -> int:
    try:
        suite = bench.load_suite(args.suite)
    except OSError as exc:
        raise CliError(f"cannot read {args.suite}: {exc.strerror}", EXIT_USAGE)
    except ValueError as exc:
        raise CliError(f"{args.suite}: {exc}", EXIT_USAGE)
    try:
        records = bench.run_suite(suite)
    except (KeyError, ValueError) as exc:
        raise CliError(f"{args.suite}: bad suite: {exc}", EXIT_USAGE)
    if args.output == "-":
        bench.write_csv(records, out)
    else:
        with open(args.output, "w") as fh:
            bench.write_csv(records, fh)
        print(f"wrote {len(records)} rows to {args.output}", file=err)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdptw", description="MEC decomposition and almost-sure "
                                "reachability for MDPs of low treewidth.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check an MDP file and optionally a decomposition")
    v.add_argument("mdp")
    v.add_argument("--td", help="PACE .td file to check against the graph")
    v.set_defaults(func=cmd_validate)

    d = sub.add_parser("decompose", help="heuristic tree decomposition")
    d.add_argument("mdp")
    d.add_argument("--strategy", choices=[s.value for s in Strategy], default=Strategy.MIN_FILL.value)
    d.add_argument("-o", "--output", required=True, help="output .td path, or - for stdout")
    d.set_defaults(func=cmd_decompose)

    a = sub.add_parser("asr", help="almost-sure reachability set")
    a.add_argument("mdp")
    a.add_argument("--target", type=int, nargs="+", help="target vertex ids (default: the file's t line)")
    a.add_argument("--td", help="decomposition of the graph (default: min-fill heuristic)")
    a.add_argument("--algo", choices=["dp", "fixpoint", "oracle"], default="dp")
    a.add_argument("--stats", action="store_true", help="append '# stat' lines")
    a.set_defaults(func=cmd_asr)

    m = sub.add_parser("mec", help="maximal end-component decomposition")
    m.add_argument("mdp")
    m.add_argument("--td", help="decomposition of the graph (default: min-fill heuristic)")
    m.add_argument("--algo", choices=["dp", "iterative"], default="dp")
    m.add_argument("--stats", action="store_true", help="append '# stat' lines")
    m.set_defaults(func=cmd_mec)

    r = sub.add_parser("decrement", help="replay a player-1 edge deletion script")
    r.add_argument("mdp")
    r.add_argument("--script", required=True)
    r.add_argument("--algo", choices=["asr", "mec"], help="maintain only one answer (default: both when a target is known)")
    r.add_argument("--target", type=int, nargs="+")
    r.add_argument("--check", action="store_true", help="recompute from scratch after every deletion and diff")
    r.set_defaults(func=cmd_decrement)

    gn = sub.add_parser("gen", help="random partial k-tree MDP with its witness decomposition")
    gn.add_argument("--n", type=int, required=True)
    gn.add_argument("--k", type=int, required=True)
    gn.add_argument("--p-prob", type=float, default=0.3)
    gn.add_argument("--density", type=float, default=0.8)
    gn.add_argument("--seed", type=int, default=0)
    gn.add_argument("--two-way", type=float, default=0.0)
    gn.add_argument("--self-loops", type=float, default=0.0)
    gn.add_argument("-o", "--output", required=True, help="output base name")
    gn.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="run a benchmark suite and write CSV")
    b.add_argument("--suite", required=True, help="suite JSON file")
    b.add_argument("-o", "--output", required=True, help="CSV path, or - for stdout")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args, out, err)
    except CliError as exc:
        print(f"error: {exc}", file=err)
        return exc.code
    except (MdpError, DecompositionError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
