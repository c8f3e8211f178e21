"""Command-line entry point.

Every run writes ``manifest.json`` into ``--out`` (default ``schubcomp-out``)
with the command, its full configuration, seeds, version, timestamps, peak
memory and the files written.  Exact integers are always emitted as decimal
strings.  Exit codes: 0 success, 1 usage error, 2 resource cap hit.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import multiprocessing as mp
import os
import resource
import sys
import time

import numpy as np

from . import __version__
from .errors import RationalOverflowError, ResourceCapExceeded
from .perm import PermError, parse_permutation

EXIT_OK, EXIT_USAGE, EXIT_CAP = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _int_range(text):
    """'8..12' -> [8, ..., 12]; '9' -> [9]; '8,10' -> [8, 10]."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None


def _perm_arg(text):
    try:
        return parse_permutation(text)
    except PermError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# -- run manifest ------------------------------------------------------------

class RunManifest:
    def __init__(self, command, config, out_dir):
        self.command = command
        self.config = config
        self.out_dir = out_dir
        self.seeds = []
        self.outputs = []
        self.started = _dt.datetime.now(_dt.timezone.utc)

    def path(self, name):
        os.makedirs(self.out_dir, exist_ok=True)
        p = os.path.join(self.out_dir, name)
        self.outputs.append(name)
        return p

    def write_text(self, name, text):
        with open(self.path(name), "w") as fh:
            fh.write(text)

    def write_json(self, name, obj):
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def finish(self, status):
        os.makedirs(self.out_dir, exist_ok=True)
        peak_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        record = {
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "version": __version__,
            "started": self.started.isoformat(),
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "peak_memory_bytes": int(peak_kb) * 1024,
            "outputs": self.outputs,
            "exit_status": status,
        }
        with open(os.path.join(self.out_dir, "manifest.json"), "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


# -- subcommands -------------------------------------------------------------

def cmd_eval(args, man):
    from .evaluate import upsilon
    t = time.perf_counter()
    v = upsilon(args.perm, args.formula, args.arith, args.mode)
    ms = (time.perf_counter() - t) * 1000
    rec = {"perm": str(args.perm), "formula": args.formula, "arith": args.arith,
           "mode": args.mode, "value": v.decimal(), "exact": v.exact and not v.approximate,
           "elapsed_ms": round(ms, 3)}
    man.write_json("eval.json", rec)
    if args.value_only:
        print(v.decimal())
    else:
        _emit(rec)


def cmd_oracle(args, man):
    from .oracles import upsilon_pipedream_oracle, upsilon_reduced_words_oracle
    f = {"reduced-words": upsilon_reduced_words_oracle,
         "pipe-dream": upsilon_pipedream_oracle}[args.method]
    if args.perm.n > 8:
        raise UsageError("oracles are brute force; use n <= 8")
    rec = {"perm": str(args.perm), "method": args.method, "value": f(args.perm).decimal()}
    man.write_json("oracle.json", rec)
    _emit(rec)


def cmd_max_search(args, man):
    from .perm import layered
    from .search import SearchResult, full_search, neighborhood_search, optimal_layered
    if args.mode == "full":
        try:
            res = full_search(args.n, threads=args.threads)
        except ResourceCapExceeded as exc:
            man.write_json("search.json", {"n": args.n, "aborted": str(exc),
                                           "partial": _partial_json(exc.partial)})
            raise
    elif args.mode == "layered":
        spec, val = optimal_layered(args.n)
        w = layered(spec)
        res = SearchResult(args.n, w, val, "layered", [w])
    else:
        if args.center is None:
            spec, _ = optimal_layered(args.n)
            center = layered(spec)
        else:
            center = args.center
            if center.n != args.n:
                raise UsageError("--center size differs from --n")
        res = neighborhood_search(center, args.radius, budget=args.budget, threads=args.threads)
    out = res.to_json()
    man.write_json("search.json", out)
    _emit(out)


def _partial_json(partial):
    if not partial:
        return []
    return [{"length": L, "max": str(v), "argmax": [str(p) for p in ps]}
            for L, v, ps in partial]


def cmd_layered_opt(args, man):
    from .perm import layered, layered_length
    from .search import optimal_layered
    spec, val = optimal_layered(args.n, method=args.method, verify=args.verify)
    rec = {"n": args.n, "blocks": list(spec.blocks), "perm": str(layered(spec)),
           "length": layered_length(spec), "value": str(val)}
    man.write_json("layered.json", rec)
    _emit(rec)


def cmd_enumerate(args, man):
    from .bpd import asm_of, enumerate_asms, height, matrix_csv, to_text
    if not 1 <= args.n <= 6:
        raise UsageError("enumerate supports 1 <= n <= 6")
    states = enumerate_asms(args.n)
    if args.reduced:
        states = [b for b in states if b.is_reduced()]
    if args.format == "text":
        body = "\n\n".join(to_text(b) for b in states) + "\n"
    else:
        conv = height if args.format == "height-csv" else asm_of
        body = "\n".join(matrix_csv(conv(b)) for b in states)
    man.write_text("enumerate.txt", body)
    sys.stdout.write(body)
    sys.stderr.write(f"{len(states)} grids\n")


def cmd_connectivity(args, man):
    from .bpd import to_text
    from .moves import (droop_reachable_from_rothe, find_stuck, flip_connectivity_check,
                        symmetry_classes)
    rec = {"n": args.n, "flips_connected": flip_connectivity_check(args.n)}
    if args.droops:
        rec["flips_droops_connected"] = flip_connectivity_check(args.n, droops=True)
        rec["droop_reachable_from_rothe"] = droop_reachable_from_rothe(args.n)
    if args.stuck:
        stuck = find_stuck(args.n)
        rec["stuck_raw"] = len(stuck)
        rec["stuck_up_to_transpose"] = symmetry_classes(stuck)
        rec["stuck"] = [to_text(b) for b in stuck]
    man.write_json("connectivity.json", rec)
    _emit(rec)


def cmd_mcmc(args, man):
    from .bpd import matrix_csv
    from .mcmc import ChainConfig, ProposalConfig, lag1_autocorrelation, merge_chains, run_chain
    cfg = ChainConfig(args.n, seed=args.seed, start=args.start, burn_in_steps=args.burn_in,
                      thinning=args.thin, sample_count=args.samples,
                      proposal=ProposalConfig(args.flip_prob, args.rect_dist),
                      archive=args.archive)
    man.seeds = [{"chain": c, "key": args.seed ^ c} for c in range(args.chains)]
    t = time.perf_counter()
    stats = merge_chains({c: run_chain(cfg, c) for c in range(args.chains)})
    elapsed = time.perf_counter() - t
    man.write_text("perm_matrix.csv", matrix_csv(stats.perm_matrix_sum))
    if stats.B:
        man.write_text("height_avg.csv", matrix_csv(stats.height_avg))
        man.write_text("mixed_diff.csv", matrix_csv(stats.mixed_difference()))
    man.write_text("length_trace.csv", "length\n" + "".join(f"{x}\n" for x in stats.length_trace))
    if args.archive:
        man.write_text("samples.txt", "".join(",".join(map(str, r)) + "\n"
                                              for r in stats.archive))
    summary = {"n": args.n, "samples": stats.B, "elapsed_s": round(elapsed, 3),
               "move_counts": [int(x) for x in stats.move_counts]}
    if stats.B:
        C = args.n * (args.n - 1) // 2
        summary["mean_length_ratio"] = float(stats.length_trace.mean() / C)
    if stats.B >= 3 and np.ptp(stats.length_trace) > 0:
        summary["lag1_autocorrelation"] = lag1_autocorrelation(stats.length_trace)
    man.config["elapsed_s"] = round(elapsed, 3)
    man.write_json("summary.json", summary)
    _emit(summary)


def cmd_cftp(args, man):
    from . import cftp
    from .mcmc import make_rng
    from .stats import wilson_interval
    n, mode = args.n, args.mode
    if not 2 <= n <= 5:
        raise UsageError("cftp-diag supports 2 <= n <= 5")
    man.seeds = [args.seed]
    rng = make_rng(args.seed)
    if mode == "violations":
        pairs, checks, viol = cftp.count_monotonicity_violations(n)
        rec = {"n": n, "ordered_pairs": pairs, "flip_checks": checks, "violations": viol}
    elif mode == "sublattice":
        from .bpd import to_text
        bad = cftp.sublattice_failure_pairs(n)
        rec = {"n": n, "non_reduced_asms": len(cftp.non_reduced_asms(n)),
               "pairs": len(bad),
               "examples": [{"a": to_text(a), "b": to_text(b), "meet": to_text(m)}
                            for a, b, m in bad]}
    elif mode == "false-coalescence":
        hits, trials = cftp.false_coalescence_rate(n, args.trials, rng)
        lo, hi = wilson_interval(hits, trials)
        rec = {"n": n, "trials": trials, "false_coalescences": hits,
               "rate": hits / trials, "wilson99": [lo, hi]}
    else:
        chi2, df, p, by_perm = cftp.naive_cftp_bias(n, args.trials, rng)
        ups = cftp.perm_expected(n)
        total = sum(ups.values())
        rec = {"n": n, "trials": args.trials, "chi2": chi2, "df": df, "p": p,
               "table": [{"perm": str(w), "upsilon": ups[w], "observed": by_perm.get(w, 0),
                          "expected": args.trials * ups[w] / total}
                         for w in sorted(ups, key=lambda w: w.entries)]}
    man.write_json(f"cftp_{mode}.json", rec)
    _emit(rec)


def _timed_upsilon(q, w, formula, arith):
    from .evaluate import upsilon
    t = time.perf_counter()
    v = upsilon(w, formula, arith)
    q.put((time.perf_counter() - t, v.decimal(), v.approximate))


def _run_cell(w, formula, arith, timeout):
    """(seconds or None on timeout, value string) in a separate process."""
    ctx = mp.get_context("fork")
    q = ctx.Queue()
    p = ctx.Process(target=_timed_upsilon, args=(q, w, formula, arith))
    p.start()
    p.join(timeout)
    if p.is_alive():
        p.terminate()
        p.join()
        return None, None, False
    if q.empty():
        return None, None, False
    return q.get()


BENCH_COLUMNS = [("descent", "float"), ("descent", "rational"),
                 ("cotransition", "float"), ("cotransition", "exact"),
                 ("transition", "float"), ("transition", "exact")]


def cmd_bench(args, man):
    import math
    from .perm import layered, layered_length
    from .search import optimal_layered
    rows = []
    if args.suite == "layered":
        for n in args.n:
            spec, val = optimal_layered(n)
            w = layered(spec)
            row = {"n": n, "layers": list(spec.blocks), "length": layered_length(spec),
                   "log2_over_n2": round(math.log2(val) / n ** 2, 3), "value": str(val)}
            for formula, arith in BENCH_COLUMNS:
                secs, v, approx = _run_cell(w, formula, arith, args.timeout)
                key = f"{formula}_{arith}"
                row[key] = None if secs is None else round(secs, 4)
                row[key + "_wrong"] = v is not None and v != str(val)
            rows.append(row)
        header = ["n", "layers", "length", "log2/n^2"] + [f"{f}-{a}" for f, a in BENCH_COLUMNS]
        lines = ["\t".join(header)]
        for r in rows:
            cells = [str(r["n"]), "(" + ",".join(map(str, r["layers"])) + ")",
                     str(r["length"]), f"{r['log2_over_n2']:.3f}"]
            for f, a in BENCH_COLUMNS:
                s = r[f"{f}_{a}"]
                txt = f">{args.timeout:g}" if s is None else f"{s:.4f}"
                if r[f"{f}_{a}_wrong"]:
                    txt += "*"
                cells.append(txt)
            lines.append("\t".join(cells))
    else:
        from .mcmc import ChainConfig, run_chain
        man.seeds = [args.seed]
        n = args.n[0]
        stats = run_chain(ChainConfig(n, seed=args.seed, burn_in_steps=args.burn_in,
                                      thinning=args.thin, sample_count=args.count,
                                      archive=True))
        times = {f"{f}_{a}": [] for f, a in BENCH_COLUMNS}
        for r in stats.archive:
            w = tuple(int(x) for x in r)
            for f, a in BENCH_COLUMNS:
                secs, _, _ = _run_cell(w, f, a, args.timeout)
                times[f"{f}_{a}"].append(float("inf") if secs is None else secs)
        header = ["statistic"] + [f"{f}-{a}" for f, a in BENCH_COLUMNS]
        lines = ["\t".join(header)]
        for name, fn in (("mean", np.mean), ("median", np.median), ("max", np.max),
                         ("total", np.sum)):
            lines.append("\t".join([name] + [f"{fn(times[f'{f}_{a}']):.4f}"
                                             for f, a in BENCH_COLUMNS]))
        rows = [{"n": n, "count": args.count, "times": times}]
    table = "\n".join(lines) + "\n"
    man.write_text("bench.tsv", table)
    man.write_json("bench.json", rows)
    sys.stdout.write(table)


# -- parser ------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="schubcomp", description=__doc__.splitlines()[0])
    p.add_argument("--out", default="schubcomp-out", help="output directory")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("eval", help="evaluate Upsilon_w")
    s.add_argument("--perm", type=_perm_arg, required=True)
    s.add_argument("--formula", choices=["descent", "transition", "cotransition"],
                   default="cotransition")
    s.add_argument("--arith", choices=["exact", "rational", "float"], default="exact")
    s.add_argument("--mode", choices=["bfs", "dfs"], default="bfs")
    s.add_argument("--value-only", action="store_true", help="print only the value")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("oracle", help="brute-force Upsilon_w")
    s.add_argument("--perm", type=_perm_arg, required=True)
    s.add_argument("--method", choices=["reduced-words", "pipe-dream"], default="reduced-words")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("max-search", help="maximize Upsilon")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--mode", choices=["full", "layered", "neighborhood"], default="full")
    s.add_argument("--center", type=_perm_arg)
    s.add_argument("--radius", type=int, default=1)
    s.add_argument("--budget", type=int)
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_max_search)

    s = sub.add_parser("layered-opt", help="best layered permutation")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--method", choices=["product", "cotransition"], default="product")
    s.add_argument("--verify", action="store_true")
    s.set_defaults(func=cmd_layered_opt)

    s = sub.add_parser("enumerate", help="list all BPDs of size n")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--reduced", action="store_true")
    s.add_argument("--format", choices=["text", "height-csv", "asm-csv"], default="text")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("connectivity", help="move-graph checks")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--droops", action="store_true")
    s.add_argument("--stuck", action="store_true")
    s.set_defaults(func=cmd_connectivity)

    s = sub.add_parser("mcmc-sample", help="sample reduced BPDs")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--chains", type=int, default=1)
    s.add_argument("--burn-in", type=int, default=10_000_000)
    s.add_argument("--thin", type=int, default=100_000)
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--rect-dist", default="geometric",
                   choices=["geometric", "uniform", "log-uniform", "reverse-log-uniform"])
    s.add_argument("--flip-prob", type=float, default=0.75)
    s.add_argument("--start", choices=["w0", "id"], default="w0")
    s.add_argument("--archive", action="store_true", help="write samples.txt")
    s.set_defaults(func=cmd_mcmc)

    s = sub.add_parser("cftp-diag", help="coupling-from-the-past diagnostics")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--mode", required=True,
                   choices=["violations", "sublattice", "false-coalescence", "bias"])
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_cftp)

    s = sub.add_parser("bench", help="timing tables")
    s.add_argument("--suite", choices=["layered", "random"], default="layered")
    s.add_argument("--n", type=_int_range, default=[8, 9, 10, 11, 12])
    s.add_argument("--timeout", type=float, default=180.0)
    s.add_argument("--count", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burn-in", type=int, default=1_000_000)
    s.add_argument("--thin", type=int, default=10_000)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    config = {k: _jsonable(v) for k, v in vars(args).items() if k not in ("func", "out")}
    man = RunManifest(args.command, config, args.out)
    try:
        args.func(args, man)
    except (UsageError, PermError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        man.finish(EXIT_USAGE)
        return EXIT_USAGE
    except (ResourceCapExceeded, RationalOverflowError, MemoryError) as exc:
        sys.stderr.write(f"aborted: {exc}\n")
        man.finish(EXIT_CAP)
        return EXIT_CAP
    man.finish(EXIT_OK)
    return EXIT_OK


def _jsonable(v):
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return str(v)


if __name__ == "__main__":
    sys.exit(main())
