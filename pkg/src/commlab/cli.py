"""Command-line front end.

Every command builds a Report: a header echoing the configuration and a
list of rows (metric, value, exact, notes).  Rationals print as p/q and
checks as true/false, so the same configuration always yields the same
bytes.  Exit codes: 0 ok, 2 bad input or usage, 3 failed verification,
4 resource cap, 5 randomized search gave up.
"""
import argparse
import csv
import io
import itertools
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from . import acceptance
from . import analyzer as an
from . import ann
from . import polytopes as pt
from . import protocols as pr
from . import sketches as sk
from . import testers as ts
from .errors import CommlabError, InputError, VerificationError
from .gf2hash import FieldSpec, KWisePoly, SignHash, SplitMix64, splitmix64_word


class Report:
    def __init__(self, header):
        self.header = dict(header)
        self.rows = []

    def add(self, metric, value, notes=""):
        if isinstance(value, (bool, np.bool_)):
            text, exact = "true" if value else "false", True
        elif isinstance(value, Fraction):
            text, exact = f"{value.numerator}/{value.denominator}", True
        elif isinstance(value, (int, np.integer)):
            text, exact = str(int(value)), True
        elif isinstance(value, float):
            text, exact = f"{value:.6g}", False
        else:
            text, exact = str(value), True
        self.rows.append((metric, text, exact, notes))
        return self

    def check(self, metric, ok, notes=""):
        self.add(metric, bool(ok), notes)
        self.failed = getattr(self, "failed", False) or not ok
        return self

    def render(self, fmt):
        if fmt == "json":
            rows = [{"metric": m, "value": v, "exact": e, "notes": n} for m, v, e, n in self.rows]
            return json.dumps({"header": self.header, "rows": rows}, indent=1) + "\n"
        head = "# " + " ".join(f"{k}={v}" for k, v in self.header.items()) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["metric", "value", "exact", "notes"])
            for m, v, e, n in self.rows:
                w.writerow([m, v, "true" if e else "false", n])
            return head + buf.getvalue()
        out = [head]
        for m, v, e, n in self.rows:
            line = f"{m}: {v}" if v in ("true", "false") else f"{m}={v}"
            out.append(line + (f"  # {n}" if n else "") + "\n")
        return "".join(out)


def _ints(text, what):
    if text is None or text == "":
        return []
    try:
        return [int(t) for t in text.split(",")]
    except ValueError as exc:
        raise InputError(f"{what} must be comma-separated integers") from exc


def _need_seed(args):
    if args.seed is None:
        raise InputError("this command is randomized; pass --seed")
    return args.seed


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _header(args, **extra):
    h = {"commlab": __version__, "command": " ".join(args.command_path)}
    for k in sorted(vars(args)):
        if k in ("func", "command", "kind", "command_path", "out", "format") or k.startswith("_"):
            continue
        v = getattr(args, k)
        if v is not None and v is not False:
            h[k] = v if not isinstance(v, bool) else "true"
    h.update(extra)
    return h


# ---------------------------------------------------------------- sketch

def cmd_sketch(args):
    items = _ints(args.stream, "--stream")
    stream = sk.Stream(args.n, items)
    rep = Report(_header(args))
    kind = args.kind
    if kind == "f2":
        rep.add("F2", stream.moment(2))
        if args.exhaustive:
            spec = FieldSpec.for_universe(args.n)
            if spec.w > 3:
                raise InputError("--exhaustive enumerates 2^(4w) hashes; needs n <= 8")
            xs = [sk.F2Sketch(args.n, [SignHash(KWisePoly(spec, c))]).extend(items).estimate()
                  for c in itertools.product(range(spec.size), repeat=4)]
            ex = sum(xs, Fraction(0)) / len(xs)
            ex2 = sum((x * x for x in xs), Fraction(0)) / len(xs)
            f2 = stream.moment(2)
            rep.add("hashes", len(xs))
            rep.add("E[X]", ex)
            rep.add("E[X2]", ex2)
            rep.add("Var[X]", ex2 - ex * ex)
            rep.check("E[X]==F2", ex == f2)
            rep.check("E[X2]<=3F2^2", ex2 <= 3 * f2 * f2)
        else:
            seed = _need_seed(args)
            s = sk.F2Sketch.create(args.n, args.t, groups=args.groups, seed=seed).extend(items)
            rep.add("estimate", s.estimate(), f"t={args.t} groups={args.groups}")
            rep.add("state_bytes", len(s.to_bytes()))
    elif kind == "f0":
        seed = _need_seed(args)
        kp = args.kprime or sk.F0Sketch.kprime_for(args.eps)
        s = sk.F0Sketch.create(args.n, kp, seed=seed).extend(items)
        rep.add("F0", stream.distinct())
        rep.add("estimate", s.estimate(), f"k'={kp}")
        rep.add("state_bytes", len(s.to_bytes()))
    elif kind == "finf":
        s = sk.FInfSketch(args.n).extend(items)
        rep.add("Finf", stream.max_frequency())
        rep.add("estimate", s.estimate())
    elif kind == "morris":
        seed = _need_seed(args)
        ests = []
        for trial in range(args.trials):
            mc = sk.MorrisCounter(splitmix64_word(seed, trial))
            for _ in items:
                mc.touch()
            ests.append(mc.estimate())
        rep.add("count", len(items))
        rep.add("mean_estimate", sum(ests, Fraction(0)) / len(ests), f"{args.trials} counters")
    elif kind == "mg":
        mg = sk.MisraGries(args.k).extend(items)
        rep.add("candidates", " ".join(str(c) for c in sorted(mg.candidates())))
        for c in sorted(mg.candidates()):
            rep.add(f"count[{c}]", mg.count(c), f"true {stream.frequencies()[c - 1]}")
    return rep


# ---------------------------------------------------------------- protocol

def _bits_arg(text, what):
    if text is None:
        raise InputError(f"{what} is required")
    return pr.as_bits(text)


def cmd_protocol(args):
    rep = Report(_header(args))
    if args.kind == "eq":
        x, y = _bits_arg(args.x, "--x"), _bits_arg(args.y, "--y")
        out = pr.run_equality(x, y, pr.Tape(_need_seed(args)), args.reps)
        rep.add("output", out.output)
        rep.add("bits", out.transcript.total)
        rep.add("transcript", out.transcript.to_json())
        if args.exact:
            rep.add("error_exact", pr.equality_error_exact(x, y, args.reps))
    elif args.kind == "cis":
        edges = []
        for tok in (args.edges or "").split(","):
            if tok:
                try:
                    u, v = tok.split("-")
                    edges.append((int(u), int(v)))
                except ValueError as exc:
                    raise InputError("--edges looks like 0-1,1-2") from exc
        inst = pr.CisInstance(args.n, edges, _ints(args.clique, "--clique"),
                              _ints(args.indep, "--indep"))
        out = pr.run_cis(inst)
        rep.add("output", out.output, "1 means disjoint")
        rep.add("bits", out.transcript.total)
        rep.add("bound", pr.cis_bit_bound(args.n))
        rep.check("bits<=bound", out.transcript.total <= pr.cis_bit_bound(args.n))
        rep.add("transcript", out.transcript.to_json())
    elif args.kind == "gh":
        x, y = _bits_arg(args.x, "--x"), _bits_arg(args.y, "--y")
        params = pr.GapParams.make(args.L, Fraction(args.eps), Fraction(args.delta))
        out = pr.run_epsgh(x, y, args.L, Fraction(args.eps), Fraction(args.delta),
                           pr.Tape(_need_seed(args)))
        rep.add("output", out.output, "1 means close")
        rep.add("s", params.s)
        rep.add("threshold", params.threshold)
        rep.add("bits", out.transcript.total)
        rep.add("distance", int(np.count_nonzero(x != y)))
    return rep


# ---------------------------------------------------------------- analyze

def cmd_analyze(args):
    M = an.FunctionMatrix.from_text(_read(args.matrix))
    rep = Report(_header(args, dims="x".join(map(str, M.dims))))
    if args.kind == "cover":
        size, cover = an.min_cover(M, args.value)
        if not an.verify_cover(M, cover, args.value):
            raise VerificationError("cover failed verification")
        rep.add("min_cover", size)
        rep.add("nondet_cc", an.nondet_cc(M, args.value) if size else 0)
    elif args.kind == "detcc":
        rep.add("det_cc", an.det_cc(M))
    elif args.kind == "box":
        best, box = an.max_box_ones(M)
        rep.add("max_box_ones", best)
        if box is not None:
            rep.add("box", " x ".join("{" + ",".join(map(str, sorted(s))) + "}" for s in box.sides))
    elif args.kind == "count":
        for v in (0, 1, an.STAR):
            rep.add(f"count[{'*' if v == an.STAR else v}]", M.count(v))
    return rep


# ---------------------------------------------------------------- ann

def _points(args, rng):
    if args.points:
        M = an.FunctionMatrix.from_text(_read(args.points))
        if M.k != 2 or np.any(M.entries == an.STAR):
            raise InputError("point files are 2-d 0/1 matrices")
        return M.entries.astype(np.uint8)
    return rng.integers(0, 2, (args.n, args.d)).astype(np.uint8)


def cmd_ann(args):
    seed = _need_seed(args)
    rng = np.random.default_rng(seed)
    P = _points(args, rng)
    eps, delta = Fraction(args.eps), Fraction(args.delta)
    idx = ann.AnnIndex(P, eps, delta, seed=seed)
    rep = Report(_header(args))
    rep.add("points", idx.n)
    rep.add("d", idx.d)
    rep.add("hash_length", idx.s)
    rep.add("probe_budget", ann.probe_budget(idx.d))
    if args.kind == "build":
        for L in sorted({1, max(1, idx.d // 4), max(1, idx.d // 2)}):
            rep.add(f"threshold[L={L}]", idx.table(0, L).threshold)
        return rep
    if args.query:
        q = pr.as_bits(args.query)
        if len(q) != idx.d:
            raise InputError("query has the wrong dimension")
    else:
        q = rng.integers(0, 2, idx.d).astype(np.uint8)
    pid, L = ann.query_full(idx, q, seed=seed)
    nearest = min(idx.distance(i, q) for i in range(idx.n))
    rep.add("answer", pid)
    rep.add("scale", L)
    rep.add("distance", idx.distance(pid, q))
    rep.add("nearest", nearest)
    rep.add("lookups", idx.lookups)
    rep.check("within_1+eps", idx.distance(pid, q) <= (1 + eps) * nearest)
    return rep


# ---------------------------------------------------------------- test

def cmd_test(args):
    seed = _need_seed(args)
    if args.function:
        f = ts.RangedFn.from_text(_read(args.function))
    else:
        rng = SplitMix64(seed)
        f = ts.BoolFn(args.n, [rng.randbelow(2) for _ in range(1 << args.n)])
    rep = Report(_header(args))
    rep.add("table", " ".join(map(str, f.table)))
    rejections = 0
    if args.kind == "blr":
        if f.r != 2:
            raise InputError("BLR needs a Boolean function")
        rep.add("distance_to_linear", ts.distance_to_linear(f))
        rep.add("reject_probability", ts.blr_reject_probability(f), "one trial, exact")
        rep.add("trials_per_run", ts.blr_trials(Fraction(args.eps)))
        for run in range(args.trials):
            rejections += not ts.blr_test(f, Fraction(args.eps), pr.Tape(splitmix64_word(seed, run)))[0]
    else:
        counts, prob = ts.violation_slices(f)
        g, changes = ts.monotonize(f)
        dist = ts.distance_to_monotone(f)
        rep.add("violations", " ".join(map(str, counts)))
        rep.add("reject_probability", prob, "one trial, exact")
        rep.add("distance_to_monotone", dist)
        rep.add("monotonize_changes", changes)
        rep.check("distance<=changes", dist <= changes)
        # t = ceil(3n / eps) with eps the exact distance fraction
        t = args.edge_trials or (-(-3 * f.n * (1 << f.n) // dist) if dist else f.n)
        rep.add("trials_per_run", t)
        for run in range(args.trials):
            rejections += not ts.edge_test(f, t, pr.Tape(splitmix64_word(seed, run)))
    rep.add("runs", args.trials)
    rep.add("rejections", rejections)
    return rep


# ---------------------------------------------------------------- polytope

def cmd_polytope(args):
    rep = Report(_header(args))
    if args.kind == "perm":
        sys_ = pt.permutahedron_ef(args.n)
        rep.add("constraints", len(sys_.rows))
        rep.add("le_rows", sys_.count("le"))
        rep.add("eq_rows", sys_.count("eq"))
        if args.objective:
            c = _ints(args.objective, "--objective")
            value, x, _ = pt.lp_optimize(sys_, c)
            rep.add("lp_value", value)
            rep.add("x", " ".join(f"{v.numerator}/{v.denominator}" for v in x))
            rep.check("matches_brute_force", value == pt.brute_max(c))
    else:
        S = pt.cor_slack(args.n)
        M = pt.mu_matrix(args.n)
        size, cover = an.min_cover(M, 1)
        proto = pt.fv_protocol_from_cover(M, cover)
        rep.add("faces", len(S.entries))
        rep.check("support==M_U", S.support() == M)
        rep.add("min_cover", size)
        rep.add("protocol_bits", proto.cost)
        rep.check("protocol_correct", proto.check_all())
    return rep


# ---------------------------------------------------------------- suite

def cmd_suite(args):
    if args.name not in acceptance.SUITES:
        raise InputError(f"unknown suite {args.name!r}; known: {', '.join(acceptance.SUITES)}")
    rep = Report(_header(args))
    for c in (acceptance.by_number(k) for k in acceptance.SUITES[args.name]):
        start = time.perf_counter()
        res = acceptance.run_criterion(c, args.quick)
        # timing goes to stderr so the report bytes stay reproducible
        print(f"criterion {c.number}: {time.perf_counter() - start:.1f}s", file=sys.stderr)
        rep.check(f"criterion_{c.number}", res.passed, res.detail)
    return rep


# ---------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int, default=100)
    common.add_argument("--out")
    common.add_argument("--format", choices=("text", "csv", "json"), default="text")

    p = argparse.ArgumentParser(prog="commlab", description="Communication complexity workbench.")
    p.add_argument("--version", action="version", version=f"commlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sketch", parents=[common], help="streaming sketches")
    s.add_argument("kind", choices=("f2", "f0", "finf", "morris", "mg"))
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--stream", default="")
    s.add_argument("--t", type=int, default=40)
    s.add_argument("--groups", type=int, default=1)
    s.add_argument("--eps", default="1/2")
    s.add_argument("--kprime", type=int)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--exhaustive", action="store_true")
    s.set_defaults(func=cmd_sketch)

    s = sub.add_parser("protocol", parents=[common], help="two-party protocols")
    s.add_argument("kind", choices=("eq", "cis", "gh"))
    s.add_argument("--x")
    s.add_argument("--y")
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--exact", action="store_true")
    s.add_argument("--n", type=int)
    s.add_argument("--edges")
    s.add_argument("--clique")
    s.add_argument("--indep")
    s.add_argument("--L", type=int, default=1)
    s.add_argument("--eps", default="1")
    s.add_argument("--delta", default="1/10")
    s.set_defaults(func=cmd_protocol)

    s = sub.add_parser("analyze", parents=[common], help="communication matrix analysis")
    s.add_argument("kind", choices=("cover", "detcc", "box", "count"))
    s.add_argument("--matrix", required=True)
    s.add_argument("--value", type=int, choices=(0, 1), default=1)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("ann", parents=[common], help="approximate nearest neighbour")
    s.add_argument("kind", choices=("build", "query"))
    s.add_argument("--d", type=int, default=64)
    s.add_argument("--n", type=int, default=32)
    s.add_argument("--eps", default="1")
    s.add_argument("--delta", default="1/10")
    s.add_argument("--points")
    s.add_argument("--query")
    s.set_defaults(func=cmd_ann)

    s = sub.add_parser("test", parents=[common], help="property testers")
    s.add_argument("kind", choices=("blr", "mono"))
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--eps", default="1/4")
    s.add_argument("--function")
    s.add_argument("--edge-trials", type=int)
    s.set_defaults(func=cmd_test)

    s = sub.add_parser("polytope", parents=[common], help="extended formulations and slack")
    s.add_argument("kind", choices=("perm", "corslack"))
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--objective")
    s.set_defaults(func=cmd_polytope)

    s = sub.add_parser("suite", parents=[common], help="acceptance suites")
    s.add_argument("name")
    s.add_argument("--quick", action="store_true")
    s.set_defaults(func=cmd_suite)
    return p


def _threads():
    raw = os.environ.get("COMMLAB_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise InputError("COMMLAB_THREADS must be a positive integer")
    return n


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.command_path = [args.command] + ([args.kind] if hasattr(args, "kind") else [])
    try:
        _threads()
        rep = args.func(args)
        text = rep.render(args.format)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except CommlabError as exc:
        print(f"commlab: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"commlab: {exc}", file=sys.stderr)
        return 2
    return 3 if getattr(rep, "failed", False) else 0


if __name__ == "__main__":
    sys.exit(main())
