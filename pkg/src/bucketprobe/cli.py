"""Command line interface: bucketprobe <analytic|exact|simulate|validate|tables>."""
from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction

import numpy as np

from . import exact_model as em
from . import poisson_analytic as pa
from .montecarlo import BUCKET_STATS, PARKING_STATS, MCSpec, atom_z_scores, monte_carlo
from .report import RunReport, info, z_row
from .specialfn import ramanujan_q
from .tables import TABLES, cmd_tables
from .validate import SCALES, SUITES, cmd_validate

EXACT_STATS = ("overflow", "overflow_alt", "displacement", "block", "block_pmf", "last_not_full",
               "more_than_d_empty", "search_b1", "full_table", "fcfs_full_b1", "fcfs_pmf_b1")


# ---------------------------------------------------------------- analytic

def cmd_analytic(b, alpha, statistic="D_FCFS", kmax=20):
    if statistic not in pa.STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; expected one of {pa.STATISTICS}")
    if kmax < 0:
        raise ValueError("kmax must be nonnegative")
    ctx = pa.context(b, alpha)
    rep = RunReport("analytic", {"b": b, "alpha": alpha, "stat": statistic, "kmax": kmax})
    rep.add(info("mean", float(pa.MEAN_FUNCS[statistic](ctx))))
    if statistic == "B":
        rep.add(info("variance", float(pa.var_B(ctx))))
    pmf = pa.PMF_FUNCS[statistic](ctx, kmax)
    vals = np.asarray(pmf.values, dtype=float)[: kmax + 1]
    for k, v in enumerate(vals):
        rep.add(info(f"P({statistic} = {k})", float(v)))
    rep.add(info(f"P({statistic} > {kmax})", max(0.0, 1.0 - float(vals.sum()))))
    return rep


# ---------------------------------------------------------------- exact

def _exact_row(name, value, detail=""):
    if isinstance(value, Fraction):
        detail = (f"{value.numerator}/{value.denominator}" if value.denominator != 1
                  else str(value.numerator)) + (f"; {detail}" if detail else "")
    elif isinstance(value, int):
        detail = str(value) + (f"; {detail}" if detail else "")
    return info(name, float(value), provenance="exact", detail=detail)


def cmd_exact(m, n, b=1, statistic="overflow", d=0):
    if statistic not in EXACT_STATS:
        raise ValueError(f"unknown statistic {statistic!r}; expected one of {EXACT_STATS}")
    rep = RunReport("exact", {"m": m, "n": n, "b": b, "stat": statistic})
    if statistic == "overflow":
        rep.add(_exact_row("E overflow into bucket 0", em.expected_overflow_exact(m, n, b)))
    elif statistic == "overflow_alt":
        rep.add(_exact_row("E overflow (alternating sum)", em.expected_overflow_alt(m, n, b)))
    elif statistic == "displacement":
        rep.add(_exact_row("E displacement", em.expected_displacement_exact(m, n, b)))
    elif statistic == "block":
        rep.add(_exact_row("E last block length", em.expected_block_exact(m, n, b)))
    elif statistic == "block_pmf":
        law = em.block_pmf_exact(m, n, b)
        for k, v in enumerate(law.values):
            if k:
                rep.add(_exact_row(f"P(block = {k})", v))
    elif statistic == "last_not_full":
        rep.add(_exact_row("Q_{m,n,0} (tables with last bucket not full)", em.count_last_not_full(m, n, b)))
    elif statistic == "more_than_d_empty":
        rep.add(_exact_row(f"Q_{{m,n,{d}}} (more than {d} empty slots in last bucket)",
                           em.count_more_than_d_empty(m, n, d, b)))
    elif statistic == "search_b1":
        mv = em.successful_search_b1(m, n)
        rep.add(_exact_row("mean successful search", mv.mean, "(1 + Q_0(m, n-1)) / 2"))
        rep.add(_exact_row("variance successful search", mv.var))
        rep.add(_exact_row("mean, printed table convention", (1 + ramanujan_q(0, m, n)) / 2,
                           "(1 + Q_0(m, n)) / 2"))
    elif statistic == "full_table":
        exact, asym = em.full_table_displacement(b, m)
        if exact is not None:
            rep.add(_exact_row("mean displacement, full table", exact))
        rep.add(info("mean displacement, full table (asymptotic)", asym))
    elif statistic == "fcfs_full_b1":
        exact, asym = em.fcfs_full_moments_b1(n)
        if exact is not None:
            rep.add(_exact_row("mean displacement, full b=1 table", exact.mean))
            rep.add(_exact_row("variance displacement, full b=1 table", exact.var))
        rep.add(info("mean displacement (asymptotic)", asym.mean))
        rep.add(info("variance displacement (asymptotic)", asym.var))
    elif statistic == "fcfs_pmf_b1":
        law = em.fcfs_exact_pmf_b1(m, n)
        for k, v in enumerate(law.values):
            rep.add(_exact_row(f"P(D_FCFS = {k})", v))
    return rep


# ---------------------------------------------------------------- simulate

def _analytic_for(stat, ctx):
    """(mean, pmf function) of the Poisson-model counterpart, or None."""
    if stat in pa.MEAN_FUNCS:
        return pa.MEAN_FUNCS[stat](ctx), lambda k: pa.PMF_FUNCS[stat](ctx, k).values
    if stat == "parking_overflow":
        return pa.mean_Q(ctx), lambda k: pa.pmf_Q(ctx, k).values
    if stat == "parking_success":
        p = pa.prob_no_overflow(ctx)
        return p, lambda k: np.array([1 - p, p])
    return None


def cmd_simulate(m, b, n=None, alpha=None, heuristic="fcfs", topology="cyclic", reps=100, seed=0,
                 statistics=None, kmax=10, threads=1):
    if (n is None) == (alpha is None):
        raise ValueError("give exactly one of n (exact filling) or alpha (Poisson filling)")
    heuristic = heuristic.lower()
    if statistics is None:
        if topology == "parking":
            statistics = PARKING_STATS
        else:
            statistics = BUCKET_STATS + ("D_" + heuristic.upper(),)
    spec = MCSpec(m=m, b=b, filling="exact" if n is not None else "poisson", alpha=alpha, n=n,
                  topology=topology, statistics=tuple(statistics), reps=reps, seed=seed)
    sim = monte_carlo(spec, threads=threads)
    params = {"m": m, "b": b, "n": n, "alpha": alpha, "heuristic": heuristic, "topology": topology,
              "reps": reps, "seed": seed, "stats": list(statistics)}
    rep = RunReport("simulate", params)
    a = alpha if alpha is not None else (n / (b * m) if 0 < n < b * m else None)
    ctx = pa.context(b, a) if a is not None else None
    # only Poisson filling is compared against the limit laws; with exact
    # filling the z scores are shown but carry an O(1/m) bias
    flagged = alpha is not None
    for s in statistics:
        summ = sim[s]
        ref = _analytic_for(s, ctx) if ctx is not None else None
        if ref is None:
            rep.add(info(f"{s} mean", summ.mean, "simulated", stderr=summ.mean_se,
                         detail=f"{summ.count} observations"))
        else:
            rep.add(z_row(f"{s} mean", float(ref[0]), summ.mean, summ.mean_se, flagged=flagged,
                          detail=f"{summ.count} observations"))
        atoms = min(kmax + 1, max(len(summ.pmf), 1))
        if ref is not None:
            expected = np.asarray(ref[1](atoms - 1), dtype=float)[:atoms]
            expected = np.pad(expected, (0, atoms - expected.size))
            z = atom_z_scores(summ, expected, atoms)
        for k in range(atoms):
            p = float(summ.pmf[k]) if k < len(summ.pmf) else 0.0
            se = float(summ.pmf_se[k]) if k < len(summ.pmf_se) else 0.0
            if ref is None:
                rep.add(info(f"P({s} = {k})", p, "simulated", stderr=se))
            else:
                rep.add(z_row(f"P({s} = {k})", float(expected[k]), p, se, z=float(z[k]), flagged=False))
    return rep


# ---------------------------------------------------------------- main

def _stats_arg(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--timing", action="store_true", help="include wall time in JSON output")

    p = argparse.ArgumentParser(prog="bucketprobe", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analytic", parents=[common], help="Poisson-model laws")
    a.add_argument("--b", type=int, required=True)
    a.add_argument("--alpha", type=float, required=True)
    a.add_argument("--stat", default="D_FCFS", choices=pa.STATISTICS)
    a.add_argument("--kmax", type=int, default=20)

    e = sub.add_parser("exact", parents=[common], help="exact model counts and expectations")
    e.add_argument("--m", type=int, required=True)
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--b", type=int, default=1)
    e.add_argument("--stat", default="overflow", choices=EXACT_STATS)
    e.add_argument("--d", type=int, default=0, help="slot threshold for more_than_d_empty")

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo simulation")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--b", type=int, required=True)
    fill = s.add_mutually_exclusive_group(required=True)
    fill.add_argument("--n", type=int)
    fill.add_argument("--alpha", type=float)
    s.add_argument("--heuristic", default="fcfs", choices=("fcfs", "rh", "lcfs"))
    s.add_argument("--topology", default="cyclic", choices=("cyclic", "parking"))
    s.add_argument("--reps", type=int, default=100)
    s.add_argument("--stats", type=_stats_arg, help="comma separated statistics")
    s.add_argument("--kmax", type=int, default=10)

    v = sub.add_parser("validate", parents=[common], help="invariant suites")
    v.add_argument("--suite", default="all", choices=SUITES + ("all",))
    v.add_argument("--scale", default="small", choices=SCALES)

    t = sub.add_parser("tables", parents=[common], help="regenerate the classical comparison tables")
    t.add_argument("which", choices=TABLES)
    return p


def run(args):
    if args.command == "analytic":
        return cmd_analytic(args.b, args.alpha, args.stat, args.kmax)
    if args.command == "exact":
        return cmd_exact(args.m, args.n, args.b, args.stat, args.d)
    if args.command == "simulate":
        return cmd_simulate(args.m, args.b, args.n, args.alpha, args.heuristic, args.topology,
                            args.reps, args.seed, args.stats, args.kmax, args.threads)
    if args.command == "validate":
        return cmd_validate(args.suite, args.scale, args.seed, args.threads)
    return cmd_tables(args.which)


def main(argv=None):
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        rep = run(args)
    except (ValueError, ArithmeticError) as exc:
        print(f"bucketprobe: error: {exc}", file=sys.stderr)
        return 2
    rep.wall_time = time.perf_counter() - start
    text = rep.to_json(args.timing) if args.format == "json" else rep.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
