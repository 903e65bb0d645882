"""Invariant suites run by `bucketprobe validate`.

roots       tree function and root family residuals
pgf         identities between the Poisson-model PGFs
exact       exact counts and expectations against exhaustive enumeration
simulation  analytic laws against Monte Carlo on the standard grid
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import exact_model as em
from . import poisson_analytic as pa
from .enumeration import enumerate_counts
from .montecarlo import DEFAULT_STATS, MCSpec, atom_z_scores, monte_carlo
from .report import Row, RunReport, z_row
from .specialfn import INV_E, tree_fn, zeta_roots_array

SUITES = ("roots", "pgf", "exact", "simulation")
SCALES = ("small", "full")

TREE_TOL = 1e-12
ROOT_TOL = 1e-10
PGF_TOL = 1e-9
SIM_GRID_B = (1, 2, 3)
SIM_GRID_ALPHA = (0.3, 0.5, 0.7, 0.9)
SIM_M = 2000
SIM_ATOMS = 30


def _check(name, err, tol, detail=""):
    return Row(name, analytic=float(err), tolerance=tol, provenance="analytic",
               passed=bool(err <= tol), detail=detail)


# ---------------------------------------------------------------- roots

def suite_roots(scale="small", seed=0):
    rows = []
    r = INV_E * np.linspace(0.0, 1.0, 41)
    th = np.linspace(-np.pi, np.pi, 181)
    z = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    t = tree_fn(z)
    rows.append(_check("tree_fn residual |T e^-T - z| on |z| <= 1/e",
                       np.max(np.abs(t * np.exp(-t) - z)), TREE_TOL, f"{z.size} points"))
    rng = np.random.default_rng(seed)
    n_ctx = 1000 if scale == "full" else 200
    worst = 0.0
    for _ in range(n_ctx):
        b = int(rng.integers(1, 51))
        alpha = float(rng.uniform(0.01, 0.99))
        ctx = pa.context(b, alpha)
        q = ctx.radius * np.sqrt(rng.uniform(0, 1, 16)) * np.exp(2j * np.pi * rng.uniform(0, 1, 16))
        q = np.concatenate([q, [1.0, ctx.radius, -ctx.radius]])
        zs = zeta_roots_array(b, alpha, q)
        res = np.abs(zs**b - np.exp(alpha * b * (zs - 1)) * q[None, :])
        worst = max(worst, float(res.max()))
    rows.append(_check("zeta root residual |z^b - e^(ab(z-1)) q|", worst, ROOT_TOL,
                       f"{n_ctx} random contexts, b <= 50"))
    return rows


# ---------------------------------------------------------------- pgf

PGF_CONTEXTS = [(b, a) for b in (1, 2, 3, 5, 10) for a in (0.3, 0.6, 0.9)]


def _circle(r, n=64):
    return r * np.exp(2j * np.pi * (np.arange(n) + 0.25) / n)


def suite_pgf(scale="small", seed=0):
    errs = {k: 0.0 for k in ("H", "C", "U", "Bhat", "D_RH")}
    k = np.arange(61)
    for b, a in PGF_CONTEXTS:
        ctx = pa.context(b, a)
        # coefficient identities compare independent contour extractions
        pq = pa.pmf_Q(ctx, 60).values
        lam = a * b
        pois = np.exp(-lam + k * np.log(lam) - np.array([math.lgamma(i + 1) for i in k]))
        errs["H"] = max(errs["H"], np.max(np.abs(pa.pmf_H(ctx, 60).values - np.convolve(pois, pq)[:61])))
        pv = pa.pmf_V(ctx, 60).values
        errs["C"] = max(errs["C"], np.max(np.abs(pa.pmf_C(ctx, 60).values - np.convolve(pq, pv)[:61])))
        for r in (0.5, 1.0, ctx.radius):
            q = _circle(r)
            e = np.abs(pa.psi_U(ctx, q) * (1 - q) - ctx.t0 * (1 - pa.psi_B(ctx, q)))
            errs["U"] = max(errs["U"], e.max())
        pb = pa.pmf_B(ctx, 60).values
        pbh = pa.pmf_Bhat(ctx, 60).values
        errs["Bhat"] = max(errs["Bhat"], np.max(np.abs(pbh - k * pb * ctx.t0)))
        # D_RH law from aggregated C atoms against the closed form PGF
        prh = pa.pmf_D_RH(ctx, 120).values
        q = _circle(0.9)
        series = np.polynomial.polynomial.polyval(q, prh)
        errs["D_RH"] = max(errs["D_RH"], np.max(np.abs(series - pa.psi_RH(ctx, q))))
    names = {
        "H": "H law = Poisson(b alpha) * Q law (psi_H = e^(ab(q-1)) psi_Q)",
        "C": "C law = Q law * V law (psi_C = psi_Q psi_V)",
        "U": "psi_U (1 - q) = T0 (1 - psi_B)",
        "Bhat": "size bias P(Bhat = k) = k P(B = k) / E B",
        "D_RH": "floor(C/b) aggregation matches psi_RH",
    }
    return [_check(names[k], v, PGF_TOL, f"{len(PGF_CONTEXTS)} contexts") for k, v in errs.items()]


# ---------------------------------------------------------------- exact

def exact_cases(cap, extra=0):
    """(b, m, n) with b <= 3, m <= 5, n <= bm + extra and m^n <= cap."""
    for b in (1, 2, 3):
        for m in range(1, 6):
            for n in range(0, b * m + extra + 1):
                if m**n <= cap:
                    yield b, m, n


def _mean(counts, total):
    return Fraction(sum(k * c for k, c in counts.items()), total)


def suite_exact(scale="small", seed=0):
    cap = 2**20 if scale == "full" else 2**16
    checks = {k: [0, []] for k in ("overflow", "parking_overflow", "displacement", "block_mean", "block_pmf",
                                   "last_not_full", "more_than_d_empty", "fcfs_pmf_b1")}

    def record(key, ok, case):
        checks[key][0] += 1
        if not ok:
            checks[key][1].append(case)

    for b, m, n in exact_cases(cap, extra=2):
        cnt, tot = enumerate_counts(m, b, n, "parking_overflow")
        record("parking_overflow", em.expected_overflow_exact(m, n, b) == _mean(cnt, tot), (b, m, n))
    for b, m, n in exact_cases(cap):
        case = (b, m, n)
        cnt, tot = enumerate_counts(m, b, n, "overflow")
        record("overflow", em.expected_overflow_exact(m, n, b) == _mean(cnt, tot), case)
        if n > 0:
            cnt, tot = enumerate_counts(m, b, n, "displacement", heuristic="rh")
            record("displacement", em.expected_displacement_exact(m, n, b) == _mean(cnt, tot), case)
            if m**n <= 4096:
                # total displacement does not depend on the heuristic; check FCFS order by order
                cnt, tot = enumerate_counts(m, b, n, "displacement", heuristic="fcfs")
                record("displacement", em.expected_displacement_exact(m, n, b) == _mean(cnt, tot), case)
        cnt, tot = enumerate_counts(m, b, n, "last_not_full")
        record("last_not_full", em.count_last_not_full(m, n, b) == cnt.get(1, 0), case)
        cnt, _ = enumerate_counts(m, b, n, "empty_in_last")
        for d in range(b):
            want = sum(c for v, c in cnt.items() if v > d)
            record("more_than_d_empty", em.count_more_than_d_empty(m, n, d, b) == want, case + (d,))
        if n < b * m:
            cnt, tot = enumerate_counts(m, b, n, "block")
            record("block_mean", em.expected_block_exact(m, n, b) == _mean(cnt, tot), case)
            law = em.block_pmf_exact(m, n, b)
            ok = all(law[k] == Fraction(cnt.get(k, 0), tot) for k in range(max(len(law), max(cnt) + 1)))
            record("block_pmf", ok, case)
        if b == 1 and 1 <= n <= m:
            cnt, tot = enumerate_counts(m, 1, n, "displacement", heuristic="fcfs")
            law = em.fcfs_exact_pmf_b1(m, n)
            ok = all(law[k] == Fraction(cnt.get(k, 0), tot) for k in range(max(len(law), max(cnt) + 1)))
            record("fcfs_pmf_b1", ok, case)
    rows = []
    for key, (count, bad) in checks.items():
        rows.append(Row(f"exact {key} vs enumeration", exact=float(len(bad)), tolerance=0.0,
                        provenance="exact", passed=not bad and count > 0,
                        detail=f"{count} cases, m^n <= {cap}" + (f"; first mismatch {bad[0]}" if bad else "")))
    return rows


# ---------------------------------------------------------------- simulation

def simulation_cell(b, alpha, keys, seed, threads=1, stats=DEFAULT_STATS, m=SIM_M):
    """Rows comparing the simulated laws of one (b, alpha) cell with the analytic ones."""
    reps = max(2, math.ceil(keys / (alpha * b * m)))
    sim = monte_carlo(MCSpec(m=m, b=b, alpha=alpha, reps=reps, seed=seed, statistics=tuple(stats)),
                      threads=threads)
    ctx = pa.context(b, alpha)
    rows = []
    for s in stats:
        summ = sim[s]
        ref = pa.PMF_FUNCS[s](ctx, SIM_ATOMS - 1).values
        z = atom_z_scores(summ, ref, SIM_ATOMS)
        k = int(np.argmax(np.abs(z)))
        tag = f"b={b} alpha={alpha} {s}"
        obs = float(summ.pmf[k]) if k < len(summ.pmf) else 0.0
        se = float(summ.pmf_se[k]) if k < len(summ.pmf_se) else 0.0
        rows.append(z_row(f"{tag} pmf worst atom", float(ref[k]) if k < len(ref) else 0.0, obs, se,
                          z=float(z[k]), detail=f"atom {k} of {SIM_ATOMS}; {summ.count} observations"))
        rows.append(z_row(f"{tag} mean", float(pa.MEAN_FUNCS[s](ctx)), summ.mean, summ.mean_se,
                          detail=f"{summ.reps} tables of {m} buckets"))
    return rows


def suite_simulation(scale="small", seed=1, threads=1):
    keys = 10**6 if scale == "full" else 10**5
    rows = []
    for b in SIM_GRID_B:
        for a in SIM_GRID_ALPHA:
            rows.extend(simulation_cell(b, a, keys, seed, threads))
    return rows


def cmd_validate(suite="all", scale="small", seed=1, threads=1):
    suite = str(suite).lower()
    scale = str(scale).lower()
    if suite not in SUITES + ("all",):
        raise ValueError(f"unknown suite {suite!r}")
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    rep = RunReport("validate", {"suite": suite, "scale": scale, "seed": seed})
    todo = SUITES if suite == "all" else (suite,)
    for s in todo:
        if s == "simulation":
            rep.extend(suite_simulation(scale, seed, threads))
        else:
            rep.extend({"roots": suite_roots, "pgf": suite_pgf, "exact": suite_exact}[s](scale, seed))
    return rep
