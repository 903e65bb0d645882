"""Monte Carlo estimation of table statistics with replication-level errors.

Each replication draws its own table from a generator seeded with
(seed, replication index), so results do not depend on how replications
are scheduled.  Every statistic is a ratio estimator: per replication we
keep the number of observations falling in each bin and the number of
observations, and standard errors come from the spread of those
per-replication ratios (which accounts for dependence inside a table).
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .simulator import (
    OVERFLOWED,
    _norm,
    _rng,
    TOPOLOGIES,
    draw_ids,
    fcfs_positions,
    insert_all,
    profile_from_counts,
    rh_positions,
)

BUCKET_STATS = ("Q", "H", "Y", "B", "Bhat", "U", "Ukeys")
KEY_STATS = ("D_FCFS", "D_RH", "D_LCFS")
PARKING_STATS = ("parking_success", "parking_overflow")
ALL_STATS = BUCKET_STATS + KEY_STATS + PARKING_STATS
DEFAULT_STATS = ("Q", "H", "Y", "B", "Bhat", "U", "Ukeys", "D_FCFS", "D_RH")


@dataclass
class MCSpec:
    m: int
    b: int
    filling: str = "poisson"   # "poisson" (needs alpha) or "exact" (needs n)
    alpha: float | None = None
    n: int | None = None
    topology: str = "cyclic"
    statistics: tuple = DEFAULT_STATS
    reps: int = 100
    seed: int = 0

    def check(self):
        if self.m < 1 or self.b < 1 or self.reps < 1:
            raise ValueError("need m, b, reps >= 1")
        if self.filling == "poisson":
            if self.alpha is None or not 0 < self.alpha < 1:
                raise ValueError("Poisson filling needs 0 < alpha < 1")
        elif self.filling == "exact":
            if self.n is None or self.n < 0:
                raise ValueError("exact filling needs n >= 0")
            if self.topology == "cyclic" and self.n >= self.b * self.m:
                raise ValueError("cyclic tables need n < bm")
        else:
            raise ValueError(f"unknown filling {self.filling!r}")
        _norm(self.topology, TOPOLOGIES, "topology")
        allowed = PARKING_STATS if self.topology == "parking" else BUCKET_STATS + KEY_STATS
        for s in self.statistics:
            if s not in allowed:
                raise ValueError(f"statistic {s!r} not available for {self.topology} tables")


class _Acc:
    """Sufficient statistics for ratio estimates; merging is addition."""

    def __init__(self):
        self.reps = 0
        self.sN = np.zeros(0, dtype=np.int64)
        self.sN2 = np.zeros(0, dtype=np.int64)
        self.sND = np.zeros(0, dtype=np.int64)
        self.sD = 0
        self.sD2 = 0
        self.sV = 0
        self.sV2 = 0
        self.sVD = 0

    @staticmethod
    def _pad(a, n):
        return a if a.size >= n else np.concatenate([a, np.zeros(n - a.size, dtype=a.dtype)])

    def add(self, values):
        values = np.asarray(values, dtype=np.int64)
        hist = np.bincount(values) if values.size else np.zeros(0, dtype=np.int64)
        d = int(values.size)
        v = int(values.sum())
        size = max(hist.size, self.sN.size)
        self.sN = self._pad(self.sN, size)
        self.sN2 = self._pad(self.sN2, size)
        self.sND = self._pad(self.sND, size)
        hist = self._pad(hist, size)
        self.sN += hist
        self.sN2 += hist * hist
        self.sND += hist * d
        self.reps += 1
        self.sD += d
        self.sD2 += d * d
        self.sV += v
        self.sV2 += v * v
        self.sVD += v * d

    def merge(self, other):
        size = max(self.sN.size, other.sN.size)
        for name in ("sN", "sN2", "sND"):
            setattr(self, name, self._pad(getattr(self, name), size) + self._pad(getattr(other, name), size))
        for name in ("reps", "sD", "sD2", "sV", "sV2", "sVD"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self


def _ratio(sN, sN2, sND, sD, sD2, reps):
    r = sN / sD
    if reps < 2:
        return r, np.full_like(r, np.nan)
    dbar = sD / reps
    ss = sN2 - 2 * r * sND + r * r * sD2
    return r, np.sqrt(np.maximum(ss, 0) / (reps * (reps - 1))) / dbar


@dataclass
class StatSummary:
    name: str
    reps: int
    count: int          # total observations
    hist: np.ndarray    # total observations per value
    pmf: np.ndarray
    pmf_se: np.ndarray
    mean: float
    mean_se: float
    dispersion: np.ndarray  # variance to mean ratio of per-replication counts


@dataclass
class SimStats:
    spec: MCSpec
    stats: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.stats[name]


def _summarise(name, acc):
    if acc.sD == 0:
        empty = np.zeros(0)
        return StatSummary(name, acc.reps, 0, empty, empty, empty, float("nan"), float("nan"), empty)
    pmf, se = _ratio(acc.sN.astype(float), acc.sN2.astype(float), acc.sND.astype(float),
                     float(acc.sD), float(acc.sD2), acc.reps)
    mean, mse = _ratio(np.array([float(acc.sV)]), np.array([float(acc.sV2)]),
                       np.array([float(acc.sVD)]), float(acc.sD), float(acc.sD2), acc.reps)
    sN = acc.sN.astype(float)
    disp = np.where(sN > 0, (acc.sN2 - sN * sN / acc.reps) / np.maximum(sN, 1), 1.0)
    return StatSummary(name, acc.reps, acc.sD, acc.sN.copy(), pmf, se, float(mean[0]), float(mse[0]), disp)


def _draw(spec, rng):
    m, b = spec.m, spec.b
    if spec.filling == "exact":
        return rng.integers(0, m, size=spec.n)
    while True:
        n = rng.poisson(b * spec.alpha * m)
        # a cyclic table needs a bucket with room; the rejected event has
        # probability exponentially small in m at the loads we use
        if spec.topology == "parking" or n < b * m:
            return rng.integers(0, m, size=n)


def table_observations(spec, h, rng):
    """Observations of every requested statistic for one table."""
    m, b = spec.m, spec.b
    out = {}
    stats = set(spec.statistics)
    x = np.bincount(h, minlength=m)
    if spec.topology == "parking":
        prof = profile_from_counts(x, b, "interval")
        if "parking_success" in stats:
            out["parking_success"] = [int(prof.q[-1] == 0)]
        if "parking_overflow" in stats:
            out["parking_overflow"] = [int(prof.q[-1])]
        return out

    prof = profile_from_counts(x, b, "cyclic")
    if stats & {"Q", "H", "Y", "B", "Bhat", "U", "Ukeys"}:
        out["Q"], out["H"], out["Y"] = prof.q, prof.h, prof.y
        nf = np.flatnonzero(prof.y < b)
        ext = np.concatenate([nf, [nf[0] + m]])
        lengths = np.diff(ext)                     # block ending at nf[j+1]
        nxt = np.searchsorted(nf, np.arange(m))    # index into ext of the next non-full bucket
        end = ext[nxt]
        u = end - np.arange(m)
        out["B"] = lengths
        # block containing bucket i is the one ending at ext[nxt[i]]
        blk = np.concatenate([[lengths[-1]], lengths])
        out["Bhat"] = blk[nxt]
        out["U"] = u
        out["Ukeys"] = b * u + prof.y[end % m]
    if "D_FCFS" in stats:
        out["D_FCFS"] = (fcfs_positions(m, b, h) - h) % m
    if "D_RH" in stats:
        ids = draw_ids(rng, h.size)
        out["D_RH"] = (rh_positions(m, b, h, ids) - h) % m
    if "D_LCFS" in stats:
        out["D_LCFS"] = insert_all(m, b, h, "lcfs").displacement()
    return {k: v for k, v in out.items() if k in stats}


def _run_reps(spec, first, last):
    accs = {s: _Acc() for s in spec.statistics}
    for rep in range(first, last):
        rng = _rng(spec.seed, rep)
        h = _draw(spec, rng)
        obs = table_observations(spec, h, rng)
        for s in spec.statistics:
            accs[s].add(obs[s])
    return accs


def monte_carlo(spec, threads=1):
    """Run spec.reps replications and summarise every statistic."""
    spec.check()
    if threads <= 1 or spec.reps < 2 * threads:
        accs = _run_reps(spec, 0, spec.reps)
    else:
        bounds = np.linspace(0, spec.reps, threads + 1).astype(int)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_reps, [spec] * threads, bounds[:-1], bounds[1:]))
        accs = parts[0]
        for part in parts[1:]:
            for s in accs:
                accs[s].merge(part[s])
    return SimStats(spec, {s: _summarise(s, a) for s, a in accs.items()})


def z_scores(observed, stderr, expected, floor_n=None, dispersion=None):
    """(observed - expected) / se, with a floor on se built from the expected value.

    Rare atoms are seen in few replications, so their replication spread
    understates the error.  The floor is the compound Poisson error of the
    expected count, sqrt(c p (1 - p) / floor_n), where c (dispersion,
    default 1) is the variance to mean ratio of the per-replication counts;
    for a rare atom it is about the number of observations one event adds.
    """
    observed = np.asarray(observed, float)
    expected = np.asarray(expected, float)
    se = np.asarray(stderr, float)
    if floor_n:
        p = np.clip(expected, 0, 1)
        c = 1.0 if dispersion is None else np.maximum(np.asarray(dispersion, float), 1.0)
        se = np.maximum(se, np.sqrt(c * p * (1 - p) / floor_n))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, (observed - expected) / se, np.where(observed == expected, 0.0, np.inf))
    return z


def clump_sizes(name, size):
    """Known lower bound on the observations one event adds to each atom.

    A block of length k is seen from each of its k buckets.
    """
    k = np.arange(size, dtype=float)
    return np.maximum(k, 1.0) if name == "Bhat" else np.ones(size)


def atom_z_scores(summary, expected, atoms=30):
    """z scores of the first atoms of a simulated law against expected probabilities.

    Atoms with no observations take the dispersion of the last atom that
    had some, since clumping grows along the tail.
    """
    expected = np.asarray(expected, float)[:atoms]
    expected = np.pad(expected, (0, atoms - expected.size))

    def fit(a, fill):
        a = np.asarray(a, float)[:atoms]
        return np.pad(a, (0, atoms - a.size), constant_values=fill)

    hits = fit(summary.hist, 0.0)
    disp = fit(summary.dispersion, 1.0)
    last = 1.0
    for k in range(atoms):
        if hits[k] > 0:
            last = disp[k]
        else:
            disp[k] = last
    disp = np.maximum(disp, clump_sizes(summary.name, atoms))
    return z_scores(fit(summary.pmf, 0.0), fit(summary.pmf_se, 0.0), expected,
                    floor_n=summary.count, dispersion=disp)
