"""Exact results for n keys hashed uniformly into m buckets of size b.

Counts are Python integers and expectations are Fractions, so nothing is
lost to cancellation.  Full-table asymptotic expansions live here too.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

from .pmf import Pmf
from .specialfn import ramanujan_q, tree_polynomial, unit_roots_branch_sum

F_CAP = 400
M_CAP = 200
ALT_CAP = 400
FCFS_EXACT_CAP = 300

SQ2PI = math.sqrt(2 * math.pi)


class MeanVar(NamedTuple):
    mean: float
    var: float


def gbinom(a, r):
    """Binomial coefficient C(a, r) for integer a of any sign, r >= 0."""
    if r < 0:
        return 0
    if a >= 0:
        return math.comb(a, r) if a >= r else 0
    return (-1) ** r * math.comb(-a + r - 1, r)


class ExactCounter:
    """Big-integer tables F_{bi+d} and Q_{m,n,d} for a fixed bucket size b.

    F_{bi+d} counts the hash sequences of bi+d keys into i+1 buckets that
    fill the first i buckets (an almost full table).  Q_{m,n,d} counts the
    sequences of n keys into m buckets whose last bucket keeps more than d
    empty slots.  Tables grow on demand.
    """

    def __init__(self, b, f_cap=F_CAP, m_cap=M_CAP):
        if b < 1:
            raise ValueError("b must be positive")
        self.b = b
        self.f_cap = f_cap
        self.m_cap = m_cap
        self._c = [[1]]  # _c[j][s]: sequences of s keys into j buckets, prefixes full
        self._smax = 0
        self._f = {}
        self._q0 = {}  # m -> list over n of Q_{m,n,0}

    def _ensure(self, n):
        # c_j(s) = sum_x C(s, x) c_{j-1}(s - x), zero unless s >= b j
        if n <= self._smax:
            return
        b = self.b
        smax = min(max(n + 16, self._smax * 5 // 4), self.f_cap)
        binom = _pascal(smax)
        c = [[1] + [0] * smax]
        for j in range(1, smax // b + 1):
            prev = c[-1]
            row = [0] * (smax + 1)
            lo = b * (j - 1)
            for s in range(b * j, smax + 1):
                cs = binom[s]
                # x keys in bucket j, s - x >= b (j - 1) in the others
                row[s] = sum(cs[x] * prev[s - x] for x in range(s - lo + 1))
            c.append(row)
        self._c = c
        self._smax = smax
        self._f.clear()

    def F(self, i, d):
        """F_{bi+d}: almost full tables with i full buckets and d keys in the last."""
        b = self.b
        if not 0 <= d < b or i < 0:
            raise ValueError("need i >= 0 and 0 <= d < b")
        n = b * i + d
        if n > self.f_cap:
            raise ValueError(f"F_{n} exceeds the size cap {self.f_cap}")
        key = (i, d)
        if key not in self._f:
            self._ensure(n)
            cn = _pascal(n)[n]
            self._f[key] = sum(cn[x] * self._c[i][n - x] for x in range(d + 1))
        return self._f[key]

    def _flat_f(self, nmax):
        # F_k for k = b i + d, k <= nmax, as one list
        return [self.F(k // self.b, k % self.b) for k in range(nmax + 1)]

    def _q0_row(self, m, nmax):
        # Q_{m', n', 0} for m' <= m, n' <= nmax, by peeling off the first cluster
        b = self.b
        rows = self._q0
        if m in rows and len(rows[m]) > nmax:
            return rows[m]
        top = min(nmax, b * m - 1)
        fk = self._flat_f(max(top, 0))
        binom = _pascal(max(top, 0))
        for mm in range(0, m + 1):
            row = rows.get(mm)
            if row is not None and len(row) > nmax:
                continue
            new = [0] * (nmax + 1)
            if mm == 0:
                new[0] = 1
            else:
                for n in range(0, min(nmax, b * mm - 1) + 1):
                    cn = binom[n]
                    kmax = min(n, b * mm - 1)
                    new[n] = sum(cn[k] * fk[k] * rows[mm - k // b - 1][n - k]
                                 for k in range(kmax + 1))
            rows[mm] = new
        return rows[m]

    def Q(self, m, n, d=0):
        """Q_{m,n,d}: sequences whose last bucket has more than d empty slots."""
        b = self.b
        if m < 0 or n < 0 or not 0 <= d < b:
            raise ValueError("need m, n >= 0 and 0 <= d < b")
        if m > self.m_cap:
            raise ValueError(f"m = {m} exceeds the cap {self.m_cap}")
        if m == 0:
            return 1 if n == 0 else 0
        if n >= b * m:
            return 0
        if d == 0:
            return self._q0_row(m, n)[n]
        # the last cluster ends in a bucket holding fewer than b - d keys
        self._q0_row(m - 1, n)
        tot = 0
        for i in range(m):
            for dd in range(b - d):
                k = b * i + dd
                if k > n:
                    break
                rest = self._q0[m - i - 1]
                tot += math.comb(n, k) * self.F(i, dd) * rest[n - k]
        return tot


_PASCAL = [[1]]


def _pascal(n):
    """Rows 0..n of Pascal's triangle (shared, grown on demand)."""
    while len(_PASCAL) <= n:
        prev = _PASCAL[-1]
        _PASCAL.append([1] + [prev[k - 1] + prev[k] for k in range(1, len(prev))] + [1])
    return _PASCAL


@lru_cache(maxsize=None)
def counter(b):
    return ExactCounter(b)


def count_almost_full(b, i, d):
    return counter(b).F(i, d)


def count_last_not_full(m, n, b):
    return counter(b).Q(m, n, 0)


def count_more_than_d_empty(m, n, d, b):
    return counter(b).Q(m, n, d)


def expected_overflow_exact(m, n, b):
    """Mean number of keys lost past the last bucket in the parking problem.

    For n <= bm this is also the mean number of keys that wrap from bucket
    m-1 to bucket 0 in the cyclic table.  Valid for any n >= 0.
    """
    if m < 1 or n < 0 or b < 1:
        raise ValueError("need m >= 1, n >= 0, b >= 1")
    tot = 0
    for j in range(n + 1):
        cj = math.comb(n, j)
        for k in range(1, min(m, j // b) + 1):
            tot += cj * (j - k * b) * k ** (j - 1) * (m - k) ** (n - j)
    return Fraction(tot, m**n)


def _alt_sum(m, n, b):
    tot = Fraction(0)
    for i in range(2, n + 1):
        inner = sum(k ** (i - 1) * gbinom(b * k - i, b * k - 1) for k in range(1, m + 1))
        if inner:
            tot += Fraction((-1) ** i * math.comb(n, i) * inner, m**i)
    return tot


def expected_overflow_alt(m, n, b):
    """The alternating-sum expression for the mean overflow.

    Evaluated in exact rational arithmetic (a float evaluation cancels
    catastrophically), then converted.
    """
    if m < 1 or n < 0 or b < 1:
        raise ValueError("need m >= 1, n >= 0, b >= 1")
    if n > ALT_CAP:
        raise ValueError(f"n = {n} exceeds the cap {ALT_CAP}")
    return float(_alt_sum(m, n, b))


def almost_full_overflow_asym(m, b):
    """Asymptotic mean overflow of a table with bm - 1 keys."""
    bm = b * m
    return SQ2PI * math.sqrt(bm) / 4 - 7 / 6 + unit_roots_branch_sum(b) + SQ2PI / (48 * math.sqrt(bm))


def expected_displacement_exact(m, n, b):
    """Mean displacement of a random key: (m/n) times the mean overflow."""
    if n < 1:
        raise ValueError("need n >= 1")
    if n > b * m:
        raise ValueError("more keys than slots")
    return Fraction(m, n) * expected_overflow_exact(m, n, b)


def expected_block_exact(m, n, b):
    if not 0 <= n < b * m:
        raise ValueError("need 0 <= n < bm")
    return Fraction(m**n, count_last_not_full(m, n, b))


def block_pmf_exact(m, n, b):
    """Law of the length of the last block, given the last bucket is not full."""
    if not 0 <= n < b * m:
        raise ValueError("need 0 <= n < bm")
    c = counter(b)
    denom = c.Q(m, n, 0)
    vals = [Fraction(0)]
    for k in range(1, m + 1):
        tot = 0
        for d in range(b):
            s = b * (k - 1) + d
            if s > n:
                break
            tot += math.comb(n, s) * c.F(k - 1, d) * c.Q(m - k, n - s, 0)
        vals.append(Fraction(tot, denom))
    while len(vals) > 1 and vals[-1] == 0:
        vals.pop()
    if sum(vals) != 1:
        raise ArithmeticError("block law does not sum to one")
    return Pmf(vals, 0.0, "exact")


def successful_search_b1(m, n):
    """Mean and variance of the successful search cost (probes), b = 1."""
    if not 1 <= n <= m:
        raise ValueError("need 1 <= n <= m")
    q0 = ramanujan_q(0, m, n - 1)
    q2 = ramanujan_q(2, m, n - 1)
    return MeanVar((1 + q0) / 2, q2 / 3 - q0 * q0 / 4 - 1 / 12)


def full_table_b1_asym(m):
    """Asymptotic mean and variance of the search cost in a full b = 1 table."""
    if m < 1:
        raise ValueError("need m >= 1")
    mean = SQ2PI * math.sqrt(m) / 4 + 1 / 3 + SQ2PI / (48 * math.sqrt(m))
    var = (SQ2PI * m**1.5 / 12 + (1 / 9 - math.pi / 8) * m
           + 13 * SQ2PI * math.sqrt(m) / 144 - 47 / 405 - math.pi / 48)
    return MeanVar(mean, var)


def full_table_displacement_exact(b, m):
    """Mean displacement in a full table (n = bm), as a Fraction."""
    n = b * m
    if n - 1 > ALT_CAP:
        raise ValueError(f"bm = {n} exceeds the cap {ALT_CAP}")
    return (_alt_sum(m, n - 1, b) + Fraction(m - 1, 2 * m)) / b


def full_table_displacement_asym(b, m):
    bm = b * m
    val = SQ2PI * math.sqrt(bm) / 4 - 2 / 3 + unit_roots_branch_sum(b) + SQ2PI / (48 * math.sqrt(bm))
    return val / b


def full_table_displacement(b, m):
    """(exact, asymptotic) mean displacement for a full table; exact is None past the cap."""
    exact = None
    if b * m - 1 <= ALT_CAP:
        exact = float(full_table_displacement_exact(b, m))
    return exact, full_table_displacement_asym(b, m)


def fcfs_full_moments_asym(n):
    mean = SQ2PI / 4 * math.sqrt(n) - 2 / 3 + SQ2PI / (48 * math.sqrt(n)) - 2 / (135 * n)
    var = (SQ2PI * n**1.5 / 12 + (1 / 9 - math.pi / 8) * n
           + 13 * SQ2PI * math.sqrt(n) / 144 - 47 / 405 - math.pi / 48)
    return MeanVar(mean, var)


def fcfs_full_moments_exact(n):
    """Exact (mean, variance) of the displacement in a full b = 1 table, as Fractions."""
    t = {y: tree_polynomial(n, y) for y in (1, 2, 3, 4)}
    nn = Fraction(n**n)
    mean = (t[2] / 2 - t[1]) / nn
    second = (t[4] / 3 - t[3] / 3 - t[2] / 2 + 2 * t[1] / 3) / nn
    return mean, second - mean * mean


def fcfs_full_moments_b1(n):
    """(exact or None, asymptotic) displacement moments of a full b = 1 table."""
    if n < 1:
        raise ValueError("need n >= 1")
    exact = None
    if n <= FCFS_EXACT_CAP:
        mean, var = fcfs_full_moments_exact(n)
        exact = MeanVar(float(mean), float(var))
    return exact, fcfs_full_moments_asym(n)


def fcfs_exact_pmf_b1(m, n):
    """Exact law of the FCFS displacement of a random key, b = 1, n <= m keys."""
    if not 1 <= n <= m:
        raise ValueError("need 1 <= n <= m")
    base = 1 - Fraction(n - 1, 2 * m)
    denom = m ** (n - 1)
    vals = []
    acc = Fraction(0)
    for k in range(n):
        vals.append(base - acc)
        j = k
        acc += Fraction(math.comb(n - 1, j) * (m - j - 1) ** (n - j - 1), denom) * Fraction(j + 1) ** (j - 2)
    if any(v < 0 for v in vals):
        raise ArithmeticError("negative probability in the FCFS law")
    while len(vals) > 1 and vals[-1] == 0:
        vals.pop()
    if sum(vals) != 1:
        raise ArithmeticError("FCFS law does not sum to one")
    return Pmf(vals, 0.0, "exact")
