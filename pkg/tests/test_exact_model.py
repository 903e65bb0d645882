import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import poisson

from bucketprobe import exact_model as em
from bucketprobe import poisson_analytic as pa
from bucketprobe.enumeration import brute_force_enumerate
from bucketprobe.specialfn import tree_fn


# ---------------------------------------------------------------- brute force oracle
# Only bucket counts matter for the statistics below, so the oracle walks the
# carry q <- max(q + x - b, 0) over the buckets; no table is ever built.

def _counts(m, seq):
    x = [0] * m
    for h in seq:
        x[h] += 1
    return x


def _cyclic_carry(x, b):
    # two passes around the circle reach the stationary carry into bucket 0
    q = 0
    for _ in range(2):
        for xi in x:
            q = max(q + xi - b, 0)
    return q


def _parking_loss(x, b):
    q = 0
    for xi in x:
        q = max(q + xi - b, 0)
    return q


def _parking_last(x, b):
    q = 0
    for xi in x[:-1]:
        q = max(q + xi - b, 0)
    return q + x[-1]


def _occupancy(x, b):
    q = _cyclic_carry(x, b)
    occ = []
    for xi in x:
        occ.append(min(q + xi, b))
        q = max(q + xi - b, 0)
    return occ


def brute(m, n, b, f):
    tot = Fraction(0)
    for seq in itertools.product(range(m), repeat=n):
        tot += f(_counts(m, seq))
    return tot


def brute_count(m, n, b, pred):
    return sum(1 for seq in itertools.product(range(m), repeat=n) if pred(_counts(m, seq)))


SMALL = [(m, n, b) for b in (1, 2, 3) for m in (1, 2, 3, 4) for n in range(0, b * m + 1) if m**n <= 5000]


# ---------------------------------------------------------------- counts

@pytest.mark.parametrize("n", range(0, 9))
def test_almost_full_b1_is_cayley_like(n):
    expected = (n + 1) ** (n - 1) if n else 1
    assert em.count_almost_full(1, n, 0) == expected


@pytest.mark.parametrize("b", [1, 2, 3])
def test_almost_full_brute(b):
    for i in range(0, 4):
        for d in range(b):
            n = b * i + d
            if (i + 1) ** n > 20000:
                continue
            # first i buckets full and d keys in the last: nothing lost and d keys end in the last bucket
            ref = brute_count(i + 1, n, b, lambda x: _parking_last(x, b) == d)
            assert em.count_almost_full(b, i, d) == ref


def test_frozen_counts():
    assert em.count_almost_full(2, 1, 1) == 4
    assert em.count_last_not_full(2, 1, 1) == 1
    assert em.count_last_not_full(3, 4, 2) == 43


@pytest.mark.parametrize("m,n,b", SMALL)
def test_q_counts_brute(m, n, b):
    for d in range(b):
        ref = brute_count(m, n, b, lambda x: _occupancy(x, b)[-1] < b - d)
        assert em.count_more_than_d_empty(m, n, d, b) == ref


def test_counter_rejects_bad_arguments():
    with pytest.raises(ValueError):
        em.counter(2).F(1, 2)
    with pytest.raises(ValueError):
        em.counter(2).Q(3, 1, 2)
    with pytest.raises(ValueError):
        em.ExactCounter(0)


@pytest.mark.parametrize("b", [1, 2, 3])
@pytest.mark.parametrize("z", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("x", [0.3, 0.7])
def test_almost_full_generating_function(b, z, x):
    # sum_d F_d(bz) x^d = x^b - prod_j (x - T(w^j z) / z), w a primitive b-th root of 1
    c = em.counter(b)
    s = 0.0
    for n in range(0, 200):
        i, d = divmod(n, b)
        s += c.F(i, d) / math.factorial(n) * (b * z) ** n * x**d
    w = np.exp(2j * np.pi * np.arange(b) / b)
    rhs = x**b - np.prod(x - tree_fn(w * z) / z)
    assert abs(s - rhs) < 1e-8


# ---------------------------------------------------------------- expectations

def test_frozen_expectations():
    assert em.expected_overflow_exact(1, 2, 1) == 1
    assert em.expected_overflow_exact(2, 2, 1) == Fraction(1, 4)
    assert em.expected_overflow_exact(2, 3, 2) == Fraction(1, 8)
    assert em.expected_block_exact(4, 5, 2) == Fraction(64, 37)


@pytest.mark.parametrize("m,n,b", SMALL)
def test_cyclic_overflow_brute(m, n, b):
    ref = brute(m, n, b, lambda x: _cyclic_carry(x, b)) / m**n
    assert em.expected_overflow_exact(m, n, b) == ref
    if n:
        assert em.expected_overflow_alt(m, n, b) == pytest.approx(float(ref), abs=1e-12)


@pytest.mark.parametrize("m,b", [(2, 1), (3, 1), (2, 2), (3, 2), (2, 3)])
def test_parking_overflow_brute_past_capacity(m, b):
    for n in range(0, b * m + 3):
        if m**n > 50000:
            break
        ref = brute(m, n, b, lambda x: _parking_loss(x, b)) / m**n
        assert em.expected_overflow_exact(m, n, b) == ref


@pytest.mark.parametrize("m,n,b", [c for c in SMALL if c[1] >= 1 and c[0] ** c[1] <= 1024])
def test_displacement_brute(m, n, b):
    law = brute_force_enumerate(m, b, n, "displacement", "fcfs")
    assert em.expected_displacement_exact(m, n, b) == law.mean()


@pytest.mark.parametrize("m,n,b", [c for c in SMALL if c[1] < c[0] * c[2]])
def test_block_law_brute(m, n, b):
    law = brute_force_enumerate(m, b, n, "block")
    exact = em.block_pmf_exact(m, n, b)
    assert list(exact.values) == list(law.values)
    assert em.expected_block_exact(m, n, b) == law.mean()


def test_q_complement_and_base_case():
    assert em.count_last_not_full(0, 0, 2) == 1
    for m, n, b in [(3, 4, 2), (4, 3, 1), (2, 5, 3)]:
        full = brute_count(m, n, b, lambda x: _occupancy(x, b)[-1] == b)
        assert em.count_last_not_full(m, n, b) + full == m**n


def test_almost_full_asymptotics():
    m = 60
    assert abs(em.almost_full_overflow_asym(m, 1) - float(em.expected_overflow_exact(m, m - 1, 1))) <= 0.02
    ref = math.sqrt(200 * math.pi) / 4 - 7 / 6 + math.sqrt(2 * math.pi / 100) / 48
    assert em.almost_full_overflow_asym(100, 1) == pytest.approx(ref, rel=1e-14)
    assert math.isfinite(em.almost_full_overflow_asym(40, 2))
    exact, asym = em.full_table_displacement(1, 50)
    assert abs(exact - asym) <= 0.01


def test_expectation_domain_errors():
    with pytest.raises(ValueError):
        em.expected_displacement_exact(2, 5, 2)
    with pytest.raises(ValueError):
        em.expected_block_exact(2, 4, 2)
    with pytest.raises(ValueError):
        em.expected_overflow_exact(0, 1, 1)
    with pytest.raises(ValueError):
        em.expected_overflow_alt(2, em.ALT_CAP + 1, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 12), st.data())
def test_overflow_forms_agree(b, m, data):
    n = data.draw(st.integers(0, min(b * m, 30)))
    exact = em.expected_overflow_exact(m, n, b)
    assert em.expected_overflow_alt(m, n, b) == pytest.approx(float(exact), abs=1e-9)
    assert 0 <= exact <= n


def test_overflow_increases_with_n():
    vals = [em.expected_overflow_exact(10, n, 2) for n in range(21)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_poisson_transform_of_last_not_full():
    # P(last bucket not full) under Poisson(alpha b m) keys tends to T0(b alpha).
    # Terms with n >= bm vanish, so the sum over n < bm is complete.
    b, a = 2, 0.5
    t0 = pa.context(b, a).t0
    gaps = []
    for m in (20, 40, 80):
        lam = a * b * m
        w = poisson.pmf(np.arange(b * m), lam)
        s = sum(w[n] * (em.count_last_not_full(m, n, b) / m**n) for n in range(b * m))
        gaps.append(abs(s - t0))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.01


def test_overflow_mean_approaches_poisson_model():
    # exact filling at load alpha approaches the Poisson-model overflow mean
    b, a = 2, 0.5
    ref = pa.mean_Q(pa.context(b, a))
    gaps = []
    for m in (20, 40, 80, 160):
        n = int(a * b * m)
        gaps.append(abs(float(em.expected_overflow_exact(m, n, b)) - ref))
    # the gap is O(1/m): doubling m roughly halves it
    for g0, g1 in zip(gaps, gaps[1:]):
        assert 1.7 < g0 / g1 < 2.1
    assert gaps[-1] < 0.01


# ---------------------------------------------------------------- b = 1 search and full tables

def test_successful_search_small():
    mv = em.successful_search_b1(5, 1)
    assert mv.mean == pytest.approx(1.0)
    assert mv.var == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("m,n", [(3, 2), (4, 3), (5, 5), (6, 4)])
def test_successful_search_brute(m, n):
    # probes = 1 + displacement, averaged over keys and sequences
    law = brute_force_enumerate(m, 1, n, "displacement", "fcfs")
    mv = em.successful_search_b1(m, n)
    assert mv.mean == pytest.approx(1 + float(law.mean()), rel=1e-12)
    assert mv.var == pytest.approx(float(law.var()), rel=1e-12)


def test_full_table_frozen():
    assert em.full_table_displacement_exact(1, 2) == Fraction(1, 4)
    mean, var = em.fcfs_full_moments_exact(2)
    assert mean == Fraction(1, 4)


@pytest.mark.parametrize("b,m", [(1, 3), (1, 5), (2, 2), (2, 3), (3, 2)])
def test_full_table_brute(b, m):
    law = brute_force_enumerate(m, b, b * m, "displacement", "fcfs")
    assert em.full_table_displacement_exact(b, m) == law.mean()


@pytest.mark.parametrize("n", [3, 5, 6])
def test_fcfs_full_moments_brute(n):
    law = brute_force_enumerate(n, 1, n, "displacement", "fcfs")
    mean, var = em.fcfs_full_moments_exact(n)
    assert mean == law.mean()
    assert var == law.var()


def test_full_table_asymptotics_converge():
    for b in (1, 2, 3):
        m = em.ALT_CAP // b
        exact, asym = em.full_table_displacement(b, m)
        assert abs(exact - asym) < 2e-3
    exact, asym = em.fcfs_full_moments_b1(200)
    assert abs(exact.mean - asym.mean) < 1e-3
    assert abs(exact.var - asym.var) / exact.var < 1e-3
    assert em.fcfs_full_moments_b1(10**6)[0] is None


def test_search_and_full_table_asymptotics_agree():
    assert abs(em.successful_search_b1(500, 500).mean - em.full_table_b1_asym(500).mean) < 0.01


# ---------------------------------------------------------------- FCFS law, b = 1

def test_fcfs_pmf_frozen():
    assert list(em.fcfs_exact_pmf_b1(3, 2).values) == [Fraction(5, 6), Fraction(1, 6)]
    assert em.fcfs_exact_pmf_b1(7, 5).mean() == Fraction(1076, 2401)


@pytest.mark.parametrize("m,n", [(2, 2), (3, 3), (4, 2), (4, 4), (5, 3), (6, 5)])
def test_fcfs_pmf_brute(m, n):
    law = brute_force_enumerate(m, 1, n, "displacement", "fcfs")
    assert list(em.fcfs_exact_pmf_b1(m, n).values) == list(law.values)


def test_fcfs_pmf_mean_matches_displacement():
    for m, n in [(30, 20), (50, 50)]:
        assert em.fcfs_exact_pmf_b1(m, n).mean() == em.expected_displacement_exact(m, n, 1)


def test_gbinom():
    assert em.gbinom(5, 2) == 10
    assert em.gbinom(-3, 2) == 6
    assert em.gbinom(2, 3) == 0
    assert em.gbinom(4, -1) == 0
    # Pascal's rule holds for negative upper index as well
    for a in range(-5, 5):
        for r in range(1, 5):
            assert em.gbinom(a, r) == em.gbinom(a - 1, r) + em.gbinom(a - 1, r - 1)
