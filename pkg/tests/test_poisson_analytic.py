import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bucketprobe import poisson_analytic as pa
from bucketprobe.pmf import Pmf

from oracles import (
    block_law,
    law_h,
    stationary_q,
    unsuccessful_keys_law,
    unsuccessful_law,
)

CONTEXTS = [(1, 0.5), (2, 0.7), (3, 0.9), (5, 0.8), (20, 0.9)]

# values of the overflow chain oracle (tests/oracles.py), frozen
FROZEN = {
    # (b, alpha): (E Q, P(Q = 0), T0, P(B = 1))
    (1, 0.5): (0.25, 0.8243606353500661, 0.5, 0.6065306597126334),
    (2, 0.7): (0.6910546475585548, 0.6705971104494737, 0.4346327885351482, 0.5918327134598556),
}


def _ctx(b, a):
    return pa.context(b, a)


# ---------------------------------------------------------------- context

def test_context_cached_and_validated():
    assert pa.context(2, 0.5) is pa.context(2, 0.5)
    with pytest.raises(ValueError):
        pa.context(1, 0.0)
    with pytest.raises(ValueError):
        pa.context(1, 1.0)
    with pytest.raises(ValueError):
        pa.context(0, 0.5)


def test_t0_b1_closed_form():
    for a in (0.1, 0.5, 0.9):
        assert _ctx(1, a).t0 == pytest.approx(1 - a, abs=1e-15)


@pytest.mark.parametrize("key", sorted(FROZEN))
def test_frozen_chain_values(key):
    ctx = _ctx(*key)
    eq, q0, t0, b1 = FROZEN[key]
    assert pa.mean_Q(ctx) == pytest.approx(eq, abs=1e-12)
    assert pa.prob_no_overflow(ctx) == pytest.approx(q0, abs=1e-12)
    assert ctx.t0 == pytest.approx(t0, abs=1e-12)
    assert pa.pmf_B(ctx, 3).values[1] == pytest.approx(b1, abs=1e-12)


# ---------------------------------------------------------------- chain oracle

@pytest.mark.parametrize("b,a", CONTEXTS[:4])
def test_q_h_laws_match_chain(b, a):
    ctx = _ctx(b, a)
    q = stationary_q(b, a)
    h = law_h(b, a)
    assert np.max(np.abs(pa.pmf_Q(ctx, 40).values - q[:41])) < 1e-12
    assert np.max(np.abs(pa.pmf_H(ctx, 40).values - h[:41])) < 1e-12
    assert pa.mean_Q(ctx) == pytest.approx(np.dot(np.arange(q.size), q), abs=1e-10)
    assert pa.mean_H(ctx) == pytest.approx(np.dot(np.arange(h.size), h), abs=1e-10)


@pytest.mark.parametrize("b,a", CONTEXTS[:4])
def test_y_and_td_match_chain(b, a):
    ctx = _ctx(b, a)
    h = law_h(b, a)
    y = np.append(h[:b], h[b:].sum())
    assert np.max(np.abs(pa.prob_Y_all(ctx) - y)) < 1e-12
    assert pa.prob_Y(ctx, 0) == pytest.approx(h[0], abs=1e-12)
    assert ctx.t0 == pytest.approx(h[:b].sum(), abs=1e-12)
    for d in range(b):
        # more than d empty slots: H < b - d
        assert pa.t_d(ctx, d) == pytest.approx(h[: b - d].sum(), abs=1e-12)
    assert pa.prob_no_overflow(ctx) == pytest.approx(stationary_q(b, a)[0], abs=1e-12)


@pytest.mark.parametrize("b,a", CONTEXTS[:4])
def test_block_laws_match_chain(b, a):
    ctx = _ctx(b, a)
    blk = block_law(b, a, 40)
    assert np.max(np.abs(pa.pmf_B(ctx, 40).values - blk)) < 1e-12
    assert np.max(np.abs(pa.pmf_U(ctx, 40).values - unsuccessful_law(b, a, 40))) < 1e-12
    assert np.max(np.abs(pa.pmf_U_keys(ctx, 40).values - unsuccessful_keys_law(b, a, 40))) < 1e-12


def test_block_moments():
    for b, a in CONTEXTS:
        ctx = _ctx(b, a)
        p = pa.pmf_B(ctx, 3000).values
        k = np.arange(p.size)
        assert pa.mean_B(ctx) == pytest.approx(np.dot(k, p), rel=1e-9)
        assert pa.var_B(ctx) == pytest.approx(np.dot(k * k, p) - np.dot(k, p) ** 2, rel=1e-7)
        assert pa.mean_Bhat(ctx) == pytest.approx(np.dot(k * k, p) / np.dot(k, p), rel=1e-7)


def test_joint_B_Y_marginals():
    ctx = _ctx(3, 0.8)
    q = 0.7 * np.exp(1j * np.linspace(0, 2 * np.pi, 9))
    # t = 1 gives the block PGF
    assert np.allclose(pa.joint_B_Y(ctx, q, 1.0), pa.psi_B(ctx, q), atol=1e-14)
    # q = 1 gives E t^Y over the last bucket of a block, which is not full
    t = np.linspace(0, 1, 5)
    vals = np.array([pa.joint_B_Y(ctx, 1.0, tt) for tt in t])
    assert vals[-1] == pytest.approx(1.0, abs=1e-12)
    h = law_h(3, 0.8)
    y_last = h[:3] / h[:3].sum()
    assert np.allclose(vals.real, np.polynomial.polynomial.polyval(t, y_last), atol=1e-10)


# ---------------------------------------------------------------- displacements

def test_fcfs_mean_b1_closed_form():
    for a in (0.2, 0.5, 0.8, 0.9):
        assert pa.mean_D_FCFS(_ctx(1, a)) == pytest.approx(a / (2 * (1 - a)), rel=1e-10)


@pytest.mark.parametrize("b,a", CONTEXTS)
def test_total_displacement_independent_of_heuristic(b, a):
    ctx = _ctx(b, a)
    assert pa.mean_D_RH(ctx) == pytest.approx(pa.mean_D_FCFS(ctx), rel=1e-9)


@pytest.mark.parametrize("b,a", [(1, 0.5), (2, 0.7), (3, 0.9)])
def test_displacement_pmfs_are_consistent(b, a):
    ctx = _ctx(b, a)
    rh = pa.pmf_D_RH(ctx, 4000)
    fc = pa.pmf_D_FCFS(ctx, 4000)
    assert rh.mean() == pytest.approx(pa.mean_D_RH(ctx), rel=1e-7)
    assert fc.mean() == pytest.approx(pa.mean_D_FCFS(ctx), rel=1e-6)
    # Robin Hood has the smaller variance among heuristics with the same mean
    assert rh.var() <= fc.var() + 1e-9


def test_fcfs_b20_head():
    p = pa.pmf_D_FCFS(_ctx(20, 0.9), 13).values
    assert p[0] == pytest.approx(0.9360975, abs=2e-6)
    assert p[1] == pytest.approx(0.0361249, abs=2e-6)


def test_c_and_v():
    ctx = _ctx(2, 0.6)
    v = pa.pmf_V(ctx, 40).values
    assert pa.mean_C(ctx) == pytest.approx(pa.mean_Q(ctx) + 0.6, rel=1e-10)
    assert np.dot(np.arange(v.size), v) == pytest.approx(0.6, rel=1e-10)


def test_psi_rh_small_q_rejected():
    with pytest.raises(ValueError):
        pa.psi_RH(_ctx(2, 0.5), 0.05)


# ---------------------------------------------------------------- identities

def _circle(r, n=48):
    return r * np.exp(2j * np.pi * (np.arange(n) + 0.3) / n)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.floats(0.05, 0.95), st.floats(0.2, 1.0))
def test_pgf_identities_property(b, a, frac):
    ctx = _ctx(b, a)
    q = _circle(frac * ctx.radius)
    assert np.max(np.abs(pa.psi_H(ctx, q) - np.exp(a * b * (q - 1)) * pa.psi_Q(ctx, q))) < 1e-9
    assert np.max(np.abs(pa.psi_C(ctx, q) - pa.psi_Q(ctx, q) * pa.psi_V(ctx, q))) < 1e-9
    lhs = pa.psi_U(ctx, q) * (1 - q)
    assert np.max(np.abs(lhs - ctx.t0 * (1 - pa.psi_B(ctx, q)))) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.floats(0.05, 0.95))
def test_pgfs_equal_one_at_one(b, a):
    ctx = _ctx(b, a)
    for psi in (pa.psi_Q, pa.psi_H, pa.psi_V, pa.psi_C, pa.psi_B, pa.psi_Bhat, pa.psi_U, pa.psi_U_keys):
        assert abs(psi(ctx, 1.0) - 1) < 1e-10


def test_removable_singularity_patch_is_smooth():
    ctx = _ctx(3, 0.7)
    eps = np.array([1e-9, 1e-7, 1e-5, 1e-3, 1e-2])
    for psi in (pa.psi_Q, pa.psi_U):
        near = np.array([psi(ctx, 1 + e) for e in eps])
        far = np.array([psi(ctx, 1 + 0.02 * np.exp(1j * t)) for t in np.linspace(0, 2 * np.pi, 64, endpoint=False)])
        # the mean over a circle equals the centre value; values near 1 approach it
        assert abs(far.mean() - 1) < 1e-12
        assert np.all(np.abs(near[:3] - 1) < 1e-4)


def test_size_bias_and_rh_aggregation():
    for b, a in [(2, 0.5), (4, 0.85)]:
        ctx = _ctx(b, a)
        k = np.arange(61)
        assert np.max(np.abs(pa.pmf_Bhat(ctx, 60).values - k * pa.pmf_B(ctx, 60).values * ctx.t0)) < 1e-12
        c = pa.pmf_C(ctx, b * 61 - 1).values
        assert np.allclose(pa.pmf_D_RH(ctx, 60).values, c.reshape(61, b).sum(axis=1), atol=1e-15)


# ---------------------------------------------------------------- extraction

def test_pmf_from_pgf_monomial():
    ctx = _ctx(2, 0.5)
    p = pa.pmf_from_pgf(lambda c, q: q**3, ctx, 8, n_points=64)
    assert np.allclose(p.values, np.eye(9)[3], atol=1e-12)


def test_pmf_from_pgf_rejects_bad_grid():
    ctx = _ctx(2, 0.5)
    with pytest.raises(ValueError):
        pa.pmf_from_pgf(pa.psi_B, ctx, 40, n_points=100)


def test_pmfs_are_distributions():
    for b, a in CONTEXTS:
        ctx = _ctx(b, a)
        for name in ("H", "Q", "Y", "B", "Bhat", "U", "Ukeys", "D_RH", "C", "V"):
            p = pa.PMF_FUNCS[name](ctx, 60)
            assert isinstance(p, Pmf)
            assert p.provenance == "analytic"
            assert np.all(p.values >= 0)
            assert p.values.sum() <= 1 + 1e-10


def test_means_match_pmfs():
    ctx = _ctx(3, 0.6)
    for name in ("H", "Q", "Y", "B", "Bhat", "U", "Ukeys", "D_RH", "C", "V"):
        p = pa.PMF_FUNCS[name](ctx, 800)
        assert p.mean() == pytest.approx(pa.MEAN_FUNCS[name](ctx), rel=1e-8), name


def test_mean_q_small_load_limit():
    # for tiny loads overflow needs b+1 keys in one bucket
    b, a = 2, 0.01
    ctx = _ctx(b, a)
    lam = b * a
    assert pa.mean_Q(ctx) == pytest.approx(math.exp(-lam) * lam**3 / 6, rel=0.05)
