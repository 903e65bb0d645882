"""Limit laws of the infinite Poisson model with bucket size b and load alpha.

Every PGF here is built from the roots zeta_l(q) of
zeta^b = exp(alpha b (zeta - 1)) q inside the unit disc.  PGFs accept a
scalar or an array of complex q and are vectorised over it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .pmf import Pmf
from .specialfn import (
    analyticity_radius,
    pole_radius,
    poly_from_roots,
    root_radius,
    zeta_roots,
    zeta_roots_array,
)

# removable singularities are patched by a Taylor polynomial fitted on a
# small circle around the singular point
_PATCH_RHO = 0.05
_PATCH_ORDER = 16
_PATCH_POINTS = 64

_GL_START = 32
_GL_CAP = 512
_GL_TOL = 1e-10

_FFT_MAX = 2**21


@dataclass(frozen=True)
class AnalyticContext:
    b: int
    alpha: float
    zeta1: np.ndarray
    t0: float
    radius: float
    root_radius: float
    pole: float

    @property
    def others(self):
        """zeta_l(1) for l = 1..b-1."""
        return self.zeta1[1:]

    @property
    def limit(self):
        # nearest singularity of the PGFs built on zeta_l(q)
        return min(self.pole, self.root_radius)


def _real(x, what, tol=1e-9):
    x = complex(x)
    if abs(x.imag) > tol * (1 + abs(x.real)):
        raise ArithmeticError(f"{what} has imaginary part {x.imag:.3e}")
    return x.real


@lru_cache(maxsize=4096)
def context(b, alpha):
    """Build (and cache) the AnalyticContext for (b, alpha)."""
    b = int(b)
    alpha = float(alpha)
    if b < 1:
        raise ValueError("b must be a positive integer")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    fam = zeta_roots(b, alpha, 1.0)
    z = fam.roots.copy()
    z.setflags(write=False)
    if b == 1:
        t0 = 1.0 - alpha
    else:
        t0 = _real(b * (1 - alpha) / np.prod(1 - z[1:]), "T0")
    if 1.0 <= t0 < 1.0 + 1e-12:
        # 1 - T0 is of order (b alpha)^b / b!, below rounding for tiny loads
        t0 = 1.0
    if not 0.0 < t0 <= 1.0:
        raise ArithmeticError(f"T0 = {t0} outside (0, 1)")
    return AnalyticContext(b, alpha, z, t0, analyticity_radius(b, alpha),
                           root_radius(b, alpha), pole_radius(alpha))


def _sum_others(ctx, f):
    if ctx.b == 1:
        return 0.0
    return _real(np.sum(f(ctx.others)), "root sum")


# ---------------------------------------------------------------- helpers

def _as_array(q):
    arr = np.asarray(q, dtype=complex)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return complex(arr.reshape(())) if scalar else arr


def _check_radius(q, limit, what):
    if np.any(np.abs(q) > limit * (1 + 1e-12)):
        raise ValueError(f"{what}: |q| exceeds the analyticity radius {limit:.6g}")


def _patch(raw, q, centers, rhos):
    """Evaluate raw(q), replacing points close to removable singularities.

    Near a center c the Taylor coefficients of raw are recovered by FFT on
    the circle |w - c| = rho and summed; elsewhere raw is used directly.
    """
    q = np.atleast_1d(q)
    out = np.empty(q.shape, dtype=complex)
    todo = np.ones(q.shape, dtype=bool)
    n = _PATCH_POINTS
    theta = 2 * np.pi * (np.arange(n) + 0.5) / n
    k = np.arange(_PATCH_ORDER)
    for c, rho in zip(centers, rhos):
        near = todo & (np.abs(q - c) < rho / 10)
        if not np.any(near):
            continue
        vals = raw(c + rho * np.exp(1j * theta))
        coef = np.fft.fft(vals)[: _PATCH_ORDER] / n
        coef *= np.exp(-1j * np.pi * k / n) / rho**k
        out[near] = np.polynomial.polynomial.polyval(q[near] - c, coef)
        todo &= ~near
    if np.any(todo):
        out[todo] = raw(q[todo])
    return out


def _patch_rho(ctx, c=1.0, limit=None):
    # stay inside the extraction radius and away from the other centers
    limit = ctx.radius if limit is None else limit
    return min(_PATCH_RHO, 0.9 * (limit - abs(c)))


# ---------------------------------------------------------------- H, Q, Y

def _psi_Q_raw(ctx, q):
    b, a = ctx.b, ctx.alpha
    val = b * (1 - a) * (q - 1) / (q**b - np.exp(a * b * (q - 1)))
    for z in ctx.others:
        val = val * (q - z) / (1 - z)
    return val


def _q_centers(ctx):
    # q = 1 and q = zeta_l(1) (l >= 1) are removable
    centers = [1.0 + 0j] + list(ctx.others)
    rhos = []
    for i, c in enumerate(centers):
        gaps = [abs(c - d) for j, d in enumerate(centers) if j != i]
        rho = _patch_rho(ctx, c) if i == 0 else min(_PATCH_RHO, 0.9 * (1 - abs(c)))
        if gaps:
            rho = min(rho, 0.4 * min(gaps))
        rhos.append(rho)
    return centers, rhos


def psi_Q(ctx, q):
    """PGF of the overflow Q out of a bucket."""
    q, scalar = _as_array(q)
    _check_radius(q, ctx.radius, "psi_Q")
    centers, rhos = _q_centers(ctx)
    return _out(_patch(lambda w: _psi_Q_raw(ctx, w), q, centers, rhos).reshape(q.shape), scalar)


def psi_H(ctx, q):
    """PGF of the profile H (keys probing a bucket)."""
    qa, scalar = _as_array(q)
    val = np.exp(ctx.alpha * ctx.b * (qa - 1)) * np.asarray(psi_Q(ctx, qa))
    return _out(val, scalar)


def mean_Q(ctx):
    b, a = ctx.b, ctx.alpha
    return 1 / (2 * (1 - a)) - (1 + a) * b / 2 + _sum_others(ctx, lambda z: 1 / (1 - z))


def mean_H(ctx):
    b, a = ctx.b, ctx.alpha
    return 1 / (2 * (1 - a)) - (1 - a) * b / 2 + _sum_others(ctx, lambda z: 1 / (1 - z))


def prob_Y_all(ctx):
    """Array of P(Y = k) for k = 0..b, where Y = min(H, b)."""
    coef = poly_from_roots(ctx.zeta1)
    p = np.empty(ctx.b + 1)
    for k in range(ctx.b):
        p[k] = _real(-ctx.t0 * coef[k], f"P(Y={k})", tol=1e-8)
    p[ctx.b] = 1 - ctx.t0
    return p


def prob_Y(ctx, k):
    if not 0 <= k <= ctx.b:
        raise ValueError("k must lie in 0..b")
    return float(prob_Y_all(ctx)[k])


def t_d(ctx, d):
    """T_d(b alpha): probability that a bucket has more than d empty slots."""
    if not 0 <= d < ctx.b:
        raise ValueError("d must lie in 0..b-1")
    if d == 0:
        return ctx.t0
    return float(np.sum(prob_Y_all(ctx)[: ctx.b - d]))


def prob_no_overflow(ctx):
    """P(Q = 0); computed from psi_Q(0) and from exp(b alpha) T_{b-1}."""
    via_psi = _real(psi_Q(ctx, 0.0), "psi_Q(0)")
    via_t = math.exp(ctx.b * ctx.alpha) * t_d(ctx, ctx.b - 1)
    if abs(via_psi - via_t) > 1e-10:
        raise ArithmeticError(f"P(Q=0) mismatch: {via_psi} vs {via_t}")
    return via_t


# ---------------------------------------------------------------- Robin Hood

def psi_V(ctx, q):
    """PGF of V, uniform on {0..X} with X ~ Poisson(b alpha)."""
    q, scalar = _as_array(q)
    x = ctx.b * ctx.alpha * (q - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(x == 0, 1.0, np.expm1(x) / np.where(x == 0, 1.0, x))
    return _out(np.asarray(val, dtype=complex), scalar)


def psi_C(ctx, q):
    """PGF of C = Q_{-1} + V; the Robin Hood displacement is floor(C/b)."""
    qa, scalar = _as_array(q)
    return _out(np.asarray(psi_Q(ctx, qa)) * np.asarray(psi_V(ctx, qa)), scalar)


def psi_RH(ctx, q):
    """PGF of the Robin Hood displacement, for 0.1 <= |q| <= radius."""
    q, scalar = _as_array(q)
    if np.any(np.abs(q) < 0.1):
        raise ValueError("psi_RH: |q| < 0.1; use the C-block aggregation instead")
    _check_radius(q, ctx.radius, "psi_RH")
    b = ctx.b
    root = np.abs(q) ** (1.0 / b) * np.exp(1j * np.angle(q) / b)
    total = np.zeros(q.shape, dtype=complex)
    for j in range(b):
        s = np.exp(2j * np.pi * j / b) * root
        geo = sum(s ** (-p) for p in range(b))
        total = total + np.asarray(psi_C(ctx, s)) * geo
    return _out(total / b, scalar)


def mean_C(ctx):
    return 1 / (2 * (1 - ctx.alpha)) - ctx.b / 2 + _sum_others(ctx, lambda z: 1 / (1 - z))


def mean_D_RH(ctx):
    b, a = ctx.b, ctx.alpha
    return (1 / (2 * b * a)) * (1 / (1 - a) - b - b * a) + _sum_others(
        ctx, lambda z: 1 / (1 - z)) / (b * a)


# ---------------------------------------------------------------- blocks

def _roots(ctx, q):
    return zeta_roots_array(ctx.b, ctx.alpha, q)


def psi_B(ctx, q):
    """PGF of the length of a random block."""
    q, scalar = _as_array(q)
    _check_radius(q, ctx.root_radius, "psi_B")
    z = _roots(ctx, q)
    return _out(1 - np.prod(1 - z, axis=0), scalar)


def joint_B_Y(ctx, q, t):
    """E q^B t^(Y_B), Y_B the number of keys in the last bucket of the block."""
    q, scalar = _as_array(q)
    _check_radius(q, ctx.root_radius, "joint_B_Y")
    t = np.asarray(t, dtype=complex)
    z = _roots(ctx, q)
    return _out(t**ctx.b - np.prod(t - z, axis=0), scalar and t.ndim == 0)


def mean_B(ctx):
    return 1 / ctx.t0


def _s2(ctx):
    a = ctx.alpha
    return _sum_others(ctx, lambda z: z / ((1 - z) * (1 - a * z)))


def var_B(ctx):
    b, a, t0 = ctx.b, ctx.alpha, ctx.t0
    return 1 / (b * (1 - a) ** 2 * t0) - 2 / (b * t0) * _s2(ctx) - 1 / t0**2


def psi_Bhat(ctx, q):
    """PGF of the length of the block containing a given bucket (size-biased B)."""
    q, scalar = _as_array(q)
    _check_radius(q, ctx.radius, "psi_Bhat")
    b, a = ctx.b, ctx.alpha
    z = _roots(ctx, q)
    one_minus = 1 - z
    total = np.zeros(q.shape, dtype=complex)
    for l in range(b):
        rest = np.prod(np.delete(one_minus, l, axis=0), axis=0) if b > 1 else 1.0
        # q * zeta_l'(q) = zeta_l / (b (1 - alpha zeta_l))
        total = total + z[l] / (b * (1 - a * z[l])) * rest
    return _out(ctx.t0 * total, scalar)


def mean_Bhat(ctx):
    b, a = ctx.b, ctx.alpha
    val = 1 / (b * (1 - a) ** 2) - 2 / b * _s2(ctx)
    check = (var_B(ctx) + mean_B(ctx) ** 2) / mean_B(ctx)
    if abs(val - check) > 1e-9 * (1 + abs(val)):
        raise ArithmeticError("size-bias identity failed for mean_Bhat")
    return val


# ---------------------------------------------------------------- unsuccessful search

def _psi_U_raw(ctx, q):
    z = _roots(ctx, q)
    return ctx.t0 * np.prod(1 - z, axis=0) / (1 - q)


def psi_U(ctx, q):
    """PGF of U, the number of full buckets inspected by an unsuccessful search."""
    q, scalar = _as_array(q)
    _check_radius(q, ctx.radius, "psi_U")
    rho = _patch_rho(ctx)
    val = _patch(lambda w: _psi_U_raw(ctx, w), q.ravel(), [1.0 + 0j], [rho])
    return _out(val.reshape(q.shape), scalar)


def _psi_Ukeys_raw(ctx, q):
    b = ctx.b
    z = _roots(ctx, q**b)
    base = np.prod(q[None, ...] - ctx.zeta1.reshape((b,) + (1,) * q.ndim), axis=0)
    return ctx.t0 * (np.prod(q[None, ...] - z, axis=0) - base) / (1 - q**b)


def keys_radius(ctx):
    return ctx.radius ** (1.0 / ctx.b)


def psi_U_keys(ctx, q):
    """PGF of the number of keys inspected by an unsuccessful search."""
    q, scalar = _as_array(q)
    lim = keys_radius(ctx)
    _check_radius(q, lim, "psi_U_keys")
    b = ctx.b
    centers = [np.exp(2j * np.pi * j / b) for j in range(b)]
    rho = min(_PATCH_RHO, 0.9 * (lim - 1), 0.4 * abs(1 - centers[1 % b]) if b > 1 else 1)
    val = _patch(lambda w: _psi_Ukeys_raw(ctx, w), q.ravel(), centers, [rho] * b)
    return _out(val.reshape(q.shape), scalar)


def mean_U(ctx):
    b, a = ctx.b, ctx.alpha
    val = 1 / (2 * b * (1 - a) ** 2) - 0.5 - _s2(ctx) / b
    eb, vb = mean_B(ctx), var_B(ctx)
    check = ctx.t0 * (vb + eb * eb - eb) / 2
    if abs(val - check) > 1e-9 * (1 + abs(val)):
        raise ArithmeticError("mean_U disagrees with T0 E[B(B-1)]/2")
    return val


def mean_U_keys(ctx):
    a = ctx.alpha
    return 1 / (2 * (1 - a) ** 2) - ctx.b / 2 + _sum_others(
        ctx, lambda z: (1 - 2 * a * z) / ((1 - z) * (1 - a * z)))


# ---------------------------------------------------------------- FCFS

@lru_cache(maxsize=16)
def _gl(n):
    return leggauss(n)


def _integrate_load(f, alpha):
    """(1/alpha) int_0^alpha f(beta) d beta by Gauss-Legendre, doubling nodes."""
    prev = None
    n = _GL_START
    while n <= _GL_CAP:
        x, w = _gl(n)
        betas = alpha * (x + 1) / 2
        acc = None
        for beta, wi in zip(betas, w):
            term = wi * np.asarray(f(float(beta)))
            acc = term if acc is None else acc + term
        val = acc / 2
        if prev is not None and np.max(np.abs(val - prev)) < _GL_TOL:
            return val
        prev = val
        n *= 2
    raise ArithmeticError("Gauss-Legendre quadrature over the load did not converge")


def psi_FCFS(ctx, q):
    """PGF of the FCFS displacement, averaging psi_U over loads in (0, alpha]."""
    qa, scalar = _as_array(q)
    _check_radius(qa, ctx.radius, "psi_FCFS")
    val = _integrate_load(lambda beta: psi_U(context(ctx.b, beta), qa), ctx.alpha)
    return _out(np.asarray(val, dtype=complex), scalar)


def mean_D_FCFS(ctx):
    val = mean_D_RH(ctx)
    integral = float(_integrate_load(lambda beta: mean_U(context(ctx.b, beta)), ctx.alpha))
    if abs(val - integral) > 1e-8 * (1 + abs(val)):
        raise ArithmeticError(f"FCFS mean {val} disagrees with load average {integral}")
    return val


def pmf_D_FCFS(ctx, kmax):
    """PMF of the FCFS displacement: load average of the per-node U laws."""
    vals = _integrate_load(lambda beta: pmf_U(context(ctx.b, beta), kmax).values, ctx.alpha)
    vals = np.asarray(vals, dtype=float)
    return Pmf(vals, max(0.0, 1.0 - float(vals.sum())), "analytic")


# ---------------------------------------------------------------- extraction

def _fft_size(kmax, r, limit):
    n = 64
    while n < 4 * (kmax + 1):
        n *= 2
    if limit is not None and limit > r:
        ratio = r / limit
        while ratio**n > 1e-15 and n < _FFT_MAX:
            n *= 2
    return n


def pmf_from_pgf(psi, ctx, kmax, n_points=None, radius=None, limit=None):
    """Coefficients p_0..p_kmax of psi(ctx, q) by FFT on the circle |q| = r.

    r defaults to ctx.radius.  With n_points unset, the grid size is a
    power of two chosen so that aliasing from a singularity at |q| = limit
    stays below 1e-15.
    """
    r = ctx.radius if radius is None else radius
    if n_points is None:
        n = _fft_size(kmax, r, ctx.limit if limit is None else limit)
    else:
        n = int(n_points)
        if n < 4 * kmax or n & (n - 1):
            raise ValueError("n_points must be a power of two >= 4 kmax")
    theta = 2 * np.pi * (np.arange(n) + 0.5) / n
    vals = np.asarray(psi(ctx, r * np.exp(1j * theta)), dtype=complex)
    k = np.arange(kmax + 1)
    with np.errstate(over="ignore"):
        # r**k overflowing means the coefficient is below double precision anyway
        scale = 1.0 / r ** k.astype(float)
    coef = np.fft.fft(vals)[: kmax + 1] / n * np.exp(-1j * np.pi * k / n) * scale
    if np.max(np.abs(coef.imag)) > 1e-9:
        raise ArithmeticError("imaginary residue in extracted coefficients; bad radius?")
    p = coef.real
    return Pmf(p, max(0.0, 1.0 - float(np.clip(p, 0, None).sum())), "analytic")


def pmf_Q(ctx, kmax):
    return pmf_from_pgf(psi_Q, ctx, kmax, limit=ctx.pole)


def pmf_H(ctx, kmax):
    return pmf_from_pgf(psi_H, ctx, kmax, limit=ctx.pole)


def pmf_C(ctx, kmax):
    return pmf_from_pgf(psi_C, ctx, kmax, limit=ctx.pole)


def pmf_V(ctx, kmax):
    return pmf_from_pgf(psi_V, ctx, kmax, radius=1.0, n_points=_fft_size(kmax, 1.0, None) * 2)


def pmf_Y(ctx, kmax=None):
    return Pmf(prob_Y_all(ctx), 0.0, "analytic")


def pmf_B(ctx, kmax):
    return pmf_from_pgf(psi_B, ctx, kmax)


def pmf_Bhat(ctx, kmax):
    return pmf_from_pgf(psi_Bhat, ctx, kmax)


def pmf_U(ctx, kmax):
    return pmf_from_pgf(psi_U, ctx, kmax)


def pmf_U_keys(ctx, kmax):
    lim = min(ctx.pole, ctx.root_radius) ** (1.0 / ctx.b)
    return pmf_from_pgf(psi_U_keys, ctx, kmax, radius=keys_radius(ctx), limit=lim)


def pmf_D_RH(ctx, kmax):
    """Robin Hood displacement law from blocks of b consecutive C atoms."""
    b = ctx.b
    c = pmf_C(ctx, b * (kmax + 1) - 1).values
    vals = c.reshape(kmax + 1, b).sum(axis=1)
    return Pmf(vals, max(0.0, 1.0 - float(vals.sum())), "analytic")


PMF_FUNCS = {
    "H": pmf_H, "Q": pmf_Q, "Y": pmf_Y, "B": pmf_B, "Bhat": pmf_Bhat,
    "U": pmf_U, "Ukeys": pmf_U_keys, "D_RH": pmf_D_RH, "C": pmf_C, "V": pmf_V,
    "D_FCFS": pmf_D_FCFS,
}

MEAN_FUNCS = {
    "H": mean_H, "Q": mean_Q, "Y": lambda ctx: float(np.dot(np.arange(ctx.b + 1), prob_Y_all(ctx))),
    "B": mean_B, "Bhat": mean_Bhat, "U": mean_U, "Ukeys": mean_U_keys,
    "D_RH": mean_D_RH, "C": mean_C, "V": lambda ctx: ctx.b * ctx.alpha / 2,
    "D_FCFS": mean_D_FCFS,
}

STATISTICS = tuple(PMF_FUNCS)
