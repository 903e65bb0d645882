"""Tree function, the root family zeta_l(q; alpha) and related special functions.

The tree function is T(z) = sum_{n>=1} n^(n-1) z^n / n!, the inverse of
T -> T exp(-T) on the closed disc |z| <= 1/e.  It equals -W(-z) for the
principal branch of Lambert's W.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np

INV_E = math.exp(-1.0)

_SERIES_RADIUS = 0.25
_SERIES_TERMS = 100
_SEED_TERMS = 12
_NEWTON_TOL = 1e-14
_NEWTON_MAXITER = 50
_BRANCH_SEED_DIST = 0.3
TREE_POLY_EXACT_CAP = 300
TREE_POLY_CAP = 2000


def _tree_coeffs(nterms):
    n = np.arange(1, nterms + 1, dtype=float)
    # n^(n-1)/n! in log space to avoid overflow
    from scipy.special import gammaln
    return np.exp((n - 1) * np.log(n) - gammaln(n + 1))


_COEFFS = _tree_coeffs(_SERIES_TERMS)


def _series(z, nterms):
    # Horner on z * sum c_n z^(n-1)
    c = _COEFFS[:nterms]
    acc = np.zeros_like(z)
    for cn in c[::-1]:
        acc = acc * z + cn
    return acc * z


def _branch_seed(z):
    # expansion around the branch point z = 1/e, p = sqrt(2(1 - e z))
    p = np.sqrt(2.0 * (1.0 - math.e * z))
    return 1.0 - p + p * p / 3.0 - 11.0 * p**3 / 72.0


def tree_fn(z):
    """Principal tree function T(z) for |z| <= 1/e.

    Accepts a scalar or an array; returns the same shape (complex).
    """
    arr = np.asarray(z, dtype=complex)
    scalar = arr.ndim == 0
    zz = np.atleast_1d(arr).ravel()
    if not np.all(np.isfinite(zz)):
        raise ValueError("tree_fn: non-finite argument")
    az = np.abs(zz)
    if np.any(az > INV_E * (1 + 1e-12)):
        raise ValueError("tree_fn: |z| must not exceed 1/e")

    out = np.empty_like(zz)
    small = az <= _SERIES_RADIUS
    out[small] = _series(zz[small], _SERIES_TERMS)

    big = ~small
    if np.any(big):
        zb = zz[big]
        t = _series(zb, _SEED_TERMS)
        near = np.abs(1.0 - math.e * zb) < _BRANCH_SEED_DIST
        t[near] = _branch_seed(zb[near])
        at_branch = np.abs(1.0 - math.e * zb) < 1e-15
        active = ~at_branch
        t[at_branch] = 1.0
        for _ in range(_NEWTON_MAXITER):
            if not np.any(active):
                break
            ta = t[active]
            ea = np.exp(-ta)
            f = ta * ea - zb[active]
            fp = ea * (1.0 - ta)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(fp != 0, f / fp, 0.0)
            t[active] = ta - step
            res = np.abs(t[active] * np.exp(-t[active]) - zb[active])
            done = (np.abs(step) <= _NEWTON_TOL * (1.0 + np.abs(ta))) | (
                res <= 2.3e-16 * np.abs(zb[active]))
            idx = np.flatnonzero(active)
            active[idx[done]] = False
        res = np.abs(t * np.exp(-t) - zb)
        if np.any(res > 1e-12 * np.abs(zb) + 1e-14) or np.any(np.abs(t) > 1 + 1e-7):
            raise ArithmeticError("tree_fn: Newton iteration did not converge")
        out[big] = t

    if scalar:
        return complex(out[0])
    return out.reshape(arr.shape)


def tree_fn_deriv(z, t=None):
    """T'(z) = T / (z (1 - T)); T'(0) = 1.  Undefined at the branch point."""
    z = complex(z)
    if z == 0:
        return 1.0 + 0j
    if t is None:
        t = tree_fn(z)
    if abs(1 - t) < 1e-12:
        raise ValueError("tree_fn_deriv: derivative is infinite at z = 1/e")
    return t / (z * (1 - t))


@dataclass(frozen=True)
class RootFamily:
    """The b roots of zeta^b = exp(alpha b (zeta - 1)) q inside the unit disc."""
    b: int
    alpha: float
    q: complex
    roots: np.ndarray

    def residuals(self):
        z = self.roots
        return np.abs(z**self.b - np.exp(self.alpha * self.b * (z - 1)) * self.q)


def _check_b_alpha(b, alpha):
    if int(b) != b or b < 1:
        raise ValueError("b must be a positive integer")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")


def zeta_roots_array(b, alpha, q):
    """Roots zeta_l(q), l = 0..b-1, for an array of q.  Shape (b,) + q.shape.

    The principal branch of q^(1/b) is used (argument in (-pi/b, pi/b]),
    and zeta_l uses the rotation omega^l with omega = exp(2 pi i / b).
    """
    _check_b_alpha(b, alpha)
    q = np.asarray(q, dtype=complex)
    ab = alpha * math.exp(-alpha)
    root = np.abs(q) ** (1.0 / b) * np.exp(1j * np.angle(q) / b)
    # np.angle returns values in (-pi, pi]; that is the branch we want
    omega = np.exp(2j * np.pi * np.arange(b) / b)
    arg = (omega.reshape((b,) + (1,) * q.ndim) * ab) * root[None, ...]
    # guard rounding just beyond 1/e
    mag = np.abs(arg)
    over = mag > INV_E
    if np.any(over):
        if np.any(mag > INV_E * (1 + 1e-12)):
            raise ValueError("zeta_roots: |q| exceeds the radius where the roots exist")
        arg = np.where(over, arg / mag * INV_E, arg)
    return tree_fn(arg) / alpha


def zeta_roots(b, alpha, q=1.0):
    """RootFamily for a single q."""
    q = complex(q)
    roots = zeta_roots_array(b, alpha, np.array([q]))[:, 0]
    if q == 1:
        roots[0] = 1.0
    return RootFamily(b=int(b), alpha=float(alpha), q=q, roots=roots)


def root_radius(b, alpha):
    """Largest |q| for which the root family exists.

    Needs |alpha e^(-alpha) q^(1/b)| <= 1/e, so R = (e^(alpha-1)/alpha)^b.
    """
    return (math.exp(alpha - 1.0) / alpha) ** b


def analyticity_radius(b, alpha):
    """Safe radius r > 1 for contour extraction of the (b, alpha) PGFs.

    r is the midpoint between 1 and the nearer of q* (the root > 1 of
    ln q = alpha (q - 1), a pole of psi_Q) and R (where the root family
    ceases to exist).
    """
    _check_b_alpha(b, alpha)
    R = root_radius(b, alpha)
    qstar = pole_radius(alpha)
    limit = min(qstar, R)
    return 1.0 + (limit - 1.0) / 2.0


def pole_radius(alpha):
    """The root q* > 1 of ln q = alpha (q - 1)."""
    from scipy.optimize import brentq

    f = lambda q: math.log(q) - alpha * (q - 1.0)
    # f > 0 just above 1, negative for large q; the maximum sits at 1/alpha
    hi = 2.0 / alpha
    while f(hi) > 0:
        hi *= 2.0
    return brentq(f, 1.0 / alpha, hi, xtol=1e-15, rtol=1e-15)


def ramanujan_q(r, m, n):
    """Q_r(m, n) = sum_k C(k+r, k) n(n-1)...(n-k+1) / m^k."""
    if r < 0 or m < 1 or n < 0:
        raise ValueError("ramanujan_q: need r >= 0, m >= 1, n >= 0")
    total = 0.0
    term = 1.0  # n^{k falling} / m^k
    for k in range(n + 1):
        total += math.comb(k + r, k) * term
        term *= (n - k) / m
        if term == 0.0:
            break
    return total


def _tree_poly_exact(n, y):
    # EGF coefficients f_j = j! [z^j] (1-T)^{-y}; from (1-T) f' = y T' f
    y = Fraction(y)
    f = [Fraction(1)]
    for k in range(n):
        acc = Fraction(0)
        for j in range(k + 1):
            acc += math.comb(k, j) * (j + 1) ** j * f[k - j]
        acc *= y
        for j in range(k):
            acc += math.comb(k, j) * f[j + 1] * (k - j) ** (k - j - 1)
        f.append(acc)
    return f[n]


def _tree_poly_float(n, y):
    # scaled ordinary coefficients F_j = f_j / (j! e^j), which grow polynomially
    sig = [0.0] + [math.exp((j - 1) * math.log(j) - j - math.lgamma(j + 1))
                   for j in range(1, n + 2)]
    F = [1.0]
    for k in range(n):
        s1 = math.fsum((j + 1) * sig[j + 1] * F[k - j] for j in range(k + 1))
        s2 = math.fsum((j + 1) * F[j + 1] * sig[k - j] for j in range(k))
        F.append((y * s1 + s2) / (k + 1))
    with localcontext() as ctx:
        ctx.prec = 30
        scale = Decimal(math.lgamma(n + 1) + n).exp()
        return Decimal(F[n]) * scale


def tree_polynomial(n, y, exact_cap=TREE_POLY_EXACT_CAP, cap=TREE_POLY_CAP):
    """t_n(y) = n! [z^n] (1 - T(z))^(-y).

    Exact (a Fraction) for n <= exact_cap; a Decimal beyond, since the
    values overflow double precision quickly.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > cap:
        raise ValueError(f"tree_polynomial: n = {n} exceeds cap {cap}")
    if n <= exact_cap:
        return _tree_poly_exact(n, y)
    return _tree_poly_float(n, float(y))


def poly_from_roots(roots):
    """Coefficients (ascending) of prod (x - r) for |r| <= 1.

    Evaluated on the unit circle and inverted by FFT, which avoids the
    large intermediate coefficients of repeated convolution when b is big.
    """
    roots = np.asarray(roots, dtype=complex)
    deg = roots.size
    N = 1
    while N < deg + 1:
        N *= 2
    x = np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.prod(x[:, None] - roots[None, :], axis=1)
    return np.fft.fft(vals)[: deg + 1] / N


def unit_roots_branch_sum(b):
    """sum_{d=1}^{b-1} T(w^d/e) / (1 - T(w^d/e)), real by conjugate symmetry."""
    if b == 1:
        return 0.0
    d = np.arange(1, b)
    t = tree_fn(np.exp(2j * np.pi * d / b) * INV_E)
    s = np.sum(t / (1 - t))
    if abs(s.imag) > 1e-10 * (1 + abs(s.real)):
        raise ArithmeticError("branch sum has a nonzero imaginary part")
    return float(s.real)
