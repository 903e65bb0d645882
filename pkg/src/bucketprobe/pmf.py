"""Truncated probability mass functions on the nonnegative integers."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

PROVENANCES = ("analytic", "exact", "simulated")


@dataclass
class Pmf:
    """values[k] = P(X = k) for k < len(values); tail_bound bounds the rest.

    values is a float array for analytic and simulated laws, and a list of
    Fractions for exact ones.
    """
    values: object
    tail_bound: float = 0.0
    provenance: str = "analytic"
    stderr: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.is_exact:
            if any(v < 0 for v in self.values):
                raise ValueError("negative probability in exact Pmf")
            return
        v = np.asarray(self.values, dtype=float)
        if np.any(v < -1e-12):
            raise ArithmeticError(f"probability below -1e-12: {v.min():.3e}")
        self.values = np.clip(v, 0.0, None)
        total = float(self.values.sum()) + self.tail_bound
        if abs(total - 1.0) > 1e-8:
            raise ArithmeticError(f"Pmf mass {total!r} is not 1")

    @property
    def is_exact(self):
        return isinstance(self.values, (list, tuple)) and all(
            isinstance(v, (int, Fraction)) for v in self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        if k < len(self.values):
            return self.values[k]
        return Fraction(0) if self.is_exact else 0.0

    def as_float(self):
        return np.array([float(v) for v in self.values])

    def mean(self):
        if self.is_exact:
            return sum((k * v for k, v in enumerate(self.values)), Fraction(0))
        return float(np.dot(np.arange(len(self.values)), self.values))

    def moment2(self):
        if self.is_exact:
            return sum((k * k * v for k, v in enumerate(self.values)), Fraction(0))
        k = np.arange(len(self.values))
        return float(np.dot(k * k, self.values))

    def var(self):
        return self.moment2() - self.mean() ** 2


def exact_pmf(counts, total):
    """Exact Pmf from a {value: count} mapping and the total count."""
    if total <= 0:
        raise ValueError("empty distribution")
    top = max(counts) if counts else 0
    vals = [Fraction(counts.get(k, 0), total) for k in range(top + 1)]
    return Pmf(vals, 0.0, "exact")
