"""Closed-form probability bounds and normal-tail utilities.

The normal tail is evaluated through the complementary error function, never
as one minus a cdf, so the deep tail keeps full relative accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def normal_tail(x) -> float | np.ndarray:
    """Upper tail 1 - Phi(x) of the standard normal, via erfc."""
    arr = np.asarray(x, dtype=float)
    out = 0.5 * special.erfc(arr / _SQRT2)
    return float(out) if arr.ndim == 0 else out


def normal_density(x) -> float | np.ndarray:
    arr = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * arr * arr) / _SQRT_2PI
    return float(out) if arr.ndim == 0 else out


def mills_approx(x: float) -> float:
    """Leading tail approximation phi(x)/x, valid for x > 0."""
    if x <= 0.0:
        raise DomainError(f"the tail approximation needs x > 0, got {x}")
    return normal_density(x) / x


def hoeffding_binomial_bound(n: int, h: float) -> float:
    """Two-sided binomial deviation bound P{|N - np| > nh} <= 2 exp(-2 n h^2)."""
    if n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not 0.0 < h < 1.0:
        raise DomainError(f"h must lie in (0, 1), got {h}")
    return min(max(2.0 * math.exp(-2.0 * n * h * h), 0.0), 2.0)


def uniform_os_bound(lam: float, p: float, n: int) -> float:
    """Exponential bound for a uniform order statistic:
    P{sqrt(n) |U_{k:n} - p_k| > lam} <= exp(-(lam^2/(2p)) / (1 + 2 lam/(3 p sqrt(n)))).
    """
    if lam <= 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return math.exp(-(lam * lam / (2.0 * p)) / (1.0 + 2.0 * lam / (3.0 * p * math.sqrt(n))))


def a_n_floor(n: int) -> float:
    """Slowest admissible decay of the range-widening sequence: 1/log(1+n)."""
    return 1.0 / math.log1p(n)


def hoeffding_table(ns, hs) -> list[tuple[int, float, float]]:
    """(n, h, bound) rows over a parameter grid, ready for delimited output."""
    return [(int(n), float(h), hoeffding_binomial_bound(int(n), float(h)))
            for n in ns for h in hs]


def uniform_os_table(lams, ps, ns) -> list[tuple[float, float, int, float]]:
    """(lambda, p, n, bound) rows over a parameter grid."""
    return [(float(lam), float(p), int(n), uniform_os_bound(float(lam), float(p), int(n)))
            for lam in lams for p in ps for n in ns]


@dataclass(frozen=True)
class DeviationRange:
    """The admissible normalized-deviation range [-A, a_n * z_n] for a sample size.

    z_n = n^{epsilon/(2(2+epsilon))} and delta_n = a_n^{-1/2}/z_n is the
    slack used when sandwiching tail probabilities.
    """
    n: int
    epsilon: float
    a_n: float
    big_a: float
    z_n: float
    upper: float
    lower: float
    delta_n: float

    def __post_init__(self):
        if abs(self.upper - self.a_n * self.z_n) > 1e-12 * (1.0 + abs(self.upper)):
            raise ConfigError("inconsistent deviation range: upper != a_n * z_n")
        expected = self.a_n ** -0.5 / self.z_n
        if abs(self.delta_n - expected) > 1e-12 * (1.0 + abs(expected)):
            raise ConfigError("inconsistent deviation range: delta_n != a_n^(-1/2)/z_n")


def deviation_range(n: int, epsilon: float, a_n: float | None = None,
                    big_a: float = 3.0) -> DeviationRange:
    """Materialize the deviation range for experiment grids.

    ``a_n=None`` selects the floor rule 1/log(1+n); an explicit value below
    the floor is rejected.
    """
    if n < 2:
        raise ConfigError(f"n must be at least 2, got {n}")
    if not 0.0 < epsilon <= 1.0:
        raise ConfigError(f"epsilon must lie in (0, 1], got {epsilon}")
    if big_a <= 0.0:
        raise ConfigError(f"A must be positive, got {big_a}")
    floor = a_n_floor(n)
    if a_n is None:
        a_n = floor
    elif a_n < floor:
        raise ConfigError(f"a_n={a_n:g} is below the admissible floor 1/log(1+n)={floor:g}")
    z_n = n ** (epsilon / (2.0 * (2.0 + epsilon)))
    return DeviationRange(n=n, epsilon=epsilon, a_n=a_n, big_a=big_a, z_n=z_n,
                          upper=a_n * z_n, lower=-big_a, delta_n=a_n ** -0.5 / z_n)
