"""Weight schemes for the trimmed L-statistic.

A weight function J lives on an open interval I containing [alpha, 1-beta]
and carries a declared Lipschitz constant.  Cell-generated coefficients are
n times the integral of J over ((i-1)/n, i/n], computed with a 5-point
Gauss-Legendre rule per cell (exact for polynomials of degree <= 9, which
covers the whole catalog); cells are split at declared kinks.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainError
from .quadrature import _gl_rule

CELL_GL_ORDER = 5


@dataclass(frozen=True)
class WeightFunction:
    """A weight function with its declared smoothness metadata."""
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    domain: tuple[float, float] = (0.0, 1.0)
    breakpoints: tuple[float, ...] = ()

    def __call__(self, u):
        arr = np.asarray(u, dtype=float)
        out = np.asarray(self.fn(arr), dtype=float)
        return float(out) if arr.ndim == 0 else out

    def covers(self, lo: float, hi: float) -> bool:
        """Whether [lo, hi] fits inside the (open) definition interval.

        Quadrature only evaluates at interior nodes, so touching an endpoint
        of the interval is allowed.
        """
        return self.domain[0] <= lo and hi <= self.domain[1]


def _const_fn(u, value):
    return np.full_like(np.asarray(u, dtype=float), value)


def _poly_fn(u, coeffs):
    return np.polynomial.polynomial.polyval(np.asarray(u, dtype=float), np.asarray(coeffs))


def _clamped_poly_fn(u, coeffs, lo, hi):
    return np.polynomial.polynomial.polyval(
        np.clip(np.asarray(u, dtype=float), lo, hi), np.asarray(coeffs))


def _poly_lipschitz(coeffs) -> float:
    # sup of |P'| on [0, 1] is at most sum k*|c_k|
    return float(sum(k * abs(c) for k, c in enumerate(coeffs) if k >= 1))


def constant_weight(value: float = 1.0) -> WeightFunction:
    return WeightFunction(f"constant({value:g})", partial(_const_fn, value=float(value)), 0.0)


def linear_weight(intercept: float = 0.0, slope: float = 1.0) -> WeightFunction:
    coeffs = (float(intercept), float(slope))
    return WeightFunction(f"linear({intercept:g},{slope:g})",
                          partial(_poly_fn, coeffs=coeffs), abs(float(slope)))


def quadratic_weight(c0: float = 0.0, c1: float = 0.0, c2: float = 1.0) -> WeightFunction:
    coeffs = (float(c0), float(c1), float(c2))
    return WeightFunction(f"quadratic({c0:g},{c1:g},{c2:g})",
                          partial(_poly_fn, coeffs=coeffs), _poly_lipschitz(coeffs))


def clamped_poly_weight(coeffs, lo: float, hi: float) -> WeightFunction:
    if not 0.0 <= lo < hi <= 1.0:
        raise ConfigError(f"clamp interval must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]")
    coeffs = tuple(float(c) for c in coeffs)
    name = "clamped-poly(" + ",".join(f"{c:g}" for c in coeffs) + f";{lo:g},{hi:g})"
    return WeightFunction(name, partial(_clamped_poly_fn, coeffs=coeffs, lo=lo, hi=hi),
                          _poly_lipschitz(coeffs), breakpoints=(lo, hi))


WEIGHT_BUILDERS = {
    "constant": (constant_weight, ("value",)),
    "linear": (linear_weight, ("intercept", "slope")),
    "quadratic": (quadratic_weight, ("c0", "c1", "c2")),
    "clamped-poly": (clamped_poly_weight, ("coeffs", "lo", "hi")),
}


def make_weight(name: str, params: dict | None = None) -> WeightFunction:
    """Build a catalog weight function by identifier."""
    params = dict(params or {})
    try:
        builder, allowed = WEIGHT_BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown weight '{name}'; known: {sorted(WEIGHT_BUILDERS)}") from None
    unknown = set(params) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for weight '{name}'")
    return builder(**params)


def extended_weight(J: WeightFunction, alpha: float, beta: float) -> WeightFunction:
    """Constant extension of J outside (alpha, 1-beta], total on [0, 1].

    The extension keeps J's Lipschitz constant and adds kinks at the clamp
    points.
    """
    if not 0.0 < alpha < 1.0 - beta < 1.0:
        raise ConfigError(f"need 0 < alpha < 1-beta < 1, got alpha={alpha}, beta={beta}")
    inner = tuple(p for p in J.breakpoints if alpha < p < 1.0 - beta)
    return WeightFunction(
        name=f"{J.name}|ext[{alpha:g},{1.0 - beta:g}]",
        fn=partial(_clamp_eval, base=J.fn, lo=alpha, hi=1.0 - beta),
        lipschitz=J.lipschitz,
        domain=(-math.inf, math.inf),
        breakpoints=tuple(sorted({alpha, 1.0 - beta, *inner})),
    )


def _clamp_eval(u, base, lo, hi):
    return base(np.clip(np.asarray(u, dtype=float), lo, hi))


def verify_lipschitz(J: WeightFunction, lo: float | None = None, hi: float | None = None,
                     points: int = 10_000, slack: float = 1e-12) -> float:
    """Grid check of the declared Lipschitz constant; returns the measured one.

    Raises ConfigError when consecutive grid increments exceed the declared
    bound beyond the slack.
    """
    a = J.domain[0] if lo is None else lo
    b = J.domain[1] if hi is None else hi
    a = max(a, 0.0) + 1e-9 if not math.isfinite(a) or a <= 0.0 else a + 1e-12
    b = min(b, 1.0) - 1e-9 if not math.isfinite(b) or b >= 1.0 else b - 1e-12
    grid = np.linspace(a, b, points)
    vals = J(grid)
    steps = np.diff(grid)
    measured = float(np.max(np.abs(np.diff(vals)) / steps))
    if measured > J.lipschitz + slack / steps[0]:
        raise ConfigError(
            f"weight '{J.name}' violates its declared Lipschitz constant: "
            f"measured {measured:g} > declared {J.lipschitz:g}")
    return measured


@dataclass(frozen=True)
class TrimSpec:
    """Trimming counts with their limit fractions and smoothness exponent.

    The counts k_n, m_n are the source of truth; alpha_n = k_n/n and
    beta_n = m_n/n are always derived.  ``rate_constant`` is the constant M
    in the convergence-rate requirement
    max(|alpha_n - alpha|, |beta_n - beta|) <= M * n^{-1/(2+epsilon)}.
    """
    n: int
    k_n: int
    m_n: int
    alpha: float
    beta: float
    epsilon: float = 1.0
    rate_constant: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be positive, got {self.n}")
        if not (0 <= self.k_n < self.n - self.m_n <= self.n):
            raise ConfigError(
                f"trim counts must satisfy 0 <= k_n < n - m_n <= n, "
                f"got k_n={self.k_n}, m_n={self.m_n}, n={self.n}")
        if not (0.0 < self.alpha < 1.0 - self.beta < 1.0):
            raise ConfigError(
                f"limits must satisfy 0 < alpha < 1-beta < 1, got "
                f"alpha={self.alpha}, beta={self.beta}")
        if self.k_n < 1 or self.m_n < 1:
            raise ConfigError("heavy trimming requires k_n >= 1 and m_n >= 1")
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        dev = max(abs(self.alpha_n - self.alpha), abs(self.beta_n - self.beta))
        bound = self.rate_constant * self.n ** (-1.0 / (2.0 + self.epsilon))
        if dev > bound + 1e-12:
            raise ConfigError(
                f"trim fractions drift too fast: max deviation {dev:g} exceeds "
                f"M*n^(-1/(2+eps)) = {bound:g}")

    @property
    def alpha_n(self) -> float:
        return self.k_n / self.n

    @property
    def beta_n(self) -> float:
        return self.m_n / self.n

    @property
    def upper_n(self) -> float:
        return (self.n - self.m_n) / self.n

    @property
    def retained(self) -> int:
        return self.n - self.m_n - self.k_n

    @classmethod
    def from_rule(cls, n: int, alpha: float, beta: float, epsilon: float = 1.0,
                  rule: str = "exact", rate_constant: float = 0.0) -> "TrimSpec":
        """Derive counts from a trim rule.

        ``exact``: k_n = round(n * alpha).  ``rate``: the fractions are pushed
        inward by rate_constant * n^{-1/(2+epsilon)} before rounding, which
        realizes the admissible convergence rate at its constant.
        """
        if rule == "exact":
            k = round(n * alpha)
            m = round(n * beta)
        elif rule == "rate":
            off = rate_constant * n ** (-1.0 / (2.0 + epsilon))
            k = round(n * (alpha + off))
            m = round(n * (beta + off))
        else:
            raise ConfigError(f"unknown trim rule '{rule}' (expected 'exact' or 'rate')")
        dev = max(abs(k / n - alpha), abs(m / n - beta))
        needed = dev * n ** (1.0 / (2.0 + epsilon))
        declared = max(rate_constant, needed * (1.0 + 1e-12) + 1e-15)
        return cls(n=n, k_n=k, m_n=m, alpha=alpha, beta=beta,
                   epsilon=epsilon, rate_constant=declared)


@dataclass(frozen=True)
class WeightScheme:
    """Either explicit coefficients, cell-generated ones, or both.

    Explicit mode needs a weight function as well whenever centering or
    variance constants are requested; generated mode derives everything
    from J.
    """
    mode: str
    J: Optional[WeightFunction] = None
    coefficients: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in ("generated", "explicit"):
            raise ConfigError(f"unknown weight mode '{self.mode}'")
        if self.mode == "generated" and self.J is None:
            raise ConfigError("generated mode requires a weight function")
        if self.mode == "explicit":
            if self.coefficients is None:
                raise ConfigError("explicit mode requires a coefficient array")
            arr = np.asarray(self.coefficients, dtype=float)
            if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
                raise ConfigError("explicit coefficients must be a finite 1-d array")
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, "coefficients", arr)

    @classmethod
    def generated(cls, J: WeightFunction) -> "WeightScheme":
        return cls(mode="generated", J=J)

    @classmethod
    def explicit(cls, coefficients, J: WeightFunction | None = None) -> "WeightScheme":
        return cls(mode="explicit", J=J, coefficients=np.asarray(coefficients, dtype=float))


def load_coefficients_csv(path) -> np.ndarray:
    """Read explicit coefficients from a one-column CSV (header optional)."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            try:
                rows.append(float(row[0]))
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ConfigError(f"{path}:{lineno}: not a number: {row[0]!r}") from None
    if not rows:
        raise ConfigError(f"{path}: no coefficients found")
    return np.asarray(rows, dtype=float)


def cell_integrals(J: WeightFunction, edges: np.ndarray) -> np.ndarray:
    """Integral of J over every cell [edges[i], edges[i+1]], vectorized.

    Cells containing a kink of J are split there so each Gauss-Legendre panel
    sees a polynomial piece.
    """
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    x, w = _gl_rule(CELL_GL_ORDER)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    vals = J(mid[:, None] + half[:, None] * x[None, :])
    out = half * (vals @ w)
    inner = [p for p in J.breakpoints if edges[0] < p < edges[-1]]
    for p in inner:
        idx = np.searchsorted(edges, p, side="left") - 1
        if 0 <= idx < out.size and edges[idx] < p < edges[idx + 1]:
            out[idx] = _split_cell(J, edges[idx], edges[idx + 1], x, w)
    return out


def _split_cell(J: WeightFunction, lo: float, hi: float, x, w) -> float:
    pts = [lo] + sorted(p for p in J.breakpoints if lo < p < hi) + [hi]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total += half * float(np.dot(w, J(mid + half * x)))
    return total


def generated_weights(J: WeightFunction, spec: TrimSpec) -> np.ndarray:
    """Cell-generated coefficients n * integral of J over ((i-1)/n, i/n]
    for i = k_n+1 .. n-m_n."""
    n = spec.n
    lo, hi = spec.k_n / n, (n - spec.m_n) / n
    if not J.covers(lo, hi):
        raise DomainError(
            f"weight '{J.name}' (domain {J.domain}) is undefined on [{lo}, {hi}]")
    edges = np.arange(spec.k_n, n - spec.m_n + 1) / n
    return n * cell_integrals(J, edges)


def condition_iv_statistic(scheme: WeightScheme, spec: TrimSpec) -> float:
    """Sum of |c_i - c0_i|^(2+epsilon) over the retained range.

    Multiplying by n^epsilon gives the scale whose boundedness across n is
    the usual diagnostic.
    """
    if scheme.mode != "explicit" or scheme.J is None:
        raise ConfigError("condition-iv diagnostic needs explicit coefficients and a weight function")
    c = scheme.coefficients
    if c.size != spec.retained:
        raise ConfigError(
            f"coefficient array has {c.size} entries but the trim range has {spec.retained}")
    c0 = generated_weights(scheme.J, spec)
    return math.fsum(np.abs(c - c0) ** (2.0 + spec.epsilon))
