"""Winsorized approximation of the trimmed L-statistic and its exact decomposition.

Clamping the sample to the trimming quantiles [xi_alpha, xi_upper] and
re-weighting with the constant-extended weight function yields a
non-trimmed statistic Ltilde whose centered value differs from the centered
trimmed statistic by an exactly computable remainder:

    L0 - mu_n = (Ltilde - mu_Ltilde) + R1 + R2.

R1 collects the mismatch between the empirical clamp fractions (A_n, B_n)
and their limits (alpha, beta); R2 collects the mismatch between the finite-n
trim fractions (alpha_n, beta_n) and the same limits.  Both are oriented
integrals, so a single formula covers every ordering of the four boundary
points.  Step-function parts are integrated exactly; only the four smooth
integrals of J * F^{-1} carry quadrature error, which keeps the identity
residual at rounding level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DistributionModel, SampleFrame, quantile_eval
from .errors import ConfigError
from .lstat import step_weight_integral
from .quadrature import signed_adaptive
from .weights import TrimSpec, WeightFunction, WeightScheme, cell_integrals, extended_weight

RESIDUAL_RTOL = 1e-9
R2_SMOOTH_TOL = 1e-11

def winsorize(sample, xi_alpha: float, xi_upper: float) -> np.ndarray:
    """Clamp every value into [xi_alpha, xi_upper], preserving input order.

    A value exactly at xi_alpha stays at xi_alpha and one exactly at
    xi_upper stays put, matching the half-open clamp convention.
    """
    if xi_alpha > xi_upper:
        raise ConfigError(f"winsorization needs xi_alpha <= xi_upper, got {xi_alpha} > {xi_upper}")
    return np.clip(np.asarray(sample, dtype=float), xi_alpha, xi_upper)

@dataclass(frozen=True)
class WinsorizedModel:
    """The law of a sample value clamped to its alpha / 1-beta quantiles."""
    base: DistributionModel
    alpha: float
    beta: float
    xi_alpha: float
    xi_upper: float

    @classmethod
    def from_model(cls, model: DistributionModel, alpha: float, beta: float) -> "WinsorizedModel":
        if not 0.0 < alpha < 1.0 - beta < 1.0:
            raise ConfigError(f"need 0 < alpha < 1-beta < 1, got alpha={alpha}, beta={beta}")
        xi_a = float(quantile_eval(model, alpha))
        xi_b = float(quantile_eval(model, 1.0 - beta))
        return cls(base=model, alpha=alpha, beta=beta, xi_alpha=xi_a, xi_upper=xi_b)

    def quantile(self, u):
        """Clamped inverse: equals the base inverse on (alpha, 1-beta], constant outside."""
        return np.clip(np.asarray(self.base.quantile(u), dtype=float),
                       self.xi_alpha, self.xi_upper)

def _full_cell_weights(J_w: WeightFunction, n: int) -> np.ndarray:
    edges = np.arange(n + 1) / n
    return n * cell_integrals(J_w, edges)

def approx_lstat(frame: SampleFrame, J_w: WeightFunction) -> float:
    """Non-trimmed L-statistic of a (Winsorized) sample under the extended weight."""
    c = _full_cell_weights(J_w, frame.n)
    return math.fsum(c * frame.values) / frame.n

def approx_centering(J_w: WeightFunction, wmodel: WinsorizedModel, tol: float = 1e-10) -> float:
    """Centering of the Winsorized statistic: integral of J_w(u) G^{-1}(u) du over [0, 1].

    Split at alpha and 1-beta; the outer pieces have constant G^{-1}.
    """
    a, b = wmodel.alpha, 1.0 - wmodel.beta
    mid = signed_adaptive(
        lambda u: J_w(u) * np.asarray(wmodel.base.quantile(u), dtype=float),
        a, b, tol, breakpoints=J_w.breakpoints)
    return a * J_w(a) * wmodel.xi_alpha + mid + (1.0 - b) * J_w(b) * wmodel.xi_upper

def clamp_counts(frame: SampleFrame, wmodel: WinsorizedModel) -> tuple[int, int]:
    """(N_alpha, N_upper): how many sample values sit at or below each quantile."""
    n_a = int(np.searchsorted(frame.values, wmodel.xi_alpha, side="right"))
    n_b = int(np.searchsorted(frame.values, wmodel.xi_upper, side="right"))
    return n_a, n_b

def remainder_r1(frame: SampleFrame, J_w: WeightFunction, wmodel: WinsorizedModel,
                 spec: TrimSpec) -> float:
    """Empirical clamp-fraction remainder.

    Oriented integral of J_w(u)[F_n^{-1}(u) - xi_alpha] du from alpha to A_n,
    minus the analogous integral from 1-beta to 1-B_n at the upper quantile.
    The counts come from the raw (un-Winsorized) sample.
    """
    if frame.n != spec.n:
        raise ConfigError(f"frame has n={frame.n} but the trim spec has n={spec.n}")
    n_a, n_b = clamp_counts(frame, wmodel)
    a_n = n_a / frame.n
    one_minus_b_n = n_b / frame.n
    low = step_weight_integral(J_w, frame.values, spec.alpha, a_n, offset=wmodel.xi_alpha)
    high = step_weight_integral(J_w, frame.values, 1.0 - spec.beta, one_minus_b_n,
                                offset=wmodel.xi_upper)
    return low - high

def remainder_r2(frame: SampleFrame, J: WeightFunction, model: DistributionModel,
                 spec: TrimSpec, tol: float = R2_SMOOTH_TOL) -> float:
    """Finite-n trim-fraction remainder.

    Oriented integral of J(u)[F_n^{-1}(u) - F^{-1}(u)] du from alpha_n to
    alpha, minus the analogous integral from 1-beta_n to 1-beta.  The step
    part is exact; the smooth part is adaptive quadrature.
    """
    if frame.n != spec.n:
        raise ConfigError(f"frame has n={frame.n} but the trim spec has n={spec.n}")

    def piece(a: float, b: float) -> float:
        step = step_weight_integral(J, frame.values, a, b)
        smooth = signed_adaptive(lambda u: J(u) * np.asarray(model.quantile(u), dtype=float),
                                 a, b, tol, breakpoints=J.breakpoints)
        return step - smooth

    return piece(spec.alpha_n, spec.alpha) - piece(spec.upper_n, 1.0 - spec.beta)

def weight_perturbation_vn(frame: SampleFrame, scheme: WeightScheme, spec: TrimSpec) -> float:
    """V_n = L_n - L0 = n^{-1} * sum (c_i - c0_i) X_{i:n} over the retained range."""
    if scheme.mode != "explicit" or scheme.J is None:
        raise ConfigError("the weight perturbation needs explicit coefficients and a weight function")
    from .weights import generated_weights
    c = scheme.coefficients
    if c.size != spec.retained:
        raise ConfigError(
            f"coefficient array has {c.size} entries but the trim range has {spec.retained}")
    c0 = generated_weights(scheme.J, spec)
    xs = frame.values[spec.k_n:spec.n - spec.m_n]
    return math.fsum((c - c0) * xs) / spec.n

_CASE_GRID = {(1, 1): "1-1", (1, 2): "1-2", (1, 3): "1-3",
              (2, 2): "2-2", (2, 3): "2-3", (3, 3): "3-3"}

def case_ordering(a_n: float, one_minus_b_n: float, alpha: float, beta: float) -> str:
    """Which of the six orderings of (alpha, A_n, 1-beta, 1-B_n) occurred.

    Regions: 1 below alpha, 2 between, 3 above 1-beta; the pair is
    (region(A_n), region(1-B_n)) and A_n <= 1-B_n always holds.
    """
    def region(t: float) -> int:
        if t < alpha:
            return 1
        return 2 if t <= 1.0 - beta else 3

    return _CASE_GRID[(region(a_n), region(one_minus_b_n))]

@dataclass(frozen=True)
class DecompositionReport:
    """All terms of the exact decomposition for one sample."""
    n: int
    L0: float
    mu_n: float
    Ltilde: float
    mu_Ltilde: float
    R1: float
    R2: float
    Rn: float
    Vn: float
    residual: float
    A_n: float
    B_n: float
    N_alpha: int
    N_upper: int
    case: str
    passed: bool
    tolerance: float

class DecompositionContext:
    """Per-configuration constants for repeated decomposition evaluations.

    Everything that does not depend on the sample (cell weights, centering
    constants, the smooth halves of R2) is computed once, so per-sample work
    is two weighted sums plus short exact step integrals.
    """

    def __init__(self, model: DistributionModel, scheme: WeightScheme, spec: TrimSpec):
        if scheme.J is None:
            raise ConfigError("the decomposition needs a weight function")
        J = scheme.J
        lo_need = min(spec.alpha_n, spec.alpha)
        hi_need = max(spec.upper_n, 1.0 - spec.beta)
        if not J.covers(lo_need, hi_need):
            raise ConfigError(
                f"weight '{J.name}' (domain {J.domain}) is undefined on [{lo_need}, {hi_need}]")
        self.model = model
        self.spec = spec
        self.scheme = scheme
        self.J = J
        self.J_w = extended_weight(J, spec.alpha, spec.beta)
        self.wmodel = WinsorizedModel.from_model(model, spec.alpha, spec.beta)
        n = spec.n
        edges = np.arange(n + 1) / n
        self.cell_w = n * cell_integrals(self.J_w, edges)
        self.c0 = n * cell_integrals(J, edges[spec.k_n:n - spec.m_n + 1])
        if scheme.mode == "explicit":
            if scheme.coefficients.size != spec.retained:
                raise ConfigError(
                    f"coefficient array has {scheme.coefficients.size} entries "
                    f"but the trim range has {spec.retained}")
            self.c_explicit = scheme.coefficients
        else:
            self.c_explicit = None
        from .lstat import centering_mu
        self.mu_n = centering_mu(J, model, spec)
        self.mu_Ltilde = approx_centering(self.J_w, self.wmodel)
        quant = lambda u: J(u) * np.asarray(model.quantile(u), dtype=float)
        self.s_lower = signed_adaptive(quant, spec.alpha_n, spec.alpha,
                                       R2_SMOOTH_TOL, breakpoints=J.breakpoints)
        self.s_upper = signed_adaptive(quant, spec.upper_n, 1.0 - spec.beta,
                                       R2_SMOOTH_TOL, breakpoints=J.breakpoints)

    def evaluate(self, frame: SampleFrame) -> DecompositionReport:
        spec = self.spec
        if frame.n != spec.n:
            raise ConfigError(f"frame has n={frame.n} but the trim spec has n={spec.n}")
        xs = frame.values
        n = spec.n
        L0 = math.fsum(self.c0 * xs[spec.k_n:n - spec.m_n]) / n
        w = winsorize(xs, self.wmodel.xi_alpha, self.wmodel.xi_upper)
        Lt = math.fsum(self.cell_w * w) / n
        n_a, n_b = clamp_counts(frame, self.wmodel)
        a_n = n_a / n
        one_minus_b_n = n_b / n
        r1 = (step_weight_integral(self.J_w, xs, spec.alpha, a_n, offset=self.wmodel.xi_alpha)
              - step_weight_integral(self.J_w, xs, 1.0 - spec.beta, one_minus_b_n,
                                     offset=self.wmodel.xi_upper))
        r2 = ((step_weight_integral(self.J, xs, spec.alpha_n, spec.alpha) - self.s_lower)
              - (step_weight_integral(self.J, xs, spec.upper_n, 1.0 - spec.beta) - self.s_upper))
        if self.c_explicit is not None:
            vn = math.fsum((self.c_explicit - self.c0) * xs[spec.k_n:n - spec.m_n]) / n
        else:
            vn = 0.0
        residual = abs(math.fsum([L0, -self.mu_n, -Lt, self.mu_Ltilde, -r1, -r2]))
        tol = RESIDUAL_RTOL * (1.0 + abs(L0))
        return DecompositionReport(
            n=n, L0=L0, mu_n=self.mu_n, Ltilde=Lt, mu_Ltilde=self.mu_Ltilde,
            R1=r1, R2=r2, Rn=r1 + r2, Vn=vn, residual=residual,
            A_n=a_n, B_n=1.0 - one_minus_b_n, N_alpha=n_a, N_upper=n_b,
            case=case_ordering(a_n, one_minus_b_n, spec.alpha, spec.beta),
            passed=residual <= tol, tolerance=tol)

def decomposition_report(frame: SampleFrame, scheme: WeightScheme,
                         model: DistributionModel, spec: TrimSpec) -> DecompositionReport:
    """One-shot decomposition of a single sample (builds a fresh context)."""
    return DecompositionContext(model, scheme, spec).evaluate(frame)
