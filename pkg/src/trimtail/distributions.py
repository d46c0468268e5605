"""Distribution models with left-continuous inverses, and sorted sample frames.

Every shipped model exposes a vectorized cdf, the left-continuous inverse
F^{-1}(u) = inf{x : F(x) >= u} on (0, 1], and an analytic quantile density
(the derivative of F^{-1}) so that Stieltjes integrals against dF^{-1} honor
their tolerances without numerical differentiation.  Callables are built from
module-level functions via functools.partial, which keeps models picklable
for multi-process simulation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError

_MIN_UNIFORM = 2.0 ** -53  # smallest draw passed to a quantile; rng.random() is in [0, 1)

@dataclass(frozen=True)
class HolderInfo:
    """Smoothness of F^{-1} near the trimming quantiles.

    ``constant`` is a Holder constant of order ``epsilon`` valid on the two
    open neighborhoods ``near_lower`` (around alpha) and ``near_upper``
    (around 1 - beta).
    """
    epsilon: float
    constant: float
    near_lower: tuple[float, float]
    near_upper: tuple[float, float]

@dataclass(frozen=True)
class DistributionModel:
    """A sampling distribution described through its quantile function.

    ``atoms`` lists jumps of F^{-1} as (position in (0,1), jump size) pairs;
    ``None`` means "not supplied", while an empty tuple asserts there are
    none.  ``unbounded_low``/``unbounded_high`` flag endpoints where the
    quantile diverges, guarded by the integration safety band.
    """
    name: str
    cdf: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    quantile_density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    atoms: Optional[tuple[tuple[float, float], ...]] = None
    holder: Optional[HolderInfo] = None
    unbounded_low: bool = False
    unbounded_high: bool = False

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Inverse-cdf sampling from uniform draws of the given generator."""
        u = rng.random(size)
        np.maximum(u, _MIN_UNIFORM, out=u)
        return np.asarray(self.quantile(u), dtype=float)

def quantile_eval(model: DistributionModel, u) -> float | np.ndarray:
    """Evaluate F^{-1}(u) for u in (0, 1].

    At u = 1 a model with unbounded upper support returns +inf; callers that
    integrate must stay inside the safety band instead.
    """
    arr = np.asarray(u, dtype=float)
    if np.any((arr <= 0.0) | (arr > 1.0)):
        raise DomainError(f"quantile argument must lie in (0, 1], got {u!r}")
    with np.errstate(divide="ignore"):
        out = np.asarray(model.quantile(arr), dtype=float)
    return float(out) if np.ndim(u) == 0 else out

@dataclass(frozen=True)
class SampleFrame:
    """A sorted sample; values[i] is the (i+1)-th order statistic."""
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ConfigError("sample frame needs a one-dimensional, non-empty array")
        if not np.all(np.isfinite(vals)):
            raise ConfigError("sample frame values must be finite")
        if np.any(np.diff(vals) < 0):
            raise ConfigError("sample frame values must be sorted non-decreasing")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.size

    @classmethod
    def from_sample(cls, x) -> "SampleFrame":
        return cls(np.sort(np.asarray(x, dtype=float)))

def _ranks(n: int, u: np.ndarray) -> np.ndarray:
    # ceil(n*u) with a 1e-9 snap so that u == i/n lands on rank i despite
    # binary rounding of i/n
    r = np.ceil(np.round(n * u, 9)).astype(int)
    return np.clip(r, 1, n)

def empirical_inverse(frame: SampleFrame, u) -> float | np.ndarray:
    """Left-continuous inverse of the empirical cdf: u -> X_{ceil(n u):n}."""
    arr = np.asarray(u, dtype=float)
    if np.any((arr <= 0.0) | (arr > 1.0)):
        raise DomainError(f"empirical inverse argument must lie in (0, 1], got {u!r}")
    out = frame.values[_ranks(frame.n, arr) - 1]
    return float(out) if np.ndim(u) == 0 else out

# --- shipped model catalog ---------------------------------------------------

def _uniform_cdf(x, lo, hi):
    return np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)

def _uniform_quantile(u, lo, hi):
    return lo + (hi - lo) * np.asarray(u, dtype=float)

def _uniform_qdens(u, lo, hi):
    return np.full_like(np.asarray(u, dtype=float), hi - lo)

def _exponential_cdf(x, rate):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0.0, 0.0, -np.expm1(-rate * x))

def _exponential_quantile(u, rate):
    with np.errstate(divide="ignore"):
        return -np.log1p(-np.asarray(u, dtype=float)) / rate

def _exponential_qdens(u, rate):
    return 1.0 / (rate * (1.0 - np.asarray(u, dtype=float)))

def _normal_cdf(x, mean, sd):
    return special.ndtr((np.asarray(x, dtype=float) - mean) / sd)

def _normal_quantile(u, mean, sd):
    return mean + sd * special.ndtri(np.asarray(u, dtype=float))

def _normal_qdens(u, mean, sd):
    z = special.ndtri(np.asarray(u, dtype=float))
    return sd * np.sqrt(2.0 * np.pi) * np.exp(0.5 * z * z)

def _pareto_cdf(x, shape, scale):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        tail = (scale / x) ** shape
    return np.where(x < scale, 0.0, 1.0 - tail)

def _pareto_quantile(u, shape, scale):
    with np.errstate(divide="ignore"):
        return scale * (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / shape)

def _pareto_qdens(u, shape, scale):
    return (scale / shape) * (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / shape - 1.0)

def _holder_for(qdens, alpha: float, beta: float) -> HolderInfo:
    # Lipschitz F^{-1} near interior quantiles: the constant is the largest
    # quantile density over the two neighborhoods, with a small safety factor
    width = 0.5 * min(alpha, beta, 1.0 - alpha - beta)
    lo_nb = (alpha - width, alpha + width)
    hi_nb = (1.0 - beta - width, 1.0 - beta + width)
    grid = np.concatenate([np.linspace(*lo_nb, 501), np.linspace(*hi_nb, 501)])
    c = float(np.max(qdens(grid))) * 1.05
    return HolderInfo(epsilon=1.0, constant=c, near_lower=lo_nb, near_upper=hi_nb)

def uniform_model(lo: float = 0.0, hi: float = 1.0, *,
                  alpha: float = 0.25, beta: float = 0.25) -> DistributionModel:
    if not hi > lo:
        raise ConfigError(f"uniform model needs hi > lo, got [{lo}, {hi}]")
    qd = partial(_uniform_qdens, lo=lo, hi=hi)
    return DistributionModel(
        name=f"uniform({lo:g},{hi:g})",
        cdf=partial(_uniform_cdf, lo=lo, hi=hi),
        quantile=partial(_uniform_quantile, lo=lo, hi=hi),
        quantile_density=qd,
        atoms=(),
        holder=_holder_for(qd, alpha, beta),
    )

def exponential_model(rate: float = 1.0, *,
                      alpha: float = 0.25, beta: float = 0.25) -> DistributionModel:
    if not rate > 0:
        raise ConfigError(f"exponential model needs rate > 0, got {rate}")
    qd = partial(_exponential_qdens, rate=rate)
    return DistributionModel(
        name=f"exponential({rate:g})",
        cdf=partial(_exponential_cdf, rate=rate),
        quantile=partial(_exponential_quantile, rate=rate),
        quantile_density=qd,
        atoms=(),
        holder=_holder_for(qd, alpha, beta),
        unbounded_high=True,
    )

def normal_model(mean: float = 0.0, sd: float = 1.0, *,
                 alpha: float = 0.25, beta: float = 0.25) -> DistributionModel:
    if not sd > 0:
        raise ConfigError(f"normal model needs sd > 0, got {sd}")
    qd = partial(_normal_qdens, mean=mean, sd=sd)
    return DistributionModel(
        name=f"normal({mean:g},{sd:g})",
        cdf=partial(_normal_cdf, mean=mean, sd=sd),
        quantile=partial(_normal_quantile, mean=mean, sd=sd),
        quantile_density=qd,
        atoms=(),
        holder=_holder_for(qd, alpha, beta),
        unbounded_low=True,
        unbounded_high=True,
    )

def pareto_model(shape: float = 3.0, scale: float = 1.0, *,
                 alpha: float = 0.25, beta: float = 0.25) -> DistributionModel:
    if not (shape > 0 and scale > 0):
        raise ConfigError(f"pareto model needs shape > 0 and scale > 0, got {shape}, {scale}")
    qd = partial(_pareto_qdens, shape=shape, scale=scale)
    return DistributionModel(
        name=f"pareto({shape:g},{scale:g})",
        cdf=partial(_pareto_cdf, shape=shape, scale=scale),
        quantile=partial(_pareto_quantile, shape=shape, scale=scale),
        quantile_density=qd,
        atoms=(),
        holder=_holder_for(qd, alpha, beta),
        unbounded_high=True,
    )

MODEL_BUILDERS = {
    "uniform": (uniform_model, ("lo", "hi")),
    "exponential": (exponential_model, ("rate",)),
    "normal": (normal_model, ("mean", "sd")),
    "pareto": (pareto_model, ("shape", "scale")),
}

def make_model(name: str, params: dict | None = None, *,
               alpha: float = 0.25, beta: float = 0.25) -> DistributionModel:
    """Build a catalog model by identifier with keyword parameters."""
    params = dict(params or {})
    try:
        builder, allowed = MODEL_BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown model '{name}'; known: {sorted(MODEL_BUILDERS)}") from None
    unknown = set(params) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for model '{name}'")
    return builder(**{k: float(v) for k, v in params.items()}, alpha=alpha, beta=beta)
