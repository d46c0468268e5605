"""Deterministic, parallel Monte Carlo experiments.

Every replicate owns a counter-addressed random stream derived from
(master_seed, replicate_index) alone, so results are a pure function of the
configuration: worker count, chunk boundaries, and scheduling order cannot
change a single byte of output.  Per-chunk results are merged in replicate
order; tallies are integers and moment accumulation uses exact summation.
"""
from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .bounds import deviation_range, normal_tail
from .distributions import _MIN_UNIFORM, DistributionModel, SampleFrame
from .errors import ConfigError
from .lstat import asymptotic_sigma2, centering_mu
from .weights import TrimSpec, WeightFunction, WeightScheme, cell_integrals, generated_weights
from .winsor import DecompositionContext, approx_centering, extended_weight, WinsorizedModel

#: normal quantile at 0.995; the 99% binomial interval half-width parameter
Z99 = float(special.ndtri(0.995))

#: rows whose expected tail count falls below this are flagged as unreliable
MIN_EXPECTED_COUNT = 20.0

HIST_LO, HIST_HI, HIST_BINS = -10.0, 10.0, 200

STATISTIC_KINDS = ("trimmed", "winsorized", "normal-draw")


def seed_stream(master_seed: int, replicate_index: int) -> np.random.Generator:
    """Counter-addressed stream for one replicate.

    Philox4x64-10 keyed by the master seed; the replicate index selects a
    disjoint 2^128-draw block of the counter space, so streams never overlap
    and depend only on (master_seed, replicate_index).
    """
    if not 0 <= master_seed < 2 ** 64:
        raise ConfigError(f"master seed must be a 64-bit unsigned integer, got {master_seed}")
    if not 0 <= replicate_index < 2 ** 64:
        raise ConfigError(f"replicate index must be a 64-bit unsigned integer, got {replicate_index}")
    bitgen = np.random.Philox(key=master_seed, counter=[0, 0, replicate_index, 0])
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class SimulationConfig:
    """Everything a simulation needs; outputs depend on nothing else.

    ``workers`` and ``chunk_size`` affect speed only.  ``statistic`` selects
    the replicate-level value: the trimmed L-statistic, its Winsorized
    approximation, or a tautological standard-normal draw used to calibrate
    the tally machinery.  ``coefficient_offset`` shifts every explicit
    coefficient by offset/n away from the cell-generated ones (0 keeps the
    generated weights and makes the weight perturbation identically zero).
    """
    model: DistributionModel
    weight: WeightFunction
    alpha: float = 0.25
    beta: float = 0.25
    epsilon: float = 1.0
    trim_rule: str = "exact"
    rate_constant: float = 0.0
    n: int = 2000
    n_ladder: tuple[int, ...] = (250, 500, 1000, 2000)
    replicates: int = 100_000
    master_seed: int = 0
    x_grid: Optional[tuple[float, ...]] = None
    big_a: float = 3.0
    a_n: Optional[float] = None
    workers: int = 1
    statistic: str = "trimmed"
    chunk_size: int = 4096
    coefficient_offset: float = 0.0

    def __post_init__(self):
        if self.statistic not in STATISTIC_KINDS:
            raise ConfigError(f"unknown statistic '{self.statistic}'; known: {STATISTIC_KINDS}")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be positive, got {self.replicates}")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        if self.chunk_size < 1:
            raise ConfigError(f"chunk size must be positive, got {self.chunk_size}")

    def trim_spec(self, n: int) -> TrimSpec:
        return TrimSpec.from_rule(n, self.alpha, self.beta, self.epsilon,
                                  self.trim_rule, self.rate_constant)


@dataclass(frozen=True)
class TailRow:
    x: float
    tail: str  # "upper": P{T > x} vs 1-Phi(x); "lower": P{T <= -x} vs Phi(-x)
    count: int
    p_hat: float
    ref_prob: float
    ratio: float
    ci_lo: float
    ci_hi: float
    low_mass: bool


@dataclass(frozen=True)
class TailTable:
    rows: tuple[TailRow, ...]
    n: int
    k_n: int
    m_n: int
    replicates: int
    master_seed: int
    statistic: str
    model_name: str
    weight_name: str
    mu: float
    sigma: float
    sigma2: float
    x_grid: tuple[float, ...]
    histogram: tuple[int, ...]  # underflow, HIST_BINS interior bins, overflow
    runtime_s: float
    config_hash: str = ""


@dataclass(frozen=True)
class VarianceRow:
    n: int
    replicates: int
    var_hat: float
    ratio: float
    se: float
    bound: float


@dataclass(frozen=True)
class VarianceLadder:
    rows: tuple[VarianceRow, ...]
    sigma2: float
    envelope_c: float
    statistic: str
    master_seed: int
    runtime_s: float


@dataclass(frozen=True)
class RemainderRow:
    n: int
    replicates: int
    mean_n_rn2: float
    mean_n_vn2: float


@dataclass(frozen=True)
class RemainderLadder:
    rows: tuple[RemainderRow, ...]
    slope: float
    slope_se: float
    master_seed: int
    runtime_s: float


def wilson_interval(count: int, total: int, z: float = Z99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    p = count / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (p + z2 / (2.0 * total)) / denom
    half = z * math.sqrt(p * (1.0 - p) / total + z2 / (4.0 * total * total)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _chunks(total: int, size: int) -> list[tuple[int, int]]:
    return [(s, min(s + size, total)) for s in range(0, total, size)]


def _map_ordered(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _chunk_size_for(cfg: SimulationConfig, total: int) -> int:
    # keep every worker busy on several chunks; boundaries cannot change results
    balanced = math.ceil(total / (8 * max(cfg.workers, 1)))
    return min(cfg.chunk_size, max(64, balanced))


@dataclass(frozen=True)
class _StatPlan:
    """Resolved per-n constants for evaluating the replicate statistic."""
    kind: str
    n: int
    k: int
    m: int
    coeffs: np.ndarray
    center: float
    sigma: float
    model: DistributionModel
    xi_alpha: float
    xi_upper: float
    master_seed: int


def _make_plan(cfg: SimulationConfig, n: int, sigma: float) -> _StatPlan:
    spec = cfg.trim_spec(n)
    J = cfg.weight
    if cfg.statistic == "winsorized":
        J_w = extended_weight(J, cfg.alpha, cfg.beta)
        wmodel = WinsorizedModel.from_model(cfg.model, cfg.alpha, cfg.beta)
        edges = np.arange(n + 1) / n
        coeffs = n * cell_integrals(J_w, edges)
        center = approx_centering(J_w, wmodel)
        k = m = 0
        xi_a, xi_b = wmodel.xi_alpha, wmodel.xi_upper
    else:
        coeffs = generated_weights(J, spec)
        center = centering_mu(J, cfg.model, spec)
        k, m = spec.k_n, spec.m_n
        xi_a = xi_b = 0.0
    return _StatPlan(kind=cfg.statistic, n=n, k=k, m=m, coeffs=coeffs, center=center,
                     sigma=sigma, model=cfg.model, xi_alpha=xi_a, xi_upper=xi_b,
                     master_seed=cfg.master_seed)


def _normalized_batch(plan: _StatPlan, start: int, end: int) -> np.ndarray:
    """Normalized statistic values for replicates [start, end)."""
    rows = end - start
    n = plan.n
    if plan.kind == "normal-draw":
        raw = np.empty(rows)
        for i, rep in enumerate(range(start, end)):
            z = seed_stream(plan.master_seed, rep).standard_normal()
            raw[i] = plan.center + plan.sigma * z / math.sqrt(n)
    else:
        u = np.empty((rows, n))
        for i, rep in enumerate(range(start, end)):
            u[i] = seed_stream(plan.master_seed, rep).random(n)
        np.maximum(u, _MIN_UNIFORM, out=u)
        x = np.asarray(plan.model.quantile(u), dtype=float)
        if plan.kind == "winsorized":
            np.clip(x, plan.xi_alpha, plan.xi_upper, out=x)
        x.sort(axis=1)
        raw = np.einsum("ij,j->i", x[:, plan.k:n - plan.m], plan.coeffs) / n
    return math.sqrt(n) * (raw - plan.center) / plan.sigma


def _tail_chunk(task) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    plan, start, end, grid = task
    t = _normalized_batch(plan, start, end)
    counts_u = np.array([(t > xv).sum() for xv in grid], dtype=np.int64)
    counts_l = np.array([(t <= -xv).sum() for xv in grid], dtype=np.int64)
    interior, _ = np.histogram(t, bins=HIST_BINS, range=(HIST_LO, HIST_HI))
    hist = np.empty(HIST_BINS + 2, dtype=np.int64)
    hist[0] = (t < HIST_LO).sum()
    hist[1:-1] = interior
    hist[-1] = (t >= HIST_HI).sum()
    return counts_u, counts_l, hist


def _resolve_grid(cfg: SimulationConfig, n: int) -> tuple[float, ...]:
    rng = deviation_range(n, cfg.epsilon, cfg.a_n, cfg.big_a)
    if cfg.x_grid is None:
        grid = tuple(x for x in (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0) if x <= rng.upper + 1e-12)
        return grid if grid else (0.0,)
    grid = tuple(float(x) for x in cfg.x_grid)
    if min(grid) < rng.lower - 1e-12 or max(grid) > rng.upper + 1e-12:
        raise ConfigError(
            f"x grid must stay inside the deviation range [{rng.lower:g}, {rng.upper:g}], "
            f"got [{min(grid):g}, {max(grid):g}]")
    return tuple(sorted(grid))


def simulate_tail_table(cfg: SimulationConfig) -> TailTable:
    """Estimate both tails of the normalized statistic on an x grid."""
    t0 = time.perf_counter()
    n = cfg.n
    spec = cfg.trim_spec(n)
    if cfg.replicates < 10_000:
        warnings.warn(f"tail tables want >= 10000 replicates, got {cfg.replicates}",
                      stacklevel=2)
    sigma2 = asymptotic_sigma2(cfg.weight, cfg.model, cfg.alpha, cfg.beta)
    sigma = math.sqrt(sigma2)
    plan = _make_plan(cfg, n, sigma)
    grid = _resolve_grid(cfg, n)
    tasks = [(plan, s, e, grid) for s, e in _chunks(cfg.replicates, _chunk_size_for(cfg, cfg.replicates))]
    parts = _map_ordered(_tail_chunk, tasks, cfg.workers)
    counts_u = np.sum([p[0] for p in parts], axis=0)
    counts_l = np.sum([p[1] for p in parts], axis=0)
    hist = np.sum([p[2] for p in parts], axis=0)
    rows = []
    R = cfg.replicates
    for j, xv in enumerate(grid):
        for tail, count, ref in (("upper", int(counts_u[j]), float(normal_tail(xv))),
                                 ("lower", int(counts_l[j]), float(normal_tail(xv)))):
            p_hat = count / R
            lo, hi = wilson_interval(count, R)
            rows.append(TailRow(
                x=xv, tail=tail, count=count, p_hat=p_hat, ref_prob=ref,
                ratio=p_hat / ref, ci_lo=lo / ref, ci_hi=hi / ref,
                low_mass=R * ref < MIN_EXPECTED_COUNT))
    rows.sort(key=lambda r: (r.x, r.tail))
    return TailTable(
        rows=tuple(rows), n=n, k_n=spec.k_n, m_n=spec.m_n, replicates=R,
        master_seed=cfg.master_seed, statistic=cfg.statistic,
        model_name=cfg.model.name, weight_name=cfg.weight.name,
        mu=plan.center, sigma=sigma, sigma2=sigma2, x_grid=grid,
        histogram=tuple(int(c) for c in hist), runtime_s=time.perf_counter() - t0)


def _value_chunk(task) -> np.ndarray:
    plan, start, end = task
    return _normalized_batch(plan, start, end)


def _variance_with_jackknife(t: np.ndarray) -> tuple[float, float]:
    """Unbiased sample variance and its delete-one jackknife standard error."""
    r = t.size
    mean = math.fsum(t) / r
    e = t - mean
    s2 = math.fsum(e * e)
    var = s2 / (r - 1)
    leave_one = (s2 - (r / (r - 1)) * e * e) / (r - 2)
    lo_mean = math.fsum(leave_one) / r
    dev = leave_one - lo_mean
    se = math.sqrt((r - 1) / r * math.fsum(dev * dev))
    return var, se


def variance_ratio(cfg: SimulationConfig) -> VarianceLadder:
    """n * Var(statistic) / sigma^2 along the sample-size ladder."""
    t0 = time.perf_counter()
    if cfg.replicates < 3:
        raise ConfigError("variance estimation needs at least 3 replicates")
    sigma2 = asymptotic_sigma2(cfg.weight, cfg.model, cfg.alpha, cfg.beta)
    sigma = math.sqrt(sigma2)
    raw_rows = []
    for n in cfg.n_ladder:
        plan = _make_plan(cfg, n, sigma)
        tasks = [(plan, s, e) for s, e in _chunks(cfg.replicates, _chunk_size_for(cfg, cfg.replicates))]
        t = np.concatenate(_map_ordered(_value_chunk, tasks, cfg.workers))
        # normalized values have variance sigma^2 * ratio / sigma^2 = ratio
        var_t, se_t = _variance_with_jackknife(t)
        var_hat = var_t * sigma2 / n
        raw_rows.append((n, var_hat, var_t, se_t))
    exponent = -cfg.epsilon / (2.0 + cfg.epsilon)
    xs = np.array([n ** exponent for n, *_ in raw_rows])
    ys = np.array([abs(ratio - 1.0) for _, _, ratio, _ in raw_rows])
    envelope_c = float(np.dot(xs, ys) / np.dot(xs, xs)) if np.dot(xs, xs) > 0 else 0.0
    rows = tuple(
        VarianceRow(n=n, replicates=cfg.replicates, var_hat=var_hat, ratio=ratio,
                    se=se, bound=envelope_c * n ** exponent)
        for (n, var_hat, ratio, se) in raw_rows)
    return VarianceLadder(rows=rows, sigma2=sigma2, envelope_c=envelope_c,
                          statistic=cfg.statistic, master_seed=cfg.master_seed,
                          runtime_s=time.perf_counter() - t0)


def _remainder_chunk(task) -> tuple[np.ndarray, np.ndarray]:
    ctx, start, end, seed = task
    n = ctx.spec.n
    rn = np.empty(end - start)
    vn = np.empty(end - start)
    for i, rep in enumerate(range(start, end)):
        g = seed_stream(seed, rep)
        frame = SampleFrame(np.sort(ctx.model.sample(g, n)))
        rep_out = ctx.evaluate(frame)
        rn[i] = rep_out.Rn
        vn[i] = rep_out.Vn
    return rn, vn


def remainder_scaling(cfg: SimulationConfig) -> RemainderLadder:
    """E[n R_n^2] and E[n V_n^2] along the ladder, with the log-log slope of the former."""
    t0 = time.perf_counter()
    rows = []
    for n in cfg.n_ladder:
        spec = cfg.trim_spec(n)
        if cfg.coefficient_offset != 0.0:
            c0 = generated_weights(cfg.weight, spec)
            scheme = WeightScheme.explicit(c0 + cfg.coefficient_offset / n, cfg.weight)
        else:
            c0 = generated_weights(cfg.weight, spec)
            scheme = WeightScheme.explicit(c0.copy(), cfg.weight)
        ctx = DecompositionContext(cfg.model, scheme, spec)
        tasks = [(ctx, s, e, cfg.master_seed)
                 for s, e in _chunks(cfg.replicates, _chunk_size_for(cfg, cfg.replicates))]
        parts = _map_ordered(_remainder_chunk, tasks, cfg.workers)
        rn = np.concatenate([p[0] for p in parts])
        vn = np.concatenate([p[1] for p in parts])
        rows.append(RemainderRow(
            n=n, replicates=cfg.replicates,
            mean_n_rn2=n * math.fsum(rn * rn) / rn.size,
            mean_n_vn2=n * math.fsum(vn * vn) / vn.size))
    slope, slope_se = _loglog_slope([(r.n, r.mean_n_rn2) for r in rows])
    return RemainderLadder(rows=tuple(rows), slope=slope, slope_se=slope_se,
                           master_seed=cfg.master_seed, runtime_s=time.perf_counter() - t0)


def _loglog_slope(points: list[tuple[int, float]]) -> tuple[float, float]:
    live = [(n, y) for n, y in points if y > 0.0]
    if len(live) < 2:
        return math.nan, math.nan
    lx = np.log([n for n, _ in live])
    ly = np.log([y for _, y in live])
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    resid = ly - (ly.mean() + slope * (lx - lx.mean()))
    dof = len(live) - 2
    se = math.sqrt(float(np.sum(resid ** 2)) / dof / sxx) if dof > 0 else math.nan
    return slope, se
