"""Winsorization and the exact decomposition identity."""
import math

import numpy as np
import pytest

from trimtail import (ConfigError, SampleFrame, TrimSpec, WeightScheme, WinsorizedModel,
                      approx_centering, approx_lstat, asymptotic_sigma2, clamp_counts,
                      constant_weight, decomposition_report, exponential_model,
                      extended_weight, linear_weight, normal_model, pareto_model,
                      quadratic_weight, remainder_r1, remainder_r2, seed_stream,
                      uniform_model, weight_perturbation_vn, winsorize)
from trimtail.distributions import DistributionModel
from trimtail.winsor import DecompositionContext

from helpers import (ALL_CASES, engineered_case_sample, mu_exponential,
                     mu_winsor_exponential, quad_step_integral)


from hypothesis import given, settings
from hypothesis import strategies as st


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
       st.floats(-100, 100), st.floats(0, 200))
def test_winsorize_properties(values, xi_a, width):
    xi_b = xi_a + width
    out = winsorize(values, xi_a, xi_b)
    assert np.all((out >= xi_a) & (out <= xi_b))
    # order-preserving: comparisons never flip
    v = np.asarray(values)
    assert np.all(np.sign(np.diff(out)) * np.sign(np.diff(v)) >= 0)
    # idempotent
    assert np.array_equal(winsorize(out, xi_a, xi_b), out)


def test_winsorize_clamps_and_preserves_order():
    out = winsorize([0.1, 0.5, 0.9], 0.25, 0.75)
    assert np.array_equal(out, [0.25, 0.5, 0.75])
    inside = np.array([0.3, 0.7, 0.4])
    assert np.array_equal(winsorize(inside, 0.25, 0.75), inside)
    assert winsorize([0.25], 0.25, 0.75)[0] == 0.25
    with pytest.raises(ConfigError):
        winsorize([1.0], 0.8, 0.2)


def test_winsorized_range_invariant():
    model = pareto_model()
    wmodel = WinsorizedModel.from_model(model, 0.25, 0.25)
    x = model.sample(seed_stream(2, 0), 500)
    w = winsorize(x, wmodel.xi_alpha, wmodel.xi_upper)
    assert np.all((w >= wmodel.xi_alpha) & (w <= wmodel.xi_upper))


def test_winsorized_quantile_clamps_base_inverse():
    wmodel = WinsorizedModel.from_model(exponential_model(), 0.25, 0.25)
    grid = np.linspace(0.26, 0.75, 50)
    assert np.allclose(wmodel.quantile(grid),
                       exponential_model().quantile(grid), atol=0)
    assert wmodel.quantile(np.array([0.01]))[0] == wmodel.xi_alpha
    assert wmodel.quantile(np.array([0.999]))[0] == wmodel.xi_upper


def test_approx_lstat_unit_weights_is_winsorized_mean():
    J_w = extended_weight(constant_weight(), 0.25, 0.25)
    x = np.sort(seed_stream(3, 1).random(40))
    w = winsorize(x, 0.25, 0.75)
    frame = SampleFrame(np.sort(w))
    assert approx_lstat(frame, J_w) == pytest.approx(w.mean(), abs=1e-14)


def test_approx_lstat_constant_sample():
    J_w = extended_weight(linear_weight(), 0.25, 0.25)
    frame = SampleFrame(np.full(30, 0.5))
    total = quad_step_integral(J_w, frame.values, 0.0, 1.0)
    assert approx_lstat(frame, J_w) == pytest.approx(total, abs=1e-12)
    # for a constant sample the value is c * integral of J_w
    from scipy import integrate
    jw_int, _ = integrate.quad(lambda u: float(J_w(u)), 0, 1, points=[0.25, 0.75], limit=200)
    assert approx_lstat(frame, J_w) == pytest.approx(0.5 * jw_int, abs=1e-12)


def test_approx_lstat_matches_step_integral_oracle():
    J_w = extended_weight(linear_weight(0.3, 0.9), 0.25, 0.25)
    x = exponential_model().sample(seed_stream(8, 5), 35)
    w = np.sort(winsorize(x, 0.2876820724517809, 1.3862943611198906))
    frame = SampleFrame(w)
    oracle = quad_step_integral(J_w, frame.values, 0.0, 1.0)
    assert approx_lstat(frame, J_w) == pytest.approx(oracle, abs=1e-12)


def test_approx_centering_values():
    J_w = extended_weight(constant_weight(), 0.25, 0.25)
    assert approx_centering(J_w, WinsorizedModel.from_model(uniform_model(), 0.25, 0.25)) \
        == pytest.approx(0.5, abs=1e-12)
    assert approx_centering(J_w, WinsorizedModel.from_model(exponential_model(), 0.25, 0.25)) \
        == pytest.approx(mu_winsor_exponential(), abs=1e-10)
    assert mu_winsor_exponential() == pytest.approx(0.7876820724517809, abs=1e-15)
    J_wu = extended_weight(linear_weight(), 0.25, 0.25)
    piecewise = 0.25 * 0.25 * 0.25 + (0.75 ** 3 - 0.25 ** 3) / 3 + 0.75 * 0.25 * 0.75
    assert piecewise == pytest.approx(7 / 24, abs=1e-15)
    assert approx_centering(J_wu, WinsorizedModel.from_model(uniform_model(), 0.25, 0.25)) \
        == pytest.approx(piecewise, abs=1e-12)


def _uniform_setup(n, seed=0, alpha=0.25, beta=0.25, rule="exact", rate=0.0):
    model = uniform_model()
    spec = TrimSpec.from_rule(n, alpha, beta, rule=rule, rate_constant=rate)
    x = np.sort(model.sample(seed_stream(seed, 0), n))
    return model, spec, SampleFrame(x)


def test_remainder_r1_vanishes_at_exact_fractions():
    model, spec, _ = _uniform_setup(20)
    wmodel = WinsorizedModel.from_model(model, 0.25, 0.25)
    J_w = extended_weight(constant_weight(), 0.25, 0.25)
    # engineer counts N_alpha = 5, N_upper = 15 at n=20
    vals = np.sort(np.concatenate([
        np.linspace(0.01, 0.24, 5), np.linspace(0.26, 0.74, 10), np.linspace(0.76, 0.99, 5)]))
    frame = SampleFrame(vals)
    assert clamp_counts(frame, wmodel) == (5, 15)
    assert remainder_r1(frame, J_w, wmodel, spec) == 0.0


def test_remainder_r1_against_identity_oracle():
    model, spec, frame = _uniform_setup(40, seed=12)
    J = linear_weight()
    scheme = WeightScheme.generated(J)
    rep = decomposition_report(frame, scheme, model, spec)
    recovered_rn = (rep.L0 - rep.mu_n) - (rep.Ltilde - rep.mu_Ltilde)
    assert rep.R1 == pytest.approx(recovered_rn - rep.R2, abs=1e-10)


def test_remainder_r2_vanishes_when_fractions_match():
    model, spec, frame = _uniform_setup(20)
    assert spec.alpha_n == spec.alpha and spec.beta_n == spec.beta
    assert remainder_r2(frame, constant_weight(), model, spec) == 0.0


def test_remainder_r2_zero_on_engineered_plateau():
    # the model inverse is constant on both integration ranges and the sample
    # step function reproduces it exactly, so the integrand vanishes
    plateau = DistributionModel(
        name="plateau",
        cdf=lambda x: np.asarray(x, dtype=float),
        quantile=lambda u: np.where(np.asarray(u, dtype=float) <= 0.45, 0.5, 2.0),
        quantile_density=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        atoms=((0.45, 1.5),))
    n = 20
    spec = TrimSpec(n=n, k_n=4, m_n=4, alpha=0.25, beta=0.25, rate_constant=1.0)
    vals = np.sort(np.concatenate([np.full(9, 0.5), np.full(11, 2.0)]))  # jump at u=0.45
    frame = SampleFrame(vals)
    assert remainder_r2(frame, constant_weight(), plateau, spec) == 0.0


def test_remainder_r2_matches_fine_riemann_oracle():
    model = exponential_model()
    n = 60
    spec = TrimSpec(n=n, k_n=12, m_n=12, alpha=0.25, beta=0.25, rate_constant=1.0)
    assert spec.alpha_n == 0.2
    frame = SampleFrame(np.sort(model.sample(seed_stream(60, 3), n)))
    J = quadratic_weight(0.5, 0.2, 0.4)
    val = remainder_r2(frame, J, model, spec)

    def riemann(a, b):
        if a == b:
            return 0.0
        sign = 1.0 if a <= b else -1.0
        lo, hi = min(a, b), max(a, b)
        u = np.linspace(lo, hi, 2_000_001)
        mids = 0.5 * (u[:-1] + u[1:])
        ranks = np.minimum(np.ceil(n * mids).astype(int), n)
        fn = frame.values[ranks - 1]
        f = J(mids) * (fn - np.asarray(model.quantile(mids)))
        return sign * float(np.sum(f) * (hi - lo) / (u.size - 1))

    oracle = riemann(spec.alpha_n, spec.alpha) - riemann(spec.upper_n, 1 - spec.beta)
    assert val == pytest.approx(oracle, abs=1e-8)


def test_weight_perturbation_cases():
    model, spec, frame = _uniform_setup(30, seed=4)
    from trimtail import generated_weights
    J = linear_weight()
    c0 = generated_weights(J, spec)
    assert weight_perturbation_vn(frame, WeightScheme.explicit(c0.copy(), J), spec) == 0.0
    delta = 0.03
    shifted = WeightScheme.explicit(c0 + delta, J)
    retained = frame.values[spec.k_n:spec.n - spec.m_n]
    assert weight_perturbation_vn(frame, shifted, spec) == pytest.approx(
        delta * retained.sum() / spec.n, abs=1e-14)
    rng = np.random.default_rng(9)
    noise = rng.uniform(-1, 1, c0.size) / spec.n
    noisy = WeightScheme.explicit(c0 + noise, J)
    direct = math.fsum((c0 + noise) * retained) / spec.n - math.fsum(c0 * retained) / spec.n
    assert weight_perturbation_vn(frame, noisy, spec) == pytest.approx(direct, abs=1e-14)
    with pytest.raises(ConfigError):
        weight_perturbation_vn(frame, WeightScheme.generated(J), spec)


def test_decomposition_uniform_passes_at_rounding_level():
    model, spec, frame = _uniform_setup(20, seed=7)
    rep = decomposition_report(frame, WeightScheme.generated(constant_weight()), model, spec)
    assert rep.passed and rep.residual <= 1e-12
    assert rep.Rn == rep.R1 + rep.R2


def test_decomposition_handworked_golden():
    # n=5, k=m=1, unit weights, uniform model, alpha=beta=0.2:
    # all fields follow by hand from the sample below
    model = uniform_model(alpha=0.2, beta=0.2)
    spec = TrimSpec(n=5, k_n=1, m_n=1, alpha=0.2, beta=0.2, rate_constant=1.0)
    frame = SampleFrame(np.array([0.1, 0.15, 0.5, 0.7, 0.9]))
    rep = decomposition_report(frame, WeightScheme.generated(constant_weight()), model, spec)
    assert rep.L0 == pytest.approx(0.27, abs=1e-15)
    assert rep.mu_n == pytest.approx(0.3, abs=1e-12)
    assert rep.Ltilde == pytest.approx(0.48, abs=1e-15)
    assert rep.mu_Ltilde == pytest.approx(0.5, abs=1e-12)
    assert rep.N_alpha == 2 and rep.N_upper == 4
    assert rep.A_n == pytest.approx(0.4) and rep.B_n == pytest.approx(0.2)
    assert rep.R1 == pytest.approx(-0.01, abs=1e-13)
    assert rep.R2 == 0.0
    assert rep.Vn == 0.0
    assert rep.case == "2-2"
    assert rep.passed and rep.residual <= 1e-12


def test_decomposition_degenerate_constant_sample():
    model, spec, _ = _uniform_setup(20)
    frame = SampleFrame(np.full(20, 0.5))
    rep = decomposition_report(frame, WeightScheme.generated(linear_weight()), model, spec)
    assert rep.passed and rep.residual <= 1e-12


@pytest.mark.parametrize("case", ALL_CASES)
@pytest.mark.parametrize("model_factory", [uniform_model, exponential_model, pareto_model],
                         ids=["uniform", "exponential", "pareto"])
def test_identity_across_all_case_orderings(model_factory, case):
    model = model_factory()
    rng = np.random.default_rng(hash((case, model.name)) % 2 ** 32)
    spec = TrimSpec.from_rule(48, 0.25, 0.25, rule="rate", rate_constant=0.4)
    vals = engineered_case_sample(model, spec, case, rng)
    frame = SampleFrame(vals)
    rep = decomposition_report(frame, WeightScheme.generated(linear_weight(0.5, 1.0)),
                               model, spec)
    assert rep.case == case
    assert rep.passed, f"case {case}: residual {rep.residual:g} > {rep.tolerance:g}"


def test_identity_with_explicit_coefficients_includes_vn():
    model, spec, frame = _uniform_setup(37, seed=23, rule="rate", rate=0.5)
    from trimtail import generated_weights, trimmed_lstat
    J = quadratic_weight(1.0, -0.3, 0.6)
    c0 = generated_weights(J, spec)
    rng = np.random.default_rng(1)
    c = c0 + rng.uniform(-1, 1, c0.size) / spec.n
    scheme = WeightScheme.explicit(c, J)
    rep = decomposition_report(frame, scheme, model, spec)
    ln = trimmed_lstat(frame, scheme, spec)
    # L_n - mu_n = (Ltilde - mu_Ltilde) + Rn + Vn
    lhs = ln - rep.mu_n
    rhs = (rep.Ltilde - rep.mu_Ltilde) + rep.Rn + rep.Vn
    assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(lhs)))


def test_context_reuse_matches_one_shot_reports():
    model = normal_model()
    spec = TrimSpec.from_rule(64, 0.25, 0.25, rule="rate", rate_constant=0.3)
    scheme = WeightScheme.generated(linear_weight())
    ctx = DecompositionContext(model, scheme, spec)
    for i in range(3):
        frame = SampleFrame(np.sort(model.sample(seed_stream(99, i), 64)))
        a = ctx.evaluate(frame)
        b = decomposition_report(frame, scheme, model, spec)
        assert a == b


def test_variance_equality_smoke():
    # n Var(Ltilde) approaches the trimmed-statistic asymptotic variance
    model = uniform_model()
    alpha = beta = 0.25
    sigma2 = asymptotic_sigma2(constant_weight(), model, alpha, beta)
    J_w = extended_weight(constant_weight(), alpha, beta)
    n, reps = 500, 20_000
    rng = np.random.default_rng(123)
    w = winsorize(rng.random((reps, n)), 0.25, 0.75)
    vals = w.mean(axis=1)  # unit weights make Ltilde the Winsorized mean
    ratio = n * vals.var(ddof=1) / sigma2
    se = math.sqrt(2.0 / reps)
    assert abs(ratio - 1.0) < 4 * se
