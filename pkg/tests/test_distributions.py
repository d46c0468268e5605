"""Distribution models, empirical inverses, and their Galois relations."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trimtail import (DomainError, SampleFrame, empirical_inverse, exponential_model,
                      make_model, normal_model, pareto_model, quantile_eval,
                      seed_stream, uniform_model)
from trimtail.errors import ConfigError

from helpers import bisect_quantile

ALL_MODELS = [uniform_model(), exponential_model(), normal_model(), pareto_model()]


def test_empirical_inverse_small_frames():
    frame = SampleFrame(np.array([1.0, 2.0, 3.0, 4.0]))
    assert empirical_inverse(frame, 0.5) == 2.0
    assert empirical_inverse(frame, 0.51) == 3.0
    assert empirical_inverse(SampleFrame(np.array([7.0])), 1.0) == 7.0


def test_empirical_inverse_left_continuous_at_jumps():
    frame = SampleFrame(np.arange(1.0, 11.0))
    for i in range(1, 10):
        u = i / 10
        assert empirical_inverse(frame, u) == float(i)
        assert empirical_inverse(frame, u + 1e-6) == float(i + 1)


def test_empirical_inverse_domain():
    frame = SampleFrame(np.array([1.0, 2.0]))
    for bad in (0.0, -0.1, 1.0 + 1e-9):
        with pytest.raises(DomainError):
            empirical_inverse(frame, bad)


def test_frame_validation():
    with pytest.raises(ConfigError):
        SampleFrame(np.array([2.0, 1.0]))
    with pytest.raises(ConfigError):
        SampleFrame(np.array([np.nan, 1.0]))
    with pytest.raises(ConfigError):
        SampleFrame(np.array([]))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=40),
       st.floats(1e-9, 1.0), st.floats(1e-9, 1.0))
def test_empirical_inverse_monotone(values, u, v):
    frame = SampleFrame.from_sample(values)
    lo, hi = min(u, v), max(u, v)
    assert empirical_inverse(frame, lo) <= empirical_inverse(frame, hi)


def test_quantile_eval_examples():
    assert quantile_eval(uniform_model(), 0.25) == 0.25
    assert quantile_eval(exponential_model(), 0.5) == pytest.approx(math.log(2), abs=1e-12)
    golden = bisect_quantile(lambda x: 0.5 * math.erfc(-x / math.sqrt(2)), 0.975)
    assert golden == pytest.approx(1.959963984540054, abs=1e-11)
    assert quantile_eval(normal_model(), 0.975) == pytest.approx(golden, abs=1e-10)


def test_quantile_eval_domain_and_sentinel():
    for bad in (0.0, -0.5, 1.1):
        with pytest.raises(DomainError):
            quantile_eval(uniform_model(), bad)
    assert quantile_eval(uniform_model(), 1.0) == 1.0
    for model in (exponential_model(), normal_model(), pareto_model()):
        assert math.isinf(quantile_eval(model, 1.0))


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_quantile_monotone_and_galois(model):
    grid = np.linspace(0.002, 0.998, 499)
    q = quantile_eval(model, grid)
    assert np.all(np.diff(q) >= 0)
    # cdf(quantile(u)) = u
    assert np.max(np.abs(np.asarray(model.cdf(q)) - grid)) < 1e-10
    # quantile(cdf(x)) <= x on an x grid
    xs = quantile_eval(model, np.linspace(0.05, 0.95, 51))
    back = quantile_eval(model, np.clip(np.asarray(model.cdf(xs)), 1e-12, 1.0))
    assert np.all(back <= xs + 1e-10)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_quantile_matches_infimum_definition(model):
    for u in (0.1, 0.25, 0.5, 0.9):
        oracle = bisect_quantile(lambda x: float(model.cdf(x)), u)
        assert quantile_eval(model, u) == pytest.approx(oracle, abs=1e-9)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_quantile_density_matches_finite_difference(model):
    grid = np.linspace(0.05, 0.95, 91)
    h = 1e-6
    fd = (quantile_eval(model, grid + h) - quantile_eval(model, grid - h)) / (2 * h)
    qd = np.asarray(model.quantile_density(grid))
    assert np.max(np.abs(qd - fd) / np.abs(qd)) < 1e-6


def test_sampler_is_deterministic_and_inverse_cdf():
    model = exponential_model()
    a = model.sample(seed_stream(9, 4), 256)
    b = model.sample(seed_stream(9, 4), 256)
    assert np.array_equal(a, b)
    u = seed_stream(9, 4).random(256)
    assert np.allclose(a, quantile_eval(model, np.maximum(u, 2 ** -53)))


def test_model_registry():
    m = make_model("pareto", {"shape": 3, "scale": 2})
    assert m.name == "pareto(3,2)"
    with pytest.raises(ConfigError):
        make_model("cauchy", {})
    with pytest.raises(ConfigError):
        make_model("uniform", {"rate": 1.0})


def test_holder_metadata_bounds_increments():
    model = exponential_model()
    info = model.holder
    assert info is not None and info.epsilon == 1.0
    for lo, hi in (info.near_lower, info.near_upper):
        grid = np.linspace(lo, hi, 400)
        q = quantile_eval(model, grid)
        meas = np.max(np.abs(np.diff(q)) / np.diff(grid))
        assert meas <= info.constant
