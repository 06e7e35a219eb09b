import math

import numpy as np
import pytest

from cavreg import ConfigurationError, fit_linear, fit_saturating_exponential


def test_fit_linear_exact():
    xs = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    fit = fit_linear(xs, 2.0 * xs + 1.0)
    assert fit.intercept == pytest.approx(1.0, abs=1e-12)
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.slope_stderr == pytest.approx(0.0, abs=1e-9)


def test_fit_linear_validation():
    with pytest.raises(ConfigurationError):
        fit_linear([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ConfigurationError):
        fit_linear([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


def test_fit_linear_noise_recovery(rng):
    xs = np.arange(50, dtype=float)
    ys = 0.5 + 0.03 * xs + rng.normal(0, 0.05, size=50)
    fit = fit_linear(xs, ys)
    assert abs(fit.slope - 0.03) < 4 * fit.slope_stderr
    assert abs(fit.intercept - 0.5) < 4 * fit.intercept_stderr


def test_satexp_exact_recovery():
    ts = np.linspace(5.0, 600.0, 40)
    ps = 0.5 * (1 - np.exp(-ts / 125.0))
    fit = fit_saturating_exponential(ts, ps)
    assert fit.converged
    assert fit.p_inf == pytest.approx(0.5, rel=1e-6)
    assert fit.tau == pytest.approx(125.0, rel=1e-6)


def test_satexp_recovery_with_cap():
    ts = np.linspace(5.0, 600.0, 40)
    ps = 0.4 * (1 - np.exp(-ts / 80.0))
    fit = fit_saturating_exponential(ts, ps, p_inf_max=0.5)
    assert fit.p_inf == pytest.approx(0.4, rel=1e-6)
    assert fit.tau == pytest.approx(80.0, rel=1e-6)


def test_satexp_constant_zero_flagged():
    ts = np.linspace(1.0, 10.0, 8)
    fit = fit_saturating_exponential(ts, np.zeros(8))
    assert not fit.converged
    assert fit.p_inf == 0.0
    assert math.isnan(fit.tau)
    assert "unidentifiable" in fit.note


def test_satexp_validation():
    with pytest.raises(ConfigurationError):
        fit_saturating_exponential([1.0, 2.0, 3.0], [0.1, 0.2, 0.3])
    with pytest.raises(ConfigurationError):
        fit_saturating_exponential([1, 2, 3, 4, 5], [0.1, 0.2, 0.3, 0.4, 1.4])
    with pytest.raises(ConfigurationError):
        fit_saturating_exponential([0, 1, 2, 3, 4], [0.1, 0.2, 0.3, 0.4, 0.5])


def test_satexp_noise_recovery(rng):
    ts = np.linspace(10.0, 800.0, 30)
    truth = 0.5 * (1 - np.exp(-ts / 150.0))
    ps = np.clip(truth + rng.normal(0, 0.005, size=30), 0, 1)
    fit = fit_saturating_exponential(ts, ps, p_inf_max=0.5)
    assert abs(fit.tau - 150.0) / 150.0 < 0.1
    assert fit.converged


def test_satexp_linear_data_pins_the_amplitude_cap():
    # data still rising linearly: the amplitude runs to its bound and the
    # note says so; plateau-level confidence is judged by logical_lifetime
    ts = np.linspace(1.0, 20.0, 10)
    ps = 0.001 * ts
    fit = fit_saturating_exponential(ts, ps)
    assert fit.p_inf == 1.0
    assert "upper bound" in fit.note
