import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavreg import (
    F1,
    F2,
    CavityParams,
    ConfigurationError,
    DetectorModel,
    PhotonModel,
    adaptive_reduction_factors,
    cooperativity,
    sample_adaptive_interval,
    sample_full_interval,
)
from cavreg.photons import expected_stop_index, sample_adaptive_bright_batch

from oracles import adaptive_stopping_enumeration


def test_cooperativity_default_parameters():
    # 2g0 = 1.1 MHz, kappa = 0.10 MHz, gamma = 6.0 MHz
    assert cooperativity(CavityParams()) == pytest.approx(2.0166666, abs=1e-6)


def test_cooperativity_limits_and_scaling():
    tiny = cooperativity(CavityParams(g0_mhz=1e-9))
    assert tiny == pytest.approx(0.0, abs=1e-12)
    base = cooperativity(CavityParams(g0_mhz=0.55))
    doubled = cooperativity(CavityParams(g0_mhz=1.10))
    assert doubled == pytest.approx(4.0 * base)


def test_invalid_models_rejected():
    with pytest.raises(ConfigurationError):
        CavityParams(kappa_mhz=0.0)
    with pytest.raises(ConfigurationError):
        DetectorModel(quantum_efficiency=0.0)
    with pytest.raises(ConfigurationError):
        PhotonModel(threshold=0)
    with pytest.raises(ConfigurationError):
        PhotonModel(full_interval_us=200.0, sub_interval_us=30.0)


def test_full_interval_means():
    model = PhotonModel()
    assert model.mean_full(False) == pytest.approx(0.024)  # 2 * 60/s * 200 us
    assert model.mean_full(True) == pytest.approx(15.024)


def test_full_interval_sampling_means(rng):
    model = PhotonModel()
    n = 100_000
    dark = np.array([sample_full_interval(F1, model, rng).counts for _ in range(2000)])
    assert abs(dark.mean() - 0.024) < 4 * math.sqrt(0.024 / 2000)
    bright = rng.poisson(model.mean_full(True), size=n)
    assert abs(bright.mean() - 15.024) < 4 * math.sqrt(15.024 / n)


def test_vacant_site_looks_like_dark_atom(rng):
    model = PhotonModel()
    out = sample_full_interval(None, model, rng)
    assert out.duration_us == model.full_interval_us
    # identical Poisson mean as a dark atom by construction
    assert model.mean_full(False) == pytest.approx(0.024)


def test_threshold_consistency_full_and_adaptive(rng):
    model = PhotonModel()
    for state in (F1, F2, None):
        for _ in range(300):
            for out in (
                sample_full_interval(state, model, rng),
                sample_adaptive_interval(state, model, rng),
            ):
                assert out.bright == (out.counts >= model.threshold)


class _ScriptedRng:
    """Duck-typed stand-in returning a fixed Poisson sequence."""

    def __init__(self, values):
        self._values = list(values)

    def poisson(self, lam):
        return self._values.pop(0)


def test_adaptive_stops_at_first_crossing():
    model = PhotonModel(threshold=1)
    out = sample_adaptive_interval(F2, model, _ScriptedRng([3]))
    assert (out.counts, out.duration_us, out.bright) == (3, 20.0, True)


def test_adaptive_runs_full_interval_when_below_threshold():
    model = PhotonModel()  # threshold 2, 10 sub-intervals
    out = sample_adaptive_interval(F1, model, _ScriptedRng([0] * 9 + [1]))
    assert (out.counts, out.duration_us, out.bright) == (1, 200.0, False)


def test_dark_adaptive_full_duration_probability(rng):
    model = PhotonModel()
    n = 20_000
    full_and_dark = 0
    for _ in range(n):
        out = sample_adaptive_interval(F1, model, rng)
        full_and_dark += out.duration_us == model.full_interval_us and not out.bright
    expected = 0.9997165667920991  # exp(-0.024) * (1 + 0.024)
    se = math.sqrt(expected * (1 - expected) / n)
    assert abs(full_and_dark / n - expected) < 4 * se


def test_adaptive_matches_enumeration_oracle(rng):
    model = PhotonModel()
    oracle = adaptive_stopping_enumeration(model.mean_full(True), 10, 2)
    assert oracle["expected_stop_index"] == pytest.approx(1.8396842602, abs=1e-9)
    assert oracle["expected_counts"] == pytest.approx(2.7639416325, abs=1e-9)
    # Wald identity on the oracle itself
    lam_sub = model.mean_full(True) / 10
    assert oracle["expected_counts"] == pytest.approx(
        lam_sub * oracle["expected_stop_index"], rel=1e-9
    )
    assert expected_stop_index(model) == pytest.approx(
        oracle["expected_stop_index"], rel=1e-12
    )

    counts, durations = sample_adaptive_bright_batch(model, 100_000, rng)
    se = counts.std(ddof=1) / math.sqrt(len(counts))
    assert abs(counts.mean() - oracle["expected_counts"]) < 4 * se
    se_d = durations.std(ddof=1) / math.sqrt(len(durations))
    expected_dur = oracle["expected_stop_index"] * 20.0
    assert abs(durations.mean() - expected_dur) < 4 * se_d


def test_scalar_and_batch_adaptive_agree(rng):
    model = PhotonModel()
    n = 30_000
    scalar = np.array(
        [sample_adaptive_interval(F2, model, rng).counts for _ in range(n)]
    )
    batch, _ = sample_adaptive_bright_batch(model, n, rng)
    se = math.sqrt(scalar.var(ddof=1) / n + batch.var(ddof=1) / n)
    assert abs(scalar.mean() - batch.mean()) < 4 * se


def test_reduction_factors_default(rng):
    model = PhotonModel()
    f = adaptive_reduction_factors(model, 100_000, rng)
    assert 5.0 < f["photon_factor"] < 5.9
    assert 5.0 < f["duration_factor"] < 5.9


def test_reduction_factors_trivial_limits(rng):
    # threshold far above the bright mean: never stops early
    never = adaptive_reduction_factors(PhotonModel(threshold=60), 20_000, rng)
    assert never["duration_factor"] == pytest.approx(1.0)
    assert never["photon_factor"] == pytest.approx(1.0, abs=0.01)
    # a single check is a full interval
    single = adaptive_reduction_factors(
        PhotonModel(sub_interval_us=200.0), 20_000, rng
    )
    assert single["duration_factor"] == pytest.approx(1.0)
    assert single["photon_factor"] == pytest.approx(1.0, abs=0.01)
    with pytest.raises(ConfigurationError):
        adaptive_reduction_factors(PhotonModel(), 100, rng)


def test_adaptive_dominance(rng):
    model = PhotonModel()
    n = 50_000
    counts, durations = sample_adaptive_bright_batch(model, n, rng)
    full = rng.poisson(model.mean_full(True), size=n)
    assert counts.mean() < full.mean()
    assert durations.mean() < model.full_interval_us


def test_adaptive_mode_at_threshold_and_gap_below(rng):
    model = PhotonModel()
    counts, durations = sample_adaptive_bright_batch(model, 50_000, rng)
    values, freqs = np.unique(counts, return_counts=True)
    assert values[np.argmax(freqs)] == model.threshold
    # stopped trials carry no mass below threshold
    stopped = durations < model.full_interval_us
    assert not np.any(counts[stopped] < model.threshold)


def test_full_interval_counts_are_poisson(rng):
    from scipy import stats

    model = PhotonModel()
    n = 100_000
    samples = np.array(
        [sample_full_interval(F2, model, rng).counts for _ in range(n)]
    )
    kmax = samples.max()
    observed = np.bincount(samples, minlength=kmax + 1).astype(float)
    expected = np.array(
        [stats.poisson.pmf(k, model.mean_full(True)) for k in range(kmax + 1)]
    )
    expected[-1] += 1.0 - expected.sum()  # fold the tail
    expected *= n
    # merge low-expectation bins so the chi-square approximation holds
    obs_m, exp_m = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            obs_m.append(acc_o)
            exp_m.append(acc_e)
            acc_o = acc_e = 0.0
    obs_m[-1] += acc_o
    exp_m[-1] += acc_e
    chi2, p = stats.chisquare(obs_m, exp_m)
    assert p > 0.01


@settings(max_examples=25, deadline=None)
@given(
    mean=st.floats(min_value=0.5, max_value=40.0),
    threshold=st.integers(min_value=1, max_value=5),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_threshold_consistency_property(mean, threshold, seed):
    rng = np.random.default_rng(seed)
    model = PhotonModel(bright_mean_full=mean, threshold=threshold)
    for state in (F2, F1):
        out = sample_adaptive_interval(state, model, rng)
        assert out.bright == (out.counts >= threshold)
        assert 0 < out.duration_us <= model.full_interval_us
