"""Site-selective readout protocol: single-site measurements and sequential
array readout with hiding.

A site measurement is a pair of intervals: the first reads the hyperfine
state (F=2 bright, F=1 dark), the second detects occupation with a repumper
on (any present atom is bright).  Misclassification and loss probabilities
are configuration inputs taken from single-atom calibration at a given
tweezer depth / probe-cavity detuning; they are not derived from atomic
physics here.

During a sequential array readout all atoms except the probed target are
hidden by local light shifts.  A hidden bright atom still depumps with a
small probability per target measurement; hiding power suppresses that rate
down to the background floor set by the trapping light.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .photons import (
    IntervalOutcome,
    PhotonModel,
    sample_adaptive_interval,
    sample_full_interval,
)
from .register import F1, F2, HyperfineState, Register, SiteState


@dataclass(frozen=True)
class ProbeConfig:
    """Tweezer depth and probe detunings selecting a calibration row."""

    tweezer_depth_mk: float = 0.25
    detuning_pa_mhz: float = -5.0
    detuning_pc_mhz: float = -5.0

    def __post_init__(self):
        if self.tweezer_depth_mk <= 0:
            raise ConfigurationError("tweezer depth must be positive")

    def key(self) -> tuple[float, float]:
        # calibration rows are quoted by depth and |detuning|; sign conventions
        # vary between the table header and the running text
        return (round(self.tweezer_depth_mk, 6), round(abs(self.detuning_pc_mhz), 6))


@dataclass(frozen=True)
class ErrorRates:
    """Per-measurement misclassification and loss probabilities by state."""

    infidelity_f1: float
    loss_f1: float
    infidelity_f2: float
    loss_f2: float

    def __post_init__(self):
        for v in (self.infidelity_f1, self.loss_f1, self.infidelity_f2, self.loss_f2):
            if not (0.0 <= v <= 1.0):
                raise ConfigurationError("error rates must be probabilities")


# Single-atom calibration: depth (mK), |probe-cavity detuning| (MHz) ->
# (F1 infidelity, F1 loss, F2 infidelity, F2 loss).
DEFAULT_ERROR_ROWS: dict[tuple[float, float], ErrorRates] = {
    (0.20, 3.0): ErrorRates(0.0017, 0.030, 0.003, 0.038),
    (0.25, 5.0): ErrorRates(0.0039, 0.021, 0.008, 0.030),
    (0.25, 11.0): ErrorRates(0.0030, 0.007, 0.026, 0.011),
    (0.25, 17.0): ErrorRates(0.0036, 0.003, 0.039, 0.006),
}


@dataclass
class MeasurementErrorTable:
    rows: dict[tuple[float, float], ErrorRates] = field(
        default_factory=lambda: dict(DEFAULT_ERROR_ROWS)
    )

    def lookup(self, probe: ProbeConfig) -> ErrorRates:
        try:
            return self.rows[probe.key()]
        except KeyError:
            raise ConfigurationError(
                f"no calibration row for depth {probe.tweezer_depth_mk} mK / "
                f"detuning {probe.detuning_pc_mhz} MHz"
            ) from None


@dataclass(frozen=True)
class HidingModel:
    """Hiding-beam suppression of probe-induced depumping, plus the
    light-shift beam profile.

    suppression_points are (power_mW, factor) calibration pairs; the factor
    is interpolated log-linearly in power and extrapolated beyond the last
    point.  The hidden depump probability never drops below the background
    floor from the trapping light.
    """

    depump_per_interval_unhidden: float = 0.044
    suppression_points: tuple[tuple[float, float], ...] = ((0.0, 1.0), (0.4, 5.2))
    background_floor: float = 0.0008
    beam_waist_um: float = 4.0
    shift_slope_mhz_per_uw: float = 1.0
    residual_at_10um: float = 0.01

    def __post_init__(self):
        pts = sorted(self.suppression_points)
        if not pts or any(f < 1.0 for _, f in pts):
            raise ConfigurationError("suppression factors must be >= 1")
        if any(f2 < f1 for (_, f1), (_, f2) in zip(pts, pts[1:])):
            raise ConfigurationError("suppression must be non-decreasing in power")
        if self.background_floor > self.depump_per_interval_unhidden:
            raise ConfigurationError("background floor exceeds the unhidden rate")
        object.__setattr__(self, "suppression_points", tuple(pts))


def suppression_factor(model: HidingModel, power_mw: float) -> float:
    """Log-linear interpolation of the suppression factor vs hiding power."""
    pts = model.suppression_points
    powers = [p for p, _ in pts]
    logs = [math.log(f) for _, f in pts]
    if len(pts) == 1:
        return math.exp(logs[0])
    if power_mw <= powers[0]:
        lo, hi = 0, 1
    elif power_mw >= powers[-1]:
        lo, hi = len(pts) - 2, len(pts) - 1
    else:
        hi = next(i for i, p in enumerate(powers) if p >= power_mw)
        lo = hi - 1
    slope = (logs[hi] - logs[lo]) / (powers[hi] - powers[lo])
    return math.exp(logs[lo] + slope * (power_mw - powers[lo]))


def hidden_depump_probability(model: HidingModel, power_mw: float) -> float:
    """Depump probability per target measurement for a hidden bright atom,
    clamped from below by the background floor."""
    if power_mw < 0:
        raise ConfigurationError("hiding power must be non-negative")
    return max(
        model.background_floor,
        model.depump_per_interval_unhidden / suppression_factor(model, power_mw),
    )


def light_shift_profile(model: HidingModel, power_uw: float, r_um: float) -> float:
    """Light shift in MHz at distance r from the beam center.

    Gaussian profile plus an aberration pedestal, normalized so the center
    value is exactly power * slope and the value at 10 um is exactly
    residual_at_10um times the center value.
    """
    if power_uw < 0 or r_um < 0:
        raise ConfigurationError("power and radius must be non-negative")
    w = model.beam_waist_um
    gauss_at_10 = math.exp(-2.0 * 10.0**2 / w**2)
    pedestal = (model.residual_at_10um - gauss_at_10) / (1.0 - model.residual_at_10um)
    shape = (math.exp(-2.0 * r_um**2 / w**2) + pedestal) / (1.0 + pedestal)
    return power_uw * model.shift_slope_mhz_per_uw * shape


@dataclass(frozen=True)
class SiteMeasurement:
    """Outcome of one hyperfine + occupation measurement pair."""

    hyperfine: IntervalOutcome
    occupation: IntervalOutcome
    inferred: SiteState  # None if occupation read dark, else F2/F1 by hyperfine

    @staticmethod
    def infer(hyperfine: IntervalOutcome, occupation: IntervalOutcome) -> SiteState:
        if not occupation.bright:
            return None
        return F2 if hyperfine.bright else F1


def measure_site(
    site: SiteState,
    probe: ProbeConfig,
    table: MeasurementErrorTable,
    photon: PhotonModel,
    rng: np.random.Generator,
    *,
    adaptive: bool = True,
    adaptive_loss_factor: float = 4.5,
) -> tuple[SiteMeasurement, SiteState]:
    """Measure one site and return (record, post-measurement site state).

    The state-appropriate infidelity flips the effective emitter for the
    hyperfine interval (misclassification channel).  Loss is applied once per
    measurement as a lump probability keyed by the pre-measurement state;
    adaptive termination divides the bright-state loss by
    adaptive_loss_factor.  Re-preparation is left to the caller.
    """
    sample = sample_adaptive_interval if adaptive else sample_full_interval

    if site is None:
        hyperfine = sample(None, photon, rng)
        occupation = sample(None, photon, rng)
        meas = SiteMeasurement(
            hyperfine, occupation, SiteMeasurement.infer(hyperfine, occupation)
        )
        return meas, None

    rates = table.lookup(probe)
    if site is F2:
        infidelity, loss = rates.infidelity_f2, rates.loss_f2
        if adaptive:
            loss = loss / adaptive_loss_factor
    else:
        infidelity, loss = rates.infidelity_f1, rates.loss_f1

    effective = site
    if rng.random() < infidelity:
        effective = F1 if site is F2 else F2

    hyperfine = sample(effective, photon, rng)
    occupation = sample(F2, photon, rng)  # repumper on: any present atom is bright
    meas = SiteMeasurement(
        hyperfine, occupation, SiteMeasurement.infer(hyperfine, occupation)
    )

    post: SiteState = None if rng.random() < loss else effective
    return meas, post


@dataclass(frozen=True)
class ReadoutRecord:
    round_index: int
    site: int
    was_occupied: bool  # ground truth just before this measurement
    prepared: SiteState  # ground-truth state just before this measurement
    result: SiteMeasurement


def sequential_array_readout(
    register: Register,
    target_order: list[int],
    hiding_power_mw: float,
    rng: np.random.Generator,
    *,
    probe: ProbeConfig,
    table: MeasurementErrorTable,
    photon: PhotonModel,
    hiding: HidingModel,
    adaptive_rounds: bool = False,
    adaptive: bool = True,
    adaptive_loss_factor: float = 4.5,
    rounds: int = 1,
    idle_intervals: int = 0,
    re_prepare: str = "bright",
) -> tuple[list[ReadoutRecord], Register]:
    """Sequentially measure the target sites, one at a time, for one or more
    rounds.

    While a target is probed, every other occupied bright atom independently
    depumps with hidden_depump_probability (charged once per target
    measurement).  idle_intervals adds probe-free intervals per round during
    which waiting atoms depump at the background floor only.  With
    adaptive_rounds, sites inferred vacant in the previous round are skipped.

    re_prepare: "bright" repumps each present target to F=2 right after its
    measurement (bright-state characterization), "inferred" resets it to the
    inferred state, "none" leaves the post-measurement state.
    """
    if len(set(target_order)) != len(target_order):
        raise ConfigurationError("duplicate target indices")
    if any(i < 0 or i >= register.n for i in target_order):
        raise ConfigurationError("target index out of range")
    if re_prepare not in ("bright", "inferred", "none"):
        raise ConfigurationError(f"unknown re_prepare policy {re_prepare!r}")

    p_hidden = hidden_depump_probability(hiding, hiding_power_mw)
    sites = list(register.sites)
    believed_present = {i: True for i in target_order}
    records: list[ReadoutRecord] = []

    for round_index in range(rounds):
        for target in target_order:
            if adaptive_rounds and not believed_present[target]:
                continue
            prepared = sites[target]
            meas, post = measure_site(
                sites[target],
                probe,
                table,
                photon,
                rng,
                adaptive=adaptive,
                adaptive_loss_factor=adaptive_loss_factor,
            )
            sites[target] = post
            records.append(
                ReadoutRecord(round_index, target, prepared is not None, prepared, meas)
            )
            believed_present[target] = meas.inferred is not None
            if re_prepare == "bright" and sites[target] is not None:
                sites[target] = F2
            elif re_prepare == "inferred" and sites[target] is not None:
                if isinstance(meas.inferred, HyperfineState):
                    sites[target] = meas.inferred
            # hidden bright atoms elsewhere depump during this measurement
            for j, s in enumerate(sites):
                if j != target and s is F2 and rng.random() < p_hidden:
                    sites[j] = F1
        for _ in range(idle_intervals):
            for j, s in enumerate(sites):
                if s is F2 and rng.random() < hiding.background_floor:
                    sites[j] = F1

    return records, replace(register, sites=sites)
