"""Experiment orchestration: seeded Monte-Carlo ensembles, estimation, CSV.

Every experiment is a deterministic function of (spec, master_seed): trials
are partitioned into fixed-size chunks, each chunk draws from a counter-based
stream keyed by (master_seed, point index, chunk index), and results are
reduced in chunk order.  Thread count changes wall-clock time only, never
output bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from . import __version__
from .errors import ConfigurationError
from .fitting import fit_linear
from .photons import PhotonModel, sample_adaptive_bright_batch
from .readout import (
    HidingModel,
    MeasurementErrorTable,
    ProbeConfig,
    sequential_array_readout,
)
from .register import F1, F2, IdleErrorModel, uniform_register
from .repcode import (
    CurveCell,
    logical_lifetime,
    simulate_code_abstract,
    simulate_idling_bit,
)
from .search import (
    GroupCheckNoise,
    Placement,
    SearchProblem,
    Strategy,
    expected_cost,
    run_search,
    sample_register,
)
from .streams import chunk_sizes, map_chunks, stream


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n: int

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "Estimate":
        samples = np.asarray(samples, dtype=float)
        n = len(samples)
        se = float(samples.std(ddof=1) / math.sqrt(n)) if n >= 2 else math.nan
        return cls(float(samples.mean()), se, n)

    @classmethod
    def from_binomial(cls, successes: int, n: int) -> "Estimate":
        p = successes / n
        return cls(p, math.sqrt(max(p * (1 - p), 0.0) / n), n)


@dataclass
class HistogramParams:
    photon: PhotonModel = field(default_factory=PhotonModel)


@dataclass
class DepumpScalingParams:
    sizes: list[int] = field(default_factory=lambda: list(range(1, 11)))
    rounds: int = 4
    hiding_power_mw: float = 2.0
    adaptive_rounds: bool = False
    adaptive: bool = True
    adaptive_loss_factor: float = 4.5
    idle_intervals: int = 0
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    table: MeasurementErrorTable = field(default_factory=MeasurementErrorTable)
    photon: PhotonModel = field(default_factory=PhotonModel)
    hiding: HidingModel = field(default_factory=HidingModel)


@dataclass
class SearchCostParams:
    sizes: list[int] = field(default_factory=lambda: list(range(2, 11)))
    probabilities: list[float] = field(default_factory=lambda: [0.0, 0.1, 0.3, 0.5, 1.0])
    strategies: list[Strategy] = field(
        default_factory=lambda: [
            Strategy.DETERMINISTIC_SEQUENTIAL,
            Strategy.GLOBAL_CHECK_THEN_SEQUENTIAL,
            Strategy.PARTITIONED_BINARY,
        ]
    )
    placement: Placement = Placement.AT_MOST_ONE_BRIGHT
    noise: GroupCheckNoise = field(default_factory=GroupCheckNoise)


@dataclass
class ErrorScalingParams:
    distances: list[int] = field(default_factory=lambda: [1, 3, 5])
    flip_sweep: list[float] = field(
        default_factory=lambda: [0.02, 0.04, 0.08, 0.12, 0.2]
    )
    per_round_loss: float = 0.037
    rounds: int = 17
    post_select: str = "distance"  # "distance", "none", or an integer string


@dataclass
class LifetimeParams:
    distances: list[int] = field(default_factory=lambda: [1, 3, 5])
    per_round_flip: float = 0.09
    per_round_loss: float = 0.037
    rounds: int = 17
    idle_ms: float = 20.0
    round_overhead_ms: float = 4.0
    idle_model: IdleErrorModel = field(default_factory=IdleErrorModel)
    definition: str = "fitted_tau"


@dataclass
class ExperimentSpec:
    experiment: str
    parameters: Any = None
    trials: int = 10_000
    master_seed: int = 20250809
    threads: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")


@dataclass
class ExperimentResult:
    fieldnames: list[str]
    rows: list[dict]
    summary: dict


# ----------------------------------------------------------------- histogram


def run_histogram(
    params: HistogramParams, trials: int, master_seed: int, threads: int
) -> ExperimentResult:
    photon = params.photon
    conditions = ["bright_full", "bright_adaptive", "dark_full"]

    def sample_chunk(point: int, chunk) -> Counter:
        idx, _, size = chunk
        rng = stream(master_seed, point, idx)
        cond = conditions[point]
        if cond == "bright_adaptive":
            counts, _ = sample_adaptive_bright_batch(photon, size, rng)
        else:
            mean = photon.mean_full(cond == "bright_full")
            counts = rng.poisson(mean, size=size)
        return Counter(counts.tolist())

    rows = []
    for point, cond in enumerate(conditions):
        hist: Counter = Counter()
        for part in map_chunks(
            lambda c, p=point: sample_chunk(p, c), chunk_sizes(trials), threads
        ):
            hist.update(part)
        for value in sorted(hist):
            rows.append({"counts": value, "frequency": hist[value], "condition": cond})
    return ExperimentResult(["counts", "frequency", "condition"], rows, {})


# ----------------------------------------------------------- depump scaling


def run_depump_scaling(
    params: DepumpScalingParams, trials: int, master_seed: int, threads: int
) -> ExperimentResult:
    """Bright-state error rates in repeated sequential readouts.

    Atoms are re-pumped to F=2 right after each measurement, so from the
    second round on every atom accumulates the same hidden-depump exposure
    (one per other-site measurement) between its own measurements.  Errors
    are counted among atoms whose presence was detected.
    """
    readout_rounds = params.rounds

    def trial_counts(point: int, chunk) -> np.ndarray:
        idx, start, size = chunk
        n = params.sizes[point]
        # [site, round, (errors, detections)]
        acc = np.zeros((n, readout_rounds, 2), dtype=np.int64)
        for t in range(size):
            rng = stream(master_seed, point, idx, start + t)
            reg = uniform_register(n, F2)
            records, _ = sequential_array_readout(
                reg,
                list(range(n)),
                params.hiding_power_mw,
                rng,
                probe=params.probe,
                table=params.table,
                photon=params.photon,
                hiding=params.hiding,
                adaptive_rounds=params.adaptive_rounds,
                adaptive=params.adaptive,
                adaptive_loss_factor=params.adaptive_loss_factor,
                rounds=readout_rounds,
                idle_intervals=params.idle_intervals,
                re_prepare="bright",
            )
            for rec in records:
                if not rec.was_occupied or rec.result.inferred is None:
                    continue  # lost atoms / undetected presence are excluded
                acc[rec.site, rec.round_index, 0] += rec.result.inferred is F1
                acc[rec.site, rec.round_index, 1] += 1
        return acc

    rows = []
    steady_x, steady_y = [], []
    first_round_by_site: dict[int, Estimate] = {}
    for point, n in enumerate(params.sizes):
        total = np.zeros((n, readout_rounds, 2), dtype=np.int64)
        for part in map_chunks(
            lambda c, p=point: trial_counts(p, c), chunk_sizes(trials), threads
        ):
            total += part
        steady = total[:, 1:, :] if readout_rounds > 1 else total
        for site in range(n):
            err, det = int(steady[site, :, 0].sum()), int(steady[site, :, 1].sum())
            est = Estimate.from_binomial(err, det) if det else Estimate(math.nan, math.nan, 0)
            rows.append(
                {
                    "n_sites": n,
                    "site_index": site,
                    "error_rate": est.mean,
                    "stderr": est.stderr,
                    "hiding_power_mW": params.hiding_power_mw,
                    "adaptive_rounds": int(params.adaptive_rounds),
                }
            )
        err, det = int(steady[:, :, 0].sum()), int(steady[:, :, 1].sum())
        if det:
            steady_x.append(float(n))
            steady_y.append(err / det)
        if n == max(params.sizes):
            for site in range(n):
                e, d = int(total[site, 0, 0]), int(total[site, 0, 1])
                if d:
                    first_round_by_site[site] = Estimate.from_binomial(e, d)

    summary: dict[str, Any] = {}
    if len(steady_x) >= 3:
        fit = fit_linear(steady_x, steady_y)
        summary["error_vs_size"] = {
            "intercept": fit.intercept,
            "slope": fit.slope,
            "intercept_stderr": fit.intercept_stderr,
            "slope_stderr": fit.slope_stderr,
        }
    if len(first_round_by_site) >= 3:
        fit = fit_linear(
            [s + 1 for s in sorted(first_round_by_site)],
            [first_round_by_site[s].mean for s in sorted(first_round_by_site)],
        )
        summary["first_round_error_vs_position"] = {
            "intercept": fit.intercept,
            "slope": fit.slope,
            "slope_stderr": fit.slope_stderr,
        }
    fieldnames = [
        "n_sites", "site_index", "error_rate", "stderr",
        "hiding_power_mW", "adaptive_rounds",
    ]
    return ExperimentResult(fieldnames, rows, summary)


# --------------------------------------------------------------- search cost


def run_search_cost(
    params: SearchCostParams, trials: int, master_seed: int, threads: int
) -> ExperimentResult:
    noise = (
        None
        if params.noise.false_positive == 0.0 and params.noise.false_negative == 0.0
        else params.noise
    )
    points = [
        (n, p, strat)
        for n in params.sizes
        for p in params.probabilities
        for strat in params.strategies
    ]

    def chunk_stats(point: int, chunk) -> tuple[float, float]:
        idx, _, size = chunk
        rng = stream(master_seed, point, idx)
        n, p, strat = points[point]
        problem = SearchProblem(n, p, params.placement)
        s = s2 = 0.0
        at_most_one = params.placement is Placement.AT_MOST_ONE_BRIGHT
        for _ in range(size):
            reg = sample_register(problem, rng)
            res = run_search(reg, strat, rng, at_most_one=at_most_one, noise=noise)
            s += res.intervals_used
            s2 += res.intervals_used**2
        return s, s2

    rows = []
    for point, (n, p, strat) in enumerate(points):
        s = s2 = 0.0
        for cs, cs2 in map_chunks(
            lambda c, q=point: chunk_stats(q, c), chunk_sizes(trials), threads
        ):
            s += cs
            s2 += cs2
        mean = s / trials
        var = max(s2 / trials - mean**2, 0.0) * trials / max(trials - 1, 1)
        stderr = math.sqrt(var / trials)
        try:
            analytic = expected_cost(SearchProblem(n, p, params.placement), strat)
        except ConfigurationError:
            analytic = math.nan
        rows.append(
            {
                "n": n,
                "p": p,
                "strategy": strat.value,
                "mean_intervals": mean,
                "stderr": stderr,
                "analytic": analytic,
            }
        )
    fieldnames = ["n", "p", "strategy", "mean_intervals", "stderr", "analytic"]
    return ExperimentResult(fieldnames, rows, {})


# ------------------------------------------------------------- error scaling


def run_error_scaling(
    params: ErrorScalingParams, trials: int, master_seed: int, threads: int
) -> ExperimentResult:
    points = [(d, p) for d in params.distances for p in params.flip_sweep]

    def chunk_counts(point: int, chunk) -> np.ndarray:
        idx, _, size = chunk
        d, p = points[point]
        rng = stream(master_seed, point, idx)
        trace = simulate_code_abstract(d, p, params.per_round_loss, params.rounds, size, rng)
        acc = np.zeros((d + 1, 2), dtype=np.int64)
        for s in range(d + 1):
            sel = trace.survivors == s
            acc[s, 0] = int(trace.new_error[sel].sum())
            acc[s, 1] = int(sel.sum())
        return acc

    cells: list[CurveCell] = []
    for point, (d, p) in enumerate(points):
        acc = np.zeros((d + 1, 2), dtype=np.int64)
        for part in map_chunks(
            lambda c, q=point: chunk_counts(q, c), chunk_sizes(trials), threads
        ):
            acc += part
        if params.post_select == "none":
            groups = list(range(d + 1))
        elif params.post_select == "distance":
            groups = [d]
        else:
            groups = [int(params.post_select)]
        for s in groups:
            k, n = int(acc[s, 0]), int(acc[s, 1])
            if n == 0:
                cells.append(CurveCell(p, d, s, math.nan, math.nan, 0, True))
                continue
            est = Estimate.from_binomial(k, n)
            flagged = k == 0 or est.stderr > 0.1 * est.mean
            cells.append(CurveCell(p, d, s, est.mean, est.stderr, n, flagged))

    rows = [
        {
            "p_phys": c.p_phys,
            "d": c.distance,
            "survivors": c.survivors,
            "p_logical": c.p_logical,
            "stderr": c.stderr,
        }
        for c in cells
    ]
    summary: dict[str, Any] = {"flagged_cells": [
        {"p_phys": c.p_phys, "d": c.distance, "survivors": c.survivors, "n_rounds": c.n_rounds}
        for c in cells if c.flagged
    ]}
    from .repcode import fit_error_exponent

    exponents = {}
    for d in params.distances:
        if d == 1:
            continue
        sel = [c for c in cells if c.distance == d and c.survivors == d and c.p_logical > 0]
        if len(sel) >= 4:
            try:
                exp, se = fit_error_exponent(
                    [c.p_phys for c in sel], [c.p_logical for c in sel]
                )
                exponents[str(d)] = {
                    "exponent": exp, "stderr": se, "theory": (d + 1) / 2
                }
            except ConfigurationError as err:
                exponents[str(d)] = {"error": str(err)}
    summary["exponents"] = exponents
    return ExperimentResult(
        ["p_phys", "d", "survivors", "p_logical", "stderr"], rows, summary
    )


# ------------------------------------------------------------------ lifetime


def run_lifetime(
    params: LifetimeParams, trials: int, master_seed: int, threads: int
) -> ExperimentResult:
    round_time = params.idle_ms + params.round_overhead_ms
    times = round_time * np.arange(1, params.rounds + 1)

    def physical_chunk(chunk) -> np.ndarray:
        idx, _, size = chunk
        rng = stream(master_seed, 0, idx)
        p_err = simulate_idling_bit(params.idle_model, times, size, rng)
        return np.round(p_err * size).astype(np.int64)

    def code_chunk(point: int, chunk) -> np.ndarray:
        idx, _, size = chunk
        d = params.distances[point - 1]
        rng = stream(master_seed, point, idx)
        trace = simulate_code_abstract(
            d, params.per_round_flip, params.per_round_loss, params.rounds, size, rng
        )
        out = np.zeros((2, params.rounds), dtype=np.int64)
        out[0] = trace.err_vs_initial.sum(axis=0)
        out[1] = trace.survivors.sum(axis=0)
        return out

    rows = []
    fits: dict[str, Any] = {}

    err_counts = np.zeros(params.rounds, dtype=np.int64)
    for part in map_chunks(physical_chunk, chunk_sizes(trials), threads):
        err_counts += part
    p_phys_curve = err_counts / trials
    phys = logical_lifetime(times, p_phys_curve, params.definition)
    fits["physical"] = _lifetime_jsonable(phys)
    for r in range(params.rounds):
        est = Estimate.from_binomial(int(err_counts[r]), trials)
        rows.append(
            {
                "t_ms": float(times[r]),
                "d": 0,
                "p_err": est.mean,
                "stderr": est.stderr,
                "survivor_mean": math.nan,
            }
        )

    for point, d in enumerate(params.distances, start=1):
        acc = np.zeros((2, params.rounds), dtype=np.int64)
        for part in map_chunks(
            lambda c, q=point: code_chunk(q, c), chunk_sizes(trials), threads
        ):
            acc += part
        p_err_curve = acc[0] / trials
        surv_mean = acc[1] / trials
        res = logical_lifetime(times, p_err_curve, params.definition)
        fits[str(d)] = _lifetime_jsonable(res)
        fits[str(d)]["extension_factor"] = (
            res.lifetime_ms / phys.lifetime_ms if phys.lifetime_ms else math.nan
        )
        for r in range(params.rounds):
            est = Estimate.from_binomial(int(acc[0, r]), trials)
            rows.append(
                {
                    "t_ms": float(times[r]),
                    "d": d,
                    "p_err": est.mean,
                    "stderr": est.stderr,
                    "survivor_mean": float(surv_mean[r]),
                }
            )

    summary = {"fits": fits, "round_time_ms": round_time, "definition": params.definition}
    return ExperimentResult(
        ["t_ms", "d", "p_err", "stderr", "survivor_mean"], rows, summary
    )


def _lifetime_jsonable(res) -> dict:
    return {
        "lifetime_ms": res.lifetime_ms,
        "tau_ms": res.tau_ms,
        "p_inf": res.p_inf,
        "crossing_1_minus_1_over_e_ms": res.crossing_1_minus_1_over_e_ms,
        "crossing_p_inf_over_e_ms": res.crossing_p_inf_over_e_ms,
        "low_confidence": res.low_confidence,
    }


# ------------------------------------------------------------------ dispatch

_EXPERIMENTS = {
    "histogram": (HistogramParams, run_histogram),
    "depump_scaling": (DepumpScalingParams, run_depump_scaling),
    "search_cost": (SearchCostParams, run_search_cost),
    "error_scaling": (ErrorScalingParams, run_error_scaling),
    "lifetime": (LifetimeParams, run_lifetime),
}


def run(spec: ExperimentSpec) -> ExperimentResult:
    """Run an experiment; deterministic in (spec, master_seed) regardless of
    the thread count."""
    try:
        params_cls, fn = _EXPERIMENTS[spec.experiment]
    except KeyError:
        raise ConfigurationError(f"unknown experiment {spec.experiment!r}") from None
    params = spec.parameters if spec.parameters is not None else params_cls()
    if not isinstance(params, params_cls):
        raise ConfigurationError(
            f"experiment {spec.experiment!r} expects {params_cls.__name__}"
        )
    return fn(params, spec.trials, spec.master_seed, max(spec.threads, 1))


# ----------------------------------------------------------------- csv / io


def _jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def write_result_csv(path: str, result: ExperimentResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=result.fieldnames)
        writer.writeheader()
        for row in result.rows:
            writer.writerow({k: _format_cell(row[k]) for k in result.fieldnames})


def _format_cell(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    return value


def write_metadata(path: str, spec: ExperimentSpec, result: ExperimentResult) -> None:
    meta = {
        "experiment": spec.experiment,
        "parameters": _jsonable(spec.parameters),
        "trials": spec.trials,
        "master_seed": spec.master_seed,
        "summary": _jsonable(result.summary),
        "version": f"cavreg-{__version__}",
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
