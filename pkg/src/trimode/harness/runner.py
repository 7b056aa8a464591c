"""Experiment orchestration and deterministic file output."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dynamics import Model, SqueezeSpec, Trajectory, evolve_trajectory
from ..errors import NotApplicableError, ParameterError, TrimodeError
from ..measures import (
    MeasuredMode,
    MeasureSeries,
    averaging_grid,
    check_averaging_grid,
    default_samples,
    default_window,
    measure_series,
    required_samples,
    weak_coupling_prediction,
)
from ..spectrum import OscillatorParams, classify_regime, stability_check
from ..symplectic import symplectic_form
from .config import ConfigError, RunConfig, SweepSpec, TimeModel
from .validation import CheckResult, run_suite

# weak-coupling beats are far slower than any normal mode; the auto window
# covers at least this many of them when the weak-coupling law applies
MIN_BEAT_PERIODS = 10

# sweep quantity name -> measure_series name
_SERIES_NAME = {
    "e_n_avg": "e_n",
    "discord_avg": "discord",
    "fidelity_avg": "fidelity",
    "chi_f_avg": "chi_f",
}


@dataclass(frozen=True)
class TimePlan:
    window: float
    n_samples: int
    delta_t: float
    auto_window: bool

    @property
    def times(self) -> np.ndarray:
        return averaging_grid(self.window, self.n_samples)


def plan_time(model: Model, time: TimeModel, delta_t_factor: float, periods: int) -> TimePlan:
    """Resolve the averaging window, sample count and DFS step for one parameter point."""
    spec = model.spectrum
    auto = time.t_max is None
    if auto:
        window = default_window(spec, periods)
        try:
            beat = weak_coupling_prediction(model.params).beat_period
        except NotApplicableError:
            beat = 0.0
        window = max(window, MIN_BEAT_PERIODS * beat)
    else:
        window = float(time.t_max)
    need = required_samples(window, spec.k_max)
    if time.n_samples == "auto":
        n = default_samples(window, spec)
    else:
        n = int(time.n_samples)
        if n < need:
            raise ConfigError(
                f"time.n_samples = {n} undersamples the fastest mode over t_max = {window:.6g}; "
                f"need >= {need}"
            )
    delta_t = delta_t_factor * 2.0 * math.pi / spec.k_max
    return TimePlan(window=window, n_samples=n, delta_t=delta_t, auto_window=auto)


def simulate(
    params: OscillatorParams,
    squeeze: SqueezeSpec,
    time: TimeModel,
    delta_t_factor: float,
    periods: int,
    quantities: tuple[str, ...],
    measured_mode: MeasuredMode,
) -> tuple[Model, TimePlan, Trajectory, MeasureSeries]:
    model = Model.from_params(params)
    plan = plan_time(model, time, delta_t_factor, periods)
    times = plan.times
    if plan.auto_window:
        check_averaging_grid(times, model.spectrum)
    traj = evolve_trajectory(model, squeeze, times, with_full=False)
    series = measure_series(traj, quantities, delta_t=plan.delta_t, measured_mode=measured_mode)
    return model, plan, traj, series


# ----------------------------------------------------------------------------
# formatting


def fmt(value: object) -> str:
    """CSV cell: empty for null, shortest round-trip repr for floats."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list[object]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _json_float(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


# ----------------------------------------------------------------------------
# evolve


@dataclass(frozen=True)
class EvolveResult:
    series: MeasureSeries
    summary: dict


def run_evolve(cfg: RunConfig, out_dir: str | Path | None = None) -> EvolveResult:
    model, plan, traj, series = simulate(
        cfg.params,
        cfg.squeeze,
        cfg.time,
        cfg.dfs.delta_t_factor,
        cfg.average_window_periods,
        ("e_n", "discord", "chi_f"),
        cfg.measured_mode,
    )
    spec = model.spectrum
    r1, r2 = model.bogoliubov.identity_residuals()
    s = model.propagators(traj.times[-1:])
    omega = symplectic_form(3)
    summary = {
        "config_echo": cfg.echo(),
        "spectrum": {"k1": spec.k1, "k2": spec.k2, "k3": spec.k3, "Q": spec.q},
        "regime": spec.regime.value,
        "averages": {k: _json_float(v) for k, v in series.averages.items()},
        "residuals": {
            "bogoliubov_normalisation": r1,
            "bogoliubov_symmetry": r2,
            "symplectic_at_t_max": float(np.max(np.abs(s[0] @ omega @ s[0].conj().T - omega))),
        },
        "time_grid": {
            "t_max": plan.window,
            "n_samples": plan.n_samples,
            "delta_t": plan.delta_t,
            "auto_window": plan.auto_window,
        },
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = [
            [t, e, d, c]
            for t, e, d, c in zip(series.times, series.e_n, series.discord, series.chi_f)
        ]
        write_csv(out / "timeseries.csv", ["t", "e_n", "discord", "chi_f"], rows)
        write_json(out / "summary.json", summary)
    return EvolveResult(series=series, summary=summary)


# ----------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class PointTask:
    index: int
    values: dict[str, float]
    squeeze: SqueezeSpec
    time: TimeModel
    delta_t_factor: float
    periods: int
    quantities: tuple[str, ...]
    measured_mode: MeasuredMode


@dataclass(frozen=True)
class PointResult:
    index: int
    values: dict[str, float | None]
    regime: str | None
    margin: float | None
    error: str | None


def _margin(values: dict[str, float]) -> float:
    return 0.25 * (values["omega_a"] + values["lambda_a"]) * (
        values["omega_b"] + values["lambda_b"]
    ) - (values["g_a"] ** 2 + values["g_b"] ** 2)


def evaluate_point(task: PointTask) -> PointResult:
    """One grid point; failures become data, never exceptions."""
    empty = {q: None for q in task.quantities}
    margin = _margin(task.values)
    try:
        params = OscillatorParams(**task.values)
    except ParameterError as exc:
        return PointResult(task.index, empty, None, margin, str(exc))
    report = stability_check(params)
    regime = classify_regime(params).value
    if not report.ok:
        return PointResult(task.index, empty, regime, report.margin, "stability bound violated")
    names = tuple(_SERIES_NAME[q] for q in task.quantities)
    try:
        _, _, _, series = simulate(
            params,
            task.squeeze,
            task.time,
            task.delta_t_factor,
            task.periods,
            names,
            task.measured_mode,
        )
    except TrimodeError as exc:
        return PointResult(task.index, empty, regime, report.margin, f"{type(exc).__name__}: {exc}")
    values = {q: series.averages[_SERIES_NAME[q]] for q in task.quantities}
    return PointResult(task.index, values, regime, report.margin, None)


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def evaluate_points(tasks: list[PointTask], workers: int) -> list[PointResult]:
    """Evaluate in any order, return sorted by index."""
    if workers <= 1 or len(tasks) < 2:
        results = [evaluate_point(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (8 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate_point, tasks, chunksize=chunk))
    return sorted(results, key=lambda r: r.index)


@dataclass(frozen=True)
class SweepResult:
    axis1: np.ndarray
    axis2: np.ndarray
    points: list[PointResult]

    def grid(self, quantity: str) -> np.ndarray:
        """Quantity on the ``(n1, n2)`` grid, NaN where unavailable."""
        flat = [r.values.get(quantity) for r in self.points]
        arr = np.array([np.nan if v is None else v for v in flat], dtype=float)
        return arr.reshape(len(self.axis1), len(self.axis2))


def run_sweep(spec: SweepSpec, out_dir: str | Path | None = None, workers: int = 1) -> SweepResult:
    sw = spec.sweep
    v1, v2 = sw.axis1.values(), sw.axis2.values()
    tasks = []
    for i, x in enumerate(v1):
        for j, y in enumerate(v2):
            tasks.append(
                PointTask(
                    index=i * len(v2) + j,
                    values=spec.point_params(x, y),
                    squeeze=spec.squeeze,
                    time=spec.time,
                    delta_t_factor=spec.dfs.delta_t_factor,
                    periods=spec.average_window_periods,
                    quantities=tuple(sw.quantities),
                    measured_mode=spec.measured_mode,
                )
            )
    points = evaluate_points(tasks, workers)
    result = SweepResult(axis1=v1, axis2=v2, points=points)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        header = ["i", "j", sw.axis1.param, sw.axis2.param, *sw.quantities, "regime", "stability_margin", "error"]
        rows = []
        for r in points:
            i, j = divmod(r.index, len(v2))
            rows.append(
                [i, j, v1[i], v2[j], *(r.values[q] for q in sw.quantities), r.regime, r.margin, r.error]
            )
        write_csv(out / "sweep.csv", header, rows)
    return result


# ----------------------------------------------------------------------------
# DFS scans


@dataclass(frozen=True)
class ScanResult:
    omega_b: np.ndarray
    chi_f_avg: np.ndarray
    normalized: np.ndarray
    points: list[PointResult]


def run_dfs_scan(cfg: RunConfig, out_dir: str | Path | None = None, workers: int = 1) -> ScanResult:
    """``<chi_F>`` along ``omega_b``, normalised by the largest value of the scan."""
    scan = cfg.dfs.scan
    if scan is None:
        raise ConfigError("dfs.scan section missing")
    grid = scan.values()
    base = cfg.model.params.model_dump()
    tasks = []
    for k, wb in enumerate(grid):
        values = dict(base, omega_b=float(wb))
        if scan.lambda_b_ratio is not None:
            values["lambda_b"] = scan.lambda_b_ratio * float(wb)
        tasks.append(
            PointTask(
                index=k,
                values=values,
                squeeze=cfg.squeeze,
                time=cfg.time,
                delta_t_factor=cfg.dfs.delta_t_factor,
                periods=cfg.average_window_periods,
                quantities=("chi_f_avg",),
                measured_mode=cfg.measured_mode,
            )
        )
    points = evaluate_points(tasks, workers)
    chi = np.array([np.nan if r.values["chi_f_avg"] is None else r.values["chi_f_avg"] for r in points])
    peak = np.nanmax(chi) if np.any(np.isfinite(chi)) else np.nan
    normalized = chi / peak if peak > 0 else np.full_like(chi, np.nan)
    result = ScanResult(omega_b=grid, chi_f_avg=chi, normalized=normalized, points=points)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = []
        for wb, c, n, r in zip(grid, chi, normalized, points):
            ok = math.isfinite(c)
            rows.append([wb, c if ok else None, n if ok and math.isfinite(n) else None, r.regime, r.error])
        write_csv(
            out / "dfs_scan.csv",
            ["omega_b", "chi_f_avg", "chi_f_avg_normalized", "regime", "error"],
            rows,
        )
    return result


# ----------------------------------------------------------------------------
# validation


def run_validate(
    out_dir: str | Path | None = None, seed: int = 0, workers: int = 1
) -> tuple[bool, list[CheckResult]]:
    results = run_suite(seed=seed, workers=workers)
    passed = all(r.passed for r in results if r.enforced)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(
            out / "validation.json",
            {"seed": seed, "passed": passed, "checks": [r.as_dict() for r in results]},
        )
    return passed, results
