"""Scenario orchestration and file outputs: baseline and optimally
controlled runs, verification checks, CSV trajectories, and a run summary."""

from __future__ import annotations

import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .control import ControlPair, SweepReport, cost_functional, fbsm_solve
from .model import COMPARTMENTS
from .pde import Grid, StateTrajectory
from .pde import forward_solve
from .verify import (
    CheckReport,
    RunMetrics,
    extract_metrics,
    mass_balance_check,
    positivity_check,
)


@dataclass(frozen=True)
class ScenarioResult:
    """One solved scenario: trajectory, controls, cost, metrics, checks."""

    name: str
    trajectory: StateTrajectory
    controls: ControlPair
    cost: float
    metrics: RunMetrics
    checks: list[CheckReport]
    sweep: SweepReport | None = None


@dataclass(frozen=True)
class RunSummary:
    baseline: ScenarioResult | None
    optimal: ScenarioResult | None
    deaths_averted: float | None

    @property
    def all_checks(self) -> list[CheckReport]:
        out = []
        for result in (self.baseline, self.optimal):
            if result is not None:
                out.extend(result.checks)
        return out


def _solve_baseline(config: ScenarioConfig) -> ScenarioResult:
    grid = config.grid
    controls = ControlPair.zeros(grid, config.regions)
    traj = forward_solve(config.initial_array(), controls, config.params,
                         config.regions, grid)
    cost = cost_functional(traj, controls, config.weights, config.regions, grid)
    checks = [mass_balance_check(traj, config.params, grid), positivity_check(traj)]
    return ScenarioResult("baseline", traj, controls, cost,
                          extract_metrics(traj, grid), checks)


def _solve_optimal(config: ScenarioConfig) -> ScenarioResult:
    grid = config.grid
    start = ControlPair.zeros(grid, config.regions)
    state, _adjoint, controls, report = fbsm_solve(
        config.initial_array(), start, config.params, config.weights,
        config.regions, grid,
        tolerance=config.sweep.tolerance,
        max_iterations=config.sweep.max_iterations,
        relaxation=config.sweep.relaxation)
    cost = cost_functional(state, controls, config.weights, config.regions, grid)
    checks = [mass_balance_check(state, config.params, grid), positivity_check(state)]
    return ScenarioResult("optimal", state, controls, cost,
                          extract_metrics(state, grid), checks, sweep=report)


def run_scenario(config: ScenarioConfig, write: bool = True) -> RunSummary:
    """Solve the configured scenario(s), run the trajectory checks, and
    (optionally) write all outputs.  Partial outputs are removed on failure."""
    baseline = _solve_baseline(config) if config.mode in ("baseline", "both") else None
    optimal = _solve_optimal(config) if config.mode in ("optimal", "both") else None
    deaths_averted = None
    if baseline is not None and optimal is not None:
        deaths_averted = baseline.metrics.deaths - optimal.metrics.deaths
    summary = RunSummary(baseline, optimal, deaths_averted)
    if write:
        out_dir = Path(config.output_dir)
        try:
            write_outputs(summary, config, out_dir)
        except Exception:
            shutil.rmtree(out_dir, ignore_errors=True)
            raise
    return summary


def _format(value: float) -> str:
    return f"{value:.17g}"


def _write_field_csv(path: Path, values: np.ndarray, grid: Grid, stride: int) -> None:
    """Layout: header `t, x_0, ..., x_{nx-1}`, one row per stored time sample."""
    rows = ["t," + ",".join(_format(x) for x in grid.x)]
    times = grid.t
    indices = list(range(0, grid.nt + 1, stride))
    if indices[-1] != grid.nt:
        indices.append(grid.nt)
    for m in indices:
        rows.append(_format(times[m]) + "," + ",".join(_format(v) for v in values[m]))
    path.write_text("\n".join(rows) + "\n")


def read_field_csv(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse a field CSV back into (times, coordinates, values)."""
    lines = Path(path).read_text().strip().split("\n")
    header = lines[0].split(",")
    x = np.array([float(v) for v in header[1:]])
    times = []
    values = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(header):
            raise ValueError(f"{path}: ragged row with {len(cells)} cells")
        times.append(float(cells[0]))
        values.append([float(v) for v in cells[1:]])
    return np.array(times), x, np.array(values)


def _write_scenario(result: ScenarioResult, grid: Grid, stride: int,
                    directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for idx, name in enumerate(COMPARTMENTS):
        _write_field_csv(directory / f"{name}.csv", result.trajectory.values[:, idx, :],
                         grid, stride)
    _write_field_csv(directory / "u.csv", result.controls.u, grid, stride)
    _write_field_csv(directory / "v.csv", result.controls.v, grid, stride)

    aggregates = result.metrics.aggregates
    rows = ["t," + ",".join(COMPARTMENTS) + ",N"]
    for m, t in enumerate(grid.t):
        cells = [_format(t)]
        cells += [_format(aggregates[c][m]) for c in COMPARTMENTS]
        cells.append(_format(result.metrics.total_population[m]))
        rows.append(",".join(cells))
    (directory / "aggregates.csv").write_text("\n".join(rows) + "\n")


def _summary_lines(result: ScenarioResult) -> list[str]:
    lines = [f"[{result.name}]", f"cost J = {_format(result.cost)}"]
    for name in COMPARTMENTS:
        lines.append(f"peak {name} = {_format(result.metrics.peak_value[name])}"
                     f" at t = {_format(result.metrics.peak_time[name])}")
    lines.append(f"final total population = "
                 f"{_format(result.metrics.final_total_population)}")
    lines.append(f"deaths = {_format(result.metrics.deaths)}")
    if result.sweep is not None:
        sweep = result.sweep
        lines.append(f"sweep: iterations={sweep.iterations} "
                     f"converged={sweep.converged} "
                     f"final_update_norm={_format(sweep.final_update_norm)} "
                     f"relaxation={sweep.relaxation}")
        lines.append("cost history: "
                     + ", ".join(_format(j) for j in sweep.cost_history))
    for check in result.checks:
        status = "PASS" if check.passed else "FAIL"
        lines.append(f"check {check.name}: {status} measured={check.measured:.6g}"
                     f" bound={check.bound:.6g} ({check.detail})")
    return lines


def write_outputs(summary: RunSummary, config: ScenarioConfig,
                  output_dir: Path) -> None:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    lines: list[str] = []
    for result in (summary.baseline, summary.optimal):
        if result is None:
            continue
        _write_scenario(result, config.grid, config.stride, output_dir / result.name)
        lines.extend(_summary_lines(result))
        lines.append("")
    if summary.deaths_averted is not None:
        lines.append(f"deaths averted (baseline - optimal) = "
                     f"{_format(summary.deaths_averted)}")
    (output_dir / "summary.txt").write_text("\n".join(lines) + "\n")
