"""Independent checks that certify a run: discrete population balance,
positivity, finite-difference gradient and sensitivity oracles, and
aggregate metric extraction."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np

from .control import ControlPair, cost_functional, cost_gradient
from .model import (COMPARTMENTS, ContractError, CostWeights, ModelParams,
                    QuarantineRegions)
from .pde import Grid, StateTrajectory, adjoint_solve, forward_solve, sensitivity_solve

DEFAULT_SEED = 42

MASS_BALANCE_BOUND = 1e-8
POSITIVITY_BOUND = 1e-10
GRADIENT_REL_BOUND = 1e-2
DECAY_RATIO_RANGE = (5.0, 20.0)


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    measured: float
    bound: float
    detail: str = ""


@dataclass(frozen=True)
class RunMetrics:
    """Spatially integrated summary of one trajectory."""

    times: np.ndarray                  # shape (nt + 1,)
    aggregates: dict[str, np.ndarray]  # compartment -> time series of integrals
    peak_value: dict[str, float]
    peak_time: dict[str, float]
    total_population: np.ndarray       # integral of N over time
    final_total_population: float
    deaths: float                      # N(0) - N(tau), integrated

    def time_to_threshold(self, compartment: str, level: float,
                          direction: str = "below") -> float | None:
        """First time the named aggregate crosses ``level``; None if never."""
        series = self.aggregates[compartment]
        if direction == "below":
            hits = np.nonzero(series < level)[0]
        elif direction == "above":
            hits = np.nonzero(series > level)[0]
        else:
            raise ContractError(f"direction must be 'below' or 'above', got {direction}")
        if hits.size == 0:
            return None
        return float(self.times[hits[0]])


def extract_metrics(traj: StateTrajectory, grid: Grid) -> RunMetrics:
    """Trapezoid aggregates per compartment plus peak/death statistics."""

    wx = grid.space_weights()
    times = grid.t
    aggregates = {}
    for idx, name in enumerate(COMPARTMENTS):
        aggregates[name] = traj.values[:, idx, :] @ wx
    total = sum(aggregates.values())
    peak_value = {name: float(series.max()) for name, series in aggregates.items()}
    peak_time = {name: float(times[int(series.argmax())])
                 for name, series in aggregates.items()}
    return RunMetrics(
        times=times,
        aggregates=aggregates,
        peak_value=peak_value,
        peak_time=peak_time,
        total_population=total,
        final_total_population=float(total[-1]),
        deaths=float(total[0] - total[-1]),
    )


def mass_balance_check(traj: StateTrajectory, params: ModelParams,
                       grid: Grid) -> CheckReport:
    """Discrete total-population balance: per step, the change of the
    integrated population equals dt * (alpha - 1) * f * integrated I,
    up to roundoff (the reflected stencil has zero weighted sum)."""
    wx = grid.space_weights()
    total = traj.values.sum(axis=1) @ wx          # (nt + 1,)
    agg_i = traj.i @ wx
    expected = grid.dt * (params.alpha - 1.0) * params.f * agg_i[:-1]
    residual = np.abs(np.diff(total) - expected)
    scale = max(total[0], 1.0)
    measured = float(residual.max() / scale) if residual.size else 0.0
    return CheckReport(
        name="mass_balance",
        passed=measured <= MASS_BALANCE_BOUND,
        measured=measured,
        bound=MASS_BALANCE_BOUND,
        detail=f"max |dN - dt*(alpha-1)*f*I| / N(0), N(0)={total[0]:.6g}",
    )


def positivity_check(traj: StateTrajectory) -> CheckReport:
    """Most negative compartment value, normalized by the initial population."""
    wx = traj.grid.space_weights()
    scale = max(float(traj.values[0].sum(axis=0) @ wx), 1.0)
    most_negative = float(traj.values.min())
    measured = max(0.0, -most_negative) / scale
    step, comp, node = np.unravel_index(traj.values.argmin(), traj.values.shape)
    return CheckReport(
        name="positivity",
        passed=measured <= POSITIVITY_BOUND,
        measured=measured,
        bound=POSITIVITY_BOUND,
        detail=(f"most negative value {most_negative:.6g} "
                f"({COMPARTMENTS[comp]} at step {step}, node {node}), "
                f"scale {scale:.6g}"),
    )


def _random_directions(grid: Grid, regions: QuarantineRegions, count: int,
                       rng: np.random.Generator) -> list[ControlPair]:
    """Perturbation directions: uniform in the admissible box, mean-centered.

    Returned as raw (u, v) array pairs wrapped light so they can be scaled;
    the entries are signed and are NOT admissible controls themselves.
    """
    shape = (grid.nt + 1, grid.nx)
    mask = regions.mask(grid.x).astype(float)
    directions = []
    for _ in range(count):
        h_u = rng.uniform(0.0, 1.0, shape)
        h_u -= h_u.mean()
        h_v = rng.uniform(0.0, regions.v_max, shape) * mask
        h_v -= h_v[:, mask.astype(bool)].mean()
        h_v *= mask
        directions.append((h_u, h_v))
    return directions


def _shifted_controls(base: ControlPair, h_u, h_v, eps: float,
                      grid: Grid, regions: QuarantineRegions) -> ControlPair:
    u = base.u + eps * h_u
    v = (base.v + eps * h_v) * regions.mask(grid.x)
    if np.any(u < 0) or np.any(u > 1) or np.any(v < 0) or np.any(v > regions.v_max):
        raise ContractError("perturbed controls leave the admissible box; "
                            "use an interior base control or smaller epsilon")
    return ControlPair(u, v, grid, regions)


def gradient_oracle(initial: np.ndarray, base: ControlPair, params: ModelParams,
                    weights: CostWeights, regions: QuarantineRegions, grid: Grid,
                    epsilons=(1e-3, 1e-4), n_directions: int = 5,
                    seed: int = DEFAULT_SEED) -> CheckReport:
    """Compare the adjoint cost gradient against one-sided divided
    differences of the cost along seeded random directions, and check
    first-order error decay across the epsilon ladder."""
    from .control import directional_derivative

    epsilons = sorted(epsilons, reverse=True)
    rng = np.random.default_rng(seed)
    directions = _random_directions(grid, regions, n_directions, rng)

    state = forward_solve(initial, base, params, regions, grid)
    adjoint = adjoint_solve(state, base, weights, params, regions, grid)
    grad_u, grad_v = cost_gradient(state, adjoint, base, weights, regions, grid)
    j_base = cost_functional(state, base, weights, regions, grid)

    # errors[i][k]: relative error for direction i at epsilons[k]
    errors = np.zeros((n_directions, len(epsilons)))
    for i, (h_u, h_v) in enumerate(directions):
        predicted = directional_derivative(grad_u, grad_v, base, weights,
                                           h_u, h_v, grid)
        for k, eps in enumerate(epsilons):
            plus = _shifted_controls(base, h_u, h_v, eps, grid, regions)
            j_plus = cost_functional(
                forward_solve(initial, plus, params, regions, grid),
                plus, weights, regions, grid)
            fd = (j_plus - j_base) / eps
            errors[i, k] = abs(fd - predicted) / max(abs(fd), 1e-300)

    worst = float(errors[:, -1].max())
    ratios = errors[:, 0] / np.maximum(errors[:, -1], 1e-300)
    lo, hi = DECAY_RATIO_RANGE
    decay_ok = bool(np.all((ratios >= lo) & (ratios <= hi))) if len(epsilons) > 1 else True
    passed = worst < GRADIENT_REL_BOUND and decay_ok
    detail = (f"seed={seed}, epsilons={list(epsilons)}, "
              f"rel errors={np.array2string(errors, precision=3)}, "
              f"decay ratios={np.array2string(ratios, precision=3)}")
    return CheckReport(name="gradient_oracle", passed=passed, measured=worst,
                       bound=GRADIENT_REL_BOUND, detail=detail)


def sensitivity_oracle(initial: np.ndarray, base: ControlPair, params: ModelParams,
                       regions: QuarantineRegions, grid: Grid, direction=None,
                       epsilons=(1e-2, 1e-3), seed: int = DEFAULT_SEED) -> CheckReport:
    """Compare the linearized solve against divided differences of the
    nonlinear solve in the discrete L2 norm; the error must shrink
    proportionally to epsilon."""
    epsilons = sorted(epsilons, reverse=True)
    if direction is None:
        rng = np.random.default_rng(seed)
        h_u, h_v = _random_directions(grid, regions, 1, rng)[0]
    else:
        h_u, h_v = np.asarray(direction.u, float), np.asarray(direction.v, float)

    state = forward_solve(initial, base, params, regions, grid)

    direction = SimpleNamespace(u=h_u, v=h_v)
    lin = sensitivity_solve(state, base, direction, params, regions, grid)

    wx = grid.space_weights()
    wt = grid.time_weights()

    def l2(block):
        return float(np.sqrt(wt @ ((block ** 2).sum(axis=1) @ wx)))

    scale = max(l2(lin.values), 1e-300)
    errs = []
    for eps in epsilons:
        shifted = _shifted_controls(base, h_u, h_v, eps, grid, regions)
        bumped = forward_solve(initial, shifted, params, regions, grid)
        divided = (bumped.values - state.values) / eps
        errs.append(l2(divided - lin.values) / scale)

    measured = errs[-1]
    lo, hi = DECAY_RATIO_RANGE
    if len(errs) > 1:
        ratio = errs[0] / max(errs[-1], 1e-300)
        passed = lo <= ratio <= hi
        detail = f"seed={seed}, epsilons={list(epsilons)}, errors={errs}, ratio={ratio:.3g}"
    else:
        passed = measured < 1.0
        detail = f"single epsilon {epsilons[0]}, error {measured:.3g}"
    return CheckReport(name="sensitivity_oracle", passed=passed, measured=measured,
                       bound=hi, detail=detail)


def inject_fault(traj: StateTrajectory, step: int, compartment: int,
                 node: int, magnitude: float) -> StateTrajectory:
    """Copy of the trajectory with one value perturbed (for fault-injection tests)."""
    values = traj.values.copy()
    values[step, compartment, node] += magnitude
    return StateTrajectory(values, traj.grid)
