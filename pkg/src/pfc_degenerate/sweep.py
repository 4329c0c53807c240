"""theta -> 0 continuation: identical scenarios over a decreasing cutoff sequence."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _accel
from .diagnostics import negativity_sup
from .physics import PotentialSpec
from .solver import (InitialCondition, SchemeConfig, SolverState, Trajectory,
                     default_splitting_mobility, energy_tolerance, project_initial, run)
from .spectral import Grid

DEFAULT_THETAS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
SUMMARY_COLUMNS = ("theta", "N_theta", "C_ratio", "min_u", "max_cauchy_to_prev", "wall_time_s")


@dataclass(frozen=True)
class Scenario:
    """Everything shared by the runs of a sweep except theta."""

    dim: int = 1
    n: int = 128
    kappa: float = 1.0
    spec: PotentialSpec = PotentialSpec("quartic_example", epsilon=0.9, kappa=1.0)
    initial: InitialCondition = InitialCondition("constant_plus_sine", c=1.0, amplitude=0.3, k=1)
    t_final: float = 3.0
    dt_initial: float = 2.5e-4
    dt_min: float = 1e-8
    dt_max: float = 2.5e-4
    energy_guard: bool = True
    scheme: str = "etdrk2"
    dealias: bool = True
    diagnostics_interval: int = 10
    splitting_mobility: Optional[float] = None
    seed: int = 0

    @property
    def grid(self) -> Grid:
        return Grid(self.dim, self.n)

    def initial_field(self, positivity: bool = False):
        return project_initial(self.initial, self.grid, dealias=self.dealias, positivity=positivity)

    def prepare(self, theta: float, positivity: bool = False):
        """Initial solver state and scheme configuration for one value of theta."""
        u0 = self.initial_field(positivity).values
        state = SolverState(grid=self.grid, u=u0, theta=theta, kappa=self.kappa, spec=self.spec,
                            dt=self.dt_initial, dealias=self.dealias, seed=self.seed)
        from .diagnostics import record
        e0 = record(state).energy
        mbar = (self.splitting_mobility if self.splitting_mobility is not None
                else default_splitting_mobility(u0))
        config = SchemeConfig(t_final=self.t_final, dt_initial=self.dt_initial,
                              dt_min=self.dt_min, dt_max=self.dt_max,
                              splitting_mobility=mbar, energy_guard=self.energy_guard,
                              energy_tol=energy_tolerance(e0), scheme=self.scheme)
        return state, config


@dataclass(frozen=True)
class SweepPlan:
    thetas: Sequence[float] = DEFAULT_THETAS
    scenario: Scenario = Scenario()
    sample_times: Sequence[float] = ()

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        if not thetas:
            raise ValueError("theta sequence is empty")
        if any(not 0 < t < 1 for t in thetas):
            raise ValueError(f"every theta must lie in (0, 1), got {thetas}")
        if any(b > a for a, b in zip(thetas, thetas[1:])):
            raise ValueError(f"theta sequence must be non-increasing, got {thetas}")
        object.__setattr__(self, "thetas", thetas)
        times = tuple(float(s) for s in self.sample_times)
        if not times:
            times = tuple(np.linspace(0.0, self.scenario.t_final, 31))
        if any(s < 0 or s > self.scenario.t_final for s in times):
            raise ValueError("sample times must lie in [0, t_final]")
        object.__setattr__(self, "sample_times", times)
        # the positivity study needs u0 > 0 everywhere
        self.scenario.initial_field(positivity=True)


@dataclass
class ThetaRun:
    theta: float
    trajectory: Trajectory
    wall_time: float

    @property
    def negativity_sup(self) -> float:
        return negativity_sup(self.trajectory)

    @property
    def min_u(self) -> float:
        return float(self.trajectory.column("min_u").min())


@dataclass
class SweepResult:
    plan: SweepPlan
    runs: list
    cauchy_to_prev: list = field(default_factory=list)
    fit: Optional["ScalingFit"] = None

    def summary_rows(self):
        rows = []
        for run_, dist in zip(self.runs, self.cauchy_to_prev):
            th = run_.theta
            n_theta = run_.negativity_sup
            rows.append({
                "theta": th,
                "N_theta": n_theta,
                "C_ratio": n_theta / bound_envelope(th),
                "min_u": run_.min_u,
                "max_cauchy_to_prev": dist,
                "wall_time_s": run_.wall_time,
            })
        return rows


class SweepError(RuntimeError):
    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def run_theta(scenario: Scenario, theta: float, sample_times: Sequence[float] = ()) -> ThetaRun:
    start = time.perf_counter()
    state, config = scenario.prepare(theta, positivity=True)
    traj = run(state, config, diagnostics_interval=scenario.diagnostics_interval,
               sample_times=sample_times)
    return ThetaRun(theta=theta, trajectory=traj, wall_time=time.perf_counter() - start)


def _run_task(args):
    scenario, theta, times = args
    return run_theta(scenario, theta, times)


def sweep(plan: SweepPlan, workers: Optional[int] = None, on_run=None) -> SweepResult:
    """Run every theta of ``plan`` independently and summarise.

    ``workers`` > 1 distributes runs over processes; each run is a pure
    function of its inputs, so results do not depend on the worker count.
    """
    workers = _accel.threads() if workers is None else int(workers)
    tasks = [(plan.scenario, th, plan.sample_times) for th in plan.thetas]
    runs = []
    try:
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
                for result in pool.map(_run_task, tasks):
                    runs.append(result)
                    if on_run is not None:
                        on_run(result)
        else:
            for task in tasks:
                result = _run_task(task)
                runs.append(result)
                if on_run is not None:
                    on_run(result)
    except Exception as exc:
        done = [r.theta for r in runs]
        raise SweepError(f"sweep aborted after theta values {done}: {exc}",
                         SweepResult(plan, runs)) from exc

    dists = [math.nan]
    for prev, cur in zip(runs, runs[1:]):
        dists.append(cauchy_metric(prev.trajectory, cur.trajectory))
    result = SweepResult(plan, runs, dists)
    if len(runs) >= 3 and len(set(plan.thetas)) == len(plan.thetas):
        result.fit = scaling_fit([r.theta for r in runs], [r.negativity_sup for r in runs])
    return result


def h1_distance(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """||a - b||_{L2} + ||grad(a - b)||_{L2}."""
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    l2 = math.sqrt(grid.cell * float(np.sum(diff * diff)))
    dh = grid.forward(diff)
    grad_sq = 0.0
    for ik in grid.derivative_symbols():
        g = grid.inverse(ik * dh)
        grad_sq += float(np.sum(g * g))
    return l2 + math.sqrt(grid.cell * grad_sq)


def cauchy_metric(traj_a: Trajectory, traj_b: Trajectory, sample_times=None) -> float:
    """Max over common sample times of the discrete H1 distance."""
    ta = np.asarray(traj_a.sample_times, dtype=np.float64)
    tb = np.asarray(traj_b.sample_times, dtype=np.float64)
    if ta.shape != tb.shape or not np.array_equal(ta, tb):
        raise ValueError("trajectories are sampled at different times")
    if len(ta) == 0:
        raise ValueError("trajectories carry no field samples")
    if traj_a.grid != traj_b.grid:
        raise ValueError(f"grid mismatch: {traj_a.grid!r} vs {traj_b.grid!r}")
    idx = range(len(ta))
    if sample_times is not None:
        wanted = np.asarray(sample_times, dtype=np.float64)
        idx = []
        for s in wanted:
            hit = np.nonzero(ta == s)[0]
            if len(hit) == 0:
                raise ValueError(f"sample time {s} missing from trajectories")
            idx.append(int(hit[0]))
    return max(h1_distance(traj_a.grid, traj_a.samples[i], traj_b.samples[i]) for i in idx)


def bound_envelope(theta: float) -> float:
    """theta^2 + theta + theta^(1/2)."""
    return theta * theta + theta + math.sqrt(theta)


@dataclass(frozen=True)
class ScalingFit:
    thetas: tuple
    ratios: tuple
    c_fit: float
    c_coarse: float
    passed: bool


def scaling_fit(thetas, values) -> ScalingFit:
    """Constant of N(theta) <= C (theta^2 + theta + theta^(1/2)).

    ``c_fit`` is the largest ratio over all points.  The fit passes when the
    constant taken from the coarsest half of the thetas also bounds the finest
    half, i.e. the constant does not blow up as theta -> 0.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if thetas.shape != values.shape:
        raise ValueError("thetas and values differ in length")
    if len(thetas) < 3:
        raise ValueError(f"need at least 3 (theta, N) pairs, got {len(thetas)}")
    if len(np.unique(thetas)) != len(thetas):
        raise ValueError("theta values must be distinct")
    order = np.argsort(-thetas)
    thetas, values = thetas[order], values[order]
    ratios = values / np.array([bound_envelope(t) for t in thetas])
    half = (len(ratios) + 1) // 2
    c_coarse = float(ratios[:half].max())
    passed = bool(np.all(ratios[half:] <= c_coarse * (1.0 + 1e-12)))
    return ScalingFit(tuple(thetas), tuple(ratios), float(ratios.max()), c_coarse, passed)
