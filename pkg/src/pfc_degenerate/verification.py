"""Acceptance checks, runnable from the command line (``pfc verify``) and pytest.

Each check returns a :class:`CheckResult`; tolerances are fixed here.
"""

from __future__ import annotations

import functools
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig, validate
from .diagnostics import energy_inequality_residual, entropy_balance_residual, growth_check
from .physics import PotentialSpec, chemical_potential, free_energy
from .solver import InitialCondition, SchemeConfig, SolverState, project_initial, run
from .spectral import Grid, SpectralField, inner_product
from .sweep import Scenario, SweepPlan, sweep


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------

NOISE_2D = dict(dim=2, n=64, kappa=1.0, epsilon=0.2, theta=0.05, potential="quartic_example",
                initial="constant_plus_filtered_noise", ic_mean=1.0, ic_amplitude=0.2,
                ic_cutoff=8, seed=7, t_final=2.0, energy_guard=True, diagnostics_interval=1)


def noise_2d_config(dt: float) -> RunConfig:
    return validate(RunConfig(**NOISE_2D, dt_initial=dt, dt_min=dt / 64, dt_max=dt))


@functools.lru_cache(maxsize=4)
def noise_2d_run(dt: float):
    cfg = noise_2d_config(dt)
    u0 = cfg.initial_values()
    return run(cfg.initial_state(), cfg.scheme_config(u0), diagnostics_interval=1)


def positivity_scenario(n: int = 128) -> Scenario:
    """u0 = 1 + 0.3 sin x with kappa = 1, eps = 0.9: the pattern amplitude exceeds
    the mean, so the regularized solutions dip below zero shortly before t = 3."""
    return Scenario(dim=1, n=n, kappa=1.0,
                    spec=PotentialSpec("quartic_example", epsilon=0.9, kappa=1.0),
                    initial=InitialCondition("constant_plus_sine", c=1.0, amplitude=0.3, k=1),
                    t_final=3.0, dt_initial=2.5e-4, dt_min=1e-8, dt_max=2.5e-4,
                    diagnostics_interval=10)


@functools.lru_cache(maxsize=1)
def positivity_sweep():
    scenario = positivity_scenario()
    plan = SweepPlan(scenario=scenario, sample_times=tuple(np.linspace(0.0, 3.0, 31)))
    return sweep(plan)


# --------------------------------------------------------------------------
# linear oracle
# --------------------------------------------------------------------------

@dataclass
class LinearDecayReport:
    kappa: float
    wavenumber: int
    expected_rate: float
    amplitude_error: float
    max_rate_error: float
    t_final: float


def linear_decay_test(n: int = 64, kappa: float = 1.0, dt: float = 1e-4, t_final: float = 0.1,
                      amplitude: float = 1e-4, wavenumber: int = 2, theta: float = 0.05,
                      scheme: str = "etdrk2") -> LinearDecayReport:
    """Decay of u = 1 + a sin(k x) with W = 0 against exp(-kappa lam (1 - lam)^2 t).

    About u = 1 the mobility is 1, and with Mbar = 1 the explicit remainder
    div((u - 1) grad omega) is quadratic in a; it only feeds back into mode k
    at relative order a^2 per unit time.
    """
    grid = Grid(1, n)
    spec = PotentialSpec("linear_test", epsilon=0.0, kappa=kappa)
    u0 = project_initial(InitialCondition("constant_plus_sine", c=1.0, amplitude=amplitude,
                                          k=wavenumber), grid).values
    state = SolverState(grid=grid, u=u0, theta=theta, kappa=kappa, spec=spec, dt=dt)
    config = SchemeConfig(t_final=t_final, dt_initial=dt, dt_min=dt, dt_max=dt,
                          splitting_mobility=1.0, energy_guard=False, scheme=scheme)
    lam = float(wavenumber**2)
    rate = kappa * lam * (1.0 - lam) ** 2
    a0 = float(-2.0 * grid.forward(u0)[wavenumber].imag)
    worst_rate = 0.0
    final = {}

    def on_step(st):
        amp = -2.0 * grid.forward(st.u)[wavenumber].imag
        measured = -math.log(amp / a0) / st.t
        nonlocal worst_rate
        worst_rate = max(worst_rate, abs(measured - rate) / rate)
        final["amp"], final["t"] = amp, st.t

    run(state, config, diagnostics_interval=max(1, int(round(t_final / dt)) // 100),
        on_step=on_step)
    exact = a0 * math.exp(-rate * final["t"])
    return LinearDecayReport(kappa=kappa, wavenumber=wavenumber, expected_rate=rate,
                             amplitude_error=float(abs(final["amp"] - exact) / exact),
                             max_rate_error=float(worst_rate), t_final=final["t"])


# --------------------------------------------------------------------------
# criteria
# --------------------------------------------------------------------------

def _timed(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            passed, detail = fn(*args, **kwargs)
            return CheckResult(name, bool(passed), detail, time.perf_counter() - start)
        wrapper.check_name = name
        return wrapper
    return deco


@_timed("1 mass conservation")
def check_mass_conservation():
    traj = noise_2d_run(1e-3)
    mass = traj.column("mass")
    drift = float(np.max(np.abs(mass - mass[0])) / abs(mass[0]))
    steps = traj.final_state.step_index
    return drift <= 1e-10 and steps == 2000, f"max relative drift {drift:.3e} over {steps} steps (tol 1e-10)"


@_timed("2 exact linear decay")
def check_linear_decay():
    rep = linear_decay_test()
    ok = rep.amplitude_error <= 1e-6
    return ok, (f"k=2 amplitude vs exp(-{rep.expected_rate:g} kappa t) at t={rep.t_final:g}: "
                f"relative error {rep.amplitude_error:.3e} (tol 1e-6); "
                f"max decay-rate error {rep.max_rate_error:.3e}")


@_timed("3 energy dissipation")
def check_energy_dissipation():
    coarse, fine = noise_2d_run(1e-3), noise_2d_run(5e-4)
    energy = coarse.column("energy")
    tol = 1e-9 * (1.0 + abs(energy[0]))
    worst_rise = float(np.max(np.diff(energy)))
    r_coarse = float(np.max(np.abs(energy_inequality_residual(coarse))))
    r_fine = float(np.max(np.abs(energy_inequality_residual(fine))))
    factor = r_coarse / r_fine
    ok = worst_rise <= tol and factor >= 1.8
    return ok, (f"largest per-step rise {worst_rise:.3e} (tol {tol:.3e}); residual "
                f"{r_coarse:.3e} -> {r_fine:.3e} when dt halves, factor {factor:.2f} (need >= 1.8)")


ENTROPY_DTS = (1e-3, 5e-4, 2.5e-4)


def entropy_residuals(dts=ENTROPY_DTS, scheme: str = "etdrk2"):
    """Entropy-balance residual at t = 0.5 for each step size (1D, n = 128, theta = 0.05)."""
    out = []
    for dt in dts:
        cfg = validate(RunConfig(dim=1, n=128, kappa=1.0, epsilon=0.9, theta=0.05,
                                 initial="constant_plus_sine", ic_mean=1.0, ic_amplitude=0.3,
                                 t_final=0.5, dt_initial=dt, dt_min=dt / 64, dt_max=dt,
                                 diagnostics_interval=1, scheme=scheme, positivity_study=True))
        traj = run(cfg.initial_state(), cfg.scheme_config())
        out.append(float(entropy_balance_residual(traj)[-1]))
    return out


@_timed("4 entropy balance")
def check_entropy_balance():
    res = entropy_residuals()
    orders = [math.log2(abs(a) / abs(b)) for a, b in zip(res, res[1:])]
    ok = all(p >= 2 - 0.3 for p in orders)
    return ok, ("residuals " + ", ".join(f"{r:.3e}" for r in res) + "; observed orders "
                + ", ".join(f"{p:.2f}" for p in orders) + " (need >= 1.7, scheme order 2)")


@_timed("5 negativity scaling")
def check_negativity_scaling():
    result = positivity_sweep()
    fit = result.fit
    ratios = ", ".join(f"{r:.3e}" for r in fit.ratios)
    return fit.passed, (f"N/(theta^2+theta+theta^1/2) = [{ratios}]; coarse-half C = "
                        f"{fit.c_coarse:.3e}, C_fit = {fit.c_fit:.3e}")


@_timed("6 theta->0 Cauchy behaviour")
def check_cauchy():
    result = positivity_sweep()
    dists = result.cauchy_to_prev[1:]
    mono = all(b <= a for a, b in zip(dists, dists[1:]))
    fine_min = result.runs[-1].min_u
    coarse_min = result.runs[0].min_u
    ok = mono and fine_min >= -0.05 and fine_min > coarse_min
    return ok, ("consecutive H1 distances " + ", ".join(f"{d:.3e}" for d in dists)
                + f"; min_u finest {fine_min:.4g}, coarsest {coarse_min:.4g}")


def variational_errors(pairs: int = 10, n: int = 64, hs=(1e-3, 1e-4), seed: int = 2024):
    grid = Grid(1, n)
    spec = PotentialSpec("quartic_example", epsilon=0.2)
    rng = np.random.default_rng(seed)
    x = grid.coordinates()[0]
    out = []
    for _ in range(pairs):
        u = 1.0 + _smooth(rng, x, 6, 0.3)
        v = _smooth(rng, x, 6, 1.0)
        U, V = SpectralField(grid, values=u), SpectralField(grid, values=v)
        exact = inner_product(chemical_potential(U, spec, 1.0), V)
        errs = []
        for h in hs:
            fp = free_energy(SpectralField(grid, values=u + h * v), spec, 1.0)
            fm = free_energy(SpectralField(grid, values=u - h * v), spec, 1.0)
            errs.append(abs((fp - fm) / (2 * h) - exact))
        out.append(errs)
    return out


def _smooth(rng, x, kmax, scale):
    f = np.zeros_like(x)
    for k in range(1, kmax + 1):
        a, b = rng.standard_normal(2) / k**2
        f += a * np.cos(k * x) + b * np.sin(k * x)
    return scale * f / np.max(np.abs(f))


@_timed("7 variational consistency")
def check_variational():
    errs = variational_errors()
    orders = [math.log10(e1 / e2) for e1, e2 in errs]
    ok = all(1.8 <= p <= 2.2 for p in orders)
    return ok, f"observed orders in h: min {min(orders):.3f}, max {max(orders):.3f} (need within [1.8, 2.2])"


@_timed("8 growth conditions")
def check_growth():
    good = growth_check(PotentialSpec("quartic_example", epsilon=0.2), m=2,
                        z_range=(-10.0, 10.0), samples=10_000)
    bad = growth_check(PotentialSpec("linear_test", epsilon=0.2), m=2,
                       z_range=(-10.0, 10.0), samples=10_000)
    bad_lower = any(v["condition"] == "grow-1 lower" for v in bad.violations)
    ok = good.feasible and not bad.feasible and bad_lower
    return ok, f"quartic: {good.summary()}; linear_test: {'violation reported' if bad_lower else 'NOT flagged'}"


@_timed("9 determinism and persistence")
def check_determinism():
    from .output import run_to_directory, snapshot_path

    cfg = validate(RunConfig(dim=1, n=64, kappa=1.0, epsilon=0.2, theta=0.05,
                             initial="constant_plus_filtered_noise", ic_amplitude=0.3,
                             ic_cutoff=6, seed=11, t_final=0.2, dt_initial=1e-3,
                             dt_min=1e-6, dt_max=1e-3, snapshot_interval=50))
    with tempfile.TemporaryDirectory() as tmp:
        a, b, c = (Path(tmp) / name for name in ("a", "b", "c"))
        run_to_directory(cfg, a)
        run_to_directory(cfg, b)
        run_to_directory(cfg, c, max_steps=77)
        run_to_directory(cfg, c, resume=str(snapshot_path(c, 77)))
        ref = (a / "diagnostics.csv").read_bytes()
        same_rerun = ref == (b / "diagnostics.csv").read_bytes()
        same_resume = ref == (c / "diagnostics.csv").read_bytes()
    return same_rerun and same_resume, (f"rerun identical: {same_rerun}; "
                                        f"resume after 77 steps identical: {same_resume}")


ALL_CHECKS = (check_mass_conservation, check_linear_decay, check_energy_dissipation,
              check_entropy_balance, check_negativity_scaling, check_cauchy, check_variational,
              check_growth, check_determinism)
SLOW = {check_negativity_scaling, check_cauchy}


def run_checks(quick: bool = False):
    return [check() for check in ALL_CHECKS if not (quick and check in SLOW)]


def format_table(results) -> str:
    return "\n".join(r.line() for r in results)
