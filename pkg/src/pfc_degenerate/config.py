"""Run configuration: flat TOML ``key = value`` files, validated at parse time."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .diagnostics import growth_check
from .physics import POTENTIAL_KINDS, PotentialSpec
from .solver import (SCHEMES, InitialCondition, SchemeConfig, SolverState,
                     default_splitting_mobility, energy_tolerance, project_initial)
from .spectral import Grid
from .sweep import DEFAULT_THETAS, Scenario, SweepPlan

log = logging.getLogger(__name__)

COMMANDS = ("run", "sweep")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dim: int = 1
    n: int = 128
    kappa: float = 1.0
    epsilon: float = 0.2
    gamma: Optional[float] = None
    theta: float = 0.05
    potential: str = "quartic_example"
    m: int = 2
    initial: str = "constant_plus_sine"
    ic_mean: float = 1.0
    ic_amplitude: float = 0.1
    ic_wavenumber: int = 1
    ic_cutoff: int = 8
    seed: int = 0
    dt_initial: float = 1e-3
    dt_min: float = 1e-7
    dt_max: float = 1e-3
    t_final: float = 1.0
    scheme: str = "etdrk2"
    splitting_mobility: Optional[float] = None
    snapshot_interval: int = 0
    diagnostics_interval: int = 1
    output_dir: str = "pfc_output"
    energy_guard: bool = True
    dealias: bool = True
    positivity_study: bool = False
    theta_sequence: tuple = DEFAULT_THETAS
    sweep_samples: int = 21

    # -- derived objects ------------------------------------------------------

    @property
    def grid(self) -> Grid:
        return Grid(self.dim, self.n)

    @property
    def spec(self) -> PotentialSpec:
        return PotentialSpec(kind=self.potential, epsilon=self.epsilon, gamma=self.gamma,
                             kappa=self.kappa, m=self.m)

    @property
    def initial_condition(self) -> InitialCondition:
        return InitialCondition(kind=self.initial, c=self.ic_mean, amplitude=self.ic_amplitude,
                                k=self.ic_wavenumber, seed=self.seed, cutoff=self.ic_cutoff)

    def initial_values(self):
        return project_initial(self.initial_condition, self.grid, dealias=self.dealias,
                               positivity=self.positivity_study).values

    def initial_state(self) -> SolverState:
        return SolverState(grid=self.grid, u=self.initial_values(), theta=self.theta,
                           kappa=self.kappa, spec=self.spec, dt=self.dt_initial,
                           dealias=self.dealias, seed=self.seed)

    def scheme_config(self, u0=None) -> SchemeConfig:
        """Scheme settings; Mbar and the energy tolerance are fixed by u0."""
        from .diagnostics import evaluate

        if u0 is None:
            u0 = self.initial_values()
        mbar = (self.splitting_mobility if self.splitting_mobility is not None
                else default_splitting_mobility(u0))
        e0 = evaluate(self.grid, u0, self.theta if self.theta > 0 else 0.5, self.kappa,
                      self.spec, self.dealias).energy
        return SchemeConfig(t_final=self.t_final, dt_initial=self.dt_initial, dt_min=self.dt_min,
                            dt_max=self.dt_max, splitting_mobility=mbar,
                            energy_guard=self.energy_guard, energy_tol=energy_tolerance(e0),
                            scheme=self.scheme)

    def scenario(self) -> Scenario:
        return Scenario(dim=self.dim, n=self.n, kappa=self.kappa, spec=self.spec,
                        initial=self.initial_condition, t_final=self.t_final,
                        dt_initial=self.dt_initial, dt_min=self.dt_min, dt_max=self.dt_max,
                        energy_guard=self.energy_guard, scheme=self.scheme, dealias=self.dealias,
                        diagnostics_interval=self.diagnostics_interval,
                        splitting_mobility=self.splitting_mobility, seed=self.seed)

    def sweep_plan(self) -> SweepPlan:
        count = max(self.sweep_samples, 2)
        times = tuple(self.t_final * i / (count - 1) for i in range(count))
        return SweepPlan(thetas=self.theta_sequence, scenario=self.scenario(), sample_times=times)

    def echo(self) -> str:
        return dump_config(self)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT_KEYS = {"dim", "n", "m", "ic_wavenumber", "ic_cutoff", "seed", "snapshot_interval",
             "diagnostics_interval", "sweep_samples"}
_BOOL_KEYS = {"energy_guard", "dealias", "positivity_study"}
_STR_KEYS = {"potential", "initial", "output_dir", "scheme"}
_OPTIONAL_FLOAT = {"gamma", "splitting_mobility"}


def _coerce(key, value):
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false, got {value!r}")
        return value
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if key == "theta_sequence":
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{key}: expected a non-empty list of numbers")
        return tuple(_coerce_float(key, v) for v in value)
    return _coerce_float(key, value)


def _coerce_float(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {value!r}")
    return value


def validate(cfg: RunConfig, command: str = "run") -> RunConfig:
    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}")

    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
    if cfg.dim not in (1, 2, 3):
        fail("dim", f"must be 1, 2 or 3, got {cfg.dim}")
    if cfg.n % 2 or not 8 <= cfg.n <= 1024:
        fail("n", f"must be even and within [8, 1024], got {cfg.n}")
    if not cfg.kappa > 0:
        fail("kappa", f"must be positive, got {cfg.kappa}")
    if cfg.potential not in POTENTIAL_KINDS:
        fail("potential", f"must be one of {POTENTIAL_KINDS}, got {cfg.potential!r}")
    if cfg.potential == "quartic_example":
        if not cfg.epsilon > 0:
            fail("epsilon", f"must be positive, got {cfg.epsilon}")
        if not cfg.epsilon < cfg.kappa:
            fail("epsilon", "epsilon must be < kappa")
    if cfg.potential == "derivation_form" and cfg.gamma is None:
        fail("gamma", "required for potential = derivation_form")
    if cfg.m < 2:
        fail("m", f"must be an integer > 1, got {cfg.m}")
    if command == "run":
        if not cfg.theta > 0:
            fail("theta", "theta must be positive; use sweep for the degenerate limit")
        if not cfg.theta < 1:
            fail("theta", f"must be < 1, got {cfg.theta}")
    if cfg.initial not in InitialCondition.KINDS:
        fail("initial", f"must be one of {InitialCondition.KINDS}, got {cfg.initial!r}")
    if cfg.ic_cutoff < 0:
        fail("ic_cutoff", "must be >= 0")
    if not 0 < cfg.dt_min <= cfg.dt_initial <= cfg.dt_max:
        fail("dt_initial", "need 0 < dt_min <= dt_initial <= dt_max")
    if not cfg.t_final >= 0:
        fail("t_final", f"must be >= 0, got {cfg.t_final}")
    if cfg.scheme not in SCHEMES:
        fail("scheme", f"must be one of {SCHEMES}, got {cfg.scheme!r}")
    if cfg.splitting_mobility is not None and not cfg.splitting_mobility > 0:
        fail("splitting_mobility", "must be positive")
    if cfg.snapshot_interval < 0:
        fail("snapshot_interval", "must be >= 0 (0 keeps only the final snapshot)")
    if cfg.diagnostics_interval < 1:
        fail("diagnostics_interval", "must be >= 1")
    if cfg.sweep_samples < 2:
        fail("sweep_samples", "must be >= 2")
    seq = cfg.theta_sequence
    if any(not 0 < t < 1 for t in seq):
        fail("theta_sequence", "every theta must lie in (0, 1)")
    if any(b > a for a, b in zip(seq, seq[1:])):
        fail("theta_sequence", "must be non-increasing")
    if cfg.potential == "derivation_form":
        # whether this W meets the growth bounds depends on (kappa, gamma); report, don't assume
        report = growth_check(cfg.spec, m=cfg.m)
        if not report.feasible:
            log.warning("derivation_form with kappa=%g, gamma=%g: %s", cfg.kappa, cfg.gamma,
                        report.summary())
    if cfg.positivity_study or command == "sweep":
        u0 = project_initial(cfg.initial_condition, cfg.grid, dealias=cfg.dealias)
        if not u0.values.min() > 0:
            fail("initial", f"positivity study needs min u0 > 0, got {u0.values.min():.6g}")
    return cfg


def parse_config(text: str, command: str = "run") -> RunConfig:
    """Parse and validate configuration text; unknown keys are errors."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    values = {}
    for key, value in raw.items():
        if key not in _FIELDS:
            raise ConfigError(f"{key}: unknown key")
        if isinstance(value, dict):
            raise ConfigError(f"{key}: tables are not supported; use flat keys")
        values[key] = _coerce(key, value)
    return validate(RunConfig(**values), command)


def load_config(path, command: str = "run") -> RunConfig:
    return parse_config(Path(path).read_text(), command)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_format(v) for v in value) + "]"
    raise TypeError(f"cannot serialise {value!r}")


def dump_config(cfg: RunConfig) -> str:
    """Every key in declaration order; unset optional keys appear as comments."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            lines.append(f"# {f.name} = (unset)")
        else:
            lines.append(f"{f.name} = {_format(value)}")
    return "\n".join(lines) + "\n"


def replace(cfg: RunConfig, command: str = "run", **changes) -> RunConfig:
    return validate(dataclasses.replace(cfg, **changes), command)
