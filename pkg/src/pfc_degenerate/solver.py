"""Time integration of du/dt = div(M_theta(u) grad omega) on the Fourier grid.

The stiff part -Mbar kappa lambda (1 - lambda)^2, with a constant splitting
mobility Mbar, is integrated exactly through exponential (ETD) weights; the
remainder div(M_theta grad omega) + Mbar kappa lambda (1 - lambda)^2 u is
explicit.  ``etd1`` is exponential Euler (first order), ``etdrk2`` the
Cox-Matthews two-stage scheme (second order).  With M_theta = Mbar and W = 0
the explicit remainder is zero and both schemes reproduce the linear decay
exactly.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .physics import PotentialSpec, chemical_potential_coeffs, free_energy_arrays
from .spectral import Grid, SpectralField, dealias_coeffs

log = logging.getLogger(__name__)

SCHEMES = ("etd1", "etdrk2")
SCHEME_ORDER = {"etd1": 1, "etdrk2": 2}
MIN_RECORDS = 100


class StepSizeUnderflow(RuntimeError):
    """The step guard kept rejecting until dt fell below dt_min."""

    def __init__(self, message, state, dump_path=None):
        super().__init__(message)
        self.state = state
        self.dump_path = dump_path


class CheckpointError(ValueError):
    pass


@dataclass
class SolverState:
    grid: Grid
    u: np.ndarray
    theta: float
    kappa: float
    spec: PotentialSpec
    dt: float
    t: float = 0.0
    step_index: int = 0
    dealias: bool = True
    seed: int = 0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        if self.u.shape != self.grid.shape:
            raise ValueError(f"field shape {self.u.shape} does not match grid {self.grid.shape}")
        if not self.theta > 0:
            raise ValueError("theta must be positive for time stepping; "
                             "the degenerate problem is reached only as theta -> 0")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def field(self) -> SpectralField:
        return SpectralField(self.grid, values=self.u)

    def replace(self, **changes) -> "SolverState":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class SchemeConfig:
    t_final: float
    dt_initial: float
    dt_min: float
    dt_max: float
    splitting_mobility: float = 1.0
    energy_guard: bool = True
    energy_tol: float = 1e-9
    scheme: str = "etdrk2"

    def __post_init__(self):
        if not self.t_final >= 0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        if not 0 < self.dt_min <= self.dt_initial <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_initial <= dt_max, got "
                             f"{self.dt_min}, {self.dt_initial}, {self.dt_max}")
        if not self.splitting_mobility > 0:
            raise ValueError("splitting_mobility must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")

    @property
    def order(self) -> int:
        return SCHEME_ORDER[self.scheme]


def default_splitting_mobility(u0) -> float:
    return max(1.0, float(np.max(u0)))


def energy_tolerance(energy0: float) -> float:
    return 1e-9 * (1.0 + abs(energy0))


# --------------------------------------------------------------------------
# initial data
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialCondition:
    """Initial-data generator.

    ``constant``: u = c.  ``constant_plus_sine``: u = c + a sin(k x_1).
    ``constant_plus_filtered_noise``: u = c + a eta, with eta a zero-mean
    Gaussian field keeping modes with every |k_j| <= cutoff, scaled so that
    max |eta| = 1.
    """

    kind: str = "constant"
    c: float = 1.0
    amplitude: float = 0.0
    k: int = 1
    seed: int = 0
    cutoff: int = 8

    KINDS = ("constant", "constant_plus_sine", "constant_plus_filtered_noise")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown initial condition {self.kind!r}; expected one of {self.KINDS}")

    def sample(self, grid: Grid) -> np.ndarray:
        if self.kind == "constant":
            return np.full(grid.shape, float(self.c))
        if self.kind == "constant_plus_sine":
            x = grid.coordinates()[0]
            return self.c + self.amplitude * np.sin(self.k * x)
        rng = np.random.default_rng(self.seed)
        coeffs = grid.forward(rng.standard_normal(grid.shape))
        keep = np.ones(grid.spectral_shape, dtype=bool)
        for kk in grid._k:
            keep &= np.abs(kk) <= self.cutoff
        coeffs = np.where(keep, coeffs, 0.0)
        coeffs.flat[0] = 0.0
        eta = grid.inverse(coeffs)
        peak = np.max(np.abs(eta))
        if peak > 0:
            eta = eta / peak
        return self.c + self.amplitude * eta


def project_initial(source, grid: Grid, dealias: bool = True,
                    positivity: bool = False) -> SpectralField:
    """Spectral truncation of initial data onto the resolved modes of ``grid``.

    ``source`` is an :class:`InitialCondition`, a callable of the grid
    coordinates, or an array of collocation samples.
    """
    if isinstance(source, InitialCondition):
        values = source.sample(grid)
    elif callable(source):
        values = np.asarray(source(*grid.coordinates()), dtype=np.float64)
    else:
        values = np.asarray(source, dtype=np.float64)
    if values.shape != grid.shape:
        raise ValueError(f"initial samples have shape {values.shape}, grid is {grid.shape}")
    if dealias:
        values = grid.inverse(dealias_coeffs(grid, grid.forward(values)))
    if positivity and not np.min(values) > 0:
        raise ValueError(f"positivity study needs min u0 > 0, got {np.min(values):.6g}")
    return SpectralField(grid, values=values)


# --------------------------------------------------------------------------
# right-hand side
# --------------------------------------------------------------------------

def _omega_coeffs(grid, u, uh, spec, kappa, dealias):
    return chemical_potential_coeffs(grid, u, uh, spec, kappa, dealias)


def rhs_coeffs(grid: Grid, u: np.ndarray, uh: np.ndarray, spec: PotentialSpec,
               kappa: float, theta: float, dealias: bool = True) -> np.ndarray:
    wh = _omega_coeffs(grid, u, uh, spec, kappa, dealias)
    mob = kernels.mobility_reg(u, theta)
    out = np.zeros(grid.spectral_shape, dtype=np.complex128)
    for ik in grid.derivative_symbols():
        flux = grid.forward(mob * grid.inverse(ik * wh))
        if dealias:
            flux = dealias_coeffs(grid, flux)
        out += ik * flux
    out.flat[0] = 0.0
    return out


def rhs(state: SolverState) -> SpectralField:
    """div(dealias(M_theta(u) grad omega)) as a field."""
    if not state.theta > 0:
        raise ValueError("theta must be positive")
    g = state.grid
    out = rhs_coeffs(g, state.u, g.forward(state.u), state.spec, state.kappa,
                     state.theta, state.dealias)
    return SpectralField(g, coeffs=out)


# --------------------------------------------------------------------------
# exponential integrator
# --------------------------------------------------------------------------

def _phi1_phi2(z):
    """phi_1(z) = (e^z - 1)/z and phi_2(z) = (e^z - 1 - z)/z^2 for real z <= 0."""
    z = np.asarray(z, dtype=np.float64)
    small = np.abs(z) < 0.1
    zs = np.where(small, 1.0, z)
    phi1 = np.where(small, 0.0, np.expm1(zs) / zs)
    phi2 = np.where(small, 0.0, (np.expm1(zs) - zs) / zs**2)
    # Taylor tails, truncation error < 1e-17 for |z| < 0.1
    t1 = np.zeros_like(z)
    t2 = np.zeros_like(z)
    term = np.ones_like(z)
    for j in range(12):
        t1 += term / math.factorial(j + 1)
        t2 += term / math.factorial(j + 2)
        term = term * z
    phi1 = np.where(small, t1, phi1)
    phi2 = np.where(small, t2, phi2)
    return phi1, phi2


class Integrator:
    """Caches the ETD weights for each step size used."""

    def __init__(self, grid: Grid, kappa: float, splitting_mobility: float, scheme: str = "etdrk2"):
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
        self.grid = grid
        self.kappa = kappa
        self.mbar = splitting_mobility
        self.scheme = scheme
        self.rate = splitting_mobility * kappa * grid.lam * (1.0 - grid.lam) ** 2
        self._cache = {}

    def weights(self, h: float):
        w = self._cache.get(h)
        if w is None:
            z = -self.rate * h
            phi1, phi2 = _phi1_phi2(z)
            w = (np.exp(z), h * phi1, h * phi2)
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[h] = w
        return w

    def _nonlinear(self, state, u, uh):
        r = rhs_coeffs(self.grid, u, uh, state.spec, state.kappa, state.theta, state.dealias)
        return r + self.rate * uh

    def advance(self, state: SolverState, h: float) -> np.ndarray:
        """Samples of u after one step of size ``h`` from ``state``."""
        g = self.grid
        E, hphi1, hphi2 = self.weights(h)
        uh = g.forward(state.u)
        n0 = self._nonlinear(state, state.u, uh)
        ah = E * uh + hphi1 * n0
        ah.flat[0] = uh.flat[0]
        if self.scheme == "etd1":
            return g.inverse(ah)
        a = g.inverse(ah)
        n1 = self._nonlinear(state, a, ah)
        vh = ah + hphi2 * (n1 - n0)
        vh.flat[0] = uh.flat[0]
        return g.inverse(vh)


def state_energy(state: SolverState, u=None) -> float:
    u = state.u if u is None else u
    return free_energy_arrays(state.grid, u, state.grid.forward(u), state.spec, state.kappa)


def _step_size(state: SolverState, config: SchemeConfig, stop: float) -> float:
    h = min(state.dt, config.dt_max)
    remaining = stop - state.t
    if h >= remaining - 1e-9 * h:
        h = remaining
    return h


def step(state: SolverState, config: SchemeConfig, integrator: Optional[Integrator] = None,
         stop: Optional[float] = None, energy_before: Optional[float] = None) -> SolverState:
    """Advance one accepted step; returns a new state.

    Under ``energy_guard`` a step raising the energy by more than
    ``config.energy_tol``, producing non-finite values, or pushing max u to
    2 Mbar (where the explicit remainder stops being contractive) is retried
    with half the step, down to ``dt_min``.  The nominal step doubles back toward
    ``dt_max`` after a step accepted at its first attempt.
    """
    if integrator is None:
        integrator = Integrator(state.grid, state.kappa, config.splitting_mobility, config.scheme)
    stop = config.t_final if stop is None else stop
    if not stop > state.t:
        raise ValueError(f"nothing to do: t={state.t} has reached stop={stop}")
    h = _step_size(state, config, stop)
    clipped = h < min(state.dt, config.dt_max)
    if config.energy_guard and energy_before is None:
        energy_before = state_energy(state)
    rejected = False
    while True:
        u_new = integrator.advance(state, h)
        ok = bool(np.all(np.isfinite(u_new)))
        if ok and config.energy_guard:
            ok = (float(np.max(u_new)) < 2.0 * config.splitting_mobility
                  and state_energy(state, u_new) <= energy_before + config.energy_tol)
        if ok:
            break
        rejected = True
        h = 0.5 * h
        if h < config.dt_min:
            raise StepSizeUnderflow(
                f"step size fell below dt_min={config.dt_min:g} at t={state.t:.17g} "
                f"(step {state.step_index})", state)
        log.debug("step %d rejected, retrying with dt=%g", state.step_index, h)
    if rejected:
        nominal = h
    elif clipped:
        nominal = state.dt
    else:
        nominal = min(2.0 * state.dt, config.dt_max)
    t_new = stop if h == stop - state.t else state.t + h
    return state.replace(u=u_new, t=t_new, dt=nominal, step_index=state.step_index + 1)


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    dts: list = field(default_factory=list)
    sample_times: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    initial_energy: Optional[float] = None
    final_state: Optional[SolverState] = None
    grid: Optional[Grid] = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    @property
    def times(self) -> np.ndarray:
        return self.column("t")


def run(state: SolverState, config: SchemeConfig, diagnostics_interval: int = 1,
        sample_times: Sequence[float] = (), max_steps: Optional[int] = None,
        on_record: Optional[Callable] = None, on_step: Optional[Callable] = None,
        record_initial: bool = True) -> Trajectory:
    """Integrate ``state`` to ``config.t_final``.

    A diagnostics record is taken every ``diagnostics_interval`` steps and at
    the final time.  Steps are shortened to land exactly on each of
    ``sample_times``, where a copy of the samples is stored.  ``on_record``
    receives ``(state, record, dt_used)``; ``on_step`` receives each accepted
    state.  ``max_steps`` stops early (the run can be resumed from the returned
    final state).
    """
    from .diagnostics import record as take_record

    if diagnostics_interval < 1:
        raise ValueError("diagnostics_interval must be >= 1")
    if state.t > config.t_final:
        raise ValueError(f"state time {state.t} is past t_final {config.t_final}")
    integrator = Integrator(state.grid, state.kappa, config.splitting_mobility, config.scheme)
    traj = Trajectory(grid=state.grid)
    pending = sorted(float(s) for s in sample_times if s >= state.t)
    for s in pending:
        if s > config.t_final:
            raise ValueError(f"sample time {s} lies beyond t_final {config.t_final}")

    def emit(st, dt_used):
        rec = take_record(st)
        traj.records.append(rec)
        traj.steps.append(st.step_index)
        traj.dts.append(dt_used)
        if on_record is not None:
            on_record(st, rec, dt_used)
        return rec

    def take_samples(st):
        while pending and pending[0] <= st.t:
            traj.sample_times.append(pending.pop(0))
            traj.samples.append(st.u.copy())

    energy = None
    if record_initial:
        rec = emit(state, 0.0)
        energy = rec.energy
        traj.initial_energy = rec.energy
    take_samples(state)

    taken = 0
    while state.t < config.t_final:
        if max_steps is not None and taken >= max_steps:
            break
        stop = pending[0] if pending else config.t_final
        t_prev = state.t
        state = step(state, config, integrator, stop=stop, energy_before=energy)
        taken += 1
        energy = None
        dt_used = state.t - t_prev
        if on_step is not None:
            on_step(state)
        last = state.t >= config.t_final
        if state.step_index % diagnostics_interval == 0 or last:
            energy = emit(state, dt_used).energy
        take_samples(state)

    if config.t_final > 0 and len(traj.records) < MIN_RECORDS and max_steps is None:
        log.warning("only %d diagnostic samples recorded; time-sup quantities and time "
                    "integrals want at least %d", len(traj.records), MIN_RECORDS)
    traj.final_state = state
    return traj


# --------------------------------------------------------------------------
# checkpoint files
# --------------------------------------------------------------------------

MAGIC = b"PFCCKPT1"
_HEADER = struct.Struct("<qqddddddqqq")
KIND_TAGS = {"quartic_example": 0, "derivation_form": 1, "linear_test": 2}
_TAG_KINDS = {v: k for k, v in KIND_TAGS.items()}


def checkpoint_bytes(state: SolverState) -> bytes:
    spec = state.spec
    gamma = math.nan if spec.gamma is None else float(spec.gamma)
    header = _HEADER.pack(state.grid.dim, state.grid.n, float(state.t), float(state.dt),
                          float(state.theta), float(state.kappa), float(spec.epsilon), gamma,
                          KIND_TAGS[spec.kind], int(state.step_index), int(state.seed))
    payload = np.ascontiguousarray(state.u, dtype="<f8").tobytes(order="C")
    return MAGIC + header + payload


def checkpoint_save(state: SolverState, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(checkpoint_bytes(state))
    tmp.replace(path)
    return path


def checkpoint_load(path, dealias: bool = True, m: int = 2) -> SolverState:
    """Read a checkpoint; any inconsistency raises :class:`CheckpointError`."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + _HEADER.size:
        raise CheckpointError(f"{path}: truncated header ({len(data)} bytes)")
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {data[:len(MAGIC)]!r}; expected {MAGIC!r}")
    (dim, n, t, dt, theta, kappa, eps, gamma, tag,
     step_index, seed) = _HEADER.unpack_from(data, len(MAGIC))
    problems = []
    if dim not in (1, 2, 3):
        problems.append(f"dim={dim}")
    if n % 2 or not 8 <= n <= 1024:
        problems.append(f"n={n}")
    if tag not in _TAG_KINDS:
        problems.append(f"potential tag={tag}")
    if not (math.isfinite(t) and t >= 0):
        problems.append(f"t={t}")
    if not (math.isfinite(dt) and dt > 0):
        problems.append(f"dt={dt}")
    if not 0 < theta < 1:
        problems.append(f"theta={theta}")
    if not (math.isfinite(kappa) and kappa > 0):
        problems.append(f"kappa={kappa}")
    if not math.isfinite(eps):
        problems.append(f"epsilon={eps}")
    if step_index < 0:
        problems.append(f"step_index={step_index}")
    if problems:
        raise CheckpointError(f"{path}: corrupted header ({', '.join(problems)})")
    expected = n**dim * 8
    payload = data[len(MAGIC) + _HEADER.size:]
    if len(payload) != expected:
        raise CheckpointError(f"{path}: payload has {len(payload)} bytes, "
                              f"shape ({n},)*{dim} needs {expected}")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape((n,) * dim)
    if not np.all(np.isfinite(values)):
        raise CheckpointError(f"{path}: non-finite field values")
    kind = _TAG_KINDS[tag]
    spec = PotentialSpec(kind=kind, epsilon=eps, kappa=kappa, m=m,
                         gamma=None if math.isnan(gamma) else gamma)
    return SolverState(grid=Grid(dim, n), u=values, theta=theta, kappa=kappa, spec=spec,
                       dt=dt, t=t, step_index=step_index, dealias=dealias, seed=seed)
