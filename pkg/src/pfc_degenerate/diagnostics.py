"""Discrete versions of the quantities controlled by the existence proof.

All space integrals are collocation or Parseval quadratures on the grid; all
time integrals are trapezoid sums over the recorded samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .physics import PotentialSpec, chemical_potential_coeffs, free_energy_arrays, potential_eval
from .spectral import Grid

CSV_COLUMNS = ("step", "t", "dt", "mass", "energy", "dissipation", "entropy", "min_u", "negativity")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    dissipation: float
    entropy: float
    min_u: float
    negativity: float
    # integral of grad omega . grad u, the entropy production density
    entropy_flux: float

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def evaluate(grid: Grid, u: np.ndarray, theta: float, kappa: float, spec: PotentialSpec,
             dealias: bool = True, t: float = 0.0) -> DiagnosticsRecord:
    if not theta > 0:
        raise ValueError("theta must be positive")
    uh = grid.forward(u)
    wh = chemical_potential_coeffs(grid, u, uh, spec, kappa, dealias)
    mob = kernels.mobility_reg(u, theta)
    dissipation = 0.0
    flux = 0.0
    for ik in grid.derivative_symbols():
        gw = grid.inverse(ik * wh)
        gu = grid.inverse(ik * uh)
        dissipation += float(np.sum(mob * gw * gw))
        flux += float(np.sum(gw * gu))
    cell = grid.cell
    return DiagnosticsRecord(
        t=float(t),
        mass=float(grid.volume * uh.flat[0].real),
        energy=free_energy_arrays(grid, u, uh, spec, kappa),
        dissipation=cell * dissipation,
        entropy=cell * float(np.sum(kernels.entropy_reg(u, theta))),
        min_u=float(np.min(u)),
        negativity=cell * float(np.sum(kernels.negativity_density(u, theta))),
        entropy_flux=cell * flux,
    )


def record(state) -> DiagnosticsRecord:
    """Diagnostics of a :class:`~pfc_degenerate.solver.SolverState`."""
    return evaluate(state.grid, state.u, state.theta, state.kappa, state.spec,
                    state.dealias, state.t)


def _records(trajectory) -> Sequence[DiagnosticsRecord]:
    records = getattr(trajectory, "records", trajectory)
    if len(records) < 2:
        raise ValueError(f"need at least 2 samples, got {len(records)}")
    return records


def _cumulative_trapezoid(t, y):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


def energy_inequality_residual(trajectory) -> np.ndarray:
    """F(u(t)) + int_0^t dissipation - F(u0) at every recorded sample."""
    recs = _records(trajectory)
    t = np.array([r.t for r in recs])
    energy = np.array([r.energy for r in recs])
    diss = np.array([r.dissipation for r in recs])
    return energy + _cumulative_trapezoid(t, diss) - energy[0]


def entropy_balance_residual(trajectory) -> np.ndarray:
    """[S(t) - S(0)] + int_0^t int grad omega . grad u at every sample, S = int Phi_theta(u)."""
    recs = _records(trajectory)
    t = np.array([r.t for r in recs])
    ent = np.array([r.entropy for r in recs])
    flux = np.array([r.entropy_flux for r in recs], dtype=np.float64)
    if not np.all(np.isfinite(flux)):
        raise ValueError("trajectory lacks the grad omega . grad u integrals")
    return (ent - ent[0]) + _cumulative_trapezoid(t, flux)


def negativity_sup(trajectory) -> float:
    """Largest recorded int |(u)_- + theta|^2, the stand-in for the ess sup in time."""
    return max(r.negativity for r in _records(trajectory))


# --------------------------------------------------------------------------
# growth conditions
# --------------------------------------------------------------------------

@dataclass
class GrowthReport:
    feasible: bool
    m: int
    b1: Optional[float] = None
    b2: Optional[float] = None
    b3: Optional[float] = None
    b4: Optional[float] = None
    violations: list = field(default_factory=list)

    def summary(self) -> str:
        if self.feasible:
            return (f"feasible (m={self.m}): b1={self.b1:.6g} b2={self.b2:.6g} "
                    f"b3={self.b3:.6g} b4={self.b4:.6g}")
        lines = [f"violated (m={self.m}):"]
        lines += [f"  {v['condition']} at z={v['z']:.6g}: {v['reason']}" for v in self.violations]
        return "\n".join(lines)


_TINY = 1e-12


def _worst(deficit: np.ndarray, z: np.ndarray, edge: np.ndarray):
    """Largest deficit, and whether it sits on the edge of the sampled range.

    A worst case on the edge means the deficit still grows with |z|: no finite
    additive constant can absorb it beyond the sample range.
    """
    i = int(np.argmax(deficit))
    top = deficit[i]
    slack = 1e-9 * max(1.0, abs(top))
    on_edge = bool(np.any(edge & (deficit >= top - slack))) and not np.all(edge)
    return float(top), on_edge, float(z[i])


def _tail_exponents(func, zmax: float):
    """Power-law exponent of ``func`` far outside the sampled range, per side.

    Evaluated between |z| = 100 R and 1000 R, where lower-order polynomial
    terms no longer bias the estimate.  Returns ``[(z, g(z), exponent)]``;
    the exponent is None when g is not positive at both probes.
    """
    out = []
    for sign in (-1.0, 1.0):
        z_near, z_far = sign * 1e2 * zmax, sign * 1e3 * zmax
        g_near, g_far = float(func(z_near)), float(func(z_far))
        p = float(np.log10(g_far / g_near)) if g_far > 0 and g_near > 0 else None
        out.append((z_far, g_far, p))
    return out


def growth_check(spec: PotentialSpec, m: int = 2, z_range=(-10.0, 10.0), samples: int = 10_000,
                 epsilon: Optional[float] = None, grid_points: int = 64) -> GrowthReport:
    """Search for positive b1..b4 with

        b1 z^(2m) - b2 <= W(z) + eps z^2 / 2 <= b3 z^(2m) + b4
        |W'(z)| <= b3 |z|^(2m-1) + b4
        b1 z^(2m-2) - b2 <= W''(z) <= b3 z^(2m-2) + b4

    at every sample.

    Two screens run.  First, each bounded function's power-law exponent far
    beyond the range (see ``_tail_exponents``) must exceed the bound's degree
    minus one (lower bounds, which also need positivity there) or stay below
    its degree plus one (upper bounds); polynomial degrees are integers, so
    this separates "grows like z^p" from "grows slower/faster".  Second, b1 is swept down a log grid
    and the largest value whose deficit peaks strictly inside the range is
    kept, b3 likewise upward; b2 and b4 are the smallest constants closing the
    inequalities at the samples.
    """
    if not (isinstance(m, (int, np.integer)) and m > 1):
        raise ValueError(f"m must be an integer > 1, got {m}")
    lo, hi = float(z_range[0]), float(z_range[1])
    if lo > hi:
        raise ValueError(f"empty range {z_range}")
    eps = spec.epsilon if epsilon is None else epsilon
    z = np.linspace(lo, hi, int(samples)) if samples > 1 else np.array([0.5 * (lo + hi)])
    z = np.unique(z)
    az = np.abs(z)
    zmax = float(az.max())
    edge = az >= zmax if zmax > 0 else np.zeros_like(az, dtype=bool)

    W = np.atleast_1d(potential_eval(spec, z, 0))
    Wp = np.atleast_1d(potential_eval(spec, z, 1))
    Wpp = np.atleast_1d(potential_eval(spec, z, 2))
    f = W + 0.5 * eps * z**2
    p_hi, p_mid, p_lo = az ** (2 * m), az ** (2 * m - 1), az ** (2 * m - 2)

    report = GrowthReport(feasible=False, m=int(m))

    def shifted(x):
        return potential_eval(spec, x, 0) + 0.5 * eps * x * x

    screens = [
        ("grow-1 lower", shifted, 2 * m, "lower"),
        ("grow-3 lower", lambda x: potential_eval(spec, x, 2), 2 * m - 2, "lower"),
        ("grow-1 upper", shifted, 2 * m, "upper"),
        ("grow-2", lambda x: abs(potential_eval(spec, x, 1)), 2 * m - 1, "upper"),
        ("grow-3 upper", lambda x: potential_eval(spec, x, 2), 2 * m - 2, "upper"),
    ]
    for name, g, degree, kind in screens:
        if zmax == 0:
            break
        for z_edge, g_edge, p in _tail_exponents(g, zmax):
            if kind == "lower":
                if p is None or p <= degree - 1:
                    grows = "is not positive" if p is None else f"grows like |z|^{p:.2f}"
                    report.violations.append({
                        "condition": name, "z": z_edge,
                        "reason": f"bounded function {grows} asymptotically; "
                                  f"needs growth of order |z|^{degree}"})
            elif g_edge > 0 and p is not None and p >= degree + 1:
                report.violations.append({
                    "condition": name, "z": z_edge,
                    "reason": f"bounded function grows like |z|^{p:.2f}, faster than |z|^{degree}"})

    candidates = np.logspace(3, -8, grid_points)
    lower = None
    for b1 in candidates:
        d1, e1, _ = _worst(b1 * p_hi - f, z, edge)
        d3, e3, _ = _worst(b1 * p_lo - Wpp, z, edge)
        if not (e1 or e3):
            lower = (float(b1), max(d1, d3, _TINY))
            break
    upper = None
    for b3 in candidates[::-1]:
        d1, e1, _ = _worst(f - b3 * p_hi, z, edge)
        d2, e2, _ = _worst(np.abs(Wp) - b3 * p_mid, z, edge)
        d3, e3, _ = _worst(Wpp - b3 * p_lo, z, edge)
        if not (e1 or e2 or e3):
            upper = (float(b3), max(d1, d2, d3, _TINY))
            break
    if lower is None and not any("lower" in v["condition"] for v in report.violations):
        report.violations.append({"condition": "grow-1/grow-3 lower", "z": zmax,
                                  "reason": "no b1 on the search grid keeps the deficit inside the range"})
    if upper is None and not any("lower" not in v["condition"] for v in report.violations):
        report.violations.append({"condition": "upper bounds", "z": zmax,
                                  "reason": "no b3 on the search grid keeps the excess inside the range"})
    if not report.violations and lower is not None and upper is not None:
        report.feasible = True
        report.b1, report.b2 = lower
        report.b3, report.b4 = upper
    return report
