import math

import numpy as np
import pytest

from pfc_degenerate.solver import InitialCondition, Trajectory, run
from pfc_degenerate.spectral import Grid
from pfc_degenerate.sweep import (DEFAULT_THETAS, Scenario, SweepPlan, bound_envelope,
                                  cauchy_metric, h1_distance, run_theta, scaling_fit, sweep)
from pfc_degenerate.verification import positivity_sweep

SMALL = Scenario(n=32, t_final=0.05, dt_initial=1e-3, dt_max=1e-3, diagnostics_interval=1)
TIMES = (0.0, 0.025, 0.05)


def test_default_thetas():
    assert SweepPlan().thetas == DEFAULT_THETAS


@pytest.mark.parametrize("thetas", [(0.1, 0.2), (0.1, 0.0), (1.0, 0.1), ()])
def test_plan_rejects_bad_sequences(thetas):
    with pytest.raises(ValueError):
        SweepPlan(thetas=thetas, scenario=SMALL)


def test_plan_requires_positive_initial_data():
    bad = Scenario(n=32, initial=InitialCondition("constant_plus_sine", c=0.2, amplitude=0.3))
    with pytest.raises(ValueError, match="positivity"):
        SweepPlan(scenario=bad)


def test_plan_sample_times_in_range():
    with pytest.raises(ValueError):
        SweepPlan(scenario=SMALL, sample_times=(0.0, 1.0))


def test_single_theta_equals_plain_run():
    plan = SweepPlan(thetas=(0.05,), scenario=SMALL, sample_times=TIMES)
    res = sweep(plan, workers=1)
    state, config = SMALL.prepare(0.05)
    plain = run(state, config, diagnostics_interval=1, sample_times=TIMES)
    assert np.array_equal(res.runs[0].trajectory.final_state.u, plain.final_state.u)
    assert res.runs[0].trajectory.records == plain.records


def test_equal_thetas_zero_distance():
    plan = SweepPlan(thetas=(0.05, 0.05), scenario=SMALL, sample_times=TIMES)
    res = sweep(plan, workers=1)
    assert res.cauchy_to_prev[1] == 0.0


def test_parallel_matches_serial():
    plan = SweepPlan(thetas=(0.1, 0.03, 0.01), scenario=SMALL, sample_times=TIMES)
    serial = sweep(plan, workers=1)
    parallel = sweep(plan, workers=3)
    for a, b in zip(serial.runs, parallel.runs):
        assert a.theta == b.theta
        assert np.array_equal(a.trajectory.final_state.u, b.trajectory.final_state.u)
        assert a.trajectory.records == b.trajectory.records


def _fake(grid, fields, times):
    return Trajectory(grid=grid, sample_times=list(times), samples=list(fields))


def test_cauchy_identical_and_shifted():
    for dim, n in ((1, 32), (2, 16)):
        g = Grid(dim, n)
        rng = np.random.default_rng(0)
        fields = [rng.standard_normal(g.shape) for _ in range(3)]
        a = _fake(g, fields, (0.0, 0.5, 1.0))
        assert cauchy_metric(a, a) == 0.0
        c = 0.3
        b = _fake(g, [f + c for f in fields], (0.0, 0.5, 1.0))
        assert cauchy_metric(a, b) == pytest.approx(c * (2 * math.pi) ** (dim / 2), rel=1e-12)


def test_cauchy_mismatched_sampling():
    g = Grid(1, 16)
    a = _fake(g, [np.zeros(16)] * 2, (0.0, 1.0))
    b = _fake(g, [np.zeros(16)] * 2, (0.0, 0.5))
    with pytest.raises(ValueError):
        cauchy_metric(a, b)
    with pytest.raises(ValueError):
        cauchy_metric(a, a, sample_times=(0.25,))
    with pytest.raises(ValueError):
        cauchy_metric(a, _fake(Grid(1, 32), [np.zeros(32)] * 2, (0.0, 1.0)))


def test_h1_distance_of_mode():
    g = Grid(1, 64)
    x = g.coordinates()[0]
    # ||sin 2x|| = sqrt(pi), ||2 cos 2x|| = 2 sqrt(pi)
    assert h1_distance(g, np.sin(2 * x), 0 * x) == pytest.approx(3 * math.sqrt(math.pi), rel=1e-13)


def test_scaling_fit_nonnegative_solution():
    thetas = np.array(DEFAULT_THETAS)
    fit = scaling_fit(thetas, thetas**2 * 2 * math.pi)
    assert fit.passed and fit.c_fit <= 2 * math.pi


def test_scaling_fit_outgrows_envelope():
    thetas = np.array(DEFAULT_THETAS)
    assert not scaling_fit(thetas, thetas**0.1).passed


def test_scaling_fit_errors():
    with pytest.raises(ValueError):
        scaling_fit([0.1, 0.01], [1.0, 1.0])
    with pytest.raises(ValueError):
        scaling_fit([0.1, 0.1, 0.01], [1.0, 1.0, 1.0])


def test_scaling_fit_order_independent():
    thetas = [0.001, 0.1, 0.01, 0.003, 0.03]
    vals = [bound_envelope(t) * c for t, c in zip(thetas, [0.1, 0.5, 0.2, 0.1, 0.3])]
    fit = scaling_fit(thetas, vals)
    assert fit.thetas == (0.1, 0.03, 0.01, 0.003, 0.001)
    assert fit.c_coarse == pytest.approx(0.5) and fit.passed


def test_run_theta_records_wall_time():
    r = run_theta(SMALL, 0.05, TIMES)
    assert r.wall_time > 0 and r.min_u > 0


def test_default_positivity_sweep_trends():
    res = positivity_sweep()
    n_theta = [r.negativity_sup for r in res.runs]
    assert all(b <= a for a, b in zip(n_theta, n_theta[1:]))
    rows = res.summary_rows()
    assert [r["theta"] for r in rows] == list(DEFAULT_THETAS)
    assert math.isnan(rows[0]["max_cauchy_to_prev"])
    for r in rows:
        assert r["C_ratio"] == pytest.approx(r["N_theta"] / bound_envelope(r["theta"]))
