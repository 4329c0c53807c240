"""On-disk layout of runs and sweeps.

    output_dir/config.echo
    output_dir/diagnostics.csv
    output_dir/snapshots/step_<k>.pfc
    output_dir/failure_dump.pfc          (only after a step-size underflow)

Sweeps write one such directory per theta plus ``sweep_summary.csv``.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Optional

from .config import RunConfig
from .diagnostics import CSV_COLUMNS
from .solver import (CheckpointError, StepSizeUnderflow, checkpoint_load, checkpoint_save, run)
from .sweep import SUMMARY_COLUMNS, SweepPlan, sweep

log = logging.getLogger(__name__)


def fmt(value) -> str:
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def csv_row(step: int, dt: float, rec) -> str:
    return ",".join([fmt(int(step)), fmt(rec.t), fmt(dt), fmt(rec.mass), fmt(rec.energy),
                     fmt(rec.dissipation), fmt(rec.entropy), fmt(rec.min_u),
                     fmt(rec.negativity)]) + "\n"


HEADER = ",".join(CSV_COLUMNS) + "\n"


def snapshot_path(output_dir, step_index: int) -> Path:
    return Path(output_dir) / "snapshots" / f"step_{step_index}.pfc"


def _truncate_rows(csv_path: Path, last_step: int) -> str:
    """Header plus the rows with step <= last_step."""
    lines = csv_path.read_text().splitlines(keepends=True)
    if not lines or lines[0] != HEADER:
        raise ValueError(f"{csv_path}: unexpected header")
    kept = [lines[0]]
    for line in lines[1:]:
        if int(line.split(",", 1)[0]) <= last_step:
            kept.append(line)
    return "".join(kept)


def run_to_directory(cfg: RunConfig, output_dir=None, resume: Optional[str] = None,
                     max_steps: Optional[int] = None):
    """Execute one run, streaming diagnostics and snapshots into ``output_dir``."""
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(cfg.echo())
    u0 = cfg.initial_values()
    scheme = cfg.scheme_config(u0)
    csv_path = out / "diagnostics.csv"

    if resume is not None:
        state = checkpoint_load(resume, dealias=cfg.dealias, m=cfg.m)
        _check_resume_matches(cfg, state)
        head = _truncate_rows(csv_path, state.step_index) if csv_path.exists() else HEADER
        record_initial = not csv_path.exists()
    else:
        state = cfg.initial_state()
        head = HEADER
        record_initial = True

    with open(csv_path, "w", newline="") as fh:
        fh.write(head)

        def on_record(st, rec, dt_used):
            fh.write(csv_row(st.step_index, dt_used, rec))

        def on_step(st):
            if cfg.snapshot_interval and st.step_index % cfg.snapshot_interval == 0:
                checkpoint_save(st, snapshot_path(out, st.step_index))

        try:
            traj = run(state, scheme, diagnostics_interval=cfg.diagnostics_interval,
                       max_steps=max_steps, on_record=on_record, on_step=on_step,
                       record_initial=record_initial)
        except StepSizeUnderflow as exc:
            exc.dump_path = checkpoint_save(exc.state, out / "failure_dump.pfc")
            raise
    checkpoint_save(traj.final_state, snapshot_path(out, traj.final_state.step_index))
    return traj


def _check_resume_matches(cfg: RunConfig, state):
    mismatched = []
    pairs = [("dim", cfg.dim, state.grid.dim), ("n", cfg.n, state.grid.n),
             ("theta", cfg.theta, state.theta), ("kappa", cfg.kappa, state.kappa),
             ("epsilon", cfg.epsilon, state.spec.epsilon),
             ("potential", cfg.potential, state.spec.kind), ("seed", cfg.seed, state.seed)]
    for key, want, got in pairs:
        if want != got:
            mismatched.append(f"{key} (config {want!r}, checkpoint {got!r})")
    if cfg.gamma != state.spec.gamma:
        mismatched.append(f"gamma (config {cfg.gamma!r}, checkpoint {state.spec.gamma!r})")
    if mismatched:
        raise CheckpointError("checkpoint does not match configuration: " + "; ".join(mismatched))


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(fmt(row[c]) for c in SUMMARY_COLUMNS) + "\n")


def sweep_to_directory(cfg: RunConfig, output_dir=None, workers: Optional[int] = None):
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(cfg.echo())
    plan: SweepPlan = cfg.sweep_plan()

    counter = iter(range(len(plan.thetas)))

    def on_run(theta_run):
        idx = next(counter)
        sub = out / f"theta_{idx:02d}_{theta_run.theta:.6g}"
        sub.mkdir(exist_ok=True)
        traj = theta_run.trajectory
        with open(sub / "diagnostics.csv", "w", newline="") as fh:
            fh.write(HEADER)
            for step, dt, rec in zip(traj.steps, traj.dts, traj.records):
                fh.write(csv_row(step, dt, rec))
        checkpoint_save(traj.final_state, snapshot_path(sub, traj.final_state.step_index))

    result = sweep(plan, workers=workers, on_run=on_run)
    write_summary(out / "sweep_summary.csv", result.summary_rows())
    return result
