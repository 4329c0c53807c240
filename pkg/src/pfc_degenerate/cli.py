"""Command-line entry point: ``pfc {run,sweep,verify,linear-test,growth-check}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import _accel
from .config import ConfigError, load_config
from .diagnostics import growth_check
from .physics import POTENTIAL_KINDS, PotentialSpec
from .solver import CheckpointError, StepSizeUnderflow

log = logging.getLogger("pfc_degenerate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pfc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one trajectory")
    p.add_argument("config", help="TOML configuration file")
    p.add_argument("--output-dir", help="overrides output_dir from the config")
    p.add_argument("--resume", metavar="CKPT", help="continue from a snapshot of this run")
    p.add_argument("--max-steps", type=int, help="stop after this many steps of this invocation")

    p = sub.add_parser("sweep", help="theta -> 0 continuation study")
    p.add_argument("config", help="TOML configuration file")
    p.add_argument("--output-dir")
    p.add_argument("--workers", type=int, help=f"process count (default PFC_THREADS={_accel.threads()})")

    p = sub.add_parser("verify", help="run the acceptance checks and print a pass/fail table")
    p.add_argument("--quick", action="store_true", help="skip the theta sweep checks")

    p = sub.add_parser("linear-test", help="exact decay of a single Fourier mode with W = 0")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--t-final", type=float, default=0.1)
    p.add_argument("--amplitude", type=float, default=1e-4)
    p.add_argument("--wavenumber", type=int, default=2)
    p.add_argument("--scheme", choices=("etd1", "etdrk2"), default="etdrk2")
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("growth-check", help="fit the growth constants of a potential")
    p.add_argument("--potential", choices=POTENTIAL_KINDS, default="quartic_example")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--gamma", type=float)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--range", type=float, nargs=2, default=(-10.0, 10.0), metavar=("ZMIN", "ZMAX"))
    p.add_argument("--samples", type=int, default=10_000)
    return parser


def _load(parser, path, command):
    if not Path(path).is_file():
        parser.error(f"config file not found: {path}")
    try:
        return load_config(path, command)
    except ConfigError as exc:
        parser.error(str(exc))


def cmd_run(parser, args) -> int:
    from .output import run_to_directory

    cfg = _load(parser, args.config, "run")
    out = args.output_dir or cfg.output_dir
    try:
        traj = run_to_directory(cfg, out, resume=args.resume, max_steps=args.max_steps)
    except StepSizeUnderflow as exc:
        print(f"error: {exc}; state written to {exc.dump_path}", file=sys.stderr)
        return 1
    except (CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    st = traj.final_state
    print(f"t={st.t:.6g} after {st.step_index} steps; output in {out}")
    return 0


def cmd_sweep(parser, args) -> int:
    from .output import sweep_to_directory
    from .sweep import SweepError

    cfg = _load(parser, args.config, "sweep")
    out = args.output_dir or cfg.output_dir
    try:
        result = sweep_to_directory(cfg, out, workers=args.workers)
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for row in result.summary_rows():
        print(f"theta={row['theta']:<10.4g} N={row['N_theta']:.4e}  min_u={row['min_u']:+.4e}  "
              f"cauchy={row['max_cauchy_to_prev']:.4e}")
    if result.fit is not None:
        print(f"scaling fit C={result.fit.c_fit:.4e} ({'consistent' if result.fit.passed else 'not consistent'})")
    return 0


def cmd_verify(parser, args) -> int:
    from .verification import ALL_CHECKS, SLOW

    ok = True
    for check in ALL_CHECKS:
        if args.quick and check in SLOW:
            print(f"[SKIP] {check.check_name}")
            continue
        res = check()
        ok &= res.passed
        print(res.line(), flush=True)
    print("all checks passed" if ok else "some checks FAILED")
    return 0 if ok else 1


def cmd_linear_test(parser, args) -> int:
    from .verification import linear_decay_test

    rep = linear_decay_test(n=args.n, kappa=args.kappa, dt=args.dt, t_final=args.t_final,
                            amplitude=args.amplitude, wavenumber=args.wavenumber, scheme=args.scheme)
    print(f"mode k={rep.wavenumber}: expected decay rate {rep.expected_rate:.10g}")
    print(f"max relative decay-rate error  {rep.max_rate_error:.3e}")
    print(f"relative amplitude error at t={rep.t_final:.6g}  {rep.amplitude_error:.3e}")
    worst = max(rep.max_rate_error, rep.amplitude_error)
    ok = worst <= args.tol
    print(("PASS" if ok else "FAIL") + f" (tol {args.tol:g})")
    return 0 if ok else 1


def cmd_growth_check(parser, args) -> int:
    try:
        spec = PotentialSpec(args.potential, epsilon=args.epsilon, gamma=args.gamma, kappa=args.kappa)
        rep = growth_check(spec, m=args.m, z_range=tuple(args.range), samples=args.samples)
    except ValueError as exc:
        parser.error(str(exc))
    print(rep.summary())
    return 0 if rep.feasible else 1


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify,
            "linear-test": cmd_linear_test, "growth-check": cmd_growth_check}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](parser, args)


if __name__ == "__main__":
    sys.exit(main())
