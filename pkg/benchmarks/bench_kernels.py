"""Compare the numba and numpy implementations of the pointwise kernels.

Also times one full right-hand-side evaluation so the kernel share of a step
can be read off: FFTs dominate, which is why only pointwise work is compiled.

    python benchmarks/bench_kernels.py --sizes 4096 262144 --repeat 20
"""

import argparse
import timeit

import numpy as np

from pfc_degenerate import _accel, kernels
from pfc_degenerate.physics import PotentialSpec
from pfc_degenerate.solver import SolverState, rhs
from pfc_degenerate.spectral import Grid


def best(fn, repeat):
    fn()  # warm-up, includes numba compilation
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    cases = [
        ("W'(u) quartic", lambda m, u: m["potential"](u, 0, 1, 0.2, 0.0, 1.0)),
        ("M_theta(u)", lambda m, u: m["mobility"](u, 0.05)),
        ("Phi_theta(u)", lambda m, u: m["entropy"](u, 0.05)),
        ("negativity density", lambda m, u: m["negativity"](u, 0.05)),
    ]
    impls = {"numpy": dict(potential=kernels._potential_np, mobility=kernels._mobility_reg_np,
                           entropy=kernels._entropy_reg_np, negativity=kernels._negativity_density_np)}
    if _accel.USE_NUMBA:
        impls["numba"] = dict(potential=kernels._potential_nb, mobility=kernels._mobility_reg_nb,
                              entropy=kernels._entropy_reg_nb,
                              negativity=kernels._negativity_density_nb)
    print(f"{'kernel':<20} {'points':>9} " + " ".join(f"{k + ' [us]':>12}" for k in impls) + "   speedup")
    for name, call in cases:
        for size in sizes:
            u = 1.0 + 0.5 * rng.standard_normal(size)
            times = {k: best(lambda m=m: call(m, u), repeat) for k, m in impls.items()}
            speed = times["numpy"] / times["numba"] if "numba" in times else float("nan")
            print(f"{name:<20} {size:>9} " + " ".join(f"{t * 1e6:>12.1f}" for t in times.values())
                  + f"   {speed:7.2f}x")


def bench_rhs(dim, n, repeat):
    g = Grid(dim, n)
    u = 1.0 + 0.2 * np.random.default_rng(1).standard_normal(g.shape)
    state = SolverState(grid=g, u=u, theta=0.05, kappa=1.0,
                        spec=PotentialSpec("quartic_example", epsilon=0.2), dt=1e-3)
    total = best(lambda: rhs(state), repeat)
    pointwise = best(lambda: (kernels.potential(u, 0, 1, 0.2), kernels.mobility_reg(u, 0.05)), repeat)
    print(f"rhs on {dim}D n={n} ({_accel.backend_name()} kernels): {total * 1e3:.3f} ms, "
          f"pointwise kernels {pointwise * 1e3:.3f} ms ({100 * pointwise / total:.1f}%)")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[4096, 65536, 262144])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)
    print(f"backend selected at import: {_accel.backend_name()}")
    bench_kernels(args.sizes, args.repeat)
    for dim, n in ((1, 1024), (2, 128), (3, 64)):
        bench_rhs(dim, n, max(3, args.repeat // 4))


if __name__ == "__main__":
    main()
