"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 1000 4000] [--repeat 5]

Prints best-of-``repeat`` wall times per call and the speed-up.  The
end-to-end row times a short Crank-Nicolson evolution with each backend.
"""

import argparse
import timeit

import numpy as np

from magheat import _kernels_py, kernels

try:
    from magheat import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def pencil(n, rng):
    ko = rng.uniform(-1.0, 0.0, n - 1)
    kd = 2.5 + rng.uniform(0.0, 1.0, n)
    return kd, ko, np.full(n, 2.0 / 3.0), np.full(n - 1, 1.0 / 6.0)


def best(stmt, repeat, number):
    return min(timeit.repeat(stmt, repeat=repeat, number=number)) / number


def kernel_rows(n, repeat):
    rng = np.random.default_rng(0)
    kd, ko, md, mo = pencil(n, rng)
    shifts = np.ascontiguousarray(np.linspace(0.0, 5.0, 16))
    rhs = rng.normal(size=n)
    col = rng.normal(size=(n, 1))
    rows = []
    for name, call in (
        ("sturm_counts (16 shifts)", lambda m: m.sturm_counts(kd, ko, md, mo, shifts)),
        ("tridiag_solve", lambda m: m.tridiag_solve(ko, kd, ko, rhs)),
        ("cn_step (1 column)", lambda m: m.cn_step(kd, ko, md, mo, 1e-3, col.copy())),
    ):
        t_py = best(lambda: call(_kernels_py), repeat, 20)
        t_cy = best(lambda: call(_kernels_cy), repeat, 20) if _kernels_cy else float("nan")
        rows.append((name, n, t_py, t_cy))
    return rows


def evolution_row(n, repeat):
    from magheat.fields import FieldSpec, make_field, total_flux
    from magheat.heat import HeatStepper, InitialDatum, initial_mode_projection
    from magheat.radial import ModeAssembler, RadialGrid

    asm = ModeAssembler(RadialGrid(n=n).nodes)
    stepper = HeatStepper(total_flux(make_field(2, FieldSpec("radial-bump", flux=0.5))), asm)

    def evolve():
        state = initial_mode_projection(InitialDatum(), m_range=4, assembler=asm)
        for _ in range(100):
            stepper.step(state, 1e-3, inplace=True)

    original = kernels.cn_step
    try:
        kernels.cn_step = _kernels_py.cn_step
        t_py = best(evolve, repeat, 1)
        t_cy = float("nan")
        if _kernels_cy is not None:
            kernels.cn_step = _kernels_cy.cn_step
            t_cy = best(evolve, repeat, 1)
    finally:
        kernels.cn_step = original
    return ("100 CN steps, 9 modes", n, t_py, t_cy)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 4000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels_cy is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':<26}{'n':>6}{'python [ms]':>14}{'cython [ms]':>14}{'speed-up':>10}")
    for n in args.sizes:
        for name, size, t_py, t_cy in kernel_rows(n, args.repeat) + [evolution_row(n, args.repeat)]:
            print(f"{name:<26}{size:>6}{1e3 * t_py:>14.3f}{1e3 * t_cy:>14.3f}{t_py / t_cy:>10.1f}")


if __name__ == "__main__":
    main()
