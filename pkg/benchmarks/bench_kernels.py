"""Compare the compiled and pure-Python Lindblad kernels.

Times one right-hand-side evaluation and one full propagation per backend::

    python benchmarks/bench_kernels.py --alpha 2 3 --repeat 50
"""

import argparse
import time

import numpy as np

from qbattery import kernels
from qbattery.dynamics import FrameGenerator, propagate
from qbattery.model import SystemParams, build_initial_state


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, nargs="+", default=[2.0, 3.0])
    ap.add_argument("--repeat", type=int, default=30)
    ap.add_argument("--t-max", type=float, default=15.0, help="propagation length in lambda t")
    ap.add_argument("--skip-propagation", action="store_true")
    args = ap.parse_args(argv)

    backends = sorted(kernels.BACKENDS)
    if "compiled" not in backends:
        print("compiled extension not built; timing the python backend only")
    rng = np.random.default_rng(0)
    print(f"{'alpha':>5} {'dim':>4} {'backend':>9} {'rhs [ms]':>9} {'propagate [s]':>14}")
    for alpha in args.alpha:
        p = SystemParams(alpha=alpha, zeta=0.5, kappa=0.6, gamma=0.4)
        gen = FrameGenerator.for_params(p)
        n = gen.dim
        y = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        rho0 = build_initial_state(p)
        grid = np.linspace(0, args.t_max, 600) / p.lam
        for name in backends:
            rhs = best_of(lambda: gen.rhs(0.3, y, name), args.repeat) * 1e3
            prop = "-"
            if not args.skip_propagation:
                secs = best_of(lambda: propagate(rho0, p, grid, backend=name, diagnostics=False,
                                                 observer=lambda t, s: None), 1)
                prop = f"{secs:.2f}"
            print(f"{alpha:5g} {n:4d} {name:>9} {rhs:9.3f} {prop:>14}")
        ops = (gen.a_op.to_dense(0.3), [j.to_dense(0.3) for j in gen.jumps])
        dense = best_of(lambda: _dense_rhs(*ops, y), args.repeat) * 1e3
        print(f"{alpha:5g} {n:4d} {'dense':>9} {dense:9.3f} {'-':>14}")


def _dense_rhs(a, jumps, y):
    # same sandwich with dense matmuls, for reference
    out = a @ y + y @ a.conj().T
    for j in jumps:
        out += j @ y @ j.conj().T
    return out


if __name__ == "__main__":
    main()
