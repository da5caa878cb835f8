"""Compiled core vs pure-Python fallback on the three hot loops.

    python3 benchmarks/bench_core.py [--repeat 5]

Each row reports the best wall time over ``--repeat`` runs for both
implementations and the speed-up.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ups import _pycore, backend
from ups.models import RwmhConfig, load_leukemia, pgg_kernel, rwmh_kernel, synthetic_logistic
from ups.paths import doublewell_path


def _best(fn, repeat):
    times = []
    for r in range(repeat):
        rng = np.random.default_rng(r)
        t0 = time.perf_counter()
        fn(rng)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    c = np.linspace(0.0, 5.0, 20_000)
    yield "pg_draw (20k draws)", lambda impl: (lambda rng: impl.pg_draw(c, rng))

    dw = rwmh_kernel(doublewell_path(), 0.5, RwmhConfig.isotropic(np.sqrt(2.0), [-2.0, -2.0], 1.0))
    target, chol = dw.target, dw.cfg.proposal_chol

    def rwmh(impl):
        def run(rng):
            for _ in range(50):
                x0, y0 = dw.initial_sampler(rng), dw.initial_sampler(rng)
                impl.rwmh_run(target, x0, y0, chol, False, 200, 100_000, rng)
        return run
    yield "rwmh_run (double well, 50 runs, m=200)", rwmh

    for name, model in (("leukemia", load_leukemia()), ("synthetic n=1000", synthetic_logistic(1))):
        kern = pgg_kernel(model, 0.5)

        def pgg(impl, kern=kern):
            def run(rng):
                for _ in range(5):
                    x0, y0 = kern.initial_sampler(rng), kern.initial_sampler(rng)
                    impl.pgg_run(kern.design, kern.scales, kern.lin_term, kern.prior_prec,
                                 x0, y0, 50, 100_000, rng)
            return run
        yield f"pgg_run ({name}, 5 runs, m=50)", pgg


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not backend.NATIVE:
        print("compiled core not available; only the fallback can run")
    print(f"{'case':45s} {'python [s]':>11s} {'compiled [s]':>13s} {'speed-up':>9s}")
    for label, make in cases():
        t_py = _best(make(_pycore), args.repeat)
        if backend.NATIVE:
            t_c = _best(make(backend.implementation(True)), args.repeat)
            print(f"{label:45s} {t_py:11.4f} {t_c:13.4f} {t_py / t_c:8.1f}x")
        else:
            print(f"{label:45s} {t_py:11.4f} {'-':>13s} {'-':>9s}")


if __name__ == "__main__":
    main()
