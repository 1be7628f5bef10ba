"""Benchmark the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--taps 401] [--samples 131072]

Times the three hot FIR kernels (forward, input-adjoint, tap-gradient) that
dominate training runtime, plus one full forward/backward pass of the
canonical LNL model. The numpy column uses the fallback implementations
directly; the numba column is skipped when numba is unavailable.
"""

import argparse
import time

import numpy as np

from whdpd import kernels
from whdpd.dsp import SampledSignal
from whdpd.learn import wh_backward
from whdpd.model import WhModel, wh_forward


def timeit(fn, repeats=5):
    fn()  # warm-up (and JIT compile)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--taps", type=int, default=401)
    ap.add_argument("--samples", type=int, default=131072)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    x = rng.normal(size=args.samples)
    h = rng.normal(size=args.taps)
    g = rng.normal(size=args.samples)

    rows = []
    cases = [
        ("fir_same", lambda f: f(x, h),
         kernels.fir_same_numpy,
         kernels.fir_same if kernels.BACKEND == "numba" else None),
        ("fir_grad_input", lambda f: f(g, h),
         kernels.fir_grad_input_numpy,
         kernels.fir_grad_input if kernels.BACKEND == "numba" else None),
        ("fir_grad_taps", lambda f: f(g, x, args.taps),
         kernels.fir_grad_taps_numpy,
         kernels.fir_grad_taps if kernels.BACKEND == "numba" else None),
    ]
    for name, call, np_fn, nb_fn in cases:
        t_np = timeit(lambda: call(np_fn), args.repeats)
        t_nb = timeit(lambda: call(nb_fn), args.repeats) if nb_fn else None
        rows.append((name, t_np, t_nb))

    model = WhModel.lnl(args.taps, args.taps, a=0.05)
    sig = SampledSignal(x, 2)
    ref = SampledSignal(g, 2)

    def fwd_bwd():
        out, inter = wh_forward(model, sig)
        wh_backward(model, inter, ref)

    t_fb = timeit(fwd_bwd, args.repeats)

    print(f"N = {args.samples}, K = {args.taps}, "
          f"active backend = {kernels.backend()}")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}")
    for name, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{name:<16}{t_np * 1e3:>12.2f}{'n/a':>12}{'':>9}")
        else:
            print(f"{name:<16}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}"
                  f"{t_np / t_nb:>8.2f}x")
    print(f"\nLNL forward+backward (active backend): {t_fb * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
