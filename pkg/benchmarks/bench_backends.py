#!/usr/bin/env python3
"""Benchmark the compiled counting kernel against the numpy fallback.

Times the two hot loops (telegraph-wave and Gaussian sign-pair counting)
and a full four-pairing CHSH run on each backend, and reports throughput
plus the compiled/fallback speedup.  The backends draw identical streams,
so the counts are also cross-checked for equality.

Usage: python benchmarks/bench_backends.py [--trials N] [--repeat K]
"""

import argparse
import time

from numpy.random import PCG64, SeedSequence

from chshsim._kernels import _fallback

try:
    from chshsim._kernels import _core
except ImportError:
    _core = None


def make_bitgen(seed=1234, key=(0, 0)):
    return PCG64(SeedSequence(entropy=seed, spawn_key=key))


def best_time(func, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = func()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_kernels(trials, repeat):
    cases = [
        ("rtw counts (r=0.8)", "rtw_pair_counts", 0.9),
        ("gaussian counts (rho=0.7)", "gaussian_pair_counts", 0.7),
    ]
    backends = [("fallback", _fallback)]
    if _core is not None:
        backends.insert(0, ("compiled", _core))

    print(f"trials per call: {trials:,}\n")
    print(f"{'kernel':<28} {'backend':<9} {'time':>9} {'Mtrials/s':>10}")
    for label, func_name, param in cases:
        times = {}
        counts = {}
        for name, module in backends:
            func = getattr(module, func_name)
            elapsed, result = best_time(
                lambda f=func: f(make_bitgen(), trials, param), repeat
            )
            times[name] = elapsed
            counts[name] = result
            print(f"{label:<28} {name:<9} {elapsed:>8.3f}s {trials / elapsed / 1e6:>10.1f}")
        if len(counts) == 2:
            assert counts["compiled"] == counts["fallback"], "backends disagree"
            print(f"{'':<28} speedup  {times['fallback'] / times['compiled']:>9.2f}x"
                  "   (counts identical)")
        print()


def bench_full_run(trials, repeat):
    import importlib
    import os

    print(f"full CHSH run ({trials:,} trials/pairing, 4 pairings)")
    for backend in ("compiled", "fallback"):
        if backend == "compiled" and _core is None:
            continue
        os.environ["CHSHSIM_BACKEND"] = backend
        import chshsim._kernels
        importlib.reload(chshsim._kernels)
        import chshsim.noise
        importlib.reload(chshsim.noise)
        import chshsim.estimators
        importlib.reload(chshsim.estimators)

        def run(mod=chshsim.estimators):
            return mod.mc_chsh(
                0.8, mod.STANDARD_ANGLES, trials, seed=99, threads=1
            )

        elapsed, result = best_time(run, repeat)
        print(f"  {backend:<9} {elapsed:>8.3f}s  S = {result.s_value:.6f}")
    os.environ.pop("CHSHSIM_BACKEND", None)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=4_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _core is None:
        print("note: compiled kernel unavailable, benchmarking fallback only\n")
    bench_kernels(args.trials, args.repeat)
    bench_full_run(args.trials // 4, args.repeat)


if __name__ == "__main__":
    main()
