#!/usr/bin/env python3
"""Time the hot kernels on both backends.

Spawns one worker subprocess per backend (the backend is chosen at
import time from SOFTDETECT_NUMBA), times each kernel after a warmup
pass, and prints a side-by-side table with speedups.

    python3 benchmarks/bench_kernels.py [--repeats 7] [--batch 512]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _workloads(batch: int):
    rng = np.random.default_rng(0)
    activations = rng.normal(size=(batch, 784))
    image = rng.uniform(size=(28, 28))
    from softdetect._kernels import affine_bilinear, blur2d, gelu, gelu_grad

    return {
        f"gelu ({batch}x784)": lambda: gelu(activations),
        f"gelu_grad ({batch}x784)": lambda: gelu_grad(activations),
        "blur2d (28x28, sigma 1.0)": lambda: blur2d(image, 1.0),
        "affine_bilinear (28x28, 30 deg)": lambda: affine_bilinear(image, 30.0),
    }


def _run_worker(repeats: int, batch: int) -> None:
    from softdetect._kernels import backend_name

    results = {"backend": backend_name(), "timings": {}}
    for name, fn in _workloads(batch).items():
        fn()  # warmup; also triggers jit compilation on the numba path
        best = min(
            _timed(fn) for _ in range(repeats)
        )
        results["timings"][name] = best
    print(json.dumps(results))


def _timed(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def _spawn(flag: str, repeats: int, batch: int) -> dict:
    env = dict(os.environ, SOFTDETECT_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, __file__, "--worker",
         "--repeats", str(repeats), "--batch", str(batch)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--batch", type=int, default=512)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        _run_worker(args.repeats, args.batch)
        return 0

    numpy_res = _spawn("0", args.repeats, args.batch)
    numba_res = _spawn("1", args.repeats, args.batch)
    if numba_res["backend"] != "numba":
        print("numba is not importable here; showing the numpy backend only\n")
        numba_res = None

    width = max(len(k) for k in numpy_res["timings"])
    header = f"{'kernel':<{width}}  {'numpy':>10}"
    if numba_res:
        header += f"  {'numba':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, np_time in numpy_res["timings"].items():
        line = f"{name:<{width}}  {np_time * 1e6:>8.1f}us"
        if numba_res:
            nb_time = numba_res["timings"][name]
            line += f"  {nb_time * 1e6:>8.1f}us  {np_time / nb_time:>7.2f}x"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
