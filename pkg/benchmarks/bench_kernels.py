#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy reference backend.

Times the fused forward/backward/Adam training step over a few layer
stacks and batch sizes, which is exactly the loop `fit` runs.

    python benchmarks/bench_kernels.py [--steps 400]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from kospred._kernels import pyref

try:
    from kospred._kernels import _fast
except ImportError:
    _fast = None


STACKS = {
    "tiny 4-16-1": (16,),
    "search-scale 4-64-64-1": (64, 64),
    "reference 4-256-512-128-1": (256, 512, 128),
}
BATCHES = (8, 32, 128)


def build(widths, seed=0):
    rng = np.random.default_rng(seed)
    dims = [4, *widths, 1]
    weights = [
        np.ascontiguousarray(rng.normal(scale=0.3, size=(dims[i], dims[i + 1])))
        for i in range(len(dims) - 1)
    ]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    return weights, biases


def run_steps(backend, widths, batch, steps, seed=1):
    rng = np.random.default_rng(seed)
    weights, biases = build(widths)
    params = []
    for W, b in zip(weights, biases):
        params.extend((W, b))
    first = [np.zeros_like(p) for p in params]
    second = [np.zeros_like(p) for p in params]
    X = np.ascontiguousarray(rng.normal(size=(batch, 4)))
    y = rng.normal(size=batch) + 2.0

    start = time.perf_counter()
    for t in range(1, steps + 1):
        _, wg, bg = backend.forward_backward_mae(X, weights, biases, y)
        grads = []
        for dW, db in zip(wg, bg):
            grads.extend((dW, db))
        backend.adam_update(params, grads, first, second, t, 1e-3, 0.9, 0.999, 1e-7)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=400)
    args = parser.parse_args()

    backends = [("python", pyref)]
    if _fast is not None:
        backends.append(("cython", _fast))
    else:
        print("compiled backend not available; timing the reference only")

    header = f"{'stack':<28}{'batch':>6}" + "".join(
        f"{name + ' (steps/s)':>20}" for name, _ in backends
    )
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for label, widths in STACKS.items():
        for batch in BATCHES:
            rates = []
            for _, backend in backends:
                run_steps(backend, widths, batch, steps=20)  # warmup
                elapsed = run_steps(backend, widths, batch, steps=args.steps)
                rates.append(args.steps / elapsed)
            line = f"{label:<28}{batch:>6}" + "".join(f"{r:>20,.0f}" for r in rates)
            if len(rates) == 2:
                line += f"{rates[1] / rates[0]:>9.2f}x"
            print(line)


if __name__ == "__main__":
    main()
