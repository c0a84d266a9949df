"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--paths N] [--repeat R]

Both backends run the same paths; outputs are also checked for equality.
"""

import argparse
import time

import numpy as np

from mutualcover._backend import (TAG_SURVIVAL, TAG_WH_L, available_backends, compile_line,
                                  compile_model, get_kernels)
from mutualcover.ladder_wh import auxiliary_pair, ladder
from mutualcover.simulator import _safe_levels
from mutualcover.validation import exponential_model, reference_model


def cases(n):
    ref = reference_model()
    km = compile_model(ref)
    s1, s2 = _safe_levels(ref, True)
    yield "survival (0,0), reference", "survival_times", (km, 0.0, 0.0, 0.0, 0.0, 2000.0, s1, s2, 42, TAG_SURVIVAL, 0, n)
    yield "survival e_1 x e_1, reference", "survival_times", (km, 0.0, 0.0, 1.0, 1.0, 2000.0, s1, s2, 42, TAG_SURVIVAL, 0, n)
    ex = exponential_model()
    ke = compile_model(ex)
    e1, e2 = _safe_levels(ex, True)
    yield "survival (1,1), exponential", "survival_times", (ke, 1.0, 1.0, 0.0, 0.0, 2000.0, e1, e2, 42, TAG_SURVIVAL, 0, n)
    l1, l2 = compile_line(ref.line1), compile_line(ref.line2)
    yield "ladder Y(1)", "ladder_levels", (l1, 1.0, 42, 7, 0, n)
    pair = auxiliary_pair(ref)
    up, dn = pair.rates["L"]
    yield "WH extremes X_L", "wh_extremes", (l1, l2, up, dn, pair.p_L, 42, TAG_WH_L, 0, n)


def timed(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if "cython" not in available_backends():
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    py, cy = get_kernels("python"), get_kernels("cython")
    print(f"{'case':32s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}  identical")
    for label, name, a in cases(args.paths):
        tp, op = timed(getattr(py, name), a, 1)
        tc, oc = timed(getattr(cy, name), a, args.repeat)
        print(f"{label:32s} {tp:11.3f} {tc:11.4f} {tp / tc:7.0f}x  {same(op, oc)}")


if __name__ == "__main__":
    main()
