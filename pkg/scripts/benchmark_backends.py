#!/usr/bin/env python3
"""Benchmark the compiled event kernel against the pure-Python fallback.

Both backends walk the RNG stream identically, so besides timing them
this script asserts their outputs are bit-for-bit equal.

Usage: python scripts/benchmark_backends.py [n_attempts]
"""

import sys
import time

import numpy as np

from comptonpairs import ApparatusConfig, PairModel
from comptonpairs import kernels
from comptonpairs._params import pack_params

SCENARIOS = [
    ("entangled, theta window", PairModel("entangled"), ApparatusConfig()),
    ("decoherent tagging on", PairModel("entangled"),
     ApparatusConfig(gagg_enabled=True)),
    ("point counters at 82 deg", PairModel("entangled"),
     ApparatusConfig(point_detector_mode=True, theta_window_deg=(82.0, 82.0))),
    ("depolarized backscatter chain", PairModel("depolarized", 0.2),
     ApparatusConfig(backscatter_chain=True)),
]


def main() -> int:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 300_000
    impls = kernels.backends()
    if "cython" not in impls:
        print("compiled kernel not available; timing the fallback only")
    print(f"{n} attempts per scenario\n")
    header = f"{'scenario':<32}" + "".join(f"{name:>16}" for name in impls)
    print(header + f"{'speedup':>10}")
    for label, model, apparatus in SCENARIOS:
        params, grid = pack_params(model, PairModel('mixed_hm'), apparatus)
        rates = {}
        outputs = {}
        for name, impl in impls.items():
            bitgen = np.random.PCG64(12345)
            t0 = time.perf_counter()
            outputs[name] = impl.generate(bitgen, params, grid, n)
            dt = time.perf_counter() - t0
            rates[name] = n / dt
        if len(outputs) == 2:
            same = all(np.array_equal(outputs["python"][k], outputs["cython"][k])
                       for k in outputs["python"])
            if not same:
                print(f"ERROR: backends disagree on {label!r}")
                return 1
        row = f"{label:<32}" + "".join(
            f"{rates[name]:>13.0f}/s" for name in impls)
        if len(rates) == 2:
            row += f"{rates['cython'] / rates['python']:>9.1f}x"
        print(row)
    print("\nbackends agree bit-for-bit on all scenarios")
    return 0


if __name__ == "__main__":
    sys.exit(main())
