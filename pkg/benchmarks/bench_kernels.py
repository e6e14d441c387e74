"""Time the numba kernels against the pure-numpy fallback.

Each path runs in its own interpreter because the switch is read at import.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
import numpy as np
from cyclopip import _accel, latred
from cyclopip.cyclo import Conductor, CycloElement, norm_many

def timed(fn, repeat):
    fn()  # warm-up, includes compilation
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
c = Conductor(64)
elems = [CycloElement(c, tuple(int(x) for x in rng.integers(-2, 3, c.n))) for _ in range(2000)]
q = [[int(x) for x in rng.integers(-2**20, 2**20, 40)] for _ in range(40)]
q = [[(i == j) * 2**30 + (j == 0) * row[0] for j in range(40)] for i, row in enumerate(q)]
basis = latred.lll([[int(x) for x in rng.integers(-50, 51, 30)] for _ in range(30)])
B = rng.normal(size=(31, 31))
targets = rng.normal(size=(500, 31)) * 10
out = {
    "numba": _accel.NUMBA_ENABLED,
    "norm_many(2000 elements, N=64)": timed(lambda: norm_many(elems), repeat),
    "lll(40 x 40 knapsack)": timed(lambda: latred.lll(q), repeat),
    "shortest_vector(dim 30)": timed(lambda: latred.shortest_vector(basis), repeat),
    "babai_nearest_plane(dim 31, 500 targets)": timed(lambda: [latred.babai_nearest_plane(B, t) for t in targets], repeat),
}
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, CYCLOPIP_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    if not fast.pop("numba"):
        print("numba is not importable; both columns use the fallback")
    slow.pop("numba")
    print(f"{'workload':45s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for k in fast:
        print(f"{k:45s} {fast[k]:10.4f} {slow[k]:10.4f} {slow[k] / fast[k]:8.1f}")


if __name__ == "__main__":
    main()
