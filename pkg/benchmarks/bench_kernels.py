"""Time the numba and numpy kernels on synthetic ensembles of growing size.

Usage::

    python benchmarks/bench_kernels.py --sizes 200,500,1000 --M 20 --repeats 3

Each row reports the best of ``--repeats`` timings per backend (numba compile
time excluded by a warm-up call) and confirms that both backends returned
bit-identical output.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ecpcs import _kernels
from ecpcs.coassoc import enhanced_coassociation
from ecpcs.core import Ensemble
from ecpcs.propagation import cluster_similarity


def best_time(fn, repeats: int):
    best, out = float("inf"), None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def synthetic_ensemble(n: int, M: int, rng: np.random.Generator) -> Ensemble:
    truth = rng.integers(0, 5, n)
    members = []
    for _ in range(M):
        k = int(rng.integers(5, 15))
        noisy = np.where(rng.random(n) < 0.3, rng.integers(0, k, n), truth % k)
        members.append(noisy)
    return Ensemble.from_assignments(members)


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="200,500,1000,2000")
    p.add_argument("--M", type=int, default=20)
    p.add_argument("--t", type=int, default=20)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1

    rng = np.random.default_rng(args.seed)
    warm = synthetic_ensemble(20, 3, rng)
    _, _, zw = cluster_similarity(warm, t=2)
    for backend in ("numba", "numpy"):
        _kernels.agglomerate(enhanced_coassociation(warm, zw, backend=backend), backend=backend)

    header = f"{'N':>6} {'kernel':<14} {'numba s':>9} {'numpy s':>9} {'speedup':>8}  identical"
    print(header)
    print("-" * len(header))
    for n in (int(x) for x in args.sizes.split(",")):
        ens = synthetic_ensemble(n, args.M, rng)
        _, _, Z = cluster_similarity(ens, t=args.t)
        g = ens.global_labels()
        tb, Bb = best_time(lambda: _kernels.accumulate_coassociation(g, Z, "numba"), args.repeats)
        tn, Bn = best_time(lambda: _kernels.accumulate_coassociation(g, Z, "numpy"), args.repeats)
        print(f"{n:>6} {'coassociation':<14} {tb:>9.4f} {tn:>9.4f} {tn / tb:>7.1f}x  {np.array_equal(Bb, Bn)}")
        ab_t, ab = best_time(lambda: _kernels.agglomerate(Bb, "numba"), args.repeats)
        an_t, an = best_time(lambda: _kernels.agglomerate(Bb, "numpy"), args.repeats)
        same = all(np.array_equal(x, y) for x, y in zip(ab, an))
        print(f"{n:>6} {'agglomerate':<14} {ab_t:>9.4f} {an_t:>9.4f} {an_t / ab_t:>7.1f}x  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
