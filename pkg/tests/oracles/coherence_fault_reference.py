"""Detectability reference for the projection-consistency two-sample test.

The diagnostic compares cell moments of (a) depth-m samples summed into the
depth-(m-1) cells against (b) depth-(m-1) samples drawn directly, via z-scores
with 4-standard-error gates.  This throwaway numpy version establishes that

* a correct beta-split tree passes comfortably at N = 1e5, and
* swapping one child pair at the top level (a plausible implementation slip)
  is detected with |z| far beyond 4.

Run:  python coherence_fault_reference.py
"""

import numpy as np


def tree_sample(rng, pairs_by_level, n):
    mass = np.ones((n, 1))
    for pairs in pairs_by_level:  # pairs: list of (a, b) per parent, lex order
        a = np.array([p[0] for p in pairs])
        b = np.array([p[1] for p in pairs])
        v = rng.beta(a, b, size=(n, len(pairs)))
        mass = np.stack([mass * v, mass * (1 - v)], axis=2).reshape(n, -1)
    return mass


def zscores(x, y):
    mx, my = x.mean(axis=0), y.mean(axis=0)
    se = np.sqrt(x.var(axis=0, ddof=1) / len(x) + y.var(axis=0, ddof=1) / len(y))
    return (mx - my) / se


if __name__ == "__main__":
    n, m = 100_000, 3
    healthy = [[(1.0, 1.0)] * 2**l for l in range(m)]

    rng = np.random.default_rng(99)
    fine = tree_sample(rng, healthy, n)
    coarse = tree_sample(np.random.default_rng(100), healthy[:-1], n)
    projected = fine.reshape(n, -1, 2).sum(axis=2)
    z = zscores(projected, coarse)
    z2 = zscores(projected**2, coarse**2)
    print(f"healthy: max |z| mean {np.abs(z).max():.2f}, second moment {np.abs(z2).max():.2f}")

    # corrupt: the level-1 pair under parent '0' swapped from (1,3) to (3,1)
    het = [[(2.0, 1.0)], [(1.0, 3.0), (1.0, 1.0)]]
    bad = [[(2.0, 1.0)], [(3.0, 1.0), (1.0, 1.0)]]
    fine = tree_sample(np.random.default_rng(101), het + [[(1.0, 1.0)] * 4], n)
    coarse_bad = tree_sample(np.random.default_rng(102), bad, n)
    projected = fine.reshape(n, -1, 2).sum(axis=2)
    z = zscores(projected, coarse_bad)
    print(f"swapped child pair: per-cell z = {np.round(z, 1)} (max |z| {np.abs(z).max():.1f})")
