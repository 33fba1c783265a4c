"""Brute-force reference for the truncated-excess statistic

    t(p, q, L) = sum_A max(p(A) - L q(A), 0)

and its two structural properties: non-increasing in L, and non-decreasing
under refinement (splitting mass across children can only create excess).

Run:  python truncation_reference.py
"""

import numpy as np


def excess(p, q, L):
    return float(np.clip(np.asarray(p) - L * np.asarray(q), 0.0, None).sum())


if __name__ == "__main__":
    print(f"p=(0.7,0.3), q=(0.5,0.5), L=1: {excess([0.7, 0.3], [0.5, 0.5], 1.0)} (expect 0.2)")
    print(f"same, L=1.4: {excess([0.7, 0.3], [0.5, 0.5], 1.4)} (expect 0.0)")

    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(2000):
        k = 8
        p = rng.dirichlet(np.ones(k))
        q = rng.dirichlet(np.ones(k))
        ls = np.sort(rng.uniform(0, 3, size=5))
        vals = [excess(p, q, L) for L in ls]
        worst = max(worst, max(np.diff(vals), default=0.0))
        # coarsen by summing pairs: statistic must not increase
        pc, qc = p.reshape(-1, 2).sum(axis=1), q.reshape(-1, 2).sum(axis=1)
        assert excess(pc, qc, ls[0]) <= excess(p, q, ls[0]) + 1e-12
    print(f"max increase over L-grids (should be <= 0): {worst:.3e}")
