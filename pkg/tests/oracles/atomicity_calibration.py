"""Calibration run fixing the atomicity-curve thresholds used by the phase
diagnostics.

The diagnostic statistic is E[max_A P(A)] across the cells A of depth-m
partitions (for signed families, max |.| normalized by the total variation).
Three standalone simulations, none sharing code with the package:

* stick breaking: the largest atom of a normalized-gamma random measure with
  non-atomic base and unit total mass.  The depth-m curve of a
  Dirichlet-Lebesgue system must plateau at this value from above.
* direct finite-Dirichlet curves (numpy dirichlet) for the Lebesgue base and a
  three-atom base.
* beta-split trees with pairs beta_m = m^2 (curve must decay to 0).
* centred independent-increment Gaussian with per-cell variance 2^-m
  (normalized curve must decay to 0).

The frozen thresholds derived at the bottom are imported nowhere; they are
copied as literals into the diagnostics configuration and its tests.

Run:  python atomicity_calibration.py
"""

import numpy as np


def stick_breaking_largest_atom(theta=1.0, n=200_000, trunc=60, seed=11):
    rng = np.random.default_rng(seed)
    v = rng.beta(1.0, theta, size=(n, trunc))
    log_rest = np.concatenate(
        [np.zeros((n, 1)), np.cumsum(np.log1p(-v[:, :-1]), axis=1)], axis=1
    )
    w = v * np.exp(log_rest)
    return w.max(axis=1)


def dirichlet_curve(weights_by_depth, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for depth, w in weights_by_depth:
        if np.all(np.asarray(w) > 0):
            s = rng.dirichlet(w, size=n)
        else:  # numpy rejects zero concentrations; zero cells carry zero mass
            w = np.asarray(w, float)
            pos = w > 0
            s = np.zeros((n, len(w)))
            s[:, pos] = rng.dirichlet(w[pos], size=n)
        mx = s.max(axis=1)
        out.append((depth, mx.mean(), mx.std(ddof=1) / np.sqrt(n)))
    return out


def beta_tree_curve(beta_of_level, depths, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for depth in depths:
        mass = np.ones((n, 1))
        for level in range(1, depth + 1):
            b = beta_of_level(level)
            v = rng.beta(b, b, size=(n, mass.shape[1]))
            mass = np.stack([mass * v, mass * (1 - v)], axis=2).reshape(n, -1)
        mx = mass.max(axis=1)
        out.append((depth, mx.mean(), mx.std(ddof=1) / np.sqrt(n)))
    return out


def gaussian_normalized_curve(depths, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for depth in depths:
        k = 2**depth
        x = rng.standard_normal((n, k)) * np.sqrt(2.0**-depth)
        stat = np.abs(x).max(axis=1) / np.abs(x).sum(axis=1)
        out.append((depth, stat.mean(), stat.std(ddof=1) / np.sqrt(n)))
    return out


if __name__ == "__main__":
    w_max = stick_breaking_largest_atom()
    print(f"largest atom, unit-mass non-atomic base: E = {w_max.mean():.4f} "
          f"(se {w_max.std(ddof=1)/np.sqrt(len(w_max)):.4f})")

    depths = [2, 4, 6, 8, 10]
    leb = [(m, [2.0**-m] * 2**m) for m in depths]
    print("dirichlet lebesgue-base curve:")
    for d, mean, se in dirichlet_curve(leb, n=40_000, seed=3):
        print(f"  depth {d:2d}  E max = {mean:.4f} +- {se:.4f}")

    # three atoms (w 0.2/0.3/0.5) at dyadic-irrational points: at depth m the
    # weight vector has three positive entries, the rest zero
    print("dirichlet three-atom-base curve:")
    atom_w = [0.2, 0.3, 0.5]
    three = []
    for m in depths:
        w = [0.0] * 2**m
        for j, x in enumerate([0.15, 0.45, 0.8]):
            w[min(int(np.ceil(x * 2**m)) - 1, 2**m - 1)] += atom_w[j]
        three.append((m, w))
    for d, mean, se in dirichlet_curve(three, n=40_000, seed=4):
        print(f"  depth {d:2d}  E max = {mean:.4f} +- {se:.4f}")

    print("beta-split tree, pair m^2 at level m:")
    for d, mean, se in beta_tree_curve(lambda m: float(m * m), depths, n=40_000, seed=5):
        print(f"  depth {d:2d}  E max = {mean:.4f} +- {se:.4f}")

    print("independent gaussian increments, variance 2^-m (normalized max):")
    for d, mean, se in gaussian_normalized_curve(depths, n=20_000, seed=6):
        print(f"  depth {d:2d}  E max = {mean:.4f} +- {se:.4f}")
