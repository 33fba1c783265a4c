"""Generative samplers for the histogram families.

Every sampler is a pure function of (system, partition or chain, stream):
the same ``RandomStream`` reproduces the same draws bit for bit, replicate
sweeps are carved into the fixed chunk grid of :mod:`histolim.streams` with
one substream per chunk, and the worker count never changes the output.

Chain sampling draws once at the finest level and projects down, so the
returned family is coherent by construction rather than by luck.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ValidationError
from .histograms import PROBABILITY, SIGNED, Histogram, HistogramStack, project
from .partitions import CellIndex, Partition, PartitionChain, endpoint_to_float
from .streams import RandomStream, run_chunked
from .systems import (
    DirichletSystem,
    GaussianSystem,
    HistogramSystem,
    LeakageSystem,
    PolyaTreeSystem,
    sigma_factor,
)


def _check_replicates(n: int) -> None:
    if n < 1:
        raise ValidationError("sampling/replicates", f"need at least 1 replicate, got {n}")


# ---------------------------------------------------------------------------
# Dirichlet

def dirichlet_stack(system: DirichletSystem, partition: Partition,
                    stream: RandomStream, replicates: int, *,
                    jobs: int = 1) -> HistogramStack:
    """Draw normalized Gamma vectors: Z_i ~ Gamma(nu_i, 1), rows Z / sum(Z).

    Cells with nu_i = 0 carry a point mass at zero, so they come out exactly
    0.0 in every row.  Should every Gamma draw of a row underflow to zero
    (possible when all nu_i are tiny), the row degenerates to a single unit
    atom placed by a categorical draw with weights nu — the weak limit of the
    Dirichlet as the concentrations shrink.
    """
    _check_replicates(replicates)
    nu = system.concentrations(partition)
    positive = nu > 0
    cum = np.cumsum(nu) / nu.sum()
    cum[-1] = 1.0

    def draw(sub: RandomStream, k: int) -> np.ndarray:
        rng = sub.generator()
        g = np.zeros((k, len(nu)))
        g[:, positive] = rng.gamma(nu[positive], 1.0, size=(k, int(positive.sum())))
        u = rng.uniform(size=k)
        total = g.sum(axis=1)
        dead = np.flatnonzero(total == 0.0)
        if len(dead):
            g[dead, np.searchsorted(cum, u[dead], side="right")] = 1.0
            total[dead] = 1.0
        return g / total[:, None]

    rows = run_chunked(stream, replicates, draw, jobs=jobs)
    return HistogramStack(partition, rows, PROBABILITY)


def sample_dirichlet(system: DirichletSystem, partition: Partition,
                     stream: RandomStream) -> Histogram:
    return dirichlet_stack(system, partition, stream, 1).histogram(0)


# ---------------------------------------------------------------------------
# Polya trees

def _beta_matrix(rng: np.random.Generator, a: np.ndarray, b: np.ndarray,
                 n: int) -> np.ndarray:
    """(n, len(a)) Beta(a_j, b_j) draws via Gamma pairs, honouring the
    extended parameter values: (inf, b) pins to 1, (a, inf) pins to 0,
    (inf, inf) to 1/2."""
    fa = np.where(np.isfinite(a), a, 1.0)
    fb = np.where(np.isfinite(b), b, 1.0)
    ga = rng.gamma(fa, 1.0, size=(n, len(a)))
    gb = rng.gamma(fb, 1.0, size=(n, len(b)))
    u = rng.uniform(size=(n, len(a)))
    total = ga + gb
    v = np.divide(ga, total, out=np.zeros_like(ga), where=total > 0)
    dead = total == 0.0
    if dead.any():
        # both Gammas underflowed: for tiny shapes Beta(a, b) is within
        # O(a + b) of a Bernoulli on {0, 1} with odds a : b
        odds = np.broadcast_to(fa / (fa + fb), v.shape)
        v[dead] = (u[dead] < odds[dead]).astype(float)
    pin_one = np.isinf(a) & np.isfinite(b)
    pin_zero = np.isfinite(a) & np.isinf(b)
    pin_half = np.isinf(a) & np.isinf(b)
    if pin_one.any():
        v[:, pin_one] = 1.0
    if pin_zero.any():
        v[:, pin_zero] = 0.0
    if pin_half.any():
        v[:, pin_half] = 0.5
    return v


def _level_pairs(system: PolyaTreeSystem, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Splitting parameters for all 2^(level-1) parents, left to right."""
    width = level - 1
    count = 1 << width
    a = np.empty(count)
    b = np.empty(count)
    for i in range(count):
        bits = tuple((i >> (width - 1 - j)) & 1 for j in range(width))
        a[i], b[i] = system.rule.pair(CellIndex(bits, width))
    return a, b


def _check_binary_chain(chain: PartitionChain, depth: int) -> None:
    if not 0 <= depth <= chain.depth:
        raise ValidationError("sampling/depth",
                              f"depth {depth} outside chain levels 0..{chain.depth}")
    for level in range(depth + 1):
        if len(chain[level].interval_cells) != 1 << level:
            raise ValidationError(
                "sampling/non-binary",
                f"level {level} has {len(chain[level].interval_cells)} interval "
                f"cells, expected {1 << level}; splitting trees need a binary chain",
            )


def polya_stack(system: PolyaTreeSystem, chain: PartitionChain, depth: int,
                stream: RandomStream, replicates: int, *,
                jobs: int = 1) -> HistogramStack:
    """Top-down product of independent splitting draws.

    Level l consumes its own substream ``child(l)``, so a depth-(m-1) run
    replays exactly the first m-1 levels of a depth-m run with the same
    stream: projecting the finer stack reproduces the coarser one up to
    floating-point cancellation.
    """
    _check_replicates(replicates)
    _check_binary_chain(chain, depth)
    partition = chain[depth]
    if system.p0 > 0.0 and not partition.has_atom:
        raise ValidationError(
            "sampling/atom-mass",
            f"p0={system.p0} needs a zero atom cell, absent at level {depth}",
        )
    pairs = [_level_pairs(system, level) for level in range(1, depth + 1)]
    tree_mass = 1.0 if not partition.has_atom else 1.0 - system.p0

    def draw(sub: RandomStream, k: int) -> np.ndarray:
        mass = np.full((k, 1), tree_mass)
        for level, (a, b) in enumerate(pairs, start=1):
            v = _beta_matrix(sub.child(level).generator(), a, b, k)
            mass = np.stack([mass * v, mass * (1.0 - v)], axis=2).reshape(k, -1)
        if partition.has_atom:
            mass = np.concatenate([np.full((k, 1), system.p0), mass], axis=1)
        return mass

    rows = run_chunked(stream, replicates, draw, jobs=jobs)
    return HistogramStack(partition, rows, PROBABILITY)


def sample_polya(system: PolyaTreeSystem, chain: PartitionChain, depth: int,
                 stream: RandomStream) -> Histogram:
    return polya_stack(system, chain, depth, stream, 1).histogram(0)


# ---------------------------------------------------------------------------
# Gaussian

def gaussian_stack(system: GaussianSystem, partition: Partition,
                   stream: RandomStream, replicates: int, *,
                   jobs: int = 1) -> HistogramStack:
    """Rows centre + z F^T with z standard normal and F a clipped symmetric
    factor of the assembled covariance.  The factor keeps the exact rank, so
    a rank-one covariance yields rows that are scalar multiples of a fixed
    vector, not merely approximately so.
    """
    _check_replicates(replicates)
    centre = system.centre_histogram(partition).values
    factor = sigma_factor(system.covariance, partition)
    rank = factor.shape[1]

    def draw(sub: RandomStream, k: int) -> np.ndarray:
        z = sub.generator().standard_normal((k, rank))
        return centre[None, :] + z @ factor.T

    rows = run_chunked(stream, replicates, draw, jobs=jobs)
    return HistogramStack(partition, rows, SIGNED)


def sample_gaussian(system: GaussianSystem, partition: Partition,
                    stream: RandomStream) -> Histogram:
    return gaussian_stack(system, partition, stream, 1).histogram(0)


# ---------------------------------------------------------------------------
# family dispatch, chains, paths

def _leakage_stack(system: LeakageSystem, partition: Partition,
                   replicates: int) -> HistogramStack:
    _check_replicates(replicates)
    h = system.histogram(partition)
    return HistogramStack(partition, np.tile(h.values, (replicates, 1)), PROBABILITY)


def sample_stack(system: HistogramSystem, chain: PartitionChain, depth: int,
                 stream: RandomStream, replicates: int, *,
                 jobs: int = 1) -> HistogramStack:
    """Replicate sweep for any family at one level of a chain."""
    partition = chain[depth]
    if isinstance(system, DirichletSystem):
        return dirichlet_stack(system, partition, stream, replicates, jobs=jobs)
    if isinstance(system, PolyaTreeSystem):
        return polya_stack(system, chain, depth, stream, replicates, jobs=jobs)
    if isinstance(system, GaussianSystem):
        return gaussian_stack(system, partition, stream, replicates, jobs=jobs)
    if isinstance(system, LeakageSystem):
        return _leakage_stack(system, partition, replicates)
    raise ValidationError("sampling/family", f"no sampler for {type(system).__name__}")


def chain_sample(system: HistogramSystem, chain: PartitionChain, depth: int,
                 stream: RandomStream) -> list[Histogram]:
    """One draw at level ``depth``, all coarser levels by projection.

    The returned list (levels 0..depth) is exactly coherent: each entry is
    the pushforward of the next, by construction.
    """
    finest = sample_stack(system, chain, depth, stream, 1).histogram(0)
    out = [finest]
    for level in range(depth, 0, -1):
        out.append(project(out[-1], chain.refinement(level - 1, level)))
    out.reverse()
    return out


def path_from_histogram(h: Histogram) -> list[tuple[float, float]]:
    """Cumulative-sum skeleton (t, B(t)) at the cells' right endpoints.

    B starts at 0 before the first cell; atom cells and infinite right
    endpoints contribute to the running sum but emit no point.
    """
    points: list[tuple[float, float]] = []
    running = 0.0
    for cell, value in zip(h.partition.cells, h.values):
        running += float(value)
        if cell.is_atom:
            continue
        t = endpoint_to_float(cell.right)
        if math.isfinite(t):
            points.append((t, running))
    return points
