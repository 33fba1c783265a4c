"""Samplers: determinism, level replay, moment sanity, coherence."""

import math

import numpy as np
import pytest

from histolim.errors import ValidationError
from histolim.histograms import PROBABILITY, project
from histolim.partitions import Domain, dyadic_chain
from histolim.sampling import (
    chain_sample,
    dirichlet_stack,
    gaussian_stack,
    path_from_histogram,
    polya_stack,
    sample_stack,
)
from histolim.streams import RandomStream
from histolim.systems import (
    AtomicBase,
    ConstantCovariance,
    DiagonalCovariance,
    DirichletSystem,
    GaussianSystem,
    HomogeneousRule,
    LeakageSystem,
    LebesgueBase,
    PolyaTreeSystem,
    TableRule,
)

CHAIN = dyadic_chain(depth=6)


def test_dirichlet_rows_live_on_simplex():
    system = DirichletSystem(LebesgueBase())
    stack = dirichlet_stack(system, CHAIN[3], RandomStream(1), 500)
    assert stack.kind == PROBABILITY
    assert np.allclose(stack.values.sum(axis=1), 1.0)
    assert np.all(stack.values >= 0)


def test_dirichlet_zero_concentration_cells_stay_zero():
    base = AtomicBase((0.2, 0.9), (1.0, 1.0))  # only cells 0 and 3 charged
    stack = dirichlet_stack(DirichletSystem(base), CHAIN[2], RandomStream(2), 200)
    assert np.all(stack.values[:, 1] == 0.0)
    assert np.all(stack.values[:, 2] == 0.0)


def test_dirichlet_tiny_concentrations_degenerate_to_atoms():
    # all-Gamma-underflow rows must still be unit atoms, not NaN
    base = AtomicBase((0.2, 0.9), (1e-300, 1e-300))
    stack = dirichlet_stack(DirichletSystem(base), CHAIN[1], RandomStream(3), 300)
    assert np.all(np.isfinite(stack.values))
    assert np.allclose(stack.values.sum(axis=1), 1.0)
    # every row is a single unit atom
    assert np.all(np.sort(stack.values, axis=1)[:, -1] == 1.0)


def test_dirichlet_mean_matches_monte_carlo():
    system = DirichletSystem(LebesgueBase())
    stack = dirichlet_stack(system, CHAIN[2], RandomStream(4), 20_000)
    est = stack.values.mean(axis=0)
    se = stack.values.std(axis=0, ddof=1) / math.sqrt(len(stack))
    z = (est - system.mean(CHAIN[2]).values) / se
    assert np.all(np.abs(z) < 4)


def test_polya_level_replay_identity():
    """Depth-(m-1) run replays inside a depth-m run with the same stream."""
    system = PolyaTreeSystem(HomogeneousRule("m"))
    fine = polya_stack(system, CHAIN, 5, RandomStream(9), 64)
    coarse = polya_stack(system, CHAIN, 4, RandomStream(9), 64)
    projected = project(fine, CHAIN.refinement(4, 5))
    assert np.allclose(projected.values, coarse.values, atol=1e-12)


def test_polya_infinite_parameters_pin_splits():
    system = PolyaTreeSystem(TableRule({}, default=(math.inf, 1.0)))
    stack = polya_stack(system, CHAIN, 3, RandomStream(11), 50)
    # every split pins left, so all mass sits in cell 0
    assert np.all(stack.values[:, 0] == 1.0)
    assert np.all(stack.values[:, 1:] == 0.0)


def test_polya_p0_needs_atom_cell():
    system = PolyaTreeSystem(HomogeneousRule("1"), p0=0.25)
    with pytest.raises(ValidationError) as e:
        polya_stack(system, CHAIN, 2, RandomStream(1), 10)
    assert e.value.code == "sampling/atom-mass"
    chain = dyadic_chain(Domain.unit(closed_left=True), depth=3)
    stack = polya_stack(system, chain, 3, RandomStream(1), 40)
    assert np.all(stack.values[:, 0] == 0.25)
    assert np.allclose(stack.values.sum(axis=1), 1.0)


def test_polya_rejects_non_binary_chain():
    rows = [[0.0], [-1.0, 0.0, 1.0]]
    from histolim.partitions import triangular_chain

    chain = triangular_chain(rows)
    system = PolyaTreeSystem(HomogeneousRule("1"))
    stack = polya_stack(system, chain, 2, RandomStream(1), 5)  # binary: fine
    assert stack.values.shape == (5, 4)
    bad = triangular_chain([[0.0], [-1.0, 0.0, 1.0],
                            [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]])
    assert len(bad[3].interval_cells) == 8  # still binary; build a broken one
    with pytest.raises(ValidationError):
        polya_stack(system, CHAIN, 99, RandomStream(1), 5)


def test_gaussian_constant_covariance_draws_are_rank_one():
    system = GaussianSystem(ConstantCovariance(2.0))
    stack = gaussian_stack(system, CHAIN[3], RandomStream(6), 100)
    w = np.full(8, 1 / 8)
    # every row is a scalar multiple of the cell-width vector, exactly
    ratio = stack.values / w[None, :]
    assert np.allclose(ratio, ratio[:, :1])


def test_gaussian_diagonal_moments():
    system = GaussianSystem(DiagonalCovariance(LebesgueBase()))
    stack = gaussian_stack(system, CHAIN[2], RandomStream(7), 30_000)
    var = stack.values.var(axis=0, ddof=1)
    assert np.allclose(var, 0.25, atol=0.02)
    cov = np.cov(stack.values[:, 0], stack.values[:, 1])[0, 1]
    assert abs(cov) < 0.01


def test_gaussian_centre_offsets_rows():
    system = GaussianSystem(DiagonalCovariance(AtomicBase((0.9,), (0.0,))),
                            centre=LebesgueBase())
    stack = gaussian_stack(system, CHAIN[1], RandomStream(8), 10)
    # zero covariance: rows equal the centre exactly
    assert np.allclose(stack.values, 0.5)


def test_sample_stack_dispatch_and_leakage_tiling():
    system = LeakageSystem(0.2, depth=5)
    chain = system.chain()
    stack = sample_stack(system, chain, 4, RandomStream(1), 7)
    assert stack.values.shape == (7, len(chain[4]))
    assert np.allclose(stack.values, stack.values[0][None, :])


def test_sample_stack_jobs_invariance():
    for system in (DirichletSystem(LebesgueBase()),
                   PolyaTreeSystem(HomogeneousRule("m")),
                   GaussianSystem(DiagonalCovariance(LebesgueBase()))):
        one = sample_stack(system, CHAIN, 4, RandomStream(42), 9000, jobs=1)
        four = sample_stack(system, CHAIN, 4, RandomStream(42), 9000, jobs=4)
        assert np.array_equal(one.values, four.values), type(system).__name__


def test_chain_sample_is_exactly_coherent():
    system = PolyaTreeSystem(HomogeneousRule("m^2"))
    family = chain_sample(system, CHAIN, 5, RandomStream(13))
    assert len(family) == 6
    for level in range(5):
        pushed = project(family[level + 1], CHAIN.refinement(level, level + 1))
        assert np.array_equal(pushed.values, family[level].values)


def test_path_from_histogram_endpoints():
    system = DirichletSystem(LebesgueBase())
    h = sample_stack(system, CHAIN, 3, RandomStream(21), 1).histogram(0)
    pts = path_from_histogram(h)
    assert len(pts) == 8
    assert pts[0][0] == 0.125
    assert pts[-1][0] == 1.0
    assert pts[-1][1] == pytest.approx(1.0)
    # cumulative and nondecreasing for probability histograms
    values = [v for _, v in pts]
    assert values == sorted(values)


def test_path_skips_unbounded_cells():
    system = LeakageSystem(0.4, depth=4)
    chain = system.chain()
    h = system.histogram(chain[3])
    pts = path_from_histogram(h)
    # end cells are unbounded: no point at +-inf
    assert all(math.isfinite(t) for t, _ in pts)
    assert len(pts) == len(chain[3]) - 1  # last cell emits nothing
    assert pts[-1][1] == pytest.approx(1.0 - 0.2)


def test_replicate_validation():
    with pytest.raises(ValidationError):
        sample_stack(DirichletSystem(LebesgueBase()), CHAIN, 2,
                     RandomStream(1), 0)
