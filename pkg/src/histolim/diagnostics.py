"""Monte-Carlo phase diagnostics.

Sampling-based evidence about a histogram family: does projecting finer
samples reproduce coarser ones (coherence), does the largest cell mass
plateau or vanish (atomicity), is the excess over a scaled reference small
(domination), and how fast do fixed-density histograms converge.  The
aggregated phase report combines these curves with the exact condition
verdicts; the declared phase always comes from verdicts plus the
complete-randomness flag, never from the Monte-Carlo curves alone — the
curves corroborate or veto only the atomic sub-label.

Every curve carries standard errors, and every pass/fail rule is expressed
in standard-error units rather than raw tolerances.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .conditions import (
    FAILS,
    HOLDS,
    SUFFICIENT_CONDITION_FAILS,
    Verdict,
    dirichlet_condition,
    dirichlet_weak_condition,
    gaussian_conditions,
    leakage_counterexample,
    polya_leakage_condition,
    polya_tight_condition,
    polya_weak_condition,
)
from .errors import ValidationError
from .histograms import (
    PROBABILITY,
    POSITIVE,
    Density,
    Histogram,
    HistogramStack,
    PiecewiseDensity,
    PolynomialDensity,
    histogram_density,
    lebesgue_reference,
    project_values,
    truncation_values,
    tv_distance_density,
)
from .partitions import Partition, PartitionChain, endpoint_to_float
from .sampling import sample_stack
from .streams import RandomStream
from .systems import (
    DirichletSystem,
    GaussianSystem,
    HistogramSystem,
    LeakageSystem,
    PolyaTreeSystem,
)

Z_THRESHOLD = 4.0
MIN_STATISTICAL_SAMPLES = 1_000
#: defaults, overridable per call: moment tests vs curve estimation
DEFAULT_MOMENT_SAMPLES = 100_000
DEFAULT_CURVE_SAMPLES = 10_000

PHASES = ("absolutely-continuous", "fixed-atomic", "continuous-singular",
          "random-atomic", "inconclusive")


# ---------------------------------------------------------------------------
# coherence

@dataclass(frozen=True)
class CoherenceRun:
    """One seeded comparison of projected fine samples vs direct coarse
    samples; z-scores are per coarse cell."""

    seed: int
    passed: bool
    max_abs_z: float
    first_moment_z: tuple[float, ...]
    second_moment_z: tuple[float, ...]

    def to_json(self) -> dict:
        return {"seed": self.seed, "passed": self.passed,
                "max_abs_z": self.max_abs_z,
                "first_moment_z": list(self.first_moment_z),
                "second_moment_z": list(self.second_moment_z)}


@dataclass(frozen=True)
class CoherenceResult:
    levels: tuple[int, int]
    replicates: int
    threshold: float
    runs: tuple[CoherenceRun, ...]
    passed: bool  # majority over the logged runs

    def to_json(self) -> dict:
        return {"levels": list(self.levels), "replicates": self.replicates,
                "threshold": self.threshold, "passed": self.passed,
                "runs": [r.to_json() for r in self.runs]}


def _two_sample_z(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    diff = x.mean(axis=0) - y.mean(axis=0)
    denom = np.sqrt(x.var(axis=0, ddof=1) / n + y.var(axis=0, ddof=1) / n)
    z = np.zeros_like(diff)
    live = denom > 0
    np.divide(diff, denom, out=z, where=live)
    # both sides degenerate: equal means pass (z=0), unequal fail hard
    z[~live & (diff != 0)] = np.inf
    return z


def coherence_test(system: HistogramSystem, chain: PartitionChain,
                   levels: tuple[int, int], replicates: int, *,
                   seed: int = 0, num_seeds: int = 3,
                   threshold: float = Z_THRESHOLD,
                   jobs: int = 1,
                   sampler: Optional[Callable] = None) -> CoherenceResult:
    """Two-sample moment comparison of project(fine) against direct coarse.

    The two sides draw from independent substreams, so the z-scores follow
    the usual two-sample calibration; a shared stream would make the
    comparison vacuous for samplers that replay their coarse draws inside
    the fine ones.  Three seeds are run and logged, and the verdict is the
    majority, which guards against the ~per-mille chance of a stray 4-sigma
    cell in an honest family.

    ``sampler`` (same signature as `sample_stack`) substitutes the draw —
    the hook that lets tests inject a deliberately incoherent sampler and
    confirm the z-scores catch it.
    """
    if replicates < MIN_STATISTICAL_SAMPLES:
        raise ValidationError("diagnostics/insufficient-samples",
                              f"need at least {MIN_STATISTICAL_SAMPLES} replicates, "
                              f"got {replicates}")
    coarse, fine = levels
    if not (0 <= coarse < fine <= chain.depth):
        raise ValidationError("diagnostics/levels",
                              f"need 0 <= coarse < fine <= {chain.depth}, got {levels}")
    if num_seeds < 1:
        raise ValidationError("diagnostics/seeds", "need at least one seed")
    rmap = chain.refinement(coarse, fine)
    draw = sample_stack if sampler is None else sampler
    runs = []
    for k in range(num_seeds):
        root = RandomStream(seed + k)
        fine_stack = draw(system, chain, fine, root.child(0),
                          replicates, jobs=jobs)
        coarse_stack = draw(system, chain, coarse, root.child(1),
                            replicates, jobs=jobs)
        projected = project_values(fine_stack.values, rmap)
        z1 = _two_sample_z(projected, coarse_stack.values)
        z2 = _two_sample_z(projected ** 2, coarse_stack.values ** 2)
        top = float(max(np.abs(z1).max(), np.abs(z2).max()))
        runs.append(CoherenceRun(seed + k, top < threshold, top,
                                 tuple(float(v) for v in z1),
                                 tuple(float(v) for v in z2)))
    passing = sum(r.passed for r in runs)
    return CoherenceResult((coarse, fine), replicates, threshold,
                           tuple(runs), passing * 2 > num_seeds)


# ---------------------------------------------------------------------------
# Monte-Carlo curves

@dataclass(frozen=True)
class CurvePoint:
    depth: int
    L: Optional[float]
    mean: float
    stderr: float
    n: int

    def to_json(self) -> dict:
        return {"depth": self.depth, "L": self.L, "mean": self.mean,
                "stderr": self.stderr, "n": self.n}


@dataclass(frozen=True)
class DiagnosticCurve:
    name: str
    points: tuple[CurvePoint, ...]
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"name": self.name, "points": [p.to_json() for p in self.points],
                "notes": list(self.notes)}

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["depth", "L", "mean", "stderr", "n"])
        for p in self.points:
            writer.writerow([p.depth, "" if p.L is None else repr(p.L),
                             repr(p.mean), repr(p.stderr), p.n])
        return out.getvalue()


def _mean_point(depth: int, L: Optional[float], values: np.ndarray) -> CurvePoint:
    n = len(values)
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return CurvePoint(depth, L, float(values.mean()), stderr, n)


def atomicity_values(stack: HistogramStack) -> np.ndarray:
    """Per-sample largest cell share: max mass for probability stacks, and
    max |value| / sum |value| for signed ones (zero rows give 0)."""
    if stack.kind == PROBABILITY:
        return stack.values.max(axis=1)
    absval = np.abs(stack.values)
    totals = absval.sum(axis=1)
    out = np.zeros(len(absval))
    live = totals > 0
    out[live] = absval[live].max(axis=1) / totals[live]
    return out


def atomicity_statistic(system: HistogramSystem, chain: PartitionChain,
                        depths: Sequence[int], replicates: int = DEFAULT_CURVE_SAMPLES,
                        *, seed: int = 0, jobs: int = 1) -> DiagnosticCurve:
    """Curve of E[largest cell share] per depth, with standard errors.

    A curve that keeps decreasing toward 0 is evidence against atoms; a
    plateau at a positive level is evidence for them.  The classification
    thresholds live in `classify_atomicity` and were calibrated on
    simulations of known-atomic and known-continuous families.
    """
    if replicates < 2:
        raise ValidationError("diagnostics/insufficient-samples",
                              "need at least 2 replicates for a standard error")
    root = RandomStream(seed, (0,))
    points = []
    for i, depth in enumerate(depths):
        stack = sample_stack(system, chain, depth, root.child(i),
                             replicates, jobs=jobs)
        points.append(_mean_point(depth, None, atomicity_values(stack)))
    return DiagnosticCurve("atomicity", tuple(points))


def classify_atomicity(curve: DiagnosticCurve) -> str:
    """'plateau' | 'decreasing' | 'ambiguous' from the calibrated thresholds:
    a plateau keeps the final mean at >= 0.25 and >= 3/4 of the mid-curve
    value; 'decreasing' needs the final mean at most half the first and
    below 0.1."""
    if len(curve.points) < 3:
        return "ambiguous"
    first = curve.points[0].mean
    mid = curve.points[len(curve.points) // 2].mean
    final = curve.points[-1].mean
    if final >= 0.25 and final >= 0.75 * mid:
        return "plateau"
    if final <= 0.5 * first and final <= 0.1:
        return "decreasing"
    return "ambiguous"


def reference_histogram(system: HistogramSystem, partition: Partition) -> Histogram:
    """Reference measure for domination tests: the mean measure for
    probability families, the per-cell spread envelope for Gaussian ones
    (plus |centre| when not centred)."""
    if isinstance(system, (DirichletSystem, PolyaTreeSystem)):
        return system.mean(partition)
    if isinstance(system, GaussianSystem):
        q = system.q_alpha(partition)
        if system.centred:
            return q
        centre = np.abs(system.centre_histogram(partition).values)
        return Histogram(partition, centre + q.values, POSITIVE)
    if isinstance(system, LeakageSystem):
        return system.histogram(partition)
    raise ValidationError("diagnostics/unsupported-family",
                          f"no reference measure for {type(system).__name__}")


@dataclass(frozen=True)
class DominationResult:
    """Mean truncation-excess curve and tail-probability curve over a
    (depth, L) grid, plus any zero-reference-cell reports."""

    delta: float
    means: DiagnosticCurve
    tails: DiagnosticCurve

    def to_json(self) -> dict:
        return {"delta": self.delta, "means": self.means.to_json(),
                "tails": self.tails.to_json()}


def domination_statistic(system: HistogramSystem, chain: PartitionChain,
                         depths: Sequence[int], L_grid: Sequence[float],
                         replicates: int = DEFAULT_CURVE_SAMPLES, *,
                         delta: float = 0.1, seed: int = 0, jobs: int = 1,
                         reference: Optional[Callable[[Partition], Histogram]] = None,
                         ) -> DominationResult:
    """Empirical excess of samples over L times the reference, per (depth, L).

    Reports E[excess] and P(excess > delta).  Per sample the excess is
    non-increasing in L, so decay along the L grid that is uniform over the
    depths is evidence for the dominated phases.  Cells where the reference
    vanishes but samples put mass are reported in the curve notes and the
    statistic remains defined.
    """
    if replicates < 2:
        raise ValidationError("diagnostics/insufficient-samples",
                              "need at least 2 replicates for a standard error")
    if any(L < 0 for L in L_grid):
        raise ValidationError("diagnostics/truncation-level",
                              f"L grid must be nonnegative, got {list(L_grid)}")
    root = RandomStream(seed, (1,))
    mean_points, tail_points, notes = [], [], []
    for i, depth in enumerate(depths):
        part = chain[depth]
        q = reference(part) if reference is not None else reference_histogram(system, part)
        stack = sample_stack(system, chain, depth, root.child(i),
                             replicates, jobs=jobs)
        dead = q.values == 0
        if np.any(dead):
            hit = int(np.count_nonzero(np.any(stack.values[:, dead] != 0, axis=0)))
            if hit:
                notes.append(f"depth {depth}: {hit} zero-reference cells "
                             "receive sample mass")
        for L in L_grid:
            excess = truncation_values(stack.values, q.values, float(L))
            mean_points.append(_mean_point(depth, float(L), excess))
            over = (excess > delta).astype(float)
            phat = float(over.mean())
            se = math.sqrt(phat * (1.0 - phat) / len(over))
            tail_points.append(CurvePoint(depth, float(L), phat, se, len(over)))
    notes = tuple(notes)
    return DominationResult(delta,
                            DiagnosticCurve("domination-mean",
                                            tuple(mean_points), notes),
                            DiagnosticCurve("domination-tail",
                                            tuple(tail_points), notes))


# ---------------------------------------------------------------------------
# deterministic curves

def _cell_masses(density: Density, partition: Partition) -> np.ndarray:
    from scipy.integrate import quad

    masses = np.zeros(len(partition))
    for i, cell in enumerate(partition.cells):
        if cell.is_atom or not cell.bounded:
            continue
        a = endpoint_to_float(cell.left)
        b = endpoint_to_float(cell.right)
        if isinstance(density, PolynomialDensity):
            masses[i] = density.integral(a, b)
        elif isinstance(density, PiecewiseDensity):
            masses[i] = density((a + b) / 2.0) * (b - a)
        else:
            masses[i], _ = quad(density, a, b)
    return masses


def tv_martingale_curve(density: Density, chain: PartitionChain,
                        depths: Optional[Sequence[int]] = None,
                        ) -> tuple[tuple[int, float], ...]:
    """Total-variation distance between a fixed density and its per-level
    histogram approximations (cell averages against the flat reference).

    The distances decrease along refinements; a density putting mass on a
    zero-width or zero-reference cell raises the domination error from the
    underlying density helpers.
    """
    if depths is None:
        depths = range(1, chain.depth + 1)
    out = []
    for m in depths:
        part = chain[m]
        masses = _cell_masses(density, part)
        h = Histogram(part, masses, POSITIVE)
        flat = lebesgue_reference(part)
        step = histogram_density(h, flat)
        out.append((int(m), tv_distance_density(density, step, partition=part)))
    return tuple(out)


def quadratic_variation(points: Sequence) -> float:
    """Sum of squared increments of a path given as (t, value) pairs or as a
    plain value sequence; needs at least two points."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 2:
        values = arr[:, 1]
    elif arr.ndim == 1:
        values = arr
    else:
        raise ValidationError("diagnostics/path-shape",
                              f"expected points or values, got shape {arr.shape}")
    if len(values) < 2:
        raise ValidationError("diagnostics/path-too-short",
                              "quadratic variation needs at least 2 points")
    return float(np.sum(np.diff(values) ** 2))


# ---------------------------------------------------------------------------
# the aggregated report

@dataclass(frozen=True)
class PhaseReport:
    family: dict
    condition_verdicts: dict
    atomicity_curve: Optional[DiagnosticCurve]
    domination_curve: Optional[DiagnosticCurve]
    domination_tail_curve: Optional[DiagnosticCurve]
    declared_phase: str
    rationale: str
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.declared_phase not in PHASES:
            raise ValidationError("phase/label",
                                  f"unknown phase {self.declared_phase!r}")

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "condition_verdicts": {k: v.to_json()
                                   for k, v in self.condition_verdicts.items()},
            "atomicity_curve": None if self.atomicity_curve is None
            else self.atomicity_curve.to_json(),
            "domination_curve": None if self.domination_curve is None
            else self.domination_curve.to_json(),
            "domination_tail_curve": None if self.domination_tail_curve is None
            else self.domination_tail_curve.to_json(),
            "declared_phase": self.declared_phase,
            "rationale": self.rationale,
            "flags": dict(self.flags),
        }


def _family_verdicts(system: HistogramSystem, chain: PartitionChain,
                     ) -> tuple[dict, Optional[Verdict], Optional[Verdict], bool]:
    """(all verdicts, existence verdict, domination verdict, completely_random)."""
    if isinstance(system, DirichletSystem):
        existence = dirichlet_condition(system, chain.domain)
        dominated = dirichlet_weak_condition(system, chain.domain)
        return ({"existence": existence, "dominated": dominated},
                existence, dominated, True)
    if isinstance(system, PolyaTreeSystem):
        tight = polya_tight_condition(system)
        leak = polya_leakage_condition(system)
        dominated = polya_weak_condition(system)
        return ({"tight": tight, "leakage": leak, "dominated": dominated},
                tight, dominated, system.completely_random)
    if isinstance(system, GaussianSystem):
        verdicts = gaussian_conditions(system, chain)
        return (verdicts, verdicts.get("diagonal"), verdicts["weak"],
                system.completely_random)
    if isinstance(system, LeakageSystem):
        tight = leakage_counterexample(system.delta, system.depth,
                                       interior=system.interior).verdict
        return ({"tight": tight}, tight, None, False)
    raise ValidationError("diagnostics/unsupported-family",
                          f"no phase clauses for {type(system).__name__}")


_DEMOTED = {"random-atomic": "continuous-singular",
            "fixed-atomic": "absolutely-continuous"}


def phase_report(system: HistogramSystem, chain: PartitionChain, *,
                 depths: Optional[Sequence[int]] = None,
                 replicates: int = DEFAULT_CURVE_SAMPLES,
                 seed: int = 0, L_grid: Sequence[float] = (1.0, 2.0, 5.0, 20.0),
                 delta: float = 0.1, jobs: int = 1,
                 include_domination: bool = True) -> PhaseReport:
    """Exact condition verdicts plus Monte-Carlo corroboration, combined
    through the phase decision table.

    The table reads the domination verdict against the complete-randomness
    flag: dominated and not completely random gives absolutely-continuous,
    dominated and completely random gives fixed-atomic; a domination
    statistic that provably diverges flips those to continuous-singular and
    random-atomic, provided the existence-side verdict holds.  Undetermined
    verdicts, or a failed existence condition, give inconclusive.  When the
    table lands on an atomic label, the largest-cell-share curve must
    plateau to keep it; a decreasing curve vetoes the atomic sub-label and
    demotes to the corresponding non-atomic phase.
    """
    verdicts, existence, dominated, completely_random = \
        _family_verdicts(system, chain)
    if depths is None:
        depths = tuple(range(2, min(chain.depth, 8) + 1))

    atom_curve = dom_result = None
    if depths and replicates >= 2 and dominated is not None:
        atom_curve = atomicity_statistic(system, chain, depths, replicates,
                                         seed=seed, jobs=jobs)
        if include_domination:
            dom_result = domination_statistic(system, chain, depths, L_grid,
                                              replicates, delta=delta,
                                              seed=seed, jobs=jobs)

    flags = {"completely_random": completely_random,
             "atomic_corroborated": None}

    if existence is not None and existence.status == FAILS:
        declared = "inconclusive"
        rationale = (f"the tightness condition ({existence.anchor}) fails at "
                     f"finite depth — {existence.argument} — so no tight "
                     "limit exists and no phase clause applies")
    elif dominated is None:
        declared = "inconclusive"
        rationale = ("degenerate deterministic family: tightness holds but "
                     "no domination clause is evaluated")
    elif dominated.status == HOLDS and \
            (existence is None or existence.status == HOLDS):
        declared = "fixed-atomic" if completely_random else "absolutely-continuous"
        rationale = (f"the domination condition ({dominated.anchor}) holds and "
                     f"the family is {'completely random' if completely_random else 'not completely random'}, "
                     f"which selects the {declared} clause")
    elif dominated.status in (FAILS, SUFFICIENT_CONDITION_FAILS) and \
            (existence is None or existence.status == HOLDS):
        declared = "random-atomic" if completely_random else "continuous-singular"
        how = ("fails outright" if dominated.status == FAILS
               else "diverges, so the sufficient domination criterion cannot engage")
        rationale = (f"the domination statistic ({dominated.anchor}) {how}, "
                     f"while the existence side "
                     f"({existence.anchor if existence is not None else 'unconditional'}) "
                     f"holds; with the family "
                     f"{'completely random' if completely_random else 'not completely random'} "
                     f"this selects the {declared} clause")
    else:
        declared = "inconclusive"
        rationale = ("an undetermined verdict blocks every clause of the "
                     "phase table; Monte-Carlo curves are attached as "
                     "evidence only")

    if declared in _DEMOTED and atom_curve is not None:
        shape = classify_atomicity(atom_curve)
        if shape == "plateau":
            flags["atomic_corroborated"] = True
            rationale += ("; the largest-cell-share curve plateaus at "
                          f"{atom_curve.points[-1].mean:.3g}, corroborating "
                          "the atomic label")
        elif shape == "decreasing":
            flags["atomic_corroborated"] = False
            demoted = _DEMOTED[declared]
            rationale += ("; however the largest-cell-share curve decreases "
                          f"to {atom_curve.points[-1].mean:.3g}, so the "
                          f"atomic sub-label is vetoed and the phase demotes "
                          f"to {demoted}")
            declared = demoted
        else:
            rationale += ("; the largest-cell-share curve is ambiguous, so "
                          "the atomic sub-label rests on the verdicts alone")

    return PhaseReport(
        family=system.to_json(),
        condition_verdicts=verdicts,
        atomicity_curve=atom_curve,
        domination_curve=None if dom_result is None else dom_result.means,
        domination_tail_curve=None if dom_result is None else dom_result.tails,
        declared_phase=declared,
        rationale=rationale,
        flags=flags,
    )
