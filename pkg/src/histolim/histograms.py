"""Histograms on partitions: projection, total variation, truncation, densities.

A histogram assigns one float per cell of a partition.  Three kinds are
distinguished: `probability` (nonnegative, sums to one within 1e-12),
`positive` (nonnegative), and `signed` (anything finite).  Values are stored
in a read-only numpy array in the partition's cell order.

Projection onto a coarser partition sums each group of child cells; because
it is a row-stochastic-transpose operation it preserves kind.  Total
variation of a signed histogram is the absolute-value sum, and the
truncated-excess statistic sum_A max(p(A) - L q(A), 0) measures the mass of
p that no multiple L of the reference q can cover — the finite-depth probe
behind the dominated-mass condition.

Densities come in two flavours: `PiecewiseDensity` (a step function of the
cell averages, i.e. the density of a histogram with respect to a reference
histogram) and `PolynomialDensity` (an exact polynomial in x).  The
total-variation distance (1/2) * integral |f - g| d(ref) is evaluated in
closed form whenever the integrand is piecewise polynomial — the absolute
value is split at real roots — and by adaptive Simpson quadrature (interval
halving until successive estimates agree within 1e-9) otherwise.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import NumericError, ValidationError
from .partitions import (
    Cell,
    Partition,
    RefinementMap,
    endpoint_to_float,
    format_endpoint,
    refine_map,
)

PROBABILITY = "probability"
POSITIVE = "positive"
SIGNED = "signed"
_KINDS = (PROBABILITY, POSITIVE, SIGNED)

PROBABILITY_SUM_TOL = 1e-12
SIMPSON_TOL = 1e-9


def _frozen_array(values, shape_len: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != shape_len:
        raise ValidationError("histogram/shape", f"expected {shape_len}-d values, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_kind(values: np.ndarray, kind: str, normalize: bool) -> np.ndarray:
    if kind not in _KINDS:
        raise ValidationError("histogram/kind", f"unknown kind {kind!r}")
    if not np.all(np.isfinite(values)):
        raise ValidationError("histogram/not-finite", "histogram values must be finite")
    if kind in (PROBABILITY, POSITIVE) and np.any(values < 0):
        worst = float(values.min())
        raise ValidationError("histogram/negative", f"{kind} histogram has negative entry {worst}")
    if kind == PROBABILITY:
        totals = values.sum(axis=-1)
        if normalize:
            if np.any(totals <= 0):
                raise ValidationError("histogram/normalize", "cannot normalize zero total mass")
            values = values / totals[..., None] if values.ndim > 1 else values / totals
        else:
            if np.any(np.abs(totals - 1.0) > PROBABILITY_SUM_TOL):
                worst = float(np.abs(totals - 1.0).max())
                raise ValidationError(
                    "histogram/total-mass",
                    f"probability histogram total differs from 1 by {worst:.3e} "
                    f"(> {PROBABILITY_SUM_TOL}); pass normalize=True to rescale explicitly",
                )
    return values


@dataclass(frozen=True)
class Histogram:
    partition: Partition
    values: np.ndarray
    kind: str = SIGNED

    def __post_init__(self):
        arr = _frozen_array(self.values, 1)
        if len(arr) != len(self.partition):
            raise ValidationError(
                "histogram/shape",
                f"{len(arr)} values for {len(self.partition)} cells",
            )
        arr = _check_kind(arr, self.kind, normalize=False)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @staticmethod
    def probability(partition: Partition, values, *, normalize: bool = False) -> "Histogram":
        arr = np.array(values, dtype=float)
        arr = _check_kind(arr, PROBABILITY, normalize=normalize)
        return Histogram(partition, arr, PROBABILITY)

    def total(self) -> float:
        return float(self.values.sum())

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class HistogramStack:
    """n histograms on one partition, stored as an (n, cells) array."""

    partition: Partition
    values: np.ndarray
    kind: str = SIGNED

    def __post_init__(self):
        arr = _frozen_array(self.values, 2)
        if arr.shape[1] != len(self.partition):
            raise ValidationError(
                "histogram/shape",
                f"{arr.shape[1]} columns for {len(self.partition)} cells",
            )
        arr = _check_kind(arr, self.kind, normalize=False)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]

    def histogram(self, i: int) -> Histogram:
        return Histogram(self.partition, self.values[i], self.kind)


def _resolve_map(source: Partition, target: Union[Partition, RefinementMap]) -> RefinementMap:
    if isinstance(target, RefinementMap):
        if target.fine != source:
            raise ValidationError("histogram/partition-mismatch",
                                  "refinement map does not match the histogram's partition")
        return target
    return refine_map(target, source)


def project(h: Union[Histogram, HistogramStack],
            target: Union[Partition, RefinementMap]) -> Union[Histogram, HistogramStack]:
    """Sum cell values into the containing cells of a coarser partition."""
    rmap = _resolve_map(h.partition, target)
    vals = project_values(h.values, rmap)
    if isinstance(h, HistogramStack):
        return HistogramStack(rmap.coarse, vals, h.kind)
    return Histogram(rmap.coarse, vals, h.kind)


def project_values(values: np.ndarray, rmap: RefinementMap) -> np.ndarray:
    """Array form of `project` along the last axis (groups are contiguous)."""
    return np.add.reduceat(values, rmap.boundaries, axis=-1)


def tv_norm(h: Union[Histogram, HistogramStack]) -> Union[float, np.ndarray]:
    """Total-variation norm: sum of absolute cell values."""
    out = np.abs(h.values).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def truncation_values(p: np.ndarray, q: np.ndarray, level: float) -> np.ndarray:
    return np.clip(p - level * q, 0.0, None).sum(axis=-1)


def truncation_statistic(p: Histogram, q: Histogram, level: float) -> float:
    """Excess of p over level * q:  sum_A max(p(A) - level * q(A), 0).

    Zero exactly when p <= level * q cellwise; non-increasing in `level` and
    non-decreasing under refinement of the common partition.
    """
    if p.partition != q.partition:
        raise ValidationError("histogram/partition-mismatch",
                              "p and q must live on the same partition")
    if np.any(q.values < 0):
        raise ValidationError("histogram/negative-reference",
                              "reference histogram must be nonnegative")
    if level < 0:
        raise ValidationError("histogram/truncation-level", f"level must be >= 0, got {level}")
    return float(truncation_values(p.values, q.values, level))


@dataclass(frozen=True)
class PiecewiseDensity:
    """Step function taking `values[i]` on cell i of `partition`."""

    partition: Partition
    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, 1)
        if len(arr) != len(self.partition):
            raise ValidationError("density/shape",
                                  f"{len(arr)} values for {len(self.partition)} cells")
        object.__setattr__(self, "values", arr)

    def __call__(self, x) -> float:
        return float(self.values[self.partition.cells.index(self.partition.cell_of(x))])


@dataclass(frozen=True)
class PolynomialDensity:
    """Exact polynomial c0 + c1 x + c2 x^2 + ... on a bounded domain."""

    coefficients: tuple[float, ...]

    def __call__(self, x):
        out = 0.0
        for c in reversed(self.coefficients):
            out = out * x + c
        return out

    def integral(self, a: float, b: float) -> float:
        anti = [0.0] + [c / (k + 1) for k, c in enumerate(self.coefficients)]
        lo = hi = 0.0
        for c in reversed(anti):
            lo = lo * a + c
            hi = hi * b + c
        return hi - lo

    def shifted(self, offset: float) -> "PolynomialDensity":
        coef = list(self.coefficients)
        coef[0] = coef[0] - offset if coef else -offset
        return PolynomialDensity(tuple(coef))


Density = Union[PiecewiseDensity, PolynomialDensity, Callable[[float], float]]


def histogram_density(p: Histogram, q: Histogram) -> PiecewiseDensity:
    """Cellwise density of p with respect to q (the step function p(A)/q(A)).

    Cells with q(A) = 0 must carry p(A) = 0 and get density 0; anything else
    would put mass where the reference has none.
    """
    if p.partition != q.partition:
        raise ValidationError("histogram/partition-mismatch",
                              "p and q must live on the same partition")
    if np.any(q.values < 0):
        raise ValidationError("histogram/negative-reference",
                              "reference histogram must be nonnegative")
    zero = q.values == 0
    if np.any(zero & (p.values != 0)):
        i = int(np.argmax(zero & (p.values != 0)))
        raise ValidationError(
            "density/zero-reference-cell",
            f"cell {p.partition.cells[i]!r} has zero reference mass but p={p.values[i]}",
        )
    out = np.zeros_like(p.values)
    np.divide(p.values, q.values, out=out, where=~zero)
    return PiecewiseDensity(p.partition, out)


def lebesgue_reference(partition: Partition, scale: float = 1.0) -> Histogram:
    """Cell widths as a positive histogram (the flat reference)."""
    widths = partition.widths()
    if not np.all(np.isfinite(widths)):
        raise ValidationError("histogram/unbounded",
                              "flat reference needs bounded cells")
    return Histogram(partition, scale * widths, POSITIVE)


def _abs_polynomial_integral(poly: PolynomialDensity, a: float, b: float) -> float:
    """Exact integral of |poly| over [a, b]: split at real roots, then sign
    the piecewise antiderivative by a midpoint sample."""
    coef = np.array(poly.coefficients, dtype=float)
    pts = [a, b]
    if np.any(coef[1:] != 0.0):
        roots = np.polynomial.Polynomial(coef).roots()
        for r in roots:
            if abs(r.imag) < 1e-12 and a < r.real < b:
                pts.append(float(r.real))
    pts = sorted(set(pts))
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        piece = poly.integral(lo, hi)
        total += piece if poly(mid) >= 0 else -piece
    return total


def _adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                      tol: float = SIMPSON_TOL, depth: int = 48) -> float:
    def simpson(lo, hi):
        mid = 0.5 * (lo + hi)
        return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi)), mid

    def recurse(lo, hi, whole, lo_mid, budget):
        mid = lo_mid
        left, lm = simpson(lo, mid)
        right, rm = simpson(mid, hi)
        if budget <= 0:
            raise NumericError("quadrature/no-convergence",
                               f"adaptive Simpson failed to converge on [{lo}, {hi}]")
        if abs(left + right - whole) < 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, mid, left, lm, budget - 1)
                + recurse(mid, hi, right, rm, budget - 1))

    whole, mid = simpson(a, b)
    return recurse(a, b, whole, mid, depth)


def _density_on_cell(f: Density, cell: Cell):
    """(polynomial | callable) restricted to a cell."""
    if isinstance(f, PiecewiseDensity):
        idx = f.partition.cells.index(cell) if cell in f.partition.cells else None
        if idx is None:
            raise ValidationError("density/partition-mismatch",
                                  "piecewise density does not align with the integration cells")
        return PolynomialDensity((float(f.values[idx]),))
    return f


def _common_cells(f: Density, g: Density,
                  partition: Partition | None) -> Sequence[Cell]:
    for d in (f, g):
        if isinstance(d, PiecewiseDensity):
            if partition is None or len(d.partition) >= len(partition):
                partition = d.partition
    if partition is None:
        raise ValidationError("density/no-cells",
                              "need a partition when neither density is piecewise")
    return [c for c in partition.cells if not c.is_atom]


def tv_distance_density(f: Density, g: Density, *,
                        partition: Partition | None = None,
                        reference: Histogram | None = None) -> float:
    """Total-variation distance (1/2) * integral |f - g| d(ref).

    The reference defaults to the flat measure on the cells (Lebesgue); a
    positive reference histogram reweights each cell uniformly.  When both
    densities are piecewise constant / polynomial on the cells the integral
    is exact; otherwise each cell falls back to adaptive Simpson.
    """
    cells = _common_cells(f, g, partition)
    if reference is not None and np.any(reference.values < 0):
        raise ValidationError("histogram/negative-reference",
                              "reference histogram must be nonnegative")
    ref_lookup = None
    if reference is not None:
        ref_lookup = {c: float(v) for c, v in zip(reference.partition.cells, reference.values)}
    total = 0.0
    for cell in cells:
        if not cell.bounded:
            raise ValidationError("density/unbounded",
                                  "density distances need bounded cells")
        a, b = endpoint_to_float(cell.left), endpoint_to_float(cell.right)
        if b <= a:
            continue
        weight = 1.0
        if ref_lookup is not None:
            mass = ref_lookup.get(cell)
            if mass is None:
                raise ValidationError("density/partition-mismatch",
                                      "reference histogram does not cover the integration cells")
            weight = mass / (b - a)
            if weight == 0.0:
                continue
        fc, gc = _density_on_cell(f, cell), _density_on_cell(g, cell)
        if isinstance(fc, PolynomialDensity) and isinstance(gc, PolynomialDensity):
            n = max(len(fc.coefficients), len(gc.coefficients))
            diff = tuple(
                (fc.coefficients[k] if k < len(fc.coefficients) else 0.0)
                - (gc.coefficients[k] if k < len(gc.coefficients) else 0.0)
                for k in range(n)
            )
            total += weight * _abs_polynomial_integral(PolynomialDensity(diff), a, b)
        else:
            total += weight * _adaptive_simpson(lambda x: abs(fc(x) - gc(x)), a, b)
    return 0.5 * total


# ---------------------------------------------------------------------------
# serialization

def histogram_to_json(h: Histogram) -> dict:
    return {
        "kind": h.kind,
        "domain": h.partition.domain.to_json(),
        "endpoints": [format_endpoint(e) for e in h.partition.cut_points()],
        "has_atom": h.partition.has_atom,
        "values": [float(v) for v in h.values],
    }


def histogram_from_json(obj: dict, partition: Partition) -> Histogram:
    values = np.array(obj["values"], dtype=float)
    expect = [format_endpoint(e) for e in partition.cut_points()]
    if list(obj.get("endpoints", expect)) != expect:
        raise ValidationError("histogram/reload", "endpoints do not match the given partition")
    return Histogram(partition, values, obj.get("kind", SIGNED))


def histogram_to_csv(h: Histogram) -> str:
    """CSV rows (cell_left, cell_right, value); floats via repr so that a
    read-back reproduces the exact doubles."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cell_left", "cell_right", "value"])
    for cell, v in zip(h.partition.cells, h.values):
        writer.writerow([format_endpoint(cell.left), format_endpoint(cell.right), repr(float(v))])
    return buf.getvalue()


def histogram_from_csv(text: str, partition: Partition, kind: str = SIGNED) -> Histogram:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["cell_left", "cell_right", "value"]:
        raise ValidationError("histogram/csv", "missing cell_left,cell_right,value header")
    body = rows[1:]
    if len(body) != len(partition):
        raise ValidationError("histogram/csv",
                              f"{len(body)} rows for {len(partition)} cells")
    values = []
    for row, cell in zip(body, partition.cells):
        if len(row) != 3:
            raise ValidationError("histogram/csv", f"malformed row {row!r}")
        left, right, value = row
        if (left != format_endpoint(cell.left)
                and float(left) != endpoint_to_float(cell.left)):
            raise ValidationError("histogram/csv",
                                  f"row endpoint {left!r} does not match cell {cell!r}")
        values.append(float(value))
    return Histogram(partition, np.array(values), kind)


def stack_to_csv(stack: HistogramStack) -> str:
    """Wide CSV: one row per sample, one column per cell (by cell order)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample"] + [c.index.label() for c in stack.partition.cells])
    for i in range(len(stack)):
        writer.writerow([i] + [repr(float(v)) for v in stack.values[i]])
    return buf.getvalue()


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
