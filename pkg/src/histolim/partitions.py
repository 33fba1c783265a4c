"""Refining interval partitions with binary cell addressing.

A partition splits a one-dimensional domain into finitely many half-open
cells (l, r] — plus, on a left-closed domain, the singleton cell {left} —
ordered left to right.  A chain is a sequence of partitions in which every
cell of level m+1 sits inside exactly one cell of level m, so each interval
cell carries a binary address: the root cell is (), and the two children of
address b extend it by 0 (left) and 1 (right).

Two chain builders are provided:

* `dyadic_chain` — 2^m equal cells of a bounded rational interval, with
  exact `fractions.Fraction` endpoints so no depth accumulates rounding;
* `triangular_chain` — nested rows of float cut points on the real line
  (row n holds 2^n - 1 strictly increasing points, even positions repeating
  the previous row), with unbounded end cells.

`cantor_midpoint` returns the exact mid-point of the ternary middle-thirds
interval addressed by a bit string; it parameterizes the trigonometric
split-ratio rule used elsewhere.

Depth is capped (default 30 levels, overridable via the HISTOLIM_MAX_DEPTH
environment variable) because cell counts grow as 2^m.
"""

from __future__ import annotations

import json
import os
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import ValidationError

DEFAULT_MAX_DEPTH = 30
MAX_DEPTH_ENV = "HISTOLIM_MAX_DEPTH"


def max_depth() -> int:
    """Deepest allowed chain level, from the environment or the default."""
    raw = os.environ.get(MAX_DEPTH_ENV)
    if raw is None:
        return DEFAULT_MAX_DEPTH
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError("config/max-depth", f"{MAX_DEPTH_ENV}={raw!r} is not an integer")
    if value < 0:
        raise ValidationError("config/max-depth", f"{MAX_DEPTH_ENV} must be >= 0, got {value}")
    return value


class _Infinity:
    """Symbolic unbounded endpoint; compares beyond every real number."""

    __slots__ = ("sign",)

    def __init__(self, sign: int):
        self.sign = sign

    def __repr__(self) -> str:
        return "+inf" if self.sign > 0 else "-inf"

    def __eq__(self, other) -> bool:
        return isinstance(other, _Infinity) and other.sign == self.sign

    def __hash__(self) -> int:
        return hash(("histolim-endpoint-infinity", self.sign))

    def __lt__(self, other) -> bool:
        if isinstance(other, _Infinity):
            return self.sign < other.sign
        return self.sign < 0

    def __gt__(self, other) -> bool:
        if isinstance(other, _Infinity):
            return self.sign > other.sign
        return self.sign > 0

    def __le__(self, other) -> bool:
        return self == other or self < other

    def __ge__(self, other) -> bool:
        return self == other or self > other

    def __float__(self) -> float:
        return float("inf") if self.sign > 0 else float("-inf")


POS_INF = _Infinity(+1)
NEG_INF = _Infinity(-1)

Endpoint = Union[Fraction, float, int, _Infinity]


def _is_finite(e: Endpoint) -> bool:
    return not isinstance(e, _Infinity)


def endpoint_to_float(e: Endpoint) -> float:
    return float(e)


def format_endpoint(e: Endpoint) -> str:
    """Lossless text form: Fractions as 'p/q' or 'n', floats via repr."""
    if isinstance(e, _Infinity):
        return repr(e)
    if isinstance(e, Fraction) or isinstance(e, int):
        return str(e)
    return repr(float(e))


def parse_endpoint(text) -> Endpoint:
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    if s in ("+inf", "inf"):
        return POS_INF
    if s == "-inf":
        return NEG_INF
    if "/" in s or ("." not in s and "e" not in s and "E" not in s):
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError):
            raise ValidationError("partition/endpoint", f"cannot parse endpoint {text!r}")
    try:
        return float(s)
    except ValueError:
        raise ValidationError("partition/endpoint", f"cannot parse endpoint {text!r}")


@dataclass(frozen=True)
class CellIndex:
    """Binary refinement address.  Interval cells satisfy level == len(bits);
    the singleton cell of a left-closed domain keeps empty bits at every
    level and is marked with `atom=True`."""

    bits: tuple[int, ...]
    level: int
    atom: bool = False

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValidationError("partition/bits", f"bits must be 0/1, got {self.bits}")
        if self.atom and self.bits:
            raise ValidationError("partition/bits", "singleton cells carry no bits")
        if not self.atom and self.level != len(self.bits):
            raise ValidationError(
                "partition/bits",
                f"interval cell level {self.level} != len(bits) {len(self.bits)}",
            )

    def label(self) -> str:
        if self.atom:
            return "{left}"
        return "".join(str(b) for b in self.bits) if self.bits else "()"


@dataclass(frozen=True)
class Cell:
    """Half-open interval (left, right], or the singleton {left} when the
    index is an atom (then left == right)."""

    left: Endpoint
    right: Endpoint
    index: CellIndex

    @property
    def is_atom(self) -> bool:
        return self.index.atom

    @property
    def bounded(self) -> bool:
        return _is_finite(self.left) and _is_finite(self.right)

    def width(self) -> float:
        if self.is_atom:
            return 0.0
        if not self.bounded:
            return float("inf")
        return float(self.right - self.left)

    def contains(self, x) -> bool:
        if self.is_atom:
            return x == self.left
        return self.left < x and (x <= self.right if _is_finite(self.right) else True)

    def __repr__(self) -> str:
        if self.is_atom:
            return f"{{{format_endpoint(self.left)}}}"
        return f"({format_endpoint(self.left)}, {format_endpoint(self.right)}]"


@dataclass(frozen=True)
class Domain:
    """Interval descriptor.  `closed_left` marks whether the left endpoint
    itself belongs to the domain (and hence appears as a singleton cell)."""

    left: Endpoint
    right: Endpoint
    closed_left: bool = False

    @staticmethod
    def unit(closed_left: bool = False) -> "Domain":
        return Domain(Fraction(0), Fraction(1), closed_left)

    @staticmethod
    def real_line() -> "Domain":
        return Domain(NEG_INF, POS_INF, False)

    @property
    def bounded(self) -> bool:
        return _is_finite(self.left) and _is_finite(self.right)

    def contains(self, x) -> bool:
        if self.closed_left and x == self.left:
            return True
        left_ok = True if not _is_finite(self.left) else self.left < x
        right_ok = True if not _is_finite(self.right) else x <= self.right
        return left_ok and right_ok

    def describe(self) -> str:
        l, r = format_endpoint(self.left), format_endpoint(self.right)
        return f"[{l}, {r}]" if self.closed_left else f"({l}, {r}]"

    def to_json(self) -> dict:
        return {"left": format_endpoint(self.left), "right": format_endpoint(self.right),
                "closed_left": self.closed_left}

    @staticmethod
    def from_json(obj: dict) -> "Domain":
        return Domain(parse_endpoint(obj["left"]), parse_endpoint(obj["right"]),
                      bool(obj.get("closed_left", False)))


@dataclass(frozen=True)
class Partition:
    """Ordered cells covering a domain exactly; immutable."""

    domain: Domain
    cells: tuple[Cell, ...]
    kind: str  # "dyadic" | "triangular"
    level: int

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[Cell]:
        return iter(self.cells)

    @property
    def has_atom(self) -> bool:
        return bool(self.cells) and self.cells[0].is_atom

    @property
    def interval_cells(self) -> tuple[Cell, ...]:
        return self.cells[1:] if self.has_atom else self.cells

    def widths(self) -> np.ndarray:
        return np.array([c.width() for c in self.cells], dtype=float)

    def cut_points(self) -> list[Endpoint]:
        """All endpoints left to right (domain ends included)."""
        ivs = self.interval_cells
        return [ivs[0].left] + [c.right for c in ivs]

    def cell_of(self, x) -> Cell:
        """Cell containing x under the right-endpoint-included convention."""
        if not self.domain.contains(x):
            raise ValidationError(
                "partition/domain",
                f"x={x!r} is not in the domain {self.domain.describe()}",
            )
        if self.has_atom and x == self.cells[0].left:
            return self.cells[0]
        ivs = self.interval_cells
        rights = [c.right for c in ivs]
        finite_rights = [float(r) for r in rights]
        pos = bisect_left(finite_rights, float(x))
        # float bisect is a hint; settle exact membership locally
        for j in range(max(pos - 1, 0), min(pos + 2, len(ivs))):
            if ivs[j].contains(x):
                return ivs[j]
        raise ValidationError("partition/domain", f"no cell contains x={x!r}")  # pragma: no cover

    def index_by_cellindex(self) -> dict[CellIndex, int]:
        return {c.index: i for i, c in enumerate(self.cells)}


def cell_of(partition: Partition, x) -> Cell:
    return partition.cell_of(x)


@dataclass(frozen=True)
class RefinementMap:
    """Grouping of fine-cell positions under each coarse cell.

    Groups are contiguous runs in fine order (a consequence of nested
    interval refinement), so `boundaries` supports np.add.reduceat-style
    projection of value arrays.
    """

    coarse: Partition
    fine: Partition
    groups: tuple[tuple[int, ...], ...]

    @property
    def boundaries(self) -> np.ndarray:
        return np.array([g[0] for g in self.groups], dtype=np.intp)

    def compose(self, finer: "RefinementMap") -> "RefinementMap":
        """Chain two maps: self (coarse->mid) with finer (mid->fine)."""
        if finer.coarse is not self.fine and finer.coarse != self.fine:
            raise ValidationError(
                "refinement/compose",
                "intermediate partitions do not match",
            )
        groups = tuple(
            tuple(k for j in group for k in finer.groups[j]) for group in self.groups
        )
        return RefinementMap(self.coarse, finer.fine, groups)


def refine_map(coarse: Partition, fine: Partition) -> RefinementMap:
    """Match each fine cell to the coarse cell that contains it.

    Raises a validation error naming the first fine cell that straddles a
    coarse boundary or leaves a gap, so broken inputs fail loudly instead of
    producing silently misaligned projections.
    """
    if coarse.domain != fine.domain:
        raise ValidationError("refinement/domain", "partitions live on different domains")
    groups: list[list[int]] = [[] for _ in coarse.cells]
    j = 0
    for i, big in enumerate(coarse.cells):
        if big.is_atom:
            if j >= len(fine.cells) or not fine.cells[j].is_atom or fine.cells[j].left != big.left:
                raise ValidationError(
                    "refinement/gap",
                    f"coarse singleton {big!r} has no matching fine singleton",
                )
            groups[i].append(j)
            j += 1
            continue
        if j >= len(fine.cells) or fine.cells[j].left != big.left:
            got = fine.cells[j] if j < len(fine.cells) else None
            raise ValidationError(
                "refinement/gap",
                f"fine cells do not start coarse cell {big!r} (next fine cell: {got!r})",
            )
        while True:
            small = fine.cells[j]
            if _is_finite(big.right) and not _is_finite(small.right):
                raise ValidationError(
                    "refinement/straddle",
                    f"fine cell {small!r} straddles the coarse boundary at {format_endpoint(big.right)}",
                )
            if _is_finite(small.right) and _is_finite(big.right) and small.right > big.right:
                raise ValidationError(
                    "refinement/straddle",
                    f"fine cell {small!r} straddles the coarse boundary at {format_endpoint(big.right)}",
                )
            groups[i].append(j)
            j += 1
            if small.right == big.right:
                break
            if j >= len(fine.cells):
                raise ValidationError(
                    "refinement/gap",
                    f"fine cells stop before the end of coarse cell {big!r}",
                )
    if j != len(fine.cells):
        raise ValidationError("refinement/gap", "fine partition has cells beyond the coarse cover")
    return RefinementMap(coarse, fine, tuple(tuple(g) for g in groups))


@dataclass(frozen=True)
class PartitionChain:
    """Partitions of one domain at levels 0..depth, each refining the last."""

    partitions: tuple[Partition, ...]

    def __post_init__(self):
        if not self.partitions:
            raise ValidationError("chain/empty", "a chain needs at least level 0")

    def __len__(self) -> int:
        return len(self.partitions)

    def __getitem__(self, level: int) -> Partition:
        return self.partitions[level]

    @property
    def depth(self) -> int:
        return len(self.partitions) - 1

    @property
    def domain(self) -> Domain:
        return self.partitions[0].domain

    @property
    def kind(self) -> str:
        return self.partitions[0].kind

    def refinement(self, coarse_level: int, fine_level: int) -> RefinementMap:
        if not 0 <= coarse_level <= fine_level <= self.depth:
            raise ValidationError(
                "chain/levels",
                f"need 0 <= coarse {coarse_level} <= fine {fine_level} <= depth {self.depth}",
            )
        out = refine_map(self.partitions[coarse_level], self.partitions[coarse_level])
        for lvl in range(coarse_level, fine_level):
            out = out.compose(refine_map(self.partitions[lvl], self.partitions[lvl + 1]))
        return out

    def to_json(self) -> dict:
        return {
            "domain": self.domain.to_json(),
            "kind": self.kind,
            "levels": [[format_endpoint(e) for e in p.cut_points()] for p in self.partitions],
        }

    @staticmethod
    def from_json(obj: dict) -> "PartitionChain":
        domain = Domain.from_json(obj["domain"])
        kind = obj.get("kind", "triangular")
        levels = [[parse_endpoint(e) for e in row] for row in obj["levels"]]
        if kind == "dyadic":
            depth = len(levels) - 1
            chain = dyadic_chain(domain, depth)
            for lvl, row in enumerate(levels):
                expect = chain[lvl].cut_points()
                if len(row) != len(expect) or any(a != b for a, b in zip(row, expect)):
                    raise ValidationError(
                        "chain/reload",
                        f"level {lvl} endpoints do not match an equal dyadic refinement",
                    )
            return chain
        rows = [[float(e) for e in row[1:-1]] for row in levels[1:]]
        return triangular_chain(rows, domain=domain)


def dyadic_chain(domain: Domain | None = None, depth: int = 0) -> PartitionChain:
    """Equal binary refinement of a bounded rational interval.

    Level m has 2^m interval cells with exact Fraction endpoints; a
    left-closed domain additionally carries the singleton {left} at every
    level (its mass is specified separately by the samplers).
    """
    if domain is None:
        domain = Domain.unit()
    if not domain.bounded:
        raise ValidationError("partition/unbounded", "equal dyadic refinement needs a bounded domain")
    cap = max_depth()
    if depth > cap:
        raise ValidationError(
            "partition/depth-capacity",
            f"depth {depth} exceeds the configured maximum {cap} (set {MAX_DEPTH_ENV} to raise it)",
        )
    if depth < 0:
        raise ValidationError("partition/depth", f"depth must be >= 0, got {depth}")
    left = Fraction(domain.left)
    right = Fraction(domain.right)
    if right <= left:
        raise ValidationError("partition/domain", f"empty domain {domain.describe()}")
    span = right - left
    partitions = []
    for m in range(depth + 1):
        cells: list[Cell] = []
        if domain.closed_left:
            cells.append(Cell(left, left, CellIndex((), m, atom=True)))
        h = span / (1 << m)
        for i in range(1 << m):
            bits = tuple((i >> (m - 1 - k)) & 1 for k in range(m))
            cells.append(Cell(left + i * h, left + (i + 1) * h, CellIndex(bits, m)))
        partitions.append(Partition(domain, tuple(cells), "dyadic", m))
    return PartitionChain(tuple(partitions))


def dyadic_cell_bounds(bits: Sequence[int], domain: Domain | None = None) -> tuple[Fraction, Fraction]:
    """Exact endpoints of the dyadic cell addressed by a bit string."""
    if domain is None:
        domain = Domain.unit()
    left = Fraction(domain.left)
    span = Fraction(domain.right) - left
    m = len(bits)
    i = 0
    for b in bits:
        i = (i << 1) | b
    h = span / (1 << m) if m else span
    return left + i * h, left + (i + 1) * h


def triangular_chain(rows: Sequence[Sequence[float]], domain: Domain | None = None) -> PartitionChain:
    """Chain over the real line from nested rows of cut points.

    Row n (1-based) must hold 2^n - 1 strictly increasing finite floats whose
    even positions repeat row n-1; the first violation is reported by its
    (row, position) pair, 1-based.  Strictness is exact — no tolerance — so
    accidentally duplicated cut points fail instead of creating empty cells.
    """
    if domain is None:
        domain = Domain.real_line()
    if domain.bounded and domain.closed_left:
        raise ValidationError("partition/unsupported-domain",
                              "nested-row chains support open-left domains only")
    cap = max_depth()
    if len(rows) > cap:
        raise ValidationError(
            "partition/depth-capacity",
            f"depth {len(rows)} exceeds the configured maximum {cap} (set {MAX_DEPTH_ENV} to raise it)",
        )
    parsed: list[list[float]] = []
    for n, row in enumerate(rows, start=1):
        row = [float(v) for v in row]
        if len(row) != (1 << n) - 1:
            raise ValidationError(
                "partition/row-length",
                f"row {n} has {len(row)} points, expected {(1 << n) - 1}",
            )
        for m, v in enumerate(row, start=1):
            if not np.isfinite(v):
                raise ValidationError("partition/ordering", f"q[{n}][{m}]={v!r} is not finite")
            if not domain.contains(v):
                raise ValidationError(
                    "partition/domain",
                    f"q[{n}][{m}]={v!r} lies outside the domain {domain.describe()}",
                )
        for m in range(1, len(row)):
            if not row[m - 1] < row[m]:
                raise ValidationError(
                    "partition/ordering",
                    f"row {n} is not strictly increasing at (n, m)=({n}, {m + 1}): "
                    f"q[{n}][{m + 1}]={row[m]!r} <= q[{n}][{m}]={row[m - 1]!r}",
                )
        if n > 1:
            prev = parsed[-1]
            for m in range(1, len(prev) + 1):
                if row[2 * m - 1] != prev[m - 1]:
                    raise ValidationError(
                        "partition/nesting",
                        f"nesting violated at (n, m)=({n}, {2 * m}): "
                        f"q[{n}][{2 * m}]={row[2 * m - 1]!r} != q[{n - 1}][{m}]={prev[m - 1]!r}",
                    )
        parsed.append(row)
    partitions = []
    lo, hi = domain.left, domain.right
    for n in range(len(parsed) + 1):
        pts: list[Endpoint] = [lo] + ([] if n == 0 else list(parsed[n - 1])) + [hi]
        cells = []
        for k in range(len(pts) - 1):
            bits = tuple((k >> (n - 1 - j)) & 1 for j in range(n))
            cells.append(Cell(pts[k], pts[k + 1], CellIndex(bits, n)))
        partitions.append(Partition(domain, tuple(cells), "triangular", n))
    return PartitionChain(tuple(partitions))


def cantor_midpoint(bits: Sequence[int]) -> Fraction:
    """Exact mid-point of the middle-thirds interval addressed by `bits`.

    The empty address gives 1/2; extending by 0 or 1 descends into the left
    or right surviving third.  Along all-zeros the value is (1/2) 3^-m, and
    mirror symmetry gives x(all ones) = 1 - x(all zeros).
    """
    x = Fraction(0)
    for l, b in enumerate(bits, start=1):
        if b not in (0, 1):
            raise ValidationError("partition/bits", f"bits must be 0/1, got {bits!r}")
        if b:
            x += Fraction(2, 3**l)
    return x + Fraction(1, 2 * 3 ** len(bits))


def chain_to_json_text(chain: PartitionChain) -> str:
    return json.dumps(chain.to_json(), indent=2, sort_keys=True)


def chain_from_json_text(text: str) -> PartitionChain:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError("chain/json", f"invalid chain JSON: {e}")
    return PartitionChain.from_json(obj)
