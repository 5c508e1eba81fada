"""Data model for discretized functional observations.

Curves are stored as rows of 2-d float arrays, one column per measurement
point. A :class:`TimeGrid` carries the measurement points in [0, 1] together
with quadrature weights, so that discretized L2 inner products are plain
weighted sums.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError, ParseError

QUADRATURE_RULES = ("trapezoid", "riemann-left")


def quadrature_weights(points: np.ndarray, rule: str = "trapezoid") -> np.ndarray:
    """Quadrature weights for a strictly increasing point sequence.

    trapezoid: endpoint weights are half-gaps, interior weights are
    centered half-sums of the adjacent gaps. riemann-left: forward gaps,
    with the last weight copied from the previous one.
    """
    points = np.asarray(points, dtype=float)
    J = points.size
    if J < 2:
        raise DataValidationError("a time grid needs at least 2 points")
    gaps = np.diff(points)
    w = np.empty(J)
    if rule == "trapezoid":
        w[0] = gaps[0] / 2.0
        w[-1] = gaps[-1] / 2.0
        w[1:-1] = (points[2:] - points[:-2]) / 2.0
    elif rule == "riemann-left":
        w[:-1] = gaps
        w[-1] = gaps[-1]
    else:
        raise DataValidationError(f"unknown quadrature rule {rule!r}")
    return w


@dataclass(frozen=True)
class TimeGrid:
    """Measurement points t_1 < ... < t_J in [0, 1] with quadrature weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        if pts.ndim != 1 or pts.size < 2:
            raise DataValidationError("grid needs at least 2 points")
        if np.any(np.diff(pts) <= 0):
            raise DataValidationError("grid points must be strictly increasing")
        if pts[0] < 0.0 or pts[-1] > 1.0:
            raise DataValidationError("grid points must lie in [0, 1]")
        if wts.shape != pts.shape:
            raise DataValidationError("weights must match points in length")
        if np.any(wts < 0) or not np.all(np.isfinite(wts)):
            raise DataValidationError("weights must be finite and nonnegative")
        if wts.sum() <= 0:
            raise DataValidationError("weights must have positive total mass")

    @property
    def J(self) -> int:
        return self.points.size

    @classmethod
    def from_points(cls, points, rule: str = "trapezoid") -> "TimeGrid":
        points = np.asarray(points, dtype=float)
        return cls(points, quadrature_weights(points, rule))

    @classmethod
    def equispaced(cls, J: int, rule: str = "trapezoid") -> "TimeGrid":
        return cls.from_points(np.linspace(0.0, 1.0, J), rule)


def inner_product(u: np.ndarray, v: np.ndarray, grid: TimeGrid) -> float:
    """Discretized L2 inner product: sum_k u_k v_k Delta_k."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (grid.J,) or v.shape != (grid.J,):
        raise DataValidationError(
            f"curve length mismatch: {u.shape} / {v.shape} vs grid J={grid.J}"
        )
    return float(np.sum(u * v * grid.weights))


def log_cir(prices) -> np.ndarray:
    """Logarithmic cumulative intraday returns: ln p_k - ln p_1.

    The output always starts at exactly 0.
    """
    prices = np.asarray(prices, dtype=float)
    bad = np.flatnonzero(~(prices > 0))
    if bad.size:
        raise DataValidationError(f"nonpositive price at index {bad[0]}")
    out = np.log(prices) - np.log(prices[0])
    out[0] = 0.0
    return out


@dataclass(frozen=True)
class FunctionalSample:
    """A labeled group of curves sharing one time grid."""

    label: str
    values: np.ndarray  # shape (n_j, J)
    grid: TimeGrid

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2 or vals.shape[1] != self.grid.J:
            raise DataValidationError(
                f"group {self.label!r}: curves must be rows of length J={self.grid.J}"
            )
        if vals.shape[0] < 2:
            raise DataValidationError(
                f"group {self.label!r} has {vals.shape[0]} curve(s); at least 2 required"
            )
        if not np.all(np.isfinite(vals)):
            i, k = np.argwhere(~np.isfinite(vals))[0]
            raise DataValidationError(
                f"group {self.label!r}: non-finite value at curve {i}, point {k}"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class PooledDataset:
    """K labeled samples plus their ordered pooled concatenation."""

    samples: tuple
    grid: TimeGrid
    pooled: np.ndarray = field(init=False)

    def __post_init__(self):
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        if len(samples) < 2:
            raise DataValidationError("at least 2 groups required")
        for s in samples:
            if s.grid is not self.grid and not (
                np.array_equal(s.grid.points, self.grid.points)
                and np.array_equal(s.grid.weights, self.grid.weights)
            ):
                raise DataValidationError(f"group {s.label!r} is on a different grid")
        object.__setattr__(
            self, "pooled", np.concatenate([s.values for s in samples], axis=0)
        )

    @property
    def K(self) -> int:
        return len(self.samples)

    @property
    def sizes(self) -> tuple:
        return tuple(s.n for s in self.samples)

    @property
    def N(self) -> int:
        return self.pooled.shape[0]

    @property
    def labels(self) -> tuple:
        return tuple(s.label for s in self.samples)

    def group_slices(self) -> list:
        """Index slices of each group inside the pooled array."""
        out, start = [], 0
        for n in self.sizes:
            out.append(slice(start, start + n))
            start += n
        return out

    def regroup(self, order: np.ndarray) -> "PooledDataset":
        """Rebuild the dataset with pooled rows taken in the given order.

        Group labels and sizes are preserved; only curve membership changes.
        """
        order = np.asarray(order)
        if order.shape != (self.N,):
            raise DataValidationError("order must be a permutation of pooled indices")
        permuted = self.pooled[order]
        samples = []
        for s, sl in zip(self.samples, self.group_slices()):
            samples.append(FunctionalSample(s.label, permuted[sl], self.grid))
        return PooledDataset(tuple(samples), self.grid)


def _sniff_delimiter(first_line: str) -> str:
    return "\t" if "\t" in first_line else ","


def _parse_header_grid(cells, rule: str):
    """Grid points from header cells, when they form a valid grid."""
    try:
        pts = np.array([float(c) for c in cells])
    except ValueError:
        return None
    if pts.size >= 2 and np.all(np.diff(pts) > 0) and pts[0] >= 0 and pts[-1] <= 1:
        return TimeGrid.from_points(pts, rule)
    return None


def load_curves(
    source,
    label_column=0,
    delimiter: str | None = None,
    rule: str = "trapezoid",
    apply_log_cir: bool = False,
) -> PooledDataset:
    """Read a delimited table of curves, one row per curve.

    The first row is a header. ``label_column`` selects the group-label
    column by name or 0-based index; the remaining columns hold values at
    t_1..t_J. When the header's value columns are numeric and form a valid
    grid they become the grid points, otherwise equispaced points on [0, 1]
    are used.
    """
    if isinstance(source, (str, bytes)) and "\n" not in str(source):
        with open(source, "r", newline="") as fh:
            text = fh.read()
    elif hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        text = str(source)

    lines = text.strip("\n")
    if not lines:
        raise ParseError("empty input")
    if delimiter is None:
        delimiter = _sniff_delimiter(lines.splitlines()[0])

    reader = csv.reader(io.StringIO(lines), delimiter=delimiter)
    rows = [row for row in reader if row]
    if len(rows) < 2:
        raise ParseError("need a header row and at least one data row")
    header = [c.strip() for c in rows[0]]

    if isinstance(label_column, str):
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise ParseError(f"label column {label_column!r} not found in header")
    else:
        label_idx = int(label_column)
        if not 0 <= label_idx < len(header):
            raise ParseError(f"label column index {label_idx} out of range")

    value_cols = [i for i in range(len(header)) if i != label_idx]
    if len(value_cols) < 2:
        raise ParseError("need at least 2 value columns")
    J = len(value_cols)

    grid = _parse_header_grid([header[i] for i in value_cols], rule)
    if grid is None:
        grid = TimeGrid.equispaced(J, rule)

    order: list = []  # labels in first-appearance order
    groups: dict = {}
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"row {r}: expected {len(header)} cells, got {len(row)}")
        label = row[label_idx].strip()
        try:
            vals = np.array([float(row[i]) for i in value_cols])
        except ValueError as exc:
            raise ParseError(f"row {r}: {exc}")
        if not np.all(np.isfinite(vals)):
            k = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise DataValidationError(f"row {r}: non-finite value in column {k + 1}")
        if apply_log_cir:
            vals = log_cir(vals)
        if label not in groups:
            groups[label] = []
            order.append(label)
        groups[label].append(vals)

    if len(order) < 2:
        raise DataValidationError(f"found {len(order)} group(s); at least 2 required")
    samples = tuple(
        FunctionalSample(lab, np.vstack(groups[lab]), grid) for lab in order
    )
    return PooledDataset(samples, grid)


def save_curves(dataset: PooledDataset, path, delimiter: str = ",") -> None:
    """Write a dataset back to the delimited format read by load_curves.

    Floats are written with repr, so finite decimal inputs round-trip
    bit-exactly through double precision.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(["label"] + [repr(float(t)) for t in dataset.grid.points])
        for s in dataset.samples:
            for row in s.values:
                writer.writerow([s.label] + [repr(float(v)) for v in row])
