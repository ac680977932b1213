"""Histogram-valued data: bins, piecewise-linear quantile functions, moments.

A histogram is a set of contiguous bins with positive weights summing to one.
Density is uniform inside each bin, so the quantile function is piecewise
linear with knots at the cumulative weights.  Everything downstream (distances,
barycenters, inertia) works on those knots and is integrated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyBins,
    EmptySamples,
    NonContiguousBins,
    NonPositiveWeight,
    OutOfDomain,
    WeightSumMismatch,
)

REPAIR_TOL = 1e-6
ASSERT_TOL = 1e-9
DEGENERATE_WIDTH = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def integrate_square(dt: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Exact integral of the square of piecewise-linear functions.

    ``v`` holds knot values along its last axis; ``dt`` the interval widths.
    """
    a = v[..., :-1]
    b = v[..., 1:]
    return ((a * a + a * b + b * b) * dt).sum(axis=-1) / 3.0


def integrate_product(dt: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Exact integral of the product of two piecewise-linear functions."""
    u0, u1 = u[..., :-1], u[..., 1:]
    v0, v1 = v[..., :-1], v[..., 1:]
    return ((2 * u0 * v0 + u0 * v1 + u1 * v0 + 2 * u1 * v1) * dt).sum(axis=-1) / 6.0


def integrate_linear(dt: np.ndarray, v: np.ndarray) -> np.ndarray:
    return ((v[..., :-1] + v[..., 1:]) * dt).sum(axis=-1) / 2.0


class Histogram:
    """One histogram cell, stored as quantile knots ``(t, q)``.

    ``t`` runs from 0 to 1 (cumulative weights) and ``q`` holds the bin
    boundaries, so bin ``h`` is ``[q[h], q[h+1])`` with weight
    ``t[h+1] - t[h]``.  Instances are immutable.
    """

    __slots__ = ("_t", "_q", "_w", "_mean", "_std")

    def __init__(self, t: np.ndarray, q: np.ndarray, weights: np.ndarray | None = None):
        t = np.asarray(t, dtype=float)
        q = np.asarray(q, dtype=float)
        if t.ndim != 1 or t.shape != q.shape or t.size < 2:
            raise EmptyBins("quantile knots must be two equal-length vectors of size >= 2")
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise WeightSumMismatch("cumulative weights must increase strictly from 0 to 1")
        if np.any(np.diff(q) < 0):
            raise NonContiguousBins("quantile knots must be non-decreasing")
        self._t = _readonly(t)
        self._q = _readonly(q)
        self._w = _readonly(np.diff(t) if weights is None else weights)
        dt = np.diff(t)
        mean = float(integrate_linear(dt, q))
        var = float(integrate_square(dt, q - mean))
        self._mean = mean
        self._std = float(np.sqrt(max(var, 0.0)))

    @property
    def t(self) -> np.ndarray:
        return self._t

    @property
    def q(self) -> np.ndarray:
        return self._q

    @property
    def weights(self) -> np.ndarray:
        return self._w

    @property
    def lower(self) -> np.ndarray:
        return self._q[:-1]

    @property
    def upper(self) -> np.ndarray:
        return self._q[1:]

    @property
    def mean(self) -> float:
        return self._mean

    @property
    def std(self) -> float:
        return self._std

    @property
    def n_bins(self) -> int:
        return self._w.size

    @property
    def bins(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(w)) for a, b, w in zip(self.lower, self.upper, self._w)]

    @property
    def support(self) -> tuple[float, float]:
        return float(self._q[0]), float(self._q[-1])

    def quantile(self, t):
        return quantile(self, t)

    def shift(self, c: float) -> "Histogram":
        return Histogram(self._t, self._q + c, self._w)

    def to_dict(self) -> dict:
        return {"bins": [list(b) for b in self.bins]}

    def __repr__(self) -> str:
        return f"Histogram(n_bins={self.n_bins}, mean={self._mean:.6g}, std={self._std:.6g})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Histogram):
            return NotImplemented
        return np.array_equal(self._t, other._t) and np.array_equal(self._q, other._q)

    def __hash__(self) -> int:
        return hash((self._t.tobytes(), self._q.tobytes()))


def build_from_bins(bins: Iterable[Sequence[float]]) -> Histogram:
    """Validate ``(lower, upper, weight)`` triples and build a histogram.

    Weights that miss a unit sum by less than 1e-6 are rescaled; larger
    deviations raise :class:`WeightSumMismatch`.
    """
    arr = np.asarray(list(bins), dtype=float)
    if arr.size == 0:
        raise EmptyBins("a histogram needs at least one bin")
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise EmptyBins("bins must be (lower, upper, weight) triples")
    if not np.all(np.isfinite(arr)):
        raise NonContiguousBins("bin bounds and weights must be finite")
    lower, upper, w = arr[:, 0], arr[:, 1], arr[:, 2]
    if np.any(upper <= lower):
        raise NonContiguousBins("every bin needs lower < upper")
    if np.any(lower[1:] != upper[:-1]):
        raise NonContiguousBins("bins are not contiguous")
    if np.any(w <= 0):
        raise NonPositiveWeight("bin weights must be strictly positive")
    total = w.sum()
    if abs(total - 1.0) >= REPAIR_TOL:
        raise WeightSumMismatch(f"weights sum to {total!r}, not 1")
    if abs(total - 1.0) > ASSERT_TOL:
        w = w / total
    t = np.concatenate([[0.0], np.cumsum(w)])
    t[-1] = 1.0
    # cumsum rounding can push an interior knot onto or past 1
    if np.any(np.diff(t) <= 0):
        t[1:-1] = np.minimum(t[1:-1], np.nextafter(1.0, 0.0))
        t = np.maximum.accumulate(t)
    q = np.concatenate([lower, upper[-1:]])
    return Histogram(t, q, w)


def build_from_samples(samples: Iterable[float], num_bins: int) -> Histogram:
    """Equi-depth histogram of raw samples.

    Bin boundaries are the empirical quantiles ``j / num_bins`` (linear
    interpolation between order statistics).  Tied boundaries are merged, so
    heavily tied data yields fewer, heavier bins.  Constant data becomes one
    bin of width ``1e-12 * max(1, |value|)`` centred on the value.
    """
    x = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=float).ravel()
    if x.size == 0:
        raise EmptySamples("no samples")
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    if not np.all(np.isfinite(x)):
        raise EmptySamples("samples must be finite")
    lo, hi = x.min(), x.max()
    if lo == hi:
        half = 0.5 * DEGENERATE_WIDTH * max(1.0, abs(lo))
        return Histogram(np.array([0.0, 1.0]), np.array([lo - half, lo + half]))
    probs = np.linspace(0.0, 1.0, num_bins + 1)
    edges = np.quantile(x, probs)
    edges[0], edges[-1] = lo, hi
    edges = np.maximum.accumulate(edges)
    keep = np.concatenate([[True], np.diff(edges) > 0])
    # a zero-width bin's mass goes to the next bin: drop its right knot
    keep_idx = np.flatnonzero(keep)
    t = probs[keep_idx]
    q = edges[keep_idx]
    t[-1] = 1.0
    if t[0] != 0.0:
        t[0] = 0.0
    return Histogram(t, q)


def from_quantiles(t: np.ndarray, q: np.ndarray) -> Histogram:
    """Histogram whose quantile function interpolates the knots ``(t, q)``."""
    return Histogram(np.asarray(t, dtype=float), np.asarray(q, dtype=float))


def quantile(h: Histogram, t):
    """Evaluate the quantile function at ``t`` (scalar or array) in [0, 1]."""
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0) or np.any(ta > 1) or np.any(np.isnan(ta)):
        raise OutOfDomain("t must lie in [0, 1]")
    out = np.interp(ta, h.t, h.q)
    return float(out) if out.ndim == 0 else out


def moments(h: Histogram) -> tuple[float, float]:
    return h.mean, h.std


def center(h: Histogram) -> Histogram:
    """Shift ``h`` so that its mean is zero."""
    return h.shift(-h.mean)


def common_refinement(*hs: Histogram) -> tuple[np.ndarray, list[np.ndarray]]:
    """Merge the cumulative-weight breakpoints of several histograms.

    Returns the merged grid and, for each histogram, its quantile values at
    the grid.  Between consecutive grid points every quantile function is
    linear, so the knot values fully describe each function on every
    sub-interval.
    """
    grid = np.unique(np.concatenate([h.t for h in hs]))
    return grid, [np.interp(grid, h.t, h.q) for h in hs]


@dataclass(frozen=True)
class QuantileTable:
    """All histograms of one variable sampled on their common refinement.

    ``q[i]`` are the quantile values of object ``i`` at ``t``; ``means`` and
    ``centered`` split each row into location and centred dispersion.
    """

    t: np.ndarray
    q: np.ndarray
    means: np.ndarray = field(init=False)
    centered: np.ndarray = field(init=False)
    dt: np.ndarray = field(init=False)

    def __post_init__(self):
        dt = np.diff(self.t)
        means = integrate_linear(dt, self.q)
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "centered", self.q - means[:, None])

    @classmethod
    def from_histograms(cls, hs: Sequence[Histogram]) -> "QuantileTable":
        grid, values = common_refinement(*hs)
        return cls(grid, np.vstack(values))

    def histogram(self, row: np.ndarray) -> Histogram:
        return from_quantiles(self.t, row)


class HistogramMatrix:
    """``n`` objects by ``p`` histogram variables."""

    def __init__(
        self,
        cells: Sequence[Sequence[Histogram]],
        variable_names: Sequence[str] | None = None,
        object_ids: Sequence[str] | None = None,
    ):
        rows = [tuple(r) for r in cells]
        if not rows:
            raise DimensionMismatch("need at least one object")
        p = len(rows[0])
        if p == 0 or any(len(r) != p for r in rows):
            raise DimensionMismatch("every object needs the same, non-zero number of cells")
        for r in rows:
            for h in r:
                if not isinstance(h, Histogram):
                    raise TypeError("cells must be Histogram instances")
        self._cells = tuple(rows)
        self.variable_names = list(variable_names) if variable_names is not None else [f"Y{j + 1}" for j in range(p)]
        self.object_ids = list(object_ids) if object_ids is not None else [str(i + 1) for i in range(len(rows))]
        if len(self.variable_names) != p:
            raise DimensionMismatch("variable_names length differs from p")
        if len(self.object_ids) != len(rows):
            raise DimensionMismatch("object_ids length differs from n")
        self._tables: list[QuantileTable] | None = None

    @property
    def n(self) -> int:
        return len(self._cells)

    @property
    def p(self) -> int:
        return len(self._cells[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.n, self.p

    def __getitem__(self, idx):
        if isinstance(idx, tuple):
            i, j = idx
            return self._cells[i][j]
        return self._cells[idx]

    def __len__(self) -> int:
        return self.n

    def column(self, j: int) -> list[Histogram]:
        return [row[j] for row in self._cells]

    def rows(self, indices: Iterable[int]) -> list[tuple[Histogram, ...]]:
        return [self._cells[i] for i in indices]

    @property
    def tables(self) -> list[QuantileTable]:
        """Per-variable quantile tables on the union grid (built lazily)."""
        if self._tables is None:
            self._tables = [QuantileTable.from_histograms(self.column(j)) for j in range(self.p)]
        return self._tables

    def means(self) -> np.ndarray:
        return np.array([[h.mean for h in row] for row in self._cells])
