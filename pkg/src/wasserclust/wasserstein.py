"""Squared L2-Wasserstein distance between histograms and its decompositions."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidCluster, ZeroDispersion
from .histogram import Histogram, common_refinement, integrate_product, integrate_square

PRODUCT_TOL = 1e-9


class Scheme(str, enum.Enum):
    STANDARD = "standard"
    GC_AWD = "gc-awd"
    CDC_AWD = "cdc-awd"

    @classmethod
    def parse(cls, value: "str | Scheme") -> "Scheme":
        if isinstance(value, Scheme):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for s in cls:
            if s.value == key or s.name.lower().replace("_", "-") == key:
                return s
        raise ValueError(f"unknown scheme {value!r}; expected one of {[s.value for s in cls]}")


@dataclass(frozen=True)
class DistanceDecomposition:
    location: float
    size: float
    shape: float
    total: float
    r_qq: float

    def to_dict(self) -> dict:
        return {
            "location": self.location,
            "size": self.size,
            "shape": self.shape,
            "total": self.total,
            "r_qq": self.r_qq,
        }


@dataclass(frozen=True)
class WeightSystem:
    """Component weights per variable: one row (GC-AWD) or one row per cluster (CDC-AWD).

    STANDARD carries no arrays; every weight is implicitly 1.
    """

    scheme: Scheme
    mean_weights: np.ndarray | None = None
    disp_weights: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.scheme is Scheme.STANDARD:
            object.__setattr__(self, "mean_weights", None)
            object.__setattr__(self, "disp_weights", None)
            return
        for name in ("mean_weights", "disp_weights"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float)).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.mean_weights.shape != self.disp_weights.shape:
            raise DimensionMismatch("mean and dispersion weights differ in shape")
        if self.scheme is Scheme.GC_AWD and self.mean_weights.shape[0] != 1:
            raise DimensionMismatch("GC-AWD uses a single weight row")
        if np.any(self.mean_weights <= 0) or np.any(self.disp_weights <= 0):
            raise ValueError("weights must be strictly positive")

    @classmethod
    def ones(cls, scheme: "Scheme | str", k: int, p: int) -> "WeightSystem":
        scheme = Scheme.parse(scheme)
        if scheme is Scheme.STANDARD:
            return cls(scheme)
        rows = 1 if scheme is Scheme.GC_AWD else k
        return cls(scheme, np.ones((rows, p)), np.ones((rows, p)))

    def rows(self, k: int, p: int) -> tuple[np.ndarray, np.ndarray]:
        """Mean and dispersion weight rows used against cluster ``k``."""
        if self.scheme is Scheme.STANDARD:
            return np.ones(p), np.ones(p)
        if self.mean_weights.shape[1] != p:
            raise DimensionMismatch(f"weights cover {self.mean_weights.shape[1]} variables, got {p}")
        if self.scheme is Scheme.GC_AWD:
            return self.mean_weights[0], self.disp_weights[0]
        if not 0 <= k < self.mean_weights.shape[0]:
            raise InvalidCluster(f"cluster index {k} out of range")
        return self.mean_weights[k], self.disp_weights[k]

    def full(self, k: int, p: int) -> tuple[np.ndarray, np.ndarray]:
        """Weights broadcast to ``(k, p)`` arrays."""
        if self.scheme is Scheme.STANDARD:
            return np.ones((k, p)), np.ones((k, p))
        if self.scheme is Scheme.GC_AWD:
            return np.repeat(self.mean_weights, k, axis=0), np.repeat(self.disp_weights, k, axis=0)
        return np.array(self.mean_weights), np.array(self.disp_weights)

    def check_products(self, tol: float = PRODUCT_TOL) -> bool:
        if self.scheme is Scheme.STANDARD:
            return True
        for arr in (self.mean_weights, self.disp_weights):
            if np.any(arr <= 0):
                return False
            if np.any(np.abs(np.exp(np.log(arr).sum(axis=1)) - 1.0) > tol):
                return False
        return True

    def to_dict(self) -> dict:
        d: dict = {"scheme": self.scheme.value}
        if self.scheme is not Scheme.STANDARD:
            d["mean_weights"] = self.mean_weights.tolist()
            d["disp_weights"] = self.disp_weights.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WeightSystem":
        scheme = Scheme.parse(d["scheme"])
        if scheme is Scheme.STANDARD:
            return cls(scheme)
        return cls(scheme, np.asarray(d["mean_weights"]), np.asarray(d["disp_weights"]))


def dist2(h1: Histogram, h2: Histogram) -> float:
    """Squared L2-Wasserstein distance, integrated exactly on the common refinement."""
    grid, (q1, q2) = common_refinement(h1, h2)
    return float(max(integrate_square(np.diff(grid), q1 - q2), 0.0))


def _centered_cross(h1: Histogram, h2: Histogram) -> float:
    grid, (q1, q2) = common_refinement(h1, h2)
    return float(integrate_product(np.diff(grid), q1 - h1.mean, q2 - h2.mean))


def dispersion_dist2(h1: Histogram, h2: Histogram) -> float:
    """Squared distance between the centred histograms."""
    grid, (q1, q2) = common_refinement(h1, h2)
    d = (q1 - h1.mean) - (q2 - h2.mean)
    return float(max(integrate_square(np.diff(grid), d), 0.0))


def r_qq(h1: Histogram, h2: Histogram) -> float:
    """Correlation of the two quantile functions (QQ-plot correlation)."""
    s1, s2 = h1.std, h2.std
    if s1 == 0 or s2 == 0:
        raise ZeroDispersion("r_qq is undefined for a histogram with zero dispersion")
    r = _centered_cross(h1, h2) / (s1 * s2)
    return float(min(1.0, max(-1.0, r)))


def decompose(h1: Histogram, h2: Histogram) -> DistanceDecomposition:
    """Location, size and shape parts of :func:`dist2`.

    With a zero-dispersion histogram ``r_qq`` is taken as 1 and the shape
    part vanishes.
    """
    location = (h1.mean - h2.mean) ** 2
    s1, s2 = h1.std, h2.std
    size = (s1 - s2) ** 2
    if s1 == 0 or s2 == 0:
        r = 1.0
    else:
        r = r_qq(h1, h2)
    shape = max(2.0 * s1 * s2 * (1.0 - r), 0.0)
    return DistanceDecomposition(location, size, shape, location + size + shape, r)


def _check_same_p(a: Sequence[Histogram], b: Sequence[Histogram]) -> int:
    if len(a) != len(b):
        raise DimensionMismatch(f"descriptions have {len(a)} and {len(b)} variables")
    return len(a)


def multivar_dist2(a: Sequence[Histogram], b: Sequence[Histogram]) -> float:
    _check_same_p(a, b)
    return float(sum(dist2(x, y) for x, y in zip(a, b)))


def component_dist2(a: Sequence[Histogram], g: Sequence[Histogram]) -> tuple[np.ndarray, np.ndarray]:
    """Per-variable squared mean gaps and centred (dispersion) distances."""
    _check_same_p(a, g)
    loc = np.array([(x.mean - y.mean) ** 2 for x, y in zip(a, g)])
    disp = np.array([dispersion_dist2(x, y) for x, y in zip(a, g)])
    return loc, disp


def adaptive_dist2(
    a: Sequence[Histogram],
    g: Sequence[Histogram],
    weights: WeightSystem | None = None,
    k: int = 0,
) -> float:
    """Component-weighted squared distance between an object and a prototype."""
    p = _check_same_p(a, g)
    if weights is None or weights.scheme is Scheme.STANDARD:
        return multivar_dist2(a, g)
    lm, ld = weights.rows(k, p)
    loc, disp = component_dist2(a, g)
    return float(lm @ loc + ld @ disp)
