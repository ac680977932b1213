"""Partition diagnostics: inertia decomposition, QPI tables, CH, Corrected Rand, accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .clustering import ClusteringResult, Partition, _Engine
from .errors import DegenerateK, LengthMismatch
from .histogram import Histogram, HistogramMatrix, from_quantiles, integrate_square
from .wasserstein import Scheme, WeightSystem

COMPONENTS = ("mean", "dispersion")
QPI_TSS_FLOOR = 1e-12


def _labels(x) -> np.ndarray:
    if isinstance(x, Partition):
        return np.asarray(x.labels)
    return np.asarray(x)


def _general_parts(matrix: HistogramMatrix, labels: np.ndarray, weights: WeightSystem, k: int):
    """Mean and centred quantile rows of the general prototype, per variable."""
    tables = matrix.tables
    n, p = matrix.n, matrix.p
    if weights.scheme is Scheme.CDC_AWD:
        lm, ld = weights.full(k, p)
        sizes = np.bincount(labels, minlength=k)
        g_mean = np.empty(p)
        g_cent = []
        for j, tb in enumerate(tables):
            wm = lm[labels, j] / (sizes @ lm[:, j])
            wd = ld[labels, j] / (sizes @ ld[:, j])
            g_mean[j] = wm @ tb.means
            g_cent.append(wd @ tb.centered)
        return g_mean, g_cent
    g_mean = np.array([tb.means.mean() for tb in tables])
    g_cent = [tb.centered.mean(axis=0) for tb in tables]
    return g_mean, g_cent


def general_prototype(matrix: HistogramMatrix, result: ClusteringResult) -> tuple[Histogram, ...]:
    """Prototype of the whole set under the result's scheme.

    STANDARD and GC-AWD average all quantile functions.  CDC-AWD averages
    means and centred quantile functions with each object weighted by its
    cluster's component weight.
    """
    labels = np.asarray(result.partition.labels)
    g_mean, g_cent = _general_parts(matrix, labels, result.weights, result.k)
    return tuple(from_quantiles(tb.t, g_cent[j] + g_mean[j]) for j, tb in enumerate(matrix.tables))


@dataclass
class InertiaBreakdown:
    """TSS/WSS/BSS cells indexed ``[component, variable, cluster]``.

    Component 0 is the mean (location) part, component 1 the dispersion part,
    both already multiplied by the scheme's weights.
    """

    tss: np.ndarray
    wss: np.ndarray
    bss: np.ndarray
    general_prototype: tuple[Histogram, ...]
    scheme: Scheme
    n: int
    sizes: np.ndarray
    variable_names: list[str]

    @property
    def k(self) -> int:
        return self.tss.shape[2]

    @property
    def p(self) -> int:
        return self.tss.shape[1]

    def total(self, which: str = "tss", axes: Sequence[int] | None = None):
        """Sum over ``axes`` (all axes when None) of the chosen table."""
        arr = getattr(self, which)
        if axes is None:
            return float(arr.sum())
        return arr.sum(axis=tuple(axes))

    @property
    def TSS(self) -> float:
        return float(self.tss.sum())

    @property
    def WSS(self) -> float:
        return float(self.wss.sum())

    @property
    def BSS(self) -> float:
        return float(self.bss.sum())

    def ch_index(self) -> float:
        return ch_index(self.BSS, self.WSS, self.k, self.n)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "n": self.n,
            "k": self.k,
            "sizes": self.sizes.tolist(),
            "variables": list(self.variable_names),
            "components": list(COMPONENTS),
            "tss": self.tss.tolist(),
            "wss": self.wss.tolist(),
            "bss": self.bss.tolist(),
            "TSS": self.TSS,
            "WSS": self.WSS,
            "BSS": self.BSS,
        }


def inertia(matrix: HistogramMatrix, result: ClusteringResult) -> InertiaBreakdown:
    """Total, within and between inertia of a clustering, cell by cell.

    Prototypes are recomputed from the partition, so the decomposition is
    exact even for a run stopped by the iteration cap.
    """
    labels = np.asarray(result.partition.labels)
    k, p, n = result.k, matrix.p, matrix.n
    ws = result.weights
    engine = _Engine(matrix, k, ws.scheme)
    g_means, g_cent = engine.prototypes(labels)
    e_mean, e_cent = _general_parts(matrix, labels, ws, k)
    lm, ld = ws.full(k, p)
    sizes = np.bincount(labels, minlength=k)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0

    tss = np.zeros((2, p, k))
    wss = np.zeros((2, p, k))
    bss = np.zeros((2, p, k))
    for j, tb in enumerate(matrix.tables):
        obj_t_mean = (tb.means - e_mean[j]) ** 2
        obj_t_disp = integrate_square(tb.dt, tb.centered - e_cent[j])
        own_mean = g_means[labels, j]
        own_cent = g_cent[j][labels]
        obj_w_mean = (tb.means - own_mean) ** 2
        obj_w_disp = integrate_square(tb.dt, tb.centered - own_cent)
        tss[0, j] = lm[:, j] * (onehot.T @ obj_t_mean)
        tss[1, j] = ld[:, j] * (onehot.T @ obj_t_disp)
        wss[0, j] = lm[:, j] * (onehot.T @ obj_w_mean)
        wss[1, j] = ld[:, j] * (onehot.T @ obj_w_disp)
        bss[0, j] = lm[:, j] * sizes * (g_means[:, j] - e_mean[j]) ** 2
        bss[1, j] = ld[:, j] * sizes * integrate_square(tb.dt, g_cent[j] - e_cent[j])
    gp = tuple(from_quantiles(tb.t, e_cent[j] + e_mean[j]) for j, tb in enumerate(matrix.tables))
    return InertiaBreakdown(tss, wss, bss, gp, ws.scheme, n, sizes, list(matrix.variable_names))


def _ratio(b, t):
    b = np.asarray(b, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.full(np.broadcast(b, t).shape, np.nan)
    ok = t >= QPI_TSS_FLOOR
    np.divide(b, t, out=out, where=ok)
    return out if out.ndim else float(out)


@dataclass
class QpiReport:
    """BSS/TSS ratios at every aggregation level; NaN marks an undefined cell."""

    cell: np.ndarray  # (component, variable, cluster)
    component_cluster: np.ndarray  # (component, cluster)
    component_variable: np.ndarray  # (component, variable)
    component: np.ndarray  # (component,)
    variable_cluster: np.ndarray  # (variable, cluster)
    cluster: np.ndarray
    variable: np.ndarray
    global_qpi: float
    global_qpi_wss: float
    variable_names: list[str]

    def to_dict(self) -> dict:
        def clean(a):
            a = np.asarray(a, dtype=float)
            if a.ndim == 0:
                return None if np.isnan(a) else float(a)
            return [clean(x) for x in a]

        return {
            "variables": list(self.variable_names),
            "components": list(COMPONENTS),
            "cell": clean(self.cell),
            "component_cluster": clean(self.component_cluster),
            "component_variable": clean(self.component_variable),
            "component": clean(self.component),
            "variable_cluster": clean(self.variable_cluster),
            "cluster": clean(self.cluster),
            "variable": clean(self.variable),
            "global": clean(self.global_qpi),
            "global_1_minus_wss_over_tss": clean(self.global_qpi_wss),
        }

    def to_text(self, digits: int = 3) -> str:
        """Aligned three-block table: mean component, dispersion component, both."""
        names = list(self.variable_names)
        k = self.cluster.size
        blocks = [
            ("QPI_mean", self.cell[0].T, self.component_cluster[0], self.component_variable[0], self.component[0]),
            ("QPI_disp", self.cell[1].T, self.component_cluster[1], self.component_variable[1], self.component[1]),
            ("QPI", self.variable_cluster.T, self.cluster, self.variable, self.global_qpi),
        ]

        def fmt(x):
            return "-" if x is None or np.isnan(x) else f"{x:.{digits}f}"

        width = max(8, digits + 4, *(len(s) for s in names))
        lines = []
        for title, body, by_cluster, by_var, overall in blocks:
            header = ["".ljust(11)] + [s.rjust(width) for s in names] + ["all".rjust(width)]
            lines.append(title)
            lines.append(" ".join(header))
            for c in range(k):
                row = [f"Cluster {c + 1}".ljust(11)] + [fmt(v).rjust(width) for v in body[c]]
                row.append(fmt(by_cluster[c]).rjust(width))
                lines.append(" ".join(row))
            row = ["all".ljust(11)] + [fmt(v).rjust(width) for v in by_var] + [fmt(overall).rjust(width)]
            lines.append(" ".join(row))
            lines.append("")
        return "\n".join(lines)


def qpi(breakdown: InertiaBreakdown) -> QpiReport:
    t, b, w = breakdown.tss, breakdown.bss, breakdown.wss
    T = t.sum()
    return QpiReport(
        cell=_ratio(b, t),
        component_cluster=_ratio(b.sum(axis=1), t.sum(axis=1)),
        component_variable=_ratio(b.sum(axis=2), t.sum(axis=2)),
        component=_ratio(b.sum(axis=(1, 2)), t.sum(axis=(1, 2))),
        variable_cluster=_ratio(b.sum(axis=0), t.sum(axis=0)),
        cluster=_ratio(b.sum(axis=(0, 1)), t.sum(axis=(0, 1))),
        variable=_ratio(b.sum(axis=(0, 2)), t.sum(axis=(0, 2))),
        global_qpi=_ratio(b.sum(), T),
        global_qpi_wss=float(1.0 - w.sum() / T) if T >= QPI_TSS_FLOOR else float("nan"),
        variable_names=list(breakdown.variable_names),
    )


def ch_index(bss: float, wss: float, k: int, n: int) -> float:
    """Calinski-Harabasz pseudo-F; ``inf`` when the within inertia is zero."""
    if k < 2 or k >= n:
        raise DegenerateK(f"CH needs 2 <= k < n, got k={k}, n={n}")
    if wss <= 0:
        return math.inf
    return (bss / (k - 1)) / (wss / (n - k))


def corrected_rand(a, b) -> float:
    """Hubert-Arabie adjusted Rand index between two labelings."""
    la, lb = _labels(a), _labels(b)
    if la.shape != lb.shape:
        raise LengthMismatch("partitions have different lengths")
    n = la.size
    if n < 2:
        return 1.0
    _, ia = np.unique(la, return_inverse=True)
    _, ib = np.unique(lb, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    def pairs(x):
        x = np.asarray(x, dtype=float)
        return float((x * (x - 1) / 2).sum())

    index = pairs(table)
    sa = pairs(table.sum(axis=1))
    sb = pairs(table.sum(axis=0))
    total = n * (n - 1) / 2
    expected = sa * sb / total
    maximum = (sa + sb) / 2
    if maximum == expected:
        # both labelings are all-singletons or both a single cluster
        return 1.0 if index == maximum else 0.0
    return (index - expected) / (maximum - expected)


def accuracy(pred, truth) -> float:
    """Fraction of objects correctly classified under the best one-to-one label matching."""
    lp, lt = _labels(pred), _labels(truth)
    if lp.shape != lt.shape:
        raise LengthMismatch("partitions have different lengths")
    if lp.size == 0:
        return 1.0
    _, ip = np.unique(lp, return_inverse=True)
    _, it = np.unique(lt, return_inverse=True)
    table = np.zeros((ip.max() + 1, it.max() + 1), dtype=np.int64)
    np.add.at(table, (ip, it), 1)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / lp.size)
