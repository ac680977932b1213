"""Dynamic clustering of histogram data with standard or adaptive Wasserstein distances.

Each iteration runs three steps on a fixed partition: prototypes (mean
quantile functions), component weights (adaptive schemes only), and
allocation to the nearest prototype.  The criterion never increases, and the
loop stops once an allocation pass leaves the partition unchanged.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyCluster, KTooLarge
from .histogram import Histogram, HistogramMatrix, QuantileTable, common_refinement, from_quantiles
from .histogram import integrate_square
from .wasserstein import Scheme, WeightSystem, adaptive_dist2, component_dist2

log = logging.getLogger(__name__)

INERTIA_FLOOR = 1e-12
MONOTONE_SLACK = 1e-9
DELTA_STOP = 1e-10


@dataclass(frozen=True)
class Partition:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).copy()
        if labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError("cluster index out of range")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    @property
    def empty_clusters(self) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.sizes == 0)]

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.k, self.labels.tobytes()))


@dataclass
class ClusteringResult:
    partition: Partition
    prototypes: list[tuple[Histogram, ...]]
    weights: WeightSystem
    criterion_trace: list[float]
    iterations: int
    seed: int
    restarts_run: int
    converged: bool
    scheme: Scheme
    restart_index: int = 0
    violations: int = 0
    restart_criteria: list[float] = field(default_factory=list)

    @property
    def criterion(self) -> float:
        return self.criterion_trace[-1]

    @property
    def k(self) -> int:
        return self.partition.k

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "k": self.k,
            "labels": self.partition.labels.tolist(),
            "criterion": self.criterion,
            "criterion_trace": list(self.criterion_trace),
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "restarts_run": self.restarts_run,
            "best_restart": self.restart_index,
            "restart_criteria": list(self.restart_criteria),
            "weights": self.weights.to_dict(),
            "prototypes": [
                [{"t": h.t.tolist(), "q": h.q.tolist()} for h in row] for row in self.prototypes
            ],
        }


# -- histogram-level steps ---------------------------------------------------------


def compute_prototype(members: Sequence[Histogram]) -> Histogram:
    """Barycenter of ``members``: the pointwise mean of their quantile functions.

    The mean is exact on the union of the members' knots, since every member
    is linear between consecutive union breakpoints.
    """
    if len(members) == 0:
        raise EmptyCluster("cannot build a prototype for an empty cluster")
    grid, values = common_refinement(*members)
    return from_quantiles(grid, np.mean(values, axis=0))


def prototypes_for(matrix: HistogramMatrix, partition: Partition) -> list[tuple[Histogram, ...]]:
    if partition.n != matrix.n:
        raise DimensionMismatch("partition and matrix disagree on n")
    out = []
    for k in range(partition.k):
        idx = partition.members(k)
        if idx.size == 0:
            raise EmptyCluster(f"cluster {k} is empty")
        out.append(tuple(compute_prototype([matrix[i, j] for i in idx]) for j in range(matrix.p)))
    return out


def weights_from_inertia(inertia: np.ndarray) -> np.ndarray:
    """Product-one weights inversely proportional to the given inertias.

    Each row gives ``lambda_j = (prod_h I_h)^(1/p) / I_j``.  Inertias below
    1e-12 are floored there first so the weights stay finite and positive.
    """
    inertia = np.atleast_2d(np.asarray(inertia, dtype=float))
    if np.any(inertia < INERTIA_FLOOR):
        log.debug("flooring %d component inertias at %g", int(np.sum(inertia < INERTIA_FLOOR)), INERTIA_FLOOR)
    logs = np.log(np.maximum(inertia, INERTIA_FLOOR))
    return np.exp(logs.mean(axis=1, keepdims=True) - logs)


def _within_component_inertia(matrix, partition, prototypes) -> tuple[np.ndarray, np.ndarray]:
    K, p = partition.k, matrix.p
    im = np.zeros((K, p))
    idisp = np.zeros((K, p))
    for i, k in enumerate(partition.labels):
        loc, disp = component_dist2(matrix[i], prototypes[k])
        im[k] += loc
        idisp[k] += disp
    return im, idisp


def update_weights_gc(matrix: HistogramMatrix, partition: Partition, prototypes) -> WeightSystem:
    im, idisp = _within_component_inertia(matrix, partition, prototypes)
    return WeightSystem(
        Scheme.GC_AWD,
        weights_from_inertia(im.sum(axis=0)),
        weights_from_inertia(idisp.sum(axis=0)),
    )


def update_weights_cdc(matrix: HistogramMatrix, partition: Partition, prototypes) -> WeightSystem:
    im, idisp = _within_component_inertia(matrix, partition, prototypes)
    return WeightSystem(Scheme.CDC_AWD, weights_from_inertia(im), weights_from_inertia(idisp))


def allocate(matrix: HistogramMatrix, prototypes, weights: WeightSystem | None = None) -> Partition:
    """Assign every object to its nearest prototype; ties go to the lowest index."""
    K = len(prototypes)
    if K < 1:
        raise ValueError("need at least one prototype")
    labels = np.empty(matrix.n, dtype=np.int64)
    for i in range(matrix.n):
        d = [adaptive_dist2(matrix[i], prototypes[k], weights, k) for k in range(K)]
        labels[i] = int(np.argmin(d))
    return Partition(labels, K)


def criterion(matrix: HistogramMatrix, partition: Partition, prototypes, weights: WeightSystem | None = None) -> float:
    """Adequacy criterion: summed (weighted) distance of objects to their prototypes."""
    return float(
        sum(adaptive_dist2(matrix[i], prototypes[k], weights, int(k)) for i, k in enumerate(partition.labels))
    )


# -- vectorised engine --------------------------------------------------------------


class _Engine:
    """Array form of the three steps on one matrix, scheme and K."""

    def __init__(self, matrix: HistogramMatrix, k: int, scheme: Scheme):
        self.tables: list[QuantileTable] = matrix.tables
        self.n, self.p, self.k = matrix.n, matrix.p, k
        self.scheme = scheme
        self.means = np.column_stack([tb.means for tb in self.tables])  # (n, p)

    def prototypes(self, labels: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        counts = np.bincount(labels, minlength=self.k).astype(float)
        if np.any(counts == 0):
            raise EmptyCluster("empty cluster in prototype step")
        onehot = np.zeros((self.n, self.k))
        onehot[np.arange(self.n), labels] = 1.0
        avg = onehot / counts
        g_means = avg.T @ self.means  # (k, p)
        g_centered = [avg.T @ tb.centered for tb in self.tables]
        return g_means, g_centered

    def components(self, protos) -> tuple[np.ndarray, np.ndarray]:
        g_means, g_centered = protos
        loc = (self.means[:, None, :] - g_means[None, :, :]) ** 2  # (n, k, p)
        disp = np.empty_like(loc)
        for j, tb in enumerate(self.tables):
            diff = tb.centered[:, None, :] - g_centered[j][None, :, :]
            disp[:, :, j] = np.maximum(integrate_square(tb.dt, diff), 0.0)
        return loc, disp

    def weights(self, labels, loc, disp) -> WeightSystem:
        onehot = np.zeros((self.n, self.k))
        onehot[np.arange(self.n), labels] = 1.0
        im = np.einsum("nk,nkj->kj", onehot, loc)
        idisp = np.einsum("nk,nkj->kj", onehot, disp)
        if self.scheme is Scheme.GC_AWD:
            return WeightSystem(
                Scheme.GC_AWD, weights_from_inertia(im.sum(axis=0)), weights_from_inertia(idisp.sum(axis=0))
            )
        return WeightSystem(Scheme.CDC_AWD, weights_from_inertia(im), weights_from_inertia(idisp))

    def distances(self, loc, disp, ws: WeightSystem) -> np.ndarray:
        if ws.scheme is Scheme.STANDARD:
            return loc.sum(axis=2) + disp.sum(axis=2)
        lm, ld = ws.full(self.k, self.p)
        return np.einsum("nkj,kj->nk", loc, lm) + np.einsum("nkj,kj->nk", disp, ld)

    @staticmethod
    def criterion(d: np.ndarray, labels: np.ndarray) -> float:
        return float(d[np.arange(d.shape[0]), labels].sum())

    def repair(self, labels: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Fill empty clusters with the objects farthest from their own prototype."""
        labels = labels.copy()
        own = d[np.arange(self.n), labels].copy()
        for k in range(self.k):
            counts = np.bincount(labels, minlength=self.k)
            if counts[k] > 0:
                continue
            eligible = counts[labels] > 1
            cand = np.where(eligible, own, -np.inf)
            i = int(np.argmax(cand))
            labels[i] = k
            own[i] = -np.inf
        return labels

    def initial_partition(self, rng: np.random.Generator) -> np.ndarray:
        return rng.permutation(np.arange(self.n) % self.k)


def _slack(ref: float) -> float:
    return MONOTONE_SLACK * max(1.0, abs(ref))


def _run_once(engine: _Engine, seed: int, max_iter: int, restart: int) -> dict:
    rng = np.random.default_rng(seed)
    labels = engine.initial_partition(rng)
    ws = WeightSystem.ones(engine.scheme, engine.k, engine.p)
    trace: list[float] = []
    violations = 0
    converged = False
    protos = None
    iterations = 0
    prev = np.inf
    for it in range(max_iter):
        iterations = it + 1
        protos = engine.prototypes(labels)
        loc, disp = engine.components(protos)
        step1 = engine.criterion(engine.distances(loc, disp, ws), labels)
        if step1 > prev + _slack(prev):
            violations += 1
            log.warning("criterion rose in prototype step: %r -> %r", prev, step1)
        if engine.scheme is not Scheme.STANDARD:
            ws = engine.weights(labels, loc, disp)
        d = engine.distances(loc, disp, ws)
        step2 = engine.criterion(d, labels)
        if step2 > step1 + _slack(step1):
            violations += 1
            log.warning("criterion rose in weighting step: %r -> %r", step1, step2)
        new = np.argmin(d, axis=1)
        delta = engine.criterion(d, new)
        if delta > step2 + _slack(step2):
            violations += 1
        trace.append(delta)
        new = engine.repair(new, d)
        changed = not np.array_equal(new, labels)
        labels = new
        if not changed:
            converged = True
            break
        if len(trace) >= 2 and abs(trace[-2] - trace[-1]) < DELTA_STOP * max(1.0, abs(trace[-2])):
            break
        prev = delta
    if not converged:
        # leave a consistent state: prototypes and weights of the final partition
        protos = engine.prototypes(labels)
        loc, disp = engine.components(protos)
        if engine.scheme is not Scheme.STANDARD:
            ws = engine.weights(labels, loc, disp)
        final = engine.criterion(engine.distances(loc, disp, ws), labels)
        if final > trace[-1] + _slack(trace[-1]):
            violations += 1
        trace.append(final)
    return {
        "labels": labels,
        "protos": protos,
        "weights": ws,
        "trace": trace,
        "iterations": iterations,
        "converged": converged,
        "violations": violations,
        "restart": restart,
        "seed": seed,
    }


def run_dca(
    matrix: HistogramMatrix,
    k: int,
    scheme: "Scheme | str" = Scheme.STANDARD,
    max_iter: int = 100,
    restarts: int = 1,
    seed: int = 0,
    threads: int = 1,
) -> ClusteringResult:
    """Best-of-``restarts`` dynamic clustering.

    Restart ``r`` draws its balanced random initial partition from seed
    ``seed + r``; the restart with the lowest final criterion wins (ties go to
    the earlier restart).  The outcome does not depend on ``threads``.
    """
    scheme = Scheme.parse(scheme)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > matrix.n:
        raise KTooLarge(f"k={k} exceeds the number of objects n={matrix.n}")
    if max_iter < 1 or restarts < 1:
        raise ValueError("max_iter and restarts must be >= 1")
    engine = _Engine(matrix, k, scheme)
    seeds = [seed + r for r in range(restarts)]
    if threads > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(lambda a: _run_once(engine, a[1], max_iter, a[0]), enumerate(seeds)))
    else:
        runs = [_run_once(engine, s, max_iter, r) for r, s in enumerate(seeds)]
    finals = [r["trace"][-1] for r in runs]
    best = runs[int(np.argmin(finals))]
    g_means, g_centered = best["protos"]
    prototypes = [
        tuple(
            from_quantiles(engine.tables[j].t, g_centered[j][kk] + g_means[kk, j]) for j in range(matrix.p)
        )
        for kk in range(k)
    ]
    return ClusteringResult(
        partition=Partition(best["labels"], k),
        prototypes=prototypes,
        weights=best["weights"],
        criterion_trace=best["trace"],
        iterations=best["iterations"],
        seed=seed,
        restarts_run=restarts,
        converged=best["converged"],
        scheme=scheme,
        restart_index=best["restart"],
        violations=sum(r["violations"] for r in runs),
        restart_criteria=finals,
    )


def iterate_once(matrix: HistogramMatrix, result: ClusteringResult) -> tuple[Partition, float]:
    """One more prototype/weight/allocation pass from a returned result."""
    engine = _Engine(matrix, result.k, result.scheme)
    labels = np.array(result.partition.labels)
    protos = engine.prototypes(labels)
    loc, disp = engine.components(protos)
    ws = result.weights
    if engine.scheme is not Scheme.STANDARD:
        ws = engine.weights(labels, loc, disp)
    d = engine.distances(loc, disp, ws)
    new = np.argmin(d, axis=1)
    return Partition(new, result.k), engine.criterion(d, new)
