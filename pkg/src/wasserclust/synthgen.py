"""Synthetic histogram datasets with known clusters, and the Monte Carlo harness.

Each object draws its own four moments per variable around a cluster
baseline, samples a Pearson distribution with those moments, and summarises
the draws as an equi-depth histogram.
"""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .clustering import run_dca
from .errors import InfeasibleMoments
from .evaluation import accuracy, corrected_rand
from .histogram import HistogramMatrix, build_from_samples
from .pearson import MomentSpec, pearson_sample
from .wasserstein import Scheme

PARAMS = ("mean", "std", "skewness", "kurtosis")
KURTOSIS_MARGIN = 1e-3
STD_FLOOR = 1e-6

PRESETS = {
    "full": {"replicates": 100, "restarts": 50, "samples_per_object": 1000},
    "desk": {"replicates": 20, "restarts": 10, "samples_per_object": 500},
}


@dataclass(frozen=True)
class ParamNoise:
    """Baseline moments of one cluster/variable and the std of each moment's noise."""

    baseline: MomentSpec
    noise: tuple[float, float, float, float]

    def draw(self, rng: np.random.Generator) -> MomentSpec:
        b = self.baseline
        base = np.array([b.mean, b.std, b.skewness, b.kurtosis])
        m, s, g, k = base + np.asarray(self.noise) * rng.standard_normal(4)
        return feasible_moments(m, s, g, k)


def feasible_moments(mean: float, std: float, skewness: float, kurtosis: float) -> MomentSpec:
    """Project a noisy moment draw onto the feasible Pearson region."""
    std = max(std, STD_FLOOR)
    kurtosis = max(kurtosis, 1.0 + skewness**2 + KURTOSIS_MARGIN)
    return MomentSpec(float(mean), float(std), float(skewness), float(kurtosis))


@dataclass(frozen=True)
class ExperimentConfig:
    """Cluster-by-variable moment baselines plus sampling and protocol sizes."""

    clusters: tuple[tuple[ParamNoise, ...], ...]
    variable_names: tuple[str, ...] = ()
    name: str = "experiment"
    n_per_cluster: int = 50
    samples_per_object: int = 1000
    bins_per_histogram: int = 20
    replicates: int = 100
    restarts: int = 50
    max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.clusters or not self.clusters[0]:
            raise ValueError("config needs at least one cluster and one variable")
        p = len(self.clusters[0])
        if any(len(row) != p for row in self.clusters):
            raise ValueError("every cluster must describe the same variables")
        for name in ("n_per_cluster", "samples_per_object", "bins_per_histogram", "replicates", "restarts", "max_iter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.variable_names:
            object.__setattr__(self, "variable_names", tuple(f"Y{j + 1}" for j in range(p)))
        elif len(self.variable_names) != p:
            raise ValueError("variable_names length differs from the number of variables")

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def p(self) -> int:
        return len(self.clusters[0])

    def with_preset(self, preset: str | None) -> "ExperimentConfig":
        if preset is None:
            return self
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        return dataclasses.replace(self, **PRESETS[preset])

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        clusters = []
        for c in d["cluster"]:
            row = []
            for v in c["variable"]:
                pairs = [v[name] for name in PARAMS]
                for pair in pairs:
                    if len(pair) != 2:
                        raise ValueError("each moment needs a (baseline, std) pair")
                base = MomentSpec(*(float(pr[0]) for pr in pairs))
                row.append(ParamNoise(base, tuple(float(pr[1]) for pr in pairs)))
            clusters.append(tuple(row))
        opts = {f.name: d[f.name] for f in dataclasses.fields(cls) if f.name in d and f.name != "clusters"}
        if "variable_names" in opts:
            opts["variable_names"] = tuple(opts["variable_names"])
        return cls(clusters=tuple(clusters), **opts)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "clusters"}
        d["variable_names"] = list(self.variable_names)
        d["cluster"] = [
            {
                "variable": [
                    {
                        name: [getattr(pn.baseline, name), pn.noise[i]]
                        for i, name in enumerate(PARAMS)
                    }
                    for pn in row
                ]
            }
            for row in self.clusters
        ]
        return d


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Read an experiment config from TOML or JSON (by extension)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
    else:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    return ExperimentConfig.from_dict(data)


def builtin_config(name: str) -> ExperimentConfig:
    """Shipped configs: ``"exp1"`` and ``"exp2"``."""
    text = resources.files("wasserclust").joinpath("data", f"{name}.toml").read_bytes()
    return ExperimentConfig.from_dict(tomllib.loads(text.decode()))


def replicate_rng(seed: int, replicate_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replicate_index)]))


def generate_dataset(config: ExperimentConfig, replicate_index: int = 0) -> tuple[HistogramMatrix, np.ndarray]:
    """One synthetic dataset; objects are ordered cluster by cluster."""
    rng = replicate_rng(config.seed, replicate_index)
    cells = []
    labels = []
    ids = []
    for c, row in enumerate(config.clusters):
        for i in range(config.n_per_cluster):
            obj = []
            for pn in row:
                spec = pn.draw(rng)
                x = pearson_sample(spec, config.samples_per_object, rng)
                obj.append(build_from_samples(x, config.bins_per_histogram))
            cells.append(obj)
            labels.append(c)
            ids.append(f"c{c + 1}_{i + 1}")
    matrix = HistogramMatrix(cells, list(config.variable_names), ids)
    return matrix, np.asarray(labels, dtype=np.int64)


@dataclass
class SchemeSummary:
    scheme: Scheme
    cr: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    violations: int = 0

    @staticmethod
    def _stats(values):
        a = np.asarray(values, dtype=float)
        if a.size == 0:
            return float("nan"), float("nan")
        return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0

    @property
    def cr_mean(self) -> float:
        return self._stats(self.cr)[0]

    @property
    def cr_std(self) -> float:
        return self._stats(self.cr)[1]

    @property
    def accuracy_mean(self) -> float:
        return self._stats(self.accuracy)[0]

    @property
    def accuracy_std(self) -> float:
        return self._stats(self.accuracy)[1]


def _run_replicate(args) -> list[tuple[str, float, float, int]]:
    config, schemes, r = args
    matrix, truth = generate_dataset(config, r)
    # same initial partitions for every scheme within a replicate
    cluster_seed = int(np.random.SeedSequence([int(config.seed), int(r), 1]).generate_state(1)[0])
    out = []
    for s in schemes:
        res = run_dca(matrix, config.k, s, max_iter=config.max_iter, restarts=config.restarts, seed=cluster_seed)
        out.append((s.value, corrected_rand(res.partition, truth), accuracy(res.partition, truth), res.violations))
    return out


def run_monte_carlo(
    config: ExperimentConfig,
    schemes: Sequence["Scheme | str"] = tuple(Scheme),
    threads: int = 1,
) -> dict[Scheme, SchemeSummary]:
    """Replicate, cluster best-of-restarts with each scheme, score against the truth."""
    schemes = [Scheme.parse(s) for s in schemes]
    jobs = [(config, schemes, r) for r in range(config.replicates)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run_replicate, jobs))
    else:
        rows = [_run_replicate(j) for j in jobs]
    summary = {s: SchemeSummary(s) for s in schemes}
    for rep in rows:
        for name, cr, acc, viol in rep:
            s = summary[Scheme.parse(name)]
            s.cr.append(cr)
            s.accuracy.append(acc)
            s.violations += viol
    return summary


def summary_rows(summary: dict[Scheme, SchemeSummary]) -> list[dict]:
    return [
        {
            "scheme": s.value,
            "replicates": len(v.cr),
            "cr_mean": v.cr_mean,
            "cr_std": v.cr_std,
            "accuracy_mean": v.accuracy_mean,
            "accuracy_std": v.accuracy_std,
        }
        for s, v in summary.items()
    ]


def check_config(config: ExperimentConfig) -> None:
    """Raise :class:`InfeasibleMoments` if any baseline is outside the Pearson region."""
    for row in config.clusters:
        for pn in row:
            MomentSpec(pn.baseline.mean, pn.baseline.std, pn.baseline.skewness, pn.baseline.kurtosis)
            if any(x < 0 for x in pn.noise):
                raise InfeasibleMoments("noise standard deviations must be non-negative")
