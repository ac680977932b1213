import json

import numpy as np
import pytest

from wasserclust.errors import InfeasibleMoments
from wasserclust.histogram import quantile
from wasserclust.pearson import MomentSpec
from wasserclust.synthgen import (
    ExperimentConfig,
    ParamNoise,
    builtin_config,
    check_config,
    feasible_moments,
    generate_dataset,
    load_config,
    run_monte_carlo,
    summary_rows,
)
from wasserclust.wasserstein import Scheme

# (mean, std, skewness, kurtosis) pairs of (baseline, noise std) per cluster and variable
EXP1_BASELINES = [
    [[(-4.8, 6), (12, 1.2), (-0.05, 0.1), (3.10, 0.1)], [(17.0, 12), (6.0, 0.6), (0.1, 0.1), (2.95, 0.1)]],
    [[(-4.8, 6), (9, 1.2), (0.00, 0.1), (3.00, 0.1)], [(-17.0, 12), (4.6, 0.6), (0.0, 0.1), (3.00, 0.1)]],
    [[(10.0, 6), (6, 1.2), (0.10, 0.1), (2.95, 0.1)], [(0.0, 12), (3.3, 0.6), (-0.1, 0.1), (3.10, 0.1)]],
]
EXP2_VAR1_BASELINES = [
    [(0.0, 0.8), (3.6, 0.3), (-0.04, 0.01), (2.90, 0.03)],
    [(-0.5, 1.6), (2.7, 0.2), (0.03, 0.01), (3.05, 0.03)],
    [(2.8, 2.4), (1.8, 0.1), (0.10, 0.01), (3.20, 0.03)],
]


def config_pairs(cfg, c, j):
    pn = cfg.clusters[c][j]
    b = pn.baseline
    return [(b.mean, pn.noise[0]), (b.std, pn.noise[1]), (b.skewness, pn.noise[2]), (b.kurtosis, pn.noise[3])]


def tiny_config(noise=0.0, sep=100.0, **kw):
    rows = []
    for c in range(3):
        rows.append(
            (
                ParamNoise(MomentSpec(sep * c, 1.0, 0.0, 3.0), (noise, noise, 0.0, 0.0)),
                ParamNoise(MomentSpec(-sep * c, 2.0, 0.0, 3.0), (noise, noise, 0.0, 0.0)),
            )
        )
    opts = dict(n_per_cluster=6, samples_per_object=200, bins_per_histogram=8, replicates=2, restarts=2, seed=3)
    opts.update(kw)
    return ExperimentConfig(clusters=tuple(rows), **opts)


class TestShippedTables:
    def test_experiment_1_matches_table(self):
        cfg = builtin_config("exp1")
        for c in range(3):
            for j in range(2):
                assert config_pairs(cfg, c, j) == pytest.approx(EXP1_BASELINES[c][j])

    def test_experiment_2_variable_1_matches_table(self):
        cfg = builtin_config("exp2")
        for c in range(3):
            assert config_pairs(cfg, c, 0) == pytest.approx(EXP2_VAR1_BASELINES[c])

    @pytest.mark.parametrize("name", ["exp1", "exp2"])
    def test_protocol_defaults(self, name):
        cfg = builtin_config(name)
        assert (cfg.k, cfg.p, cfg.n_per_cluster, cfg.samples_per_object) == (3, 2, 50, 1000)
        assert (cfg.replicates, cfg.restarts) == (100, 50)
        check_config(cfg)


class TestConfig:
    def test_presets(self):
        cfg = builtin_config("exp1")
        desk = cfg.with_preset("desk")
        assert (desk.replicates, desk.restarts, desk.samples_per_object) == (20, 10, 500)
        assert cfg.with_preset("full").replicates == 100
        with pytest.raises(ValueError):
            cfg.with_preset("huge")

    def test_dict_round_trip(self, tmp_path):
        cfg = builtin_config("exp2")
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert load_config(path) == cfg

    def test_toml_load(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text(
            'seed = 4\nn_per_cluster = 3\n[[cluster]]\n[[cluster.variable]]\n'
            "mean = [0, 1]\nstd = [1, 0]\nskewness = [0, 0]\nkurtosis = [3, 0]\n"
        )
        cfg = load_config(path)
        assert cfg.k == 1 and cfg.p == 1 and cfg.seed == 4 and cfg.variable_names == ("Y1",)

    def test_bad_shapes_and_counts(self):
        pn = ParamNoise(MomentSpec(0, 1, 0, 3), (0, 0, 0, 0))
        with pytest.raises(ValueError):
            ExperimentConfig(clusters=((pn, pn), (pn,)))
        with pytest.raises(ValueError):
            ExperimentConfig(clusters=((pn,),), replicates=0)

    def test_infeasible_baseline(self):
        d = builtin_config("exp1").to_dict()
        d["cluster"][0]["variable"][0]["kurtosis"] = [1.0, 0.1]
        with pytest.raises(InfeasibleMoments):
            ExperimentConfig.from_dict(d)

    def test_feasibility_projection(self):
        spec = feasible_moments(0.0, -3.0, 1.0, 1.5)
        assert spec.std == 1e-6
        assert spec.kurtosis == pytest.approx(1 + 1.0 + 1e-3)


class TestGenerate:
    def test_shape_and_labels(self):
        cfg = builtin_config("exp1").replace(samples_per_object=200)
        m, labels = generate_dataset(cfg, 0)
        assert m.shape == (150, 2)
        assert np.bincount(labels).tolist() == [50, 50, 50]
        assert m.object_ids[0] == "c1_1" and m.object_ids[-1] == "c3_50"
        assert all(m[i, j].n_bins == 20 for i in range(0, 150, 37) for j in range(2))

    def test_deterministic_and_replicate_dependent(self):
        cfg = tiny_config(noise=0.5)
        a, _ = generate_dataset(cfg, 1)
        b, _ = generate_dataset(cfg, 1)
        c, _ = generate_dataset(cfg, 2)
        assert all(a[i, j] == b[i, j] for i in range(a.n) for j in range(a.p))
        assert any(a[i, j] != c[i, j] for i in range(a.n) for j in range(a.p))

    def test_zero_noise_objects_share_a_distribution(self):
        cfg = tiny_config(noise=0.0, samples_per_object=20_000, n_per_cluster=3)
        m, labels = generate_dataset(cfg, 0)
        # interior knots are empirical quantiles; the tail bins reach to the sample extremes
        t = np.arange(1, 8) / 8
        for c in range(3):
            rows = np.flatnonzero(labels == c)
            qs = np.array([quantile(m[i, 0], t) for i in rows])
            assert np.ptp(qs, axis=0).max() < 0.1

    def test_generated_histograms_follow_the_baseline(self):
        # tail bins run to the sample extremes, so the std is only close with fine bins
        cfg = tiny_config(noise=0.0, samples_per_object=5000, n_per_cluster=2, bins_per_histogram=100)
        m, labels = generate_dataset(cfg, 0)
        for i in range(m.n):
            assert m[i, 0].mean == pytest.approx(100.0 * labels[i], abs=0.1)
            assert m[i, 1].std == pytest.approx(2.0, rel=0.05)


class TestMonteCarlo:
    def test_separated_config_is_recovered_by_all_schemes(self):
        summary = run_monte_carlo(tiny_config(noise=0.0, replicates=1), list(Scheme))
        for s in Scheme:
            assert summary[s].cr == [1.0]
            assert summary[s].accuracy == [1.0]
            assert summary[s].violations == 0

    def test_deterministic_and_process_invariant(self):
        cfg = tiny_config(noise=3.0, sep=2.0, replicates=3)
        a = run_monte_carlo(cfg, ["standard", "cdc-awd"], threads=1)
        b = run_monte_carlo(cfg, ["standard", "cdc-awd"], threads=2)
        for s in a:
            assert a[s].cr == b[s].cr and a[s].accuracy == b[s].accuracy

    def test_summary_rows(self):
        summary = run_monte_carlo(tiny_config(replicates=2), ["gc-awd"])
        (row,) = summary_rows(summary)
        assert row["scheme"] == "gc-awd" and row["replicates"] == 2
        assert row["cr_std"] == pytest.approx(np.std(summary[Scheme.GC_AWD].cr, ddof=1))
