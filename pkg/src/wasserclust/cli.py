"""Command-line interface: ``wasserclust {cluster,generate,experiment,qpi,ch-sweep}``.

Exit codes: 0 success, 2 unreadable input, 3 invalid run specification.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import ClusteringResult, run_dca
from .errors import InfeasibleMoments, WasserclustError
from .evaluation import general_prototype, inertia, qpi
from .histogram import HistogramMatrix
from .io import (
    ParseError,
    load_matrix,
    read_json,
    result_from_json,
    write_csv,
    write_json,
    write_matrix,
)
from .synthgen import (
    ExperimentConfig,
    builtin_config,
    check_config,
    generate_dataset,
    load_config,
    run_monte_carlo,
    summary_rows,
)
from .wasserstein import Scheme

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_RUNSPEC = 3

log = logging.getLogger("wasserclust")


class RunSpecError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_RUNSPEC, f"{self.prog}: error: {message}\n")


@dataclass
class RunSpec:
    input: Path
    ks: list[int]
    scheme: Scheme
    restarts: int
    max_iter: int
    seed: int
    out: Path
    threads: int
    num_bins: int

    def validate(self, n: int) -> None:
        if self.restarts < 1 or self.max_iter < 1:
            raise RunSpecError("--restarts and --max-iter must be >= 1")
        if len(self.ks) == 1:
            if not 1 <= self.ks[0] <= n:
                raise RunSpecError(f"--k must lie in [1, {n}]")
        elif not (2 <= self.ks[0] <= self.ks[-1] < n):
            raise RunSpecError(f"a K range needs 2 <= K_min <= K_max < n = {n}")


def parse_k(text: str) -> list[int]:
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if lo > hi:
                raise RunSpecError(f"empty K range {text!r}")
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise RunSpecError(f"--k expects an integer or a range like 2..10, got {text!r}") from None


def default_threads() -> int:
    env = os.environ.get("WASSERCLUST_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _resolve_config(name: str) -> ExperimentConfig:
    path = Path(name)
    if path.exists():
        return load_config(path)
    if name in ("exp1", "exp2"):
        return builtin_config(name)
    raise FileNotFoundError(name)


def _prototype_payload(matrix: HistogramMatrix, result: ClusteringResult) -> dict:
    def cell(h):
        return {"t": h.t.tolist(), "q": h.q.tolist(), "mean": h.mean, "std": h.std}

    sizes = result.partition.sizes
    return {
        "variables": list(matrix.variable_names),
        "scheme": result.scheme.value,
        "clusters": [
            {"cluster": k, "size": int(sizes[k]), "cells": [cell(h) for h in row]}
            for k, row in enumerate(result.prototypes)
        ],
        "general": [cell(h) for h in general_prototype(matrix, result)],
    }


def write_cluster_artifacts(out: Path, matrix: HistogramMatrix, result: ClusteringResult) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    breakdown = inertia(matrix, result)
    report = qpi(breakdown)
    payload = result.to_dict()
    payload["object_ids"] = list(matrix.object_ids)
    payload["variables"] = list(matrix.variable_names)
    payload["inertia"] = breakdown.to_dict()
    write_json(out / "result.json", payload)
    write_json(out / "qpi.json", report.to_dict())
    (out / "qpi.txt").write_text(report.to_text())
    write_json(out / "prototypes.json", _prototype_payload(matrix, result))
    write_csv(out / "trace.csv", ["iteration", "criterion"], enumerate(result.criterion_trace, start=1))
    return {"breakdown": breakdown, "qpi": report}


def _ch(breakdown, k, n):
    if 2 <= k < n:
        return breakdown.ch_index()
    return float("nan")


def cmd_cluster(args) -> int:
    spec = RunSpec(
        input=Path(args.input),
        ks=parse_k(args.k),
        scheme=Scheme.parse(args.scheme),
        restarts=args.restarts,
        max_iter=args.max_iter,
        seed=args.seed,
        out=Path(args.out),
        threads=args.threads,
        num_bins=args.num_bins,
    )
    matrix = load_matrix(spec.input, spec.num_bins)
    spec.validate(matrix.n)
    rows = []
    for k in spec.ks:
        res = run_dca(matrix, k, spec.scheme, spec.max_iter, spec.restarts, spec.seed, spec.threads)
        dest = spec.out if len(spec.ks) == 1 else spec.out / f"k_{k:02d}"
        arts = write_cluster_artifacts(dest, matrix, res)
        ch = _ch(arts["breakdown"], k, matrix.n)
        rows.append((k, ch, arts["qpi"].global_qpi, res.criterion))
        print(f"K={k} scheme={spec.scheme.value} criterion={res.criterion:.6g} QPI={arts['qpi'].global_qpi:.4f} CH={ch:.4f}")
    if len(spec.ks) > 1:
        write_csv(spec.out / "ch.csv", ["K", "CH", "QPI", "criterion"], rows)
    return EXIT_OK


def cmd_ch_sweep(args) -> int:
    ks = parse_k(args.k)
    matrix = load_matrix(args.input, args.num_bins)
    if not (2 <= ks[0] <= ks[-1] < matrix.n):
        raise RunSpecError(f"a K range needs 2 <= K_min <= K_max < n = {matrix.n}")
    schemes = [Scheme.parse(s) for s in args.schemes.split(",")]
    rows = []
    for s in schemes:
        for k in ks:
            res = run_dca(matrix, k, s, args.max_iter, args.restarts, args.seed, args.threads)
            b = inertia(matrix, res)
            rows.append((s.value, k, b.ch_index(), qpi(b).global_qpi))
            print(f"{s.value:8s} K={k:2d} CH={rows[-1][2]:.4f} QPI={rows[-1][3]:.4f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "ch.csv", ["scheme", "K", "CH", "QPI"], rows)
    return EXIT_OK


def cmd_qpi(args) -> int:
    matrix = load_matrix(args.input, args.num_bins)
    result = result_from_json(read_json(args.result))
    if result.partition.n != matrix.n:
        raise RunSpecError("result and input disagree on the number of objects")
    report = qpi(inertia(matrix, result))
    text = report.to_text()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "qpi.json", report.to_dict())
        (out / "qpi.txt").write_text(text)
    print(text)
    return EXIT_OK


def _config_from_args(args) -> ExperimentConfig:
    cfg = _resolve_config(args.config).with_preset(getattr(args, "preset", None))
    cfg = cfg.replace(
        seed=getattr(args, "seed", None),
        replicates=getattr(args, "replicates", None),
        restarts=getattr(args, "restarts", None),
        bins_per_histogram=getattr(args, "bins", None),
        samples_per_object=getattr(args, "samples", None),
    )
    check_config(cfg)
    return cfg


def cmd_generate(args) -> int:
    cfg = _config_from_args(args)
    matrix, labels = generate_dataset(cfg, args.replicate)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "matrix.json", matrix)
    write_csv(out / "labels.csv", ["id", "label"], zip(matrix.object_ids, labels.tolist()))
    print(f"wrote {matrix.n} objects x {matrix.p} variables to {out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _config_from_args(args)
    schemes = [Scheme.parse(s) for s in args.schemes.split(",")]
    summary = run_monte_carlo(cfg, schemes, threads=args.threads)
    rows = summary_rows(summary)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["scheme", "replicates", "cr_mean", "cr_std", "accuracy_mean", "accuracy_std"]
    write_csv(out / "summary.csv", header, ([r[h] for h in header] for r in rows))
    write_csv(
        out / "replicates.csv",
        ["replicate"] + [f"{s.value}_{m}" for s in schemes for m in ("cr", "accuracy")],
        (
            [r] + [x for s in schemes for x in (summary[s].cr[r], summary[s].accuracy[r])]
            for r in range(cfg.replicates)
        ),
    )
    names = [r["scheme"] for r in rows]
    print(f"{cfg.name}: {cfg.replicates} replicates, {cfg.restarts} restarts, {cfg.samples_per_object} samples/object")
    print(" " * 26 + "".join(n.rjust(18) for n in names))
    print("Mean best CR (std)".ljust(26) + "".join(f"{r['cr_mean']:.4f} ({r['cr_std']:.4f})".rjust(18) for r in rows))
    print(
        "Mean best accuracy (std)".ljust(26)
        + "".join(f"{r['accuracy_mean']:.4f} ({r['accuracy_std']:.4f})".rjust(18) for r in rows)
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wasserclust", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common_cluster(sp):
        sp.add_argument("--input", required=True, help="histogram matrix JSON or raw-samples CSV")
        sp.add_argument("--restarts", type=int, default=50)
        sp.add_argument("--max-iter", type=int, default=100)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--num-bins", type=int, default=20, help="bins per histogram for CSV input")
        sp.add_argument("--threads", type=int, default=default_threads())

    c = sub.add_parser("cluster", help="cluster a histogram matrix")
    common_cluster(c)
    c.add_argument("--k", required=True, help="number of clusters, or a range like 2..10")
    c.add_argument("--scheme", default="standard", choices=[s.value for s in Scheme])
    c.add_argument("--out", default="out")
    c.set_defaults(func=cmd_cluster)

    s = sub.add_parser("ch-sweep", help="CH index over a range of K")
    common_cluster(s)
    s.add_argument("--k", default="2..10")
    s.add_argument("--schemes", default="standard,gc-awd,cdc-awd")
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_ch_sweep)

    q = sub.add_parser("qpi", help="QPI tables for a stored clustering result")
    q.add_argument("--input", required=True)
    q.add_argument("--result", required=True, help="result.json written by 'cluster'")
    q.add_argument("--num-bins", type=int, default=20)
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_qpi)

    def common_config(sp):
        sp.add_argument("--config", required=True, help="TOML/JSON experiment config, or exp1/exp2")
        sp.add_argument("--preset", choices=["desk", "full"], default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--samples", type=int, default=None, help="draws per histogram")
        sp.add_argument("--bins", type=int, default=None, help="bins per histogram")

    g = sub.add_parser("generate", help="write one synthetic dataset")
    common_config(g)
    g.add_argument("--out", required=True)
    g.add_argument("--replicate", type=int, default=0)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("experiment", help="Monte Carlo comparison of the schemes")
    common_config(e)
    e.add_argument("--schemes", default="standard,gc-awd,cdc-awd")
    e.add_argument("--replicates", type=int, default=None)
    e.add_argument("--restarts", type=int, default=None)
    e.add_argument("--threads", type=int, default=default_threads())
    e.add_argument("--out", default="out")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename or exc}", file=sys.stderr)
        return EXIT_PARSE
    except (RunSpecError, InfeasibleMoments) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNSPEC
    except WasserclustError as exc:
        # histogram validation failures are bad input data
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNSPEC


if __name__ == "__main__":
    sys.exit(main())
