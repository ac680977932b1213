"""File formats: histogram matrices (JSON), raw samples (CSV), results and reports."""

from __future__ import annotations

import csv
import json
import math
import os
from collections import OrderedDict
from pathlib import Path

import numpy as np

from .clustering import ClusteringResult, Partition
from .histogram import Histogram, HistogramMatrix, build_from_bins, build_from_samples, from_quantiles
from .wasserstein import Scheme, WeightSystem


class ParseError(ValueError):
    """Input file could not be read as the expected format."""


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def dumps(obj, indent: int | None = 1) -> str:
    # float repr is the shortest string that round-trips, so values survive bit-exactly
    return json.dumps(_clean(obj), indent=indent)


def write_json(path: str | os.PathLike, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path: str | os.PathLike):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def histogram_from_json(d) -> Histogram:
    if isinstance(d, dict) and "bins" in d:
        return build_from_bins(d["bins"])
    if isinstance(d, dict) and "t" in d and "q" in d:
        return from_quantiles(np.asarray(d["t"], dtype=float), np.asarray(d["q"], dtype=float))
    raise ParseError("a histogram must be {'bins': [[lower, upper, weight], ...]}")


def matrix_to_json(matrix: HistogramMatrix) -> dict:
    return {
        "variables": list(matrix.variable_names),
        "objects": [
            {"id": oid, "cells": [h.to_dict() for h in matrix[i]]} for i, oid in enumerate(matrix.object_ids)
        ],
    }


def matrix_from_json(d) -> HistogramMatrix:
    try:
        variables = list(d["variables"])
        objs = d["objects"]
        ids = [str(o["id"]) for o in objs]
        cells = [[histogram_from_json(c) for c in o["cells"]] for o in objs]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed histogram matrix: missing or invalid field {exc}") from exc
    return HistogramMatrix(cells, variables, ids)


def matrix_from_samples_csv(path: str | os.PathLike, num_bins: int) -> HistogramMatrix:
    """Rows are ``object_id, variable, value``; a header row is optional."""
    samples: "OrderedDict[str, OrderedDict[str, list[float]]]" = OrderedDict()
    variables: list[str] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"{path}: line {lineno}: expected 3 columns, got {len(row)}")
            oid, var, val = (c.strip() for c in row)
            try:
                x = float(val)
            except ValueError:
                if lineno == 1:
                    continue
                raise ParseError(f"{path}: line {lineno}: {val!r} is not a number") from None
            if var not in variables:
                variables.append(var)
            samples.setdefault(oid, OrderedDict()).setdefault(var, []).append(x)
    if not samples:
        raise ParseError(f"{path}: no samples")
    cells = []
    for oid, by_var in samples.items():
        missing = [v for v in variables if v not in by_var]
        if missing:
            raise ParseError(f"{path}: object {oid!r} has no samples for {missing}")
        cells.append([build_from_samples(by_var[v], num_bins) for v in variables])
    return HistogramMatrix(cells, variables, list(samples))


def load_matrix(path: str | os.PathLike, num_bins: int = 20) -> HistogramMatrix:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return matrix_from_samples_csv(path, num_bins)
    return matrix_from_json(read_json(path))


def write_matrix(path: str | os.PathLike, matrix: HistogramMatrix) -> None:
    write_json(path, matrix_to_json(matrix))


def result_from_json(d: dict) -> ClusteringResult:
    """Rebuild a result written by :meth:`ClusteringResult.to_dict`."""
    try:
        k = int(d["k"])
        scheme = Scheme.parse(d["scheme"])
        prototypes = [tuple(histogram_from_json(c) for c in row) for row in d.get("prototypes", [])]
        return ClusteringResult(
            partition=Partition(np.asarray(d["labels"]), k),
            prototypes=prototypes,
            weights=WeightSystem.from_dict(d["weights"]),
            criterion_trace=list(d.get("criterion_trace", [d.get("criterion", float("nan"))])),
            iterations=int(d.get("iterations", 0)),
            seed=int(d.get("seed", 0)),
            restarts_run=int(d.get("restarts_run", 1)),
            converged=bool(d.get("converged", True)),
            scheme=scheme,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed result file: {exc}") from exc


def write_csv(path: str | os.PathLike, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])
