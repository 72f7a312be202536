"""Synthetic datasets and CSV readers/writers."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .metric import MetricSpace, WeightedPointSet

KINDS = ("gaussian_mixture", "dyadic_rings", "uniform_cube", "planted_outliers")


def gen_dataset(
    kind: str,
    n: int,
    d: int,
    k: int,
    m: int = 0,
    seed: int = 0,
    sigma: float = 1.0,
    spread: float = 10.0,
) -> np.ndarray:
    """Coordinates of a synthetic dataset (``n`` points, plus ``m`` planted outliers)."""
    if kind not in KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}")
    if not (n >= k >= 1 and d >= 1 and m >= 0):
        raise ValueError("need n >= k >= 1, d >= 1 and m >= 0")
    rng = np.random.default_rng(seed)
    if kind == "uniform_cube":
        return rng.random((n, d))
    centers = rng.uniform(-spread, spread, size=(k, d))
    comp = np.arange(n) % k
    if kind == "dyadic_rings":
        direction = rng.normal(size=(n, d))
        direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
        radius = 2.0 ** rng.integers(-6, 4, size=n) * rng.uniform(0.55, 1.0, size=n)
        return centers[comp] + radius[:, None] * direction
    core = centers[comp] + sigma * rng.normal(size=(n, d))
    if kind == "gaussian_mixture" or m == 0:
        return core
    lo, hi = core.min(axis=0), core.max(axis=0)
    diam = max(float(np.linalg.norm(hi - lo)), 1e-9)
    mid = (lo + hi) / 2
    direction = rng.normal(size=(m, d))
    direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
    outliers = mid + 100 * diam * direction * rng.uniform(1.0, 1.5, size=(m, 1))
    return np.vstack([core, outliers])


# CSV -------------------------------------------------------------------------------


def write_points_csv(path, coords, weights=None) -> None:
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    weights = np.ones(len(coords)) if weights is None else np.asarray(weights, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(coords.shape[1])] + ["weight"])
        for row, wt in zip(coords, weights):
            w.writerow([repr(float(v)) for v in row] + [repr(float(wt))])


def read_points_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if not header or header[-1] != "weight" or any(h != f"x{i}" for i, h in enumerate(header[:-1])):
        raise ValueError(f"{path}: expected header x0,...,x{{d-1}},weight")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float).reshape(-1, len(header))
    return data[:, :-1], data[:, -1]


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_matrix_csv(path, matrix) -> None:
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt="%.17g")


def read_weights_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=1)


def load_point_set(points=None, matrix=None, weights=None) -> WeightedPointSet:
    """Euclidean points CSV, or an explicit distance matrix with an optional weights column."""
    if matrix is not None:
        space = MetricSpace.explicit(read_matrix_csv(matrix))
        w = np.ones(space.n) if weights is None else read_weights_csv(weights)
        return WeightedPointSet(space, np.arange(space.n), w)
    if points is None:
        raise ValueError("no input data given")
    coords, w = read_points_csv(points)
    return WeightedPointSet(MetricSpace.euclidean(coords), np.arange(len(coords)), w)


def write_coreset_csv(path, coreset) -> None:
    """Euclidean: ``x0..,weight,provenance``; explicit metrics: ``point_id,weight,provenance``.

    The sampling plan is written next to the CSV as ``<path>.plan.json``.
    """
    space = coreset.space
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if space.is_euclidean:
            w.writerow([f"x{i}" for i in range(space.d)] + ["weight", "provenance"])
            coords = space.coords[coreset.ids]
            for row, wt, tag in zip(coords, coreset.weights, coreset.provenance):
                w.writerow([repr(float(v)) for v in row] + [repr(float(wt)), tag])
        else:
            w.writerow(["point_id", "weight", "provenance"])
            for pid, wt, tag in zip(coreset.ids, coreset.weights, coreset.provenance):
                w.writerow([int(pid), repr(float(wt)), tag])
    if coreset.plan is not None:
        Path(str(path) + ".plan.json").write_text(json.dumps(coreset.plan.to_dict(), indent=2, sort_keys=True))


def read_coreset_csv(path, space: MetricSpace | None = None) -> tuple[WeightedPointSet, list[str]]:
    """Coreset entries as a merged point set plus the per-row provenance tags.

    Explicit-metric coresets refer to ids of ``space``; Euclidean ones carry
    their own coordinates.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header, body = rows[0], rows[1:]
    tags = [r[-1] for r in body]
    if header[0] == "point_id":
        if space is None:
            raise ValueError("explicit-metric coresets need the original metric")
        ids = np.array([int(r[0]) for r in body], dtype=np.int64)
        wts = np.array([float(r[1]) for r in body])
        return WeightedPointSet.merged(space, ids, wts), tags
    d = len(header) - 2
    coords = np.array([[float(v) for v in r[:d]] for r in body]).reshape(-1, d)
    wts = np.array([float(r[d]) for r in body])
    # repeated ring draws share coordinates; fold them into one weighted point
    uniq, inv = np.unique(coords, axis=0, return_inverse=True)
    merged = np.zeros(len(uniq))
    np.add.at(merged, inv.ravel(), wts)
    return WeightedPointSet(MetricSpace.euclidean(uniq), np.arange(len(uniq)), merged), tags
