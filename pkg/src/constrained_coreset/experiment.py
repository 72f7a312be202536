"""Experiment orchestration and machine-readable reports."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .certify import POLICIES, certify_coreset
from .constraints import StructureConstraint
from .datasets import gen_dataset, load_point_set
from .decompose import (
    approx_from_centers,
    check_decomposition,
    decompose_rings_groups,
    tri_criteria_approx,
)
from .hus import gamma_from_params, hus_build, named_rng, size_accounting
from .matroid import distribution_point, members, random_basis_distribution
from .metric import MetricSpace, WeightedPointSet, ring_key
from .oat import knapsack_lip_instance, lip_ratio_search, oat_exact_lp, oat_transport

SCHEMA_VERSION = 1


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.cause = exc


@dataclass
class ExperimentConfig:
    dataset: dict = field(default_factory=lambda: {"kind": "gaussian_mixture", "n": 1000, "d": 2, "k": 3, "m": 0, "seed": 0})
    constraint: dict = field(default_factory=lambda: {"type": "simplex"})
    k: int = 3
    z: float = 1.0
    m: float = 0.0
    eps: float = 0.2
    gamma: float | None = 4000.0
    gamma_params: dict | None = None
    trials: int = 100
    seed: int = 0
    beta: int = 8
    policies: list = field(default_factory=lambda: list(POLICIES))
    identity_coreset: bool = False
    coreset_out: str | None = None
    report_out: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.k < 1 or self.z < 1 or self.m < 0 or self.trials < 0:
            raise ValueError("need k >= 1, z >= 1, m >= 0, trials >= 0")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.gamma is None and self.gamma_params is None:
            raise ValueError("give gamma or gamma_params")
        if self.gamma is not None and self.gamma < 1:
            raise ValueError("gamma must be >= 1")

    def resolved_gamma(self) -> float:
        if self.gamma is not None:
            return float(self.gamma)
        p = dict(self.gamma_params)
        return gamma_from_params(self.k, self.z, self.eps, **p)

    def load_points(self) -> WeightedPointSet:
        ds = dict(self.dataset)
        if "path" in ds or "matrix" in ds:
            return load_point_set(ds.get("path"), ds.get("matrix"), ds.get("weights"))
        coords = gen_dataset(ds["kind"], ds["n"], ds["d"], ds.get("k", self.k), ds.get("m", 0), ds.get("seed", self.seed))
        return WeightedPointSet.unit(MetricSpace.euclidean(coords))

    def load_constraint(self) -> StructureConstraint:
        spec = dict(self.constraint)
        spec.setdefault("k", self.k)
        return StructureConstraint.from_dict(spec)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:  # re-tagged with the pipeline stage
        raise StageError(name, exc) from exc


def run_experiment(config: ExperimentConfig, points: WeightedPointSet | None = None) -> dict:
    """approx -> build -> certify. Timings are kept apart from the digest."""
    config.validate()
    timings = {}
    t0 = time.perf_counter()
    P = points if points is not None else _stage("load", config.load_points)
    B = _stage("constraint", config.load_constraint)
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    approx = _stage("approx", tri_criteria_approx, P, config.k, config.m, config.z, named_rng(config.seed, "approx"), beta=config.beta)
    timings["approx"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    gamma = config.resolved_gamma()
    coreset = _stage("build", hus_build, P, config.k, config.z, config.m, gamma, approx, config.eps, config.seed)
    S = P if config.identity_coreset else coreset.as_point_set()
    timings["build"] = time.perf_counter() - t0
    if config.coreset_out:
        from .datasets import write_coreset_csv

        write_coreset_csv(config.coreset_out, coreset)

    report = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "gamma": gamma,
        "n": len(P),
        "total_weight": P.total_weight,
        "approx": {"centers": len(approx.centers), "cost": approx.cost, "boundary_overshoot": approx.boundary_overshoot},
        "coreset": size_accounting(coreset) | {"distinct_points": len(coreset.as_point_set()), "weight": coreset.total_weight},
        "identity_coreset": config.identity_coreset,
    }
    if config.trials > 0:
        t0 = time.perf_counter()
        cert = _stage(
            "certify",
            certify_coreset,
            P,
            S,
            B,
            config.z,
            config.m,
            config.trials,
            named_rng(config.seed, "certify"),
            config.k,
            approx,
            tuple(config.policies),
        )
        timings["certify"] = time.perf_counter() - t0
        report.update(cert.to_dict())
    else:
        report.update({"trials": 0, "max_rel_err": None, "per_trial": []})
    report["timings"] = timings
    if config.report_out:
        write_report(config.report_out, report)
    return report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True)


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_report(report))


def report_digest(report: dict) -> str:
    """SHA-256 of the report without wall-clock timings or output paths."""
    body = {k: v for k, v in report.items() if k != "timings"}
    if isinstance(body.get("config"), dict):
        body["config"] = {k: v for k, v in body["config"].items() if k not in ("report_out", "coreset_out")}
    return hashlib.sha256(dumps_report(body).encode("utf-8")).hexdigest()


def check_report_consistency(report: dict) -> bool:
    errs = [r["rel_err"] for r in report.get("per_trial", []) if r.get("error") is None]
    if not errs:
        return report.get("max_rel_err") in (None, 0.0)
    return abs(max(errs) - report["max_rel_err"]) <= 1e-15


# OAT suite ---------------------------------------------------------------------------


def run_oat_suite(constraint: StructureConstraint, trials: int, U_list=(1, 10, 100), seed: int = 0) -> dict:
    """Ratio search on ``constraint``, the path-vs-LP sandwich for matroids,
    and the knapsack instances for each ``U``."""
    report: dict = {"schema_version": SCHEMA_VERSION, "constraint": constraint.to_dict(), "trials": trials}
    if trials > 0:
        ratio, witness = lip_ratio_search(constraint, trials, seed)
        report["lip_ratio"] = {"max_ratio": ratio, "witness": witness}
    if constraint.kind == "matroid" and trials > 0:
        M = constraint.matroid
        rng = named_rng(seed, "sandwich")
        rows, longest = [], 0
        for _ in range(trials):
            mu = random_basis_distribution(M, rng)
            h = distribution_point(M, mu)
            h2 = distribution_point(M, random_basis_distribution(M, rng))
            gap = float(np.abs(h - h2).sum())
            if gap < 1e-12:
                continue
            res = oat_transport(M, h, h2, mu)
            sigma = np.array([w * np.isin(np.arange(M.k), members(I)) for I, w in mu.items()])
            lp = oat_exact_lp(constraint, h, h2, sigma)
            rows.append((lp / gap, res.moved / gap))
            longest = max(longest, res.longest_path)
        arr = np.array(rows) if rows else np.zeros((0, 2))
        bound = M.depth + 1 if M.family is not None else M.k - 1
        report["sandwich"] = {
            "instances": len(rows),
            "max_lp_ratio": float(arr[:, 0].max()) if rows else None,
            "max_path_ratio": float(arr[:, 1].max()) if rows else None,
            "lp_below_path": bool(np.all(arr[:, 0] <= arr[:, 1] + 1e-7)),
            "path_ratio_bound": bound,
            "within_bound": bool(np.all(arr[:, 1] <= bound + 1e-7)),
            "longest_path": longest,
        }
    report["knapsack"] = []
    for U in U_list:
        inst = knapsack_lip_instance(float(U))
        report["knapsack"].append({"U": float(U), "oat": inst.oat, "ratio": inst.ratio, "exceeds_U": inst.ratio > U})
    return report


# decomposition inspection --------------------------------------------------------------


def inspect_decomposition(P: WeightedPointSet, centers, k: int, z: float, eps: float, m: float = 0.0, seed: int = 0) -> dict:
    """Per-cluster rings and groups with the invariant checks inline."""
    if centers is None:
        approx = tri_criteria_approx(P, k, m, z, named_rng(seed, "approx"))
    else:
        approx = approx_from_centers(P, centers, m, z)
    clusters = []
    for i in range(approx.n_clusters):
        Q = approx.cluster(i)
        if len(Q) == 0:
            continue
        c = approx.center(i)
        dec = decompose_rings_groups(Q, c, k, z, eps, cluster=i)
        clusters.append(
            {
                "cluster": i,
                "center": np.asarray(c).tolist(),
                "size": len(Q),
                "cost": dec.cost,
                "threshold": dec.threshold,
                "rings": [
                    {"index": ring_key(r.index), "size": len(r.members), "cost": r.cost, "lambda": r.lam, "heavy": r.cost >= dec.threshold}
                    for r in dec.rings
                ],
                "groups": [{"l": ring_key(g.l), "r": ring_key(g.r), "size": len(g.members), "cost": g.cost} for g in dec.groups],
                "checks": check_decomposition(Q, dec, z, k, eps),
            }
        )
    return {"schema_version": SCHEMA_VERSION, "k": k, "z": z, "eps": eps, "clusters": clusters}
