"""Hierarchical uniform sampling: outliers + per-ring samples + two-point groups."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .decompose import (
    ApproxSolution,
    Decomposition,
    decompose_rings_groups,
    tri_criteria_approx,
    two_point_coreset,
)
from .metric import NEG_INF, MetricSpace, WeightedPointSet, ring_key


def _key_int(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if isinstance(key, float) and key == NEG_INF:
        return 0
    return int(key) + 2**31


def named_rng(seed: int, *keys) -> np.random.Generator:
    """Independent stream for ``(seed, keys...)``; strings are hashed, ``-inf`` maps to 0."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_int(k) for k in keys))
    return np.random.default_rng(ss)


def ring_sample_size(gamma: float, lam: float) -> int:
    """``ceil(gamma * lam)``, ignoring float noise just above an integer."""
    x = gamma * lam
    return max(1, math.ceil(x - 1e-9 * max(1.0, x)))


@dataclass
class RingPlan:
    cluster: int
    index: float
    size: int
    weight: float
    lam: float
    gamma_r: int

    @property
    def whole(self) -> bool:
        return self.gamma_r >= self.size

    @property
    def emitted(self) -> int:
        return self.size if self.whole else self.gamma_r

    def to_dict(self) -> dict:
        return {
            "cluster": self.cluster,
            "index": ring_key(self.index),
            "size": self.size,
            "weight": self.weight,
            "lambda": self.lam,
            "gamma_R": self.gamma_r,
            "whole": self.whole,
        }


@dataclass
class SamplingPlan:
    gamma: float
    eps: float
    k: int
    z: float
    m: float
    n_clusters: int
    rings: list[RingPlan] = field(default_factory=list)
    groups: int = 0

    def per_cluster_budget(self) -> dict[int, tuple[int, int]]:
        """``cluster -> (sum of gamma_R, number of heavy rings)``."""
        out: dict[int, tuple[int, int]] = {}
        for r in self.rings:
            total, count = out.get(r.cluster, (0, 0))
            out[r.cluster] = (total + r.gamma_r, count + 1)
        return out

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "eps": self.eps,
            "k": self.k,
            "k_prime": self.n_clusters,
            "z": self.z,
            "m": self.m,
            "groups": self.groups,
            "rings": [r.to_dict() for r in self.rings],
        }


@dataclass
class Coreset:
    """Weighted entries (ids may repeat across ring draws) with provenance tags."""

    space: MetricSpace
    ids: np.ndarray
    weights: np.ndarray
    provenance: list[str]
    plan: SamplingPlan | None = None
    decompositions: list[Decomposition] = field(default_factory=list)
    boundary_overshoot: float = 0.0

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def as_point_set(self) -> WeightedPointSet:
        return WeightedPointSet.merged(self.space, self.ids, self.weights)


def hus_build(
    P: WeightedPointSet,
    k: int,
    z: float,
    m: float,
    gamma: float,
    approx: ApproxSolution | None = None,
    eps: float = 0.2,
    seed: int = 0,
) -> Coreset:
    """Outliers keep their weights; heavy rings are sampled with replacement
    (``ceil(gamma * lambda_R)`` draws of weight ``w(R) / draws``) or kept whole
    when that many draws would not be smaller; light groups become two-point
    coresets."""
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    if approx is None:
        approx = tri_criteria_approx(P, k, m, z, named_rng(seed, "approx"))
    plan = SamplingPlan(float(gamma), eps, k, z, float(m), approx.n_clusters)
    ids: list[np.ndarray] = []
    weights: list[np.ndarray] = []
    prov: list[str] = []

    out = approx.outliers
    ids.append(out.ids)
    weights.append(out.weights)
    prov += ["outlier"] * len(out)

    decs = []
    for i in range(approx.n_clusters):
        Q = approx.cluster(i)
        if len(Q) == 0:
            continue
        dec = decompose_rings_groups(Q, approx.center(i), k, z, eps, cluster=i)
        decs.append(dec)
        for ring in dec.heavy:
            R = ring.members
            size = ring_sample_size(gamma, ring.lam)
            rp = RingPlan(i, ring.index, len(R), R.total_weight, ring.lam, size)
            plan.rings.append(rp)
            tag = f"ring:{i}:{ring_key(ring.index)}"
            if rp.whole:
                ids.append(R.ids)
                weights.append(R.weights)
            else:
                rng = named_rng(seed, "ring", i, ring.index)
                draws = rng.choice(len(R), size=size, replace=True, p=R.weights / R.total_weight)
                ids.append(R.ids[draws])
                weights.append(np.full(size, R.total_weight / size))
            prov += [tag] * rp.emitted
        for g in dec.groups:
            plan.groups += 1
            tp = two_point_coreset(g, approx.center(i), z)
            tag = f"group:{i}:{ring_key(g.l)}:{ring_key(g.r)}"
            for pid, wt in ((tp.close_id, tp.close_weight), (tp.far_id, tp.far_weight)):
                if wt > 0:
                    ids.append(np.array([pid]))
                    weights.append(np.array([wt]))
                    prov.append(tag)
    return Coreset(
        P.space,
        np.concatenate(ids).astype(np.int64),
        np.concatenate(weights).astype(float),
        prov,
        plan,
        decs,
        approx.boundary_overshoot,
    )


def size_accounting(S: Coreset) -> dict:
    """Entry counts per provenance class, reconciled against the sampling plan."""
    counts = {"outlier": 0, "ring": 0, "group": 0}
    for tag in S.provenance:
        counts[tag.split(":", 1)[0]] += 1
    out = dict(counts)
    out["total"] = len(S)
    if S.plan is not None:
        expected_ring = sum(r.emitted for r in S.plan.rings)
        budget = S.plan.per_cluster_budget()
        out["heavy_rings"] = len(S.plan.rings)
        out["groups"] = S.plan.groups
        out["ring_budget_ok"] = all(tot <= S.plan.gamma + cnt for tot, cnt in budget.values())
        out["reconciled"] = (
            counts["ring"] == expected_ring
            and counts["group"] <= 2 * S.plan.groups
            and len(S) == counts["outlier"] + expected_ring + counts["group"]
        )
    return out


def gamma_from_params(
    k: int,
    z: float,
    eps: float,
    delta: float,
    lip: float,
    covering_exponent: float,
    constant: float = 1.0,
    simplex: bool = False,
) -> float:
    """Sample-size knob following the theoretical size bound up to a user constant."""
    for name, v in (("k", k), ("z", z), ("eps", eps), ("delta", delta), ("lip", lip), ("constant", constant)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    if covering_exponent < 0:
        raise ValueError("covering exponent must be nonnegative")
    if not (eps < 1 and delta < 1):
        raise ValueError("eps and delta must be below 1")
    tail = k * eps ** (-2 * z) * math.log(1 / delta) * math.log(k / eps) ** 7
    if simplex and lip == 1:
        return constant * (covering_exponent + 1 / eps) * tail
    return constant * lip**2 * (covering_exponent + k + 1 / eps) * tail
