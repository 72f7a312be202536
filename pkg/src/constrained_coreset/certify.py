"""Sampled certification of a coreset against the exact constrained cost."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import StructureConstraint
from .cost import min_cost_assignment, sample_feasible_capacity
from .decompose import ApproxSolution
from .lp import Infeasible, SolverLimit
from .metric import WeightedPointSet, euclidean_grid_net

POLICIES = ("random_subset", "grid_net", "perturbed")


@dataclass
class Trial:
    policy: str
    centers: np.ndarray  # coordinates for Euclidean data, point ids otherwise
    h: np.ndarray


@dataclass
class TrialRecord:
    policy: str
    centers: list
    h: list
    cost_P: float
    cost_S: float
    rel_err: float
    absolute: bool
    solver: str
    error: str | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class CertifyReport:
    records: list[TrialRecord] = field(default_factory=list)

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.rel_err for r in self.records if r.error is None])

    @property
    def max_rel_err(self) -> float:
        e = self.errors
        return float(e.max()) if e.size else 0.0

    def quantile(self, q: float) -> float:
        e = self.errors
        return float(np.quantile(e, q)) if e.size else 0.0

    @property
    def failures(self) -> int:
        return sum(r.error is not None for r in self.records)

    def summary(self) -> dict:
        return {
            "trials": len(self.records),
            "failed_trials": self.failures,
            "max_rel_err": self.max_rel_err,
            "p50": self.quantile(0.5),
            "p90": self.quantile(0.9),
            "p99": self.quantile(0.99),
        }

    def to_dict(self) -> dict:
        out = self.summary()
        out["per_trial"] = [r.to_dict() for r in self.records]
        return out


def _scale_radius(diam: float, rng) -> float:
    """A random dyadic fraction of the data diameter."""
    return diam * 2.0 ** (-rng.integers(0, 7))


def draw_trials(
    P: WeightedPointSet,
    B: StructureConstraint,
    k: int,
    m: float,
    trials: int,
    rng: np.random.Generator,
    approx: ApproxSolution | None = None,
    policies=POLICIES,
) -> list[Trial]:
    """Center sets cycle through the policies; capacities come from
    :func:`sample_feasible_capacity`."""
    space = P.space
    anchors = approx.centers if approx is not None else P.ids[rng.choice(len(P), size=min(k, len(P)), replace=False)]
    euclid = space.is_euclidean
    diam = max(space.diameter(P.ids), 1e-12)
    out = []
    for t in range(trials):
        policy = policies[t % len(policies)]
        if policy == "random_subset" or (policy == "grid_net" and euclid and space.d > 3):
            ids = P.ids[rng.choice(len(P), size=k, replace=len(P) < k)]
            C = space.locate(ids) if euclid else ids
        elif policy == "grid_net":
            picks = anchors[rng.integers(len(anchors), size=k)]
            if euclid:
                C = np.zeros((k, space.d))
                base = space.locate(picks) if np.asarray(picks).ndim == 1 else np.asarray(picks, dtype=float)
                for j in range(k):
                    r = _scale_radius(diam, rng)
                    net = euclidean_grid_net(base[j], r, r / 3)
                    C[j] = net[rng.integers(len(net))]
            else:
                C = np.zeros(k, dtype=np.int64)
                for j in range(k):
                    r = _scale_radius(diam, rng)
                    near = P.ids[space.matrix[P.ids, int(picks[j])] <= r]
                    C[j] = near[rng.integers(len(near))] if near.size else picks[j]
        elif policy == "perturbed":
            order = rng.permutation(len(anchors))
            picks = anchors[np.resize(order, k)]
            if euclid:
                base = space.locate(picks) if np.asarray(picks).ndim == 1 else np.asarray(picks, dtype=float)
                noise = rng.normal(size=base.shape)
                radii = np.array([_scale_radius(diam, rng) for _ in range(k)])
                C = base + 0.25 * radii[:, None] * noise
            else:
                C = np.array(picks, dtype=np.int64)
                for j in range(k):
                    row = space.matrix[int(picks[j]), P.ids]
                    nearest = P.ids[np.argsort(row, kind="stable")[: 1 + rng.integers(0, 5)]]
                    C[j] = nearest[-1]
        else:
            raise ValueError(f"unknown center policy {policy!r}")
        h = sample_feasible_capacity(B, P.total_weight, m, rng)
        out.append(Trial(policy, np.asarray(C), h))
    return out


def evaluate_trials(
    P: WeightedPointSet,
    S: WeightedPointSet,
    B: StructureConstraint,
    z: float,
    m: float,
    trials: list[Trial],
    cost_P: list[float] | None = None,
) -> CertifyReport:
    """Compare ``cost(S)`` to ``cost(P)`` on each trial; ``cost_P`` may be precomputed."""
    diam = max(P.space.diameter(P.ids), 1e-12)
    abs_scale = P.total_weight * diam**z
    report = CertifyReport()
    for t, trial in enumerate(trials):
        try:
            if cost_P is not None:
                cp, solver = cost_P[t], "cached"
            else:
                res_p = min_cost_assignment(P, trial.centers, B, trial.h, z, m=m)
                cp, solver = res_p.value, res_p.solver
            # the coreset's own outlier mass absorbs float drift in w(S)
            res_s = min_cost_assignment(S, trial.centers, B, _rescale(trial.h, S.total_weight - m), z)
            cs = res_s.value
            if solver == "cached":
                solver = res_s.solver
        except (Infeasible, SolverLimit) as exc:
            report.records.append(
                TrialRecord(trial.policy, trial.centers.tolist(), trial.h.tolist(), np.nan, np.nan, np.nan, False, "", repr(exc))
            )
            continue
        absolute = cp <= 1e-12 * abs_scale
        err = abs(cs - cp) / (abs_scale if absolute else cp)
        report.records.append(
            TrialRecord(trial.policy, trial.centers.tolist(), trial.h.tolist(), cp, cs, err, absolute, solver)
        )
    return report


def _rescale(h: np.ndarray, mass: float) -> np.ndarray:
    total = h.sum()
    return h if total <= 0 or abs(total - mass) > 1e-6 * max(1.0, mass) else h * (mass / total)


def certify_coreset(
    P: WeightedPointSet,
    S: WeightedPointSet,
    B: StructureConstraint,
    z: float,
    m: float,
    trials: int,
    rng: np.random.Generator,
    k: int | None = None,
    approx: ApproxSolution | None = None,
    policies=POLICIES,
) -> CertifyReport:
    k = B.k if k is None else k
    drawn = draw_trials(P, B, k, m, trials, rng, approx, policies)
    return evaluate_trials(P, S, B, z, m, drawn)
