"""Per-point structure constraints: the convex body B inside the simplex."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .matroid import (
    Matroid,
    is_in_base_polytope,
    members,
    rank_table_from_hex,
    rank_table_hex,
)

MEMBER_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class StructureConstraint:
    """``B`` is the simplex, a matroid basis polytope scaled by ``1/rank``, or
    a knapsack body ``{x in simplex : A x <= 1}``."""

    kind: str
    k: int
    matroid: Matroid | None = None
    A: np.ndarray | None = None
    _rows: tuple = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.kind == "matroid":
            if self.matroid is None or self.matroid.k != self.k:
                raise ValueError("matroid kind needs a matroid on k elements")
            if self.matroid.r == 0:
                raise ValueError("rank-zero matroid has an empty scaled polytope")
        elif self.kind == "knapsack":
            A = np.atleast_2d(np.asarray(self.A, dtype=float))
            if A.shape[1] != self.k or np.any(A < 0) or not np.all(np.isfinite(A)):
                raise ValueError("knapsack matrix must be nonnegative with k columns")
            A.setflags(write=False)
            object.__setattr__(self, "A", A)
        elif self.kind != "simplex":
            raise ValueError(f"unknown constraint kind {self.kind!r}")

    @classmethod
    def simplex(cls, k: int) -> "StructureConstraint":
        return cls("simplex", k)

    @classmethod
    def from_matroid(cls, M: Matroid) -> "StructureConstraint":
        return cls("matroid", M.k, matroid=M)

    @classmethod
    def fault_tolerant(cls, k: int, copies: int) -> "StructureConstraint":
        """Each point spread over at least ``copies`` centers: ``x_i <= 1/copies``."""
        return cls.from_matroid(Matroid.uniform(k, copies))

    @classmethod
    def knapsack(cls, A) -> "StructureConstraint":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return cls("knapsack", A.shape[1], A=A)

    @property
    def is_simplex(self) -> bool:
        return self.kind == "simplex" or (
            self.kind == "matroid" and self.matroid.kind == "uniform" and self.matroid.r == 1
        )

    @property
    def is_laminar_matroid(self) -> bool:
        return self.kind == "matroid" and self.matroid.family is not None

    def rows(self) -> tuple[np.ndarray, np.ndarray]:
        """``(G, g)`` with ``B = {x >= 0, sum(x) = 1, G x <= g}``; redundant rows dropped."""
        if self._rows is None:
            if self.kind == "simplex":
                G, g = np.zeros((0, self.k)), np.zeros(0)
            elif self.kind == "knapsack":
                G, g = np.array(self.A), np.ones(len(self.A))
            else:
                M = self.matroid
                sel = [(a, ra) for a, ra in M.constraint_sets() if a != M.ground and ra < M.r]
                G = np.zeros((len(sel), self.k))
                for row, (a, _) in enumerate(sel):
                    G[row, members(a)] = 1.0
                g = np.array([ra / M.r for _, ra in sel], dtype=float)
            G.setflags(write=False)
            g.setflags(write=False)
            object.__setattr__(self, "_rows", (G, g))
        return self._rows

    def contains(self, x, tol: float = MEMBER_TOL) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (self.k,):
            raise ValueError(f"expected a vector of length {self.k}")
        if self.kind == "matroid":
            return is_in_base_polytope(self.matroid, x * self.matroid.r, tol * self.matroid.r)
        if np.any(x < -tol) or abs(x.sum() - 1) > tol:
            return False
        if self.kind == "knapsack":
            return bool(np.all(self.A @ x <= 1 + tol))
        return True

    def capacity_feasible(self, h, total: float, m: float = 0.0, tol: float = 1e-8) -> bool:
        """Whether ``h`` lies in ``(total - m) * B``."""
        h = np.asarray(h, dtype=float)
        mass = total - m
        scale = max(1.0, abs(total))
        if mass < -tol * scale or abs(h.sum() - mass) > tol * scale:
            return False
        if mass <= tol * scale:
            return bool(np.all(np.abs(h) <= tol * scale))
        return self.contains(h / mass, tol * scale / mass)

    def vertices(self) -> np.ndarray:
        """All vertices of ``B`` (rows). Not available for knapsack bodies."""
        if self.kind == "simplex":
            return np.eye(self.k)
        if self.kind == "matroid":
            bases = self.matroid.bases()
            out = np.zeros((len(bases), self.k))
            for i, b in enumerate(bases):
                out[i, members(b)] = 1.0 / self.matroid.r
            return out
        raise TypeError("knapsack bodies have no vertex enumeration; use sample_vertices")

    def sample_vertices(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Vertices of ``B``: uniform picks from the enumeration, or LP optima
        of random objectives for knapsack bodies."""
        if self.kind != "knapsack":
            verts = self.vertices()
            return verts[rng.integers(len(verts), size=count)]
        from .lp import simplex_lp

        G, g = self.rows()
        out = np.zeros((count, self.k))
        for i in range(count):
            res = simplex_lp(
                rng.normal(size=self.k),
                A_ub=G,
                b_ub=g,
                A_eq=np.ones((1, self.k)),
                b_eq=np.ones(1),
            )
            out[i] = np.clip(res.x, 0.0, None)
        return out

    # serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        if self.kind == "simplex":
            return {"type": "simplex", "k": self.k}
        if self.kind == "knapsack":
            return {"type": "knapsack", "k": self.k, "A": self.A.tolist()}
        M = self.matroid
        if M.kind == "uniform":
            return {"type": "uniform_matroid", "k": self.k, "r": M.r}
        if M.kind == "partition":
            blocks = [(a, ra) for a, ra in M.family if a != M.ground]
            return {
                "type": "partition_matroid",
                "k": self.k,
                "blocks": [members(a) for a, _ in blocks],
                "caps": [ra for _, ra in blocks],
            }
        if M.kind == "laminar":
            return {
                "type": "laminar_matroid",
                "k": self.k,
                "family": [{"set": members(a), "u": ra} for a, ra in M.family],
            }
        return {"type": "explicit_matroid", "k": self.k, "rank_table": rank_table_hex(M)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, spec: dict) -> "StructureConstraint":
        try:
            kind = spec["type"]
            k = int(spec["k"])
            if kind == "simplex":
                return cls.simplex(k)
            if kind == "uniform_matroid":
                return cls.from_matroid(Matroid.uniform(k, int(spec["r"])))
            if kind == "partition_matroid":
                return cls.from_matroid(Matroid.partition(k, spec["blocks"], spec["caps"]))
            if kind == "laminar_matroid":
                family = [(entry["set"], entry["u"]) for entry in spec["family"]]
                return cls.from_matroid(Matroid.laminar(k, family))
            if kind == "explicit_matroid":
                table = rank_table_from_hex(k, spec["rank_table"])
                return cls.from_matroid(Matroid.explicit(k, table))
            if kind == "knapsack":
                A = np.asarray(spec["A"], dtype=float)
                return cls("knapsack", k, A=A.reshape(-1, k))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed constraint spec: {exc}") from exc
        raise ValueError(f"unknown constraint type {spec.get('type')!r}")

    @classmethod
    def from_json(cls, text: str) -> "StructureConstraint":
        return cls.from_dict(json.loads(text))


def parse_constraint(arg: str | None, k: int) -> StructureConstraint:
    """CLI helper: inline JSON, a path to a JSON file, or None for the simplex."""
    if arg is None:
        return StructureConstraint.simplex(k)
    text = arg.strip()
    if not text.startswith("{"):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    spec = json.loads(text)
    spec.setdefault("k", k)
    B = StructureConstraint.from_dict(spec)
    if B.k != k:
        raise ValueError(f"constraint has k={B.k} but the run uses k={k}")
    return B
