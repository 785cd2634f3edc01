"""A small mixed-integer model representation.

Linear rows are sparse ``{var_index: coef}`` maps. Convex quadratic content
is kept in two structured row kinds so that the branch-and-bound engine can
separate tangent cuts for it:

* :class:`QuadraticRow` ``d + M2 * (1 - y) >= (z - s)**2`` (big-M distance,
  or the plain epigraph ``d >= w**2`` when ``y`` is ``None``);
* :class:`PerspectiveRow` ``d * y >= (zbar - s * y)**2``, the closure of the
  perspective of ``d >= (zbar/y - s)**2``.

``y`` is an :class:`Affine` expression because the arc formulation replaces
vertex variables by flow sums.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

BINARY = "binary"
CONTINUOUS = "continuous"
SENSES = ("<=", ">=", "=")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Affine:
    """``sum(coef * x[idx]) + const``."""

    coefs: tuple[tuple[int, float], ...]
    const: float = 0.0

    @classmethod
    def var(cls, idx: int) -> "Affine":
        return cls(((idx, 1.0),), 0.0)

    @classmethod
    def of(cls, coefs: dict, const: float = 0.0) -> "Affine":
        return cls(tuple(sorted(coefs.items())), float(const))

    def value(self, x: np.ndarray) -> float:
        return float(sum(c * x[i] for i, c in self.coefs) + self.const)

    def scaled_into(self, target: dict, factor: float) -> None:
        for i, c in self.coefs:
            target[i] = target.get(i, 0.0) + factor * c


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass(frozen=True)
class LinearRow:
    name: str
    coefs: dict
    sense: str
    rhs: float
    tag: str = ""

    def activity(self, x: np.ndarray) -> float:
        return float(sum(c * x[i] for i, c in self.coefs.items()))

    def violation(self, x: np.ndarray) -> float:
        """Positive amount by which ``x`` violates the row."""
        act = self.activity(x)
        if self.sense == "<=":
            return act - self.rhs
        if self.sense == ">=":
            return self.rhs - act
        return abs(act - self.rhs)


@dataclass(frozen=True)
class QuadraticRow:
    name: str
    d: int
    z: int
    s: float
    y: Optional[Affine]
    big_m2: float
    kind: str = "bigm"

    def slack(self, x: np.ndarray) -> float:
        """``lhs - (z - s)**2``; negative means violated."""
        off = 0.0 if self.y is None else self.big_m2 * (1.0 - self.y.value(x))
        return x[self.d] + off - (x[self.z] - self.s) ** 2


@dataclass(frozen=True)
class PerspectiveRow:
    name: str
    d: int
    zbar: int
    s: float
    y: Affine


@dataclass
class Model:
    """Variables, rows, objective and lazy-cut hooks of one formulation."""

    name: str = "model"
    variables: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    quad_rows: list = field(default_factory=list)
    persp_rows: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    objective_const: float = 0.0
    sense: str = "minimize"
    hooks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    layout: object = None
    _index: dict = field(default_factory=dict, repr=False)

    def add_var(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0, ub: float = np.inf) -> int:
        if name in self._index:
            raise ModelError(f"duplicate variable {name}")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        elif kind != CONTINUOUS:
            raise ModelError(f"unknown variable kind {kind}")
        if lb > ub:
            raise ModelError(f"variable {name} has empty domain [{lb}, {ub}]")
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        return self._index[name]

    def index(self, name: str) -> int:
        return self._index[name]

    def var(self, name: str) -> Variable:
        return self.variables[self._index[name]]

    def add_row(self, coefs: dict, sense: str, rhs: float, name: Optional[str] = None,
                tag: str = "") -> LinearRow:
        if sense not in SENSES:
            raise ModelError(f"bad sense {sense}")
        for i in coefs:
            if not 0 <= i < len(self.variables):
                raise ModelError(f"row {name} references unknown variable {i}")
        clean = {i: float(c) for i, c in coefs.items() if c != 0.0}
        row = LinearRow(name or f"r{len(self.rows)}", clean, sense, float(rhs), tag)
        self.rows.append(row)
        return row

    def add_quad_row(self, row: QuadraticRow) -> None:
        self.quad_rows.append(row)

    def add_persp_row(self, row: PerspectiveRow) -> None:
        self.persp_rows.append(row)

    @property
    def n(self) -> int:
        return len(self.variables)

    def binaries(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == BINARY]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return lb, ub

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(c * x[i] for i, c in self.objective.items()) + self.objective_const)

    def counts(self) -> dict:
        kinds = {}
        for v in self.variables:
            prefix = v.name.split("_", 1)[0]
            kinds[prefix] = kinds.get(prefix, 0) + 1
        return {
            "variables": self.n,
            "binaries": len(self.binaries()),
            "linear_rows": len(self.rows),
            "quadratic_rows": len(self.quad_rows),
            "perspective_rows": len(self.persp_rows),
            "by_prefix": kinds,
        }

    def digest(self) -> str:
        h = hashlib.sha256()
        for v in self.variables:
            h.update(f"{v.name}:{v.kind}:{v.lb!r}:{v.ub!r};".encode())
        for r in self.rows:
            h.update(json.dumps([r.name, sorted(r.coefs.items()), r.sense, r.rhs]).encode())
        for q in self.quad_rows:
            h.update(repr((q.name, q.d, q.z, q.s, q.y, q.big_m2)).encode())
        for p in self.persp_rows:
            h.update(repr((p.name, p.d, p.zbar, p.s, p.y)).encode())
        h.update(json.dumps(sorted(self.objective.items())).encode())
        return h.hexdigest()[:16]

    def summary(self) -> dict:
        return {
            "counts": self.counts(),
            "kinds": {k: self.meta.get(k) for k in ("graph", "distance")},
            "digest": self.digest(),
        }

    def check(self) -> None:
        """Validate the structural invariants."""
        for v in self.variables:
            if v.kind == BINARY and (v.lb, v.ub) != (0.0, 1.0):
                raise ModelError(f"binary {v.name} must have bounds [0, 1]")
        for q in self.quad_rows:
            for i in (q.d, q.z):
                if not 0 <= i < self.n:
                    raise ModelError(f"{q.name} references unknown variable {i}")
        for p in self.persp_rows:
            for i in (p.d, p.zbar):
                if not 0 <= i < self.n:
                    raise ModelError(f"{p.name} references unknown variable {i}")
