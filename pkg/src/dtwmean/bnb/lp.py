"""Node LP engines.

Both engines hold the root rows plus every cut added so far and re-solve
under per-node column bounds. ``HighsLP`` keeps one persistent HiGHS
instance so consecutive solves warm-start from the previous basis;
``SimplexLP`` rebuilds a dense problem for the internal revised simplex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .simplex import SimplexError, solve_lp


class LPError(RuntimeError):
    """The relaxation could not be solved even after retries."""


@dataclass
class LPSolution:
    status: str  # "optimal" or "infeasible"
    value: float = np.inf
    x: Optional[np.ndarray] = None


def _row_bounds(sense: str, rhs: float) -> tuple[float, float]:
    if sense == "<=":
        return -np.inf, rhs
    if sense == ">=":
        return rhs, np.inf
    return rhs, rhs


class _Engine:
    def __init__(self, model):
        self.n = model.n
        self.cost = np.zeros(self.n)
        for i, c in model.objective.items():
            self.cost[i] = c
        self.offset = model.objective_const
        self.lb, self.ub = model.bounds()
        self.solves = 0

    def add_rows(self, rows) -> None:
        raise NotImplementedError

    def delete_rows(self, positions) -> None:
        raise NotImplementedError

    def solve(self, lb: np.ndarray, ub: np.ndarray) -> LPSolution:
        raise NotImplementedError


class HighsLP(_Engine):
    """Persistent HiGHS dual simplex with retry on numerical trouble."""

    def __init__(self, model, tol: float = 1e-9):
        import highspy

        super().__init__(model)
        self._hs = highspy
        self.tol = tol
        self.h = self._fresh()
        self._cols = np.arange(self.n, dtype=np.int32)
        self.h.addVars(self.n, self.lb, self.ub)
        self.h.changeColsCost(self.n, self._cols, self.cost)
        self.add_rows([(r.coefs, r.sense, r.rhs) for r in model.rows])

    def _fresh(self):
        h = self._hs.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("presolve", "off")
        h.setOptionValue("solver", "simplex")
        h.setOptionValue("primal_feasibility_tolerance", self.tol)
        h.setOptionValue("dual_feasibility_tolerance", self.tol)
        return h

    def add_rows(self, rows) -> None:
        if not rows:
            return
        lo = np.empty(len(rows))
        hi = np.empty(len(rows))
        starts, idx, vals = [], [], []
        for r, (coefs, sense, rhs) in enumerate(rows):
            lo[r], hi[r] = _row_bounds(sense, rhs)
            starts.append(len(idx))
            for i in sorted(coefs):
                idx.append(i)
                vals.append(coefs[i])
        inf = self._hs.kHighsInf
        lo = np.where(np.isinf(lo), -inf, lo)
        hi = np.where(np.isinf(hi), inf, hi)
        self.h.addRows(len(rows), lo, hi, len(idx), np.array(starts, dtype=np.int32),
                       np.array(idx, dtype=np.int32), np.array(vals, dtype=float))

    def delete_rows(self, positions) -> None:
        pos = np.asarray(positions, dtype=np.int32)
        if pos.size:
            self.h.deleteRows(len(pos), pos)

    def _run(self, lb, ub) -> Optional[LPSolution]:
        self.h.changeColsBounds(self.n, self._cols, lb, ub)
        self.h.run()
        self.solves += 1
        status = self.h.getModelStatus()
        ms = self._hs.HighsModelStatus
        if status == ms.kOptimal:
            x = np.array(self.h.getSolution().col_value)
            return LPSolution("optimal", float(self.cost @ x) + self.offset, x)
        if status == ms.kInfeasible:
            return LPSolution("infeasible")
        return None

    def solve(self, lb, ub) -> LPSolution:
        sol = self._run(lb, ub)
        if sol is not None:
            return sol
        # drop the basis and retry, then fall back to a rebuilt instance with presolve
        self.h.clearSolver()
        sol = self._run(lb, ub)
        if sol is not None:
            return sol
        lp = self.h.getLp()
        self.h = self._fresh()
        self.h.setOptionValue("presolve", "on")
        self.h.passModel(lp)
        sol = self._run(lb, ub)
        self.h.setOptionValue("presolve", "off")
        if sol is not None:
            return sol
        raise LPError(f"HiGHS failed with status {self.h.modelStatusToString(self.h.getModelStatus())}")


class SimplexLP(_Engine):
    """Dense revised simplex; for small models and cross-checks."""

    def __init__(self, model, tol: float = 1e-9):
        super().__init__(model)
        self.rows: list = []
        self.tol = tol
        self.add_rows([(r.coefs, r.sense, r.rhs) for r in model.rows])

    def add_rows(self, rows) -> None:
        self.rows.extend(rows)

    def delete_rows(self, positions) -> None:
        drop = set(int(p) for p in positions)
        self.rows = [r for i, r in enumerate(self.rows) if i not in drop]

    def solve(self, lb, ub) -> LPSolution:
        A = np.zeros((len(self.rows), self.n))
        senses, rhs = [], np.empty(len(self.rows))
        for r, (coefs, sense, b) in enumerate(self.rows):
            for i, c in coefs.items():
                A[r, i] = c
            senses.append(sense)
            rhs[r] = b
        self.solves += 1
        try:
            res = solve_lp(self.cost, A, senses, rhs, lb, ub)
        except SimplexError as exc:
            raise LPError(str(exc)) from exc
        if res.status == "infeasible":
            return LPSolution("infeasible")
        return LPSolution("optimal", res.value + self.offset, res.x)


ENGINES = {"highs": HighsLP, "simplex": SimplexLP}


def make_engine(name: str, model, tol: float = 1e-9) -> _Engine:
    try:
        cls = ENGINES[name]
    except KeyError:
        raise ValueError(f"unknown LP engine {name!r}; expected one of {', '.join(ENGINES)}") from None
    return cls(model, tol)
