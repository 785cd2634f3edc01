"""A dense two-phase revised simplex method for bounded LPs.

Solves ``min c.x`` subject to ``A x (<=|>=|=) b`` and ``lb <= x <= ub`` with
finite bounds. Variables are shifted to ``x - lb >= 0``, upper bounds become
rows, and phase one drives artificial variables out of the basis. Pricing
is Dantzig's rule; after a run of degenerate pivots it switches to Bland's
rule, which cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class SimplexError(RuntimeError):
    pass


@dataclass
class SimplexResult:
    status: str
    value: float = np.inf
    x: Optional[np.ndarray] = None
    iterations: int = 0


def _revised(c, A, b, basis, tol, max_iter, degenerate_switch):
    """Minimize ``c.x`` over ``A x = b, x >= 0`` from a feasible ``basis``."""
    m, n = A.shape
    basis = list(basis)
    bland = False
    stall = 0
    for it in range(max_iter):
        B = A[:, basis]
        try:
            xb = np.linalg.solve(B, b)
            duals = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis") from exc
        reduced = c - A.T @ duals
        reduced[basis] = 0.0
        candidates = np.flatnonzero(reduced < -tol)
        if candidates.size == 0:
            x = np.zeros(n)
            x[basis] = xb
            return x, basis, it
        enter = int(candidates[0]) if bland else int(candidates[np.argmin(reduced[candidates])])
        direction = np.linalg.solve(B, A[:, enter])
        pos = direction > tol
        if not pos.any():
            raise SimplexError("unbounded relaxation")
        ratios = np.full(m, np.inf)
        ratios[pos] = xb[pos] / direction[pos]
        step = ratios.min()
        ties = np.flatnonzero(ratios <= step + tol)
        # Bland: leave with the smallest basic index among ties
        leave = int(min(ties, key=lambda r: basis[r])) if bland else int(ties[0])
        stall = stall + 1 if step <= tol else 0
        if stall >= degenerate_switch:
            bland = True
        basis[leave] = enter
    raise SimplexError(f"no convergence in {max_iter} iterations")


def solve_lp(c: np.ndarray, A: np.ndarray, senses: Sequence[str], b: np.ndarray,
             lb: np.ndarray, ub: np.ndarray, tol: float = 1e-9, max_iter: int = 50_000,
             degenerate_switch: int = 50) -> SimplexResult:
    c = np.asarray(c, float)
    A = np.asarray(A, float).reshape(len(senses), len(c))
    lb = np.asarray(lb, float)
    ub = np.asarray(ub, float)
    if not (np.all(np.isfinite(lb)) and np.all(np.isfinite(ub))):
        raise SimplexError("dense simplex needs finite variable bounds")
    if np.any(lb > ub + tol):
        return SimplexResult("infeasible")
    n = len(c)
    width = ub - lb
    shift = np.asarray(b, float) - A @ lb
    rows, rhs, slack_sign = [], [], []
    for r, sense in enumerate(senses):
        rows.append(A[r])
        rhs.append(shift[r])
        slack_sign.append({"<=": 1.0, ">=": -1.0, "=": 0.0}[sense])
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        rows.append(e)
        rhs.append(width[i])
        slack_sign.append(1.0)
    M = np.array(rows).reshape(len(rows), n)
    rhs = np.array(rhs)
    m = len(rhs)
    slack_cols = [r for r, sgn in enumerate(slack_sign) if sgn != 0.0]
    S = np.zeros((m, len(slack_cols)))
    for k, r in enumerate(slack_cols):
        S[r, k] = slack_sign[r]
    full = np.hstack([M, S])
    neg = rhs < 0
    full[neg] *= -1.0
    rhs = np.where(neg, -rhs, rhs)
    ncols = full.shape[1]
    # phase one: artificial identity
    big = np.hstack([full, np.eye(m)])
    cost1 = np.concatenate([np.zeros(ncols), np.ones(m)])
    basis = list(range(ncols, ncols + m))
    x1, basis, it1 = _revised(cost1, big, rhs, basis, tol, max_iter, degenerate_switch)
    if cost1 @ x1 > 1e-7 * max(1.0, np.abs(rhs).max(initial=0.0)):
        return SimplexResult("infeasible", iterations=it1)
    # pivot remaining artificials out where possible
    for pos, var in enumerate(basis):
        if var < ncols:
            continue
        B = big[:, basis]
        row = np.linalg.solve(B.T, np.eye(m)[pos])
        tableau = row @ full
        cand = [j for j in range(ncols) if j not in basis and abs(tableau[j]) > 1e-9]
        if cand:
            basis[pos] = cand[0]
    keep = [r for r, var in enumerate(basis) if var < ncols]
    if len(keep) < m:
        # redundant rows stay with their artificial at zero and a prohibitive cost
        cost2 = np.concatenate([np.concatenate([c, np.zeros(ncols - n)]), np.full(m, 1e12)])
        x2, basis, it2 = _revised(cost2, big, rhs, basis, tol, max_iter, degenerate_switch)
    else:
        cost2 = np.concatenate([c, np.zeros(ncols - n)])
        x2, basis, it2 = _revised(cost2, full, rhs, basis, tol, max_iter, degenerate_switch)
    x = np.clip(x2[:n] + lb, lb, ub)
    return SimplexResult("optimal", float(c @ x), x, it1 + it2)
