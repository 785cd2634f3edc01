"""Tangent (outer-approximation) cuts and implicit-distance cuts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ..warping import WarpingError, WarpingPath
from .ir import Affine, PerspectiveRow, QuadraticRow


def big_m(s_value: float, lb_j: float, ub_j: float) -> float:
    """Largest distance between ``s_value`` and a point of ``[lb_j, ub_j]``."""
    if lb_j > ub_j:
        raise ValueError(f"empty interval [{lb_j}, {ub_j}]")
    return max(abs(s_value - lb_j), abs(ub_j - s_value))


def quad_tangent(row: QuadraticRow, point: float) -> tuple[dict, float]:
    """Tangent cut of ``row`` at ``z = point`` as ``coefs . x >= rhs``."""
    u0 = point - row.s
    coefs = {row.d: 1.0}
    rhs = -2.0 * u0 * row.s - u0 * u0
    coefs[row.z] = coefs.get(row.z, 0.0) - 2.0 * u0
    if row.y is not None:
        # d + M2 - M2*y >= 2 u0 (z - s) - ... moves M2 terms to the rhs
        row.y.scaled_into(coefs, -row.big_m2)
        rhs += -row.big_m2 + row.big_m2 * row.y.const
    return coefs, rhs


def separate_quad(row: QuadraticRow, x: np.ndarray, viol_tol: float) -> Optional[float]:
    """Support point for a violated quadratic row, else ``None``."""
    if -row.slack(x) > viol_tol:
        return float(x[row.z])
    return None


def separate_oa_cut(zbar_val: float, d_val: float, s: float, y_val: float,
                    viol_tol: float) -> Optional[float]:
    """New support point when ``y * (zbar/y - s)**2`` exceeds ``d`` by more than ``viol_tol``."""
    if y_val <= 0:
        return None
    point = zbar_val / y_val
    if y_val * (point - s) ** 2 - d_val > viol_tol:
        return point
    return None


def perspective_tangent(row: PerspectiveRow, point: float) -> tuple[dict, float]:
    """Scaled tangent ``2(p - s) zbar - d <= y (p**2 - s**2)`` as ``coefs . x <= rhs``."""
    s = row.s
    coefs = {row.zbar: 2.0 * (point - s), row.d: -1.0}
    row.y.scaled_into(coefs, -(point * point - s * s))
    rhs = (point * point - s * s) * row.y.const
    return coefs, rhs


def separate_perspective(row: PerspectiveRow, x: np.ndarray, viol_tol: float) -> Optional[float]:
    return separate_oa_cut(x[row.zbar], x[row.d], row.s, row.y.value(x), viol_tol)


@dataclass(frozen=True)
class ImplicitCut:
    """``eta >= f_hat + sum_{(l, v) in chosen} weight * (y^l_v - 1)``."""

    f_hat: float
    weights: dict

    @property
    def rhs(self) -> float:
        """Right-hand side of ``eta - sum weight * y >= rhs``."""
        return self.f_hat - sum(self.weights.values())

    def value(self, y: Mapping) -> float:
        """Lower bound on ``eta`` implied at assignment ``y`` (missing keys are 0)."""
        return self.f_hat + sum(w * (y.get(key, 0.0) - 1.0) for key, w in self.weights.items())


def implicit_cut(inst, profile, y_hat: Mapping, f_hat: float) -> ImplicitCut:
    """Subgradient cut of the mean value function at a path assignment.

    ``y_hat`` maps ``(l, i, j)`` (``l`` 0-based, ``(i, j)`` 1-based) to 0/1;
    the vertices set to one must form one warping path per series, all
    ending in the same column.
    """
    chosen: dict[int, list] = {l: [] for l in range(inst.k)}
    for (l, i, j), val in y_hat.items():
        if val > 0.5:
            if not 0 <= l < inst.k:
                raise WarpingError(f"series index {l} out of range")
            chosen[l].append((i, j))
    ends = set()
    for l, verts in chosen.items():
        if not verts:
            raise WarpingError(f"no vertices chosen for series {l + 1}")
        path = WarpingPath(tuple(sorted(verts)))
        if path.end[0] != len(inst.samples[l]):
            raise WarpingError(f"path of series {l + 1} ends in row {path.end[0]}")
        ends.add(path.end[1])
    if len(ends) != 1:
        raise WarpingError(f"paths end in different columns {sorted(ends)}")
    weights = {}
    for l, verts in chosen.items():
        s = inst.samples[l].values
        for i, j in verts:
            m = big_m(s[i - 1], profile.lb[j - 1], profile.ub[j - 1])
            weights[(l, i, j)] = m * m / inst.k
    return ImplicitCut(float(f_hat), weights)


def implicit_row(cut: ImplicitCut, eta: int, y_expr: Mapping) -> tuple[dict, float]:
    """Linear row ``eta - sum w * y >= rhs`` over model variables."""
    coefs = {eta: 1.0}
    rhs = cut.rhs
    for key, w in cut.weights.items():
        expr: Affine = y_expr[key]
        expr.scaled_into(coefs, -w)
        rhs += w * expr.const
    return coefs, rhs
