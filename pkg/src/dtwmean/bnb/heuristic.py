"""Alternating primal heuristic and the medoid seed.

Each round fixes the mean and aligns every sample by constrained DTW, then
fixes those alignments and replaces every mean element by the average of the
input values aligned with it. Both half-steps are exact coordinate
minimizations, so the Fréchet value never increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..oracle import optimal_z_for_paths
from ..series import Instance, TimeSeries
from ..warping import GlobalConstraint, InfeasibleError, dtw, is_compatible


@dataclass(frozen=True)
class HeuristicResult:
    z: TimeSeries
    F: float
    paths: tuple
    history: tuple = field(default=())
    fixed_point: bool = False

    def __iter__(self):
        yield self.z
        yield self.F


def _align(inst: Instance, z: np.ndarray, c: GlobalConstraint):
    res = [dtw(s.values, z, c) for s in inst.samples]
    return tuple(r.path for r in res), sum(r.cost for r in res) / inst.k


def primal_heuristic(inst: Instance, c: Optional[GlobalConstraint] = None, z0=None,
                     max_iter: int = 50, tol: float = 1e-9) -> HeuristicResult:
    """Improve ``z0`` by alternating alignment and averaging.

    Stops when an iteration improves the Fréchet value by less than ``tol``
    or after ``max_iter`` averaging steps. ``fixed_point`` is set when the
    alignments no longer change, in which case ``z`` is exactly the average
    of the values aligned with it under ``paths``.
    """
    c = inst.constraint if c is None else c
    z = np.asarray(z0, dtype=float)
    L = len(z)
    bad = [len(s) for s in inst.samples if not is_compatible(c, len(s), L)]
    if L == 0 or bad:
        raise InfeasibleError(f"start mean of length {L} is infeasible under {c.label()}")
    paths, F = _align(inst, z, c)
    history = [F]
    fixed = False
    for _ in range(max_iter):
        z_new, _ = optimal_z_for_paths(inst, paths)
        paths_new, F_new = _align(inst, z_new, c)
        if F_new > F:
            break  # rounding noise only; keep the better point
        z, F = z_new, F_new
        history.append(F)
        if paths_new == paths:
            fixed = True
            paths = paths_new
            break
        improved = history[-2] - F
        paths = paths_new
        if improved < tol:
            break
    return HeuristicResult(TimeSeries(z), float(F), paths, tuple(history), fixed)


def medoid(inst: Instance, c: Optional[GlobalConstraint] = None) -> Optional[int]:
    """Index of the sample with least total squared distance to the others.

    Samples whose length is incompatible with some other sample under ``c``
    are skipped; ``None`` if no sample qualifies. Ties go to the smaller index.
    """
    c = inst.constraint if c is None else c
    best, best_cost = None, np.inf
    for a, sa in enumerate(inst.samples):
        try:
            cost = sum(dtw(sb.values, sa.values, c).cost for sb in inst.samples)
        except InfeasibleError:
            continue
        if cost < best_cost:
            best, best_cost = a, cost
    return best
