"""Bounds on the values of a mean and on the Fréchet function.

Every element of a mean is the average of one nonempty contiguous block from
each input series, so its value is at most the largest such average. That
maximum is the root of the decreasing piecewise-linear function

    f(K) = sum_l max_{I_l} (sum_{i in I_l} s^l_i - K |I_l|)

which is located by bisection. Lower bounds follow by negating the input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .series import Instance
from .warping import DiagonalGrid, GlobalConstraint, feasible_terminals

Window = Optional[tuple[int, int]]

DEFAULT_TOL = 1e-9


class BoundsError(ValueError):
    pass


def ub_sim(inst: Instance) -> float:
    return float(max(np.max(s.values) for s in inst.samples))


def lb_sim(inst: Instance) -> float:
    return float(min(np.min(s.values) for s in inst.samples))


def _check_windows(inst: Instance, windows) -> list[tuple[int, int]]:
    if windows is None:
        return [(1, len(s)) for s in inst.samples]
    if len(windows) != inst.k:
        raise BoundsError(f"expected {inst.k} windows, got {len(windows)}")
    out = []
    for l, (s, w) in enumerate(zip(inst.samples, windows)):
        if w is None:
            w = (1, len(s))
        a, b = w
        if not 1 <= a <= b <= len(s):
            raise BoundsError(f"empty or out-of-range window {w} for series {l + 1}")
        out.append((int(a), int(b)))
    return out


def _eval_f(values: Sequence[np.ndarray], wins, level: float) -> float:
    return float(sum(kernels.interval_max(v, a - 1, b - 1, level)
                     for v, (a, b) in zip(values, wins)))


def eval_f(inst: Instance, K: float, windows=None) -> float:
    """Evaluate ``f(K)``; ``windows`` optionally restricts each series to ``[a, b]``."""
    wins = _check_windows(inst, windows)
    return _eval_f([s.values for s in inst.samples], wins, K)


def _root(values, wins, tol: float) -> float:
    k = len(values)
    lo = sum(float(np.max(v[a - 1:b])) for v, (a, b) in zip(values, wins)) / k
    hi = max(float(np.max(v[a - 1:b])) for v, (a, b) in zip(values, wins))
    # f(lo) >= 0 >= f(hi); keep that invariant and return the upper end
    if _eval_f(values, wins, lo) <= 0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _eval_f(values, wins, mid) <= 0:
            hi = mid
        else:
            lo = mid
    # rounding in the block sums can leave f(hi) a few ulps above zero
    for _ in range(64):
        if _eval_f(values, wins, hi) <= 0:
            break
        hi = float(np.nextafter(hi, np.inf))
    return hi


def ub_imp(inst: Instance, windows=None, tol: float = DEFAULT_TOL) -> float:
    """Largest average of one block per series, overestimated by at most ``tol``."""
    if tol <= 0:
        raise BoundsError("tol must be positive")
    wins = _check_windows(inst, windows)
    return _root([s.values for s in inst.samples], wins, tol)


def lb_imp(inst: Instance, windows=None, tol: float = DEFAULT_TOL) -> float:
    """Smallest average of one block per series, underestimated by at most ``tol``."""
    if tol <= 0:
        raise BoundsError("tol must be positive")
    wins = _check_windows(inst, windows)
    return 0.0 - _root([-s.values for s in inst.samples], wins, tol)


@dataclass(frozen=True)
class BoundProfile:
    """Per-index value bounds for a mean of length at most ``N``.

    ``lb[j-1]``/``ub[j-1]`` are ``None`` when index ``j`` cannot be a mean
    position (some series has no admissible window there). ``windows[j-1][l]``
    is the row interval of series ``l`` alignable with mean index ``j``.
    ``lengths`` are the admissible mean lengths.
    """

    N: int
    lb: tuple[Optional[float], ...]
    ub: tuple[Optional[float], ...]
    frechet_lb: float
    windows: tuple[tuple[Window, ...], ...]
    lengths: tuple[int, ...]

    def feasible(self, j: int) -> bool:
        return self.lb[j - 1] is not None

    @property
    def max_length(self) -> int:
        return max(self.lengths) if self.lengths else 0


def mean_grids(inst: Instance, c: GlobalConstraint, N: int) -> tuple[list[int], list[DiagonalGrid]]:
    """Common admissible mean lengths and the per-series grids ``D(m_l, N)``."""
    common = None
    for s in inst.samples:
        ok = set(feasible_terminals(c, len(s), N))
        common = ok if common is None else common & ok
    lengths = sorted(common)
    if not lengths:
        return [], []
    grids = [DiagonalGrid(len(s), N, c, tuple(lengths)) for s in inst.samples]
    return lengths, grids


def frechet_lb(inst: Instance, profile: BoundProfile) -> float:
    """Lower bound on the Fréchet function from the per-index bounds.

    Each input value is charged its squared distance to the nearest bound
    interval among the mean indices it may be aligned with.
    """
    total = 0.0
    feas = [j for j in range(1, profile.N + 1) if profile.feasible(j)]
    if not feas:
        return 0.0
    for l, s in enumerate(inst.samples):
        vals = s.values
        best = np.full(len(vals), np.inf)
        for j in feas:
            w = profile.windows[j - 1][l]
            if w is None:
                continue
            a, b = w
            seg = vals[a - 1:b]
            lo, hi = profile.lb[j - 1], profile.ub[j - 1]
            gap = np.where(seg > hi, seg - hi, np.where(seg < lo, lo - seg, 0.0))
            best[a - 1:b] = np.minimum(best[a - 1:b], gap * gap)
        best[~np.isfinite(best)] = 0.0
        total += float(best.sum())
    return total / inst.k


def bound_profile(inst: Instance, c: Optional[GlobalConstraint] = None, N: Optional[int] = None,
                  tol: float = DEFAULT_TOL) -> BoundProfile:
    """Per-index bounds for mean indices ``1..N`` under constraint ``c``.

    Under an Itakura constraint the relation depends on the mean length, so
    the window for index ``j`` is the hull over all admissible lengths.
    """
    from .model.builders import mean_length_bound

    c = inst.constraint if c is None else c
    N = mean_length_bound(inst) if N is None else N
    if N < 1:
        raise BoundsError("N must be >= 1")
    lengths, grids = mean_grids(inst, c, N)
    values = [s.values for s in inst.samples]
    lbs, ubs, wins = [], [], []
    cache: dict = {}
    top = max(lengths) if lengths else 0
    for j in range(1, N + 1):
        if j > top:
            lbs.append(None)
            ubs.append(None)
            wins.append(tuple(None for _ in inst.samples))
            continue
        w = tuple(g.window(j) for g in grids)
        if w not in cache:
            cache[w] = (0.0 - _root([-v for v in values], w, tol), _root(values, w, tol))
        lo, hi = cache[w]
        lbs.append(lo)
        ubs.append(hi)
        wins.append(w)
    partial = BoundProfile(N, tuple(lbs), tuple(ubs), 0.0, tuple(wins), tuple(lengths))
    return BoundProfile(N, partial.lb, partial.ub, frechet_lb(inst, partial), partial.windows,
                        partial.lengths)


def bounds_report(inst: Instance, profile: BoundProfile, tol: float = DEFAULT_TOL) -> dict:
    return {
        "ub_sim": ub_sim(inst),
        "lb_sim": lb_sim(inst),
        "ub_imp": ub_imp(inst, tol=tol),
        "lb_imp": lb_imp(inst, tol=tol),
        "per_index": [
            {"j": j, "lb": profile.lb[j - 1], "ub": profile.ub[j - 1]}
            for j in range(1, profile.N + 1) if profile.feasible(j)
        ],
        "frechet_lb": profile.frechet_lb,
    }
