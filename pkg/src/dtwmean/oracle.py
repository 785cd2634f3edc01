"""Exhaustive exact solver for tiny instances.

For fixed warping paths the optimal mean element at index ``j`` is the
arithmetic mean of all input values aligned with it, so minimizing the
Fréchet function reduces to enumerating tuples of warping paths for every
candidate mean length.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .series import Instance, TimeSeries
from .warping import GlobalConstraint, WarpingError, WarpingPath, enumerate_paths, path_cost

DEFAULT_GUARD = 10 ** 7


class OracleRefusal(RuntimeError):
    """The enumeration would exceed the configured guard."""


@dataclass(frozen=True)
class OracleResult:
    z: TimeSeries
    F: float
    paths: tuple[WarpingPath, ...]
    length: int

    def to_json(self) -> dict:
        return {
            "length": self.length,
            "F": self.F,
            "mean": self.z.tolist(),
            "paths": [list(map(list, p.vertices)) for p in self.paths],
        }


def _column_stats(values: np.ndarray, path: WarpingPath, L: int):
    sums = np.zeros(L)
    counts = np.zeros(L)
    squares = np.zeros(L)
    for i, j in path:
        v = values[i - 1]
        sums[j - 1] += v
        counts[j - 1] += 1
        squares[j - 1] += v * v
    return sums, counts, squares


def optimal_z_for_paths(inst: Instance, paths: Sequence[WarpingPath]) -> tuple[np.ndarray, float]:
    """Optimal mean for fixed paths and its Fréchet value.

    Every path must end in row ``m_l`` of its series and all paths in the same
    column ``L``; the mean has length ``L``.
    """
    if len(paths) != inst.k:
        raise WarpingError(f"expected {inst.k} paths, got {len(paths)}")
    ends = {p.end[1] for p in paths}
    if len(ends) != 1:
        raise WarpingError(f"paths end in different columns {sorted(ends)}")
    L = ends.pop()
    sums = np.zeros(L)
    counts = np.zeros(L)
    for s, p in zip(inst.samples, paths):
        if p.end[0] != len(s):
            raise WarpingError(f"path ends in row {p.end[0]}, series has length {len(s)}")
        ps, pc, _ = _column_stats(s.values, p, L)
        sums += ps
        counts += pc
    if np.any(counts == 0):
        raise WarpingError("some mean index is not aligned with any input value")
    z = sums / counts
    F = sum(path_cost(s.values, z, p) for s, p in zip(inst.samples, paths)) / inst.k
    return z, F


def frechet_value(inst: Instance, z, paths: Sequence[WarpingPath]) -> float:
    """Average path cost ``(1/k) sum_l C_{P_l}(s^l, z)``."""
    return sum(path_cost(s.values, z, p) for s, p in zip(inst.samples, paths)) / inst.k


def brute_force_mean(inst: Instance, c: Optional[GlobalConstraint] = None,
                     max_n: Optional[int] = None, guard: int = DEFAULT_GUARD,
                     cap: int = 32) -> OracleResult:
    """Exact mean by enumerating all admissible path tuples.

    Lengths ``L = 1..max_n`` are tried in order; ties keep the smaller length
    and then the lexicographically first tuple.
    """
    from .model.builders import mean_length_bound

    c = inst.constraint if c is None else c
    max_n = mean_length_bound(inst) if max_n is None else max_n
    per_length = []
    total = 0
    for L in range(1, max_n + 1):
        sets = [enumerate_paths(len(s), L, c, cap=cap) for s in inst.samples]
        if any(not ps for ps in sets):
            continue
        count = math.prod(len(ps) for ps in sets)
        total += count
        if total > guard:
            raise OracleRefusal(f"{total} path tuples exceed the guard of {guard}")
        per_length.append((L, sets))
    if not per_length:
        raise WarpingError(f"no admissible mean length up to {max_n} under {c.label()}")

    best = (math.inf, None, None)
    for L, sets in per_length:
        stats = []
        for s, ps in zip(inst.samples, sets):
            arr = np.array([np.concatenate(_column_stats(s.values, p, L)) for p in ps])
            for p in ps:
                for j in range(1, L + 1):
                    p.column_rows(j)  # contiguous coverage of every column
            stats.append(arr.reshape(len(ps), 3, L))
        last = stats[-1]
        for head in itertools.product(*(range(len(st)) for st in stats[:-1])):
            acc = sum((stats[l][h] for l, h in enumerate(head)), np.zeros((3, L)))
            sums = acc[0] + last[:, 0, :]
            counts = acc[1] + last[:, 1, :]
            squares = acc[2] + last[:, 2, :]
            F = np.sum(squares - sums * sums / counts, axis=1) / inst.k
            idx = int(np.argmin(F))
            if F[idx] < best[0] - 1e-12:
                best = (float(F[idx]), L, head + (idx,))
    _, L, choice = best
    sets = dict(per_length)[L]
    paths = tuple(sets[l][h] for l, h in enumerate(choice))
    z, F = optimal_z_for_paths(inst, paths)
    return OracleResult(TimeSeries(z), F, paths, L)
