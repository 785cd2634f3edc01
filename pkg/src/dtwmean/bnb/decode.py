"""Translate between model assignments and (mean, warping paths) pairs."""

from __future__ import annotations

import numpy as np

from ..series import TimeSeries
from ..warping import WarpingPath, path_cost


class ConsistencyError(RuntimeError):
    """A decoded solution disagrees with the model; indicates a model bug."""


def selected_length(model, x: np.ndarray, int_tol: float = 1e-6) -> int:
    lay = model.layout
    on = [L for L, idx in lay.x.items() if x[idx] > 1.0 - int_tol]
    if len(on) != 1:
        raise ConsistencyError(f"expected one selected mean length, found {on}")
    return on[0]


def _vertex_path(ones: set, m: int, L: int) -> WarpingPath:
    # backward reachability inside the chosen set, then a greedy forward walk
    target = (m, L)
    if (1, 1) not in ones or target not in ones:
        raise ConsistencyError(f"chosen vertices do not connect (1, 1) to {target}")
    reach = {target}
    for v in sorted(ones, reverse=True):
        i, j = v
        if any((i + di, j + dj) in reach for di, dj in ((1, 1), (1, 0), (0, 1))):
            reach.add(v)
    if (1, 1) not in reach:
        raise ConsistencyError(f"chosen vertices do not connect (1, 1) to {target}")
    # straight steps first: when the chosen cells form a path this retraces it
    path = [(1, 1)]
    while path[-1] != target:
        i, j = path[-1]
        path.append(next((i + di, j + dj) for di, dj in ((1, 0), (0, 1), (1, 1))
                         if (i + di, j + dj) in reach))
    return WarpingPath(tuple(path))


def _arc_path(flows: dict, x: np.ndarray, m: int, L: int) -> WarpingPath:
    succ: dict = {}
    for (u, v), idx in flows.items():
        if x[idx] > 0.5:
            if u in succ:
                raise ConsistencyError(f"flow splits at vertex {u}")
            succ[u] = v
    path = [(1, 1)]
    while path[-1] in succ:
        path.append(succ[path[-1]])
        if len(path) > len(flows) + 1:
            raise ConsistencyError("flow contains a cycle")
    if path[-1] != (m, L):
        raise ConsistencyError(f"flow path ends at {path[-1]}, expected {(m, L)}")
    return WarpingPath(tuple(path))


def decode_paths(model, x: np.ndarray, int_tol: float = 1e-6) -> tuple[int, tuple]:
    """Selected mean length and one warping path per series from an integral ``x``."""
    lay = model.layout
    L = selected_length(model, x, int_tol)
    paths = []
    for l, s in enumerate(lay.inst.samples):
        m = len(s)
        if lay.graph == "arc":
            p = _arc_path(lay.flows[l], x, m, L)
        else:
            ones = {v for v, e in lay.y[l].items() if e.value(x) > 0.5}
            p = _vertex_path(ones, m, L)
        if not p.is_admissible(lay.constraint, m, L):
            raise ConsistencyError(f"decoded path of series {l + 1} violates {lay.constraint.label()}")
        paths.append(p)
    return L, tuple(paths)


def clipped_mean(model, vertex_sets, L: int) -> tuple[np.ndarray, float]:
    """Best mean of length ``L`` within the model's value box for fixed alignments.

    ``vertex_sets[l]`` is an iterable of aligned cells ``(i, j)`` of series ``l``.
    Returns the mean and ``(1/k) * sum`` of squared aligned differences.
    """
    lay = model.layout
    prof = lay.profile
    sums = np.zeros(L)
    counts = np.zeros(L)
    for s, cells in zip(lay.inst.samples, vertex_sets):
        for i, j in cells:
            sums[j - 1] += s.values[i - 1]
            counts[j - 1] += 1
    z = np.empty(L)
    for j in range(1, L + 1):
        lo, hi = prof.lb[j - 1], prof.ub[j - 1]
        avg = sums[j - 1] / counts[j - 1] if counts[j - 1] else lo
        z[j - 1] = min(max(avg, lo), hi)
    F = 0.0
    for s, cells in zip(lay.inst.samples, vertex_sets):
        F += sum((z[j - 1] - s.values[i - 1]) ** 2 for i, j in cells)
    return z, F / lay.inst.k


def exact_value(model, x: np.ndarray) -> float:
    """Model objective at integral ``x`` after optimizing the continuous part.

    Counts every cell switched on, including cells off the decoded paths.
    """
    lay = model.layout
    L = selected_length(model, x)
    sets = [[v for v, e in ys.items() if e.value(x) > 0.5] for ys in lay.y]
    return clipped_mean(model, sets, L)[1]


def complete_assignment(model, L: int, paths) -> tuple[np.ndarray, float]:
    """Feasible model point for mean length ``L`` and the given paths.

    Continuous variables take their optimal values, so the model objective
    at the returned point is the exact value of this alignment.
    """
    lay = model.layout
    lb, ub = model.bounds()
    x = np.zeros(model.n)
    x[lay.x[L]] = 1.0
    z, F = clipped_mean(model, [p.vertices for p in paths], L)
    for j, idx in lay.z.items():
        x[idx] = z[j - 1] if j <= L else lb[idx]
    on = [set(p.vertices) for p in paths]
    for l, p in enumerate(paths):
        if lay.graph == "arc":
            for u, v in zip(p.vertices, p.vertices[1:]):
                x[lay.flows[l][(u, v)]] = 1.0
        else:
            for v in p.vertices:
                x[lay.y[l][v].coefs[0][0]] = 1.0
    s_vals = [s.values for s in lay.inst.samples]
    for l, ds in enumerate(lay.d):
        for (i, j), d_idx in ds.items():
            if (i, j) not in on[l]:
                continue
            r = x[lay.z[j]] - s_vals[l][i - 1]
            x[d_idx] = r * r
            if lay.distance == "linear":
                x[model.index(f"w_{l + 1}_{i}_{j}")] = abs(r)
            elif lay.distance == "perspective":
                x[model.index(f"zbar_{l + 1}_{i}_{j}")] = x[lay.z[j]]
    if lay.eta is not None:
        x[lay.eta] = F
    return x, F


def extract_solution(model, assignment: np.ndarray, tol: float = 1e-9,
                     int_tol: float = 1e-6) -> tuple[TimeSeries, tuple, float]:
    """Mean, paths and Fréchet value of an integral feasible assignment.

    The value is recomputed from the raw series and checked against the
    model objective at ``assignment``.
    """
    lay = model.layout
    x = np.asarray(assignment, dtype=float)
    L, paths = decode_paths(model, x, int_tol)
    if lay.z:
        z = np.array([x[lay.z[j]] for j in range(1, L + 1)])
    else:
        z, _ = clipped_mean(model, [p.vertices for p in paths], L)
    F = sum(path_cost(s.values, z, p) for s, p in zip(lay.inst.samples, paths)) / lay.inst.k
    obj = model.objective_value(x)
    if abs(F - obj) > tol * max(1.0, abs(F)):
        raise ConsistencyError(f"decoded value {F!r} differs from model objective {obj!r}")
    return TimeSeries(z), paths, float(F)
