"""Mixed-integer formulations of the mean problem.

Two path models (vertex membership or unit arc flows) are combined with one
of four distance models:

``quadratic``    big-M rows ``d >= (z - s)**2 - M**2 (1 - y)``
``linear``       ``w >= |z - s| - M (1 - y)`` with epigraph ``d >= w**2``
``perspective``  disaggregated copies ``zbar`` and perspective tangents
``implicit``     a single value variable ``eta`` bounded by subgradient cuts

Cells that lie on no admissible path, and mean lengths no admissible path
can end at, are left out of the model entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..bounds import BoundProfile, bound_profile, mean_grids
from ..series import Instance
from ..warping import DiagonalGrid, GlobalConstraint
from .cuts import big_m, perspective_tangent, quad_tangent
from .ir import BINARY, CONTINUOUS, Affine, Model, ModelError, PerspectiveRow, QuadraticRow

GRAPHS = ("vertex", "arc")
DISTANCES = ("quadratic", "linear", "perspective", "implicit")
FORMULATIONS = tuple(f"{g}:{d}" for g in GRAPHS for d in DISTANCES)


class InfeasibleModelError(ModelError):
    """No mean length admits warping paths for every series."""


def mean_length_bound(inst: Instance) -> int:
    """Length bound ``sum(m_l) - 2(k - 1)`` on some mean, at least 1."""
    return max(1, sum(inst.lengths) - 2 * (inst.k - 1))


def parse_formulation(text: str) -> tuple[str, str]:
    graph, _, distance = text.partition(":")
    if graph not in GRAPHS or distance not in DISTANCES:
        raise ModelError(f"unknown formulation {text!r}; expected one of {', '.join(FORMULATIONS)}")
    return graph, distance


@dataclass
class MeanLayout:
    """Where the parts of a mean formulation live inside a :class:`Model`."""

    inst: Instance
    constraint: GlobalConstraint
    profile: BoundProfile
    graph: str
    distance: str
    grids: list
    lengths: list
    x: dict = field(default_factory=dict)
    z: dict = field(default_factory=dict)
    y: list = field(default_factory=list)
    flows: list = field(default_factory=list)
    d: list = field(default_factory=list)
    big_m: list = field(default_factory=list)
    eta: Optional[int] = None

    def y_expr(self) -> dict:
        """``(l, i, j) -> Affine`` over all series."""
        return {(l, i, j): e for l, ys in enumerate(self.y) for (i, j), e in ys.items()}

    def vertex_count(self) -> int:
        return sum(len(ys) for ys in self.y)


def _vname(prefix: str, l: int, v) -> str:
    return f"{prefix}_{l + 1}_{v[0]}_{v[1]}"


def _start(inst: Instance, c: Optional[GlobalConstraint], profile: Optional[BoundProfile],
           graph: str, distance: str, tol: float):
    c = inst.constraint if c is None else c
    if profile is None:
        profile = bound_profile(inst, c, mean_length_bound(inst), tol)
    lengths = list(profile.lengths)
    if not lengths:
        raise InfeasibleModelError(f"no admissible mean length under {c.label()}")
    _, grids = mean_grids(inst, c, profile.N)
    model = Model(name=f"{inst.name}-{graph}-{distance}")
    layout = MeanLayout(inst, c, profile, graph, distance, grids, lengths)
    model.layout = layout
    model.meta.update(graph=graph, distance=distance, constraint=c.label(), instance=inst.name,
                      k=inst.k, N=profile.N)
    for L in lengths:
        layout.x[L] = model.add_var(f"x_{L}", BINARY)
    model.add_row({i: 1.0 for i in layout.x.values()}, "=", 1.0, "length", tag="length")
    return model, layout


def _length_rows(model: Model, layout: MeanLayout, l: int, grid: DiagonalGrid) -> None:
    # a cell serving only some mean lengths forces one of them to be selected
    full = set(layout.lengths)
    for v, expr in layout.y[l].items():
        terms = set(grid.vertex_terminals(*v))
        if terms != full:
            coefs = {}
            expr.scaled_into(coefs, 1.0)
            for L in terms:
                coefs[layout.x[L]] = coefs.get(layout.x[L], 0.0) - 1.0
            if not any(coefs.values()):
                continue  # y is exactly the sum of its lengths, e.g. an arc destination
            model.add_row(coefs, "<=", -expr.const, _vname("len", l, v), tag="length")


def _vertex_paths(model: Model, layout: MeanLayout) -> None:
    for l, grid in enumerate(layout.grids):
        m = grid.m
        verts = grid.vertices()
        ys = {v: model.add_var(_vname("y", l, v), BINARY) for v in verts}
        layout.y.append({v: Affine.var(idx) for v, idx in ys.items()})
        succ: dict = {v: [] for v in verts}
        for u, v in grid.arcs():
            succ[u].append(v)
        model.add_row({ys[(1, 1)]: 1.0}, "=", 1.0, f"src_{l + 1}", tag="path")
        for u in verts:
            coefs = {ys[u]: 1.0}
            for v in succ[u]:
                coefs[ys[v]] = coefs.get(ys[v], 0.0) - 1.0
            if u[0] == m and u[1] in layout.x:
                coefs[layout.x[u[1]]] = -1.0
            model.add_row(coefs, "<=", 0.0, _vname("next", l, u), tag="path")
        _length_rows(model, layout, l, grid)


def _arc_paths(model: Model, layout: MeanLayout) -> None:
    for l, grid in enumerate(layout.grids):
        m = grid.m
        verts = grid.vertices()
        out: dict = {v: [] for v in verts}
        inc: dict = {v: [] for v in verts}
        fl = {}
        for u, v in grid.arcs():
            idx = model.add_var(f"f_{l + 1}_{u[0]}_{u[1]}_{v[0]}_{v[1]}", BINARY)
            fl[(u, v)] = idx
            out[u].append(idx)
            inc[v].append(idx)
        layout.flows.append(fl)
        exprs = {}
        for v in verts:
            coefs = {i: 1.0 for i in out[v]}
            for i in inc[v]:
                coefs[i] = coefs.get(i, 0.0) - 1.0
            ycoefs = {i: 1.0 for i in out[v]}
            if v[0] == m and v[1] in layout.x:
                coefs[layout.x[v[1]]] = 1.0
                ycoefs[layout.x[v[1]]] = 1.0
            model.add_row(coefs, "=", 1.0 if v == (1, 1) else 0.0, _vname("flow", l, v), tag="path")
            exprs[v] = Affine.of(ycoefs)
        layout.y.append(exprs)
        _length_rows(model, layout, l, grid)


def _add_means(model: Model, layout: MeanLayout) -> None:
    prof = layout.profile
    for j in range(1, max(layout.lengths) + 1):
        layout.z[j] = model.add_var(f"z_{j}", CONTINUOUS, prof.lb[j - 1], prof.ub[j - 1])


def _big_ms(layout: MeanLayout) -> None:
    prof = layout.profile
    for l, ys in enumerate(layout.y):
        s = layout.inst.samples[l].values
        layout.big_m.append({(i, j): big_m(s[i - 1], prof.lb[j - 1], prof.ub[j - 1])
                             for (i, j) in ys})


def _objective_and_floor(model: Model, layout: MeanLayout) -> None:
    k = layout.inst.k
    model.objective = {idx: 1.0 / k for ds in layout.d for idx in ds.values()}
    if layout.profile.frechet_lb > 0:
        model.add_row(dict(model.objective), ">=", layout.profile.frechet_lb, "floor", tag="floor")


def attach_quadratic_distances(model: Model, layout: MeanLayout) -> None:
    """Big-M quadratic distance rows with tangents at ``lb_j``, ``s`` and ``ub_j``."""
    _add_means(model, layout)
    _big_ms(layout)
    prof = layout.profile
    for l, ys in enumerate(layout.y):
        s = layout.inst.samples[l].values
        ds = {}
        for (i, j), expr in ys.items():
            M = layout.big_m[l][(i, j)]
            ds[(i, j)] = model.add_var(_vname("d", l, (i, j)), CONTINUOUS, 0.0, M * M)
            row = QuadraticRow(_vname("q", l, (i, j)), ds[(i, j)], layout.z[j], float(s[i - 1]),
                               expr, M * M, "bigm")
            model.add_quad_row(row)
            for p in sorted({prof.lb[j - 1], float(s[i - 1]), prof.ub[j - 1]}):
                coefs, rhs = quad_tangent(row, p)
                model.add_row(coefs, ">=", rhs, tag="oa")
        layout.d.append(ds)
    _objective_and_floor(model, layout)
    model.hooks.append("oa")


def attach_linear_distances(model: Model, layout: MeanLayout) -> None:
    """Linear big-M residual rows; the squared residuals go through epigraphs."""
    _add_means(model, layout)
    _big_ms(layout)
    for l, ys in enumerate(layout.y):
        s = layout.inst.samples[l].values
        ds = {}
        for (i, j), expr in ys.items():
            M = layout.big_m[l][(i, j)]
            sv = float(s[i - 1])
            w = model.add_var(_vname("w", l, (i, j)), CONTINUOUS, 0.0, M)
            zj = layout.z[j]
            # w >= (z - s) - M (1 - y)  and  w >= (s - z) - M (1 - y)
            for sign in (1.0, -1.0):
                coefs = {w: 1.0, zj: -sign}
                expr.scaled_into(coefs, -M)
                rhs = -sign * sv - M + M * expr.const
                model.add_row(coefs, ">=", rhs, _vname("resp" if sign > 0 else "resn", l, (i, j)),
                              tag="distance")
            ds[(i, j)] = model.add_var(_vname("d", l, (i, j)), CONTINUOUS, 0.0, M * M)
            row = QuadraticRow(_vname("q", l, (i, j)), ds[(i, j)], w, 0.0, None, 0.0, "epigraph")
            model.add_quad_row(row)
            for p in sorted({0.0, M}):
                coefs, rhs = quad_tangent(row, p)
                model.add_row(coefs, ">=", rhs, tag="oa")
        layout.d.append(ds)
    _objective_and_floor(model, layout)
    model.hooks.append("oa")


def attach_perspective_oa(model: Model, layout: MeanLayout) -> None:
    """Disjunctive hull of the on/off distance sets, tangents separated lazily."""
    _add_means(model, layout)
    _big_ms(layout)
    prof = layout.profile
    for l, ys in enumerate(layout.y):
        s = layout.inst.samples[l].values
        ds = {}
        for (i, j), expr in ys.items():
            M = layout.big_m[l][(i, j)]
            lo, hi = prof.lb[j - 1], prof.ub[j - 1]
            sv = float(s[i - 1])
            zb = model.add_var(_vname("zbar", l, (i, j)), CONTINUOUS, min(0.0, lo), max(0.0, hi))
            d = model.add_var(_vname("d", l, (i, j)), CONTINUOUS, 0.0, M * M)
            zj = layout.z[j]
            # z - zbar in [(1 - y) lo, (1 - y) hi]
            c1 = {zj: 1.0, zb: -1.0}
            expr.scaled_into(c1, lo)
            model.add_row(c1, ">=", lo - lo * expr.const, _vname("pzlo", l, (i, j)), tag="distance")
            c2 = {zj: 1.0, zb: -1.0}
            expr.scaled_into(c2, hi)
            model.add_row(c2, "<=", hi - hi * expr.const, _vname("pzhi", l, (i, j)), tag="distance")
            # zbar in [y lo, y hi]
            c3 = {zb: 1.0}
            expr.scaled_into(c3, -lo)
            model.add_row(c3, ">=", lo * expr.const, _vname("pblo", l, (i, j)), tag="distance")
            c4 = {zb: 1.0}
            expr.scaled_into(c4, -hi)
            model.add_row(c4, "<=", hi * expr.const, _vname("pbhi", l, (i, j)), tag="distance")
            # d <= y M^2
            c5 = {d: 1.0}
            expr.scaled_into(c5, -M * M)
            model.add_row(c5, "<=", M * M * expr.const, _vname("pd", l, (i, j)), tag="distance")
            row = PerspectiveRow(_vname("p", l, (i, j)), d, zb, sv, expr)
            model.add_persp_row(row)
            coefs, rhs = perspective_tangent(row, sv)
            model.add_row(coefs, "<=", rhs, tag="oa")
            ds[(i, j)] = d
        layout.d.append(ds)
    _objective_and_floor(model, layout)
    model.hooks.append("oa")


def attach_implicit(model: Model, layout: MeanLayout) -> None:
    """Objective variable ``eta`` bounded below by the Fréchet floor; cuts come lazily."""
    _big_ms(layout)
    k = layout.inst.k
    cap = sum(M * M for bm in layout.big_m for M in bm.values()) / k
    layout.eta = model.add_var("eta", CONTINUOUS, 0.0, max(cap, layout.profile.frechet_lb))
    model.objective = {layout.eta: 1.0}
    model.add_row({layout.eta: 1.0}, ">=", layout.profile.frechet_lb, "floor", tag="floor")
    model.hooks.append("implicit")


_ATTACH = {
    "quadratic": attach_quadratic_distances,
    "linear": attach_linear_distances,
    "perspective": attach_perspective_oa,
    "implicit": attach_implicit,
}


def build_model(inst: Instance, c: Optional[GlobalConstraint] = None,
                profile: Optional[BoundProfile] = None, graph: str = "arc",
                distance: str = "quadratic", tol: float = 1e-9) -> Model:
    """Build one of the eight formulations."""
    if graph not in GRAPHS:
        raise ModelError(f"unknown graph model {graph!r}")
    if distance not in DISTANCES:
        raise ModelError(f"unknown distance model {distance!r}")
    model, layout = _start(inst, c, profile, graph, distance, tol)
    (_vertex_paths if graph == "vertex" else _arc_paths)(model, layout)
    _ATTACH[distance](model, layout)
    model.check()
    return model


def build_vertex_model(inst, c=None, profile=None, distance_kind="quadratic", tol=1e-9) -> Model:
    return build_model(inst, c, profile, "vertex", distance_kind, tol)


def build_arc_model(inst, c=None, profile=None, distance_kind="quadratic", tol=1e-9) -> Model:
    return build_model(inst, c, profile, "arc", distance_kind, tol)
