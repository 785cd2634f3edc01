"""Best-bound branch-and-bound with lazily separated cuts.

Node relaxations are LPs over the linear rows of the model plus a global
pool of cuts. Convex quadratic rows are enforced through tangent cuts
separated whenever the relaxation violates them by more than ``viol_tol``;
the implicit formulation receives its value cuts at integral relaxation
points. Integral points are decoded into warping paths and evaluated
exactly, which both feeds the incumbent and supplies tangents at the exact
optimal mean so the relaxation becomes tight there.
"""

from __future__ import annotations

import heapq
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

from ..model.cuts import implicit_cut, implicit_row, perspective_tangent, quad_tangent
from ..series import TimeSeries
from ..warping import InfeasibleError
from .decode import ConsistencyError, clipped_mean, complete_assignment, decode_paths, exact_value
from .heuristic import medoid, primal_heuristic
from .lp import make_engine

STATUSES = ("optimal", "feasible", "infeasible", "limit")


def gap(p: float, d: float, feas_tol: float = 1e-9) -> float:
    """Relative gap ``(p - d) / d``.

    Zero when ``p`` and ``d`` agree within ``feas_tol`` (relative to
    ``max(1, |p|)``), which covers a proven optimum of value zero; infinite
    when there is no incumbent or the dual bound is not positive.
    """
    if math.isinf(p):
        return math.inf
    if p - d <= feas_tol * max(1.0, abs(p)):
        return 0.0
    if d <= feas_tol:
        return math.inf
    return (p - d) / d


@dataclass
class SolverConfig:
    time_limit: float = 3600.0
    node_limit: Optional[int] = None
    viol_tol: float = 1e-6
    feas_tol: float = 1e-9
    int_tol: float = 1e-6
    node_selection: str = "best-bound"
    branching: str = "most-fractional"
    heuristic_frequency: int = 100
    max_cut_rounds: int = 50
    node_cut_rounds: int = 5
    max_active_cuts: int = 200
    gap_limit: Optional[float] = None
    lp_engine: str = "highs"
    log_path: Optional[str] = None

    def __post_init__(self):
        for name in ("viol_tol", "feas_tol", "int_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.node_selection != "best-bound":
            raise ValueError(f"unsupported node selection {self.node_selection!r}")
        if self.branching != "most-fractional":
            raise ValueError(f"unsupported branching rule {self.branching!r}")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass
class SolveResult:
    status: str
    incumbent_mean: Optional[TimeSeries]
    p: float
    d: float
    gap: float
    nodes: int
    wall_time: float
    paths: Optional[tuple] = None
    log: list = field(default_factory=list, repr=False)
    stats: dict = field(default_factory=dict)

    @property
    def F(self) -> float:
        return self.p

    def to_json(self) -> dict:
        def num(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")

        return {
            "status": self.status,
            "F": num(self.p),
            "p": num(self.p),
            "d": num(self.d),
            "gap": num(self.gap),
            "nodes": self.nodes,
            "wall_time": self.wall_time,
            "mean": None if self.incumbent_mean is None else self.incumbent_mean.tolist(),
            "length": None if self.incumbent_mean is None else len(self.incumbent_mean),
            "paths": None if self.paths is None else [list(map(list, p.vertices)) for p in self.paths],
            "stats": self.stats,
        }


@dataclass(order=True)
class Node:
    key: tuple
    id: int = field(compare=False)
    depth: int = field(compare=False)
    bound: float = field(compare=False)
    fixings: tuple = field(compare=False, default=())


@dataclass
class _Incumbent:
    F: float
    z: TimeSeries
    paths: tuple
    source: str


class _Separator:
    """Vectorized violation checks for the quadratic and perspective rows."""

    def __init__(self, model):
        n = model.n
        q = model.quad_rows
        self.quad = q
        self.q_d = np.array([r.d for r in q], dtype=int)
        self.q_z = np.array([r.z for r in q], dtype=int)
        self.q_s = np.array([r.s for r in q])
        self.q_m2 = np.array([r.big_m2 for r in q])
        self.q_has_y = np.array([r.y is not None for r in q], dtype=bool)
        self.q_Y, self.q_c = self._affine([r.y for r in q], n)
        p = model.persp_rows
        self.persp = p
        self.p_d = np.array([r.d for r in p], dtype=int)
        self.p_zb = np.array([r.zbar for r in p], dtype=int)
        self.p_s = np.array([r.s for r in p])
        self.p_Y, self.p_c = self._affine([r.y for r in p], n)
        self.q_by_d = {r.d: k for k, r in enumerate(q)}
        self.p_by_d = {r.d: k for k, r in enumerate(p)}

    @staticmethod
    def _affine(exprs, n):
        rows, cols, vals, const = [], [], [], []
        for k, e in enumerate(exprs):
            const.append(0.0 if e is None else e.const)
            if e is None:
                continue
            for i, c in e.coefs:
                rows.append(k)
                cols.append(i)
                vals.append(c)
        Y = sparse.csr_matrix((vals, (rows, cols)), shape=(len(exprs), n))
        return Y, np.array(const)

    def quad_violation(self, x):
        if not self.quad:
            return np.zeros(0)
        y = np.where(self.q_has_y, self.q_Y @ x + self.q_c, 1.0)
        return (x[self.q_z] - self.q_s) ** 2 - x[self.q_d] - self.q_m2 * (1.0 - y)

    def persp_violation(self, x):
        if not self.persp:
            return np.zeros(0), np.zeros(0)
        y = self.p_Y @ x + self.p_c
        safe = np.where(y > 1e-12, y, 1.0)
        point = x[self.p_zb] / safe
        viol = np.where(y > 1e-12, y * (point - self.p_s) ** 2 - x[self.p_d], -np.inf)
        return viol, point


class CutPool:
    """Every cut found so far; only a working subset is loaded into the LP.

    Cuts are globally valid, so dropping one from the LP only weakens the
    relaxation. Pool cuts violated at a relaxation point are loaded again.
    """

    def __init__(self, n: int):
        self.n = n
        self.rows: list = []
        self.kinds: list = []
        self.keys: set = set()
        self.active: list = []
        self.loaded = np.zeros(0, dtype=bool)
        self._pending: list = []
        self._A = sparse.csr_matrix((0, n))
        self._lo = np.zeros(0)
        self._hi = np.zeros(0)

    def __len__(self) -> int:
        return len(self.rows)

    def add(self, key, coefs: dict, sense: str, rhs: float, kind: str) -> Optional[int]:
        if key in self.keys:
            return None
        self.keys.add(key)
        self.rows.append((coefs, sense, rhs))
        self.kinds.append(kind)
        self._pending.append((coefs, sense, rhs))
        self.loaded = np.append(self.loaded, False)
        return len(self.rows) - 1

    def _matrix(self):
        if self._pending:
            # append the new cuts as one CSR block
            ptr, ind, val, lo, hi = [0], [], [], [], []
            for coefs, sense, rhs in self._pending:
                ind.extend(coefs)
                val.extend(coefs.values())
                ptr.append(len(ind))
                lo.append(rhs if sense in (">=", "=") else -np.inf)
                hi.append(rhs if sense in ("<=", "=") else np.inf)
            block = sparse.csr_matrix((val, ind, ptr), shape=(len(self._pending), self.n))
            self._A = sparse.vstack([self._A, block], format="csr")
            self._lo = np.concatenate([self._lo, lo])
            self._hi = np.concatenate([self._hi, hi])
            self._pending = []
        return self._A

    def violated(self, x: np.ndarray, tol: float) -> np.ndarray:
        """Ids of pool cuts not in the LP and violated by more than ``tol``."""
        if not self.rows or self.loaded.all():
            return np.zeros(0, dtype=int)
        act = self._matrix() @ x
        viol = np.maximum(self._lo - act, act - self._hi)
        return np.flatnonzero((viol > tol) & ~self.loaded)

    def slack(self, ids, x: np.ndarray) -> np.ndarray:
        A = self._matrix()
        act = A[ids] @ x
        return np.minimum(act - self._lo[ids], self._hi[ids] - act)


class BranchAndBound:
    def __init__(self, model, config: Optional[SolverConfig] = None):
        if model.layout is None:
            raise ValueError("model has no mean layout; build it with dtwmean.model.build_model")
        self.model = model
        self.cfg = config or SolverConfig()
        self.lay = model.layout
        self.inst = self.lay.inst
        self.engine = make_engine(self.cfg.lp_engine, model, min(self.cfg.feas_tol, 1e-7))
        self.sep = _Separator(model)
        self.root_lb, self.root_ub = model.bounds()
        self.binaries = np.array(model.binaries(), dtype=int)
        self.y_expr = self.lay.y_expr()
        self._forced = self._forced_cells()
        self.pool = CutPool(model.n)
        self.base_rows = len(model.rows)
        self.incumbent: Optional[_Incumbent] = None
        self.log: list = []
        self.nodes = 0
        self.next_id = 0
        self.d = -math.inf
        self.floor = self.lay.profile.frechet_lb
        self.t0 = time.perf_counter()
        self._log_file = open(self.cfg.log_path, "w") if self.cfg.log_path else None

    # bookkeeping -----------------------------------------------------------------
    @property
    def p(self) -> float:
        return self.incumbent.F if self.incumbent else math.inf

    def _emit(self, event: str, **data) -> None:
        rec = {"event": event, "t": round(time.perf_counter() - self.t0, 6), "p": self.p,
               "d": self.d, **data}
        self.log.append(rec)
        if self._log_file:
            self._log_file.write(json.dumps(rec, default=float) + "\n")

    def _prune_level(self) -> float:
        p = self.p
        return p - self.cfg.feas_tol * max(1.0, abs(p)) if math.isfinite(p) else math.inf

    def _offer(self, F: float, z, paths, source: str, node_id: int) -> bool:
        if F < self.p - 1e-12 * max(1.0, abs(F)):
            self.incumbent = _Incumbent(float(F), TimeSeries(z), tuple(paths), source)
            self._emit("incumbent", node_id=node_id, value=float(F), source=source)
            return True
        return False

    def _update_dual(self, heap, extra: float = math.inf) -> None:
        open_min = heap[0].bound if heap else math.inf
        cand = max(min(self.p, open_min, extra), self.floor)
        if cand > self.d:
            self.d = cand

    def _forced_cells(self) -> dict:
        """Grid cells ``(l, i, j)`` that lie on the path once a binary is one."""
        if self.lay.flows:
            return {idx: ((l, *u), (l, *v)) for l, fl in enumerate(self.lay.flows)
                    for (u, v), idx in fl.items()}
        return {e.coefs[0][0]: (key,) for key, e in self.y_expr.items()}

    def _fixing_bound(self, fixings) -> float:
        """Lower bound from cells fixed onto the paths.

        Values aligned with mean index ``j`` share ``z_j``, so they cost at
        least their squared deviation from their own average.
        """
        cols: dict = {}
        for var, val in fixings:
            if val == 1.0:
                for l, i, j in self._forced.get(var, ()):
                    cols.setdefault(j, {})[(l, i)] = self.inst.samples[l].values[i - 1]
        total = 0.0
        for cells in cols.values():
            if len(cells) > 1:
                v = np.fromiter(cells.values(), float, len(cells))
                total += float(((v - v.mean()) ** 2).sum())
        return total / self.inst.k

    # heuristics ------------------------------------------------------------------
    def _run_heuristic(self, z0, node_id: int, source: str) -> None:
        try:
            res = primal_heuristic(self.inst, self.lay.constraint, z0, tol=self.cfg.feas_tol)
        except InfeasibleError:
            return
        self._offer(res.F, res.z.values, res.paths, source, node_id)

    def _root_heuristic(self) -> None:
        idx = medoid(self.inst, self.lay.constraint)
        if idx is not None:
            self._run_heuristic(self.inst.samples[idx].values, 0, "medoid")

    # cuts ------------------------------------------------------------------------
    def _add_cut(self, key, coefs, sense, rhs, kind, out) -> None:
        cid = self.pool.add(key, coefs, sense, rhs, kind)
        if cid is not None:
            out.append(cid)

    def _load(self, ids) -> None:
        ids = [int(i) for i in ids if not self.pool.loaded[i]]
        if not ids:
            return
        self.engine.add_rows([self.pool.rows[i] for i in ids])
        self.pool.active.extend(ids)
        self.pool.loaded[ids] = True

    def _purge(self, x) -> None:
        """Unload cuts slack at ``x`` once the LP holds too many of them."""
        pool = self.pool
        if x is None or len(pool.active) <= self.cfg.max_active_cuts:
            return
        ids = np.array(pool.active, dtype=int)
        slack = pool.slack(ids, x)
        drop = np.flatnonzero(slack > self.cfg.viol_tol)
        if drop.size == 0:
            return
        self.engine.delete_rows(self.base_rows + drop)
        pool.loaded[ids[drop]] = False
        keep = np.ones(len(ids), dtype=bool)
        keep[drop] = False
        pool.active = [int(i) for i in ids[keep]]

    def _separate(self, x, tol, out) -> None:
        sep = self.sep
        viol = sep.quad_violation(x)
        for k in np.flatnonzero(viol > tol):
            row = sep.quad[k]
            pt = float(x[row.z])
            coefs, rhs = quad_tangent(row, pt)
            self._add_cut(("q", int(k), round(pt, 12)), coefs, ">=", rhs, "oa", out)
        pv, points = sep.persp_violation(x)
        for k in np.flatnonzero(pv > tol):
            row = sep.persp[k]
            pt = float(points[k])
            coefs, rhs = perspective_tangent(row, pt)
            self._add_cut(("p", int(k), round(pt, 12)), coefs, "<=", rhs, "oa", out)

    def _polish_cuts(self, x, L, paths, z, F, out) -> None:
        """Tangents at the exact mean of an integral point, or its implicit cut."""
        lay = self.lay
        if lay.distance == "implicit":
            if x[lay.eta] < F - self.cfg.feas_tol * max(1.0, abs(F)):
                y_hat = {(l, i, j): 1 for l, p in enumerate(paths) for i, j in p.vertices}
                cut = implicit_cut(self.inst, lay.profile, y_hat, F)
                coefs, rhs = implicit_row(cut, lay.eta, self.y_expr)
                self._add_cut(("i", frozenset(y_hat)), coefs, ">=", rhs, "implicit", out)
            return
        tol = self.cfg.feas_tol
        for l, p in enumerate(paths):
            s = self.inst.samples[l].values
            for i, j in p.vertices:
                d_idx = lay.d[l][(i, j)]
                r = z[j - 1] - s[i - 1]
                if lay.distance == "perspective":
                    k = self.sep.p_by_d[d_idx]
                    row = self.sep.persp[k]
                    coefs, rhs = perspective_tangent(row, float(z[j - 1]))
                    act = sum(c * x[v] for v, c in coefs.items())
                    if act - rhs > tol:
                        self._add_cut(("p", k, round(float(z[j - 1]), 12)), coefs, "<=", rhs, "oa", out)
                    continue
                k = self.sep.q_by_d[d_idx]
                row = self.sep.quad[k]
                pt = float(z[j - 1]) if lay.distance == "quadratic" else abs(r)
                coefs, rhs = quad_tangent(row, pt)
                act = sum(c * x[v] for v, c in coefs.items())
                if rhs - act > tol:
                    self._add_cut(("q", k, round(pt, 12)), coefs, ">=", rhs, "oa", out)

    # node processing -------------------------------------------------------------
    def _node_bounds(self, node: Node):
        lb = self.root_lb.copy()
        ub = self.root_ub.copy()
        for var, val in node.fixings:
            lb[var] = ub[var] = val
        return lb, ub

    def _fractional(self, x) -> Optional[int]:
        vals = x[self.binaries]
        dist = np.minimum(vals, 1.0 - vals)
        frac = dist > self.cfg.int_tol
        if not frac.any():
            return None
        # most fractional, smallest index on ties (argmax returns the first)
        score = np.where(frac, dist, -1.0)
        return int(self.binaries[int(np.argmax(score))])

    def lp_relax(self, node: Node):
        """Solve the node relaxation with cut rounds.

        Returns ``(outcome, bound, x, branch_var)`` where outcome is one of
        ``infeasible``, ``pruned``, ``fathomed`` or ``branch``.
        """
        lb, ub = self._node_bounds(node)
        bound = node.bound
        x = None
        cap = self.cfg.max_cut_rounds if node.depth == 0 else self.cfg.node_cut_rounds
        for rounds in range(cap + 1):
            sol = self.engine.solve(lb, ub)
            if sol.status == "infeasible":
                return "infeasible", math.inf, None, None
            x = sol.x
            bound = max(bound, sol.value)
            if bound >= self._prune_level():
                return "pruned", bound, x, None
            var = self._fractional(x)
            cuts: list = []
            if var is None:
                xr = x.copy()
                xr[self.binaries] = np.round(x[self.binaries])
                L, paths = decode_paths(self.model, xr, self.cfg.int_tol)
                z, F = clipped_mean(self.model, [p.vertices for p in paths], L)
                if self._offer(F, z, paths, "integral", node.id):
                    self._run_heuristic(z, node.id, "polish")
                if bound >= self._prune_level():
                    return "fathomed", bound, x, None
                if np.array_equal(lb[self.binaries], ub[self.binaries]):
                    # every binary fixed: the subtree is this single assignment
                    return "fathomed", max(bound, exact_value(self.model, xr)), x, None
                self._polish_cuts(x, L, paths, z, F, cuts)
            if var is None or node.depth == 0:
                self._separate(x, self.cfg.viol_tol, cuts)
            cuts.extend(int(i) for i in self.pool.violated(x, self.cfg.viol_tol) if i not in cuts)
            if not cuts:
                if var is None:
                    return "fathomed", bound, x, None
                return "branch", bound, x, var
            if rounds == cap:
                break
            self._load(cuts)
            self._emit("cut", node_id=node.id, count=len(cuts), round=rounds)
        var = self._fractional(x)
        if var is None:
            free = [int(b) for b in self.binaries if lb[b] < ub[b]]
            var = free[0]
        return "branch", bound, x, var

    def _push(self, heap, bound, depth, fixings) -> None:
        node = Node((bound, -depth, self.next_id), self.next_id, depth, bound, fixings)
        self.next_id += 1
        heapq.heappush(heap, node)

    def _rounded_mean(self, x):
        lay = self.lay
        if not lay.z:
            return None
        L = max(lay.x, key=lambda j: (x[lay.x[j]], -j))
        return np.array([x[lay.z[j]] for j in range(1, L + 1)])

    def run(self) -> SolveResult:
        cfg = self.cfg
        self._root_heuristic()
        heap: list = []
        self._push(heap, -math.inf, 0, ())
        self._update_dual(heap)
        status = None
        while heap:
            if time.perf_counter() - self.t0 > cfg.time_limit or (
                    cfg.node_limit is not None and self.nodes >= cfg.node_limit):
                status = "limit"
                break
            if cfg.gap_limit is not None and gap(self.p, self.d, cfg.feas_tol) <= cfg.gap_limit:
                status = "feasible"
                break
            node = heapq.heappop(heap)
            if node.bound >= self._prune_level():
                self._emit("node", node_id=node.id, depth=node.depth, bound=node.bound, action="pruned")
                continue
            self.nodes += 1
            outcome, bound, x, var = self.lp_relax(node)
            self._purge(x)
            if outcome == "branch":
                down = node.fixings + ((var, 0.0),)
                up = node.fixings + ((var, 1.0),)
                self._push(heap, bound, node.depth + 1, down)
                self._push(heap, max(bound, self._fixing_bound(up)), node.depth + 1, up)
            self._update_dual(heap, bound if outcome == "branch" else math.inf)
            self._emit("node", node_id=node.id, depth=node.depth, bound=bound, action=outcome,
                       **({"branch_var": self.model.variables[var].name} if var is not None else {}))
            if (cfg.heuristic_frequency and self.nodes % cfg.heuristic_frequency == 0
                    and x is not None):
                z0 = self._rounded_mean(x)
                if z0 is not None:
                    self._run_heuristic(z0, node.id, "periodic")
        if status is None:
            status = "optimal" if self.incumbent else "infeasible"
            if self.incumbent:
                self.d = max(self.d, self.p)
        self._update_dual(heap)
        if self.incumbent and self.d > self.p:
            self.d = self.p
        g = gap(self.p, self.d, cfg.feas_tol)
        if status == "optimal" and g > cfg.feas_tol:
            raise ConsistencyError(f"search exhausted with gap {g}")
        wall = time.perf_counter() - self.t0
        self._emit("done", status=status, nodes=self.nodes, gap=g)
        if self._log_file:
            self._log_file.close()
        inc = self.incumbent
        return SolveResult(
            status=status,
            incumbent_mean=inc.z if inc else None,
            p=self.p,
            d=self.d,
            gap=g,
            nodes=self.nodes,
            wall_time=wall,
            paths=inc.paths if inc else None,
            log=self.log,
            stats={"lp_solves": self.engine.solves, "cuts": len(self.pool),
                   "cuts_by_kind": {k: self.pool.kinds.count(k) for k in sorted(set(self.pool.kinds))},
                   "incumbent_source": inc.source if inc else None,
                   "frechet_lb": self.floor, "formulation": f"{self.lay.graph}:{self.lay.distance}"},
        )


def solve(model, config: Optional[SolverConfig] = None) -> SolveResult:
    """Solve ``model`` to optimality or until a limit is reached."""
    return BranchAndBound(model, config).run()


def lp_relax(model, config: Optional[SolverConfig] = None, fixings=()) -> tuple[float, np.ndarray]:
    """Root (or fixed-node) relaxation value with cuts separated to convergence.

    Returns ``(value, assignment)``; the value is ``inf`` if the node is
    infeasible. No incumbent is used, so nothing is pruned by bound.
    """
    cfg = config or SolverConfig(max_cut_rounds=1000)
    bb = BranchAndBound(model, cfg)
    bb.incumbent = None
    lb, ub = bb._node_bounds(Node((0,), 0, 0, -math.inf, tuple(fixings)))
    value, x = -math.inf, None
    for _ in range(cfg.max_cut_rounds + 1):
        sol = bb.engine.solve(lb, ub)
        if sol.status == "infeasible":
            return math.inf, None
        value, x = sol.value, sol.x
        cuts: list = []
        bb._separate(x, cfg.viol_tol, cuts)
        if not cuts:
            break
        bb._load(cuts)
    return value, x
