import json
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from dtwmean import Instance, TimeSeries, brute_force_mean
from dtwmean.bnb import (ConsistencyError, SolverConfig, complete_assignment, extract_solution, gap,
                         lp_relax, medoid, primal_heuristic, solve, solve_lp)
from dtwmean.bnb.decode import exact_value
from dtwmean.model import FORMULATIONS, build_model
from dtwmean.warping import GlobalConstraint, InfeasibleError


def inst(*series, c=GlobalConstraint.none()):
    return Instance(tuple(TimeSeries(s) for s in series), c)


def run(I, formulation, **kw):
    graph, distance = formulation.split(":")
    return solve(build_model(I, graph=graph, distance=distance), SolverConfig(**kw))


def test_gap_conventions():
    assert gap(1.0, 1.0) == 0.0
    assert gap(1.1, 1.0) == pytest.approx(0.1)
    assert gap(1.0, 0.0) == math.inf
    assert gap(math.inf, 0.5) == math.inf
    assert gap(0.0, 0.0) == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(feas_tol=0)
    with pytest.raises(ValueError):
        SolverConfig(node_selection="depth-first")
    with pytest.raises(ValueError):
        SolverConfig(time_limit=-1)


# dense simplex ------------------------------------------------------------------

def test_simplex_matches_highs_on_random_lps():
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(60):
        n, m = rng.integers(2, 7), rng.integers(1, 6)
        A = rng.integers(-3, 4, size=(m, n)).astype(float)
        b = rng.integers(-4, 8, size=m).astype(float)
        senses = list(rng.choice(["<=", ">=", "="], size=m, p=[0.5, 0.35, 0.15]))
        c = rng.normal(size=n)
        lb, ub = -rng.integers(0, 3, size=n).astype(float), rng.integers(1, 4, size=n).astype(float)
        A_ub = [A[i] if s == "<=" else -A[i] for i, s in enumerate(senses) if s != "="]
        b_ub = [b[i] if s == "<=" else -b[i] for i, s in enumerate(senses) if s != "="]
        A_eq = [A[i] for i, s in enumerate(senses) if s == "="]
        b_eq = [b[i] for i, s in enumerate(senses) if s == "="]
        ref = linprog(c, A_ub=A_ub or None, b_ub=b_ub or None, A_eq=A_eq or None, b_eq=b_eq or None,
                      bounds=list(zip(lb, ub)), method="highs")
        got = solve_lp(c, A, senses, b, lb, ub)
        if ref.status == 2:
            assert got.status == "infeasible"
        else:
            assert got.status == "optimal"
            assert got.value == pytest.approx(ref.fun, abs=1e-7)
            checked += 1
    assert checked > 20


def test_simplex_degenerate_problem_terminates():
    # many ties in the ratio test; Bland's rule must take over
    n = 6
    A = np.vstack([np.eye(n), np.ones((1, n)), -np.ones((1, n))])
    b = np.concatenate([np.ones(n), [1.0], [-1.0]])
    res = solve_lp(-np.ones(n), A, ["<="] * (n + 2), b, np.zeros(n), np.ones(n), degenerate_switch=1)
    assert res.status == "optimal" and res.value == pytest.approx(-1.0)


# solver -------------------------------------------------------------------------

@pytest.mark.parametrize("formulation", FORMULATIONS)
def test_spec_examples_all_formulations(formulation):
    r = run(inst([0], [4]), formulation)
    assert r.status == "optimal"
    assert r.F == pytest.approx(4.0) and r.incumbent_mean.tolist() == pytest.approx([2.0])
    r = run(inst([1.5, -2, 0]), formulation)
    assert r.F == pytest.approx(0.0, abs=1e-9)
    assert r.incumbent_mean.tolist() == pytest.approx([1.5, -2, 0])
    r = run(inst([0, 0], [2, 2], c=GlobalConstraint.itakura("1.1")), formulation)
    assert r.status == "optimal" and r.F == pytest.approx(2.0)


@pytest.mark.parametrize("formulation", FORMULATIONS)
def test_matches_oracle_and_log_invariants(formulation):
    I = inst([1, -1, 2], [0, 2])
    F = brute_force_mean(I).F
    r = run(I, formulation)
    assert r.status == "optimal" and abs(r.F - F) <= 1e-6
    assert r.gap == 0.0
    ps = [e["p"] for e in r.log]
    ds = [e["d"] for e in r.log]
    assert all(a >= b for a, b in zip(ps, ps[1:]))
    assert all(a <= b for a, b in zip(ds, ds[1:]))
    assert max(ds) <= F + 1e-6
    assert r.log[-1]["event"] == "done"
    # paths and mean agree with the reported value
    model = build_model(I, graph=formulation.split(":")[0], distance=formulation.split(":")[1])
    x, _ = complete_assignment(model, len(r.incumbent_mean), r.paths)
    assert extract_solution(model, x)[2] == pytest.approx(r.F)


def test_simplex_engine_agrees_with_highs():
    I = inst([0, 2], [1, -1])
    a = run(I, "arc:quadratic", lp_engine="simplex")
    b = run(I, "arc:quadratic")
    assert a.F == pytest.approx(b.F) == pytest.approx(brute_force_mean(I).F)


def test_deterministic():
    I = inst([2, -1, 0, 1], [0, 1, -2])
    a = run(I, "vertex:quadratic")
    b = run(I, "vertex:quadratic")
    assert (a.nodes, a.F, a.d, a.paths) == (b.nodes, b.F, b.d, b.paths)


def test_node_limit_reports_limit():
    I = inst([2, -1, 0, 1], [0, 1, -2, 2])
    r = run(I, "vertex:implicit", node_limit=3)
    assert r.status == "limit" and r.nodes == 3
    assert r.d <= r.p and r.gap >= 0


def test_log_file(tmp_path):
    path = tmp_path / "run.jsonl"
    run(inst([0, 1], [1, 1]), "arc:linear", log_path=str(path))
    events = [json.loads(line) for line in path.read_text().splitlines()]
    assert {"node", "incumbent", "done"} <= {e["event"] for e in events}
    node = next(e for e in events if e["event"] == "node")
    assert {"node_id", "depth", "bound", "action"} <= set(node)


def test_lp_relax_with_all_binaries_fixed():
    I = inst([0, 2, -1], [1, -2])
    best = brute_force_mean(I)
    model = build_model(I, graph="arc", distance="quadratic")
    x, F = complete_assignment(model, best.length, best.paths)
    fix = [(i, float(x[i])) for i in model.binaries()]
    value, _ = lp_relax(model, fixings=fix)
    assert value == pytest.approx(exact_value(model, x), abs=1e-6) == pytest.approx(best.F, abs=1e-6)


def test_root_relaxation_below_optimum():
    I = inst([0, 2, -1], [1, -2])
    F = brute_force_mean(I).F
    for f in FORMULATIONS:
        value, _ = lp_relax(build_model(I, graph=f.split(":")[0], distance=f.split(":")[1]))
        assert value <= F + 1e-7


def test_extract_rejects_inconsistent_assignment():
    I = inst([0, 2], [1, -1])
    model = build_model(I, graph="arc", distance="quadratic")
    best = brute_force_mean(I)
    x, _ = complete_assignment(model, best.length, best.paths)
    x[model.layout.d[0][(1, 1)]] += 1.0
    with pytest.raises(ConsistencyError):
        extract_solution(model, x)


# heuristic ----------------------------------------------------------------------

def test_heuristic_examples():
    r = primal_heuristic(inst([1, 2, 3], [1, 2, 3]), z0=[1, 2, 3])
    assert r.F == 0.0 and r.fixed_point
    z, F = primal_heuristic(inst([0, 0], [2, 2]), z0=[0, 2])
    assert F == pytest.approx(2.0)
    with pytest.raises(InfeasibleError):
        primal_heuristic(inst([1, 2, 3, 4], c=GlobalConstraint.sakoe_chiba(0)), z0=[1.0])


def test_heuristic_monotone():
    rng = np.random.default_rng(8)
    for _ in range(20):
        I = inst(*[rng.normal(size=rng.integers(2, 7)) for _ in range(3)])
        r = primal_heuristic(I, z0=rng.normal(size=rng.integers(1, 6)))
        assert all(a >= b - 1e-12 for a, b in zip(r.history, r.history[1:]))


def test_medoid():
    I = inst([0, 0, 0], [0, 0.1, 0], [5, 5, 5])
    assert medoid(I) in (0, 1)
    assert medoid(inst([1.0])) == 0
