import itertools

import numpy as np
import pytest

from dtwmean import Instance, TimeSeries, brute_force_mean
from dtwmean.bounds import (BoundsError, bound_profile, bounds_report, eval_f, frechet_lb, lb_imp,
                            lb_sim, ub_imp, ub_sim)
from dtwmean.warping import GlobalConstraint


def inst(*series, c=GlobalConstraint.none()):
    return Instance(tuple(TimeSeries(s) for s in series), c)


def best_block_average(series):
    """Largest pooled average of one contiguous block per series, by enumeration."""
    blocks = [[(s[a:b].sum(), b - a) for a in range(len(s)) for b in range(a + 1, len(s) + 1)]
              for s in series]
    return max(sum(t for t, _ in choice) / sum(n for _, n in choice)
               for choice in itertools.product(*blocks))


def test_simple_bounds():
    assert ub_sim(inst([1, 3], [2])) == 3
    assert ub_sim(inst([-5])) == -5
    assert ub_sim(inst([0, 0], [0, 0])) == 0
    assert lb_sim(inst([1, 3], [2])) == 1


def test_eval_f_examples():
    assert eval_f(inst([1, 3]), 3) == pytest.approx(0)
    assert eval_f(inst([1, 3]), 0) == pytest.approx(4)
    assert eval_f(inst([1, 3]), 10) == pytest.approx(-7)


def test_improved_bound_examples():
    tol = 1e-9
    assert ub_imp(inst([1, 5], [3]), tol=tol) == pytest.approx(4, abs=2 * tol)
    assert ub_imp(inst([0], [4]), tol=tol) == pytest.approx(2, abs=2 * tol)
    assert ub_imp(inst([1, 3]), tol=tol) == pytest.approx(3, abs=2 * tol)
    with pytest.raises(BoundsError):
        ub_imp(inst([1.0]), tol=0)


def test_improved_bound_is_best_block_average():
    rng = np.random.default_rng(5)
    for _ in range(25):
        series = [rng.integers(-3, 4, size=rng.integers(1, 5)).astype(float) for _ in range(rng.integers(1, 4))]
        I = inst(*series)
        assert ub_imp(I) == pytest.approx(best_block_average(series), abs=1e-8)
        assert lb_imp(I) == pytest.approx(-best_block_average([-s for s in series]), abs=1e-8)


def test_profile_unconstrained_is_flat():
    I = inst([0, 1, 4], [2, -1])
    p = bound_profile(I)
    assert set(p.lb) == {lb_imp(I)}
    assert set(p.ub) == {ub_imp(I)}
    single = bound_profile(inst([0], [4]), N=1)
    assert single.lb[0] == pytest.approx(2) and single.ub[0] == pytest.approx(2)
    with pytest.raises(BoundsError):
        bound_profile(I, N=0)


def test_itakura_profile_narrower_at_boundary():
    a = [0, 0.5, 3, 1, -1, 0]
    b = [1, 2, 2.5, 0, -0.5, -1]
    free = bound_profile(inst(a, b), N=6)
    narrow = bound_profile(inst(a, b, c=GlobalConstraint.itakura("1.1")), N=6)
    for j in (1, 6):
        assert narrow.ub[j - 1] <= free.ub[j - 1] + 1e-9
        assert narrow.lb[j - 1] >= free.lb[j - 1] - 1e-9
    assert narrow.ub[0] - narrow.lb[0] < free.ub[0] - free.lb[0]


def test_frechet_lb_examples():
    I = inst([0], [4])
    assert frechet_lb(I, bound_profile(I, N=1)) == pytest.approx(4)
    I = inst([0, 0], [2, 2])
    assert frechet_lb(I, bound_profile(I)) <= brute_force_mean(I).F + 1e-9
    I = inst([1, 2], [2, 1])
    assert frechet_lb(I, bound_profile(I)) == 0.0


def test_report_shape():
    I = inst([0, 1, 2], [2, 0])
    rep = bounds_report(I, bound_profile(I))
    assert set(rep) == {"ub_sim", "lb_sim", "ub_imp", "lb_imp", "per_index", "frechet_lb"}
    assert [row["j"] for row in rep["per_index"]] == list(range(1, 4))
