import itertools

import numpy as np
import pytest

from dtwmean.warping import (DiagonalGrid, EnumerationCapError, GlobalConstraint, InfeasibleError,
                             WarpingError, WarpingPath, constraint_window, dtw, enumerate_paths,
                             enumerate_paths_to_column, is_compatible, path_cost)

NONE = GlobalConstraint.none()


def test_parse_and_label():
    assert GlobalConstraint.parse("none") == NONE
    assert GlobalConstraint.parse("sakoe-chiba:2").label() == "sakoe-chiba:2"
    c = GlobalConstraint.parse("itakura:1.1")
    assert c.label() == "itakura:1.1"
    assert GlobalConstraint.from_json(c.to_json()) == c
    for bad in ("itakura", "sakoe-chiba", "band:x", "diamond:3"):
        with pytest.raises((WarpingError, ValueError)):
            GlobalConstraint.parse(bad)


def test_windows():
    assert constraint_window(GlobalConstraint.sakoe_chiba(1), 3, 3, 2) == (1, 3)
    assert constraint_window(NONE, 5, 7, 4) == (1, 5)
    assert constraint_window(GlobalConstraint.itakura("1.5"), 4, 4, 1) == (1, 1)
    with pytest.raises(WarpingError):
        constraint_window(NONE, 3, 3, 4)


def test_itakura_window_matches_definition():
    from fractions import Fraction
    for sigma in ("1.1", "1.5", "2"):
        c = GlobalConstraint.itakura(sigma)
        sg = Fraction(sigma)
        for m, n in itertools.product(range(1, 8), repeat=2):
            for j in range(1, n + 1):
                want = [i for i in range(1, m + 1)
                        if 1 / sg <= Fraction(j, i) <= sg
                        and 1 / sg <= Fraction(n - j + 1, m - i + 1) <= sg]
                got = constraint_window(c, m, n, j)
                assert (got is None) == (not want)
                if want:
                    assert list(range(got[0], got[1] + 1)) == want


def test_compatibility():
    assert not is_compatible(GlobalConstraint.sakoe_chiba(5), 10, 18)
    assert not is_compatible(GlobalConstraint.itakura("1.5"), 10, 20)
    assert is_compatible(GlobalConstraint.itakura("1.1"), 10, 10)
    assert is_compatible(NONE, 1, 50)


def test_dtw_examples():
    r = dtw([0, 1, 2], [0, 2])
    assert r.distance == pytest.approx(1.0)
    assert r.path.vertices in (((1, 1), (2, 1), (3, 2)), ((1, 1), (2, 2), (3, 2)))
    same = dtw([3, 1, 4, 1], [3, 1, 4, 1])
    assert same.distance == 0.0
    assert same.path.vertices == ((1, 1), (2, 2), (3, 3), (4, 4))
    assert dtw([2.5], [-1.0]).distance == pytest.approx(3.5)


def test_dtw_infeasible():
    with pytest.raises(InfeasibleError):
        dtw([1, 2, 3, 4], [1, 2], GlobalConstraint.sakoe_chiba(1))
    with pytest.raises(WarpingError):
        dtw([], [1.0])


def test_dtw_matches_enumeration_small():
    rng = np.random.default_rng(3)
    for _ in range(40):
        m, n = rng.integers(1, 5, size=2)
        s, t = rng.normal(size=m), rng.normal(size=n)
        best = min(path_cost(s, t, p) for p in enumerate_paths(m, n))
        assert dtw(s, t).cost == pytest.approx(best, abs=1e-12)


def test_path_counts():
    assert len(enumerate_paths(2, 2)) == 3
    assert len(enumerate_paths(3, 3)) == 13
    assert len(enumerate_paths(2, 1)) == 1
    assert [p.vertices for p in enumerate_paths_to_column(1, 3, 2)] == [((1, 1), (1, 2))]
    assert [p.vertices for p in enumerate_paths_to_column(2, 2, 1)] == [((1, 1), (2, 1))]
    assert len(enumerate_paths_to_column(3, 3, 3)) == 13
    with pytest.raises(EnumerationCapError):
        enumerate_paths(30, 30, cap=20)


def test_warping_path_validation():
    with pytest.raises(WarpingError):
        WarpingPath(((1, 1), (3, 2)))
    with pytest.raises(WarpingError):
        WarpingPath(((2, 1), (2, 2)))
    p = WarpingPath(((1, 1), (2, 1), (2, 2), (3, 3)))
    assert p.end == (3, 3)
    assert p.column_rows(1) == (1, 2)
    assert p.transpose().vertices == ((1, 1), (1, 2), (2, 2), (3, 3))
    assert p.is_admissible(NONE, 3, 3)
    assert not p.is_admissible(GlobalConstraint.sakoe_chiba(0), 3, 3)


def test_grid_arcs():
    g = DiagonalGrid(2, 2)
    assert len(g.vertices()) == 4
    assert len(g.arcs()) == 5
    band = DiagonalGrid(3, 3, GlobalConstraint.sakoe_chiba(0))
    assert band.vertices() == [(1, 1), (2, 2), (3, 3)]
    assert band.arcs() == [((1, 1), (2, 2)), ((2, 2), (3, 3))]


def test_grid_every_vertex_on_some_path():
    c = GlobalConstraint.itakura("1.5")
    g = DiagonalGrid(4, 5, c, terminals=(3, 4, 5))
    on = set()
    for L in g.terminals:
        for p in enumerate_paths(4, L, c):
            on.update(p.vertices)
    assert set(g.vertices()) == on
