import numpy as np
import pytest

from dtwmean import Instance, TimeSeries
from dtwmean.oracle import OracleRefusal, brute_force_mean, frechet_value, optimal_z_for_paths
from dtwmean.warping import GlobalConstraint, WarpingError, WarpingPath, dtw, enumerate_paths


def inst(*series, c=GlobalConstraint.none()):
    return Instance(tuple(TimeSeries(s) for s in series), c)


def diag(n):
    return WarpingPath(tuple((i, i) for i in range(1, n + 1)))


def test_lemma_two_means():
    z, F = optimal_z_for_paths(inst([0], [4]), [diag(1), diag(1)])
    assert z.tolist() == [2.0] and F == pytest.approx(4.0)
    z, F = optimal_z_for_paths(inst([0, 0], [2, 2]), [diag(2), diag(2)])
    assert z.tolist() == [1.0, 1.0] and F == pytest.approx(2.0)
    z, F = optimal_z_for_paths(inst([3, 1, 4]), [diag(3)])
    assert z.tolist() == [3.0, 1.0, 4.0] and F == 0.0


def test_paths_must_share_terminal_column():
    with pytest.raises(WarpingError):
        optimal_z_for_paths(inst([0, 0], [1, 1]), [diag(2), WarpingPath(((1, 1), (2, 1)))])


def test_oracle_examples():
    r = brute_force_mean(inst([0], [4]))
    assert r.F == pytest.approx(4.0) and r.z.tolist() == [2.0]
    assert brute_force_mean(inst([0, 0], [2, 2]), max_n=2).F == pytest.approx(2.0)
    r = brute_force_mean(inst([1, -2, 0.5]))
    assert r.F == 0.0 and r.z.tolist() == [1.0, -2.0, 0.5]


def test_oracle_value_is_recomputed_and_locally_optimal():
    rng = np.random.default_rng(2)
    for _ in range(15):
        I = inst(*[rng.integers(-2, 3, size=rng.integers(2, 4)).astype(float) for _ in range(2)])
        r = brute_force_mean(I)
        assert r.F == pytest.approx(frechet_value(I, r.z.values, r.paths), abs=1e-12)
        # the stored paths are optimal alignments of the mean
        best = sum(dtw(s.values, r.z.values).cost for s in I.samples) / I.k
        assert best == pytest.approx(r.F, abs=1e-9)


def test_oracle_beats_every_sampled_mean():
    rng = np.random.default_rng(3)
    I = inst([0, 2, -1], [1, 1])
    F = brute_force_mean(I).F
    for _ in range(200):
        z = rng.uniform(-2, 3, size=rng.integers(1, 4))
        assert sum(dtw(s.values, z).cost for s in I.samples) / I.k >= F - 1e-12


def test_guard():
    with pytest.raises(OracleRefusal):
        brute_force_mean(inst([0.0] * 6, [1.0] * 6), guard=100)
