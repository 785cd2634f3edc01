import importlib
import subprocess
import sys

import numpy as np
import pytest

from dtwmean import kernels
from dtwmean.warping import GlobalConstraint, column_bounds

BACKENDS = list(kernels.backends())


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
    assert "python" in BACKENDS


@pytest.mark.parametrize("backend", BACKENDS)
def test_dtw_matrix_agrees_with_reference(backend):
    rng = np.random.default_rng(0)
    for c in (GlobalConstraint.none(), GlobalConstraint.sakoe_chiba(1), GlobalConstraint.itakura("1.5")):
        for _ in range(20):
            m, n = rng.integers(2, 9, size=2)
            s, t = rng.normal(size=m), rng.normal(size=n)
            lo, hi = column_bounds(c, m, n)
            ref = kernels.dtw_matrix(s, t, lo, hi, backend="python")
            np.testing.assert_allclose(kernels.dtw_matrix(s, t, lo, hi, backend=backend), ref)


@pytest.mark.parametrize("backend", BACKENDS)
def test_interval_max(backend):
    vals = np.array([1.0, 3.0])
    assert kernels.interval_max(vals, 0, 1, 3.0, backend=backend) == pytest.approx(0.0)
    assert kernels.interval_max(vals, 0, 1, 0.0, backend=backend) == pytest.approx(4.0)
    assert kernels.interval_max(vals, 0, 1, 10.0, backend=backend) == pytest.approx(-7.0)
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = rng.normal(size=rng.integers(1, 12))
        a = int(rng.integers(0, len(v)))
        b = int(rng.integers(a, len(v)))
        level = float(rng.normal())
        brute = max(v[x:y].sum() - level * (y - x) for x in range(a, b + 1) for y in range(x + 1, b + 2))
        assert kernels.interval_max(v, a, b, level, backend=backend) == pytest.approx(brute)


def test_pure_python_switch():
    code = "import dtwmean.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"DTWMEAN_PURE_PYTHON": "1", "PATH": ""},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
