import subprocess
import sys

import numpy as np
import pytest

from smmport import kernels
from conftest import random_spd

HAVE_COMPILED = "cython" in kernels.available_backends()

needs_compiled = pytest.mark.skipif(
    not HAVE_COMPILED, reason="compiled extension not built"
)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
    assert "python" in kernels.available_backends()


@needs_compiled
def test_lcem_s_values_backend_parity():
    rng = np.random.default_rng(50)
    for _ in range(10):
        n, k, m = int(rng.integers(1, 5)), int(rng.integers(1, 6)), 257
        feats = rng.standard_normal((m, k))
        b_mat = rng.standard_normal((n, k))
        chol = np.linalg.cholesky(random_spd(rng, n))
        impls = kernels.available_backends()
        fast = kernels.lcem_s_values(feats, b_mat, chol, impl=impls["cython"])
        slow = kernels.lcem_s_values(feats, b_mat, chol, impl=impls["python"])
        np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=1e-15)
        assert np.all(fast >= 0.0)


@needs_compiled
def test_nw_sums_backend_parity():
    rng = np.random.default_rng(51)
    xs = rng.uniform(0.0, 5.0, 4000)
    ys = np.vstack([rng.standard_normal(4000), rng.uniform(0.0, 1.0, 4000)])
    grid = np.linspace(-0.5, 5.5, 37)
    impls = kernels.available_backends()
    den_f, num_f = kernels.nw_sums(xs, ys, grid, 0.25, impl=impls["cython"])
    den_p, num_p = kernels.nw_sums(xs, ys, grid, 0.25, impl=impls["python"])
    np.testing.assert_allclose(den_f, den_p, rtol=1e-12)
    np.testing.assert_allclose(num_f, num_p, rtol=1e-12, atol=1e-12)


def test_read_only_inputs_accepted():
    rng = np.random.default_rng(52)
    feats = rng.standard_normal((64, 3))
    b_mat = rng.standard_normal((2, 3))
    chol = np.linalg.cholesky(random_spd(rng, 2))
    for arr in (feats, b_mat, chol):
        arr.flags.writeable = False
    s = kernels.lcem_s_values(feats, b_mat, chol)
    assert s.shape == (64,)


def test_pure_python_env_override():
    code = (
        "import smmport.kernels as k; "
        "print(k.BACKEND)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"SMMPORT_PURE_PYTHON": "1", "PATH": "/usr/bin:/bin"},
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "python"
