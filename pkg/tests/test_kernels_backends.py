"""Parity between the compiled kernel backend and the NumPy fallback."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from cecap import Channel, build_polar_grid
from cecap._kernels import _ref, backend_name

try:
    from cecap._kernels import _fast
except ImportError:
    _fast = None

needs_fast = pytest.mark.skipif(_fast is None, reason="compiled extension not built")


def random_inputs(seed):
    rng = np.random.default_rng(seed)
    lam = float(rng.uniform(1.1, 6.0))
    radius = float(rng.uniform(0.1, 2.0))
    grid = build_polar_grid(Channel(lam=lam, radius=radius))
    n = int(rng.integers(2, 7))
    thetas = np.sort(rng.uniform(0.0, 2.0 * math.pi, n))
    probs = rng.dirichlet(np.ones(n))
    return grid, thetas, probs, lam, radius


def test_backend_name_is_known():
    assert backend_name() in ("fast", "ref")


@needs_fast
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_mixture_log_pdf_grid_parity(seed):
    grid, thetas, probs, lam, radius = random_inputs(seed)
    f_a, logf_a = _fast.mixture_log_pdf_grid(
        grid.u_nodes, grid.psi_nodes, thetas, probs, lam, radius
    )
    f_b, logf_b = _ref.mixture_log_pdf_grid(
        grid.u_nodes, grid.psi_nodes, thetas, probs, lam, radius
    )
    np.testing.assert_allclose(f_a, f_b, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(logf_a, logf_b, rtol=1e-12, atol=1e-10)


@needs_fast
@pytest.mark.parametrize("seed", [3, 4])
def test_entropy_profile_parity(seed):
    grid, thetas, probs, lam, radius = random_inputs(seed)
    _, logf = _ref.mixture_log_pdf_grid(
        grid.u_nodes, grid.psi_nodes, thetas, probs, lam, radius
    )
    eval_angles = np.linspace(0.0, 2.0 * math.pi, 37)
    a = _fast.entropy_profile(
        grid.u_nodes, grid.v_weights, grid.psi_nodes, grid.psi_weights,
        logf, eval_angles, lam, radius,
    )
    b = _ref.entropy_profile(
        grid.u_nodes, grid.v_weights, grid.psi_nodes, grid.psi_weights,
        logf, eval_angles, lam, radius,
    )
    np.testing.assert_allclose(a, b, rtol=1e-12)


@needs_fast
@pytest.mark.parametrize("seed", [5, 6])
def test_grid_entropy_parity(seed):
    grid, thetas, probs, lam, radius = random_inputs(seed)
    f, logf = _ref.mixture_log_pdf_grid(
        grid.u_nodes, grid.psi_nodes, thetas, probs, lam, radius
    )
    a = _fast.grid_entropy(grid.v_weights, grid.psi_weights, f, logf)
    b = _ref.grid_entropy(grid.v_weights, grid.psi_weights, f, logf)
    assert math.isclose(a, b, rel_tol=1e-12)


@needs_fast
@pytest.mark.parametrize("seed", [7, 8])
def test_sphere_log_pdf_2_parity(seed):
    rng = np.random.default_rng(seed)
    y1 = rng.normal(0.0, 3.0, 500)
    y2 = rng.normal(0.0, 3.0, 500)
    a = _fast.sphere_log_pdf_2(y1, y2, 2.0, 1.0, 4.0, 512)
    b = _ref.sphere_log_pdf_2(y1, y2, 2.0, 1.0, 4.0, 512)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_fast
@pytest.mark.parametrize("seed", [9, 10])
def test_sphere_log_pdf_3_parity(seed):
    rng = np.random.default_rng(seed)
    y = rng.normal(0.0, 3.0, (400, 3))
    mu, wmu = np.polynomial.legendre.leggauss(48)
    a = _fast.sphere_log_pdf_3(y, (2.0, 1.5, 1.0), 3.0, mu, wmu, 96)
    b = _ref.sphere_log_pdf_3(y, (2.0, 1.5, 1.0), 3.0, mu, wmu, 96)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_fast
def test_log_floor_matches_in_far_tail():
    # both backends must clamp underflowed densities at the same floor
    u = np.array([60.0])
    psi = np.array([0.0])
    thetas = np.array([math.pi])
    probs = np.array([1.0])
    _, logf_a = _fast.mixture_log_pdf_grid(u, psi, thetas, probs, 2.0, 1.0)
    _, logf_b = _ref.mixture_log_pdf_grid(u, psi, thetas, probs, 2.0, 1.0)
    assert logf_a[0, 0] == logf_b[0, 0] == math.log(1e-300)


def _backend_in_subprocess(env_value):
    env = dict(os.environ)
    if env_value is None:
        env.pop("CECAP_BACKEND", None)
    else:
        env["CECAP_BACKEND"] = env_value
    out = subprocess.run(
        [sys.executable, "-c",
         "from cecap._kernels import backend_name; print(backend_name())"],
        capture_output=True, text=True, env=env, check=True,
    )
    return out.stdout.strip()


def test_env_forces_reference_backend():
    assert _backend_in_subprocess("ref") == "ref"


@needs_fast
def test_env_forces_fast_backend():
    assert _backend_in_subprocess("fast") == "fast"
