import numpy as np
import pytest

import searchgap as sg
from searchgap._backend import available_backends
from searchgap._kernels_py import MarchError

from conftest import NATIVES

BACKENDS = available_backends()
needs_compiled = pytest.mark.skipif(
    "compiled" not in BACKENDS, reason="compiled extension not built"
)


def _march_inputs(params=NATIVES, grid=2000):
    prod = params.productivity
    p = np.geomspace(prod.p_min, prod.p_cut, grid)
    sf = prod.sf(p)
    sf[0] = 1.0
    sq = (1.0 + params.frictions.k * sf) ** 2
    w_low = sg.lowest_wage(prod.p_min, params.reservation)
    return p, sq, params.frictions.k, params.reservation.mu, params.reservation.sigma, w_low


@needs_compiled
def test_march_kernels_agree():
    args = _march_inputs()
    out = {name: mod.march_wage_curve(*args) for name, mod in BACKENDS.items()}
    np.testing.assert_allclose(out["compiled"], out["python"], rtol=0, atol=1e-9)


@needs_compiled
def test_march_kernels_raise_same_error():
    p, sq, k, mu, sigma, w_low = _march_inputs(grid=2000)
    # an absurd w_low forces a non-increasing first step in both backends
    for mod in BACKENDS.values():
        with pytest.raises(MarchError, match="step"):
            mod.march_wage_curve(p, sq, k, mu, sigma, p[0] - 1e-9)


@needs_compiled
def test_quadrature_kernels_agree():
    rng = np.random.default_rng(5)
    n, m = 200, 64
    t = rng.uniform(0.5, 300.0, n)
    grid = np.linspace(40.0, 250.0, 512)
    fbar = np.linspace(1.0, 0.0, 512) ** 1.7
    nodes, weights = np.polynomial.legendre.leggauss(m)
    upper = rng.uniform(41.0, 249.0, n)
    half = (upper - 40.0) / 2.0
    node_b = (upper[:, None] + 40.0) / 2.0 + half[:, None] * nodes[None, :]
    pos = np.clip((node_b - grid[0]) / (grid[1] - grid[0]), 0.0, grid.size - 1.0)
    idx = np.minimum(pos.astype(np.int64), grid.size - 2)
    frac = pos - idx
    out = {
        name: mod.lu_mixture_integrals(t, node_b, idx, frac, half, weights,
                                       fbar, 0.09, 11.0, 58.0, 9.0)
        for name, mod in BACKENDS.items()
    }
    np.testing.assert_allclose(out["compiled"], out["python"], rtol=1e-12)


def test_pure_backend_env_override(tmp_path):
    import subprocess
    import sys

    code = "import searchgap; print(searchgap.BACKEND)"
    env_out = subprocess.run(
        [sys.executable, "-c", code],
        env={"SEARCHGAP_PURE_PYTHON": "1", "PATH": "/usr/bin:/bin:/usr/local/bin"},
        capture_output=True, text=True, check=True,
    )
    assert env_out.stdout.strip() == "python"
