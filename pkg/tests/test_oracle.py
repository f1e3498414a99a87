import numpy as np
import pytest

from motgv.errors import InputError, UnsupportedFamilyError
from motgv.fields import GridField, cell_centres
from motgv.oracle import oracle_denoise, oracle_tgv
from motgv.phi import ExponentMap, PowerConstant, Tabulated, VariableExponent
from motgv.solver import SolverConfig, denoise_tgv
from motgv.tgv import TgvOptions, TgvWeights, tgv2_dual, tgv2_primal

ALPHA = TgvWeights(0.1, 0.1)


def test_constant_and_affine_data_are_fixed():
    f = GridField(np.full((4, 4), 0.3))
    res = oracle_denoise(f, PowerConstant(1.5), ALPHA)
    np.testing.assert_allclose(res.u_star.values, f.values, atol=1e-6)
    assert res.objective <= 1e-8
    h = 0.25
    x1, x2 = cell_centres((4, 4), h)
    g = GridField(0.1 + x1 - 0.5 * x2, h)
    res = oracle_denoise(g, VariableExponent(ExponentMap(np.full((4, 4), 1.0))), ALPHA)
    np.testing.assert_allclose(res.u_star.values, g.values, atol=1e-6)


def test_matches_iterative_solver_on_4x4(rng):
    f = GridField(rng.uniform(size=(4, 4)))
    phi = VariableExponent(ExponentMap(rng.choice([1.0, 2.0], size=(4, 4))))
    ref = oracle_denoise(f, phi, ALPHA)
    res = denoise_tgv(f, None, phi, ALPHA, SolverConfig(max_iters=20000, tol_gap=1e-7))
    assert abs(res.objective - ref.objective) <= 1e-4 * ref.objective


def test_oracle_tgv_matches_primal_and_dual(rng):
    u = GridField(rng.standard_normal((5, 5)))
    phi = VariableExponent(ExponentMap(rng.choice([1.0, 1.5, 2.0], size=(5, 5))))
    alpha = TgvWeights(1.0, 1.0)
    value, w = oracle_tgv(phi, alpha, u)
    assert w.channels == 2
    lower = tgv2_dual(phi, alpha, u, TgvOptions(tol=1e-8, max_iters=20000))
    upper = tgv2_primal(phi, alpha, u, TgvOptions(tol=1e-6, max_iters=20000)).value
    assert lower <= value * (1 + 1e-7)
    assert value <= upper * (1 + 1e-7)
    assert value == pytest.approx(lower, rel=1e-5)


def test_rejects_non_power_families_and_large_grids():
    tab = Tabulated([0.0, 1.0], [0.0, 1.0], terminal_slope=1.0)
    with pytest.raises(UnsupportedFamilyError):
        oracle_tgv(tab, ALPHA, GridField(np.zeros((3, 3))))
    with pytest.raises(InputError):
        oracle_denoise(GridField(np.zeros((17, 17))), PowerConstant(2.0), ALPHA)
