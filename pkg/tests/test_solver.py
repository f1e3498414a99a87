import numpy as np
import pytest

from motgv.errors import ConfigError, InputError, NumericError
from motgv.fields import GridField, cell_centres, norm2
from motgv.grid_ops import OperatorPair, blur_operator, identity_operator
from motgv.oracle import oracle_denoise
from motgv.phi import ExponentMap, PowerConstant, VariableExponent
from motgv.solver import (
    SolverConfig,
    affine_projection,
    check_affine_injective,
    denoise_energy,
    denoise_tgv,
    stability_experiment,
    write_trace,
)
from motgv.tgv import TgvOptions, TgvWeights, tgv2_dual

SMALL = TgvWeights(0.05, 0.05)


def mixed(shape, seed=0):
    rng = np.random.default_rng(seed)
    return VariableExponent(ExponentMap(rng.choice([1.0, 1.5, 2.0], size=shape)))


def affine_image(n, a=0.2, b=0.5, c=-0.3):
    h = 1.0 / n
    x1, x2 = cell_centres((n, n), h)
    return GridField(a + b * x1 + c * x2, h)


def test_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(max_iters=0)
    with pytest.raises(ConfigError):
        SolverConfig(tol_gap=0.0)
    with pytest.raises(ConfigError):
        SolverConfig(tau=-1.0)


def test_step_size_invariant_is_enforced():
    f = affine_image(6)
    with pytest.raises(ConfigError):
        denoise_tgv(f, None, PowerConstant(2.0), SMALL, SolverConfig(tau=1.0, sigma=1.0))


def test_non_finite_data_raises_numeric_error():
    values = np.zeros((5, 5))
    values[2, 2] = np.nan
    with pytest.raises(NumericError) as info:
        denoise_tgv(GridField(values), None, PowerConstant(2.0), SMALL, SolverConfig(max_iters=20))
    assert info.value.iteration == 1


def test_affine_datum_is_reproduced():
    f = affine_image(8)
    res = denoise_tgv(f, identity_operator(f.shape, f.h), mixed((8, 8)), TgvWeights(1.0, 1.0))
    np.testing.assert_allclose(res.u_star.values, f.values, atol=1e-6)
    assert res.converged


def test_minimiser_beats_feasible_competitors(rng):
    n = 8
    clean = affine_image(n)
    f = GridField(clean.values + 0.1 * rng.standard_normal((n, n)), clean.h)
    phi = PowerConstant(1.0)
    alpha = TgvWeights(0.05, 0.05)
    cfg = SolverConfig(max_iters=50000, tol_gap=1e-8)
    res = denoise_tgv(f, None, phi, alpha, cfg)
    # a converged run is within the certified relative gap of the true minimum
    assert res.converged
    slack = 1.0 + cfg.tol_gap
    # energy at u = f is TGV(f), bounded below by the certified dual value
    assert res.objective <= tgv2_dual(phi, alpha, f, TgvOptions(tol=1e-6)) * slack
    affine, _ = affine_projection(f)
    assert res.objective <= 0.5 * norm2(affine.values - f.values, f.h) ** 2 * slack


def test_traces_and_stopping(rng):
    f = GridField(rng.uniform(size=(6, 6)))
    cfg = SolverConfig(max_iters=400, tol_gap=1e-12, eval_every=10)
    res = denoise_tgv(f, None, mixed((6, 6)), SMALL, cfg)
    assert len(res.energy_trace) == len(res.gap_trace) == len(res.trace_iterations)
    assert all(b <= a + 1e-9 for a, b in zip(res.energy_trace[1:], res.energy_trace[2:]))
    assert res.iters_used == cfg.max_iters and not res.converged
    # the objective reported is the energy of the returned pair
    energy = denoise_energy(mixed((6, 6)), SMALL, f.values, res.u_star.values, res.w_star.values, f.h)
    assert energy == pytest.approx(res.objective, rel=1e-12)
    done = denoise_tgv(f, None, mixed((6, 6)), SMALL, SolverConfig(max_iters=20000, tol_gap=1e-4))
    assert done.converged and done.gap_trace[-1] <= 1e-4


def test_matches_oracle_and_fixed_point(rng):
    phi = mixed((6, 6), seed=11)
    f = GridField(rng.uniform(size=(6, 6)))
    ref = oracle_denoise(f, phi, SMALL)
    res = denoise_tgv(f, None, phi, SMALL, SolverConfig(max_iters=20000, tol_gap=1e-6))
    assert abs(res.objective - ref.objective) / ref.objective <= 1e-4
    again = denoise_tgv(f, None, phi, SMALL, SolverConfig(max_iters=100), u0=ref.u_star, w0=ref.w_star)
    assert abs(again.objective - ref.objective) <= 1e-8


def test_oracle_mode_delegates(rng):
    f = GridField(rng.uniform(size=(4, 4)))
    res = denoise_tgv(f, None, PowerConstant(2.0), SMALL, SolverConfig(oracle_mode=True))
    ref = oracle_denoise(f, PowerConstant(2.0), SMALL)
    assert res.objective == pytest.approx(ref.objective, rel=1e-9)


def test_blurred_data_matches_oracle(rng):
    n = 6
    K = blur_operator((n, n), 0.8)
    phi = mixed((n, n), seed=4)
    f = GridField(K.forward(rng.uniform(size=(n, n))) + 0.02 * rng.standard_normal((n, n)))
    ref = oracle_denoise(f, phi, SMALL, K=K)
    res = denoise_tgv(f, K, phi, SMALL, SolverConfig(max_iters=20000, tol_gap=1e-7))
    assert res.objective >= ref.objective * (1 - 1e-7)
    assert abs(res.objective - ref.objective) / ref.objective <= 1e-4


def test_operator_must_see_affine_functions():
    zero = OperatorPair(lambda x: 0 * x, lambda y: 0 * y, (5, 5), 0.2, 0.0, "zero")
    with pytest.raises(InputError):
        check_affine_injective(zero, (5, 5), 0.2)
    with pytest.raises(InputError):
        denoise_tgv(GridField(np.zeros((5, 5))), zero, PowerConstant(2.0), SMALL)
    check_affine_injective(blur_operator((5, 5), 1.0), (5, 5), 0.2)


def test_affine_projection_examples():
    f = affine_image(7)
    aff, res = affine_projection(f)
    np.testing.assert_allclose(aff.values, f.values, atol=1e-12)
    np.testing.assert_allclose(res.values, 0.0, atol=1e-12)
    n = 8
    h = 1.0 / n
    x1, x2 = cell_centres((n, n), h)
    aff, res = affine_projection(GridField(x1**2, h))
    # no dependence on x2 by symmetry
    np.testing.assert_allclose(np.diff(aff.values, axis=0), 0.0, atol=1e-12)
    for basis in (np.ones_like(x1), x1, x2):
        assert abs(np.sum(res.values * basis)) <= 1e-12
    again, _ = affine_projection(aff)
    np.testing.assert_allclose(again.values, aff.values, atol=1e-12)


def _eliminate(A, b):
    # textbook Gaussian elimination with partial pivoting
    A = [list(map(float, row)) + [float(v)] for row, v in zip(A, b)]
    n = len(A)
    for i in range(n):
        piv = max(range(i, n), key=lambda r: abs(A[r][i]))
        A[i], A[piv] = A[piv], A[i]
        for r in range(i + 1, n):
            m = A[r][i] / A[i][i]
            A[r] = [x - m * y for x, y in zip(A[r], A[i])]
    x = [0.0] * n
    for i in reversed(range(n)):
        x[i] = (A[i][n] - sum(A[i][k] * x[k] for k in range(i + 1, n))) / A[i][i]
    return x


def test_affine_projection_three_by_three():
    values = np.array([[3.0, 1.0, 4.0], [1.0, 5.0, 9.0], [2.0, 6.0, 5.0]])
    h = 1.0 / 3
    x1, x2 = cell_centres((3, 3), h)
    basis = [np.ones(9), x1.ravel(), x2.ravel()]
    gram = [[float(np.dot(a, b)) for b in basis] for a in basis]
    rhs = [float(np.dot(a, values.ravel())) for a in basis]
    c = _eliminate(gram, rhs)
    expected = c[0] + c[1] * x1 + c[2] * x2
    aff, _ = affine_projection(GridField(values, h))
    np.testing.assert_allclose(aff.values, expected, atol=1e-12)


def test_affine_projection_degenerate_grid():
    with pytest.raises(InputError):
        affine_projection(GridField(np.ones((1, 6))))


def test_stability_small_sweep(tmp_path):
    n = 6
    h = 1.0 / n
    x1, x2 = cell_centres((n, n), h)
    f = GridField(np.where(x1 > 0.5, 1.0, 0.0) + 0.3 * x2, h)
    phi = VariableExponent(ExponentMap(np.where(np.abs(x1 - 0.5) < 0.25, 1.0, 2.0)))
    rep = stability_experiment(f, [0.2, 0.1, 0.05, 0.0], phi, SMALL, SolverConfig(max_iters=20000, tol_gap=1e-9))
    assert rep.objective_differences[-1] == 0.0 and rep.solution_differences[-1] == 0.0
    assert rep.passed
    assert rep.objective_differences[1] < rep.objective_differences[0]
    assert rep.orientation in (1.0, -1.0)
    text = rep.to_csv(tmp_path / "stab.csv")
    assert text.splitlines()[0] == "delta,objective_difference,solution_difference"
    assert "non-increasing" in rep.to_text()
    with pytest.raises(InputError):
        stability_experiment(f, [0.1, 0.2], phi, SMALL)


def test_write_trace(tmp_path):
    path = tmp_path / "t.txt"
    write_trace(path, [3.0, 2.5], [0, 10])
    assert path.read_text().splitlines() == ["0 3.0", "10 2.5"]
