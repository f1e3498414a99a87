import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from motgv.errors import InputError
from motgv.fields import GridField
from motgv.orlicz import modular
from motgv.phi import ExponentMap, PowerConstant, VariableExponent
from motgv.prox import pointwise_prox_conjugate, project_luxemburg_ball


def test_pointwise_prox_examples():
    assert pointwise_prox_conjugate(PowerConstant(1.0), None, 2.0, 1.0, 1.0) == 1.0
    assert pointwise_prox_conjugate(PowerConstant(2.0), None, 3.0, 1.0, 1.0) == pytest.approx(1.5)
    # s + 0.5 s^2 = 1
    expected = -1.0 + np.sqrt(3.0)
    assert pointwise_prox_conjugate(PowerConstant(1.5), None, 1.0, 0.5, 1.0) == pytest.approx(expected, abs=1e-12)


def test_pointwise_prox_rejects_bad_arguments():
    with pytest.raises(InputError):
        pointwise_prox_conjugate(PowerConstant(2.0), None, 1.0, 0.0, 1.0)
    with pytest.raises(InputError):
        pointwise_prox_conjugate(PowerConstant(2.0), None, -1.0, 1.0, 1.0)


@given(
    st.floats(min_value=1.05, max_value=8.0),
    st.floats(min_value=0.0, max_value=50.0),
    st.floats(min_value=1e-3, max_value=100.0),
    st.floats(min_value=0.05, max_value=10.0),
)
def test_pointwise_prox_optimality(p, z, mu, alpha):
    phi = PowerConstant(p)
    s = pointwise_prox_conjugate(phi, None, z, mu, alpha)
    assert 0.0 <= s <= z + 1e-12
    # first-order condition s + mu/alpha * (s/alpha)^(q-1) = z
    q = p / (p - 1.0)
    residual = s + mu / alpha * (s / alpha) ** (q - 1.0) - z
    assert abs(residual) <= 1e-9 * max(1.0, z)


def mixed_phi(shape=(5, 5), seed=0):
    rng = np.random.default_rng(seed)
    return VariableExponent(ExponentMap(rng.choice([1.0, 1.5, 2.0, 3.0], size=shape)))


def test_projection_examples(rng):
    phi = mixed_phi()
    small = GridField(1e-3 * rng.standard_normal((3, 5, 5)))
    assert project_luxemburg_ball(phi, small, 1.0) is not small
    np.testing.assert_array_equal(project_luxemburg_ball(phi, small, 1.0).values, small.values)
    # linear-growth cells: magnitude clamp at alpha
    big = GridField(10 * rng.standard_normal((2, 5, 5)))
    out = project_luxemburg_ball(PowerConstant(1.0), big, 0.7)
    np.testing.assert_allclose(out.magnitude(), np.minimum(big.magnitude(), 0.7), rtol=1e-12)
    # p = 2 on a measure-one grid: radial scaling onto radius sqrt(2) alpha
    out = project_luxemburg_ball(PowerConstant(2.0), big, 0.7)
    np.testing.assert_allclose(out.values, big.values * (np.sqrt(2) * 0.7 / big.norm()), rtol=1e-8)


fields = arrays(np.float64, (2, 5, 5), elements=st.floats(min_value=-20, max_value=20))


@given(fields, st.floats(min_value=0.1, max_value=3.0))
def test_projection_is_feasible_and_preserves_direction(values, alpha):
    phi = mixed_phi()
    psi = GridField(values)
    out = project_luxemburg_ball(phi, psi, alpha)
    assert modular(phi.conjugate(), out / alpha).value <= 1 + 1e-8
    # direction is kept: out = c * psi cell-wise with 0 <= c <= 1
    cross = out.values[0] * psi.values[1] - out.values[1] * psi.values[0]
    np.testing.assert_allclose(cross, 0.0, atol=1e-9 * (1 + np.abs(values).max() ** 2))
    assert np.all(out.magnitude() <= psi.magnitude() + 1e-12)


@given(fields, fields)
def test_projection_is_nonexpansive(a, b):
    phi = mixed_phi()
    pa = project_luxemburg_ball(phi, GridField(a), 1.0)
    pb = project_luxemburg_ball(phi, GridField(b), 1.0)
    assert (pa - pb).norm() <= GridField(a - b).norm() * (1 + 1e-8) + 1e-10


def test_projection_minimises_distance(rng):
    # compare with random feasible competitors
    phi = mixed_phi()
    psi = GridField(5 * rng.standard_normal((2, 5, 5)))
    out = project_luxemburg_ball(phi, psi, 1.0)
    best = (out - psi).norm()
    for _ in range(200):
        cand = GridField(rng.standard_normal((2, 5, 5)))
        cand = project_luxemburg_ball(phi, cand, 1.0)
        mix = 0.5 * (cand + out)
        assert (mix - psi).norm() >= best - 1e-9
