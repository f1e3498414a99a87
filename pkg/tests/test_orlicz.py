import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from motgv.errors import DimensionError
from motgv.fields import GridField
from motgv.orlicz import (
    ModularValue,
    anisotropic_variation,
    dual_modular,
    luxemburg_norm,
    modular,
    modular_seminorm,
    oracle_variation,
)
from motgv.phi import ExponentMap, PowerConstant, VariableExponent

finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
vector_fields = arrays(np.float64, (2, 4, 4), elements=finite).filter(lambda a: np.abs(a).max() > 1e-3)


def half_and_half(shape=(4, 4)):
    p = np.full(shape, 2.0)
    p[:, : shape[1] // 2] = 1.0
    return VariableExponent(ExponentMap(p))


def test_modular_examples():
    ones = GridField(np.ones((4, 4)))  # total measure 1
    assert modular(PowerConstant(2.0), ones).value == pytest.approx(0.5)
    assert modular(PowerConstant(2.0), GridField(np.zeros((4, 4)))).value == 0.0
    assert modular(half_and_half(), ones).value == pytest.approx(0.75)


def test_modular_value_flags_infinity():
    assert ModularValue.of(np.inf).finite_flag is False
    assert ModularValue.of(1.0).finite_flag is True
    tiny_y = VariableExponent(ExponentMap(np.ones((2, 2))))
    star = tiny_y.conjugate()
    assert not modular(star, GridField(np.full((2, 2), 2.0))).finite_flag


def test_modular_dimension_mismatch():
    with pytest.raises(DimensionError):
        modular(half_and_half((4, 4)), GridField(np.ones((3, 4))))


def test_luxemburg_examples():
    c = 3.0
    v = GridField(np.full((4, 4), c))
    assert luxemburg_norm(PowerConstant(2.0), v) == pytest.approx(c / np.sqrt(2), rel=1e-9)
    assert luxemburg_norm(PowerConstant(2.0), GridField(np.zeros((4, 4)))) == 0.0
    rng = np.random.default_rng(0)
    w = GridField(rng.standard_normal((2, 5, 5)))
    mass = float(np.sum(w.magnitude()) * w.cell_measure)
    assert luxemburg_norm(PowerConstant(1.0), w) == pytest.approx(mass, rel=1e-9)


@given(vector_fields)
def test_luxemburg_unit_ball(values):
    phi = half_and_half()
    v = GridField(values)
    lam = luxemburg_norm(phi, v)
    assert modular(phi, v / lam).value <= 1.0 + 1e-9


def test_variation_examples(rng):
    v = GridField(rng.standard_normal((3, 6, 6)))
    assert anisotropic_variation(PowerConstant(2.0), v) == pytest.approx(np.sqrt(2) * v.norm(), rel=1e-10)
    mass = float(np.sum(v.magnitude()) * v.cell_measure)
    assert anisotropic_variation(PowerConstant(1.0), v) == pytest.approx(mass, rel=1e-12)
    assert anisotropic_variation(PowerConstant(1.0), GridField(np.zeros((3, 6, 6)))) == 0.0


def test_variation_matches_ascent_oracle(rng):
    phi = VariableExponent(ExponentMap(rng.choice([1.0, 1.5, 2.0], size=(4, 4))))
    v = GridField(rng.standard_normal((2, 4, 4)))
    exact, info = anisotropic_variation(phi, v, return_info=True)
    lower = oracle_variation(phi, v, iters=300)
    assert lower <= exact * (1 + 1e-9)
    assert lower == pytest.approx(exact, rel=1e-4)
    # the returned certificate attains the value and is feasible
    psi = info["psi"]
    assert psi.inner(v) == pytest.approx(exact, rel=1e-8)
    assert modular(phi.conjugate(), psi).value <= 1 + 1e-8


def test_oracle_variation_examples(rng):
    v = GridField(rng.standard_normal((2, 4, 4)))
    mass = float(np.sum(v.magnitude()) * v.cell_measure)
    assert oracle_variation(PowerConstant(1.0), v, iters=50) == pytest.approx(mass, abs=1e-6)
    assert oracle_variation(PowerConstant(2.0), v, iters=200) == pytest.approx(np.sqrt(2) * v.norm(), rel=1e-4)
    assert oracle_variation(PowerConstant(2.0), GridField(np.zeros((2, 4, 4)))) == 0.0
    assert oracle_variation(half_and_half(), v, iters=5) <= oracle_variation(half_and_half(), v, iters=50)


def test_dual_modular_examples(rng):
    v = GridField(rng.standard_normal((2, 4, 4)))
    assert dual_modular(PowerConstant(2.0), v).value == modular(PowerConstant(2.0), v).value
    assert dual_modular(PowerConstant(2.0), GridField(np.zeros((4, 4)))).value == 0.0
    assert dual_modular(PowerConstant(1.0), GridField(np.full((4, 4), 2.0))).value == pytest.approx(2.0)


def test_modular_seminorm_examples(rng):
    v = GridField(rng.standard_normal((2, 4, 4)))
    v = v / (np.sqrt(2) * v.norm())
    val = modular_seminorm(PowerConstant(2.0), v)
    assert 0.5 <= val <= 1.0
    assert modular_seminorm(PowerConstant(2.0), GridField(np.zeros((4, 4)))) == 0.0


@given(vector_fields, vector_fields, st.floats(min_value=-4, max_value=4))
def test_seminorm_axioms(a, b, c):
    phi = half_and_half()
    va, vb = GridField(a), GridField(b)
    Va, Vb = anisotropic_variation(phi, va), anisotropic_variation(phi, vb)
    assert anisotropic_variation(phi, c * va) == pytest.approx(abs(c) * Va, rel=1e-8, abs=1e-12)
    assert anisotropic_variation(phi, va + vb) <= Va + Vb + 1e-8 * (Va + Vb)
    la = luxemburg_norm(phi, va)
    assert luxemburg_norm(phi, c * va) == pytest.approx(abs(c) * la, rel=1e-8, abs=1e-12)
    assert luxemburg_norm(phi, va + vb) <= la + luxemburg_norm(phi, vb) + 1e-8 * (Va + Vb)


@given(vector_fields)
def test_sandwich(a):
    phi = half_and_half()
    v = GridField(a)
    semi = modular_seminorm(phi, v)
    V = anisotropic_variation(phi, v)
    assert semi <= V * (1 + 1e-8)
    assert V <= 2 * semi * (1 + 1e-8)


@given(vector_fields, vector_fields)
def test_holder_pairing(a, b):
    # <psi, v> <= V(v) * ||psi||_{phi*}
    phi = half_and_half()
    v, psi = GridField(a), GridField(b)
    assert psi.inner(v) <= anisotropic_variation(phi, v) * luxemburg_norm(phi.conjugate(), psi) * (1 + 1e-8) + 1e-12
