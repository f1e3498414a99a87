"""Linear versus superlinear growth, seen through the anisotropic variation.

A field that is large on a few cells costs very different amounts under
``phi(t) = t`` (linear growth, the total-variation case) and under
``phi(t) = t^2 / 2``. The variation ``V`` is the dual-ball supremum
``sup{<psi, v> : rho_{phi*}(psi) <= 1}``; this script evaluates it, checks it
against projected gradient ascent and shows the factor-two sandwich with the
modular norm.

Run: python3 demos/01_growth_and_variation.py
"""

import numpy as np

from motgv import (
    ExponentMap,
    GridField,
    PowerConstant,
    VariableExponent,
    anisotropic_variation,
    eval_conjugate_numeric,
    modular_seminorm,
    oracle_variation,
)

rng = np.random.default_rng(0)

print("Conjugates: closed form vs numeric supremum")
for p in (1.0, 1.5, 2.0, 3.0):
    phi = PowerConstant(p)
    for t in (0.5, 2.0):
        closed = float(phi.conjugate_value(t))
        numeric, truncated = eval_conjugate_numeric(phi, None, t, return_flag=True)
        note = " (supremum not attained: +inf)" if truncated else ""
        print(f"  p={p:<4} t={t:<4} closed={closed:<10.6g} numeric={numeric:.6g}{note}")

# a field concentrated on a thin column versus the same mass spread out
n = 16
spike = np.zeros((2, n, n))
spike[0, :, n // 2] = n  # mass 1 on one column
spread = np.full((2, n, n), 0.0)
spread[0] = 1.0  # mass 1 spread evenly
print("\nVariation of two fields with equal L1 mass")
for name, values in (("concentrated", spike), ("spread", spread)):
    v = GridField(values)
    lin = anisotropic_variation(PowerConstant(1.0), v)
    quad = anisotropic_variation(PowerConstant(2.0), v)
    print(f"  {name:<12}  linear growth: {lin:8.4f}   quadratic growth: {quad:8.4f}")
print("  Linear growth only sees mass; quadratic growth penalises concentration.")

# mixed exponent map: linear on the left half
p = np.where(np.arange(n)[None, :] < n // 2, 1.0, 2.0) * np.ones((n, 1))
phi = VariableExponent(ExponentMap(p))
v = GridField(rng.standard_normal((2, n, n)))
exact = anisotropic_variation(phi, v)
ascent = oracle_variation(phi, v, iters=300)
semi = modular_seminorm(phi, v)
print(f"\nMixed exponents: V = {exact:.8f}, projected ascent reaches {ascent:.8f}")
print(f"Sandwich: {semi:.5f} <= {exact:.5f} <= {2 * semi:.5f}")
