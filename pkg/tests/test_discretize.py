import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quenchlab.core import PhiSpec, ProblemSpec
from quenchlab.discretize import (
    SingularFluxError,
    StateVector,
    build_grid,
    flux_balance,
    mass,
    rhs,
    rhs_general,
    rhs_heat,
)
from quenchlab.ic import example_A

UNIT = ProblemSpec(a=1.0, p=1.0, q=1.0)


def test_build_grid_examples():
    g = build_grid(0.125, 3)
    assert g.h == 1 / 32
    np.testing.assert_allclose(g.nodes, [0, 1 / 32, 1 / 16, 3 / 32, 1 / 8], rtol=0, atol=1e-17)
    g = build_grid(1.0, 9)
    assert len(g) == 11 and g.h == pytest.approx(0.1)
    assert build_grid(0.125, 124).h == pytest.approx(1e-3)
    assert build_grid(0.125, 124).nodes[-1] == 0.125


def test_state_vector_rejects_bad_input():
    with pytest.raises(ValueError):
        StateVector(0.0, np.array([0.1, 0.2, 0.3]))
    with pytest.raises(ValueError):
        StateVector(0.0, np.array([0.1, np.nan, 0.3, 0.4]))


def test_rhs_heat_constant_state():
    g = build_grid(1.0, 9)
    F = rhs_heat(np.full(11, 0.5), UNIT, g)
    np.testing.assert_array_equal(F[1:-1], 0.0)
    # left wall flux enters with the sign of an outward derivative u_x(0) = u^-p
    assert F[0] == pytest.approx(-0.4, abs=1e-15)
    assert F[-1] == pytest.approx(0.4, abs=1e-15)


def test_rhs_heat_second_difference_of_quadratic():
    spec, ic = example_A()
    g = build_grid(spec.a, 3)
    F = rhs_heat(ic(g.nodes), spec, g)
    assert F[2] == pytest.approx(7.8125e-3, rel=1e-12)


def test_rhs_general_r3_values():
    spec, ic = example_A()
    spec3 = ProblemSpec(spec.a, spec.p, spec.q, r=3.0)
    g = build_grid(spec.a, 3)
    F = rhs_general(ic(g.nodes), spec3, g)
    # 16 h^2 u0'(1/16): exact for a quadratic
    assert F[2] == pytest.approx(0.0703125, rel=1e-12)
    lin = 0.3 + 0.1 * g.nodes
    F = rhs_general(lin, spec3, g)
    np.testing.assert_allclose(F[1:-1], 0.0, atol=1e-15)


def test_rhs_rejects_singular_walls():
    g = build_grid(1.0, 9)
    u = np.linspace(0.0, 0.5, 11)
    with pytest.raises(SingularFluxError):
        rhs_heat(u, UNIT, g)
    with pytest.raises(SingularFluxError):
        flux_balance(np.linspace(0.5, 1.0, 11), UNIT)
    with pytest.raises(ValueError):
        rhs_heat(np.full(10, 0.5), UNIT, g)
    with pytest.raises(ValueError):
        rhs_heat(np.full(11, 0.5), ProblemSpec(1.0, 1.0, 1.0, r=3.0), g)


@given(seed=st.integers(0, 2**32 - 1), N=st.integers(3, 60))
def test_rhs_general_reduces_to_heat(seed, N):
    rng = np.random.default_rng(seed)
    g = build_grid(0.125, N)
    u = np.sort(rng.uniform(0.05, 0.95, N + 2))
    spec = ProblemSpec(0.125, 1.0, 0.9)
    a, b = rhs_heat(u, spec, g), rhs_general(u, spec, g)
    np.testing.assert_allclose(b, a, rtol=1e-14, atol=1e-14 * np.max(np.abs(a)))


def test_interior_consistency_order_two():
    # u = 0.3 + 0.2 sin(x): interior rows / h^2 -> u_xx
    errs = []
    for N in (19, 39, 79, 159):
        g = build_grid(1.0, N)
        u = 0.3 + 0.2 * np.sin(g.nodes)
        F = rhs_heat(u, UNIT, g)
        errs.append(np.max(np.abs(F[1:-1] / g.h**2 + 0.2 * np.sin(g.nodes[1:-1]))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.9)


def test_mass_examples():
    spec, ic = example_A()
    g = build_grid(spec.a, 999)
    # exact integral 1/32 + 1/32 + (4/3)(1/8)^3 = 0.0651041666...
    assert mass(ic(g.nodes), spec, g) == pytest.approx(0.065104166666666667, rel=1e-6)
    assert mass(np.full(len(g), 0.3), spec, g) == pytest.approx(0.3 * spec.a, rel=1e-14)
    powspec = ProblemSpec(spec.a, 1.0, 1.0, phi=PhiSpec("power", 0.5))
    assert mass(np.ones(len(g)), powspec, g) == pytest.approx(spec.a, rel=1e-14)


@pytest.mark.parametrize("r,uL,uR,expected", [
    (2.0, 0.5, 0.5, 0.0),
    (2.0, 0.25, 0.75, 0.0),
    (3.0, 0.5, 0.5, 0.0),
    (3.0, 0.5, 0.75, 12.0),
])
def test_flux_balance_examples(r, uL, uR, expected):
    spec = ProblemSpec(1.0, 1.0, 1.0, r=r)
    u = np.array([uL, 0.6, 0.6, uR])
    assert flux_balance(u, spec) == pytest.approx(expected, abs=1e-12)


def test_flux_balance_sign_for_concave_down_small_left():
    spec = ProblemSpec(0.125, 1.0, 1.0)
    assert flux_balance(np.array([0.1, 0.2, 0.25, 0.3]), spec) < 0.0


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1), r=st.sampled_from([2.0, 3.0]))
def test_discrete_mass_identity(seed, r):
    # h * sum of trapezoid-weighted F/h^2 equals the flux balance
    rng = np.random.default_rng(seed)
    g = build_grid(0.125, 30)
    spec = ProblemSpec(0.125, 1.0, 1.0, r=r)
    u = np.sort(rng.uniform(0.1, 0.9, len(g)))
    F = rhs(u, spec, g) / g.h**2
    w = np.ones(len(g))
    w[[0, -1]] = 0.5
    assert g.h * np.dot(w, F) == pytest.approx(flux_balance(u, spec), rel=1e-9, abs=1e-9)
