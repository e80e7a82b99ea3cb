import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpdsplit.errors import SingularFieldError
from cpdsplit.fields import (PROBLEM_NAMES, ElectricField, MagneticField, ProblemSpec, catalog,
                             constant_field, coulomb_potential, e_field, get_problem, potential,
                             potential_gradient, scaled_B, zero_potential)

E_P1_AT_X0 = (0.0, 0.9851853368415734, 0.09851853368415734)


def central_grad(u, x, d=1e-6):
    g = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = d
        g[i] = (u(*(x + e)) - u(*(x - e))) / (2 * d)
    return g


def test_catalog_contents():
    p = catalog()
    assert [q.name for q in p] == list(PROBLEM_NAMES)
    assert [q.q for q in p] == [2.0, 2.0, 1.5, 1.0]
    assert p[0].uniform and not any(q.uniform for q in p[1:])
    assert p[0].x0 == (0.0, 1.0, 0.1)
    assert p[0].v0 == (0.09, 0.05, 0.2)
    for q in p[1:]:
        assert q.x0 == (1 / 6, 1 / 8, 1 / 4)
        assert q.v0 == (1 / 5, 1 / 3, 1 / 2)
    assert [q.electric.name for q in p] == ["coulomb", "coulomb", "poly", "sinprod"]


def test_get_problem_unknown():
    with pytest.raises(KeyError):
        get_problem("p9")


@pytest.mark.parametrize("eps", [1.0, 2.0 ** -4, 2.0 ** -10])
def test_uniform_field_is_constant(eps):
    p1 = get_problem("p1-uniform")
    for x in [(0, 0, 0), (3, -2, 7), (1e3, 0, -1e3)]:
        assert tuple(scaled_B(p1, eps, x)) == (1.0, 0.0, 0.5)


def test_trig_field_at_origin():
    for name in PROBLEM_NAMES[1:]:
        assert tuple(scaled_B(get_problem(name), 0.5, (0, 0, 0))) == (1.0, 1.5, 1.5)


def test_trig_field_uses_eps_power():
    p3 = get_problem("p3-q15")
    x = np.array([0.3, -0.7, 1.1])
    y = 0.25 ** 1.5 * x
    expected = (1 - math.sin(y[1]) / 2, 1 + math.cos(y[2]) / 2, 1 + math.cos(y[0]) / 2)
    np.testing.assert_allclose(scaled_B(p3, 0.25, x), expected, rtol=1e-15)


@pytest.mark.parametrize("eps", [0.0, -0.1, 1.5])
def test_scaled_B_rejects_bad_eps(eps):
    with pytest.raises(ValueError):
        scaled_B(get_problem("p2-q2"), eps, (0, 0, 0))


def test_coulomb_field_value():
    p1 = get_problem("p1-uniform")
    np.testing.assert_allclose(e_field(p1, (0, 1, 0.1)), E_P1_AT_X0, rtol=1e-15)
    np.testing.assert_allclose(e_field(p1, (0, 1, 0.1)), -central_grad(p1.electric.potential, np.array([0, 1, 0.1])),
                               rtol=1e-8)


def test_poly_field_vanishes_at_origin():
    assert tuple(e_field(get_problem("p3-q15"), (0, 0, 0))) == (0.0, 0.0, 0.0)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_sinprod_field_on_plane(x2, x3):
    e = e_field(get_problem("p4-q1"), (0.0, x2, x3))
    assert e[0] == pytest.approx(0.5 * math.sin(x2) * math.sin(x3), abs=1e-16)
    assert e[1] == 0.0 and e[2] == 0.0


@pytest.mark.parametrize("name", PROBLEM_NAMES)
def test_gradients_match_central_differences(name):
    p = get_problem(name)
    rng = np.random.default_rng(7)
    for _ in range(100):
        x = rng.uniform(-1.5, 1.5, 3)
        if np.linalg.norm(x) < 0.3:
            continue
        g = potential_gradient(p, x)
        fd = central_grad(p.electric.potential, x)
        assert np.abs(g - fd).max() <= 1e-6 * max(1.0, np.abs(g).max())
        np.testing.assert_array_equal(e_field(p, x), -g)


def test_coulomb_singularity_is_an_error():
    p1 = get_problem("p1-uniform")
    for fn in (e_field, potential, potential_gradient):
        with pytest.raises(SingularFieldError):
            fn(p1, (0.0, 0.0, 0.0))


def test_singular_error_is_value_error():
    assert issubclass(SingularFieldError, ValueError)


def test_problem_validation():
    b, e = constant_field((0, 0, 1)), zero_potential()
    with pytest.raises(ValueError):
        ProblemSpec("bad-q", b, e, 0.5, (0, 0, 0), (0, 0, 0))
    with pytest.raises(ValueError):
        ProblemSpec("bad-t", b, e, 1.0, (0, 0, 0), (0, 0, 0), t_end=0.0)
    with pytest.raises(ValueError):
        ProblemSpec("short", b, e, 1.0, (0, 0), (0, 0, 0))
    with pytest.raises(ValueError):
        ProblemSpec("zero-field", constant_field((0, 0, 0)), e, 1.0, (0, 0, 0), (0, 0, 0))
    ProblemSpec("zero-field", constant_field((0, 0, 0)), e, 1.0, (0, 0, 0), (0, 0, 0), strict=False)


def test_custom_fields():
    mag = MagneticField("tilt", lambda a, b, c: (0.0, 0.0, 1.0 + a))
    el = ElectricField("harm", lambda a, b, c: 0.5 * (a * a + b * b + c * c), lambda a, b, c: (a, b, c))
    p = ProblemSpec("custom", mag, el, 1.0, (1, 2, 3), (0, 0, 0))
    assert tuple(e_field(p, (1, 2, 3))) == (-1.0, -2.0, -3.0)
    assert tuple(scaled_B(p, 0.5, (2, 0, 0))) == (0.0, 0.0, 2.0)


def test_coulomb_flag():
    assert coulomb_potential().coulomb and not zero_potential().coulomb
