import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpdsplit.diagnostics import (EnergySeries, energy_errors, energy_series, error_report,
                                  hamiltonian, loglog_slope, max_in_window, v_parallel)
from cpdsplit.errors import DivisionGuardError, SingularFieldError
from cpdsplit.fields import PROBLEM_NAMES, ProblemSpec, constant_field, get_problem, zero_potential
from cpdsplit.integrators import (ParticleState, RefSolverConfig, SchemeContext, integrate,
                                  integrate_to, reference_solve)

P1 = get_problem("p1-uniform")
H0_P1 = 1.0203371902099891

finite = st.floats(-5.0, 5.0)
vec3 = st.tuples(finite, finite, finite)


def test_hamiltonian_p1_start():
    assert hamiltonian(P1, ParticleState.initial(P1)) == pytest.approx(H0_P1, rel=1e-15)


def test_hamiltonian_poly_origin_at_rest():
    assert hamiltonian(get_problem("p3-q15"), ParticleState((0, 0, 0), (0, 0, 0))) == 0.0


def test_v_parallel_example():
    vp = v_parallel(P1, 0.5, ParticleState.initial(P1))
    np.testing.assert_allclose(vp, (0.152, 0.0, 0.076), rtol=1e-15, atol=1e-17)
    assert float(vp @ np.array([1.0, 0.0, 0.5])) / math.sqrt(1.25) == pytest.approx(0.16994116628998, rel=1e-13)


def test_v_parallel_aligned_and_perpendicular():
    np.testing.assert_allclose(v_parallel(P1, 0.5, ParticleState((0, 1, 0), (2.0, 0.0, 1.0))), (2.0, 0.0, 1.0),
                               rtol=1e-15)
    np.testing.assert_allclose(v_parallel(P1, 0.5, ParticleState((0, 1, 0), (0.5, 0.0, -1.0))), (0, 0, 0),
                               atol=1e-16)


@given(st.sampled_from(PROBLEM_NAMES), vec3, vec3, st.sampled_from([1.0, 2.0 ** -4, 2.0 ** -10]))
def test_v_parallel_properties(name, x, v, eps):
    p = get_problem(name)
    s = ParticleState(x, v)
    vp = v_parallel(p, eps, s)
    again = v_parallel(p, eps, ParticleState(x, vp))
    assert np.abs(again - vp).max() <= 1e-14 * max(1.0, np.linalg.norm(v))
    assert np.linalg.norm(vp) <= np.linalg.norm(v) + 1e-14


def test_v_parallel_zero_field():
    p = ProblemSpec("null", constant_field((0, 0, 0)), zero_potential(), 1.0, (1, 0, 0), (1, 0, 0), strict=False)
    with pytest.raises(SingularFieldError):
        v_parallel(p, 0.5, ParticleState.initial(p))


def test_error_report_identical_states():
    s = ParticleState.initial(P1)
    rep = error_report(P1, 0.5, s, s)
    assert (rep.errx, rep.errv_par, rep.error, rep.errv_perp) == (0.0, 0.0, 0.0, 0.0)


def test_error_report_scaled_position():
    ref = ParticleState((0.0, 1.0, 0.1), (0.09, 0.05, 0.2))
    num = ParticleState(2 * ref.x, ref.v)
    rep = error_report(P1, 0.5, num, ref)
    assert rep.errx == 1.0 and rep.errv_par == 0.0 and rep.error == 1.0


@given(vec3, vec3, vec3, vec3)
def test_error_report_properties(x1, v1, x2, v2):
    ref = ParticleState(np.array(x1) + 6.0, np.array(v2) + np.array([7.0, 0.0, 3.0]))
    num = ParticleState(x2, v1)
    rep = error_report(P1, 0.5, num, ref)
    assert rep.errx >= 0 and rep.errv_par >= 0
    assert rep.error == rep.errx + rep.errv_par
    assert (rep.error == 0.0) == (np.array_equal(num.x, ref.x) and np.array_equal(
        v_parallel(P1, 0.5, num), v_parallel(P1, 0.5, ref)))


def test_error_report_guards():
    ref = ParticleState((0.0, 0.0, 0.0), (1.0, 0.0, 0.5))
    with pytest.raises(DivisionGuardError):
        error_report(P1, 0.5, ParticleState.initial(P1), ref)
    ref = ParticleState((0.0, 1.0, 0.0), (0.5, 0.0, -1.0))  # no parallel part
    with pytest.raises(DivisionGuardError):
        error_report(P1, 0.5, ParticleState.initial(P1), ref)
    ref = ParticleState((0.0, 1.0, 0.0), (1.0, 0.0, 0.5))  # no perpendicular part
    assert math.isnan(error_report(P1, 0.5, ParticleState.initial(P1), ref).errv_perp)


def test_error_uses_own_field_direction():
    p = get_problem("p4-q1")
    eps = 1.0
    ref = ParticleState((0.2, 0.4, 0.6), (0.3, -0.2, 0.9))
    num = ParticleState((2.2, -1.4, 3.0), ref.v)
    rep = error_report(p, eps, num, ref)
    vp_n, vp_r = v_parallel(p, eps, num), v_parallel(p, eps, ref)
    assert rep.errv_par == pytest.approx(np.linalg.norm(vp_n - vp_r) / np.linalg.norm(vp_r), rel=1e-15)
    assert rep.errv_par > 0


def test_error_shrinks_fourfold():
    eps = 2.0 ** -4
    ref = reference_solve(P1, eps, 1.0)
    errs = []
    for h in (2.0 ** -4, 2.0 ** -5):
        end = integrate_to(SchemeContext(P1, eps, h), "s2new", 1.0)[-1]
        errs.append(error_report(P1, eps, end, ref).error)
    assert errs[0] > 0 and math.isfinite(errs[0])
    assert 3.0 <= errs[0] / errs[1] <= 5.5


def test_energy_series_single_state():
    es = energy_series(P1, [ParticleState.initial(P1)])
    assert isinstance(es, EnergySeries) and es.e_H == [0.0] and es.times == [0.0]


def test_energy_series_reference_trajectory():
    eps = 2.0 ** -4
    states = [ParticleState.initial(P1)] + [reference_solve(P1, eps, t) for t in (0.25, 0.5, 1.0)]
    es = energy_series(P1, states)
    assert es.e_H[0] == 0.0 and max(es.e_H) <= 1e-9
    assert len(es.times) == len(es.e_H) == 4


def test_energy_exact_for_pure_rotation():
    p = ProblemSpec("rot", constant_field((1, 0, 0.5)), get_problem("p1-uniform").electric, 2.0,
                    (0.0, 1.0, 0.1), (0.0, 0.0, 0.0))
    traj = integrate(SchemeContext(p, 0.5, 0.1), "s2new", 1)
    assert energy_series(p, traj).e_H[0] == 0.0


def test_energy_guard():
    p = get_problem("p3-q15")
    rows = np.zeros((2, 7))
    with pytest.raises(DivisionGuardError):
        energy_errors(p, rows)


def test_slope_examples():
    xs = [2.0 ** -k for k in range(4, 11)]
    fit = loglog_slope(xs, [x * x for x in xs])
    assert fit.slope == pytest.approx(2.0, abs=1e-12) and fit.r2 == pytest.approx(1.0, abs=1e-12)
    fit = loglog_slope(xs, [3.0] * len(xs))
    assert fit.slope == pytest.approx(0.0, abs=1e-12) and fit.r2 == 1.0
    assert loglog_slope(xs, [5.0 / x for x in xs]).slope == pytest.approx(-1.0, abs=1e-12)


@given(st.lists(st.floats(1e-6, 1e6), min_size=3, max_size=12, unique=True),
       st.lists(st.floats(1e-6, 1e6), min_size=12, max_size=12))
def test_slope_r2_in_unit_interval(xs, ys):
    fit = loglog_slope(xs, ys[:len(xs)])
    assert 0.0 <= fit.r2 <= 1.0


@pytest.mark.parametrize("xs, ys", [([1, 2], [1, 2]), ([1, 2, 3], [1, 0, 2]), ([1, -2, 3], [1, 2, 3]),
                                     ([1, 2, 3], [1, math.nan, 2]), ([1, 2, 3], [1, 2])])
def test_slope_rejects_bad_data(xs, ys):
    with pytest.raises(ValueError):
        loglog_slope(xs, ys)


def test_max_in_window():
    t = [0, 1, 2, 3, 4]
    v = [9, 1, 5, 2, 7]
    assert max_in_window(t, v, 0, 2) == 5
    assert max_in_window(t, v, 2, 4) == 7
    assert max_in_window(t, v, 4, 5) == -math.inf


def test_reference_conserves_energy_p1():
    cfg = RefSolverConfig()
    end = reference_solve(P1, 2.0 ** -4, 1.0, cfg)
    assert abs(hamiltonian(P1, end) - H0_P1) / H0_P1 <= 10 * cfg.rtol


@pytest.mark.parametrize("eps", [2.0 ** -4, 2.0 ** -10])
@pytest.mark.parametrize("name", PROBLEM_NAMES)
def test_reference_conserves_energy_all_problems(name, eps):
    p = get_problem(name)
    end = reference_solve(p, eps, 1.0)
    h0 = hamiltonian(p, ParticleState.initial(p))
    assert abs(hamiltonian(p, end) - h0) / abs(h0) <= 1e-9
