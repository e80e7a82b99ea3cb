"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Relative differences of states use the infinity norm over ``(x, v)``.
"""
import math

import numpy as np
import pytest

from cpdsplit.diagnostics import hamiltonian, max_in_window
from cpdsplit.fields import PROBLEM_NAMES, get_problem
from cpdsplit.harness import (SweepConfig, energy_study, fit_convergence, fit_eps_scaling, run_sweep,
                              write_csv)
from cpdsplit.integrators import (ParticleState, SchemeContext, reference_solve, rk4_oracle,
                                  step_s2_new, step_s2_new_rescaled, step_s2_vp, subflow_S, subflow_T)
from cpdsplit.smallmat import (SkewAngle, rodrigues_exp, rodrigues_phi1, series_exp_oracle,
                               series_phi1_oracle)

from conftest import random_state, state_rel_diff

H_GRID = tuple(2.0 ** -k for k in range(4, 11))
EPS_SCAN = tuple(2.0 ** -k for k in range(4, 11))
STEP = {"s2new": step_s2_new, "s2vp": step_s2_vp}


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return report


def inf_norm(m):
    return float(np.abs(m).sum(axis=1).max())


def csv_bytes(rows, tmp_path, name):
    path = tmp_path / name
    write_csv(rows, path)
    return path.read_bytes()


def eps_slope(problem, method, h=2.0 ** -8):
    rows = run_sweep(SweepConfig(problem, (method,), EPS_SCAN, (h,)))
    assert all(r.status == "ok" for r in rows), [r.reason for r in rows if r.status != "ok"]
    return fit_eps_scaling(rows, method), rows


def test_01_kernel_oracles(verdict):
    rng = np.random.default_rng(2024)
    worst_e = worst_p = worst_o = 0.0
    for i in range(200):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        # half log-uniform to reach the small-angle branch, half uniform
        theta = 10.0 ** rng.uniform(-12, math.log10(50)) if i % 2 else rng.uniform(1e-12, 50)
        s = SkewAngle(tuple(axis), theta)
        a = s.matrix()
        r = rodrigues_exp(s)
        worst_e = max(worst_e, inf_norm(r - series_exp_oracle(a)))
        worst_p = max(worst_p, inf_norm(rodrigues_phi1(s) - series_phi1_oracle(a)))
        worst_o = max(worst_o, inf_norm(r.T @ r - np.eye(3)))
    ok = worst_e <= 1e-12 and worst_p <= 1e-12 and worst_o <= 1e-13
    verdict(1, ok, f"exp {worst_e:.2e}, phi1 {worst_p:.2e}, orthogonality {worst_o:.2e}")


def test_02_time_symmetry(verdict):
    rng = np.random.default_rng(2)
    worst = 0.0
    for name in PROBLEM_NAMES:
        p = get_problem(name)
        for eps in (2.0 ** -2, 2.0 ** -6):
            for h in (2.0 ** -4, 2.0 ** -8):
                ctx = SchemeContext(p, eps, h)
                back = ctx.reversed()
                for _ in range(50):
                    s = random_state(rng, p)
                    for step in STEP.values():
                        worst = max(worst, state_rel_diff(step(back, step(ctx, s)), s))
    verdict(2, worst <= 1e-10, f"max relative round-trip deviation {worst:.2e}")


def test_03_composition(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(100):
        p = get_problem(PROBLEM_NAMES[i % 4])
        eps = 2.0 ** -int(rng.integers(0, 11))
        h = 2.0 ** -int(rng.integers(2, 11))
        ctx = SchemeContext(p, eps, h)
        s = random_state(rng, p)
        comp = subflow_S(ctx, subflow_T(ctx, subflow_S(ctx, s, h / 2), h), h / 2)
        worst = max(worst, state_rel_diff(step_s2_new(ctx, s), comp))
    verdict(3, worst <= 1e-13, f"max relative deviation {worst:.2e}")


def test_04_rescale(verdict):
    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(100):
        p = get_problem(PROBLEM_NAMES[i % 4])
        eps = 2.0 ** -float(rng.uniform(0, 10))
        frak_h = float(rng.uniform(0.01, 4.0))
        ctx = SchemeContext(p, eps, eps * frak_h)
        s = random_state(rng, p)
        worst = max(worst, state_rel_diff(step_s2_new_rescaled(ctx, s, frak_h), step_s2_new(ctx, s)))
    verdict(4, worst <= 1e-13, f"max relative deviation {worst:.2e}")


@pytest.fixture(scope="module")
def convergence_rows():
    rows = []
    for name in ("p1-uniform", "p2-q2"):
        rows += run_sweep(SweepConfig(name, ("s2new", "s2vp"), (2.0 ** -6,), H_GRID))
    return rows


def test_05_second_order(verdict, convergence_rows):
    parts, ok = [], True
    for name in ("p1-uniform", "p2-q2"):
        for method in ("s2new", "s2vp"):
            sel = [r for r in convergence_rows if r.problem == name and r.method == method]
            ok &= all(r.status == "ok" for r in sel) and len(sel) == len(H_GRID)
            fit = fit_convergence(sel, method)[2.0 ** -6]
            ok &= 1.8 <= fit.slope <= 2.2 and fit.r2 >= 0.98
            parts.append(f"{name}/{method} {fit.slope:.3f} (r2 {fit.r2:.4f})")
    verdict(5, ok, "; ".join(parts))


def test_06_uniform_field_eps_independence(verdict):
    fit, rows = eps_slope("p1-uniform", "s2new")
    errs = [r.error for r in rows]
    ratio = max(errs) / min(errs)
    ok = -0.25 <= fit.slope <= 0.25 and ratio <= 10.0
    verdict(6, ok, f"slope {fit.slope:.3f}, max/min error {ratio:.2f}")


def test_07_s2vp_eps_dependence(verdict):
    fit, _ = eps_slope("p1-uniform", "s2vp")
    verdict(7, -1.4 <= fit.slope <= -0.6, f"slope {fit.slope:.3f}")


def test_08_q2_uniformity(verdict):
    fit, _ = eps_slope("p2-q2", "s2new")
    verdict(8, -0.3 <= fit.slope <= 0.3, f"slope {fit.slope:.3f}")


def test_09_q15_scaling(verdict):
    new, _ = eps_slope("p3-q15", "s2new")
    vp, _ = eps_slope("p3-q15", "s2vp")
    ok = -0.8 <= new.slope <= -0.2 and vp.slope <= new.slope - 0.25
    verdict(9, ok, f"s2new slope {new.slope:.3f}, s2vp slope {vp.slope:.3f}, gap {new.slope - vp.slope:.3f}")


def test_10_q1_superiority(verdict):
    rows = run_sweep(SweepConfig("p4-q1", ("s2new", "s2vp"), (2.0 ** -8,), (2.0 ** -8,)))
    err = {r.method: r.error for r in rows}
    verdict(10, err["s2new"] <= err["s2vp"], f"s2new {err['s2new']:.3e}, s2vp {err['s2vp']:.3e}")


def test_11_long_time_energy(verdict):
    h = 2.0 ** -6
    parts, ok = [], True
    for method in ("s2new", "s2vp"):
        es = energy_study("p1-uniform", method, 2.0 ** -4, h, t_end=100.0)
        first = max_in_window(es.times, es.e_H, 0.0, 50.0)
        second = max_in_window(es.times, es.e_H, 50.0, 100.0)
        peak = max(es.e_H)
        ok &= second <= 2.0 * first and peak <= 10.0 * h * h
        parts.append(f"{method} first {first:.2e} second {second:.2e} max {peak:.2e} (10h^2 {10 * h * h:.2e})")
    verdict(11, ok, "; ".join(parts))


def test_12_reference_solver(verdict):
    p = get_problem("p1-uniform")
    eps = 2.0 ** -4
    ref = reference_solve(p, eps, 1.0)
    rk = rk4_oracle(p, eps, 1.0, 1e-6)
    dev = state_rel_diff(ref, rk)
    h0 = hamiltonian(p, ParticleState.initial(p))
    e_h = abs(hamiltonian(p, ref) - h0) / abs(h0)
    verdict(12, dev <= 1e-9 and e_h <= 1e-9, f"vs RK4 {dev:.2e}, energy error {e_h:.2e}")


def test_13_determinism(verdict, convergence_rows, tmp_path):
    again = []
    for name in ("p1-uniform", "p2-q2"):
        again += run_sweep(SweepConfig(name, ("s2new", "s2vp"), (2.0 ** -6,), H_GRID))
    a = csv_bytes(convergence_rows, tmp_path, "first.csv")
    b = csv_bytes(again, tmp_path, "second.csv")
    verdict(13, a == b, f"{len(a)} bytes, identical={a == b}")
