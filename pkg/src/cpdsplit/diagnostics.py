"""Energy, parallel velocity, relative error metrics and slope fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DivisionGuardError, SingularFieldError
from .fields import ProblemSpec, potential, scaled_B
from .integrators import ParticleState

GUARD = 1e-14
ZERO_FIELD = 1e-12


@dataclass(frozen=True)
class ErrorReport:
    errx: float
    errv_par: float
    error: float
    # not part of the headline metric; no bound is claimed for it
    errv_perp: float = float("nan")


@dataclass(frozen=True)
class EnergySeries:
    times: list
    e_H: list


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float


def hamiltonian(problem: ProblemSpec, s: ParticleState) -> float:
    """``|v|^2 / 2 + U(x)``."""
    v = s.v
    return 0.5 * float(v @ v) + potential(problem, s.x)


def v_parallel(problem: ProblemSpec, eps: float, s: ParticleState) -> np.ndarray:
    """Projection of ``s.v`` on the local field direction ``B(eps**q x)``."""
    b = scaled_B(problem, eps, s.x)
    nb = float(np.linalg.norm(b))
    if nb < ZERO_FIELD:
        raise SingularFieldError(f"|B| = {nb!r} too small to define a field direction")
    u = b / nb
    return (u @ s.v) * u


def _rel(num, ref, what):
    den = float(np.linalg.norm(ref))
    if den < GUARD:
        raise DivisionGuardError(f"reference {what} norm {den!r} below {GUARD}")
    return float(np.linalg.norm(num - ref)) / den


def error_report(problem: ProblemSpec, eps: float, numerical: ParticleState,
                 reference: ParticleState) -> ErrorReport:
    """Relative position and parallel-velocity errors.

    Each parallel velocity uses the field at its own position.  The
    perpendicular error is reported as NaN if the reference has no
    perpendicular component.
    """
    errx = _rel(numerical.x, reference.x, "position")
    vp_num = v_parallel(problem, eps, numerical)
    vp_ref = v_parallel(problem, eps, reference)
    errv = _rel(vp_num, vp_ref, "parallel velocity")
    try:
        perp = _rel(numerical.v - vp_num, reference.v - vp_ref, "perpendicular velocity")
    except DivisionGuardError:
        perp = float("nan")
    return ErrorReport(errx, errv, errx + errv, perp)


def energy_errors(problem: ProblemSpec, rows: np.ndarray) -> np.ndarray:
    """Relative energy error for ``(t, x, v)`` rows; the first row is the start."""
    h0 = hamiltonian(problem, ParticleState(rows[0, 1:4], rows[0, 4:7], rows[0, 0]))
    if abs(h0) < GUARD:
        raise DivisionGuardError(f"initial energy {h0!r} too close to zero")
    out = np.empty(len(rows))
    for i, r in enumerate(rows):
        hv = 0.5 * float(r[4:7] @ r[4:7]) + potential(problem, r[1:4])
        out[i] = abs(hv - h0) / abs(h0)
    out[0] = 0.0
    return out


def energy_series(problem: ProblemSpec, trajectory: Sequence[ParticleState]) -> EnergySeries:
    rows = np.array([s.as_array() for s in trajectory])
    return EnergySeries([float(t) for t in rows[:, 0]], energy_errors(problem, rows).tolist())


def loglog_slope(xs, ys) -> SlopeFit:
    """Least-squares line through ``(log2 xs, log2 ys)``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-d sequences of equal length")
    if len(xs) < 3:
        raise ValueError("need at least 3 points for a slope fit")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))) or np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("slope fit needs finite, positive data")
    lx = np.log2(xs)
    ly = np.log2(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    ss_res = float((resid ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return SlopeFit(float(slope), float(intercept), float(min(1.0, r2)))


def max_in_window(times, values, lo: float, hi: float) -> float:
    """Max of ``values`` over ``lo < t <= hi``."""
    best = -math.inf
    for t, v in zip(times, values):
        if lo < t <= hi and v > best:
            best = v
    return best
