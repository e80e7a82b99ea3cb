"""Time steppers for charged-particle motion in a strong magnetic field.

Dynamics: ``x' = v``, ``v' = v x B(eps**q x)/eps + E(x)``.

* :func:`step_s2_new` -- Strang splitting with the field matrix frozen at
  the initial position inside the rotation subflow; spatial variation of
  the field goes into the kick subflow.  Explicit and time symmetric.
* :func:`step_s2_vp` -- baseline drift / rotate-and-kick / drift splitting.
* :func:`step_s2_new_rescaled` -- the new scheme written in the rescaled
  time ``tau = t/eps`` (state ``(z, w, tau)``).
* :func:`reference_solve` -- adaptive Dormand-Prince 5(4), and
  :func:`rk4_oracle`, a fixed-step RK4 used to cross-check it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .fields import ProblemSpec

METHODS = ("s2new", "s2vp")
_METHOD_CODE = {"s2new": 0, "s2vp": 1}


@dataclass(frozen=True, eq=False)
class ParticleState:
    x: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("x", "v"):
            arr = np.array(getattr(self, name), dtype=float).reshape(3)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def initial(cls, problem: ProblemSpec) -> "ParticleState":
        return cls(problem.x0, problem.v0, 0.0)

    def as_array(self) -> np.ndarray:
        """``(t, x1, x2, x3, v1, v2, v3)``."""
        return np.concatenate(([self.t], self.x, self.v))

    def _xv(self):
        return tuple(self.x.tolist()), tuple(self.v.tolist())


def _state(x, v, t):
    return ParticleState(x, v, t)


def _check_eps(eps):
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"eps must lie in (0, 1], got {eps!r}")


class SchemeContext:
    """Per-run constants of the splitting schemes.

    Holds the frozen field ``B0 = B(eps**q * x0)`` and the half-step blocks
    ``exp(h hat(B0)/(2 eps))`` and ``phi1(h hat(B0)/(2 eps))``, computed
    once.  ``b0_point`` re-freezes the field at another position (restart
    knob; the default uses the problem's initial position).
    """

    def __init__(self, problem: ProblemSpec, eps: float, h: float, *,
                 b0_point=None, backend: str | None = None, _allow_any_sign=False):
        _check_eps(eps)
        h = float(h)
        if not math.isfinite(h) or h == 0.0 or (h < 0.0 and not _allow_any_sign):
            raise ValueError(f"step size must be positive, got {h!r}")
        self.problem = problem
        self.eps = float(eps)
        self.h = h
        self.backend = backend
        self._kern, self._model = _backend.model_for(problem, self.eps, backend)
        point = problem.x0 if b0_point is None else tuple(float(c) for c in b0_point)
        self.b0_point = point
        self._b0 = tuple(self._model.b(point))
        self._eh, self._ph = self._kern.half_blocks(self._model, self._b0, h)

    @property
    def kernels(self):
        return self._kern

    @property
    def b0(self) -> np.ndarray:
        return np.array(self._b0)

    @property
    def b0_hat(self) -> np.ndarray:
        from .smallmat import hat
        return hat(self._b0)

    @property
    def exp_half(self) -> np.ndarray:
        return np.array(self._eh).reshape(3, 3)

    @property
    def phi1_half(self) -> np.ndarray:
        return np.array(self._ph).reshape(3, 3)

    def with_step(self, h: float) -> "SchemeContext":
        """Same problem and frozen field, different (possibly negative) step."""
        return SchemeContext(self.problem, self.eps, h, b0_point=self.b0_point,
                             backend=self.backend, _allow_any_sign=True)

    def reversed(self) -> "SchemeContext":
        return self.with_step(-self.h)


def subflow_S(ctx: SchemeContext, s: ParticleState, dt: float) -> ParticleState:
    """Exact flow of ``x' = v, v' = hat(B0) v / eps``."""
    x, v = ctx._kern.subflow_s(ctx._model, ctx._b0, *s._xv(), float(dt))
    return _state(x, v, s.t + dt)


def subflow_T(ctx: SchemeContext, s: ParticleState, dt: float) -> ParticleState:
    """Exact flow of ``x' = 0, v' = (hat(B(x)) - hat(B0)) v / eps + E(x)``."""
    x, v = ctx._kern.subflow_t(ctx._model, ctx._b0, *s._xv(), float(dt))
    return _state(x, v, s.t + dt)


def step_s2_new(ctx: SchemeContext, s: ParticleState) -> ParticleState:
    x, v = ctx._kern.step_s2new(ctx._model, ctx._b0, ctx._eh, ctx._ph, ctx.h, *s._xv())
    return _state(x, v, s.t + ctx.h)


def step_s2_vp(ctx: SchemeContext, s: ParticleState) -> ParticleState:
    x, v = ctx._kern.step_s2vp(ctx._model, ctx.h, *s._xv())
    return _state(x, v, s.t + ctx.h)


def step_s2_new_rescaled(ctx: SchemeContext, s: ParticleState, frak_h: float) -> ParticleState:
    """One step of the new scheme in rescaled time.

    ``s`` holds ``(z, w, tau)`` with ``tau = t/eps``; the step is
    ``frak_h = h/eps``.  ``ctx.h`` is not used.
    """
    z, w = ctx._kern.step_s2new_rescaled(ctx._model, ctx._b0, float(frak_h), *s._xv())
    return _state(z, w, s.t + frak_h)


STEPPERS = {"s2new": step_s2_new, "s2vp": step_s2_vp}


def _method_code(method):
    try:
        return _METHOD_CODE[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}") from None


def integrate_rows(ctx: SchemeContext, method: str, n_steps: int, record_every: int = 1,
                   start: ParticleState | None = None) -> np.ndarray:
    """Like :func:`integrate` but returns an ``(n, 7)`` array of
    ``(t, x1, x2, x3, v1, v2, v3)`` rows."""
    code = _method_code(method)
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps!r}")
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every!r}")
    start = ParticleState.initial(ctx.problem) if start is None else start
    x, v = start._xv()
    rows = ctx._kern.run(ctx._model, code, ctx._b0, ctx._eh, ctx._ph, ctx.h, x, v,
                         start.t, int(n_steps), int(record_every))
    return np.asarray(rows, dtype=float)


def integrate(ctx: SchemeContext, method: str, n_steps: int, record_every: int = 1,
              start: ParticleState | None = None) -> list[ParticleState]:
    """Apply ``method`` n_steps times from the problem's initial data.

    Records the initial state, every ``record_every``-th state and the
    final state.  Raises :class:`~cpdsplit.errors.BlowUpError` if
    ``|x| + |v|`` exceeds 1e12.
    """
    rows = integrate_rows(ctx, method, n_steps, record_every, start)
    return [_state(r[1:4], r[4:7], r[0]) for r in rows]


def steps_for(t_end: float, h: float) -> tuple[int, float]:
    """Full steps and leftover for covering ``t_end`` with step ``h``."""
    ratio = t_end / h
    n = int(round(ratio))
    if abs(ratio - n) <= 1e-9 * max(1.0, ratio):
        return n, 0.0
    n = int(math.floor(ratio))
    return n, t_end - n * h


def integrate_to_rows(ctx: SchemeContext, method: str, t_end: float,
                      record_every: int = 1) -> np.ndarray:
    """Integrate to ``t_end``; a short final step covers any remainder."""
    if not t_end > 0.0:
        raise ValueError(f"t_end must be positive, got {t_end!r}")
    n, rest = steps_for(t_end, ctx.h)
    start = ParticleState.initial(ctx.problem)
    parts = []
    if n > 0:
        rows = integrate_rows(ctx, method, n, record_every, start)
        parts.append(rows)
        last = rows[-1]
        start = _state(last[1:4], last[4:7], last[0])
    if rest > 0.0:
        tail = integrate_rows(ctx.with_step(rest), method, 1, 1, start)
        parts.append(tail[1:] if parts else tail)
    out = np.vstack(parts)
    out[-1, 0] = t_end
    return out


def integrate_to(ctx: SchemeContext, method: str, t_end: float,
                 record_every: int = 1) -> list[ParticleState]:
    rows = integrate_to_rows(ctx, method, t_end, record_every)
    return [_state(r[1:4], r[4:7], r[0]) for r in rows]


# --- reference solvers --------------------------------------------------------

@dataclass(frozen=True)
class RefSolverConfig:
    rtol: float = 1e-12
    atol: float = 1e-12
    max_steps: int = 20_000_000
    # None resolves to min(1e-3, eps/10) so the first step sees the gyration
    initial_step: float | None = None

    def __post_init__(self):
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise ValueError("rtol and atol must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class ReferenceStats:
    accepted: int
    rejected: int


def reference_solve(problem: ProblemSpec, eps: float, t_end: float,
                    cfg: RefSolverConfig | None = None, *, backend: str | None = None,
                    stats: list | None = None) -> ParticleState:
    """State at exactly ``t_end`` from adaptive Dormand-Prince 5(4).

    If ``stats`` is a list, a :class:`ReferenceStats` is appended to it.
    """
    _check_eps(eps)
    if t_end < 0.0:
        raise ValueError(f"t_end must be non-negative, got {t_end!r}")
    if t_end == 0.0:
        return ParticleState.initial(problem)
    cfg = cfg or RefSolverConfig()
    h0 = cfg.initial_step if cfg.initial_step is not None else min(1e-3, eps / 10.0)
    kern, model = _backend.model_for(problem, eps, backend)
    y, acc, rej = kern.dopri5(model, problem.x0 + problem.v0, float(t_end), cfg.rtol,
                              cfg.atol, int(cfg.max_steps), h0)
    if stats is not None:
        stats.append(ReferenceStats(acc, rej))
    return _state(y[:3], y[3:], t_end)


def rk4_oracle(problem: ProblemSpec, eps: float, t_end: float, h: float, *,
               backend: str | None = None) -> ParticleState:
    """Classical fixed-step RK4; ``h`` must divide ``t_end``."""
    _check_eps(eps)
    if not h > 0.0:
        raise ValueError(f"h must be positive, got {h!r}")
    if t_end == 0.0:
        return ParticleState.initial(problem)
    n, rest = steps_for(t_end, h)
    if rest != 0.0 or n < 1:
        raise ValueError(f"h={h!r} does not divide t_end={t_end!r}")
    kern, model = _backend.model_for(problem, eps, backend)
    y = kern.rk4(model, problem.x0 + problem.v0, float(t_end), n)
    return _state(y[:3], y[3:], t_end)
