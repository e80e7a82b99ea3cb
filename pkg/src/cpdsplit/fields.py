"""Electromagnetic environments and the built-in test problems.

The magnetic field enters the dynamics as ``B(eps**q * x) / eps``.  Field
evaluators here return the unscaled ``B(y)``; the ``1/eps`` factor is
applied by the steppers.  Electric fields derive from a scalar potential,
``E = -grad U``, with analytic gradients.

Field callables take three floats and return a 3-tuple, so the same
functions serve the numpy-facing API and the pure-Python kernels.  The
``kind``/``params`` pair identifies fields the compiled core can evaluate
natively; custom fields (``kind == 0``) always run on the Python kernels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SingularFieldError

MAG_CUSTOM, MAG_CONST, MAG_TRIG = 0, 1, 2
POT_CUSTOM, POT_ZERO, POT_COULOMB, POT_POLY, POT_SINPROD = 0, 1, 2, 3, 4

SINGULAR_RADIUS = 1e-12

Fn3 = Callable[[float, float, float], tuple]


@dataclass(frozen=True)
class MagneticField:
    name: str
    func: Fn3
    kind: int = MAG_CUSTOM
    params: tuple = ()

    def __call__(self, y) -> np.ndarray:
        return np.array(self.func(float(y[0]), float(y[1]), float(y[2])))


@dataclass(frozen=True)
class ElectricField:
    """Potential ``U`` with its analytic gradient.

    ``field`` evaluates ``E = -grad U`` directly; when omitted it is built
    from ``gradient``.
    """

    name: str
    potential: Callable[[float, float, float], float]
    gradient: Fn3
    kind: int = POT_CUSTOM
    field: Fn3 | None = None
    coulomb: bool = False

    def __post_init__(self):
        if self.field is None:
            grad = self.gradient

            def negated(x1, x2, x3):
                g = grad(x1, x2, x3)
                return (-g[0], -g[1], -g[2])

            object.__setattr__(self, "field", negated)


@dataclass(frozen=True)
class ProblemSpec:
    """One charged-particle test problem.

    ``strict=False`` admits degenerate fields with ``|B(0)| = 0`` (useful
    for zero-field limit checks); everything else requires ``|B(0)| > 0``.
    """

    name: str
    magnetic: MagneticField
    electric: ElectricField
    q: float
    x0: tuple
    v0: tuple
    t_end: float = 1.0
    uniform: bool = False
    strict: bool = field(default=True, repr=False)

    def __post_init__(self):
        if not 1.0 <= self.q <= 2.0:
            raise ValueError(f"q must lie in [1, 2], got {self.q!r}")
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))
        object.__setattr__(self, "v0", tuple(float(c) for c in self.v0))
        if len(self.x0) != 3 or len(self.v0) != 3:
            raise ValueError("x0 and v0 must be 3-vectors")
        if self.strict:
            b = self.magnetic.func(0.0, 0.0, 0.0)
            if math.sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]) == 0.0:
                raise ValueError(f"{self.name}: |B(0)| must be positive")


# --- magnetic fields --------------------------------------------------------

def constant_field(b, name: str = "constant") -> MagneticField:
    b = (float(b[0]), float(b[1]), float(b[2]))

    def func(y1, y2, y3):
        return b

    return MagneticField(name, func, MAG_CONST, b)


def _trig(y1, y2, y3):
    return (1.0 - math.sin(y2) / 2.0, 1.0 + math.cos(y3) / 2.0, 1.0 + math.cos(y1) / 2.0)


def trig_field() -> MagneticField:
    """``B(y) = (1 - sin(y2)/2, 1 + cos(y3)/2, 1 + cos(y1)/2)``."""
    return MagneticField("trig", _trig, MAG_TRIG)


# --- potentials -------------------------------------------------------------

def _radius(x1, x2, x3):
    r = math.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
    if r < SINGULAR_RADIUS:
        raise SingularFieldError(f"Coulomb potential evaluated at |x| = {r!r}")
    return r


def _coulomb_u(x1, x2, x3):
    return 1.0 / _radius(x1, x2, x3)


def _coulomb_grad(x1, x2, x3):
    r = _radius(x1, x2, x3)
    r3 = r * r * r
    return (-(x1 / r3), -(x2 / r3), -(x3 / r3))


def _coulomb_e(x1, x2, x3):
    r = _radius(x1, x2, x3)
    r3 = r * r * r
    return (x1 / r3, x2 / r3, x3 / r3)


def _poly_u(x1, x2, x3):
    return x1 ** 3 - x2 ** 3 + x1 ** 4 / 5.0 + x2 ** 4 + x3 ** 4


def _poly_grad(x1, x2, x3):
    return (3.0 * x1 * x1 + 0.8 * x1 * x1 * x1,
            -3.0 * x2 * x2 + 4.0 * x2 * x2 * x2,
            4.0 * x3 * x3 * x3)


def _poly_e(x1, x2, x3):
    return (-(3.0 * x1 * x1 + 0.8 * x1 * x1 * x1),
            3.0 * x2 * x2 - 4.0 * x2 * x2 * x2,
            -(4.0 * x3 * x3 * x3))


def _sinprod_u(x1, x2, x3):
    return -math.sin(x1 / 2.0) * math.sin(x2) * math.sin(x3)


def _sinprod_e(x1, x2, x3):
    s1, c1 = math.sin(x1 / 2.0), math.cos(x1 / 2.0)
    s2, c2 = math.sin(x2), math.cos(x2)
    s3, c3 = math.sin(x3), math.cos(x3)
    return (0.5 * c1 * s2 * s3, s1 * c2 * s3, s1 * s2 * c3)


def _sinprod_grad(x1, x2, x3):
    e = _sinprod_e(x1, x2, x3)
    return (-e[0], -e[1], -e[2])


def _zero_u(x1, x2, x3):
    return 0.0


def _zero3(x1, x2, x3):
    return (0.0, 0.0, 0.0)


def coulomb_potential() -> ElectricField:
    """``U(x) = 1/|x|``."""
    return ElectricField("coulomb", _coulomb_u, _coulomb_grad, POT_COULOMB, _coulomb_e, coulomb=True)


def poly_potential() -> ElectricField:
    """``U(x) = x1^3 - x2^3 + x1^4/5 + x2^4 + x3^4``."""
    return ElectricField("poly", _poly_u, _poly_grad, POT_POLY, _poly_e)


def sinprod_potential() -> ElectricField:
    """``U(x) = -sin(x1/2) sin(x2) sin(x3)``."""
    return ElectricField("sinprod", _sinprod_u, _sinprod_grad, POT_SINPROD, _sinprod_e)


def zero_potential() -> ElectricField:
    return ElectricField("zero", _zero_u, _zero3, POT_ZERO, _zero3)


# --- catalog ----------------------------------------------------------------

X0_P1 = (0.0, 1.0, 0.1)
V0_P1 = (0.09, 0.05, 0.2)
X0_TRIG = (1.0 / 6.0, 1.0 / 8.0, 1.0 / 4.0)
V0_TRIG = (1.0 / 5.0, 1.0 / 3.0, 1.0 / 2.0)

PROBLEM_NAMES = ("p1-uniform", "p2-q2", "p3-q15", "p4-q1")


def catalog() -> list[ProblemSpec]:
    """The four built-in problems, in order p1..p4.

    p1 has a constant field, so ``q`` has no effect there; it is recorded
    as 2 for bookkeeping.
    """
    return [
        ProblemSpec("p1-uniform", constant_field((1.0, 0.0, 0.5)), coulomb_potential(),
                    2.0, X0_P1, V0_P1, uniform=True),
        ProblemSpec("p2-q2", trig_field(), coulomb_potential(), 2.0, X0_TRIG, V0_TRIG),
        ProblemSpec("p3-q15", trig_field(), poly_potential(), 1.5, X0_TRIG, V0_TRIG),
        ProblemSpec("p4-q1", trig_field(), sinprod_potential(), 1.0, X0_TRIG, V0_TRIG),
    ]


def get_problem(name: str) -> ProblemSpec:
    for p in catalog():
        if p.name == name:
            return p
    raise KeyError(f"unknown problem {name!r}; choose from {', '.join(PROBLEM_NAMES)}")


# --- numpy-facing evaluation -------------------------------------------------

def scaled_B(spec: ProblemSpec, eps: float, x) -> np.ndarray:
    """``B(eps**q * x)``, without the ``1/eps`` factor."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps!r}")
    s = eps ** spec.q
    return np.array(spec.magnetic.func(s * float(x[0]), s * float(x[1]), s * float(x[2])))


def e_field(spec: ProblemSpec, x) -> np.ndarray:
    return np.array(spec.electric.field(float(x[0]), float(x[1]), float(x[2])))


def potential(spec: ProblemSpec, x) -> float:
    return spec.electric.potential(float(x[0]), float(x[1]), float(x[2]))


def potential_gradient(spec: ProblemSpec, x) -> np.ndarray:
    return np.array(spec.electric.gradient(float(x[0]), float(x[1]), float(x[2])))
