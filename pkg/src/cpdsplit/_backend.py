"""Kernel backend selection.

The compiled core is used when it imports and the problem's fields are
catalog kinds it can evaluate natively; otherwise the pure-Python kernels
run.  Set ``CPD_PURE_PYTHON=1`` to force the fallback everywhere.
"""
import os

from . import _pykernels as python

try:
    from . import _ckernels as compiled
except ImportError:  # pragma: no cover - depends on the build
    compiled = None

FORCE_PYTHON = os.environ.get("CPD_PURE_PYTHON", "") not in ("", "0")

default = python if compiled is None or FORCE_PYTHON else compiled
BACKEND = default.NAME


def available():
    """Names of the importable backends."""
    return ["python"] if compiled is None else ["python", "compiled"]


def get(name=None):
    if name is None:
        return default
    if name == "python":
        return python
    if name == "compiled":
        if compiled is None:
            raise RuntimeError("compiled core is not built")
        return compiled
    raise ValueError(f"unknown backend {name!r}")


def model_for(problem, eps, backend=None):
    """Return (kernels, model) for one (problem, eps) pair."""
    kern = get(backend)
    if kern is not python:
        model = kern.make_model(problem, eps)
        if model is not None:
            return kern, model
        if backend is not None:
            raise ValueError(f"{problem.name}: custom fields need the python backend")
    return python, python.make_model(problem, eps)
