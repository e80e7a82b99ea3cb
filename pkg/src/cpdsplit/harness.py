"""Experiment orchestration: convergence sweeps, eps-scaling scans,
long-time energy runs and CSV output.

Every sweep is deterministic.  Cells may run on a thread pool (the
compiled core releases the GIL); results are always emitted in the order
(method, eps descending, h descending).
"""
from __future__ import annotations

import csv
import io
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from .diagnostics import (EnergySeries, SlopeFit, energy_errors, error_report, hamiltonian,
                          loglog_slope)
from .fields import ProblemSpec, get_problem
from .integrators import (METHODS, ParticleState, RefSolverConfig, SchemeContext,
                          integrate_to_rows, reference_solve)

DEFAULT_H = tuple(2.0 ** -k for k in range(4, 11))
DEFAULT_EPS = tuple(2.0 ** -k for k in (4, 6, 8, 10))
DEFAULT_EPS_SCAN = tuple(2.0 ** -k for k in range(4, 11))
ENERGY_T_END = 100.0

CSV_COLUMNS = ("problem", "method", "eps", "h", "errx", "errv_par", "errv_perp", "error",
               "e_H_final", "wall_time_ms", "status", "reason")


@dataclass(frozen=True)
class SweepConfig:
    problem: str
    methods: tuple = ("s2new",)
    eps_list: tuple = DEFAULT_EPS
    h_list: tuple = DEFAULT_H
    t_end: float = 1.0
    ref_cfg: RefSolverConfig = field(default_factory=RefSolverConfig)
    jobs: int = 1
    # wall-clock timing makes output non-reproducible, so it is opt-in
    timing: bool = False
    backend: str | None = None

    def __post_init__(self):
        for name in ("methods", "eps_list", "h_list"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not (self.methods and self.eps_list and self.h_list):
            raise ValueError("methods, eps_list and h_list must be non-empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate methods")
        if any(not (0.0 < e <= 1.0) for e in self.eps_list):
            raise ValueError("every eps must lie in (0, 1]")
        if any(not (h > 0.0) for h in self.h_list):
            raise ValueError("every h must be positive")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass(frozen=True)
class SweepResult:
    problem: str
    method: str
    eps: float
    h: float
    errx: float
    errv_par: float
    errv_perp: float
    error: float
    e_H_final: float
    wall_time_ms: float | None = None
    status: str = "ok"
    reason: str = ""


def _resolve(problem) -> ProblemSpec:
    return problem if isinstance(problem, ProblemSpec) else get_problem(problem)


def _nan_row(pname, method, eps, h, reason):
    nan = math.nan
    return SweepResult(pname, method, eps, h, nan, nan, nan, nan, nan, None, "error", reason)


def _describe(exc):
    return f"{type(exc).__name__}: {exc}"


class ReferenceCache:
    """Reference end states keyed by (problem, eps, t_end, solver config).

    Each key is computed by exactly one caller; concurrent lookups of the
    same key are not expected because :func:`run_sweep` fills the cache
    before dispatching cells.
    """

    def __init__(self):
        self._store = {}

    def __len__(self):
        return len(self._store)

    def get(self, problem: ProblemSpec, eps, t_end, cfg, backend=None):
        key = (problem.name, eps, t_end, cfg)
        if key not in self._store:
            try:
                self._store[key] = reference_solve(problem, eps, t_end, cfg, backend=backend)
            except Exception as exc:  # recorded, re-raised per cell
                self._store[key] = exc
        hit = self._store[key]
        if isinstance(hit, Exception):
            raise hit
        return hit


def _cell(problem: ProblemSpec, method, eps, h, cfg: SweepConfig, ref) -> SweepResult:
    start = time.perf_counter()
    try:
        if isinstance(ref, Exception):
            raise RuntimeError(f"reference failed: {_describe(ref)}")
        ctx = SchemeContext(problem, eps, h, backend=cfg.backend)
        rows = integrate_to_rows(ctx, method, cfg.t_end, record_every=sys.maxsize)
        last = rows[-1]
        num = ParticleState(last[1:4], last[4:7], last[0])
        rep = error_report(problem, eps, num, ref)
        h0 = hamiltonian(problem, ParticleState.initial(problem))
        e_h = abs(hamiltonian(problem, num) - h0) / abs(h0) if h0 != 0.0 else math.nan
    except Exception as exc:
        return _nan_row(problem.name, method, eps, h, _describe(exc))
    wall = (time.perf_counter() - start) * 1e3 if cfg.timing else None
    return SweepResult(problem.name, method, eps, h, rep.errx, rep.errv_par, rep.errv_perp,
                       rep.error, e_h, wall)


def _pmap(fn, items, jobs):
    if jobs <= 1:
        return [fn(*it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda it: fn(*it), items))


def run_sweep(cfg: SweepConfig, *, problem: ProblemSpec | None = None,
              cache: ReferenceCache | None = None, reuse_references: bool = True
              ) -> list[SweepResult]:
    """One row per (method, eps, h) cell.

    References are computed once per eps and shared across methods and
    step sizes (``reuse_references=False`` recomputes them per cell, which
    must not change any row).  Failing cells become ``status="error"``
    rows and the sweep continues.
    """
    spec = problem if problem is not None else _resolve(cfg.problem)
    cache = cache if cache is not None else ReferenceCache()
    eps_order = sorted(set(cfg.eps_list), reverse=True)
    h_order = sorted(set(cfg.h_list), reverse=True)
    cells = [(m, e, h) for m in cfg.methods for e in eps_order for h in h_order]

    def ref_for(eps):
        try:
            return cache.get(spec, eps, cfg.t_end, cfg.ref_cfg, cfg.backend)
        except Exception as exc:
            return exc

    if reuse_references:
        refs = dict(zip(eps_order, _pmap(ref_for, [(e,) for e in eps_order], cfg.jobs)))
        work = [(spec, m, e, h, cfg, refs[e]) for m, e, h in cells]
        return _pmap(_cell, work, cfg.jobs)

    def fresh(m, e, h):
        return _cell(spec, m, e, h, cfg, ref_for_fresh(e))

    def ref_for_fresh(eps):
        try:
            return reference_solve(spec, eps, cfg.t_end, cfg.ref_cfg, backend=cfg.backend)
        except Exception as exc:
            return exc

    return _pmap(fresh, cells, cfg.jobs)


def _ok(rows):
    return [r for r in rows if r.status == "ok" and math.isfinite(r.error) and r.error > 0.0]


def fit_convergence(rows: Sequence[SweepResult], method: str | None = None) -> dict:
    """Slope of error vs h for each eps present in ``rows``."""
    out = {}
    for eps in sorted({r.eps for r in rows}, reverse=True):
        sel = [r for r in _ok(rows) if r.eps == eps and (method is None or r.method == method)]
        if len(sel) >= 3:
            out[eps] = loglog_slope([r.h for r in sel], [r.error for r in sel])
    return out


def fit_eps_scaling(rows: Sequence[SweepResult], method: str | None = None) -> SlopeFit:
    """Slope of error vs eps over ``rows`` (single h)."""
    sel = [r for r in _ok(rows) if method is None or r.method == method]
    return loglog_slope([r.eps for r in sel], [r.error for r in sel])


def convergence_study(problem, method: str, *, eps_list=DEFAULT_EPS, h_list=DEFAULT_H,
                      t_end: float = 1.0, ref_cfg: RefSolverConfig | None = None,
                      jobs: int = 1, rows_out: list | None = None) -> dict:
    """Per-eps ``SlopeFit`` of error vs h.

    Pass a list as ``rows_out`` to also receive the sweep rows.
    """
    spec = _resolve(problem)
    cfg = SweepConfig(spec.name, (method,), tuple(eps_list), tuple(h_list), t_end,
                      ref_cfg or RefSolverConfig(), jobs)
    rows = run_sweep(cfg, problem=spec)
    if rows_out is not None:
        rows_out.extend(rows)
    return fit_convergence(rows, method)


def eps_scaling_study(problem, method: str, h_fixed: float, *, eps_list=DEFAULT_EPS_SCAN,
                      t_end: float = 1.0, ref_cfg: RefSolverConfig | None = None,
                      jobs: int = 1, rows_out: list | None = None) -> SlopeFit:
    """``SlopeFit`` of error vs eps at a fixed step size."""
    spec = _resolve(problem)
    cfg = SweepConfig(spec.name, (method,), tuple(eps_list), (h_fixed,), t_end,
                      ref_cfg or RefSolverConfig(), jobs)
    rows = run_sweep(cfg, problem=spec)
    if rows_out is not None:
        rows_out.extend(rows)
    return fit_eps_scaling(rows, method)


def energy_study(problem, method: str, eps: float, h: float, t_end: float = ENERGY_T_END,
                 record_every: int = 1) -> EnergySeries:
    """Relative energy error along a (possibly long) run."""
    spec = _resolve(problem)
    ctx = SchemeContext(spec, eps, h)
    rows = integrate_to_rows(ctx, method, t_end, record_every)
    return EnergySeries(rows[:, 0].tolist(), energy_errors(spec, rows).tolist())


# --- CSV ------------------------------------------------------------------------

def format_float(x) -> str:
    """Shortest round-trip decimal; empty for missing values."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def _cells(values):
    return [format_float(v) if isinstance(v, (float, np.floating)) or v is None else str(v)
            for v in values]


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """RFC 4180 CSV (CRLF line ends); ``path`` of None or "-" means stdout."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(_cells(row))
    text = buf.getvalue()
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_csv(rows: Sequence[SweepResult], path) -> None:
    assert tuple(f.name for f in fields(SweepResult)) == CSV_COLUMNS
    write_table(path, CSV_COLUMNS, (astuple(r) for r in rows))
