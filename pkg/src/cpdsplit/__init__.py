"""Explicit symmetric splitting integrators for charged-particle dynamics
in strong magnetic fields under maximal-ordering scaling."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .diagnostics import (ErrorReport, EnergySeries, SlopeFit, energy_series,  # noqa: E402
                          error_report, hamiltonian, loglog_slope, v_parallel)
from .errors import (BlowUpError, CPDError, DivisionGuardError,  # noqa: E402
                     MaxStepsExceeded, SingularFieldError)
from .fields import (PROBLEM_NAMES, ElectricField, MagneticField, ProblemSpec,  # noqa: E402
                     catalog, e_field, get_problem, scaled_B)
from .integrators import (METHODS, ParticleState, RefSolverConfig,  # noqa: E402
                          SchemeContext, integrate, integrate_to, reference_solve,
                          rk4_oracle, step_s2_new, step_s2_new_rescaled, step_s2_vp,
                          subflow_S, subflow_T)
