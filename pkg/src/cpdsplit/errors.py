"""Exception types raised across the package."""


class CPDError(Exception):
    """Base class for all package errors."""


class SingularFieldError(CPDError, ValueError):
    """A field was evaluated at a singular point (Coulomb origin, zero B)."""


class BlowUpError(CPDError, OverflowError):
    """The numerical state left the admissible region."""

    def __init__(self, step, t, size):
        self.step = step
        self.t = t
        self.size = size
        super().__init__(f"state blew up at step {step} (t={t!r}): |x|+|v| = {size!r}")


class MaxStepsExceeded(CPDError, RuntimeError):
    """The adaptive reference solver ran out of steps."""

    def __init__(self, max_steps, t):
        self.max_steps = max_steps
        self.t = t
        super().__init__(f"reference solver exceeded {max_steps} steps; last time reached t={t!r}")


class DivisionGuardError(CPDError, ZeroDivisionError):
    """A relative metric was requested against a (near-)zero denominator."""
