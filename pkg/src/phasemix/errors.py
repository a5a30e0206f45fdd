"""Exception hierarchy shared by the solver, the IO layer and the CLI."""


class PhasemixError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PhasemixError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


class ParseError(PhasemixError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ConfigError(PhasemixError):
    """Inconsistent study or manufactured-solution setup."""


class IoError(PhasemixError):
    """Reading or writing run artifacts failed."""


class FormatError(IoError):
    """Snapshot payload and sidecar disagree."""


class SolverError(PhasemixError):
    """Failures during time stepping; mapped to exit code 3 by the CLI."""


class NonConvergence(SolverError):
    def __init__(self, iterations, residual):
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


class IncompatibleRHS(SolverError):
    def __init__(self, mean, tol):
        super().__init__(
            f"right-hand side mean {mean:.3e} exceeds compatibility tolerance {tol:.3e}"
        )
        self.mean = mean
        self.tol = tol


class BlowUp(SolverError):
    def __init__(self, field, value, t):
        super().__init__(f"field {field!r} reached {value:.3e} at t={t:.6g}")
        self.field = field
        self.value = value
        self.t = t


class CFLViolation(SolverError):
    def __init__(self, dt, limit):
        super().__init__(f"dt={dt:.3e} exceeds advective limit {limit:.3e}")
        self.dt = dt
        self.limit = limit
