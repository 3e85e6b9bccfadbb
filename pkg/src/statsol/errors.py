"""Exception types shared across the package."""


class StateSpaceError(ValueError):
    """A state left the admissible set (e.g. nonpositive density or pressure)."""


class SolverBlowupError(RuntimeError):
    """The time stepper produced non-finite coefficients."""

    def __init__(self, message, time=None, cell=None):
        super().__init__(message)
        self.time = time
        self.cell = cell


class InfeasibleMarginalsError(ValueError):
    """Transport weight vectors do not form matching probability marginals."""


class EnsembleError(RuntimeError):
    """One or more samples of an ensemble run failed."""

    def __init__(self, failures):
        self.failures = failures
        indices = ", ".join(str(k) for k, _ in failures)
        super().__init__(f"ensemble samples failed: [{indices}]")


class ConfigError(ValueError):
    """Invalid or unknown experiment configuration."""
