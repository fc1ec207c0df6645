"""Exception types raised across the package."""


class OnsketchError(Exception):
    """Base class for all errors raised by onsketch."""


class InvalidMatrix(OnsketchError):
    """Input matrix violates a structural precondition (non-finite, asymmetric, ...)."""


class NotPositiveDefinite(OnsketchError):
    """Cholesky factorization requested for a matrix that is not positive definite."""


class SingularLyapunov(OnsketchError):
    """Lyapunov operator has a (near-)zero eigenvalue-pair sum; no unique solution."""


class DegenerateSketchDistribution(OnsketchError):
    """Expected projection matrix is singular; (mu, nu) are undefined."""


class NumericalBlowup(OnsketchError):
    """Solver iterate became non-finite."""

    def __init__(self, step: int, outer_step: int | None = None):
        self.step = step
        self.outer_step = outer_step
        where = f"inner step {step}"
        if outer_step is not None:
            where += f" (outer step {outer_step})"
        super().__init__(f"non-finite iterate at {where}")


class InvalidStep(OnsketchError):
    """Step index or stepsize violates a precondition."""


class EmptyEstimator(OnsketchError):
    """Covariance estimator queried before any iterate was pushed."""


class InvalidProbability(OnsketchError):
    """Probability argument outside (0, 1)."""


class InvalidConfig(OnsketchError):
    """Experiment configuration is malformed; message names the offending key."""


class DegenerateModel(OnsketchError):
    """Population Hessian is singular; sandwich covariance undefined."""


class EnumTooLarge(OnsketchError):
    """Exact sketch-sequence enumeration exceeds the configured budget."""


class OracleUnavailable(OnsketchError):
    """Ground-truth covariance cannot be computed for this configuration."""


class BoundViolated(OnsketchError):
    """A spectral bound failed at some grid point."""

    def __init__(self, message: str, z: float):
        self.z = z
        super().__init__(f"{message} at z={z!r}")
