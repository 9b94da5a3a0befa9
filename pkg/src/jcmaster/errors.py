"""Exception types shared across the package."""


class JCMasterError(Exception):
    """Base class for all package errors."""


class ValidationError(JCMasterError, ValueError):
    """Input does not satisfy the documented invariants."""


class PatternViolation(JCMasterError):
    """A generator matrix has entries outside the phase-covariant pattern."""


class TruncationError(JCMasterError):
    """A Fock-space truncation discards more weight than allowed."""


class ConvergenceError(JCMasterError):
    """A refinement (step halving, node doubling) failed to agree."""


class SingularGenerator(JCMasterError, ZeroDivisionError):
    """A time-local generator is undefined because the map is not invertible."""


class PoleHit(JCMasterError, ZeroDivisionError):
    """A Laplace-domain expression was evaluated at (or too close to) a pole."""


class UnsupportedEnv(JCMasterError):
    """The requested quantity is not available for this bath state/model."""


class IllConditioned(JCMasterError):
    """Numerical deconvolution cannot be trusted for this input."""


class SingularityApproach(JCMasterError):
    """An integration grid comes too close to a flagged generator singularity."""


class GridMismatch(JCMasterError, ValueError):
    """Two trajectories are not defined on the same time grid."""


class QuadratureError(JCMasterError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SingularMap(RuntimeWarning):
    """Warning: grid points where the evolution map is (nearly) non-invertible."""


class ConfigError(JCMasterError, ValueError):
    """A run configuration is malformed or inconsistent."""
