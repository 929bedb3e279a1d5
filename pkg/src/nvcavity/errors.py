"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, SolverError (and every
subclass) -> 3, IoError -> 4. Library code raises the specific subclasses.
"""


class NVCavityError(Exception):
    """Base class for everything raised deliberately by this package."""


class SolverError(NVCavityError):
    """A computation failed or its inputs made the problem ill-posed."""


class DegenerateSteadyState(SolverError):
    """The rate matrix kernel is more than one-dimensional.

    Happens whenever parts of the level scheme are disconnected, e.g. with
    no driving at all, so no unique stationary distribution exists.
    """


class NumericalFailure(SolverError):
    """The linear solve did not reach the requested residual tolerance."""


class StepFailure(SolverError):
    """The time integrator could not meet its error control."""


class ZeroDenominator(SolverError):
    """A ratio observable was requested with an all-zero reference."""


class NotConverged(SolverError):
    """An iterative fit ran out of iterations.

    Fit routines normally report this through a flag on their result rather
    than raising; the exception form exists for callers that want to opt in.
    """


class DegenerateJacobian(SolverError):
    """Fit parameters collapsed so the design matrix lost rank."""


class ZeroSpectrum(SolverError):
    """A spectrum with zero integrated intensity cannot be normalized."""


class OutOfRange(SolverError):
    """Interpolation was requested outside the tabulated grid."""


class NotInGrid(SolverError):
    """A line cut was requested at a power that is not a grid value."""


class ConfigError(NVCavityError):
    """Bad configuration file or command-line flags."""


class IoError(NVCavityError):
    """File could not be read or written."""


class SchemaMismatch(IoError):
    """An input CSV lacks the columns the requested plot needs."""
