"""Exception taxonomy shared by all horolab modules.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses: 2 for violated hypotheses/domain errors, 3 for
numerical breakdowns.
"""


class LabError(Exception):
    """Base class for all horolab errors."""

    exit_code = 2


class DomainError(LabError):
    """Input outside the operation's mathematical domain (bad rank, det != 1, ...)."""

    exit_code = 2


class PreconditionError(LabError):
    """A stated hypothesis was checked and found violated."""

    exit_code = 2


class ParameterError(LabError):
    """Parameters are mutually infeasible (e.g. no admissible threshold exists)."""

    exit_code = 2


class ValidationError(LabError):
    """A structured object failed validation; ``violations`` lists named failures."""

    exit_code = 2

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class NumericalError(LabError):
    """Numerical method failed to converge or became unstable."""

    exit_code = 3


class ConditioningError(NumericalError):
    """A linear system was too ill-conditioned to trust."""


class RangeError(NumericalError):
    """Evaluation would overflow the double range."""


class SingularityError(DomainError):
    """Evaluation at or past a pole (e.g. 1 + rt <= 0)."""


class NoCrossingError(LabError):
    """A root/crossing that the caller asked for does not exist on the horizon."""

    exit_code = 2


class HorizonError(NumericalError):
    """Bracketing ran past the configured horizon."""


class MatchingError(LabError):
    """No lattice element matches two orbit endpoints within tolerance."""

    exit_code = 2


class CuspAmbiguityError(LabError):
    """Lattice matching is ambiguous because the injectivity proxy is too small."""

    exit_code = 2


class HypothesisError(PreconditionError):
    """A quantitative hypothesis (density, Hoelder window, ...) fails on the data."""
