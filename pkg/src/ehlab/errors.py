"""Exception hierarchy shared across the laboratory modules."""


class EhlabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(EhlabError):
    """Invalid parameters, config files, or inputs (CLI exit code 2)."""


class NumericError(EhlabError):
    """Numerical failure inside a computation (CLI exit code 3)."""


class OutOfDomainError(ConfigurationError):
    """An argument lies outside the validity window of a model."""


class EmptyRegionError(ConfigurationError):
    """A region selection matched nothing."""


class InsufficientDataError(ConfigurationError):
    """Too few samples for the requested analysis."""


class SingularFitError(NumericError):
    """Degenerate data made the least-squares problem singular."""


class DegenerateSpectrumError(NumericError):
    """Quasi-energy degeneracies invalidate the phase-averaging argument."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        super().__init__(
            f"degenerate quasi-energy pairs (indices): {self.pairs[:10]}"
            + ("..." if len(self.pairs) > 10 else "")
        )


class HermiticityError(NumericError):
    """An expectation value came out with a non-negligible imaginary part."""
