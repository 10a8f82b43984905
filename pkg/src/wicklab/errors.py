"""Exception types shared across the package and mapped to CLI exit codes."""


class WicklabError(Exception):
    code = "error"
    exit_status = 1


class ValidationError(WicklabError, ValueError):
    """A parameter lies outside its allowed range."""

    code = "validation"
    exit_status = 2

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class ResolutionError(WicklabError, ValueError):
    """Grid too coarse to represent a band-limited field exactly."""

    code = "resolution"
    exit_status = 2


class CoverageError(WicklabError, ValueError):
    """Field has modes beyond the range covered by a dyadic partition."""

    code = "coverage"
    exit_status = 2


class HypothesisViolation(WicklabError, ValueError):
    code = "hypothesis"
    exit_status = 2


class PhaseError(WicklabError, ValueError):
    """Chaos parameters outside the L2 phase."""

    code = "phase"
    exit_status = 2


class NoConvergence(WicklabError, RuntimeError):
    code = "no-convergence"
    exit_status = 3
