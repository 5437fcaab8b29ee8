"""Exception hierarchy shared by the solver and the command line driver.

The CLI maps these onto distinct exit codes, so runs can be scripted and
failures triaged without parsing log text.
"""


class PhasedropError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(PhasedropError):
    """Malformed or inconsistent run configuration (exit code 2)."""


class InvariantViolation(PhasedropError):
    """A monitored runtime invariant failed, e.g. the discrete maximum
    principle or an energy bound (exit code 3)."""


class NumericalFailure(PhasedropError):
    """NaN/Inf contamination or a linear solve that did not meet its
    residual contract (exit code 4)."""


class ComparisonFailure(PhasedropError):
    """An oracle comparison exceeded its tolerance or left its validity
    window (exit code 5)."""
