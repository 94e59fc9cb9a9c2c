"""Exception types shared across the toolkit.

Everything derives from ValueError so callers can catch broadly, but each
condition keeps its own name because the CLI and the experiment harness
report them individually.
"""


class ZeroMatrix(ValueError):
    """Input matrix is numerically zero (no column space to work with)."""


class RankDeficientSupport(ValueError):
    """The selected dictionary columns are numerically rank deficient."""


class RankDeficient(ValueError):
    """Observation matrix has no usable column space."""


class NonIntegerAperture(ValueError):
    """Steering-grid construction requires a positive integer aperture."""


class TooLarge(ValueError):
    """An exhaustive computation would exceed the configured budget."""


class NotEnoughCandidates(ValueError):
    """Fewer usable candidates than requested selections."""


class DegenerateDenominator(ValueError):
    """In-support energy is numerically zero; the ratio is undefined."""


class OIRTooLarge(ValueError):
    """Certificates are undefined when the energy ratio reaches one."""


class InfiniteMargin(ValueError):
    """Selection-margin denominator is numerically zero."""


class CardinalityMismatch(ValueError):
    """Support sets being compared have different sizes."""


class Infeasible(ValueError):
    """No branch count satisfies the requested condition."""
