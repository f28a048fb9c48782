"""Exception types shared across the package.

Input problems subclass ``ValueError`` so callers can catch them generically;
the CLI maps them to exit code 2. Numerical breakdowns map to exit code 3.
"""


class DomainError(ValueError):
    """An argument lies outside the domain of a function (NaN, inf, u outside (0, 1), ...)."""


class DegenerateSampleError(ValueError):
    """The sample is too small or has zero spread."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to produce a usable result."""
