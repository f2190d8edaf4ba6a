"""Exception taxonomy shared by every module.

The split mirrors the CLI exit codes: configuration problems, numeric
failures (non-finite values, blow-ups), and required-but-missed
convergence are distinct failure classes.
"""


class ShapeError(ValueError):
    """A vector, matrix, or bundle does not conform to the owning network."""


class NumericError(ArithmeticError):
    """A non-finite value appeared where the computation requires finiteness."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""


class ConvergenceError(RuntimeError):
    """Convergence was required (strict mode) but a relaxation did not converge."""
