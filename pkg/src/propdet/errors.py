"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: usage problems exit 1, data/format
problems exit 2, numerical failures exit 3.
"""


class PropdetError(Exception):
    pass


class FormatError(PropdetError):
    """Malformed input file (bad column, bad value, broken invariant)."""


class AlignmentError(PropdetError):
    """Prediction runs or label sequences that do not cover the same tokens."""


class ConfigError(PropdetError):
    """Train/predict configuration mismatch (features, dimensions)."""


class NumericalError(PropdetError):
    """Non-finite loss or parameters during training."""
