from __future__ import annotations

import math


class QdStreamError(RuntimeError):
    pass


class InvalidArgumentError(QdStreamError, ValueError):
    """Bad input to an operation (range, finiteness, incompatible shapes)."""


class GridMismatchError(InvalidArgumentError):
    pass


class NumericalError(QdStreamError):
    """A computation ran but cannot produce a meaningful number."""


class UndefinedVisibilityError(NumericalError):
    pass


class InsufficientRangeError(NumericalError):
    pass


class DeconvolutionUnstableError(NumericalError):
    pass


class FitError(NumericalError):
    pass


def require_finite(name: str, value: float) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"{name} must be a number, got {value!r}") from e
    if not math.isfinite(v):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")
    return v
