"""Input validation helpers shared across modules."""
from __future__ import annotations

import math
from numbers import Real

import numpy as np

from .exceptions import DomainError


def check_ranks(u, name="u"):
    """Validate rank(s) in [0, 1].

    Returns ``(array, is_scalar)`` so callers can hand back a float for
    scalar input.
    """
    arr = np.asarray(u, dtype=float)
    if arr.size and (np.any(~np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr, arr.ndim == 0


def as_output(arr, is_scalar):
    if is_scalar:
        return float(arr)
    return arr


def check_coverage(p, allow_one=True) -> float:
    """Return the coverage rate as a float, validating ``0 < p <= 1``.

    Accepts a plain number or anything with a ``p`` attribute
    (e.g. :class:`selbias.beta.CoverageRate`).
    """
    p = getattr(p, "p", p)
    if isinstance(p, bool) or not isinstance(p, (Real, np.floating, np.integer)):
        raise DomainError(f"coverage rate must be a real number, got {p!r}")
    p = float(p)
    if not math.isfinite(p) or p <= 0.0 or p > 1.0:
        raise DomainError(f"coverage rate must satisfy 0 < p <= 1, got {p}")
    if not allow_one and p == 1.0:
        raise DomainError("p = 1 is the identity correction and cannot be calibrated")
    return p


def check_positive(x, name) -> float:
    if isinstance(x, bool) or not isinstance(x, (Real, np.floating, np.integer)):
        raise DomainError(f"{name} must be a real number, got {x!r}")
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"{name} must be positive and finite, got {x}")
    return x
