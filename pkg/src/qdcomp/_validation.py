"""Input validation helpers shared across the package."""

from __future__ import annotations

import numbers

import numpy as np


def as_float_vector(x, name: str = "array") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def as_float_matrix(x, name: str = "array") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    return arr


def check_finite(arr: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_consistent_length(*pairs) -> None:
    """Raise if the named arrays do not share the same leading length.

    Arguments come as alternating ``name, array`` pairs.
    """
    names = pairs[0::2]
    arrays = pairs[1::2]
    lengths = [len(a) for a in arrays]
    if len(set(lengths)) > 1:
        detail = ", ".join(f"{n}={l}" for n, l in zip(names, lengths))
        raise ValueError(f"inconsistent array lengths: {detail}")


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    if value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value}")
    return int(value)


def check_positive_float(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ValueError(f"{name} must be a positive number, got {value!r}")
    value = float(value)
    if not value > 0 or not np.isfinite(value):
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value


def as_bounds(bounds, name: str = "bounds") -> np.ndarray:
    """Normalize a box specification to a (dim, 2) array of [low, high] rows."""
    arr = np.asarray(bounds, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (dim, 2), got {arr.shape}")
    check_finite(arr, name)
    if np.any(arr[:, 0] > arr[:, 1]):
        raise ValueError(f"{name} has a dimension with low > high")
    return arr


def as_generator(random_state) -> np.random.Generator:
    """Accept a seed or an existing Generator and return a Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    if isinstance(random_state, numbers.Integral) and not isinstance(random_state, bool):
        return np.random.default_rng(int(random_state))
    raise ValueError(
        f"random_state must be an integer seed or numpy Generator, got {random_state!r}"
    )
