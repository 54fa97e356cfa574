"""Small input-checking helpers shared across modules."""

import numbers

import numpy as np


def check_vector(x, name, dtype=float, size=None):
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} must have length {size}, got {arr.shape[0]}")
    if dtype is float and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_square(m, name, size=None, symmetric=True, atol=1e-12):
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} must be {size}x{size}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if symmetric:
        scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
        if not np.allclose(arr, arr.T, rtol=0.0, atol=atol * scale):
            raise ValueError(f"{name} must be symmetric")
    return arr


def check_int_vector(x, name, size=None):
    """Return ``x`` as an int64 vector, rejecting non-integral entries."""
    raw = np.asarray(x)
    if raw.dtype.kind == "f":
        if not np.all(np.isfinite(raw)) or not np.all(raw == np.round(raw)):
            raise ValueError(f"{name} must contain integers")
    elif raw.dtype.kind not in "iub" and raw.size:
        raise ValueError(f"{name} must contain integers")
    return check_vector(np.round(raw).astype(np.int64), name, dtype=np.int64, size=size)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_random_state(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
