"""Input validation helpers shared across the package."""

import numbers

import numpy as np


def check_array(X, *, ndim=2, dtype=float, allow_empty=False, name="X"):
    """Coerce ``X`` to a float ndarray and validate its shape.

    Parameters
    ----------
    X : array-like
        Input data.
    ndim : int
        Required number of dimensions (1 or 2).
    dtype : numpy dtype
        Target dtype.
    allow_empty : bool
        Whether a zero-length first axis is acceptable.
    name : str
        Name used in error messages.

    Returns
    -------
    ndarray
        A C-contiguous array of the requested dtype.  Always a copy-safe
        view: callers may not rely on aliasing with the input.
    """
    arr = np.asarray(X, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not allow_empty and arr.shape[0] == 0:
        raise ValueError(f"{name} must not be empty")
    if np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinity")
    return np.ascontiguousarray(arr)


def check_X_y(X, y, *, y_numeric=False):
    """Validate a feature matrix and target vector of matching length."""
    X = check_array(X, ndim=2)
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"y must be 1-dimensional, got shape {y.shape}")
    if y.shape[0] != X.shape[0]:
        raise ValueError(
            f"X and y have inconsistent lengths: {X.shape[0]} != {y.shape[0]}"
        )
    if y_numeric:
        y = y.astype(float)
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains NaN or infinity")
    return X, y


def check_random_state(seed):
    """Turn ``seed`` into a numpy Generator.

    Accepts None (fresh entropy), an int, a SeedSequence, or an existing
    Generator (returned unchanged).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise TypeError(f"cannot use {seed!r} to seed a Generator")
