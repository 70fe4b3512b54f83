"""Input validation helpers shared by the estimators and functional API.

scikit-learn's ``check_array`` refuses complex input, so these mirror its
behaviour for the complex-valued snapshot matrices used here.
"""

import numpy as np


def check_series(x, name="x", length=None):
    """Return ``x`` as a finite 1-D complex array."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    arr = arr.astype(np.complex128, copy=False)
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_cir_matrix(h, name="H", n_rows=None, min_cols=1):
    """Return ``h`` as a finite 2-D complex array (rows = time, cols = delay bins).

    Accepts anything with a ``data`` attribute (e.g. ``SnapshotMatrix``).
    """
    arr = np.asarray(getattr(h, "data", h))
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (time x bins), got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] < min_cols:
        raise ValueError(f"{name} is empty (shape {arr.shape})")
    arr = arr.astype(np.complex128, copy=False)
    if n_rows is not None and arr.shape[0] != n_rows:
        raise ValueError(f"{name} has {arr.shape[0]} rows, expected {n_rows}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_hermitian(m, name="matrix", rtol=1e-10):
    """Return ``m`` as a square complex array after checking it is Hermitian."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    scale = np.linalg.norm(arr)
    if np.linalg.norm(arr - arr.conj().T) > rtol * max(scale, np.finfo(float).tiny):
        raise ValueError(f"{name} is not Hermitian within {rtol:g} relative")
    return arr


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value
