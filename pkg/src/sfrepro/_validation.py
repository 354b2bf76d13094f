"""Input checks shared by the public functions and estimators."""
import numpy as np


def check_vector3(value, name="vector"):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_points(value, name="points"):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1 and arr.shape == (3,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] == 0:
        raise ValueError(f"{name} must have shape (n, 3) with n >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_matrix(value, name="matrix", dtype=complex):
    arr = np.asarray(value, dtype=dtype)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got {arr.ndim}-D")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_rhs(value, rows, name="target"):
    arr = np.asarray(value, dtype=complex)
    if arr.ndim not in (1, 2) or arr.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got shape {arr.shape}")
    return arr


def check_hermitian(mat, name="matrix", rtol=1e-8):
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square")
    scale = max(np.abs(mat).max(), np.finfo(float).tiny)
    if np.abs(mat - mat.conj().T).max() > rtol * scale:
        raise ValueError(f"{name} must be Hermitian")
    return mat


def check_positive(value, name):
    if not (np.isscalar(value) and np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def wavenumber_of(ctx):
    """Wavenumber of a ``WaveContext`` or a bare positive number."""
    return check_positive(float(getattr(ctx, "wavenumber", ctx)), "wavenumber")
