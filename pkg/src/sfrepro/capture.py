"""Sound field estimation from discrete microphone observations.

Two estimators are provided:

* kernel ridge interpolation of pressure with the kernel
  ``j0(k |r - r'|)`` (omnidirectional observations), and
* infinite-dimensional harmonic analysis, which maps observations of
  microphones with arbitrary directivity to expansion coefficients about
  a chosen center: ``u(r_o) = Xi(r_o) (Psi + xi I)^-1 s``.

A microphone ``m`` with directivity coefficients ``c_m`` observes
``s_m = c_m^H u(r_m)`` where ``u(r_m)`` are the expansion coefficients of
the field about its own position.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from sklearn.base import BaseEstimator, RegressorMixin

from . import sphfunc
from ._metrics import sdr
from ._validation import check_points, check_positive, check_rhs, check_vector3

__all__ = [
    "IllConditionedWarning",
    "DirectivityCoeffs",
    "MicArray",
    "KernelGram",
    "DEFAULT_XI_FACTOR",
    "default_xi",
    "kernel_gram",
    "kernel_vector",
    "kernel_interpolate",
    "directivity_coeffs_omni",
    "directivity_coeffs_cardioid",
    "xi_matrix",
    "psi_matrix",
    "idha_estimate",
    "KernelInterpolator",
    "HarmonicAnalysis",
]

DEFAULT_XI_FACTOR = 1e-3
CONDITION_LIMIT = 1e12


class IllConditionedWarning(UserWarning):
    """Raised when a Gram matrix is numerically singular."""


def _wavenumber(ctx):
    return check_positive(float(getattr(ctx, "wavenumber", ctx)), "wavenumber")


def _j0(x):
    return np.sinc(np.asarray(x) / np.pi)


# ------------------------------------------------------------ directivity

@dataclass(frozen=True)
class DirectivityCoeffs:
    """Spherical-harmonic coefficients of a microphone directivity."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex).ravel()
        order = int(round(np.sqrt(data.size))) - 1
        if order < 0 or sphfunc.num_coeffs(order) != data.size:
            raise ValueError("directivity length must be a perfect square")
        if not np.all(np.isfinite(data)):
            raise ValueError("directivity coefficients must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def order(self):
        return int(round(np.sqrt(self.data.size))) - 1

    @property
    def is_omni(self):
        return self.order == 0 or not np.any(self.data[1:])

    def padded(self, order):
        out = np.zeros(sphfunc.num_coeffs(order), dtype=complex)
        n = min(out.size, self.data.size)
        out[:n] = self.data[:n]
        return out


def directivity_coeffs_omni():
    """Omnidirectional microphone: ``c_00 = 1``."""
    return DirectivityCoeffs(np.array([1.0 + 0j]))


def directivity_coeffs_cardioid(beta, direction):
    """First-order unidirectional microphone pointing at ``direction``.

    The directivity pattern is ``beta + (1 - beta) cos(angle)`` where the
    angle is taken between the arrival direction of a plane wave and
    ``direction``. ``beta = 1`` is omnidirectional and ``beta = 0.5`` a
    cardioid.

    Returns coefficients ``c_00 = beta`` and
    ``c_1m = -1j sqrt(4 pi) / 3 (1 - beta) conj(Y_1m(direction))``.
    """
    if not (np.isscalar(beta) and 0.0 <= beta <= 1.0):
        raise ValueError("beta must lie in [0, 1]")
    direction = check_vector3(direction, "direction")
    if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    _, theta, azimuth = sphfunc.cart2sph(direction)
    harm = sphfunc.sph_harm_matrix(1, theta, azimuth)[0, 1:]
    data = np.empty(4, dtype=complex)
    data[0] = beta
    data[1:] = -1j * np.sqrt(4 * np.pi) / 3 * (1 - beta) * np.conj(harm)
    return DirectivityCoeffs(data)


@dataclass(frozen=True)
class MicArray:
    """Microphone positions with per-microphone directivity."""

    positions: np.ndarray
    directivities: tuple = None

    def __post_init__(self):
        pos = check_points(self.positions, "positions")
        dirs = self.directivities
        if dirs is None:
            dirs = tuple(directivity_coeffs_omni() for _ in range(len(pos)))
        dirs = tuple(d if isinstance(d, DirectivityCoeffs) else DirectivityCoeffs(d) for d in dirs)
        if len(dirs) != len(pos):
            raise ValueError("one directivity per microphone is required")
        dist = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
        if np.any(dist[np.triu_indices(len(pos), 1)] == 0.0):
            raise ValueError("microphone positions must be pairwise distinct")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "directivities", dirs)

    def __len__(self):
        return len(self.positions)

    @property
    def is_omni(self):
        return all(d.is_omni for d in self.directivities)

    @property
    def max_order(self):
        return max(d.order for d in self.directivities)


# ---------------------------------------------------- kernel interpolation

@dataclass(frozen=True, eq=False)
class KernelGram:
    """Kernel Gram matrix with a ridge regularizer and its Cholesky factor.

    Immutable after construction, so one instance may serve concurrent
    queries.
    """

    positions: np.ndarray
    wavenumber: float
    K: np.ndarray
    xi: float
    condition: float = np.nan
    _factor: tuple = field(default=None, repr=False)

    @property
    def regularized(self):
        return self.K + self.xi * np.eye(len(self.K))

    def solve(self, rhs):
        """``(K + xi I)^-1 rhs``."""
        return sla.cho_solve(self._factor, rhs)


def _check_condition(mat, what, warn):
    cond = np.linalg.cond(mat)
    if warn and not cond < CONDITION_LIMIT:
        warnings.warn(
            f"{what} is ill-conditioned (condition number {cond:.3g})",
            IllConditionedWarning,
            stacklevel=3,
        )
    return cond


def default_xi(gram, factor=DEFAULT_XI_FACTOR):
    """Ridge parameter ``factor * lambda_max(gram)``."""
    return float(np.linalg.eigvalsh(gram).max()) * factor


def kernel_gram(positions, ctx, xi=None, xi_factor=DEFAULT_XI_FACTOR, warn=True):
    """Gram matrix ``K_ij = j0(k |r_i - r_j|)`` with regularizer.

    Parameters
    ----------
    positions : array_like, shape (M, 3)
    ctx : WaveContext or float
        Wavenumber source.
    xi : float, optional
        Ridge parameter; defaults to ``xi_factor * lambda_max(K)``.
    warn : bool
        Emit :class:`IllConditionedWarning` when ``K`` itself is singular to
        working precision.
    """
    pos = check_points(positions, "positions")
    k = _wavenumber(ctx)
    gram = _j0(k * np.linalg.norm(pos[:, None] - pos[None], axis=-1))
    np.fill_diagonal(gram, 1.0)
    cond = _check_condition(gram, "kernel Gram matrix", warn)
    if xi is None:
        xi = default_xi(gram, xi_factor)
    xi = check_positive(xi, "xi")
    factor = sla.cho_factor(gram + xi * np.eye(len(pos)), lower=True)
    return KernelGram(pos, k, gram, xi, cond, factor)


def kernel_vector(r, positions, ctx):
    """``kappa(r)_m = j0(k |r - r_m|)``; 2-D ``r`` gives one row per point."""
    pos = check_points(positions, "positions")
    k = _wavenumber(ctx)
    r = np.asarray(r, dtype=float)
    return _j0(k * np.linalg.norm(r[..., None, :] - pos, axis=-1))


def kernel_interpolate(observations, gram, query):
    """Kernel ridge estimate ``kappa(r)^T (K + xi I)^-1 s`` at query points."""
    s = check_rhs(observations, len(gram.K), "observations")
    alpha = gram.solve(s)
    query = check_points(query, "query")
    return kernel_vector(query, gram.positions, gram.wavenumber) @ alpha


# ----------------------------------------------------- harmonic analysis

def xi_matrix(mics, center, ctx, order):
    """Columns ``T(center - r_m) c_m`` for every microphone.

    Omnidirectional microphones use the closed form
    ``conj(phi(r_m - center))`` of the translated (0, 0) unit vector.

    Returns
    -------
    ndarray, shape ((order+1)**2, M)
    """
    center = check_vector3(center, "center")
    if order < 0:
        raise ValueError("order must be non-negative")
    k = _wavenumber(ctx)
    out = np.empty((sphfunc.num_coeffs(order), len(mics)), dtype=complex)
    omni = np.array([d.is_omni for d in mics.directivities])
    if omni.any():
        gain = np.array([d.data[0] for d in mics.directivities])[omni]
        phi = sphfunc.wavefunction_matrix(mics.positions[omni] - center, k, order)
        out[:, omni] = np.conj(phi).T * gain
    for m in np.flatnonzero(~omni):
        coeffs = mics.directivities[m]
        tr = sphfunc.translation_matrix(center - mics.positions[m], k, order, coeffs.order)
        out[:, m] = tr @ coeffs.data
    return out


def psi_matrix(mics, ctx):
    """Observation Gram matrix ``Psi_mm' = c_m^H T(r_m - r_m') c_m'``.

    Exact at the directivity orders. Reduces to the kernel Gram matrix for
    omnidirectional microphones.
    """
    k = _wavenumber(ctx)
    pos = mics.positions
    num = len(pos)
    if mics.is_omni:
        gain = np.array([d.data[0] for d in mics.directivities])
        gram = _j0(k * np.linalg.norm(pos[:, None] - pos[None], axis=-1))
        np.fill_diagonal(gram, 1.0)
        return np.conj(gain)[:, None] * gram * gain[None, :]
    psi = np.empty((num, num), dtype=complex)
    for a in range(num):
        ca = mics.directivities[a]
        for b in range(a, num):
            cb = mics.directivities[b]
            tr = sphfunc.translation_matrix(pos[a] - pos[b], k, ca.order, cb.order)
            psi[a, b] = np.vdot(ca.data, tr @ cb.data)
            psi[b, a] = np.conj(psi[a, b])
    return psi


def idha_estimate(observations, mics, center, ctx, order, xi=None,
                  xi_factor=DEFAULT_XI_FACTOR, warn=True):
    """Expansion coefficients about ``center`` from microphone observations.

    Computes ``Xi(center) (Psi + xi I)^-1 s``; ``observations`` may hold
    several right-hand sides as columns.

    Parameters
    ----------
    observations : array_like, shape (M,) or (M, J)
    mics : MicArray
    center : array_like, shape (3,)
    ctx : WaveContext or float
    order : int
        Truncation order of the returned coefficients.
    xi : float, optional
        Ridge parameter, default ``xi_factor * lambda_max(Psi)``.

    Returns
    -------
    ndarray, shape ((order+1)**2,) or ((order+1)**2, J)
    """
    s = check_rhs(observations, len(mics), "observations")
    psi = psi_matrix(mics, ctx)
    if xi is None:
        xi = default_xi(psi, xi_factor)
    xi = check_positive(xi, "xi")
    reg = psi + xi * np.eye(len(mics))
    _check_condition(reg, "regularized observation Gram matrix", warn)
    alpha = sla.cho_solve(sla.cho_factor(reg, lower=True), s)
    return xi_matrix(mics, center, ctx, order) @ alpha


# ------------------------------------------------------------ estimators

class KernelInterpolator(RegressorMixin, BaseEstimator):
    """Kernel ridge interpolation of a monochromatic pressure field.

    Parameters
    ----------
    wavenumber : float
    xi : float, optional
        Fixed ridge parameter. When omitted ``xi_factor * lambda_max(K)`` is
        used.
    xi_factor : float
    """

    def __init__(self, wavenumber=1.0, xi=None, xi_factor=DEFAULT_XI_FACTOR):
        self.wavenumber = wavenumber
        self.xi = xi
        self.xi_factor = xi_factor

    def fit(self, X, y):
        self.gram_ = kernel_gram(X, self.wavenumber, self.xi, self.xi_factor, warn=False)
        self.dual_coef_ = self.gram_.solve(check_rhs(y, len(self.gram_.K), "y"))
        self.n_features_in_ = 3
        return self

    def predict(self, X):
        if not hasattr(self, "dual_coef_"):
            raise AttributeError("call fit before predict")
        return kernel_vector(check_points(X, "X"), self.gram_.positions, self.wavenumber) @ self.dual_coef_

    def score(self, X, y, sample_weight=None):
        return sdr(self.predict(X), np.asarray(y), sample_weight)


class HarmonicAnalysis(RegressorMixin, BaseEstimator):
    """Expansion-coefficient estimation from microphone observations.

    ``fit`` takes microphone positions and observations and stores
    ``coef_``, the coefficients about ``center``. ``predict`` evaluates the
    truncated expansion at arbitrary points.
    """

    def __init__(self, wavenumber=1.0, order=10, center=(0.0, 0.0, 0.0),
                 directivities=None, xi=None, xi_factor=DEFAULT_XI_FACTOR):
        self.wavenumber = wavenumber
        self.order = order
        self.center = center
        self.directivities = directivities
        self.xi = xi
        self.xi_factor = xi_factor

    def fit(self, X, y):
        mics = MicArray(X, self.directivities)
        self.coef_ = idha_estimate(y, mics, self.center, self.wavenumber, self.order,
                                   self.xi, self.xi_factor, warn=False)
        self.n_features_in_ = 3
        return self

    def predict(self, X):
        if not hasattr(self, "coef_"):
            raise AttributeError("call fit before predict")
        rel = check_points(X, "X") - np.asarray(self.center, dtype=float)
        return sphfunc.wavefunction_matrix(rel, self.wavenumber, self.order) @ self.coef_

    def score(self, X, y, sample_weight=None):
        return sdr(self.predict(X), np.asarray(y), sample_weight)
