"""Driving-signal solvers for pressure and mode matching.

Four methods share one regularized least-squares core:

========  ==============================================================
PM        ``(G^H G + eta I)^-1 G^H u``
WPM       ``(G^H W_PM G + lam I)^-1 G^H W_PM u``
MM        ``(Gc^H Gc + gam I)^-1 Gc^H uc`` on a truncated (or sectorial)
          subset of expansion coefficients
WMM       ``(Gc^H W_MM Gc + gam I)^-1 Gc^H W_MM uc``
========  ==============================================================

``W_PM`` integrates the squared error of the kernel-interpolated field over
the target region and ``W_MM`` integrates the squared error of the truncated
expansion. Both take any quadrature of the region (see
:func:`region_quadrature`).
"""
import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from sklearn.base import BaseEstimator, RegressorMixin

from . import sphfunc
from ._metrics import sdr
from ._validation import (check_hermitian, check_matrix, check_points, check_positive,
                          check_rhs, check_vector3)
from .capture import DEFAULT_XI_FACTOR, kernel_gram, kernel_vector

__all__ = [
    "Rectangle",
    "Sphere",
    "TargetRegion",
    "WeightMatrix",
    "DrivingSignal",
    "DEFAULT_REG_FACTOR",
    "region_quadrature",
    "weight_pm",
    "weight_mm",
    "reg_param",
    "mode_mask",
    "mm_truncation_order",
    "solve_pm",
    "solve_wpm",
    "solve_mm",
    "solve_wmm",
    "prune_wmm_weights",
    "PressureMatching",
    "WeightedPressureMatching",
    "ModeMatching",
    "WeightedModeMatching",
]

DEFAULT_REG_FACTOR = 1e-3


# ----------------------------------------------------------------- regions

@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle in the plane ``z = center[2]``."""

    center: tuple = (0.0, 0.0, 0.0)
    size: tuple = (1.0, 1.0)

    def __post_init__(self):
        center = tuple(float(v) for v in check_vector3(self.center, "center"))
        size = tuple(float(v) for v in self.size)
        if len(size) != 2 or min(size) < 0:
            raise ValueError("size must be two non-negative lengths")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "size", size)

    @property
    def measure(self):
        return self.size[0] * self.size[1]

    @property
    def circumradius(self):
        return 0.5 * float(np.hypot(*self.size))

    def contains(self, points, tol=1e-9):
        rel = np.atleast_2d(points) - np.asarray(self.center)
        half = np.asarray(self.size) / 2 + tol
        return (np.abs(rel[:, 0]) <= half[0]) & (np.abs(rel[:, 1]) <= half[1]) & (np.abs(rel[:, 2]) <= tol)

    def grid(self, counts, inclusive=True):
        """Regular ``nx x ny`` grid, either touching the edges or cell-centered."""
        nx, ny = counts
        axes = []
        for n, width, c in zip((nx, ny), self.size, self.center):
            if n < 1:
                raise ValueError("grid counts must be positive")
            if inclusive and n > 1:
                axes.append(c + np.linspace(-width / 2, width / 2, n))
            else:
                axes.append(c + ((np.arange(n) + 0.5) / n - 0.5) * width)
        gx, gy = np.meshgrid(*axes)
        return np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, self.center[2])])

    def to_dict(self):
        return {"shape": "rectangle", "center": list(self.center), "size": list(self.size)}


@dataclass(frozen=True)
class Sphere:
    """Solid ball."""

    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 0.5

    def __post_init__(self):
        center = tuple(float(v) for v in check_vector3(self.center, "center"))
        object.__setattr__(self, "center", center)
        check_positive(float(self.radius), "radius")

    @property
    def measure(self):
        return 4.0 / 3.0 * np.pi * self.radius ** 3

    @property
    def circumradius(self):
        return float(self.radius)

    def contains(self, points, tol=1e-9):
        rel = np.atleast_2d(points) - np.asarray(self.center)
        return np.linalg.norm(rel, axis=1) <= self.radius + tol

    def to_dict(self):
        return {"shape": "sphere", "center": list(self.center), "radius": self.radius}


def shape_from_dict(desc):
    desc = dict(desc)
    kind = desc.pop("shape")
    if kind == "rectangle":
        return Rectangle(**desc)
    if kind == "sphere":
        return Sphere(**desc)
    raise ValueError(f"unknown region shape {kind!r}")


@dataclass(frozen=True, eq=False)
class TargetRegion:
    """Quadrature nodes and positive weights over a region."""

    shape: object
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def measure(self):
        return self.shape.measure


def _axis_weights(n, width, rule):
    if n == 1:
        return np.array([width])
    h = width / (n - 1)
    if rule == "trapezoid":
        w = np.full(n, h)
        w[[0, -1]] = h / 2
        return w
    if rule == "simpson":
        if n % 2 == 0:
            raise ValueError("simpson rule needs an odd number of nodes per axis")
        w = np.full(n, 2 * h / 3)
        w[1::2] = 4 * h / 3
        w[[0, -1]] = h / 3
        return w
    raise ValueError("rule must be 'uniform', 'trapezoid' or 'simpson'")


def region_quadrature(shape, spacing, rule="uniform"):
    """Quadrature of a region on a regular grid.

    Parameters
    ----------
    shape : Rectangle or Sphere
    spacing : float
        Node spacing in meters. A rectangle of width ``w`` gets
        ``round(w / spacing) + 1`` nodes per axis including both edges. A
        ball uses a Gauss-Legendre rule in radius and polar cosine and a
        uniform rule in azimuth, with node counts chosen from ``spacing``.
    rule : {"uniform", "trapezoid", "simpson"}
        Rectangle weights. ``"uniform"`` gives every node ``measure /
        num_nodes``, i.e. the integral is the region measure times the mean
        over the nodes; it converges at first order because edge nodes are
        over-weighted. The product trapezoid and Simpson rules use the same
        nodes and converge at second and fourth order.

    Returns
    -------
    TargetRegion
    """
    spacing = check_positive(spacing, "spacing")
    if isinstance(shape, Rectangle):
        counts = [int(round(w / spacing)) + 1 if w > 0 else 1 for w in shape.size]
        nodes = shape.grid(counts, inclusive=True)
        if shape.measure == 0:
            raise ValueError("region has zero area")
        if rule == "uniform":
            weights = np.full(len(nodes), shape.measure / len(nodes))
        else:
            wx, wy = (_axis_weights(n, w, rule) for n, w in zip(counts, shape.size))
            weights = np.outer(wy, wx).ravel()
        return TargetRegion(shape, nodes, weights)
    if isinstance(shape, Sphere):
        radius = shape.radius
        n_rad = max(1, int(np.ceil(radius / spacing)))
        n_pol = max(1, int(np.ceil(np.pi * radius / spacing)))
        n_az = 2 * n_pol
        xr, wr = np.polynomial.legendre.leggauss(n_rad)
        rad = radius * (xr + 1) / 2
        wrad = wr * radius / 2 * rad ** 2
        cos_t, wpol = np.polynomial.legendre.leggauss(n_pol)
        az = 2 * np.pi * np.arange(n_az) / n_az
        rr, ct, aa = np.meshgrid(rad, cos_t, az, indexing="ij")
        st = np.sqrt(1 - ct ** 2)
        nodes = np.column_stack([
            (rr * st * np.cos(aa)).ravel(),
            (rr * st * np.sin(aa)).ravel(),
            (rr * ct).ravel(),
        ]) + np.asarray(shape.center)
        weights = (wrad[:, None, None] * wpol[None, :, None] * np.full(n_az, 2 * np.pi / n_az)).ravel()
        return TargetRegion(shape, nodes, weights)
    raise TypeError(f"unsupported region shape {type(shape).__name__}")


# ----------------------------------------------------------------- weights

@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Hermitian PSD weighting matrix.

    ``kind`` is ``"pm"`` (control-point domain) or ``"mm"`` (coefficient
    domain). ``provenance`` records the inputs that produced it.
    """

    kind: str
    data: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("pm", "mm"):
            raise ValueError("kind must be 'pm' or 'mm'")
        data = check_hermitian(check_matrix(self.data, "weight"), "weight", rtol=1e-10)
        data = 0.5 * (data + data.conj().T)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def to_csv(self, path):
        """Write one ``i, j, re, im`` row per entry."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for key, value in sorted(self.provenance.items()):
                fh.write(f"# {key}={value}\n")
            writer.writerow(["i", "j", "re", "im"])
            n = self.data.shape[0]
            for i in range(n):
                for j in range(n):
                    z = self.data[i, j]
                    writer.writerow([i, j, repr(float(z.real)), repr(float(z.imag))])


def weight_pm(control, region, ctx, xi=None, xi_factor=DEFAULT_XI_FACTOR):
    """Weight on control-point errors from kernel interpolation.

    ``W = P^H (sum_q w_q conj(kappa_q) kappa_q^T) P`` with
    ``P = (K + xi I)^-1``. Depends on control positions and the region
    only.
    """
    control = check_points(control, "control")
    gram = kernel_gram(control, ctx, xi, xi_factor, warn=False)
    kappa = kernel_vector(region.nodes, control, gram.wavenumber)
    integral = (kappa.T * region.weights) @ kappa
    proj = gram.solve(np.eye(len(control)))
    proj = 0.5 * (proj + proj.T)
    data = proj.T @ integral @ proj
    prov = {"wavenumber": gram.wavenumber, "xi": gram.xi, "num_control": len(control),
            "num_nodes": len(region.nodes)}
    return WeightMatrix("pm", data.astype(complex), prov)


def weight_mm(region, ctx, order, center=(0.0, 0.0, 0.0)):
    """Weight on expansion-coefficient errors: ``sum_q w_q conj(phi_q) phi_q^T``."""
    if order < 0:
        raise ValueError("order must be non-negative")
    center = check_vector3(center, "center")
    k = check_positive(float(getattr(ctx, "wavenumber", ctx)), "wavenumber")
    phi = sphfunc.wavefunction_matrix(region.nodes - center, k, order)
    data = (phi.conj().T * region.weights) @ phi
    prov = {"wavenumber": k, "order": order, "center": tuple(center),
            "num_nodes": len(region.nodes)}
    return WeightMatrix("mm", data, prov)


def reg_param(mat, factor=DEFAULT_REG_FACTOR):
    """``factor`` times the largest eigenvalue of a Hermitian matrix."""
    factor = check_positive(factor, "factor")
    mat = check_hermitian(check_matrix(mat, "matrix"), "matrix")
    return float(sla.eigvalsh(mat, subset_by_index=[len(mat) - 1, len(mat) - 1])[0]) * factor


# ----------------------------------------------------------------- solvers

@dataclass(frozen=True)
class DrivingSignal:
    d: np.ndarray
    method: str
    reg: float
    frequency: float = None


def _weighted_ridge(design, target, weight, reg, reg_factor):
    """Solve ``(A^H W A + reg I) d = A^H W b`` with a Cholesky factor."""
    design = check_matrix(design, "transfer matrix")
    target = check_rhs(target, design.shape[0], "target")
    if weight is None:
        wa = design
    else:
        weight = weight.data if isinstance(weight, WeightMatrix) else check_matrix(weight, "weight")
        if weight.shape != (design.shape[0],) * 2:
            raise ValueError(f"weight shape {weight.shape} does not match {design.shape[0]} rows")
        wa = weight @ design
    normal = design.conj().T @ wa
    normal = 0.5 * (normal + normal.conj().T)
    if reg is None:
        reg = reg_param(normal, reg_factor)
    reg = check_positive(reg, "regularization")
    rhs = wa.conj().T @ target
    d = sla.cho_solve(sla.cho_factor(normal + reg * np.eye(len(normal)), lower=True), rhs)
    return d, reg


def solve_pm(G, u_des, reg=None, reg_factor=DEFAULT_REG_FACTOR, frequency=None):
    """Pressure matching at control points.

    Parameters
    ----------
    G : array_like, shape (N, L)
        Transfer functions from sources to control points.
    u_des : array_like, shape (N,)
    reg : float, optional
        Ridge parameter; defaults to ``reg_factor * lambda_max(G^H G)``.
    """
    d, reg = _weighted_ridge(G, u_des, None, reg, reg_factor)
    return DrivingSignal(d, "pm", reg, frequency)


def solve_wpm(G, u_des, weight, reg=None, reg_factor=DEFAULT_REG_FACTOR, frequency=None):
    """Weighted pressure matching with a control-point weight matrix."""
    d, reg = _weighted_ridge(G, u_des, weight, reg, reg_factor)
    return DrivingSignal(d, "wpm", reg, frequency)


def mode_mask(num_rows, order=None, sectorial=False):
    """Boolean mask of active coefficients among the first ``num_rows``."""
    max_order = int(round(np.sqrt(num_rows))) - 1
    if sphfunc.num_coeffs(max_order) != num_rows:
        raise ValueError("coefficient count must be a perfect square")
    n, m = sphfunc.orders_degrees(max_order)
    order = max_order if order is None else order
    if order > max_order:
        raise ValueError(f"order {order} exceeds the {max_order} available in the coefficients")
    mask = n <= order
    if sectorial:
        mask &= n == np.abs(m)
    return mask


def mm_truncation_order(ctx, radius):
    """``ceil(k R)`` for a region of circumradius ``R``."""
    k = check_positive(float(getattr(ctx, "wavenumber", ctx)), "wavenumber")
    return int(np.ceil(k * check_positive(radius, "radius")))


def solve_mm(Gc, uc, order=None, sectorial=False, reg=None, reg_factor=DEFAULT_REG_FACTOR,
             frequency=None):
    """Mode matching on a truncated coefficient set.

    Parameters
    ----------
    Gc : array_like, shape ((N+1)**2, L)
        Expansion coefficients of the source transfer functions.
    uc : array_like, shape ((N+1)**2,)
        Desired expansion coefficients.
    order : int, optional
        Highest order kept, at most ``N``.
    sectorial : bool
        Keep only coefficients with ``n == |m|``.
    """
    Gc = check_matrix(Gc, "coefficient transfer matrix")
    uc = check_rhs(uc, Gc.shape[0], "desired coefficients")
    mask = mode_mask(Gc.shape[0], order, sectorial)
    if not mask.any():
        raise ValueError("active coefficient set is empty")
    d, reg = _weighted_ridge(Gc[mask], uc[mask], None, reg, reg_factor)
    return DrivingSignal(d, "mm", reg, frequency)


def solve_wmm(Gc, uc, weight, reg=None, reg_factor=DEFAULT_REG_FACTOR, active=None,
              frequency=None):
    """Weighted mode matching.

    ``active`` optionally restricts rows of ``Gc``, ``uc`` and rows/columns
    of the weight to an index set, e.g. from :func:`prune_wmm_weights`.
    """
    Gc = check_matrix(Gc, "coefficient transfer matrix")
    uc = check_rhs(uc, Gc.shape[0], "desired coefficients")
    w = weight.data if isinstance(weight, WeightMatrix) else check_matrix(weight, "weight")
    if active is not None:
        active = np.asarray(active, dtype=int)
        if active.size == 0:
            raise ValueError("active coefficient set is empty")
        Gc, uc, w = Gc[active], uc[active], w[np.ix_(active, active)]
    d, reg = _weighted_ridge(Gc, uc, w, reg, reg_factor)
    return DrivingSignal(d, "wmm", reg, frequency)


def prune_wmm_weights(weight, delta_factor=1e-3, rule="sum"):
    """Indices of coefficients that carry non-negligible weight.

    With ``rule="sum"`` index ``k`` is kept when
    ``sum_i |W_ik| + sum_j |W_kj| > delta``; with ``rule="diagonal"`` when
    ``|W_kk| > delta``. ``delta = delta_factor * max|W|``.

    Raises
    ------
    ValueError
        If no index survives the threshold.
    """
    delta_factor = check_positive(delta_factor, "delta_factor")
    w = np.abs(weight.data if isinstance(weight, WeightMatrix) else check_matrix(weight, "weight"))
    delta = delta_factor * w.max()
    if rule == "sum":
        score = w.sum(axis=0) + w.sum(axis=1)
    elif rule == "diagonal":
        score = np.diag(w)
    else:
        raise ValueError("rule must be 'sum' or 'diagonal'")
    keep = np.flatnonzero(score > delta)
    if keep.size == 0:
        raise ValueError(f"no coefficient exceeds the pruning threshold {delta:.3g}")
    return keep


# -------------------------------------------------------------- estimators

class _RidgeReproduction(RegressorMixin, BaseEstimator):
    """Shared estimator plumbing.

    ``fit(X, y)`` takes a transfer matrix (rows are control points or
    coefficients, columns are sources) and the desired values, and stores
    the driving signal in ``coef_``. ``predict(X)`` synthesizes ``X @ coef_``
    for any transfer matrix with the same sources. ``score`` is the SDR in dB.
    """

    def predict(self, X):
        if not hasattr(self, "coef_"):
            raise AttributeError("call fit before predict")
        X = check_matrix(X, "transfer matrix")
        if X.shape[1] != self.coef_.shape[0]:
            raise ValueError(f"expected {self.coef_.shape[0]} sources, got {X.shape[1]}")
        return X @ self.coef_

    def score(self, X, y, sample_weight=None):
        return sdr(self.predict(X), np.asarray(y), sample_weight)

    def _store(self, signal, num_sources):
        self.coef_ = signal.d
        self.reg_ = signal.reg
        self.n_features_in_ = num_sources
        return self


class PressureMatching(_RidgeReproduction):
    def __init__(self, reg=None, reg_factor=DEFAULT_REG_FACTOR):
        self.reg = reg
        self.reg_factor = reg_factor

    def fit(self, X, y):
        X = check_matrix(X, "transfer matrix")
        return self._store(solve_pm(X, y, self.reg, self.reg_factor), X.shape[1])


class WeightedPressureMatching(_RidgeReproduction):
    def __init__(self, weight=None, reg=None, reg_factor=DEFAULT_REG_FACTOR):
        self.weight = weight
        self.reg = reg
        self.reg_factor = reg_factor

    def fit(self, X, y):
        X = check_matrix(X, "transfer matrix")
        weight = np.eye(X.shape[0]) if self.weight is None else self.weight
        return self._store(solve_wpm(X, y, weight, self.reg, self.reg_factor), X.shape[1])


class ModeMatching(_RidgeReproduction):
    def __init__(self, order=None, sectorial=False, reg=None, reg_factor=DEFAULT_REG_FACTOR):
        self.order = order
        self.sectorial = sectorial
        self.reg = reg
        self.reg_factor = reg_factor

    def fit(self, X, y):
        X = check_matrix(X, "coefficient transfer matrix")
        signal = solve_mm(X, y, self.order, self.sectorial, self.reg, self.reg_factor)
        return self._store(signal, X.shape[1])


class WeightedModeMatching(_RidgeReproduction):
    def __init__(self, weight=None, active=None, reg=None, reg_factor=DEFAULT_REG_FACTOR):
        self.weight = weight
        self.active = active
        self.reg = reg
        self.reg_factor = reg_factor

    def fit(self, X, y):
        X = check_matrix(X, "coefficient transfer matrix")
        weight = np.eye(X.shape[0]) if self.weight is None else self.weight
        signal = solve_wmm(X, y, weight, self.reg, self.reg_factor, self.active)
        return self._store(signal, X.shape[1])
