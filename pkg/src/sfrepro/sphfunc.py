"""Special functions and the regular spherical-wavefunction algebra.

Conventions
-----------
Spherical harmonics are orthonormal over the unit sphere and carry the
Condon-Shortley phase, i.e. ``Y_{n,-m} = (-1)^m conj(Y_{n,m})``. The polar
angle is measured from +z and the azimuth from +x.

The regular wavefunction is scaled so that the (0, 0) coefficient of an
expansion equals the pressure at the expansion center::

    phi_{n,m}(r) = sqrt(4 pi) j_n(k |r|) Y_{n,m}(r / |r|)

Coefficients are stored flat with ``i = n**2 + n + m``.
"""
from functools import lru_cache

import numpy as np
import scipy.special as special

__all__ = [
    "mode_index",
    "mode_order_degree",
    "num_coeffs",
    "orders_degrees",
    "cart2sph",
    "sph_bessel_j",
    "sph_hankel1",
    "sph_harm",
    "sph_harm_matrix",
    "wigner_3j",
    "wigner_3j_family",
    "gaunt",
    "wavefunction_vector",
    "wavefunction_matrix",
    "translation_matrix",
    "TRANSLATION_MARGIN",
]

# Extra order used when a product of truncated translation matrices has to
# approximate the infinite-dimensional identity.
TRANSLATION_MARGIN = 8


# ---------------------------------------------------------------- indexing

def num_coeffs(order):
    """Number of coefficients up to and including ``order``."""
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    return (int(order) + 1) ** 2


def mode_index(order, degree):
    """Flat index ``n**2 + n + m`` of mode (n, m)."""
    order = np.asarray(order)
    degree = np.asarray(degree)
    if np.any(order < 0) or np.any(np.abs(degree) > order):
        raise ValueError("require order >= 0 and |degree| <= order")
    return order * order + order + degree


def mode_order_degree(index):
    """Inverse of :func:`mode_index`."""
    index = np.asarray(index)
    if np.any(index < 0):
        raise ValueError("flat index must be non-negative")
    order = np.floor(np.sqrt(index)).astype(int)
    # guard against sqrt rounding for large indices
    order = np.where((order + 1) ** 2 <= index, order + 1, order)
    order = np.where(order ** 2 > index, order - 1, order)
    degree = index - order * order - order
    if order.ndim == 0:
        return int(order), int(degree)
    return order, degree


def orders_degrees(order):
    """Arrays of (order, degree) for every flat index up to ``order``."""
    n = np.concatenate([np.full(2 * v + 1, v) for v in range(order + 1)])
    m = np.concatenate([np.arange(-v, v + 1) for v in range(order + 1)])
    return n, m


def cart2sph(pos):
    """Radius, polar and azimuth angles of Cartesian points.

    The origin maps to zero angles.
    """
    pos = np.asarray(pos, dtype=float)
    radius = np.linalg.norm(pos, axis=-1)
    safe = np.where(radius > 0, radius, 1.0)
    cos_theta = np.clip(np.where(radius > 0, pos[..., 2] / safe, 1.0), -1.0, 1.0)
    theta = np.arccos(cos_theta)
    azimuth = np.arctan2(pos[..., 1], pos[..., 0])
    return radius, theta, azimuth


# ------------------------------------------------------- radial functions

def sph_bessel_j(order, x):
    """Spherical Bessel function of the first kind, ``j_order(x)``.

    Accepts array arguments (broadcast). Negative order or argument is
    rejected.
    """
    order = np.asarray(order)
    x = np.asarray(x, dtype=float)
    if np.any(order < 0):
        raise ValueError("order must be non-negative")
    if np.any(x < 0):
        raise ValueError("argument must be non-negative")
    return special.spherical_jn(order, x)


def sph_hankel1(order, x):
    """Spherical Hankel function of the first kind, ``j_n(x) + 1j*y_n(x)``.

    Outgoing under the ``exp(-1j*omega*t)`` time convention.
    """
    order = np.asarray(order)
    x = np.asarray(x, dtype=float)
    if np.any(order < 0):
        raise ValueError("order must be non-negative")
    if np.any(x <= 0):
        raise ValueError("spherical Hankel function is singular at x <= 0")
    return special.spherical_jn(order, x) + 1j * special.spherical_yn(order, x)


# -------------------------------------------------------- angular functions

def _unit(direction, tol=1e-9):
    direction = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(direction, axis=-1)
    if np.any(np.abs(norm - 1.0) > tol):
        raise ValueError("direction must be a unit vector")
    return direction


def sph_harm(order, degree, direction):
    """Orthonormal complex spherical harmonic ``Y_{order,degree}``.

    Parameters
    ----------
    order, degree : int
        ``|degree| <= order``.
    direction : array_like, shape (..., 3)
        Unit vector(s).
    """
    if order < 0 or abs(degree) > order:
        raise ValueError(f"invalid mode ({order}, {degree})")
    _, theta, azimuth = cart2sph(_unit(direction))
    return special.sph_harm_y(order, degree, theta, azimuth)


def sph_harm_matrix(max_order, theta, azimuth):
    """All harmonics up to ``max_order`` at the given angles.

    Returns
    -------
    ndarray, shape (num_points, (max_order+1)**2)
    """
    n, m = orders_degrees(max_order)
    theta = np.atleast_1d(theta)
    azimuth = np.atleast_1d(azimuth)
    return special.sph_harm_y(n[None, :], m[None, :], theta[:, None], azimuth[:, None])


# --------------------------------------------------------- coupling coeffs

def _three_term_coeffs(j, j2, j3, m1, m2, m3):
    big_a = np.sqrt(
        max(j * j - (j2 - j3) ** 2, 0)
        * max((j2 + j3 + 1) ** 2 - j * j, 0)
        * max(j * j - m1 * m1, 0)
    )
    big_b = -(2 * j + 1) * (
        j2 * (j2 + 1) * m1 - j3 * (j3 + 1) * m1 - j * (j + 1) * (m3 - m2)
    )
    return big_a, big_b


def _envelope(vals, i):
    return max(abs(vals[i]), abs(vals[i - 1])) if i > 0 else abs(vals[i])


@lru_cache(maxsize=None)
def _w3j_family(j2, j3, m2, m3):
    m1 = -m2 - m3
    jmin = max(abs(j2 - j3), abs(m1))
    jmax = j2 + j3
    if abs(m2) > j2 or abs(m3) > j3 or jmin > jmax:
        return jmin, np.zeros(0)
    size = jmax - jmin + 1
    # Schulten-Gordon recurrence in the first argument:
    #   j A(j+1) f(j+1) + B(j) f(j) + (j+1) A(j) f(j-1) = 0
    a = np.zeros(size + 1)
    b = np.zeros(size)
    for i in range(size + 1):
        a[i], bi = _three_term_coeffs(jmin + i, j2, j3, m1, m2, m3)
        if i < size:
            b[i] = bi

    # Forward sweep is stable while the solution grows out of the lower
    # non-classical region; it cannot start at jmin == 0.
    split = 0
    fwd = np.zeros(size)
    fwd[0] = 1.0
    if jmin > 0:
        for i in range(size - 1):
            j = jmin + i
            prev = fwd[i - 1] if i > 0 else 0.0
            fwd[i + 1] = -(b[i] * fwd[i] + (j + 1) * a[i] * prev) / (j * a[i + 1])
            split = i + 1
            if i > 0 and _envelope(fwd, i + 1) < _envelope(fwd, i):
                break
            scale = abs(fwd[i + 1])
            if scale > 1e100:
                fwd /= scale

    vals = np.zeros(size)
    if split == size - 1:
        vals[:] = fwd
    else:
        back = np.zeros(size)
        back[-1] = 1.0
        stop = max(split - 2, 0)
        for i in range(size - 1, stop, -1):
            j = jmin + i
            nxt = back[i + 1] if i + 1 < size else 0.0
            back[i - 1] = -(b[i] * back[i] + j * a[i + 1] * nxt) / ((j + 1) * a[i])
            scale = abs(back[i - 1])
            if scale > 1e100:
                back /= scale
        if split == 0:
            vals[:] = back
        else:
            window = slice(stop, split + 1)
            ratio = np.dot(fwd[window], back[window]) / np.dot(fwd[window], fwd[window])
            vals[:split] = fwd[:split] * ratio
            vals[split:] = back[split:]

    norm = np.sqrt(np.sum((2 * np.arange(jmin, jmax + 1) + 1) * vals * vals))
    vals /= norm
    sign = 1.0 if (j2 - j3 + m2 + m3) % 2 == 0 else -1.0
    if vals[-1] * sign < 0:
        vals = -vals
    vals.setflags(write=False)
    return jmin, vals


def wigner_3j_family(j2, j3, m2, m3):
    """All Wigner 3j symbols ``(j1 j2 j3; -m2-m3 m2 m3)`` over ``j1``.

    Returns
    -------
    jmin : int
        First admissible ``j1``.
    values : ndarray
        Symbols for ``j1 = jmin, ..., j2 + j3``. Empty if no ``j1`` is admissible.
    """
    return _w3j_family(int(j2), int(j3), int(m2), int(m3))


def wigner_3j(j1, j2, j3, m1, m2, m3):
    """Wigner 3j symbol for integer arguments."""
    if m1 + m2 + m3 != 0 or abs(m1) > j1 or j1 < 0:
        return 0.0
    jmin, vals = wigner_3j_family(j2, j3, m2, m3)
    i = j1 - jmin
    if i < 0 or i >= len(vals):
        return 0.0
    return float(vals[i])


def _gaunt_family(n1, m1, n2, m2):
    """Gaunt coefficients over the third order; see :func:`gaunt`."""
    lo_m, vals_m = wigner_3j_family(n1, n2, m1, m2)
    lo_0, vals_0 = wigner_3j_family(n1, n2, 0, 0)
    lmax = n1 + n2
    out = np.zeros(lmax + 1)
    if len(vals_m) == 0:
        return out
    ls = np.arange(lo_m, lmax + 1)
    out[lo_m:] = vals_m * vals_0[lo_m - lo_0:]
    out[lo_m:] *= np.sqrt((2 * n1 + 1) * (2 * n2 + 1) * (2 * ls + 1) / (4 * np.pi))
    out *= (-1.0) ** (m1 + m2)
    return out


def gaunt(n1, m1, n2, m2, n3):
    """Gaunt coefficient ``G(n1, m1; n2, m2, n3)``.

    Defined as the integral over the unit sphere of
    ``Y_{n1,m1} Y_{n2,m2} conj(Y_{n3,m1+m2})``. Zero unless
    ``|n1-n2| <= n3 <= n1+n2``, ``n1+n2+n3`` is even and ``|m1+m2| <= n3``.
    """
    if n1 < 0 or n2 < 0 or n3 < 0 or abs(m1) > n1 or abs(m2) > n2:
        raise ValueError("invalid order/degree pair")
    if n3 < abs(n1 - n2) or n3 > n1 + n2 or (n1 + n2 + n3) % 2 or abs(m1 + m2) > n3:
        return 0.0
    return float(_gaunt_family(n1, m1, n2, m2)[n3])


@lru_cache(maxsize=32)
def _translation_gaunt_table(out_order, in_order):
    """G(n', m'; n, -m, l) for every output (n, m), input (n', m') and l."""
    n_out, m_out = orders_degrees(out_order)
    n_in, m_in = orders_degrees(in_order)
    lmax = out_order + in_order
    table = np.zeros((len(n_out), len(n_in), lmax + 1))
    for a, (n, m) in enumerate(zip(n_out, m_out)):
        for b, (n_p, m_p) in enumerate(zip(n_in, m_in)):
            fam = _gaunt_family(int(n_p), int(m_p), int(n), int(-m))
            table[a, b, : len(fam)] = fam
    table.setflags(write=False)
    return table


# ------------------------------------------------------------ wavefunctions

def wavefunction_matrix(pos, wavenumber, order):
    """Regular wavefunctions at many points.

    Parameters
    ----------
    pos : array_like, shape (num_points, 3)
    wavenumber : float
    order : int

    Returns
    -------
    ndarray, shape (num_points, (order+1)**2)
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    pos = np.atleast_2d(np.asarray(pos, dtype=float))
    radius, theta, azimuth = cart2sph(pos)
    n, _ = orders_degrees(order)
    radial = special.spherical_jn(np.arange(order + 1)[None, :], wavenumber * radius[:, None])
    return np.sqrt(4 * np.pi) * radial[:, n] * sph_harm_matrix(order, theta, azimuth)


def wavefunction_vector(r, ctx, order):
    """Vector of regular wavefunctions ``phi_{n,m}(r)`` up to ``order``.

    ``ctx`` is a :class:`~sfrepro.field.WaveContext` or a bare wavenumber.
    """
    k = getattr(ctx, "wavenumber", ctx)
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError("r must be a 3-vector")
    return wavefunction_matrix(r[None, :], k, order)[0]


def translation_matrix(r, ctx, out_order, in_order):
    """Translation operator for regular expansion coefficients.

    ``coeffs(center + r) = T(r) @ coeffs(center)``, restricted to output
    orders ``<= out_order`` and input orders ``<= in_order``. Each entry is
    the exact finite sum over ``l = 0 .. n + n'``; only products of
    truncated operators are approximate (see :data:`TRANSLATION_MARGIN`).

    The matrix also satisfies ``T(-r) = T(r)^H``, ``T(r + s) = T(r) T(s)`` and
    ``phi(x - y)^T T(y - z) = phi(x - z)^T``.

    Returns
    -------
    ndarray, shape ((out_order+1)**2, (in_order+1)**2)
    """
    k = getattr(ctx, "wavenumber", ctx)
    if out_order < 0 or in_order < 0:
        raise ValueError("orders must be non-negative")
    r = np.asarray(r, dtype=float)
    radius, theta, azimuth = cart2sph(r)
    if radius == 0.0:
        return np.eye(num_coeffs(out_order), num_coeffs(in_order), dtype=complex)
    lmax = out_order + in_order
    table = _translation_gaunt_table(out_order, in_order)
    n_out, m_out = orders_degrees(out_order)
    n_in, m_in = orders_degrees(in_order)

    ls = np.arange(lmax + 1)
    radial = (-1j) ** ls * special.spherical_jn(ls, k * radius)
    # conj(Y_{l,d}) for every l and degree offset d = m - m'
    dmax = out_order + in_order
    degrees = np.arange(-dmax, dmax + 1)
    lgrid, dgrid = np.meshgrid(ls, degrees, indexing="ij")
    valid = np.abs(dgrid) <= lgrid
    harm = np.zeros(lgrid.shape, dtype=complex)
    harm[valid] = np.conj(special.sph_harm_y(lgrid[valid], dgrid[valid], theta, azimuth))

    offset = (m_out[:, None] - m_in[None, :]) + dmax
    kernel = harm[:, offset] * radial[:, None, None]  # (l, out, in)
    total = np.einsum("abl,lab->ab", table, kernel)
    phase = (1j) ** ((n_in[None, :] - n_out[:, None]) % 4) * (-1.0) ** m_in[None, :]
    return 4 * np.pi * phase * total
