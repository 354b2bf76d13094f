"""Analytic free-field sound fields and the synthesis model.

Time dependence is ``exp(-1j*omega*t)``: a plane wave travelling along the
unit vector ``p`` is ``exp(1j*k*p.r)`` and the outgoing free-field Green's
function is ``exp(1j*k*d) / (4*pi*d)``. A plane wave travelling along ``p``
arrives *from* ``-p``.
"""
from dataclasses import dataclass

import numpy as np

from . import sphfunc
from ._validation import check_points, check_vector3, wavenumber_of

__all__ = [
    "WaveContext",
    "PlaneWaveField",
    "PointSourceField",
    "TransferSet",
    "direction_from_angles",
    "plane_wave_pressure",
    "point_source_pressure",
    "plane_wave_coeffs",
    "point_source_coeffs",
    "transfer_matrix",
    "transfer_coeffs",
    "synthesize_pressure",
]

DEFAULT_SOUND_SPEED = 343.0


@dataclass(frozen=True)
class WaveContext:
    """Monochromatic setting: angular frequency, sound speed, wavenumber."""

    omega: float
    sound_speed: float = DEFAULT_SOUND_SPEED

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("angular frequency must be positive")
        if not self.sound_speed > 0:
            raise ValueError("sound speed must be positive")

    @classmethod
    def from_frequency(cls, frequency, sound_speed=DEFAULT_SOUND_SPEED):
        return cls(2 * np.pi * frequency, sound_speed)

    @property
    def wavenumber(self):
        return self.omega / self.sound_speed

    @property
    def frequency(self):
        return self.omega / (2 * np.pi)


def direction_from_angles(theta, azimuth):
    """Unit vector for polar angle ``theta`` (from +z) and azimuth (from +x)."""
    return np.array([
        np.sin(theta) * np.cos(azimuth),
        np.sin(theta) * np.sin(azimuth),
        np.cos(theta),
    ])


@dataclass(frozen=True)
class PlaneWaveField:
    direction: np.ndarray
    amplitude: complex = 1.0

    def __post_init__(self):
        direction = check_vector3(self.direction, "direction")
        if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
            raise ValueError("propagation direction must be a unit vector")
        object.__setattr__(self, "direction", direction)

    @classmethod
    def from_angles(cls, theta, azimuth, amplitude=1.0):
        return cls(direction_from_angles(theta, azimuth), amplitude)

    @property
    def arrival_direction(self):
        return -self.direction


@dataclass(frozen=True)
class PointSourceField:
    position: np.ndarray
    amplitude: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "position", check_vector3(self.position, "position"))


@dataclass(frozen=True)
class TransferSet:
    """Transfer functions of ``L`` sources.

    ``pressure`` has shape (num_points, L) and ``coeffs`` shape
    ((order+1)**2, L); either may be absent.
    """

    points: np.ndarray = None
    pressure: np.ndarray = None
    coeffs: np.ndarray = None
    center: np.ndarray = None

    @property
    def num_sources(self):
        mat = self.pressure if self.pressure is not None else self.coeffs
        return mat.shape[1]


def plane_wave_pressure(field, ctx, r):
    """Pressure of a plane wave at point(s) ``r``."""
    r = np.asarray(r, dtype=float)
    return field.amplitude * np.exp(1j * wavenumber_of(ctx) * (r @ field.direction))


def point_source_pressure(src, ctx, r):
    """Free-field Green's function times the source amplitude at ``r``."""
    r = np.asarray(r, dtype=float)
    dist = np.linalg.norm(r - src.position, axis=-1)
    if np.any(dist <= 1e-6):
        raise ValueError("evaluation point coincides with the source")
    k = wavenumber_of(ctx)
    return src.amplitude * np.exp(1j * k * dist) / (4 * np.pi * dist)


def plane_wave_coeffs(field, ctx, center, order):
    """Expansion coefficients of a plane wave about ``center``.

    ``sqrt(4 pi) 1j**n conj(Y_{n,m}(p)) exp(1j k p.center)``.
    """
    center = check_vector3(center, "center")
    n, m = sphfunc.orders_degrees(order)
    _, theta, azimuth = sphfunc.cart2sph(field.direction)
    harm = sphfunc.sph_harm_matrix(order, theta, azimuth)[0]
    phase = field.amplitude * np.exp(1j * wavenumber_of(ctx) * (field.direction @ center))
    return phase * np.sqrt(4 * np.pi) * (1j) ** (n % 4) * np.conj(harm)


def point_source_coeffs(src, ctx, center, order, radius=None):
    """Interior expansion coefficients of a point source about ``center``.

    ``1j k h_n(k d) conj(Y_{n,m}(d_hat)) / sqrt(4 pi)`` with ``d`` the vector
    from the center to the source. The expansion is valid inside the ball of
    radius ``|d|``; passing ``radius`` checks the intended reconstruction
    radius against it.
    """
    center = check_vector3(center, "center")
    return transfer_coeffs(src.position[None, :], ctx, center, order, radius)[:, 0] * src.amplitude


def transfer_matrix(sources, points, ctx):
    """Green's function matrix ``G[i, l]`` from source ``l`` to point ``i``."""
    sources = check_points(sources, "sources")
    points = check_points(points, "points")
    dist = np.linalg.norm(points[:, None, :] - sources[None, :, :], axis=-1)
    if np.any(dist <= 1e-6):
        raise ValueError("a point coincides with a source")
    k = wavenumber_of(ctx)
    return np.exp(1j * k * dist) / (4 * np.pi * dist)


def transfer_coeffs(sources, ctx, center, order, radius=None):
    """Expansion coefficients of unit point sources, shape ((order+1)**2, L)."""
    sources = check_points(sources, "sources")
    center = check_vector3(center, "center")
    rel = sources - center
    dist, theta, azimuth = sphfunc.cart2sph(rel)
    if np.any(dist <= 0):
        raise ValueError("source located at the expansion center")
    if radius is not None and np.any(dist <= radius):
        raise ValueError(
            f"source at distance {dist.min():.3g} m lies inside the "
            f"reconstruction radius {radius:.3g} m; interior expansion invalid"
        )
    k = wavenumber_of(ctx)
    n, _ = sphfunc.orders_degrees(order)
    hankel = sphfunc.sph_hankel1(np.arange(order + 1)[:, None], k * dist[None, :])
    harm = sphfunc.sph_harm_matrix(order, theta, azimuth).T
    return 1j * k * hankel[n] * np.conj(harm) / np.sqrt(4 * np.pi)


def synthesize_pressure(d, transfers):
    """Synthesized field ``G @ d``.

    ``transfers`` is a :class:`TransferSet` with pressures or a bare matrix.
    """
    mat = transfers.pressure if isinstance(transfers, TransferSet) else np.asarray(transfers)
    d = np.asarray(d)
    if mat.shape[1] != d.shape[0]:
        raise ValueError(
            f"driving signal length {d.shape[0]} does not match {mat.shape[1]} sources"
        )
    return mat @ d
