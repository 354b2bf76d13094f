import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfrepro import sphfunc as sf
from sfrepro.field import (PlaneWaveField, PointSourceField, TransferSet, WaveContext,
                           direction_from_angles, plane_wave_coeffs, plane_wave_pressure,
                           point_source_coeffs, point_source_pressure, synthesize_pressure,
                           transfer_coeffs, transfer_matrix)

from conftest import random_unit

CTX = WaveContext.from_frequency(500.0)


def test_wave_context():
    ctx = WaveContext.from_frequency(1000.0, 343.0)
    assert ctx.wavenumber == pytest.approx(2 * np.pi * 1000 / 343)
    assert ctx.frequency == pytest.approx(1000.0)
    with pytest.raises(ValueError):
        WaveContext(0.0)


def test_direction_from_angles():
    d = direction_from_angles(np.pi / 2, np.pi / 4)
    assert np.allclose(d, [np.sqrt(0.5), np.sqrt(0.5), 0])


def test_plane_wave_rejects_non_unit():
    with pytest.raises(ValueError):
        PlaneWaveField(np.array([1.0, 1.0, 0.0]))


# ---------------------------------------------------------------- pressure

def test_plane_wave_pressure_basics(rng):
    pw = PlaneWaveField(random_unit(rng), amplitude=0.5 - 2j)
    assert plane_wave_pressure(pw, CTX, np.zeros(3)) == pytest.approx(pw.amplitude)
    r = rng.normal(size=(10, 3))
    assert np.allclose(np.abs(plane_wave_pressure(pw, CTX, r)), abs(pw.amplitude))
    lam = 2 * np.pi / CTX.wavenumber
    assert np.allclose(plane_wave_pressure(pw, CTX, r + lam * pw.direction),
                       plane_wave_pressure(pw, CTX, r), atol=1e-12)


def test_point_source_pressure_basics(rng):
    src = PointSourceField(np.array([0.3, -0.2, 0.1]))
    d = random_unit(rng)
    p1 = point_source_pressure(src, CTX, src.position + d)
    p2 = point_source_pressure(src, CTX, src.position + 2 * d)
    assert abs(p1) == pytest.approx(1 / (4 * np.pi))
    assert abs(p2) == pytest.approx(abs(p1) / 2)
    with pytest.raises(ValueError):
        point_source_pressure(src, CTX, src.position)


def test_point_source_reciprocity(rng):
    a, b = rng.normal(size=(2, 3))
    assert point_source_pressure(PointSourceField(a), CTX, b) == pytest.approx(
        point_source_pressure(PointSourceField(b), CTX, a))


def test_point_source_helmholtz_residual():
    src = PointSourceField(np.zeros(3))
    k = CTX.wavenumber
    x0 = np.array([0.4, 0.3, -0.2])
    offsets = np.vstack([np.zeros(3), np.eye(3), -np.eye(3)])

    def residual(h):
        u = point_source_pressure(src, CTX, x0 + h * offsets)
        lap = (u[1:].sum() - 6 * u[0]) / h ** 2
        return abs(lap + k ** 2 * u[0])

    r1, r2 = residual(1e-2), residual(5e-3)
    assert r2 < r1
    assert r1 / r2 == pytest.approx(4.0, rel=0.1)


# ------------------------------------------------------------ coefficients

def test_plane_wave_coeffs_center_value(rng):
    pw = PlaneWaveField(random_unit(rng), amplitude=2.0)
    assert plane_wave_coeffs(pw, CTX, np.zeros(3), 4)[0] == pytest.approx(2.0)
    c = rng.normal(size=3)
    assert plane_wave_coeffs(pw, CTX, c, 4)[0] == pytest.approx(plane_wave_pressure(pw, CTX, c))


def test_plane_wave_reconstruction(rng):
    k = CTX.wavenumber
    pw = PlaneWaveField(random_unit(rng))
    center = rng.normal(size=3) * 0.1
    r = center + random_unit(rng, 20) * (2.0 / k)
    phi = sf.wavefunction_matrix(r - center, k, 12)
    recon = phi @ plane_wave_coeffs(pw, CTX, center, 12)
    direct = plane_wave_pressure(pw, CTX, r)
    assert np.max(np.abs(recon - direct) / np.abs(direct)) < 1e-6


def test_plane_wave_coeffs_rotation():
    alpha = 0.7
    base = PlaneWaveField.from_angles(1.1, 0.3)
    rot = PlaneWaveField.from_angles(1.1, 0.3 + alpha)
    _, m = sf.orders_degrees(5)
    c0 = plane_wave_coeffs(base, CTX, np.zeros(3), 5)
    c1 = plane_wave_coeffs(rot, CTX, np.zeros(3), 5)
    assert np.allclose(c1, c0 * np.exp(-1j * m * alpha), atol=1e-13)


def test_point_source_coeffs_center_value():
    src = PointSourceField(np.array([1.0, 0.5, 0.2]), amplitude=3.0)
    c = np.array([0.1, -0.1, 0.0])
    coeffs = point_source_coeffs(src, CTX, c, 6)
    assert coeffs[0] == pytest.approx(point_source_pressure(src, CTX, c), rel=1e-12)


def test_point_source_reconstruction(rng):
    src = PointSourceField(1.5 * random_unit(rng))
    k = CTX.wavenumber
    r = random_unit(rng, 20) * (1.5 / k)
    recon = sf.wavefunction_matrix(r, k, 15) @ point_source_coeffs(src, CTX, np.zeros(3), 15)
    direct = point_source_pressure(src, CTX, r)
    assert np.max(np.abs(recon - direct) / np.abs(direct)) < 1e-5


def test_point_source_coeffs_decay():
    # Raw coefficients grow with order like h_n; the per-order contribution
    # |c_n| j_n(kR) inside the validity ball is what decays.
    src = PointSourceField(np.array([1.5, 0.0, 0.0]))
    k, radius = CTX.wavenumber, 0.5
    coeffs = point_source_coeffs(src, CTX, np.zeros(3), 30)
    n, _ = sf.orders_degrees(30)
    peak = np.array([np.abs(coeffs[n == v]).max() * sf.sph_bessel_j(v, k * radius) for v in range(31)])
    start = int(np.ceil(k * radius)) + 2
    assert np.all(np.diff(peak[start:]) < 0)
    assert peak[-1] < 1e-8 * peak.max()


def test_point_source_coeffs_validity_radius():
    src = PointSourceField(np.array([0.4, 0.0, 0.0]))
    with pytest.raises(ValueError, match="reconstruction radius"):
        point_source_coeffs(src, CTX, np.zeros(3), 5, radius=0.5)
    point_source_coeffs(src, CTX, np.zeros(3), 5, radius=0.3)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 10.0), st.integers(0, 2**31 - 1))
def test_reconstruction_property(kr, seed):
    rng = np.random.default_rng(seed)
    radius = 0.5
    k = kr / radius
    order = int(np.ceil(kr)) + 10
    r = random_unit(rng, 8) * radius
    pw = PlaneWaveField(random_unit(rng))
    recon = sf.wavefunction_matrix(r, k, order) @ plane_wave_coeffs(pw, k, np.zeros(3), order)
    assert np.max(np.abs(recon - plane_wave_pressure(pw, k, r))) < 1e-5
    src = PointSourceField(random_unit(rng) * 3 * radius)
    recon = sf.wavefunction_matrix(r, k, order) @ point_source_coeffs(src, k, np.zeros(3), order)
    direct = point_source_pressure(src, k, r)
    assert np.max(np.abs(recon - direct) / np.abs(direct)) < 1e-5


# ---------------------------------------------------------------- transfer

def test_transfer_matrix_columns(rng):
    sources = rng.normal(size=(4, 3)) + 3
    points = rng.normal(size=(6, 3))
    G = transfer_matrix(sources, points, CTX)
    for l, s in enumerate(sources):
        assert np.allclose(G[:, l], point_source_pressure(PointSourceField(s), CTX, points))
    Gc = transfer_coeffs(sources, CTX, np.zeros(3), 3)
    assert Gc.shape == (16, 4)
    assert np.allclose(Gc[0], G[0] * 0 + transfer_matrix(sources, np.zeros((1, 3)), CTX)[0])


def test_synthesize_pressure(rng):
    G = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    ts = TransferSet(points=np.zeros((5, 3)), pressure=G)
    assert ts.num_sources == 3
    assert np.allclose(synthesize_pressure(np.zeros(3), ts), 0)
    assert np.allclose(synthesize_pressure(np.eye(3)[1], ts), G[:, 1])
    d1, d2 = rng.normal(size=(2, 3))
    assert np.allclose(synthesize_pressure(d1 + d2, G), synthesize_pressure(d1, G) + synthesize_pressure(d2, G))
    with pytest.raises(ValueError):
        synthesize_pressure(np.zeros(4), G)
