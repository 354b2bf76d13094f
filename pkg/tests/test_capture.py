import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from sfrepro import sphfunc as sf
from sfrepro.capture import (HarmonicAnalysis, IllConditionedWarning, KernelInterpolator,
                             MicArray, directivity_coeffs_cardioid, directivity_coeffs_omni,
                             idha_estimate, kernel_gram, kernel_interpolate, kernel_vector,
                             psi_matrix, xi_matrix)
from sfrepro.field import PlaneWaveField, WaveContext, plane_wave_coeffs, plane_wave_pressure

from conftest import random_unit, sphere_quadrature

CTX = WaveContext.from_frequency(700.0)


def grid6():
    g = np.linspace(-0.5, 0.5, 6)
    x, y = np.meshgrid(g, g)
    return np.column_stack([x.ravel(), y.ravel(), np.zeros(36)])


def j0(x):
    return np.array([sf.sph_bessel_j(0, v) for v in np.ravel(x)]).reshape(np.shape(x))


# ------------------------------------------------------------------ kernel

def test_kernel_gram_single_point():
    assert np.array_equal(kernel_gram(np.zeros((1, 3)), CTX).K, [[1.0]])


def test_kernel_gram_coincident_points_warn():
    with pytest.warns(IllConditionedWarning):
        gram = kernel_gram(np.zeros((2, 3)), CTX)
    assert np.array_equal(gram.K, np.ones((2, 2)))


def test_kernel_gram_oracle(rng):
    pos = rng.normal(size=(5, 3)) * 0.3
    gram = kernel_gram(pos, CTX)
    dist = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
    assert np.allclose(gram.K, j0(CTX.wavenumber * dist), atol=1e-15)
    assert np.array_equal(gram.K, gram.K.T)
    assert np.all(np.diag(gram.K) == 1.0)
    assert np.linalg.eigvalsh(gram.K).min() > -1e-10
    assert gram.xi == pytest.approx(1e-3 * np.linalg.eigvalsh(gram.K).max())


def test_kernel_vector(rng):
    pos = rng.normal(size=(4, 3))
    k = CTX.wavenumber
    assert kernel_vector(pos[2], pos, CTX)[2] == 1.0
    r = pos[1] + np.pi / k * random_unit(rng)
    assert abs(kernel_vector(r, pos, CTX)[1]) < 1e-12
    q = rng.normal(size=3)
    assert np.allclose(kernel_vector(q, pos, CTX), j0(k * np.linalg.norm(q - pos, axis=1)))


def test_kernel_interpolate_limits(rng):
    pos = grid6()
    s = rng.normal(size=36) + 1j * rng.normal(size=36)
    gram = kernel_gram(pos, CTX, xi=1e-12, warn=False)
    assert kernel_interpolate(s, gram, pos[7:8])[0] == pytest.approx(s[7], abs=1e-4)
    assert np.all(kernel_interpolate(np.zeros(36), kernel_gram(pos, CTX), pos) == 0)


def test_kernel_interpolate_plane_wave():
    ctx = WaveContext.from_frequency(500.0)
    pw = PlaneWaveField(np.array([1.0, 1.0, 0.0]) / np.sqrt(2))
    pos = grid6()
    gram = kernel_gram(pos, ctx)
    g = np.linspace(-0.45, 0.45, 10)
    x, y = np.meshgrid(g, g)
    query = np.column_stack([x.ravel(), y.ravel(), np.zeros(x.size)])
    est = kernel_interpolate(plane_wave_pressure(pw, ctx, pos), gram, query)
    true = plane_wave_pressure(pw, ctx, query)
    nmse = np.sum(np.abs(est - true) ** 2) / np.sum(np.abs(true) ** 2)
    assert 10 * np.log10(nmse) < -20


# ------------------------------------------------------------- directivity

def test_omni_coeffs(rng):
    c = directivity_coeffs_omni()
    assert np.array_equal(c.data, [1.0])
    u = rng.normal(size=16) + 1j * rng.normal(size=16)
    assert np.vdot(c.padded(3), u) == u[0]


def test_cardioid_reduces_to_omni():
    c = directivity_coeffs_cardioid(1.0, np.array([0, 0, 1.0]))
    assert np.allclose(c.data, [1, 0, 0, 0])
    assert c.is_omni


def test_cardioid_closed_form_and_funk_hecke(quad):
    z = np.array([0, 0, 1.0])
    c = directivity_coeffs_cardioid(0.5, z).data
    assert abs(c[1]) < 1e-15 and abs(c[3]) < 1e-15
    assert c[2] == pytest.approx(-1j * np.sqrt(4 * np.pi) / 3 * 0.5 * np.sqrt(3 / (4 * np.pi)))
    dirs, w = quad
    pattern = 0.5 + 0.5 * dirs @ z
    _, theta, az = sf.cart2sph(dirs)
    Y = sf.sph_harm_matrix(1, theta, az)
    n, _ = sf.orders_degrees(1)
    oracle = (-1j) ** n / np.sqrt(4 * np.pi) * ((pattern * w) @ np.conj(Y))
    assert np.allclose(c, oracle, atol=1e-12)


def _observe(coeffs, field, ctx, r):
    """Microphone observation ``c^H u(r)`` of a plane wave."""
    order = coeffs.order
    return np.vdot(coeffs.data, plane_wave_coeffs(field, ctx, r, order))


def test_cardioid_front_back_response(rng):
    for beta in (0.5, 0.25, 0.8):
        d = random_unit(rng)
        c = directivity_coeffs_cardioid(beta, d)
        r = rng.normal(size=3) * 0.1
        front = PlaneWaveField(-d)  # arrives from d
        back = PlaneWaveField(d)
        p = plane_wave_pressure(front, CTX, r)
        assert _observe(c, front, CTX, r) == pytest.approx(p, abs=1e-12)
        q = plane_wave_pressure(back, CTX, r)
        assert _observe(c, back, CTX, r) == pytest.approx((2 * beta - 1) * q, abs=1e-12)


def test_forward_model_directional_response(rng):
    """c^H u(r_m) equals the directivity pattern times the pressure."""
    beta, d = 0.3, random_unit(rng)
    c = directivity_coeffs_cardioid(beta, d)
    for eta in random_unit(rng, 10):
        pw = PlaneWaveField(-eta)
        r = rng.normal(size=3) * 0.2
        expected = (beta + (1 - beta) * eta @ d) * plane_wave_pressure(pw, CTX, r)
        assert abs(_observe(c, pw, CTX, r) - expected) < 1e-6


def test_cardioid_rejects_bad_beta():
    with pytest.raises(ValueError):
        directivity_coeffs_cardioid(1.5, np.array([0, 0, 1.0]))


# ------------------------------------------------------------------ Xi/Psi

def test_xi_omni_at_center():
    mics = MicArray(np.array([[0.1, 0.2, 0.0]]))
    col = xi_matrix(mics, mics.positions[0], CTX, 4)[:, 0]
    assert np.allclose(col, np.eye(25)[0])


def test_xi_omni_closed_form_matches_translation(rng):
    pos = rng.normal(size=(4, 3)) * 0.3
    center = rng.normal(size=3) * 0.1
    xi = xi_matrix(MicArray(pos), center, CTX, 6)
    for m in range(4):
        col = sf.translation_matrix(center - pos[m], CTX, 6, 0)[:, 0]
        assert np.abs(xi[:, m] - col).max() < 1e-8


def test_xi_directional_column_uses_translation(rng):
    pos = rng.normal(size=(2, 3)) * 0.2
    c = directivity_coeffs_cardioid(0.5, random_unit(rng))
    mics = MicArray(pos, [c, directivity_coeffs_omni()])
    xi = xi_matrix(mics, np.zeros(3), CTX, 5)
    assert np.allclose(xi[:, 0], sf.translation_matrix(-pos[0], CTX, 5, 1) @ c.data)


def test_xi_row_identity_reproduces_kernel(rng):
    pos = grid6() * 0.3
    center = np.zeros(3)
    xi = xi_matrix(MicArray(pos), center, CTX, 30)
    r = rng.uniform(-0.15, 0.15, (5, 3))
    lhs = sf.wavefunction_matrix(r - center, CTX.wavenumber, 30) @ xi
    assert np.abs(lhs - kernel_vector(r, pos, CTX)).max() < 1e-8


def test_psi_omni_equals_gram(rng):
    pos = rng.normal(size=(6, 3)) * 0.4
    psi = psi_matrix(MicArray(pos), CTX)
    assert np.array_equal(psi.real, kernel_gram(pos, CTX).K)
    assert np.all(np.diag(psi) == 1.0)


def test_psi_cardioid_plane_wave_oracle(rng):
    pos = rng.normal(size=(3, 3)) * 0.15
    coeffs = [directivity_coeffs_cardioid(b, random_unit(rng)) for b in (0.5, 0.3, 0.9)]
    psi = psi_matrix(MicArray(pos, coeffs), CTX)
    assert np.allclose(psi, psi.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(psi).min() > -1e-10
    dirs, w = sphere_quadrature(30, 60)
    k = CTX.wavenumber

    def pattern(c, eta):
        _, theta, az = sf.cart2sph(-eta)
        n, _ = sf.orders_degrees(1)
        return (np.sqrt(4 * np.pi) * (1j) ** n * np.conj(sf.sph_harm_matrix(1, theta, az))) @ np.conj(c.data)

    pats = [pattern(c, dirs) for c in coeffs]
    for a in range(3):
        for b in range(3):
            oracle = np.sum(w * pats[a] * np.conj(pats[b]) * np.exp(-1j * k * dirs @ (pos[a] - pos[b]))) / (4 * np.pi)
            assert abs(psi[a, b] - oracle) < 1e-6


# -------------------------------------------------------------------- IDHA

def test_idha_omni_matches_kernel_interpolation(rng):
    pos = grid6()
    s = rng.normal(size=36) + 1j * rng.normal(size=36)
    center = np.array([0.05, -0.1, 0.0])
    est = idha_estimate(s, MicArray(pos), center, CTX, 5)
    ki = kernel_interpolate(s, kernel_gram(pos, CTX), center[None])[0]
    assert est[0] == pytest.approx(ki, rel=1e-10)


def test_idha_plane_wave_low_order():
    pw = PlaneWaveField(np.array([1.0, 1.0, 0.0]) / np.sqrt(2))
    pos = grid6()
    est = idha_estimate(plane_wave_pressure(pw, CTX, pos), MicArray(pos), np.zeros(3), CTX, 12)
    true = plane_wave_coeffs(pw, CTX, np.zeros(3), 12)
    low = slice(0, sf.num_coeffs(3))
    nmse = np.sum(np.abs(est[low] - true[low]) ** 2) / np.sum(np.abs(true[low]) ** 2)
    assert 10 * np.log10(nmse) < -20


@settings(max_examples=15, deadline=None)
@given(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
       st.integers(0, 2**31 - 1))
def test_idha_linear(alpha, seed):
    rng = np.random.default_rng(seed)
    pos = grid6()
    mics = MicArray(pos)
    s1, s2 = rng.normal(size=(2, 36)) + 1j * rng.normal(size=(2, 36))
    e = lambda s: idha_estimate(s, mics, np.zeros(3), CTX, 4)
    assert np.allclose(e(alpha * s1 + s2), alpha * e(s1) + e(s2), atol=1e-9 * (1 + abs(alpha)))
    assert np.all(e(np.zeros(36)) == 0)


def test_mic_array_validation():
    with pytest.raises(ValueError):
        MicArray(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        MicArray(np.eye(3), [directivity_coeffs_omni()])


# -------------------------------------------------------------- estimators

def test_kernel_interpolator_estimator():
    pw = PlaneWaveField(np.array([1.0, 0.0, 0.0]))
    pos = grid6()
    est = KernelInterpolator(wavenumber=CTX.wavenumber).fit(pos, plane_wave_pressure(pw, CTX, pos))
    assert est.get_params()["xi_factor"] == 1e-3
    assert clone(est).get_params() == est.get_params()
    assert est.score(pos, plane_wave_pressure(pw, CTX, pos)) > 20


def test_harmonic_analysis_estimator():
    pw = PlaneWaveField(np.array([0.0, 1.0, 0.0]))
    pos = grid6()
    est = HarmonicAnalysis(wavenumber=CTX.wavenumber, order=20).fit(pos, plane_wave_pressure(pw, CTX, pos))
    assert est.coef_.shape == (441,)
    q = pos * 0.9
    assert est.score(q, plane_wave_pressure(pw, CTX, q)) > 15
    with pytest.raises(AttributeError):
        HarmonicAnalysis().predict(pos)
