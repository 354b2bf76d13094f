import numpy as np
import pytest


def sphere_quadrature(n_pol=40, n_az=80):
    """Gauss-Legendre in cos(theta) x uniform azimuth; exact for band-limited
    integrands up to degree 2*n_pol - 1 in theta and n_az - 1 in azimuth."""
    x, w = np.polynomial.legendre.leggauss(n_pol)
    az = 2 * np.pi * np.arange(n_az) / n_az
    ct, aa = np.meshgrid(x, az, indexing="ij")
    st = np.sqrt(1 - ct ** 2)
    dirs = np.column_stack([(st * np.cos(aa)).ravel(), (st * np.sin(aa)).ravel(), ct.ravel()])
    weights = (w[:, None] * np.full(n_az, 2 * np.pi / n_az)).ravel()
    return dirs, weights


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def quad():
    return sphere_quadrature()


def random_unit(rng, n=None):
    v = rng.standard_normal((3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
