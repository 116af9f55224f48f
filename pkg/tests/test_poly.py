import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as C
from scipy.special import jv

from bbenc.errors import DomainError, ParityError, SolverError
from bbenc.lattice import DigitizationGrid, build_phi, shift_for_qetu, v1_potential
from bbenc.poly import (CERT_GRID_POINTS, ChebyshevSeries, bessel_j, chebyshev_fit_exact, chebyshev_interpolate,
                        jacobi_anger)


def test_fit_x_squared():
    s = chebyshev_fit_exact([-1, 0, 1], [1, 0, 1], "even")
    np.testing.assert_allclose(s.coeffs, [0.5, 0.0, 0.5], atol=1e-15)


def test_fit_constant():
    s = chebyshev_fit_exact([-0.3, 0.2, 0.9], [1, 1, 1])
    np.testing.assert_allclose(s.trimmed().coeffs, [1.0], atol=1e-14)


def test_fit_qetu_target_nq3():
    # arcsin-composed target on the shifted grid
    phi = build_phi(DigitizationGrid(3, 2.75))
    sh, p = shift_for_qetu(phi)
    x = np.cos(p.tau * sh.values / 2)
    f = v1_potential()(phi.values)
    s = chebyshev_fit_exact(x, f / np.max(np.abs(f)), "none")
    assert np.max(np.abs(s(x) - f / np.max(np.abs(f)))) <= 1e-12


@given(st.integers(1, 12), st.integers(0, 2 ** 31 - 1))
def test_fit_even_degree_halved(u, seed):
    rng = np.random.default_rng(seed)
    # well-separated magnitudes keep the sampling system well conditioned
    mags = np.linspace(0.1, 0.95, u) + rng.uniform(-0.02, 0.02, u)
    pts = np.concatenate((-mags, mags))
    vals = np.concatenate((rng.normal(size=u),) * 2)
    s = chebyshev_fit_exact(pts, vals, "even")
    assert s.degree <= 2 * u - 2
    assert np.max(np.abs(s(pts) - vals)) <= 1e-10


def test_fit_odd():
    x = np.array([-0.5, 0.5, -1.0, 1.0])
    s = chebyshev_fit_exact(x, x ** 3, "odd")
    np.testing.assert_allclose(s.coeffs, [0, 0.75, 0, 0.25], atol=1e-14)


def test_fit_errors():
    with pytest.raises(ParityError):
        chebyshev_fit_exact([-0.5, 0.5], [1.0, 2.0], "even")
    with pytest.raises(DomainError):
        chebyshev_fit_exact([2.0], [1.0])
    with pytest.raises(SolverError):
        chebyshev_fit_exact(np.linspace(0.999, 1.0, 40), np.arange(40.0))


def test_series_parity_checked():
    with pytest.raises(ParityError):
        ChebyshevSeries([0.0, 1.0], "even")
    s = ChebyshevSeries([0.0, 0.0, 1.0], "even")
    assert s.degree == 2
    assert s.is_qsp_ready()
    assert not ChebyshevSeries([0.0, 0.0, 1.0], "none").is_qsp_ready()


def test_interpolate_matches_function():
    s = chebyshev_interpolate(np.cos, 20, "even")
    x = np.linspace(-1, 1, 101)
    assert np.max(np.abs(s(x) - np.cos(x))) <= 1e-14


@pytest.mark.parametrize("t", [0.5, 1.0, 10.0, -3.0, 80.0])
def test_bessel_matches_scipy(t):
    np.testing.assert_allclose(bessel_j(40, t), jv(np.arange(41), t), atol=1e-12)


@pytest.mark.parametrize("t", [0.5, 1.0, 10.0])
def test_bessel_series_definition(t):
    for k in (0, 1, 2):
        series = sum((-1) ** m / (math.factorial(m) * math.factorial(m + k)) * (t / 2) ** (2 * m + k)
                     for m in range(60))
        assert bessel_j(2, t)[k] == pytest.approx(series, abs=1e-12)


def test_jacobi_anger_t0():
    tab = jacobi_anger(0.0, 1e-6)
    assert tab.K == 0
    assert abs(tab.coefficient(0) * (1 + 0.5e-6) - 1) <= 1e-15


def test_jacobi_anger_symmetry():
    tab = jacobi_anger(7.3, 1e-9)
    for k in range(1, tab.K + 1):
        assert tab.coefficient(-k) == tab.coefficient(k)


@pytest.mark.parametrize("t,eps", [(1.0, 1e-3), (5.0, 1e-8), (30.0, 1e-12), (200.0, 1e-5)])
def test_jacobi_anger_sup_error(t, eps):
    tab = jacobi_anger(t, eps)
    th = 2 * np.pi * np.arange(CERT_GRID_POINTS) / CERT_GRID_POINTS
    err = np.max(np.abs(tab(th) - np.exp(-1j * t * np.cos(th))))
    assert err <= eps
    assert np.max(np.abs(tab(th))) <= 1.0


def test_jacobi_anger_order_growth():
    # K <= e|t|/2 + c log(1/eps) with a small fitted c
    for t in (1.0, 10.0, 100.0):
        for eps in (1e-3, 1e-8, 1e-12):
            K = jacobi_anger(t, eps).K
            assert K <= math.ceil(math.e * t / 2) + 2.0 * math.log(1 / eps)


def test_jacobi_anger_rejects_eps():
    with pytest.raises(DomainError):
        jacobi_anger(1.0, 1.5)
