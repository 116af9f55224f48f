import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from bbenc.errors import DomainError, ParityError
from bbenc.lattice import DigitizationGrid, build_phi, v1_potential
from bbenc.poly import ChebyshevSeries, chebyshev_fit_exact, chebyshev_interpolate
from bbenc.qsp import (SymmetricPhases, eval_qetu, eval_reflection, eval_wx, phase_cache_path, qetu_shift,
                       qsp_phases_symmetric, solve_wx_phases, wx_to_qetu, wx_to_qsvt)

ZM = np.diag([1.0, -1.0])
XM = np.array([[0.0, 1.0], [1.0, 0.0]])


def oracle_wx(phases, x):
    # independent product of matrix exponentials
    W = expm(1j * math.acos(x) * XM)
    U = expm(1j * phases[0] * ZM)
    for p in phases[1:]:
        U = U @ W @ expm(1j * p * ZM)
    return U[0, 0].real


def test_constant_series():
    ph = solve_wx_phases(ChebyshevSeries([1.0], "even"))
    assert ph.degree == 0
    assert oracle_wx(ph.phases, 0.3) == pytest.approx(1.0, abs=1e-15)


def test_t2():
    ph = solve_wx_phases(ChebyshevSeries([0.0, 0.0, 1.0], "even"), use_cache=False)
    for x in np.cos(np.pi * (np.arange(4) + 0.5) / 4):
        assert oracle_wx(ph.phases, x) == pytest.approx(2 * x * x - 1, abs=1e-12)


def test_v1_degree16_nq4():
    phi = build_phi(DigitizationGrid(4, 2.75)).values
    v = v1_potential()(phi)
    s = chebyshev_fit_exact(phi / np.max(np.abs(phi)), v / np.max(v), "even")
    assert s.degree <= 16
    ph = solve_wx_phases(s, use_cache=False)
    assert ph.residual <= 1e-10


def test_symmetry_is_bitwise():
    s = chebyshev_interpolate(lambda x: 0.6 * np.cos(4 * x), 24, "even")
    ph = solve_wx_phases(s, use_cache=False)
    assert np.array_equal(ph.phases, ph.phases[::-1])
    with pytest.raises(DomainError):
        SymmetricPhases([0.1, 0.2])


@settings(max_examples=8)
@given(st.integers(1, 12), st.integers(0, 2 ** 31 - 1))
def test_fresh_random_points(half, seed):
    rng = np.random.default_rng(seed)
    c = np.zeros(2 * half + 1)
    c[0::2] = rng.normal(size=half + 1)
    s = ChebyshevSeries(c, "even")
    s = s.scaled(0.95 / s.sup_norm())
    tol = 1e-12
    ph = solve_wx_phases(s, tol=tol, use_cache=False)
    x = rng.uniform(-1, 1, 20)
    got = eval_wx(ph.phases, x)[:, 0, 0].real
    assert np.max(np.abs(got - s(x))) <= 10 * tol
    assert oracle_wx(ph.phases, x[0]) == pytest.approx(s(x[0]), abs=10 * tol)


def test_odd_series():
    s = ChebyshevSeries([0.0, 0.5, 0.0, 0.3], "odd")
    ph = solve_wx_phases(s, use_cache=False)
    x = np.linspace(-1, 1, 11)
    np.testing.assert_allclose(eval_wx(ph.phases, x)[:, 0, 0].real, s(x), atol=1e-12)


def test_degree_64():
    s = chebyshev_interpolate(lambda x: 0.5 * np.cos(30 * x), 64, "even")
    ph = solve_wx_phases(s, use_cache=False)
    assert ph.degree == 64
    assert ph.residual <= 1e-10


def test_reflection_and_qetu_conventions():
    s = chebyshev_interpolate(lambda x: 0.7 * np.exp(-3 * x * x), 10, "even")
    x = np.linspace(-1, 1, 21)
    qsvt = qsp_phases_symmetric(s, convention="qsvt")
    np.testing.assert_allclose(eval_reflection(qsvt.phases, x)[:, 0, 0].real, s(x), atol=1e-11)
    qetu = qsp_phases_symmetric(s, convention="qetu")
    np.testing.assert_allclose(eval_qetu(qetu.phases, x)[:, 0, 0].real, s(x), atol=1e-11)


def test_qetu_shift_rule():
    out = qetu_shift(SymmetricPhases(np.zeros(3)))
    np.testing.assert_allclose(out.phases, [math.pi / 4, math.pi / 2, math.pi / 4])
    out = qetu_shift(SymmetricPhases(np.full(5, 0.1)))
    assert out.phases[0] == pytest.approx(0.1 + math.pi / 4)
    assert out.phases[-1] == pytest.approx(0.1 + math.pi / 4)
    np.testing.assert_allclose(out.phases[1:-1], 0.1 + math.pi / 2)


def test_conversion_guards():
    with pytest.raises(DomainError):
        wx_to_qsvt(SymmetricPhases(np.zeros(3), "qetu"))
    with pytest.raises(ParityError):
        wx_to_qetu(SymmetricPhases(np.zeros(4), "wx"))


def test_solver_input_errors():
    with pytest.raises(ParityError):
        solve_wx_phases(ChebyshevSeries([0.5, 0.5]))
    with pytest.raises(DomainError):
        solve_wx_phases(ChebyshevSeries([0.0, 0.0, 1.5], "even"))


def test_phase_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("BBENC_CACHE_DIR", str(tmp_path))
    s = chebyshev_interpolate(lambda x: 0.4 * x * x, 6, "even")
    a = solve_wx_phases(s)
    lines = phase_cache_path().read_text().splitlines()
    assert len(lines) == 1
    key, deg, tol, *vals = lines[0].split()
    assert int(deg) == a.degree and len(vals) == a.degree + 1
    b = solve_wx_phases(s)
    np.testing.assert_array_equal(a.phases, b.phases)
    assert len(phase_cache_path().read_text().splitlines()) == 1
