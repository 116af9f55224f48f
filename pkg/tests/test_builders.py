import math

import numpy as np
import pytest

from bbenc.builders import (METHODS, OPERATORS, QetuConfig, build_be, build_xi_be, fit_even_target,
                            operator_target, qetu_block_encode, qsvt_block_encode)
from bbenc.errors import DomainError, ParityError
from bbenc.lattice import (DigitizationGrid, DiagonalOperator, PauliZPolynomial, ShiftParams, apply_function,
                           build_phi, build_pi_diag, difference_operator, pauli_z_decompose, v1_potential)
from bbenc.poly import ChebyshevSeries
from bbenc.qubitization import verify_s


def phi_be(n_q=2, phi_max=3.0):
    phi = build_phi(DigitizationGrid(n_q, phi_max))
    return build_xi_be(pauli_z_decompose(phi), target=phi), phi


def test_xi_be_phi():
    be, phi = phi_be()
    assert be.alpha == pytest.approx(3.0)
    assert be.num_ancillas == 1
    np.testing.assert_allclose(be.block(), np.diag(phi.values) / 3.0, atol=1e-14)


def test_xi_be_pi_same_shape():
    g = DigitizationGrid(3, 2.0)
    # rounding-level Walsh terms are dropped, as build_be does
    a = build_xi_be(pauli_z_decompose(build_phi(g), tol=1e-13))
    b = build_xi_be(pauli_z_decompose(build_pi_diag(g), tol=1e-13))
    assert a.circuit.num_qubits == b.circuit.num_qubits
    assert [type(x) for x in a.circuit.gates] == [type(x) for x in b.circuit.gates]
    assert b.alpha == pytest.approx(g.pi_max)


def test_xi_be_single_term():
    be = build_xi_be(PauliZPolynomial(1, {(0,): -0.5}))
    assert be.alpha == 0.5
    np.testing.assert_allclose(be.block(), np.diag([-1.0, 1.0]), atol=1e-15)
    with pytest.raises(DomainError):
        build_xi_be(PauliZPolynomial(1, {(): 1.0}))


def test_qsvt_identity_series():
    be, _ = phi_be()
    q = qsvt_block_encode(be, ChebyshevSeries([1.0], "even"))
    np.testing.assert_allclose(q.block(), np.eye(4), atol=1e-14)


def test_qsvt_x_squared():
    be, phi = phi_be()
    q = qsvt_block_encode(be, ChebyshevSeries([0.5, 0.0, 0.5], "even"))
    np.testing.assert_allclose(q.block(), np.diag((phi.values / 3.0) ** 2), atol=1e-10)
    assert q.queries == 2
    assert q.s_kind == "Z" and q.s_qubit == 0


def test_qsvt_v1_nq3():
    be, phi = phi_be(3, 2.75)
    q = qsvt_block_encode(be, f=v1_potential())
    v = apply_function(phi, v1_potential()).values
    np.testing.assert_allclose(q.block() * q.alpha, np.diag(v), atol=1e-8 * q.alpha)
    assert q.alpha == pytest.approx(np.max(v))


def test_qsvt_rejects_odd():
    be, _ = phi_be()
    with pytest.raises(ParityError):
        qsvt_block_encode(be, ChebyshevSeries([0.0, 1.0], "odd"))
    with pytest.raises(ParityError):
        qsvt_block_encode(be, f=lambda x: x)


def test_qetu_constant():
    phi = build_phi(DigitizationGrid(2, 1.0))
    be = qetu_block_encode(phi, lambda x: 2.0 + 0 * x)
    assert be.alpha == 2.0
    np.testing.assert_allclose(be.block(), np.eye(4), atol=1e-12)


def test_qetu_v1_exp_tau():
    phi = build_phi(DigitizationGrid(3, 2.75))
    be = qetu_block_encode(phi, v1_potential(), QetuConfig("exp-tau"))
    assert be.metadata["tau"] == pytest.approx(2.0)
    assert be.residual() <= 1e-8
    assert be.metadata["degree"] <= 2 ** 3
    assert be.num_ancillas == 1


def test_qetu_diff_operator():
    grid = DigitizationGrid(2, 1.5)
    d = difference_operator(grid)
    be = qetu_block_encode(d, lambda x: 0.5 * x * x, QetuConfig("exp-tau"))
    assert be.alpha == pytest.approx(2 * grid.phi_max ** 2)
    np.testing.assert_allclose(be.block(), np.diag(0.5 * d.values ** 2) / be.alpha, atol=1e-8)


def test_qetu_arccos_queries_equal_degree():
    phi = build_phi(DigitizationGrid(3, 2.75))
    be = qetu_block_encode(phi, v1_potential(), QetuConfig("exp-arccos"))
    assert be.queries == be.metadata["degree"] == 4
    assert be.residual() <= 1e-8


@pytest.mark.parametrize("block", ["exp-tau", "exp-arccos"])
def test_qetu_odd_target_routes_to_love(block):
    phi = build_phi(DigitizationGrid(2, 1.0))
    with pytest.raises(ParityError, match="love_lcu"):
        qetu_block_encode(phi, lambda x: x, QetuConfig(block))


def test_qetu_config_checks():
    with pytest.raises(DomainError):
        QetuConfig("other")
    with pytest.raises(DomainError):
        QetuConfig("exp-tau", shift=ShiftParams(1.0, 1.0, 3.0))
    with pytest.raises(DomainError):
        qetu_block_encode(DiagonalOperator(1, [-2.0, 2.0]), lambda x: x * x, QetuConfig("exp-arccos", alpha=1.0))


def test_fit_even_target_lowest_degree():
    x = np.linspace(-1, 1, 15)
    s, scale = fit_even_target(x, x ** 2)
    assert s.degree == 2 and scale == 1.0


def test_fit_even_target_overshoot():
    x = np.array([-1.0, -0.2, 0.2, 1.0])
    s, scale = fit_even_target(x, np.array([0.0, 1.0, 1.0, 0.0]))
    assert scale > 1.0
    assert s.sup_norm() <= 1 + 1e-12
    np.testing.assert_allclose(s(x) * scale, [0.0, 1.0, 1.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("n_q", [2, 3])
@pytest.mark.parametrize("name", OPERATORS)
@pytest.mark.parametrize("method", METHODS)
def test_build_be_residuals(method, name, n_q):
    be = build_be(method, name, DigitizationGrid(n_q, 2.75))
    assert be.residual() <= 1e-8
    xi, f = operator_target(name, DigitizationGrid(n_q, 2.75))
    assert be.alpha >= np.max(np.abs(f(xi.values))) - 1e-12


@pytest.mark.parametrize("method", ["qsvt", "qetu-exp", "qetu-arccos", "love-lcu"])
def test_s_descriptors(method):
    be = build_be(method, "v1", DigitizationGrid(2, 2.75))
    assert be.s_kind == "Z"
    rep = verify_s(be)
    assert rep.passed and rep.commutation <= 1e-10


def test_phi_operator_only_for_parity_free_methods():
    g = DigitizationGrid(2, 2.75)
    assert build_be("love-lcu", "phi", g).residual() <= 1e-12
    assert build_be("lcu", "phi", g).residual() <= 1e-12
    for method in ("qsvt", "qetu-exp", "qetu-arccos"):
        with pytest.raises(ParityError):
            build_be(method, "phi", g)


def test_unknown_names():
    g = DigitizationGrid(2, 1.0)
    with pytest.raises(DomainError):
        build_be("magic", "v1", g)
    with pytest.raises(DomainError):
        build_be("lcu", "x3", g)


def test_cos_love_beta_is_g():
    be = build_be("love-lcu", "cos", DigitizationGrid(3, math.pi), g=1.0)
    assert be.alpha == 1.0
    assert be.residual() <= 1e-13
