import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bbenc.circuit import RX, Circuit, X, Z, unitary_of
from bbenc.errors import DomainError, StructureError
from bbenc.lattice import (DigitizationGrid, DiagonalOperator, apply_function, build_phi, difference_operator,
                           embed_site, pauli_z_decompose, v1_potential, v2_potential)
from bbenc.lcu import (UnitaryTerm, control_free_sel, lcu_block_encode, lcu_combine, love_lcu, pauli_terms,
                       prep_oracle, sel_oracle)
from bbenc.qubitization import verify_s
from bbenc.synthesis import transpile

ZM = np.diag([1.0, -1.0])
XM = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_prep_equal_weights():
    np.testing.assert_allclose(unitary_of(prep_oracle([1, 1]))[:, 0], [1 / math.sqrt(2)] * 2, atol=1e-15)


def test_prep_three_to_one():
    np.testing.assert_allclose(unitary_of(prep_oracle([3, 1]))[:, 0], [math.sqrt(3) / 2, 0.5], atol=1e-15)


@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=9))
def test_prep_amplitudes(coeffs):
    c = np.array(coeffs)
    psi = unitary_of(prep_oracle(c))[:, 0]
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(psi[:c.size], np.sqrt(c / c.sum()), atol=1e-12)
    np.testing.assert_allclose(psi[c.size:], 0.0, atol=1e-12)


def test_prep_rejects_nonpositive():
    with pytest.raises(DomainError):
        prep_oracle([1.0, 0.0])
    with pytest.raises(DomainError):
        UnitaryTerm(-1.0, Circuit(1))


def test_sel_single_term_is_bare():
    sel = sel_oracle([UnitaryTerm(1.0, Circuit(1, (Z(0),)))])
    assert sel.ancilla_qubits == ()
    np.testing.assert_allclose(unitary_of(sel), ZM)


def test_sel_two_terms_block_diagonal():
    sel = sel_oracle([UnitaryTerm(1.0, Circuit(1, (Z(0),))), UnitaryTerm(1.0, Circuit(1, (X(0),)))])
    U = unitary_of(sel)
    ref = np.zeros((4, 4))
    ref[:2, :2], ref[2:, 2:] = ZM, XM
    np.testing.assert_allclose(U, ref, atol=1e-15)


def test_sel_three_terms_pads_identity():
    terms = [UnitaryTerm(1.0, Circuit(1, (g,))) for g in (Z(0), X(0), RX(0, 0.3))]
    sel = sel_oracle(terms)
    assert len(sel.ancilla_qubits) == 2
    U = unitary_of(sel)
    np.testing.assert_allclose(U[6:, 6:], np.eye(2), atol=1e-15)


def test_lcu_single_z():
    be = lcu_block_encode([UnitaryTerm(1.0, Circuit(1, (Z(0),)))])
    assert be.alpha == 1.0
    np.testing.assert_allclose(be.block(), ZM, atol=1e-15)


def test_lcu_identity_plus_z():
    be = lcu_block_encode([UnitaryTerm(1.0, Circuit(1)), UnitaryTerm(1.0, Circuit(1, (Z(0),)))])
    assert be.alpha == 2.0
    np.testing.assert_allclose(be.block(), np.diag([1.0, 0.0]), atol=1e-15)


def test_lcu_phi():
    phi = build_phi(DigitizationGrid(2, 3.0))
    be = lcu_block_encode(pauli_terms(pauli_z_decompose(phi)), target=phi)
    assert be.alpha == pytest.approx(3.0)
    np.testing.assert_allclose(be.block(), np.diag(phi.values) / 3.0, atol=1e-14)
    assert be.residual() <= 1e-14


@given(st.integers(1, 3), st.integers(0, 2 ** 31 - 1))
def test_lcu_random_diagonal(n, seed):
    op = DiagonalOperator(n, np.random.default_rng(seed).normal(size=1 << n))
    be = lcu_block_encode(pauli_terms(pauli_z_decompose(op)), target=op)
    assert be.alpha >= op.norm - 1e-12
    assert be.residual() <= 1e-12


def test_love_cos_phi_max_pi():
    g = DigitizationGrid(3, math.pi)
    cosop = apply_function(build_phi(g), v2_potential(1.0))
    be = love_lcu(cosop, beta=1.0, branch="odd")
    np.testing.assert_allclose(be.metadata["D"], build_phi(g).values, atol=1e-12)
    assert be.residual() <= 1e-14
    assert be.num_ancillas == 1


def test_love_constant_is_identity():
    be = love_lcu(DiagonalOperator(2, np.full(4, 2.5)))
    assert be.alpha == 2.5
    np.testing.assert_allclose(be.block(), np.eye(4), atol=1e-14)


def test_love_v1_thirteen_rotations():
    be = love_lcu(apply_function(build_phi(DigitizationGrid(4, 2.75)), v1_potential(1.0, 32.0)))
    _, counts = transpile(be.circuit)
    assert counts.rotations == 13
    assert be.residual() <= 1e-13


def test_love_beta_below_norm():
    with pytest.raises(DomainError):
        love_lcu(DiagonalOperator(1, [1.0, -2.0]), beta=1.0)


@given(st.integers(1, 4), st.integers(0, 2 ** 31 - 1), st.sampled_from(["principal", "odd", "auto"]),
       st.booleans())
def test_love_exact_any_diagonal(n, seed, branch, cf):
    op = DiagonalOperator(n, np.random.default_rng(seed).normal(size=1 << n))
    be = love_lcu(op, branch=branch, control_free=cf)
    assert be.residual() <= 1e-12
    rep = verify_s(be)
    assert rep.passed


def test_control_free_phi():
    g = DigitizationGrid(3, 2.0)
    circ, ok = control_free_sel(build_phi(g).values)
    assert ok
    assert sum(type(x).__name__ == "CNOT" for x in circ.gates) == 2 * 3


def test_control_free_zero():
    circ, ok = control_free_sel(np.zeros(4))
    assert ok
    np.testing.assert_allclose(unitary_of(circ), np.eye(8), atol=1e-15)


@pytest.mark.parametrize("phases", [
    np.arccos(np.linspace(-0.9, 0.7, 8)),
    build_phi(DigitizationGrid(3, 1.0)).values,
    np.random.default_rng(5).normal(size=8),
])
def test_control_free_sel_is_exact(phases):
    circ, _ = control_free_sel(phases)
    ref = np.diag(np.exp(1j * np.concatenate((phases, -phases))))
    np.testing.assert_allclose(unitary_of(circ), ref, atol=1e-13)


def test_combine_identical():
    op = DiagonalOperator(2, [0.3, -1.0, 0.5, 0.2])
    be = love_lcu(op)
    comb = lcu_combine([be, be])
    assert comb.alpha == pytest.approx(2 * be.alpha)
    np.testing.assert_allclose(comb.block(), be.block(), atol=1e-14)


def test_combine_two_site_hphi():
    grid = DigitizationGrid(2, 2.75)
    phi = build_phi(grid)
    v = apply_function(phi, v1_potential())
    d = difference_operator(grid)
    parts = [love_lcu(embed_site(v, 0, 2)), love_lcu(embed_site(v, 1, 2)),
             love_lcu(apply_function(d, lambda x: 0.5 * x * x))]
    comb = lcu_combine(parts)
    dense = embed_site(v, 0, 2).values + embed_site(v, 1, 2).values + 0.5 * d.values ** 2
    np.testing.assert_allclose(comb.block(), np.diag(dense) / comb.alpha, atol=1e-12)
    rep = verify_s(comb)
    assert rep.passed and rep.commutation <= 1e-10


def test_combine_rejects_mixed_s():
    a = love_lcu(DiagonalOperator(1, [1.0, 0.5]))
    b = lcu_block_encode([UnitaryTerm(1.0, Circuit(1, (Z(0),)))])
    with pytest.raises(StructureError):
        lcu_combine([a, b])
