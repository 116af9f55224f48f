import math

import numpy as np
import pytest

from bbenc.circuit import project_block, unitary_of
from bbenc.errors import DomainError, SolverError
from bbenc.evolution import (SUZUKI_P, HamiltonianSpec, build_hamiltonian_matrix, exact_evolution, gqsp_block,
                             gqsp_circuit, gqsp_evolve, hamiltonian_be, measure_error, steps_for_eps,
                             trotter_circuit, trotter_evolve, trotter_unitary)
from bbenc.gqsp import gqsp_phases
from bbenc.lattice import DigitizationGrid, apply_function, build_phi, v1_potential
from bbenc.poly import jacobi_anger
from bbenc.qubitization import make_walk


@pytest.fixture(scope="module")
def single3():
    spec = HamiltonianSpec(1, DigitizationGrid(3, 2.75))
    return spec, make_walk(hamiltonian_be(spec)), build_hamiltonian_matrix(spec)


def test_single_site_matrix():
    spec = HamiltonianSpec(1, DigitizationGrid(2, 2.75))
    H = build_hamiltonian_matrix(spec)
    assert H.shape == (4, 4)
    np.testing.assert_allclose(H, H.conj().T, atol=1e-14)
    F = spec.fourier()
    kin = F.conj().T @ np.diag(spec.h_pi_diag()) @ F
    v = apply_function(build_phi(spec.grid), v1_potential()).values
    np.testing.assert_allclose(np.diag(H - kin).real, v, atol=1e-12)


def test_two_site_dimension():
    assert build_hamiltonian_matrix(HamiltonianSpec(2, DigitizationGrid(2, 2.75))).shape == (16, 16)


def test_v2_potential_part():
    spec = HamiltonianSpec(1, DigitizationGrid(3, 2.0), potential="v2", g=1.0)
    np.testing.assert_allclose(spec.h_phi(), np.cos(build_phi(spec.grid).values), atol=1e-15)


def test_spec_validation():
    with pytest.raises(DomainError):
        HamiltonianSpec(3, DigitizationGrid(2, 1.0))
    with pytest.raises(DomainError):
        HamiltonianSpec(1, DigitizationGrid(2, 1.0), potential="v9")


def test_measure_error_examples():
    H = np.diag([0.1, 0.0])
    assert measure_error(exact_evolution(H, 1.0), H, 1.0) <= 1e-12
    assert measure_error(np.eye(2), H, 1.0) == pytest.approx(2 * math.sin(0.05), abs=1e-14)
    with pytest.raises(DomainError):
        measure_error(np.eye(3), H, 1.0)


def test_measure_error_triangle(single3):
    spec, _, H = single3
    a = trotter_unitary(spec, 0.5, 3)
    b = trotter_unitary(spec, 0.5, 5)
    ea, eb = measure_error(a, H, 0.5), measure_error(b, H, 0.5)
    assert measure_error(a @ b, H, 1.0) <= ea + eb + 1e-10


def test_hamiltonian_be_exact(single3):
    spec, walk, H = single3
    be = walk.source
    np.testing.assert_allclose(be.block() * be.alpha, H, atol=1e-10)
    two = hamiltonian_be(HamiltonianSpec(2, DigitizationGrid(2, 2.75)))
    assert two.residual() <= 1e-12


def test_gqsp_t0(single3):
    _, walk, H = single3
    _, rep = gqsp_evolve(walk, 0.0, 1e-6)
    assert rep.queries == 0
    assert rep.eps_measured <= 1e-12


def test_gqsp_t1(single3):
    _, walk, H = single3
    _, rep = gqsp_evolve(walk, 1.0, 1e-8)
    assert rep.eps_measured <= 1e-8
    K = jacobi_anger(walk.alpha * 1.0, 1e-8).K
    assert rep.extra["K"] == K
    assert rep.queries == 2 * K
    assert rep.alpha_t == pytest.approx(walk.alpha)


def test_gqsp_circuit_matches_block():
    # small alpha*t so the dense circuit stays cheap
    spec = HamiltonianSpec(1, DigitizationGrid(2, 1.0), lam=0.0)
    walk = make_walk(hamiltonian_be(spec))
    t = 0.3 / walk.alpha
    circ, rep = gqsp_evolve(walk, t, 1e-6, build_circuit=True)
    ph = gqsp_phases(jacobi_anger(walk.alpha * t, 1e-6))
    anc = circ.ancilla_qubits
    np.testing.assert_allclose(project_block(circ, anc), gqsp_block(walk, ph), atol=1e-10)
    assert rep.eps_measured <= 1e-6


def test_gqsp_rejects_eps(single3):
    with pytest.raises(DomainError):
        gqsp_evolve(single3[1], 1.0, 0.0)


def test_trotter_circuit_matches_unitary():
    spec = HamiltonianSpec(1, DigitizationGrid(2, 2.0))
    for order in (2, 4):
        U = unitary_of(trotter_circuit(spec, 0.7, 2, order))
        np.testing.assert_allclose(U, trotter_unitary(spec, 0.7, 2, order), atol=1e-12)
    two = HamiltonianSpec(2, DigitizationGrid(2, 2.0))
    np.testing.assert_allclose(unitary_of(trotter_circuit(two, 0.3, 1)), trotter_unitary(two, 0.3, 1), atol=1e-12)


def test_trotter_convergence_monotone(single3):
    spec, _, H = single3
    errs = [trotter_evolve(spec, 1.0, s, H=H)[1].eps_measured for s in (10, 20, 40, 80, 160)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


@pytest.mark.parametrize("order,steps,expect,tol", [(2, (400, 4000), 2.0, 0.1), (4, (100, 1000), 4.0, 0.2)])
def test_trotter_slopes(single3, order, steps, expect, tol):
    spec, _, H = single3
    e = [measure_error(trotter_unitary(spec, 1.0, s, order), H, 1.0) for s in steps]
    slope = math.log10(e[0] / e[1])
    assert abs(slope - expect) <= tol


def test_trotter_report_counts(single3):
    spec, _, H = single3
    circ, rep = trotter_evolve(spec, 1.0, 5, H=H)
    assert circ.metadata["repetitions"] == 5
    assert rep.steps == 5
    assert rep.counts.rotations > 0
    with pytest.raises(DomainError):
        trotter_evolve(spec, 1.0, 0)


def test_steps_for_eps_minimal(single3):
    spec, _, H = single3
    s = steps_for_eps(spec, 1.0, 1e-3, 2, H)
    assert measure_error(trotter_unitary(spec, 1.0, s), H, 1.0) <= 1e-3
    assert measure_error(trotter_unitary(spec, 1.0, s - 1), H, 1.0) > 1e-3


def test_steps_for_eps_floor(single3):
    spec, _, H = single3
    with pytest.raises(SolverError):
        steps_for_eps(spec, 1.0, 1e-15, 2, H)


def test_suzuki_p():
    assert 4 * SUZUKI_P + (1 - 4 * SUZUKI_P) == pytest.approx(1.0)
    assert 4 * SUZUKI_P ** 3 + (1 - 4 * SUZUKI_P) ** 3 == pytest.approx(0.0, abs=1e-14)
