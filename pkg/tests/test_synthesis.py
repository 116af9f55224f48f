import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bbenc.circuit import (CNOT, RX, RZ, Circuit, ControlledBlock, DiagonalPhase, GlobalPhase, H, X, unitary_of)
from bbenc.errors import CompileError
from bbenc.lattice import dft_matrix
from bbenc.synthesis import (controlled, count_gates, drop_small_rotations, qft_circuit,
                             synthesize_diagonal_unitary, transpile)


@given(st.integers(1, 6), st.integers(0, 2 ** 31 - 1))
def test_diagonal_bounds_and_exactness(n, seed):
    ph = np.random.default_rng(seed).uniform(-np.pi, np.pi, 1 << n)
    c = synthesize_diagonal_unitary(ph)
    t, counts = transpile(c)
    assert counts.rotations <= (1 << n) - 1
    assert counts.cnots <= max(0, (1 << n) - 2)
    np.testing.assert_allclose(np.diag(unitary_of(t)), np.exp(1j * ph), atol=1e-12)


def test_single_z_term_costs_one_rotation():
    # phase a*Z_0 Z_2 on three qubits: parity onto qubit 2 costs 2 CNOT + 1 RZ
    idx = np.arange(8)
    z = (1 - 2 * ((idx >> 2) & 1)) * (1 - 2 * (idx & 1))
    c = synthesize_diagonal_unitary(0.3 * z)
    _, counts = transpile(c)
    assert (counts.rotations, counts.cnots) == (1, 2)


def test_constant_diagonal_is_global_phase():
    _, counts = transpile(synthesize_diagonal_unitary(np.full(4, 0.7)))
    assert counts.rotations == 0 and counts.cnots == 0


def test_h_lowers_to_three_rotations():
    t, counts = transpile(Circuit(1, (H(0),)))
    assert counts.rotations == 3 and counts.cnots == 0
    np.testing.assert_allclose(unitary_of(t), unitary_of(Circuit(1, (H(0),))), atol=1e-14)


def test_pauli_lowering():
    assert transpile(Circuit(1, (X(0),)))[1].rotations == 1
    assert transpile(Circuit(1, (RZ(0, 0.2), RZ(0, -0.2))))[1].rotations == 0


def test_controlled_rz_cost():
    c = controlled(Circuit(1, (RZ(0, 0.9),)), 1)
    t, counts = transpile(c)
    assert (counts.rotations, counts.cnots) == (2, 2)
    np.testing.assert_allclose(unitary_of(t), unitary_of(c), atol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_qft_matches_dft(n):
    U = unitary_of(transpile(qft_circuit(n))[0])
    np.testing.assert_allclose(U, dft_matrix(n), atol=1e-12)


def test_qft_rotation_counts():
    counts = [transpile(qft_circuit(n))[1].rotations for n in range(1, 6)]
    assert counts == [3, 8, 15, 24, 35]


gate_st = st.one_of(
    st.builds(lambda q, a: RX(q, a), st.integers(0, 2), st.floats(-4, 4)),
    st.builds(lambda q, a: RZ(q, a), st.integers(0, 2), st.floats(-4, 4)),
    st.builds(lambda q: H(q), st.integers(0, 2)),
    st.builds(lambda q: X(q), st.integers(0, 2)),
    st.builds(lambda a, b: CNOT(a, (a + b) % 3), st.integers(0, 2), st.integers(1, 2)),
    st.builds(lambda p, s: DiagonalPhase((p % 3, (p + s) % 3), np.linspace(-1, 1, 4) * p),
              st.integers(0, 2), st.integers(1, 2)),
)


@given(st.lists(gate_st, max_size=10), st.integers(0, 1))
def test_transpile_preserves_unitary(gates, polarity):
    inner = Circuit(4, tuple(gates))
    c = Circuit(4, tuple(gates) + (ControlledBlock(tuple(gates), 3, polarity),))
    t, _ = transpile(c)
    np.testing.assert_allclose(unitary_of(t), unitary_of(c), atol=1e-10)
    assert inner.num_qubits == 4


@given(st.lists(gate_st, max_size=10))
def test_transpile_idempotent(gates):
    t1, c1 = transpile(Circuit(3, tuple(gates)))
    t2, c2 = transpile(t1)
    assert (c1.rotations, c1.cnots) == (c2.rotations, c2.cnots)
    assert t1.gates == t2.gates


def test_transpile_one_trailing_global_phase():
    t, _ = transpile(Circuit(2, (H(0), H(1), DiagonalPhase((0, 1), (0.1, 0.5, 0.2, 0.9)))))
    gps = [i for i, g in enumerate(t.gates) if isinstance(g, GlobalPhase)]
    assert len(gps) <= 1 and (not gps or gps[0] == len(t.gates) - 1)


def test_count_gates_requires_transpile():
    with pytest.raises(CompileError):
        count_gates(Circuit(1, (H(0),)))


def test_drop_small_rotations_bound():
    c = Circuit(2, (RZ(0, 1e-9), RX(1, 0.4), RZ(1, -3e-9), CNOT(0, 1)))
    d, dropped = drop_small_rotations(c, 1e-6)
    assert len(d) == 2
    assert dropped == pytest.approx(4e-9)
    assert np.linalg.norm(unitary_of(c) - unitary_of(d), 2) <= dropped / 2 + 1e-15
    with pytest.raises(ValueError):
        drop_small_rotations(c, -1.0)
