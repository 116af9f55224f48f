"""Walk operators from block encodings.

With an S operator satisfying ``<0|S U|0> = <0|U|0>`` and ``(S U)^2 = I`` the
walk is ``W = R0 S U`` where ``R0 = 2|0><0| - I`` on the ancillas.  Both R0
and a single-qubit Z are diagonal on the ancillas, so they fuse into one
diagonal synthesized after the BE.  Without a valid S the generic
construction spends one extra ancilla and two controlled BE calls.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .circuit import H, Circuit, ControlledBlock, DiagonalPhase, unitary_of
from .errors import ResourceError, StructureError
from .lcu import BlockEncoding

__all__ = ["WalkOperator", "SReport", "reflection_r0", "verify_s", "make_walk", "fallback_qubitize",
           "walk_block_error", "walk_unitary"]

MAX_WALK_QUBITS = 14


@dataclass(frozen=True, eq=False)
class WalkOperator:
    circuit: Circuit
    alpha: float
    source: BlockEncoding
    queries: int = 1
    kind: str = "single-z"

    @property
    def ancillas(self):
        return self.circuit.ancilla_qubits

    @property
    def system(self):
        return self.circuit.system_qubits

    def inverse(self) -> Circuit:
        return self.circuit.inverse()


@dataclass
class SReport:
    cond_block: float = np.inf      # ||P0 (SU) P0 - P0 U P0||
    cond_square: float = np.inf     # ||(SU)^2 - I||
    commutation: Optional[float] = None  # ||S U - U^dag S|| when S is a single Z
    tol: float = 1e-8
    tol_comm: float = 1e-10
    notes: list = field(default_factory=list)

    @property
    def block_ok(self) -> bool:
        return self.cond_block <= self.tol

    @property
    def square_ok(self) -> bool:
        return self.cond_square <= self.tol

    @property
    def commutation_ok(self) -> Optional[bool]:
        return None if self.commutation is None else self.commutation <= self.tol_comm

    @property
    def passed(self) -> bool:
        return self.block_ok and self.square_ok and self.commutation_ok is not False


def reflection_r0(m: int, qubits=None, num_qubits: int = None) -> Circuit:
    """``2|0><0| - I`` on ``m`` qubits as one diagonal (lowered by Walsh synthesis)."""
    if m < 1:
        raise StructureError("R0 needs at least one qubit")
    qubits = tuple(range(m)) if qubits is None else tuple(qubits)
    phases = np.full(1 << m, np.pi)
    phases[0] = 0.0
    n = m if num_qubits is None else num_qubits
    return Circuit(n, (DiagonalPhase(qubits, phases),), {"a": qubits} if num_qubits is None else {})


def _s_phases(be: BlockEncoding) -> np.ndarray:
    """S as phases over ``be.ancillas`` (0 or pi)."""
    anc = be.ancillas
    out = np.zeros(1 << len(anc))
    if be.s_kind == "Z":
        pos = anc.index(be.s_qubit)
        idx = np.arange(out.size)
        out[(idx >> (len(anc) - 1 - pos)) & 1 == 1] = np.pi
    elif be.s_kind != "I":
        raise StructureError(f"no S operator recorded for this block encoding ({be.s_kind!r})")
    return out


def _s_diag_full(be: BlockEncoding) -> np.ndarray:
    # +-1 diagonal of S on the whole register
    n = be.circuit.num_qubits
    d = np.ones(1 << n)
    if be.s_kind == "Z":
        idx = np.arange(1 << n)
        d[(idx >> (n - 1 - be.s_qubit)) & 1 == 1] = -1.0
    return d


def _zero_anc_mask(circuit: Circuit) -> np.ndarray:
    n = circuit.num_qubits
    idx = np.arange(1 << n)
    mask = np.ones(1 << n, dtype=bool)
    for q in circuit.ancilla_qubits:
        mask &= ((idx >> (n - 1 - q)) & 1) == 0
    return mask


def verify_s(be: BlockEncoding, tol: float = 1e-8) -> SReport:
    """Matrix-level check of the S conditions (and ``S U = U^dag S`` for Z-type S)."""
    rep = SReport(tol=tol)
    if be.s_kind not in ("Z", "I"):
        rep.notes.append("no S operator descriptor")
        return rep
    if be.circuit.num_qubits > MAX_WALK_QUBITS:
        raise ResourceError(f"dense S verification limited to {MAX_WALK_QUBITS} qubits")
    U = unitary_of(be.circuit)
    s = _s_diag_full(be)
    SU = s[:, None] * U
    keep = _zero_anc_mask(be.circuit)
    rep.cond_block = float(np.max(np.abs(SU[np.ix_(keep, keep)] - U[np.ix_(keep, keep)])))
    rep.cond_square = float(np.linalg.norm(SU @ SU - np.eye(U.shape[0]), 2))
    rep.commutation = float(np.linalg.norm(SU - U.conj().T * s[None, :], 2))
    return rep


def make_walk(be: BlockEncoding, check: bool = True) -> WalkOperator:
    """``W = R0 S U`` with R0 and S fused into one ancilla diagonal."""
    if check and be.circuit.num_qubits <= MAX_WALK_QUBITS:
        rep = verify_s(be)
        if not (rep.block_ok and rep.square_ok):
            raise StructureError(
                f"S conditions fail (block {rep.cond_block:.2e}, square {rep.cond_square:.2e}); "
                "use fallback_qubitize")
    elif be.s_kind not in ("Z", "I"):
        raise StructureError("block encoding has no S operator; use fallback_qubitize")
    anc = be.ancillas
    if not anc:
        raise StructureError("walk operators need at least one ancilla")
    ph = _s_phases(be)
    r0 = np.full(ph.size, np.pi)
    r0[0] = 0.0
    ph = np.mod(ph + r0, 2 * np.pi)
    gates = be.circuit.gates
    if np.any(ph != 0):
        gates = gates + (DiagonalPhase(anc, ph),)
    circ = be.circuit.with_gates(gates).with_metadata(queries=be.queries)
    return WalkOperator(circ, be.alpha, be, be.queries, "single-z")


def fallback_qubitize(be: BlockEncoding) -> WalkOperator:
    """Generic walk: ``U' = H_b (|0><0| U + |1><1| U^dag) H_b`` with S = Z_b.

    The new ancilla ``b`` goes in front; the block of ``U'`` is the Hermitian
    part of the encoded operator.
    """
    n = be.circuit.num_qubits
    shift = [q + 1 for q in range(n)]
    body = tuple(g.remap(shift) for g in be.circuit.gates)
    inv = tuple(g.inverse() for g in reversed(body))
    regs = {k: tuple(q + 1 for q in v) for k, v in be.circuit.registers.items()}
    regs["b"] = (0,)
    gates = (H(0), ControlledBlock(body, 0, 0), ControlledBlock(inv, 0, 1), H(0))
    circ = Circuit(n + 1, gates, regs, {"queries": 2 * be.queries})
    lifted = BlockEncoding(circ, be.alpha, be.target, s_kind="Z", s_qubit=0, method=be.method + "+fallback",
                           queries=2 * be.queries, metadata=dict(be.metadata))
    w = make_walk(lifted, check=False)
    return WalkOperator(w.circuit, be.alpha, be, 2 * be.queries, "fallback")


def walk_unitary(walk: WalkOperator) -> np.ndarray:
    if walk.circuit.num_qubits > MAX_WALK_QUBITS:
        raise ResourceError(f"dense walk limited to {MAX_WALK_QUBITS} qubits")
    return unitary_of(walk.circuit)


def walk_block_error(walk: WalkOperator, target=None) -> float:
    """Worst deviation from the qubitized 2x2 structure over all eigenvectors of target/alpha.

    For each eigenpair ``(lam, v)`` the pair ``|0>|v>, |perp>`` must span an
    invariant subspace on which W has trace ``2 lam`` and determinant one.
    """
    target = walk.source.target if target is None else target
    if target is None:
        raise StructureError("no target to compare against")
    A = np.diag(target.values) if hasattr(target, "values") else np.asarray(target)
    lam, vecs = np.linalg.eigh(A / walk.alpha)
    c = walk.circuit
    n = c.num_qubits
    keep = np.flatnonzero(_zero_anc_mask(c))
    W = walk_unitary(walk)
    worst = 0.0
    for j in range(lam.size):
        a = np.zeros(1 << n, dtype=complex)
        a[keep] = vecs[:, j]
        wa = W @ a
        l = lam[j]
        resid = wa - l * a
        nr = np.linalg.norm(resid)
        worst = max(worst, abs(np.vdot(a, wa) - l))
        if 1.0 - abs(l) < 1e-10:
            # |lam| = 1: the pair collapses and |0>|v> is itself an eigenvector
            continue
        b = resid / nr
        wb = W @ b
        M = np.array([[np.vdot(a, wa), np.vdot(a, wb)], [np.vdot(b, wa), np.vdot(b, wb)]])
        leak = np.linalg.norm(wb - M[0, 1] * a - M[1, 1] * b)
        worst = max(worst, leak, abs(np.trace(M) - 2 * l), abs(np.linalg.det(M) - 1.0))
    return float(worst)
