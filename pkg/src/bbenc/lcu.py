"""PREP/SEL oracles, LCU block encodings, LOVE-LCU and LCU combination.

Every block encoding puts its ancillas first (qubits ``0..m-1``) and the
system register after them.  The optional S operator used for qubitization is
either the identity or a single Z on one ancilla qubit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .circuit import (CNOT, RX, Circuit, ControlledBlock, DiagonalPhase, GlobalPhase, H, Z,
                      apply_circuit, project_block, unitary_of, MAX_DENSE_QUBITS)
from .errors import DomainError, ResourceError, StructureError
from .lattice import DiagonalOperator, PauliZPolynomial, walsh_coefficients

__all__ = [
    "UnitaryTerm", "BlockEncoding", "prep_oracle", "sel_oracle", "lcu_block_encode", "love_lcu",
    "control_free_sel", "lcu_combine", "pauli_terms", "conjugate_system", "num_index_qubits",
]

WALSH_TOL = 1e-12


@dataclass(frozen=True)
class UnitaryTerm:
    """``coefficient * U`` with ``U`` given by ``circuit`` on system qubits ``0..n-1``."""

    coefficient: float
    circuit: Circuit

    def __post_init__(self):
        if not (np.isfinite(self.coefficient) and self.coefficient > 0):
            raise DomainError(f"LCU coefficients must be positive, got {self.coefficient!r}")


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    """Unitary circuit whose ``|0>_anc`` block is ``target / alpha``.

    ``target`` is a DiagonalOperator, a dense matrix, or None when too large
    to form.  ``s_kind`` is ``"Z"`` (Z on ``s_qubit``), ``"I"`` or None.
    """

    circuit: Circuit
    alpha: float
    target: Union[DiagonalOperator, np.ndarray, None] = None
    s_kind: Optional[str] = None
    s_qubit: Optional[int] = None
    method: str = ""
    queries: int = 1
    metadata: dict = field(default_factory=dict)

    @property
    def ancillas(self) -> Tuple[int, ...]:
        return self.circuit.ancilla_qubits

    @property
    def num_ancillas(self) -> int:
        return len(self.ancillas)

    @property
    def system(self) -> Tuple[int, ...]:
        return self.circuit.system_qubits

    @property
    def n_system(self) -> int:
        return len(self.system)

    def target_matrix(self) -> np.ndarray:
        if self.target is None:
            raise ResourceError("no dense target stored for this block encoding")
        if isinstance(self.target, DiagonalOperator):
            return np.diag(self.target.values).astype(complex)
        return np.asarray(self.target, dtype=complex)

    def block(self, probes=None) -> np.ndarray:
        return project_block(self.circuit, self.ancillas, probes=probes)

    def residual(self, probes=None) -> float:
        """Max-abs deviation of the projected block from ``target/alpha``."""
        if probes is not None:
            ref = _apply_target(self.target, probes) / self.alpha
            return float(np.max(np.abs(self.block(probes) - ref)))
        return float(np.max(np.abs(self.block() - self.target_matrix() / self.alpha)))

    def with_circuit(self, circuit: Circuit, **kw) -> "BlockEncoding":
        args = dict(circuit=circuit, alpha=self.alpha, target=self.target, s_kind=self.s_kind,
                    s_qubit=self.s_qubit, method=self.method, queries=self.queries,
                    metadata=dict(self.metadata))
        args.update(kw)
        return BlockEncoding(**args)


def _apply_target(target, probes):
    if isinstance(target, DiagonalOperator):
        return target.values[:, None] * probes
    return np.asarray(target) @ probes


def num_index_qubits(k: int) -> int:
    return max(0, math.ceil(math.log2(k))) if k > 1 else 0


def _layout(ancilla_regs: Sequence[Tuple[str, int]], n_sys: int):
    regs, q = {}, 0
    for name, size in ancilla_regs:
        if size:
            regs[name] = tuple(range(q, q + size))
            q += size
    regs["s"] = tuple(range(q, q + n_sys))
    return regs, q + n_sys


# -- PREP / SEL ------------------------------------------------------------------------

def _multiplexed_ry(target: int, controls: Sequence[int], angles: np.ndarray) -> list:
    """``RY(angles[p])`` on ``target`` for control pattern ``p`` (first control = MSB).

    Uses ``RY(a) = RX(-pi/2) RZ(a) RX(pi/2)`` so the multiplexor is a single diagonal.
    """
    half = np.asarray(angles, dtype=float) / 2.0
    phases = np.stack((-half, half), axis=-1).ravel()
    return [RX(target, math.pi / 2), DiagonalPhase(tuple(controls) + (target,), phases),
            RX(target, -math.pi / 2)]


def prep_oracle(coeffs: Sequence[float]) -> Circuit:
    """Circuit with ``PREP|0> = sum_i sqrt(c_i / sum c)|i>`` (zero on padding indices)."""
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        raise DomainError("PREP needs at least one coefficient")
    if np.any(~np.isfinite(c)) or np.any(c <= 0):
        raise DomainError("PREP coefficients must be positive and finite")
    k = num_index_qubits(c.size)
    w = np.zeros(1 << k)
    w[:c.size] = c / c.sum()
    gates = []
    for level in range(k):
        blocks = w.reshape(1 << level, 2, -1).sum(axis=2)
        angles = 2.0 * np.arctan2(np.sqrt(blocks[:, 1]), np.sqrt(blocks[:, 0]))
        if np.all(np.abs(angles) <= WALSH_TOL):
            continue
        gates.extend(_multiplexed_ry(level, tuple(range(level)), angles))
    return Circuit(k, tuple(gates), {"a": tuple(range(k))})


def _controlled_on_index(body, index: int, controls: Sequence[int]):
    gates = tuple(body)
    k = len(controls)
    for pos in reversed(range(k)):
        bit = (index >> (k - 1 - pos)) & 1
        gates = (ControlledBlock(gates, controls[pos], bit),)
    return gates


def sel_oracle(terms: Sequence[UnitaryTerm]) -> Circuit:
    """``sum_i |i><i| x U_i`` with the index register first; padding branches act as identity."""
    if not terms:
        raise StructureError("SEL needs at least one term")
    n = terms[0].circuit.num_qubits
    for t in terms:
        if t.circuit.num_qubits != n:
            raise StructureError("all SEL terms must act on the same system register")
    k = num_index_qubits(len(terms))
    regs, nq = _layout([("a", k)], n)
    sysmap = list(regs["s"])
    gates = []
    for i, t in enumerate(terms):
        body = tuple(g.remap(sysmap) for g in t.circuit.gates)
        gates.extend(_controlled_on_index(body, i, tuple(range(k))) if k else body)
    return Circuit(nq, tuple(gates), regs)


def lcu_block_encode(terms: Sequence[UnitaryTerm], target=None, method: str = "lcu") -> BlockEncoding:
    """``(PREP^dag x I) SEL (PREP x I)`` with ``alpha = sum c_i``."""
    sel = sel_oracle(terms)
    k = len(sel.register("a"))
    prep = prep_oracle([t.coefficient for t in terms])
    gates = prep.gates + sel.gates + prep.inverse().gates
    circ = Circuit(sel.num_qubits, gates, sel.registers, {"queries": 1})
    alpha = float(sum(t.coefficient for t in terms))
    n = terms[0].circuit.num_qubits
    if target is None and n <= 12:
        target = sum(t.coefficient * unitary_of(t.circuit) for t in terms)
    return BlockEncoding(circ, alpha, target, s_kind=None, s_qubit=None, method=method, queries=1,
                         metadata={"index_qubits": k})


def pauli_terms(poly: PauliZPolynomial, include_identity: bool = True) -> List[UnitaryTerm]:
    """Z-string unitaries; a negative coefficient becomes a global phase of pi."""
    terms = []
    for qubits, coef in sorted(poly.terms.items(), key=lambda kv: (len(kv[0]), kv[0])):
        if coef == 0 or (not qubits and not include_identity):
            continue
        gates = tuple(Z(q) for q in qubits)
        if coef < 0:
            gates = gates + (GlobalPhase(math.pi),)
        terms.append(UnitaryTerm(abs(coef), Circuit(poly.n, gates)))
    if not terms:
        raise DomainError("polynomial has no nonzero terms")
    return terms


# -- LOVE-LCU --------------------------------------------------------------------------

def _gf2_odd_mask(masks: Sequence[int], n: int) -> Optional[int]:
    """A bit mask ``K`` with odd overlap with every mask in ``masks``, or None."""
    pivots = []  # (pivot bit, row mask, rhs)
    for m in masks:
        row, rhs = m, 1
        for bit, prow, prhs in pivots:
            if row >> bit & 1:
                row ^= prow
                rhs ^= prhs
        if row == 0:
            if rhs:
                return None
            continue
        bit = row.bit_length() - 1
        new = []
        for b, prow, prhs in pivots:
            if prow >> bit & 1:
                prow ^= row
                prhs ^= rhs
            new.append((b, prow, prhs))
        pivots = new + [(bit, row, rhs)]
    k = 0
    for bit, _, rhs in pivots:
        if rhs:
            k |= 1 << bit
    return k


def _walsh_support(phases: np.ndarray) -> np.ndarray:
    coef = walsh_coefficients(phases)
    return np.flatnonzero(np.abs(coef) > WALSH_TOL)


def control_free_sel(diag_phases, tol: float = 1e-12) -> Tuple[Circuit, bool]:
    """``|0><0| x e^{iD} + |1><1| x e^{-iD}`` on (ancilla, system).

    When a bit-flip mask ``K`` with ``D(x ^ K) = -D(x) + c`` exists, SEL is a
    CNOT fan-out onto ``K``, the bare diagonal, the fan-out again and a phase
    on the ancilla; otherwise one diagonal over ancilla and system is returned.
    """
    d = np.asarray(diag_phases, dtype=float)
    n = int(round(math.log2(d.size)))
    if 1 << n != d.size:
        raise StructureError(f"length {d.size} is not a power of two")
    sysq = tuple(range(1, n + 1))
    regs = {"a": (0,), "s": sysq}
    support = [int(s) for s in _walsh_support(d) if s]
    mask = _gf2_odd_mask(support, n) if support else 0
    if mask is not None:
        c = 2.0 * float(np.mean(d))
        flipped = d[np.arange(d.size) ^ mask]
        if np.max(np.abs(flipped + d - c)) <= tol * max(1.0, float(np.max(np.abs(d)))):
            fan = tuple(CNOT(0, 1 + q) for q in range(n) if mask >> (n - 1 - q) & 1)
            gates = fan + (DiagonalPhase(sysq, d),) + fan
            if abs(c) > 0:
                gates = gates + (DiagonalPhase((0,), (0.0, -c)),)
            return Circuit(n + 1, gates, regs, {"control_free": True, "mask": mask}), True
    sel = DiagonalPhase((0,) + sysq, np.concatenate((d, -d)))
    return Circuit(n + 1, (sel,), regs, {"control_free": False}), False


def _branch(theta: np.ndarray, branch: str) -> np.ndarray:
    """Per-entry sign choice for ``D = +-arccos(f/beta)``; every choice gives the same block.

    ``"principal"`` keeps all signs positive, ``"odd"`` negates the lower half of
    the index range (``D = phi`` for ``f = cos(phi)``), ``"auto"`` takes the
    one with the smaller Walsh support (ties go to principal).
    """
    if branch == "principal":
        return theta
    size = theta.size
    odd = np.where(np.arange(size) >= size // 2, 1.0, -1.0) * theta
    if branch == "odd":
        return odd
    if branch == "auto":
        return odd if _walsh_support(odd).size < _walsh_support(theta).size else theta
    raise DomainError(f"unknown branch {branch!r}")


def love_lcu(target: DiagonalOperator, beta: Optional[float] = None, control_free: bool = True,
             branch: str = "principal") -> BlockEncoding:
    """One-ancilla exact BE of a diagonal: ``H_a SEL H_a`` with ``cos D = target/beta``."""
    vals = target.values
    vmax = float(np.max(np.abs(vals)))
    if beta is None:
        beta = vmax
    if beta <= 0 and vmax == 0:
        beta = 1.0
    if beta < vmax * (1 - 1e-14):
        raise DomainError(f"beta={beta} is below max|target|={vmax}")
    theta = _branch(np.arccos(np.clip(vals / beta, -1.0, 1.0)), branch)
    if control_free:
        sel, applied = control_free_sel(theta)
    else:
        n = target.n
        sel = Circuit(n + 1, (DiagonalPhase(tuple(range(n + 1)), np.concatenate((theta, -theta))),),
                      {"a": (0,), "s": tuple(range(1, n + 1))})
        applied = False
    gates = (H(0),) + sel.gates + (H(0),)
    circ = Circuit(sel.num_qubits, gates, sel.registers, {"queries": 1})
    return BlockEncoding(circ, float(beta), target, s_kind="Z", s_qubit=0, method="love-lcu", queries=1,
                         metadata={"control_free": applied, "D": theta, "branch": branch})


# -- combination -----------------------------------------------------------------------

def conjugate_system(be: BlockEncoding, before: Circuit, after: Circuit = None, target=None) -> BlockEncoding:
    """BE of ``V^dag A V`` given circuits for ``V`` (``before``) on the system register.

    ``after`` defaults to ``before.inverse()``.
    """
    after = before.inverse() if after is None else after
    sysmap = list(be.system)
    pre = tuple(g.remap(sysmap) for g in before.gates)
    post = tuple(g.remap(sysmap) for g in after.gates)
    circ = be.circuit.with_gates(pre + be.circuit.gates + post)
    if target is None and be.target is not None and be.n_system <= 12:
        v = unitary_of(before)
        target = v.conj().T @ be.target_matrix() @ v
    return be.with_circuit(circ, target=target)


def lcu_combine(encodings: Sequence[BlockEncoding], weights: Sequence[float] = None,
                target=None) -> BlockEncoding:
    """BE of ``sum_j w_j target_j`` over ``aL + a + s`` with ``alpha = sum_j w_j alpha_j``.

    The sub-encodings share the ``a`` register; each one's S qubit lands on
    ``a[0]`` and its other ancillas on the following low-index qubits.
    """
    encs = list(encodings)
    if not encs:
        raise StructureError("nothing to combine")
    w = np.ones(len(encs)) if weights is None else np.asarray(weights, dtype=float)
    if w.size != len(encs) or np.any(w <= 0):
        raise StructureError("weights must be positive, one per encoding")
    n = encs[0].n_system
    kinds = {e.s_kind for e in encs}
    if any(e.n_system != n for e in encs):
        raise StructureError("encodings act on different system sizes")
    if len(kinds) != 1:
        raise StructureError(f"encodings carry different S operators: {sorted(map(str, kinds))}")
    kind = kinds.pop()
    n_a = max(e.num_ancillas for e in encs)
    big = w * np.array([e.alpha for e in encs])
    L = num_index_qubits(len(encs))
    regs, nq = _layout([("aL", L), ("a", n_a)], n)
    aq, sq = regs.get("a", ()), regs["s"]
    gates = []
    for j, e in enumerate(encs):
        anc = list(e.ancillas)
        if kind == "Z":
            anc.remove(e.s_qubit)
            anc.insert(0, e.s_qubit)
        m = [0] * e.circuit.num_qubits
        for pos, q in enumerate(anc):
            m[q] = aq[pos]
        for pos, q in enumerate(e.system):
            m[q] = sq[pos]
        body = tuple(g.remap(m) for g in e.circuit.gates)
        gates.extend(_controlled_on_index(body, j, regs.get("aL", ())) if L else body)
    if L:
        prep = prep_oracle(big)
        gates = list(prep.gates) + gates + list(prep.inverse().gates)
    alpha = float(big.sum())
    if target is None and all(e.target is not None for e in encs) and n <= 12:
        if all(isinstance(e.target, DiagonalOperator) for e in encs):
            target = DiagonalOperator(n, sum(wj * e.target.values for wj, e in zip(w, encs)))
        else:
            target = sum(wj * e.target_matrix() for wj, e in zip(w, encs))
    queries = int(sum(e.queries for e in encs))
    circ = Circuit(nq, tuple(gates), regs, {"queries": queries})
    return BlockEncoding(circ, alpha, target, s_kind=kind, s_qubit=aq[0] if (kind == "Z" and aq) else None,
                         method="lcu-combine", queries=queries,
                         metadata={"parts": [e.method for e in encs], "weights": list(w)})
