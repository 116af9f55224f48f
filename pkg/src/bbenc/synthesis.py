"""Lowering of structural gates to ``{CNOT, RX, RZ}`` and gate counting.

Diagonal unitaries are synthesized from their Walsh coefficients with a
Gray-code CNOT walk per target qubit.  Controlled blocks are lowered by
peeling conjugation pairs (``g M g^-1`` needs only ``M`` controlled) and
turning every controlled diagonal piece into one larger diagonal.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .circuit import (CNOT, RX, RZ, Circuit, ControlledBlock, DiagonalPhase, GlobalPhase, H, X, Z,
                      Gate)
from .errors import CompileError, StructureError
from .lattice import walsh_coefficients

__all__ = [
    "GateCounts", "diagonal_gates", "synthesize_diagonal_unitary", "controlled", "qft_circuit",
    "transpile", "count_gates", "drop_small_rotations", "lower_structural",
]

ZERO_TOL = 1e-12
MAX_FUSED_QUBITS = 16


@dataclass(frozen=True)
class GateCounts:
    rotations: int = 0
    cnots: int = 0
    ancillas: int = 0
    queries: int = 0

    def __add__(self, other: "GateCounts") -> "GateCounts":
        return GateCounts(self.rotations + other.rotations, self.cnots + other.cnots,
                          max(self.ancillas, other.ancillas), self.queries + other.queries)


# -- diagonal synthesis ---------------------------------------------------------

def diagonal_gates(phases, qubits: Sequence[int], tol: float = ZERO_TOL) -> List[Gate]:
    """Gates realizing ``diag(exp(i*phases))`` on ``qubits`` (first = MSB).

    Each Walsh term ``S`` is parity-computed onto its last qubit; for a fixed
    target the control subsets are visited in binary-reflected Gray order, so
    at most ``2**n - 1`` RZ and ``2**n - 2`` CNOT are emitted.
    """
    phases = np.asarray(phases, dtype=float)
    n = len(qubits)
    if phases.size != 1 << n:
        raise StructureError(f"{phases.size} phases for {n} qubits")
    coef = walsh_coefficients(phases)
    out: List[Gate] = []
    if abs(coef[0]) > 0:
        out.append(GlobalPhase(float(coef[0])))
    for t in range(n):
        tbit = 1 << (n - 1 - t)
        cur = 0
        for i in range(1 << t):
            gray = i ^ (i >> 1)
            mask = tbit
            for p in range(t):
                if (gray >> p) & 1:
                    mask |= 1 << (n - 1 - p)
            a = coef[mask]
            if abs(a) <= tol:
                continue
            for p in range(t):
                if ((cur ^ gray) >> p) & 1:
                    out.append(CNOT(qubits[p], qubits[t]))
            cur = gray
            out.append(RZ(qubits[t], -2.0 * float(a)))
        for p in range(t):
            if (cur >> p) & 1:
                out.append(CNOT(qubits[p], qubits[t]))
    return out


def synthesize_diagonal_unitary(phases, tol: float = ZERO_TOL) -> Circuit:
    phases = np.asarray(phases, dtype=float)
    n = int(round(math.log2(phases.size)))
    if 1 << n != phases.size:
        raise StructureError(f"length {phases.size} is not a power of two")
    return Circuit(n, tuple(diagonal_gates(phases, tuple(range(n)), tol)), {"s": tuple(range(n))})


# -- controlled lowering ----------------------------------------------------------

def controlled(circuit: Circuit, control: int, polarity: int = 1, num_qubits: int = None) -> Circuit:
    """Circuit applying ``circuit`` when ``control`` is in ``polarity``.

    ``control`` may be a new qubit index ``>= circuit.num_qubits``; the result
    then grows to ``num_qubits`` (default ``max(control+1, circuit.num_qubits)``).
    """
    if control in set(q for g in circuit.gates for q in g.qubits):
        raise StructureError(f"control qubit {control} collides with the circuit")
    nq = num_qubits if num_qubits is not None else max(circuit.num_qubits, control + 1)
    block = ControlledBlock(circuit.gates, control, polarity)
    return Circuit(nq, (block,), circuit.registers, circuit.metadata)


def _diag_form(g) -> Tuple[Tuple[int, ...], np.ndarray]:
    if isinstance(g, RZ):
        return (g.qubit,), np.array([-g.angle / 2, g.angle / 2])
    if isinstance(g, Z):
        return (g.qubit,), np.array([0.0, math.pi])
    if isinstance(g, GlobalPhase):
        return (), np.array([g.angle])
    if isinstance(g, DiagonalPhase):
        return g.qubits, g.array
    return None


def _conditional_diag(qubits, phases, controls) -> DiagonalPhase:
    """Diagonal on controls+qubits carrying ``phases`` only when the controls match."""
    cq = tuple(q for q, _ in controls)
    k = len(cq)
    table = np.zeros((2,) * k + (2,) * len(qubits))
    sel = tuple(p for _, p in controls)
    table[sel] = np.asarray(phases).reshape((2,) * len(qubits)) if qubits else phases[0]
    allq = cq + tuple(qubits)
    order = np.argsort(allq)
    table = table.transpose(order) if allq else table
    return DiagonalPhase(tuple(np.asarray(allq)[order]), table.ravel())


_H_AS_ROTATIONS = (GlobalPhase(math.pi / 2),)


def _lower_controlled(body: Sequence[Gate], controls) -> List[Gate]:
    body = list(body)
    lo, hi = 0, len(body)
    front: List[Gate] = []
    back: List[Gate] = []
    # peel V ... V^dag pairs (left uncontrolled) and diagonal ends (controlled directly)
    while hi > lo:
        if hi - lo >= 2 and body[lo].inverse() == body[hi - 1]:
            front.extend(lower_structural([body[lo]]))
            back[:0] = lower_structural([body[hi - 1]])
            lo += 1
            hi -= 1
            continue
        form = _diag_form(body[lo])
        if form is not None:
            front.append(_conditional_diag(form[0], form[1], controls))
            lo += 1
            continue
        form = _diag_form(body[hi - 1])
        if form is not None:
            back.insert(0, _conditional_diag(form[0], form[1], controls))
            hi -= 1
            continue
        break
    prefix, suffix = front, back
    inner: List[Gate] = []
    for g in body[lo:hi]:
        form = _diag_form(g)
        if form is not None:
            inner.append(_conditional_diag(form[0], form[1], controls))
        elif isinstance(g, ControlledBlock):
            inner.extend(_lower_controlled(g.body, tuple(controls) + ((g.control, g.polarity),)))
        elif isinstance(g, RX):
            inner += [H(g.qubit), _conditional_diag((g.qubit,), np.array([-g.angle / 2, g.angle / 2]), controls),
                      H(g.qubit)]
        elif isinstance(g, X):
            inner += [H(g.qubit), _conditional_diag((g.qubit,), np.array([0.0, math.pi]), controls), H(g.qubit)]
        elif isinstance(g, CNOT):
            inner += [H(g.target),
                      _conditional_diag((g.control, g.target), np.array([0, 0, 0, math.pi]), controls),
                      H(g.target)]
        elif isinstance(g, H):
            q = g.qubit
            half = np.array([-math.pi / 4, math.pi / 4])
            inner += [_conditional_diag((q,), half + math.pi / 2, controls),
                      H(q), _conditional_diag((q,), half, controls), H(q),
                      _conditional_diag((q,), half, controls)]
        else:
            raise CompileError(f"cannot control gate {g!r}")
    return prefix + inner + suffix


def lower_structural(gates: Iterable[Gate]) -> List[Gate]:
    """Replace every ControlledBlock by primitive gates and DiagonalPhase pieces."""
    out: List[Gate] = []
    for g in gates:
        if isinstance(g, ControlledBlock):
            out.extend(_lower_controlled(g.body, ((g.control, g.polarity),)))
        else:
            out.append(g)
    return out


# -- peephole passes ----------------------------------------------------------------

def _norm_angle(a: float) -> Tuple[float, float]:
    """Reduce a rotation angle to (-2pi, 2pi]; returns (angle, extra global phase)."""
    a = math.fmod(a, 4 * math.pi)
    if a > 2 * math.pi:
        a -= 4 * math.pi
    elif a <= -2 * math.pi:
        a += 4 * math.pi
    if abs(abs(a) - 2 * math.pi) <= ZERO_TOL:
        return 0.0, math.pi
    return a, 0.0


def _merge_diag(prev: DiagonalPhase, g: DiagonalPhase) -> DiagonalPhase:
    allq = tuple(sorted(set(prev.qubits) | set(g.qubits)))
    n = len(allq)
    idx = np.arange(1 << n)
    total = np.zeros(1 << n)
    for d in (prev, g):
        sub = np.zeros(1 << n, dtype=np.int64)
        k = len(d.qubits)
        for pos, q in enumerate(d.qubits):
            bit = (idx >> (n - 1 - allq.index(q))) & 1
            sub |= bit << (k - 1 - pos)
        total += d.array[sub]
    return DiagonalPhase(allq, total)


def _peephole(gates: Iterable[Gate], fuse_diagonals: bool) -> Tuple[List[Gate], float, bool]:
    """Cancel inverse pairs, merge rotations, optionally fuse diagonal gates.

    Returns ``(gates, global_phase, changed)``.
    """
    out: List = []
    stacks = defaultdict(list)
    gphase = 0.0
    changed = False

    def top(q):
        s = stacks[q]
        return s[-1] if s else -1

    for g in gates:
        if isinstance(g, GlobalPhase):
            gphase += g.angle
            continue
        if fuse_diagonals and isinstance(g, (Z, RZ)):
            j = top(g.qubit)
            if j >= 0 and isinstance(out[j], DiagonalPhase):
                qs, ph = _diag_form(g)
                out[j] = _merge_diag(out[j], DiagonalPhase(qs, ph))
                changed = True
                continue
        qs = g.qubits
        j = top(qs[0])
        if j >= 0 and all(top(q) == j for q in qs) and set(out[j].qubits) == set(qs):
            prev = out[j]
            if prev == g.inverse():
                out[j] = None
                for q in qs:
                    stacks[q].pop()
                changed = True
                continue
            if type(prev) is type(g) and isinstance(g, (RX, RZ)):
                a, extra = _norm_angle(prev.angle + g.angle)
                gphase += extra
                changed = True
                if abs(a) <= ZERO_TOL:
                    out[j] = None
                    stacks[g.qubit].pop()
                else:
                    out[j] = type(g)(g.qubit, a)
                continue
        if fuse_diagonals and isinstance(g, DiagonalPhase):
            j = max((top(q) for q in qs), default=-1)
            if j >= 0 and isinstance(out[j], DiagonalPhase) and \
                    len(set(out[j].qubits) | set(qs)) <= MAX_FUSED_QUBITS:
                new_q = [q for q in qs if q not in out[j].qubits]
                out[j] = _merge_diag(out[j], g)
                for q in new_q:
                    stacks[q].append(j)
                changed = True
                continue
        if isinstance(g, (RX, RZ)):
            a, extra = _norm_angle(g.angle)
            gphase += extra
            if abs(a) <= ZERO_TOL:
                changed = True
                continue
            if a != g.angle:
                g = type(g)(g.qubit, a)
        out.append(g)
        for q in qs:
            stacks[q].append(len(out) - 1)
    return [g for g in out if g is not None], gphase, changed


def _lower_primitives(gates: Iterable[Gate]) -> List[Gate]:
    out: List[Gate] = []
    for g in gates:
        if isinstance(g, DiagonalPhase):
            out.extend(diagonal_gates(g.array, g.qubits))
        elif isinstance(g, H):
            q = g.qubit
            out += [GlobalPhase(math.pi / 2), RZ(q, math.pi / 2), RX(q, math.pi / 2), RZ(q, math.pi / 2)]
        elif isinstance(g, X):
            out += [GlobalPhase(math.pi / 2), RX(g.qubit, math.pi)]
        elif isinstance(g, Z):
            out += [GlobalPhase(math.pi / 2), RZ(g.qubit, math.pi)]
        elif isinstance(g, (CNOT, RX, RZ, GlobalPhase)):
            out.append(g)
        else:
            raise CompileError(f"cannot lower gate {g!r}")
    return out


def _wrap_phase(a: float) -> float:
    a = math.fmod(a, 2 * math.pi)
    if a > math.pi:
        a -= 2 * math.pi
    elif a <= -math.pi:
        a += 2 * math.pi
    return 0.0 if abs(a) <= ZERO_TOL else a


def count_gates(circuit: Circuit) -> GateCounts:
    rot = cx = 0
    for g in circuit.gates:
        if isinstance(g, (RX, RZ)):
            rot += 1
        elif isinstance(g, CNOT):
            cx += 1
        elif not isinstance(g, GlobalPhase):
            raise CompileError(f"circuit still contains {type(g).__name__}; transpile first")
    return GateCounts(rot, cx, len(circuit.ancilla_qubits) if circuit.registers else 0,
                      int(circuit.metadata.get("queries", 0)))


def transpile(circuit: Circuit) -> Tuple[Circuit, GateCounts]:
    """Lower to ``{CNOT, RX, RZ}`` plus one trailing GlobalPhase and count gates."""
    gates = lower_structural(circuit.gates)
    gates, gp, _ = _peephole(gates, fuse_diagonals=True)
    gates = _lower_primitives(gates)
    total = gp
    while True:
        gates, gp, changed = _peephole(gates, fuse_diagonals=False)
        total += gp
        if not changed:
            break
    total = _wrap_phase(total)
    if total:
        gates.append(GlobalPhase(total))
    out = Circuit(circuit.num_qubits, tuple(gates), circuit.registers, circuit.metadata)
    return out, count_gates(out)


def drop_small_rotations(circuit: Circuit, tol: float) -> Tuple[Circuit, float]:
    """Remove RX/RZ with ``|angle| < tol``; returns the circuit and the sum of dropped angles.

    The spectral-norm change is at most half the returned sum.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    kept, dropped = [], 0.0
    for g in circuit.gates:
        if isinstance(g, (RX, RZ)) and abs(g.angle) < tol:
            dropped += abs(g.angle)
        else:
            kept.append(g)
    return circuit.with_gates(kept), dropped


# -- QFT -----------------------------------------------------------------------------

def _swap(a: int, b: int) -> List[Gate]:
    return [CNOT(a, b), CNOT(b, a), CNOT(a, b)]


def qft_circuit(n: int, qubits: Sequence[int] = None, num_qubits: int = None) -> Circuit:
    """Textbook DFT ``|j> -> N**-1/2 sum_k exp(2 pi i jk/N)|k>`` including the final swaps."""
    if n < 1:
        raise ValueError("n must be >= 1")
    qs = tuple(range(n)) if qubits is None else tuple(qubits)
    gates: List[Gate] = []
    for j in range(n):
        gates.append(H(qs[j]))
        for k in range(j + 1, n):
            theta = math.pi / (1 << (k - j))
            gates.append(DiagonalPhase((qs[j], qs[k]), (0.0, 0.0, 0.0, theta)))
    for i in range(n // 2):
        gates.extend(_swap(qs[i], qs[n - 1 - i]))
    nq = num_qubits if num_qubits is not None else max(qs) + 1
    return Circuit(nq, tuple(gates), {"s": qs})
