"""Gate-level circuit IR and a dense batched simulator.

Qubit 0 is the most significant bit of a basis index.  Structural gates
(:class:`DiagonalPhase`, :class:`ControlledBlock`) are simulated exactly and
lowered to ``{CNOT, RX, RZ}`` by :mod:`bbenc.synthesis`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CompileError, ResourceError, StructureError

__all__ = [
    "CNOT", "RX", "RZ", "H", "X", "Z", "GlobalPhase", "DiagonalPhase", "ControlledBlock",
    "Gate", "Circuit", "unitary_of", "apply_circuit", "project_block", "dumps", "loads",
    "MAX_DENSE_QUBITS",
]

MAX_DENSE_QUBITS = 14


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    @property
    def qubits(self):
        return (self.control, self.target)

    def inverse(self):
        return self

    def remap(self, m):
        return CNOT(m[self.control], m[self.target])


@dataclass(frozen=True)
class RX:
    qubit: int
    angle: float

    @property
    def qubits(self):
        return (self.qubit,)

    def inverse(self):
        return RX(self.qubit, -self.angle)

    def remap(self, m):
        return RX(m[self.qubit], self.angle)


@dataclass(frozen=True)
class RZ:
    qubit: int
    angle: float

    @property
    def qubits(self):
        return (self.qubit,)

    def inverse(self):
        return RZ(self.qubit, -self.angle)

    def remap(self, m):
        return RZ(m[self.qubit], self.angle)


@dataclass(frozen=True)
class H:
    qubit: int

    @property
    def qubits(self):
        return (self.qubit,)

    def inverse(self):
        return self

    def remap(self, m):
        return H(m[self.qubit])


@dataclass(frozen=True)
class X:
    qubit: int

    @property
    def qubits(self):
        return (self.qubit,)

    def inverse(self):
        return self

    def remap(self, m):
        return X(m[self.qubit])


@dataclass(frozen=True)
class Z:
    qubit: int

    @property
    def qubits(self):
        return (self.qubit,)

    def inverse(self):
        return self

    def remap(self, m):
        return Z(m[self.qubit])


@dataclass(frozen=True)
class GlobalPhase:
    angle: float

    @property
    def qubits(self):
        return ()

    def inverse(self):
        return GlobalPhase(-self.angle)

    def remap(self, m):
        return self


@dataclass(frozen=True)
class DiagonalPhase:
    """``diag(exp(i*phases))`` on ``qubits`` (first listed qubit is the MSB)."""

    qubits: Tuple[int, ...]
    phases: Tuple[float, ...]

    def __post_init__(self):
        qs = tuple(int(q) for q in self.qubits)
        ph = tuple(float(p) for p in np.asarray(self.phases, dtype=float).ravel())
        if len(ph) != 1 << len(qs):
            raise StructureError(f"{len(ph)} phases for {len(qs)} qubits")
        if len(set(qs)) != len(qs):
            raise StructureError(f"repeated qubit in {qs}")
        object.__setattr__(self, "qubits", qs)
        object.__setattr__(self, "phases", ph)

    def inverse(self):
        return DiagonalPhase(self.qubits, tuple(-p for p in self.phases))

    def remap(self, m):
        return DiagonalPhase(tuple(m[q] for q in self.qubits), self.phases)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.phases)


@dataclass(frozen=True)
class ControlledBlock:
    """``body`` applied when ``control`` is in state ``polarity``; identity otherwise.

    ``body`` uses the same qubit numbering as the enclosing circuit.
    """

    body: Tuple["Gate", ...]
    control: int
    polarity: int = 1

    def __post_init__(self):
        body = tuple(self.body.gates) if isinstance(self.body, Circuit) else tuple(self.body)
        object.__setattr__(self, "body", body)
        if self.polarity not in (0, 1):
            raise StructureError(f"polarity must be 0 or 1, got {self.polarity}")
        if self.control in _gate_qubits(body):
            raise StructureError(f"control qubit {self.control} is used by the controlled body")

    @property
    def qubits(self):
        return tuple(sorted(_gate_qubits(self.body) | {self.control}))

    def inverse(self):
        return ControlledBlock(tuple(g.inverse() for g in reversed(self.body)), self.control, self.polarity)

    def remap(self, m):
        return ControlledBlock(tuple(g.remap(m) for g in self.body), m[self.control], self.polarity)


Gate = Union[CNOT, RX, RZ, H, X, Z, GlobalPhase, DiagonalPhase, ControlledBlock]


def _gate_qubits(gates: Iterable) -> set:
    out = set()
    for g in gates:
        out.update(g.qubits)
    return out


@dataclass(frozen=True)
class Circuit:
    """Immutable ordered gate list.

    ``registers`` maps names (``"s"`` system, ``"a"`` BE ancilla, ``"aL"`` site-LCU
    ancilla, ``"c"`` signal/control, ...) to qubit tuples.
    """

    num_qubits: int
    gates: Tuple[Gate, ...] = ()
    registers: Mapping[str, Tuple[int, ...]] = field(default_factory=dict)
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "registers", {k: tuple(v) for k, v in dict(self.registers).items()})
        object.__setattr__(self, "metadata", dict(self.metadata))
        for q in _gate_qubits(self.gates):
            if not 0 <= q < self.num_qubits:
                raise StructureError(f"qubit {q} outside 0..{self.num_qubits - 1}")

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def with_gates(self, gates: Iterable[Gate]) -> "Circuit":
        return Circuit(self.num_qubits, tuple(gates), self.registers, self.metadata)

    def then(self, *gates: Gate) -> "Circuit":
        return self.with_gates(self.gates + tuple(gates))

    def inverse(self) -> "Circuit":
        return self.with_gates(g.inverse() for g in reversed(self.gates))

    def remapped(self, mapping: Sequence[int], num_qubits: int, registers=None) -> "Circuit":
        m = list(mapping)
        return Circuit(num_qubits, tuple(g.remap(m) for g in self.gates),
                       registers if registers is not None else {}, self.metadata)

    def compose(self, other: "Circuit", qubits: Optional[Sequence[int]] = None) -> "Circuit":
        """Append ``other`` with its qubit ``i`` placed on ``qubits[i]``."""
        if qubits is None:
            qubits = range(other.num_qubits)
        m = list(qubits)
        if len(m) != other.num_qubits:
            raise StructureError("qubit map length does not match the appended circuit")
        return self.with_gates(self.gates + tuple(g.remap(m) for g in other.gates))

    def with_metadata(self, **kw) -> "Circuit":
        md = dict(self.metadata)
        md.update(kw)
        return Circuit(self.num_qubits, self.gates, self.registers, md)

    def register(self, name: str) -> Tuple[int, ...]:
        return tuple(self.registers.get(name, ()))

    @property
    def system_qubits(self) -> Tuple[int, ...]:
        return self.register("s")

    @property
    def ancilla_qubits(self) -> Tuple[int, ...]:
        sys_q = set(self.system_qubits)
        return tuple(q for q in range(self.num_qubits) if q not in sys_q)

    def gate_histogram(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for g in self.gates:
            out[type(g).__name__] = out.get(type(g).__name__, 0) + 1
        return out


# -- simulation ---------------------------------------------------------------

_SQ2 = 1.0 / math.sqrt(2.0)


def _single_matrix(g) -> np.ndarray:
    if isinstance(g, H):
        return np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
    if isinstance(g, X):
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if isinstance(g, RX):
        c, s = math.cos(g.angle / 2), math.sin(g.angle / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    raise CompileError(f"no matrix rule for {g!r}")


def _idx(n: int, fixed: Mapping[int, int]):
    ix = [slice(None)] * (n + 1)
    for q, v in fixed.items():
        ix[q] = v
    return tuple(ix)


def _apply(gates: Iterable, state: np.ndarray, n: int) -> None:
    """Apply gates in place to ``state`` of shape ``(2,)*n + (batch,)``."""
    for g in gates:
        if isinstance(g, RZ):
            state[_idx(n, {g.qubit: 0})] *= complex(math.cos(g.angle / 2), -math.sin(g.angle / 2))
            state[_idx(n, {g.qubit: 1})] *= complex(math.cos(g.angle / 2), math.sin(g.angle / 2))
        elif isinstance(g, Z):
            state[_idx(n, {g.qubit: 1})] *= -1.0
        elif isinstance(g, CNOT):
            a = state[_idx(n, {g.control: 1, g.target: 0})]
            b = state[_idx(n, {g.control: 1, g.target: 1})]
            tmp = a.copy()
            a[...] = b
            b[...] = tmp
        elif isinstance(g, (H, X, RX)):
            m = _single_matrix(g)
            i0, i1 = _idx(n, {g.qubit: 0}), _idx(n, {g.qubit: 1})
            s0 = state[i0].copy()
            s1 = state[i1]
            new1 = m[1, 0] * s0 + m[1, 1] * s1
            state[i0] = m[0, 0] * s0 + m[0, 1] * s1
            state[i1] = new1
        elif isinstance(g, GlobalPhase):
            state *= complex(math.cos(g.angle), math.sin(g.angle))
        elif isinstance(g, DiagonalPhase):
            k = len(g.qubits)
            ph = np.exp(1j * g.array).reshape((2,) * k) if k else np.exp(1j * g.array).reshape(())
            order = np.argsort(g.qubits)
            ph = ph.transpose(order) if k else ph
            shape = [1] * (n + 1)
            for q in g.qubits:
                shape[q] = 2
            state *= ph.reshape(shape)
        elif isinstance(g, ControlledBlock):
            sub = state[_idx(n, {g.control: g.polarity})]
            c = g.control
            m = [q if q < c else q - 1 for q in range(n)]
            m[c] = -1
            _apply((h.remap(m) for h in g.body), sub, n - 1)
        else:
            raise CompileError(f"cannot simulate gate {g!r}")


def apply_circuit(circuit: Circuit, states: np.ndarray) -> np.ndarray:
    """Apply ``circuit`` to the columns of ``states`` (shape ``(2**n, batch)``)."""
    n = circuit.num_qubits
    states = np.asarray(states, dtype=complex)
    vec = states.ndim == 1
    if vec:
        states = states[:, None]
    if states.shape[0] != 1 << n:
        raise StructureError(f"state dimension {states.shape[0]} does not match {n} qubits")
    st = states.reshape((2,) * n + (states.shape[1],)).copy()
    _apply(circuit.gates, st, n)
    out = st.reshape(1 << n, -1)
    return out[:, 0] if vec else out


def unitary_of(circuit: Circuit, max_qubits: int = MAX_DENSE_QUBITS) -> np.ndarray:
    """Dense unitary of ``circuit`` (column ``j`` is ``U|j>``)."""
    n = circuit.num_qubits
    if n > max_qubits:
        raise ResourceError(f"{n} qubits exceeds the dense-simulation budget of {max_qubits}")
    return apply_circuit(circuit, np.eye(1 << n, dtype=complex))


def project_block(circuit: Circuit, ancillas: Optional[Sequence[int]] = None,
                  max_qubits: int = MAX_DENSE_QUBITS, probes: Optional[np.ndarray] = None) -> np.ndarray:
    """``(<0|_anc x I) U (|0>_anc x I)`` in the ordering of the remaining qubits.

    Only the ``2**n_sys`` relevant columns are simulated.  With ``probes`` (shape
    ``(2**n_sys, batch)``) the block is applied to those vectors instead.
    """
    n = circuit.num_qubits
    if n > max_qubits:
        raise ResourceError(f"{n} qubits exceeds the dense-simulation budget of {max_qubits}")
    anc = tuple(circuit.ancilla_qubits if ancillas is None else ancillas)
    sys_q = [q for q in range(n) if q not in set(anc)]
    ns = len(sys_q)
    sys_idx = np.zeros(1 << ns, dtype=np.int64)
    for pos, q in enumerate(sys_q):
        bit = (np.arange(1 << ns) >> (ns - 1 - pos)) & 1
        sys_idx |= bit << (n - 1 - q)
    if probes is None:
        inp = np.zeros((1 << n, 1 << ns), dtype=complex)
        inp[sys_idx, np.arange(1 << ns)] = 1.0
    else:
        probes = np.asarray(probes, dtype=complex)
        inp = np.zeros((1 << n, probes.shape[1]), dtype=complex)
        inp[sys_idx, :] = probes
    out = apply_circuit(circuit, inp)
    return out[sys_idx, :]


# -- serialization ------------------------------------------------------------

def _fmt(a: float) -> str:
    return format(float(a), ".17g")


def dumps(circuit: Circuit) -> str:
    """Line format: ``GATE q0 [q1] [angle]``; global phase as ``GPHASE angle``."""
    lines = [f"QUBITS {circuit.num_qubits}"]
    for g in circuit.gates:
        if isinstance(g, CNOT):
            lines.append(f"CNOT {g.control} {g.target}")
        elif isinstance(g, (RX, RZ)):
            lines.append(f"{type(g).__name__} {g.qubit} {_fmt(g.angle)}")
        elif isinstance(g, (H, X, Z)):
            lines.append(f"{type(g).__name__} {g.qubit}")
        elif isinstance(g, GlobalPhase):
            lines.append(f"GPHASE {_fmt(g.angle)}")
        else:
            raise CompileError(f"structural gate {type(g).__name__} must be transpiled before dumping")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Circuit:
    gates = []
    n = None
    for raw in text.splitlines():
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        op = parts[0]
        if op == "QUBITS":
            n = int(parts[1])
        elif op == "CNOT":
            gates.append(CNOT(int(parts[1]), int(parts[2])))
        elif op in ("RX", "RZ"):
            gates.append((RX if op == "RX" else RZ)(int(parts[1]), float(parts[2])))
        elif op in ("H", "X", "Z"):
            gates.append({"H": H, "X": X, "Z": Z}[op](int(parts[1])))
        elif op == "GPHASE":
            gates.append(GlobalPhase(float(parts[1])))
        else:
            raise CompileError(f"unknown gate line {raw!r}")
    if n is None:
        n = 1 + max(_gate_qubits(gates), default=-1)
    return Circuit(n, tuple(gates))
