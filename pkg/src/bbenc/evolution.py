"""Scalar-field Hamiltonians, GQSP evolution over walk operators and product formulas.

Single site:  H = F^dag (pi_D^2 / 2) F + V(phi)
Two sites:    H = sum_s [F_s^dag (pi_D^2 / 2) F_s + V(phi_s)] + (phi_1 - phi_2)^2 / 2

``F`` is the textbook DFT on one site register.  Errors are spectral norms
against the exact exponential from a dense eigendecomposition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .circuit import RX, RZ, Circuit, ControlledBlock, DiagonalPhase, project_block
from .errors import DomainError, SolverError
from .gqsp import GqspPhases, gqsp_phases
from .lattice import (DiagonalOperator, DigitizationGrid, apply_function, build_phi, build_pi_diag, dft_matrix,
                      embed_site, v1_potential, v2_potential)
from .lcu import BlockEncoding, conjugate_system, lcu_combine, love_lcu
from .poly import jacobi_anger
from .qubitization import WalkOperator, make_walk, walk_unitary
from .synthesis import GateCounts, qft_circuit, transpile

__all__ = [
    "HamiltonianSpec", "EvolutionReport", "build_hamiltonian_matrix", "hamiltonian_be", "potential_be",
    "gqsp_circuit", "gqsp_evolve", "gqsp_block", "trotter_circuit", "trotter_unitary", "trotter_evolve",
    "measure_error", "exact_evolution", "steps_for_eps", "SUZUKI_P",
]

SUZUKI_P = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))


@dataclass(frozen=True)
class HamiltonianSpec:
    sites: int
    grid: DigitizationGrid
    potential: str = "v1"
    m: float = 1.0
    lam: float = 32.0
    g: float = 1.0

    def __post_init__(self):
        if self.sites not in (1, 2):
            raise DomainError("sites must be 1 or 2")
        if self.potential not in ("v1", "v2"):
            raise DomainError(f"unknown potential {self.potential!r}")
        if not all(np.isfinite([self.m, self.lam, self.g])):
            raise DomainError("couplings must be finite")

    @property
    def n_system(self) -> int:
        return self.sites * self.grid.n_q

    def potential_fn(self) -> Callable:
        return v1_potential(self.m, self.lam) if self.potential == "v1" else v2_potential(self.g)

    # diagonal pieces on the full system register
    def site_potential(self, site: int) -> DiagonalOperator:
        v = apply_function(build_phi(self.grid), self.potential_fn())
        return embed_site(v, site, self.sites)

    def site_kinetic(self, site: int) -> DiagonalOperator:
        k = apply_function(build_pi_diag(self.grid), lambda x: 0.5 * np.asarray(x) ** 2)
        return embed_site(k, site, self.sites)

    def coupling(self) -> Optional[DiagonalOperator]:
        if self.sites == 1:
            return None
        phi = build_phi(self.grid)
        d = embed_site(phi, 0, 2).values - embed_site(phi, 1, 2).values
        return DiagonalOperator(2 * self.grid.n_q, 0.5 * d * d)

    def h_phi(self) -> np.ndarray:
        out = sum(self.site_potential(s).values for s in range(self.sites))
        if self.sites == 2:
            out = out + self.coupling().values
        return out

    def h_pi_diag(self) -> np.ndarray:
        return sum(self.site_kinetic(s).values for s in range(self.sites))

    def fourier(self) -> np.ndarray:
        F = dft_matrix(self.grid.n_q)
        return F if self.sites == 1 else np.kron(F, F)


@dataclass
class EvolutionReport:
    method: str
    t: float
    eps_target: float
    eps_measured: float
    counts: GateCounts
    queries: int = 0
    alpha_t: Optional[float] = None
    steps: Optional[int] = None
    phase_alignment: complex = 1.0
    extra: dict = field(default_factory=dict)


def build_hamiltonian_matrix(spec: HamiltonianSpec) -> np.ndarray:
    F = spec.fourier()
    H = F.conj().T @ (spec.h_pi_diag()[:, None] * F)
    H[np.diag_indices_from(H)] += spec.h_phi()
    return 0.5 * (H + H.conj().T)


def exact_evolution(H: np.ndarray, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def measure_error(block: np.ndarray, H: np.ndarray, t: float) -> float:
    """Spectral norm of ``block - exp(-iHt)``."""
    block = np.asarray(block)
    if block.shape != H.shape:
        raise DomainError(f"block {block.shape} and Hamiltonian {H.shape} differ in shape")
    return float(np.linalg.norm(block - exact_evolution(H, t), 2))


# -- block encodings of the Hamiltonian ------------------------------------------------

def _kinetic_be(spec: HamiltonianSpec, site: int) -> BlockEncoding:
    be = love_lcu(spec.site_kinetic(site))
    n = spec.grid.n_q
    F = qft_circuit(n, qubits=tuple(range(site * n, (site + 1) * n)), num_qubits=spec.n_system)
    Fd = dft_matrix(n)
    dense = None
    if spec.n_system <= 12:
        full = Fd if spec.sites == 1 else (np.kron(Fd, np.eye(1 << n)) if site == 0 else np.kron(np.eye(1 << n), Fd))
        dense = full.conj().T @ (be.target.values[:, None] * full)
    return conjugate_system(be, F, target=dense)


def potential_be(spec: HamiltonianSpec) -> BlockEncoding:
    """LCU of the diagonal terms (one LOVE-LCU BE each)."""
    parts = [love_lcu(spec.site_potential(s)) for s in range(spec.sites)]
    if spec.sites == 2:
        parts.append(love_lcu(spec.coupling()))
    return parts[0] if len(parts) == 1 else lcu_combine(parts)


def hamiltonian_be(spec: HamiltonianSpec, part: str = "full") -> BlockEncoding:
    """Single-Z-qubitizable BE of H (``part="full"``) or of its diagonal part (``"phi"``).

    The full BE combines one LOVE-LCU term per potential/coupling piece and one
    Fourier-conjugated LOVE-LCU per kinetic piece.
    """
    if part == "phi":
        return potential_be(spec)
    if part != "full":
        raise DomainError(f"unknown part {part!r}")
    parts = [love_lcu(spec.site_potential(s)) for s in range(spec.sites)]
    parts += [_kinetic_be(spec, s) for s in range(spec.sites)]
    if spec.sites == 2:
        parts.append(love_lcu(spec.coupling()))
    target = build_hamiltonian_matrix(spec) if spec.n_system <= 12 else None
    return lcu_combine(parts, target=target)


# -- GQSP ----------------------------------------------------------------------------

def _r_gates(q: int, theta: float, phi: float, lam: float) -> list:
    # R(theta, phi, lam) = diag(e^{i phi}, 1) RY(2 theta) Z diag(e^{i lam}, 1)
    return [DiagonalPhase((q,), (lam, math.pi)), RX(q, math.pi / 2), RZ(q, 2 * theta), RX(q, -math.pi / 2),
            DiagonalPhase((q,), (phi, 0.0))]


def gqsp_circuit(walk: WalkOperator, phases: GqspPhases) -> Circuit:
    """Signal qubit 0 in front of the walk register.

    The first ``-k_min`` queries are 1-controlled ``W^dag`` and the rest
    0-controlled ``W``; the projected block is ``sum_k p_k W^k``.
    """
    n = walk.circuit.num_qubits
    shift = [q + 1 for q in range(n)]
    body = tuple(g.remap(shift) for g in walk.circuit.gates)
    inv = tuple(g.inverse() for g in reversed(body))
    fwd_q = ControlledBlock(body, 0, 0)
    inv_q = ControlledBlock(inv, 0, 1)
    n_inv = max(0, -phases.k_min)
    gates = _r_gates(0, phases.thetas[0], phases.phis[0], phases.lam)
    for j in range(1, phases.degree + 1):
        gates.append(inv_q if j <= n_inv else fwd_q)
        gates += _r_gates(0, phases.thetas[j], phases.phis[j], 0.0)
    regs = {k: tuple(q + 1 for q in v) for k, v in walk.circuit.registers.items()}
    regs["g"] = (0,)
    return Circuit(n + 1, tuple(gates), regs, {"queries": phases.degree})


def gqsp_block(walk: WalkOperator, phases: GqspPhases, W: np.ndarray = None) -> np.ndarray:
    """Projected GQSP block from a Schur eigendecomposition of the dense walk."""
    W = walk_unitary(walk) if W is None else W
    T, Z = sla.schur(W, output="complex")
    w = np.diag(T)
    pw = phases.evaluate(w)
    keep = _zero_anc_index(walk.circuit)
    Zk = Z[keep, :]
    return (Zk * pw) @ Zk.conj().T


def _zero_anc_index(circuit: Circuit) -> np.ndarray:
    n = circuit.num_qubits
    idx = np.arange(1 << n)
    ok = np.ones(1 << n, dtype=bool)
    for q in circuit.ancilla_qubits:
        ok &= ((idx >> (n - 1 - q)) & 1) == 0
    return np.flatnonzero(ok)


def _gqsp_query_cost(walk: WalkOperator, probe_k=(1, 2, 3)) -> tuple:
    """Affine rotation/CNOT cost ``a + b*K`` of a 2K-query GQSP circuit from small builds."""
    rng = np.random.default_rng(7)
    costs = []
    for k in probe_k:
        d = 2 * k
        ph = GqspPhases(rng.uniform(0.1, 1.4, d + 1), rng.uniform(0.1, 3.0, d + 1), 0.3, -k, k)
        costs.append(transpile(gqsp_circuit(walk, ph))[1])
    rot = np.array([c.rotations for c in costs], dtype=float)
    cx = np.array([c.cnots for c in costs], dtype=float)
    ks = np.array(probe_k, dtype=float)
    br, ar = np.polyfit(ks, rot, 1)
    bc, ac = np.polyfit(ks, cx, 1)
    return (ar, br), (ac, bc)


def gqsp_evolve(walk: WalkOperator, t: float, eps: float, H: np.ndarray = None,
                cost_model=None, build_circuit: bool = False):
    """GQSP approximation of ``exp(-iHt)`` from the walk of a BE of ``H``.

    Returns ``(circuit or None, report)``.  The circuit is built only on request
    (degree ~ 2*alpha*t); rotation counts come from an affine per-query model
    fitted on small transpiled GQSP circuits.
    """
    if not (0 < eps < 1):
        raise DomainError("eps must lie in (0, 1)")
    tau = walk.alpha * float(t)
    if t == 0:
        phases = GqspPhases(np.zeros(1), np.zeros(1), 0.0, 0, 0)
    else:
        table = jacobi_anger(tau, eps)
        phases = gqsp_phases(table)
    d = phases.degree
    if H is None:
        src = walk.source.target
        H = src if isinstance(src, np.ndarray) else (np.diag(src.values) if src is not None else None)
    eps_measured = float("nan")
    if H is not None:
        blk = gqsp_block(walk, phases)
        eps_measured = measure_error(blk, H, t)
    if cost_model is None:
        cost_model = _gqsp_query_cost(walk)
    (ar, br), (ac, bc) = cost_model
    K = d // 2
    if d == 0:
        counts = GateCounts(0, 0, len(walk.ancillas) + 1, 0)
    else:
        counts = GateCounts(int(round(ar + br * K)), int(round(ac + bc * K)), len(walk.ancillas) + 1, d)
    circ = gqsp_circuit(walk, phases) if build_circuit else None
    rep = EvolutionReport("gqsp", float(t), eps, eps_measured, counts, queries=d, alpha_t=tau,
                          extra={"K": K, "alpha": walk.alpha, "cost_model": cost_model})
    return circ, rep


# -- product formulas -----------------------------------------------------------------

def _pf2_layers(spec: HamiltonianSpec, dt: float) -> list:
    n = spec.grid.n_q
    sysq = tuple(range(spec.n_system))
    fwd, bwd = [], []
    for s in range(spec.sites):
        qc = qft_circuit(n, qubits=tuple(range(s * n, (s + 1) * n)), num_qubits=spec.n_system)
        fwd += list(qc.gates)
        bwd = list(qc.inverse().gates) + bwd
    half = DiagonalPhase(sysq, -0.5 * dt * spec.h_phi())
    kin = DiagonalPhase(sysq, -dt * spec.h_pi_diag())
    return [half] + fwd + [kin] + bwd + [half]


def _steps_sequence(order: int):
    """Substep fractions for one step: PF2 is [1], PF4 is the Suzuki 5-fold product."""
    if order == 2:
        return [1.0]
    if order == 4:
        p = SUZUKI_P
        return [p, p, 1 - 4 * p, p, p]
    raise DomainError("order must be 2 or 4")


def trotter_circuit(spec: HamiltonianSpec, t: float, steps: int, order: int = 2) -> Circuit:
    if steps < 1:
        raise DomainError("steps must be >= 1")
    dt = t / steps
    gates = []
    for _ in range(steps):
        for f in _steps_sequence(order):
            gates += _pf2_layers(spec, f * dt)
    return Circuit(spec.n_system, tuple(gates), {"s": tuple(range(spec.n_system))}, {"steps": steps})


def trotter_unitary(spec: HamiltonianSpec, t: float, steps: int, order: int = 2) -> np.ndarray:
    F = spec.fourier()
    hp, hk = spec.h_phi(), spec.h_pi_diag()
    dt = t / steps

    def pf2(h):
        a = np.exp(-0.5j * h * hp)
        return a[:, None] * (F.conj().T @ (np.exp(-1j * h * hk)[:, None] * F)) * a[None, :]

    step = np.eye(F.shape[0], dtype=complex)
    for f in _steps_sequence(order):
        step = pf2(f * dt) @ step
    return np.linalg.matrix_power(step, steps)


def _trotter_cost(spec: HamiltonianSpec, order: int):
    # cost(steps) is affine: interior half-steps merge between neighbours
    c = [transpile(trotter_circuit(spec, 1.0, s, order))[1] for s in (1, 2, 3)]
    br = c[2].rotations - c[1].rotations
    bc = c[2].cnots - c[1].cnots
    return (c[1].rotations - 2 * br, br), (c[1].cnots - 2 * bc, bc)


def trotter_evolve(spec: HamiltonianSpec, t: float, steps: int, order: int = 2, eps_target: float = float("nan"),
                   cost_model=None, H: np.ndarray = None):
    """``(one-step circuit, report)``; the full circuit repeats it ``steps`` times."""
    if steps < 1:
        raise DomainError("steps must be >= 1")
    H = build_hamiltonian_matrix(spec) if H is None else H
    err = measure_error(trotter_unitary(spec, t, steps, order), H, t)
    if cost_model is None:
        cost_model = _trotter_cost(spec, order)
    (ar, br), (ac, bc) = cost_model
    counts = GateCounts(int(round(ar + br * steps)), int(round(ac + bc * steps)), 0, 0)
    rep = EvolutionReport(f"pf{order}", float(t), eps_target, err, counts, steps=steps,
                          extra={"cost_model": cost_model})
    return trotter_circuit(spec, t, 1, order).with_metadata(repetitions=steps), rep


def steps_for_eps(spec: HamiltonianSpec, t: float, eps: float, order: int = 2, H: np.ndarray = None,
                  max_steps: int = 1 << 30) -> int:
    """Smallest step count (doubling then bisection) with error <= eps."""
    H = build_hamiltonian_matrix(spec) if H is None else H
    exact = exact_evolution(H, t)

    def err(s):
        return float(np.linalg.norm(trotter_unitary(spec, t, s, order) - exact, 2))

    hi, e = 1, err(1)
    while e > eps:
        hi *= 2
        prev, e = e, err(hi)
        if hi > max_steps or (prev < 1e-6 and e > 0.9 * prev):
            # past max_steps, or stuck on the rounding floor of the dense product
            raise SolverError(f"product formula does not reach eps={eps} (error {e:.2e} at {hi} steps)",
                              residual=e)
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if err(mid) > eps:
            lo = mid
        else:
            hi = mid
    return hi
