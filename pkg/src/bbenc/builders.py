"""QSVT and QETU block encodings of functions of diagonal operators.

Polynomials are fixed by exact sampling: the even Chebyshev interpolant of
``f/beta`` through every distinct eigenvalue, so the encoded block is exact
on the digitized spectrum.  When the interpolant exceeds one between samples
the scale factor is raised to ``beta * sup|F|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .circuit import RX, Circuit, ControlledBlock, DiagonalPhase, H
from .errors import DomainError, ParityError
from .lattice import (DiagonalOperator, DigitizationGrid, PauliZPolynomial, ShiftParams, apply_function,
                      build_phi, build_pi_diag, difference_operator, pauli_z_decompose, shift_for_qetu,
                      v1_potential, v2_potential)
from .lcu import BlockEncoding, lcu_block_encode, love_lcu, pauli_terms
from .poly import ChebyshevSeries, chebyshev_fit_exact
from .qsp import SymmetricPhases, solve_wx_phases, wx_to_qetu, wx_to_qsvt

__all__ = [
    "QetuConfig", "build_xi_be", "qsvt_block_encode", "qetu_block_encode", "qsvt_circuit",
    "OPERATORS", "EXTRA_OPERATORS", "METHODS", "operator_target", "build_be", "fit_even_target",
]

METHODS = ("lcu", "qsvt", "qetu-exp", "qetu-arccos", "love-lcu")
OPERATORS = ("pi2", "v1", "diff2", "cos")
EXTRA_OPERATORS = ("phi",)  # odd target, only LCU and LOVE-LCU apply


@dataclass(frozen=True)
class QetuConfig:
    """``block`` is ``"exp-tau"`` (uses ``shift``) or ``"exp-arccos"`` (uses ``alpha``)."""

    block: str = "exp-tau"
    shift: Optional[ShiftParams] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.block not in ("exp-tau", "exp-arccos"):
            raise DomainError(f"unknown QETU building block {self.block!r}")
        if self.shift is not None and self.shift.tau > 2 + 1e-12:
            raise DomainError("exp-tau needs tau <= 2")


def build_xi_be(poly: PauliZPolynomial, target: Optional[DiagonalOperator] = None) -> BlockEncoding:
    """LCU over Z-strings; ``alpha`` is the sum of ``|coefficients|``.

    The circuit is a Hermitian involution (real PREP, Hermitian SEL), so the
    identity is a valid S operator.
    """
    if not poly.non_identity():
        raise DomainError("polynomial needs at least one non-identity term")
    terms = pauli_terms(poly)
    if target is None:
        target = poly.to_diagonal()
    be = lcu_block_encode(terms, target=target, method="lcu")
    return be.with_circuit(be.circuit, s_kind="I", s_qubit=None)


def _lowest_even_fit(x, values, tol):
    # smallest even degree whose least-squares fit already passes through every sample
    ux = np.abs(x)
    scale = max(1.0, float(np.max(np.abs(values))))
    th = np.arccos(np.clip(ux, -1.0, 1.0))
    for k in range(1, ux.size):
        degs = 2 * np.arange(k)
        V = np.cos(np.outer(th, degs))
        coef = np.linalg.lstsq(V, values, rcond=None)[0]
        if np.max(np.abs(V @ coef - values)) <= tol * scale:
            full = np.zeros(int(degs[-1]) + 1)
            full[degs] = coef
            return ChebyshevSeries(full, "even")
    return None


def fit_even_target(x, values, tol: float = 1e-12):
    """Even exact-sampling interpolant of ``values`` at ``x``, of lowest degree, made QSP-ready.

    Returns ``(series, scale)`` where ``series = fit / scale`` and ``scale > 1``
    only when the fit overshoots one on ``[-1, 1]``.
    """
    series = chebyshev_fit_exact(x, values, "even")
    low = _lowest_even_fit(np.asarray(x, dtype=float), np.asarray(values, dtype=float), tol)
    if low is not None and low.degree < series.degree:
        series = low
    sup = series.sup_norm()
    scale = max(1.0, sup)
    if scale > 1.0:
        series = series.scaled(1.0 / scale)
    return series, scale


def _cr_phase(psi: float, m: int) -> np.ndarray:
    # exp(i psi Z_c (2 Pi_0 - I)) over (c, a_1..a_m)
    sign_a = -np.ones(1 << m)
    sign_a[0] = 1.0
    return np.concatenate((psi * sign_a, -psi * sign_a))


def qsvt_circuit(base: BlockEncoding, psi: SymmetricPhases, control: Optional[int] = None) -> Circuit:
    """``H_c CR(psi_0) U CR(psi_1) U^dag ... CR(psi_d) H_c`` on (c, base ancillas, system).

    With ``control`` (an extra qubit appended after the system) only the
    signal-phase gates are controlled; with the control off the sequence
    collapses to the identity.
    """
    m = base.num_ancillas
    n = base.n_system
    mapping = [0] * base.circuit.num_qubits
    for pos, q in enumerate(base.ancillas):
        mapping[q] = 1 + pos
    for pos, q in enumerate(base.system):
        mapping[q] = 1 + m + pos
    U = tuple(g.remap(mapping) for g in base.circuit.gates)
    Ud = tuple(g.inverse() for g in reversed(U))
    cq = tuple(range(0, m + 1))
    nq = 1 + m + n + (1 if control is not None else 0)
    ctrl = None if control is None else nq - 1

    def cr(p):
        g = DiagonalPhase(cq, _cr_phase(p, m))
        return g if ctrl is None else ControlledBlock((g,), ctrl, 1)

    gates = [H(0), cr(psi.phases[0])]
    for j in range(1, psi.degree + 1):
        gates.extend(U if j % 2 == 1 else Ud)
        gates.append(cr(psi.phases[j]))
    gates.append(H(0))
    regs = {"c": (0,), "s": tuple(range(1 + m, 1 + m + n))}
    if m:
        regs["a"] = tuple(range(1, 1 + m))
    if ctrl is not None:
        regs["ctl"] = (ctrl,)
    return Circuit(nq, tuple(gates), regs, {"queries": psi.degree})


def qsvt_block_encode(base: BlockEncoding, series: ChebyshevSeries = None, tol: float = 1e-12,
                      f: Callable = None, beta: float = None, target=None) -> BlockEncoding:
    """QSVT BE of ``beta * series(A/alpha_base)``.

    Either pass an even ``series`` (then ``beta`` defaults to 1) or a function
    ``f``; with ``f`` the series is the exact even interpolant of ``f/beta``
    on the base spectrum and ``beta`` defaults to ``max|f|`` there.
    """
    if not isinstance(base.target, DiagonalOperator) and f is not None:
        raise DomainError("function targets need a diagonal base operator")
    scale = 1.0
    if f is not None:
        a = base.target.values
        fv = np.asarray(f(a), dtype=float) * np.ones_like(a)
        beta = float(np.max(np.abs(fv))) if beta is None else float(beta)
        if beta == 0:
            beta = 1.0
        series, scale = fit_even_target(a / base.alpha, fv / beta, tol)
        if target is None:
            target = DiagonalOperator(base.target.n, fv)
    elif series is None:
        raise DomainError("need a series or a function")
    if series.parity != "even":
        raise ParityError("QSVT block encodings here need an even polynomial; use love_lcu instead")
    beta = 1.0 if beta is None else beta
    if target is None and isinstance(base.target, DiagonalOperator):
        target = DiagonalOperator(base.target.n, beta * series(base.target.values / base.alpha))
    ph = solve_wx_phases(series, tol)
    psi = wx_to_qsvt(ph)
    circ = qsvt_circuit(base, psi)
    return BlockEncoding(circ, beta * scale, target, s_kind="Z", s_qubit=0, method="qsvt",
                         queries=psi.degree,
                         metadata={"degree": psi.degree, "phases": psi.phases, "phase_residual": ph.residual,
                                   "overshoot": scale, "base_alpha": base.alpha, "base": base})


def qetu_block_encode(op: DiagonalOperator, f: Callable, config: QetuConfig = None,
                      tol: float = 1e-12) -> BlockEncoding:
    """One-ancilla QETU BE of ``f(op)/beta`` with ``beta = max|f|`` on the spectrum.

    ``exp-tau`` calls the controlled ``exp(-i tau op_sh)`` of the shifted
    operator; ``exp-arccos`` calls the controlled ``exp(-2i arccos(op/alpha))``.
    """
    config = config or QetuConfig()
    a = op.values
    fv = np.asarray(f(a), dtype=float) * np.ones_like(a)
    beta = float(np.max(np.abs(fv))) if config.beta is None else float(config.beta)
    if beta == 0:
        beta = 1.0
    if config.block == "exp-tau":
        shifted, params = shift_for_qetu(op) if config.shift is None else (
            DiagonalOperator(op.n, config.shift.c1 * a + config.shift.c2), config.shift)
        tau = params.tau
        angles = tau * shifted.values  # eigenphases of the building block (with a minus sign)
        x = np.cos(angles / 2.0)
        info = {"tau": tau, "c1": params.c1, "c2": params.c2}
    else:
        alpha = float(np.max(np.abs(a))) if config.alpha is None else float(config.alpha)
        if alpha < np.max(np.abs(a)) * (1 - 1e-14):
            raise DomainError("alpha must be at least max|op|")
        x = np.clip(a / alpha, -1.0, 1.0)
        angles = 2.0 * np.arccos(x)
        info = {"alpha": alpha}
    try:
        series, scale = fit_even_target(x, fv / beta, tol)
    except ParityError as exc:
        raise ParityError(f"QETU needs an even target on the sampled spectrum ({exc}); use love_lcu") from exc
    ph = solve_wx_phases(series, tol)
    phases = wx_to_qetu(ph)
    n = op.n
    sysq = tuple(range(1, n + 1))
    fwd = np.concatenate((np.zeros(1 << n), -angles))
    cu = DiagonalPhase((0,) + sysq, fwd)
    cud = cu.inverse()
    gates = [RX(0, -2.0 * phases.phases[0])]
    for j in range(1, phases.degree + 1):
        gates.append(cu if j % 2 == 1 else cud)
        gates.append(RX(0, -2.0 * phases.phases[j]))
    circ = Circuit(n + 1, tuple(gates), {"c": (0,), "s": sysq}, {"queries": phases.degree})
    info.update({"degree": phases.degree, "phases": phases.phases, "phase_residual": ph.residual,
                 "overshoot": scale, "block": config.block})
    return BlockEncoding(circ, beta * scale, DiagonalOperator(n, fv), s_kind="Z", s_qubit=0,
                         method="qetu-exp" if config.block == "exp-tau" else "qetu-arccos",
                         queries=phases.degree, metadata=info)


# -- benchmark operators ---------------------------------------------------------------

def operator_target(name: str, grid: DigitizationGrid, m: float = 1.0, lam: float = 32.0, g: float = 1.0):
    """``(xi, f)`` for the benchmark terms pi2, v1, diff2, cos (and the odd ``phi``)."""
    if name == "pi2":
        return build_pi_diag(grid), (lambda x: 0.5 * np.asarray(x) ** 2)
    if name == "v1":
        return build_phi(grid), v1_potential(m, lam)
    if name == "diff2":
        return difference_operator(grid), (lambda x: 0.5 * np.asarray(x) ** 2)
    if name == "cos":
        return build_phi(grid), v2_potential(g)
    if name == "phi":
        return build_phi(grid), (lambda x: np.asarray(x, dtype=float))
    raise DomainError(f"unknown operator {name!r}; choose from {', '.join(OPERATORS + EXTRA_OPERATORS)}")


def build_be(method: str, name: str, grid: DigitizationGrid, tol: float = 1e-12, m: float = 1.0,
             lam: float = 32.0, g: float = 1.0) -> BlockEncoding:
    """Block encoding of one benchmark term ``f(xi)`` by the chosen method."""
    xi, f = operator_target(name, grid, m, lam, g)
    target = apply_function(xi, f)
    if method == "lcu":
        poly = pauli_z_decompose(target, tol=1e-13)
        be = lcu_block_encode(pauli_terms(poly), target=target, method="lcu")
        return be.with_circuit(be.circuit, s_kind="I")
    if method == "love-lcu":
        if name == "cos" and grid.phi_max <= math.pi and g != 0:
            # beta = |g| keeps D = +-phi exactly, so SEL is a sum of single-Z terms
            return love_lcu(target, beta=abs(g), branch="odd")
        return love_lcu(target)
    if method == "qsvt":
        base = build_xi_be(pauli_z_decompose(xi, tol=1e-13), target=xi)
        return qsvt_block_encode(base, f=f, tol=tol)
    if method == "qetu-exp":
        return qetu_block_encode(xi, f, QetuConfig("exp-tau"), tol)
    if method == "qetu-arccos":
        return qetu_block_encode(xi, f, QetuConfig("exp-arccos"), tol)
    raise DomainError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
