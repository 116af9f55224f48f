"""Digitized bosonic operators on a symmetric grid.

Conventions: basis index ``k`` has qubit 0 as its most significant bit, and
two-site operators put site 1 in the more significant qubit block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

from .errors import DomainError

__all__ = [
    "DigitizationGrid",
    "DiagonalOperator",
    "PauliZPolynomial",
    "ShiftParams",
    "build_phi",
    "build_pi_diag",
    "fwht",
    "walsh_coefficients",
    "pauli_z_decompose",
    "apply_function",
    "difference_operator",
    "embed_site",
    "shift_for_qetu",
    "scale_factor_closed_form",
    "pauli_l1_norm",
    "v1_potential",
    "v2_potential",
    "dft_matrix",
    "default_phi_max",
]


@dataclass(frozen=True)
class DigitizationGrid:
    """Symmetric ``2**n_q``-point field grid on ``[-phi_max, phi_max]``."""

    n_q: int
    phi_max: float

    def __post_init__(self):
        if int(self.n_q) != self.n_q or self.n_q < 1:
            raise DomainError(f"n_q must be an integer >= 1, got {self.n_q!r}")
        if not (np.isfinite(self.phi_max) and self.phi_max > 0):
            raise DomainError(f"phi_max must be positive and finite, got {self.phi_max!r}")

    @property
    def size(self) -> int:
        return 1 << self.n_q

    @property
    def delta_phi(self) -> float:
        return 2.0 * self.phi_max / (self.size - 1)

    @property
    def pi_max(self) -> float:
        return math.pi / self.delta_phi

    @property
    def delta_pi(self) -> float:
        return 2.0 * self.pi_max / (self.size - 1)


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    """Real diagonal operator on ``n`` qubits, values in computational-basis order."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size != (1 << self.n):
            raise DomainError(f"expected {1 << self.n} values for n={self.n}, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("diagonal operator values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_values(cls, values) -> "DiagonalOperator":
        vals = np.asarray(values, dtype=float)
        n = int(round(math.log2(vals.size))) if vals.size else -1
        if n < 0 or (1 << n) != vals.size:
            raise DomainError(f"length {vals.size} is not a power of two")
        return cls(n, vals)

    def matrix(self) -> np.ndarray:
        return np.diag(self.values)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __add__(self, other: "DiagonalOperator") -> "DiagonalOperator":
        if other.n != self.n:
            raise DomainError("qubit counts differ")
        return DiagonalOperator(self.n, self.values + other.values)

    def scaled(self, c: float) -> "DiagonalOperator":
        return DiagonalOperator(self.n, c * self.values)


@dataclass(frozen=True)
class PauliZPolynomial:
    """Sum of Z-strings: ``terms`` maps sorted qubit tuples to real coefficients."""

    n: int
    terms: Dict[Tuple[int, ...], float] = field(default_factory=dict)

    def to_diagonal(self) -> DiagonalOperator:
        idx = np.arange(1 << self.n)
        out = np.zeros(1 << self.n)
        for qubits, coef in self.terms.items():
            mask = 0
            for q in qubits:
                mask |= 1 << (self.n - 1 - q)
            out += coef * _parity_sign(idx & mask)
        return DiagonalOperator(self.n, out)

    def l1_norm(self, include_identity: bool = True) -> float:
        return float(sum(abs(c) for s, c in self.terms.items() if include_identity or s))

    def non_identity(self) -> Dict[Tuple[int, ...], float]:
        return {s: c for s, c in self.terms.items() if s}


@dataclass(frozen=True)
class ShiftParams:
    c1: float
    c2: float
    tau: float


def _parity_sign(x: np.ndarray) -> np.ndarray:
    """(-1)**popcount(x) for a non-negative integer array."""
    x = np.asarray(x, dtype=np.int64).copy()
    par = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        par ^= x & 1
        x >>= 1
    return 1.0 - 2.0 * par


def _grid_values(n_q: int, vmax: float) -> np.ndarray:
    # odd integers times a half-step keep the grid exactly antisymmetric in floating point
    size = 1 << n_q
    return (2.0 * np.arange(size) - (size - 1)) * (vmax / (size - 1))


def build_phi(grid: DigitizationGrid) -> DiagonalOperator:
    """Field operator diagonal: ``-phi_max + k*delta_phi``."""
    return DiagonalOperator(grid.n_q, _grid_values(grid.n_q, grid.phi_max))


def build_pi_diag(grid: DigitizationGrid) -> DiagonalOperator:
    """Conjugate momentum in its eigenbasis: ``-pi_max + k*delta_pi``."""
    return DiagonalOperator(grid.n_q, _grid_values(grid.n_q, grid.pi_max))


def fwht(values) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform in natural (Hadamard) order."""
    a = np.array(values, dtype=np.result_type(np.asarray(values).dtype, float))
    size = a.size
    if size & (size - 1):
        raise DomainError(f"length {size} is not a power of two")
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        a = np.stack((a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]), axis=1)
        h *= 2
    return a.reshape(size)


def walsh_coefficients(values) -> np.ndarray:
    """Coefficient of each subset mask ``S`` in the Z-string expansion.

    ``coef[S] = 2**-n * sum_x values[x] * (-1)**popcount(x & S)``; the mask uses
    the same bit layout as the basis index, so qubit ``m`` is bit ``n-1-m``.
    """
    v = np.asarray(values)
    return fwht(v) / v.size


def mask_to_qubits(mask: int, n: int) -> Tuple[int, ...]:
    return tuple(m for m in range(n) if (mask >> (n - 1 - m)) & 1)


def pauli_z_decompose(op: DiagonalOperator, tol: float = 0.0) -> PauliZPolynomial:
    """Z-string decomposition of a diagonal operator.

    Terms with ``|coef| <= tol`` are dropped (``tol=0`` keeps every exactly
    nonzero coefficient).
    """
    coefs = walsh_coefficients(op.values)
    terms = {}
    for mask in np.flatnonzero(np.abs(coefs) > tol):
        terms[mask_to_qubits(int(mask), op.n)] = float(coefs[mask])
    return PauliZPolynomial(op.n, terms)


def pauli_l1_norm(op: DiagonalOperator) -> float:
    """Sum of |Z-string coefficients|, the plain-LCU scale factor."""
    return float(np.sum(np.abs(walsh_coefficients(op.values))))


def apply_function(op: DiagonalOperator, f: Callable) -> DiagonalOperator:
    """Pointwise ``f`` on the eigenvalues."""
    out = np.asarray(f(op.values), dtype=float)
    if out.shape != op.values.shape:
        out = np.array([float(f(v)) for v in op.values])
    bad = np.flatnonzero(~np.isfinite(out))
    if bad.size:
        raise DomainError(f"function is not finite at eigenvalue {op.values[bad[0]]!r}")
    return DiagonalOperator(op.n, out)


def embed_site(op: DiagonalOperator, site: int, n_sites: int) -> DiagonalOperator:
    """Lift a single-site diagonal to ``n_sites`` sites (site 0 most significant)."""
    if not 0 <= site < n_sites:
        raise DomainError(f"site {site} outside 0..{n_sites - 1}")
    ones = np.ones(1 << op.n)
    vals = np.ones(1)
    for s in range(n_sites):
        vals = np.kron(vals, op.values if s == site else ones)
    return DiagonalOperator(op.n * n_sites, vals)


def difference_operator(grid: DigitizationGrid) -> DiagonalOperator:
    """``phi_1 - phi_2`` on ``2*n_q`` qubits."""
    phi = build_phi(grid)
    return DiagonalOperator(2 * grid.n_q, embed_site(phi, 0, 2).values - embed_site(phi, 1, 2).values)


def shift_for_qetu(op: DiagonalOperator) -> Tuple[DiagonalOperator, ShiftParams]:
    """Affine map of the spectrum onto ``[0, pi]``.

    ``c1 = pi/(a_max - a_min)``, ``c2 = -c1*a_min`` and ``tau = pi/c2`` capped at 2
    (``tau = 2`` when ``c2 <= 0``).
    """
    a_min = float(np.min(op.values))
    a_max = float(np.max(op.values))
    if a_max - a_min <= 0:
        raise DomainError("degenerate spectrum: operator is constant")
    c1 = math.pi / (a_max - a_min)
    c2 = -c1 * a_min
    tau = min(2.0, math.pi / c2) if c2 > 0 else 2.0
    shifted = np.clip(c1 * op.values + c2, 0.0, math.pi)
    return DiagonalOperator(op.n, shifted), ShiftParams(c1, c2, tau)


def v1_potential(m: float = 1.0, lam: float = 32.0) -> Callable:
    """``m**2/2 phi**2 + lam/4! phi**4``."""
    return lambda x: 0.5 * m * m * np.asarray(x) ** 2 + lam / 24.0 * np.asarray(x) ** 4


def v2_potential(g: float = 1.0) -> Callable:
    return lambda x: g * np.cos(x)


def scale_factor_closed_form(kind: str, grid: DigitizationGrid, *, d: int = 2, m: float = 1.0,
                             lam: float = 32.0) -> float:
    """Closed-form sum of |Pauli coefficients| for the supported operator families.

    kind: ``"phi^d"``, ``"pi2"`` (pi^2/2), ``"v1"`` or ``"f2"`` ((phi1-phi2)^2/2).
    """
    pm = grid.phi_max
    if kind == "phi^d":
        if d < 0:
            raise DomainError("power must be non-negative")
        return pm ** d
    if kind == "pi2":
        return grid.pi_max ** 2 / 2.0
    if kind == "v1":
        return m * m / 2.0 * pm ** 2 + lam / 24.0 * pm ** 4
    if kind == "f2":
        return 2.0 * pm ** 2
    raise DomainError(f"no closed-form scale factor for {kind!r}")


def dft_matrix(n: int) -> np.ndarray:
    """Textbook DFT ``F[j, k] = exp(2 pi i j k / N) / sqrt(N)`` on ``n`` qubits."""
    size = 1 << n
    j = np.arange(size)
    return np.exp(2j * np.pi * np.outer(j, j) / size) / math.sqrt(size)


def default_phi_max(n_q: int) -> float:
    """Field cutoff used by the benchmarks when none is given."""
    return DEFAULT_PHI_MAX


DEFAULT_PHI_MAX = 2.75
