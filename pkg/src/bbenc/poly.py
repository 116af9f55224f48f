"""Chebyshev series, exact sampling fits, Bessel functions and Jacobi-Anger tables."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import DomainError, ParityError, SolverError

__all__ = [
    "ChebyshevSeries", "chebyshev_fit_exact", "chebyshev_interpolate", "bessel_j", "jacobi_anger",
    "LaurentTable", "SUP_GRID_POINTS", "CERT_GRID_POINTS",
]

SUP_GRID_POINTS = 10001
CERT_GRID_POINTS = 4096


@dataclass(frozen=True, eq=False)
class ChebyshevSeries:
    """``sum_j coeffs[j] T_j(x)``; ``parity`` is ``"even"``, ``"odd"`` or ``"none"``."""

    coeffs: np.ndarray
    parity: str = "none"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            c = np.zeros(1)
        if self.parity not in ("even", "odd", "none"):
            raise DomainError(f"unknown parity {self.parity!r}")
        if self.parity == "even" and np.any(c[1::2] != 0):
            raise ParityError("even series with odd-degree coefficients")
        if self.parity == "odd" and np.any(c[0::2] != 0):
            raise ParityError("odd series with even-degree coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else 0

    def __call__(self, x):
        return C.chebval(np.asarray(x, dtype=float), self.coeffs)

    def sup_norm(self, points: int = SUP_GRID_POINTS) -> float:
        return float(np.max(np.abs(self(np.linspace(-1.0, 1.0, points)))))

    def is_qsp_ready(self, tol: float = 1e-12) -> bool:
        return self.parity != "none" and self.sup_norm() <= 1.0 + tol

    def scaled(self, s: float) -> "ChebyshevSeries":
        return ChebyshevSeries(self.coeffs * s, self.parity)

    def trimmed(self) -> "ChebyshevSeries":
        return ChebyshevSeries(self.coeffs[:self.degree + 1], self.parity)


def chebyshev_fit_exact(points, values, parity: str = "none", cond_limit: float = 1e13) -> ChebyshevSeries:
    """Chebyshev series through every ``(points[i], values[i])``.

    With ``parity="even"`` (``"odd"``) only ``|x|`` matters and the degree is
    ``2u-2`` (``2u-1``) for ``u`` distinct magnitudes; ``"none"`` gives degree
    ``u-1`` for ``u`` distinct points.  Repeated points must carry equal values.
    """
    x = np.asarray(points, dtype=float).ravel()
    y = np.asarray(values, dtype=float).ravel()
    if x.shape != y.shape or x.size == 0:
        raise DomainError("points and values must be non-empty and of equal length")
    if np.any(np.abs(x) > 1 + 1e-12):
        raise DomainError("sample points must lie in [-1, 1]")
    x = np.clip(x, -1.0, 1.0)
    if parity == "even":
        key = np.abs(x)
    elif parity == "odd":
        key = np.abs(x)
        y = y * np.sign(x)
        if np.any((np.abs(x) < 1e-15) & (np.abs(y) > 1e-12)):
            raise ParityError("odd fit with a nonzero value at x = 0")
    elif parity == "none":
        key = x
    else:
        raise DomainError(f"unknown parity {parity!r}")
    order = np.argsort(key, kind="stable")
    key, y = key[order], y[order]
    tol = 1e-13
    groups = np.concatenate(([True], np.diff(key) > tol))
    starts = np.flatnonzero(groups)
    ux = key[starts]
    uy = y[starts]
    seg = np.cumsum(groups) - 1
    if np.max(np.abs(y - uy[seg])) > 1e-9 * max(1.0, float(np.max(np.abs(y)))):
        raise ParityError("values are inconsistent with the requested parity or repeated points")
    if parity == "odd":
        keep = ux > 1e-15
        ux, uy = ux[keep], uy[keep]
    u = ux.size
    if parity == "even":
        degs = 2 * np.arange(u)
    elif parity == "odd":
        degs = 2 * np.arange(u) + 1
    else:
        degs = np.arange(u)
    if u == 0:
        return ChebyshevSeries(np.zeros(1), parity)
    V = np.cos(np.outer(np.arccos(np.clip(ux, -1, 1)), degs))
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SolverError(f"Chebyshev sampling system is ill-conditioned (cond={cond:.3e})", residual=cond)
    coef = np.linalg.solve(V, uy)
    # one refinement step keeps the sample residual at the rounding level
    coef += np.linalg.solve(V, uy - V @ coef)
    full = np.zeros(int(degs[-1]) + 1)
    full[degs] = coef
    return ChebyshevSeries(full, parity)


def chebyshev_interpolate(f, degree: int, parity: str = "none") -> ChebyshevSeries:
    """Interpolant of ``f`` at the ``degree+1`` Chebyshev nodes of the first kind."""
    if degree < 0:
        raise DomainError("degree must be non-negative")
    k = np.arange(degree + 1)
    nodes = np.cos(np.pi * (k + 0.5) / (degree + 1))
    c = C.chebfit(nodes, np.asarray(f(nodes), dtype=float), degree)
    if parity == "even":
        c[1::2] = 0.0
    elif parity == "odd":
        c[0::2] = 0.0
    return ChebyshevSeries(c, parity)


# -- Bessel functions and Jacobi-Anger -------------------------------------------------

def bessel_j(kmax: int, t: float) -> np.ndarray:
    """``J_0(t) .. J_kmax(t)`` by Miller's downward recurrence.

    The start index sits well past the turning point ``k ~ |t|`` and the result
    is normalized with ``J_0 + 2 sum_k J_2k = 1``.
    """
    if kmax < 0:
        raise DomainError("kmax must be non-negative")
    at = abs(float(t))
    if at == 0.0:
        out = np.zeros(kmax + 1)
        out[0] = 1.0
        return out
    start = int(max(kmax, at) + 50 + 20 * at ** (1.0 / 3.0))
    start += start % 2
    vals = np.zeros(start + 2)
    vals[start] = 1e-300
    for k in range(start, 0, -1):
        vals[k - 1] = (2.0 * k / at) * vals[k] - vals[k + 1]
        if abs(vals[k - 1]) > 1e250:
            vals[k - 1:] *= 1e-250
    norm = vals[0] + 2.0 * np.sum(vals[2:start + 1:2])
    out = vals[:kmax + 1] / norm
    if t < 0:
        out = out * (-1.0) ** np.arange(kmax + 1)
    return out


@dataclass(frozen=True, eq=False)
class LaurentTable:
    """``coeffs[j]`` multiplies ``w**(j + k_min)``."""

    coeffs: np.ndarray
    k_min: int
    t: float = 0.0
    eps: float = 0.0

    @property
    def k_max(self) -> int:
        return self.k_min + len(self.coeffs) - 1

    @property
    def K(self) -> int:
        return max(-self.k_min, self.k_max)

    def __call__(self, theta):
        th = np.asarray(theta, dtype=float)
        ks = np.arange(self.k_min, self.k_max + 1)
        return np.exp(1j * np.multiply.outer(th, ks)) @ self.coeffs

    def coefficient(self, k: int) -> complex:
        j = k - self.k_min
        return complex(self.coeffs[j]) if 0 <= j < len(self.coeffs) else 0j


def jacobi_anger(t: float, eps: float) -> LaurentTable:
    """Truncated ``exp(-i t cos x) = sum_k (-i)**k J_k(t) e^{ikx}`` with sup error <= eps.

    ``K`` is the smallest order with ``2 sum_{k>K} |J_k(t)| <= eps/2``; the table
    is divided by ``1 + eps/2`` so its modulus stays below one.
    """
    if not (0 < eps < 1):
        raise DomainError("eps must lie in (0, 1)")
    t = float(t)
    kmax = int(abs(t) + 60 + 12 * abs(t) ** (1.0 / 3.0) + 2 * math.log(1.0 / eps))
    J = np.abs(bessel_j(kmax, t))
    tail = 2.0 * np.cumsum(J[::-1])[::-1]  # tail[k] = 2 sum_{j>=k} |J_j|
    tail = np.append(tail, 0.0)
    K = 0
    while tail[K + 1] > eps / 2.0:
        K += 1
    Jk = bessel_j(K, t)
    ks = np.arange(-K, K + 1)
    coeffs = ((-1j) ** np.abs(ks)) * Jk[np.abs(ks)]
    # c_{-k} = (-i)^{-k} J_{-k} = (-i)^k J_k
    coeffs = coeffs / (1.0 + eps / 2.0)
    return LaurentTable(coeffs, -K, t, eps)
