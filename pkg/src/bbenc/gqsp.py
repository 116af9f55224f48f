"""Generalized QSP: completion polynomial and SU(2) angle extraction.

Convention: the signal qubit starts with ``R(theta_0, phi_0, lam)`` and each
step applies the 0-controlled signal operator ``A = |0><0| x W + |1><1| x I``
followed by ``R(theta_j, phi_j, 0)``, where

    R(t, f, l) = [[e^{i(l+f)} cos t, e^{i f} sin t], [e^{i l} sin t, -cos t]].

The top-left entry of the product is ``P(W) = sum_j p_j W^j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SolverError
from .poly import CERT_GRID_POINTS, LaurentTable

__all__ = ["GqspPhases", "gqsp_phases", "complement_cepstral", "complement_roots", "r_matrix"]


def r_matrix(theta: float, phi: float, lam: float = 0.0) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[np.exp(1j * (lam + phi)) * c, np.exp(1j * phi) * s],
                     [np.exp(1j * lam) * s, -c]])


@dataclass(frozen=True, eq=False)
class GqspPhases:
    """Angles for a Laurent polynomial supported on ``[k_min, k_max]``."""

    thetas: np.ndarray
    phis: np.ndarray
    lam: float
    k_min: int = 0
    k_max: int = 0

    @property
    def degree(self) -> int:
        return len(self.thetas) - 1

    def evaluate(self, w) -> np.ndarray:
        """``P(w)`` including the ``w**k_min`` shift, from the 2x2 recursion."""
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        c, s = math.cos(self.thetas[0]), math.sin(self.thetas[0])
        v0 = np.full(w.shape, np.exp(1j * (self.lam + self.phis[0])) * c)
        v1 = np.full(w.shape, np.exp(1j * self.lam) * s)
        for t, f in zip(self.thetas[1:], self.phis[1:]):
            c, s = math.cos(t), math.sin(t)
            e = np.exp(1j * f)
            v0 = w * v0
            v0, v1 = e * (c * v0 + s * v1), s * v0 - c * v1
        return v0 * w ** self.k_min

    def evaluate_theta(self, theta) -> np.ndarray:
        return self.evaluate(np.exp(1j * np.asarray(theta, dtype=float)))


def _poly_on_grid(p: np.ndarray, m: int) -> np.ndarray:
    # values at w_j = exp(2 pi i j / m)
    return np.fft.ifft(p, m) * m


def complement_cepstral(p: np.ndarray, oversample: int = 16) -> np.ndarray:
    """Outer polynomial ``q`` with ``|q|^2 = 1 - |p|^2`` on the unit circle.

    ``log|q|`` is fixed on the circle; its analytic extension is read off the
    FFT of ``log(1 - |p|^2)/2`` by keeping the causal half of the cepstrum.
    """
    p = np.asarray(p, dtype=complex)
    d = p.size - 1
    m = 1 << int(math.ceil(math.log2(max(oversample * (d + 1), 8))))
    L = 1.0 - np.abs(_poly_on_grid(p, m)) ** 2
    if np.min(L) <= 0:
        raise SolverError(f"1 - |P|^2 is not positive on the grid (min {np.min(L):.3e})",
                          residual=float(np.min(L)))
    cep = np.fft.fft(np.log(L) / 2.0) / m  # coefficient of w^k for log|q|
    h = np.zeros(m, dtype=complex)
    h[0] = cep[0]
    h[1:m // 2] = 2.0 * cep[1:m // 2]
    h[m // 2] = cep[m // 2]
    qv = np.exp(np.fft.ifft(h) * m)  # q on the grid
    q = np.fft.fft(qv) / m
    return q[:d + 1]


def complement_roots(p: np.ndarray) -> np.ndarray:
    """Fejer-Riesz completion from the roots of ``w^d (1 - P(w) P*(1/w))``."""
    p = np.asarray(p, dtype=complex)
    d = p.size - 1
    if d == 0:
        return np.array([math.sqrt(max(0.0, 1 - abs(p[0]) ** 2))], dtype=complex)
    # coefficients of P(w) conj(P)(1/w) for powers -d..d
    corr = np.convolve(p, np.conj(p[::-1]))
    lau = -corr
    lau[d] += 1.0
    if np.max(np.abs(lau)) < 1e-14:
        return np.zeros(d + 1, dtype=complex)
    # numpy roots wants highest power first
    coeffs = lau[::-1]
    nz = np.flatnonzero(np.abs(coeffs) > 1e-300)
    coeffs = coeffs[nz[0]:nz[-1] + 1]
    roots = np.roots(coeffs)
    roots = roots[np.argsort(np.abs(roots))]
    inside = roots[: len(roots) // 2]
    q = np.poly(inside)[::-1] if inside.size else np.ones(1, dtype=complex)
    q = np.concatenate((q, np.zeros(d + 1 - q.size)))
    # fix the scale from |q|^2 = 1 - |p|^2 on a grid
    m = 4 * (d + 1)
    qv, pv = _poly_on_grid(q, m), _poly_on_grid(p, m)
    target = 1 - np.abs(pv) ** 2
    scale = math.sqrt(max(float(np.mean(target) / np.mean(np.abs(qv) ** 2)), 0.0))
    return q * scale


def _angles(p: np.ndarray, q: np.ndarray):
    p = p.astype(complex).copy()
    q = q.astype(complex).copy()
    d = p.size - 1
    th = np.zeros(d + 1)
    ph = np.zeros(d + 1)
    for j in range(d, 0, -1):
        a, b, a0, b0 = p[j], q[j], p[0], q[0]
        if abs(a) ** 2 + abs(b) ** 2 >= abs(a0) ** 2 + abs(b0) ** 2:
            t = math.atan2(abs(b), abs(a))
            f = np.angle(a) - np.angle(b)
        else:
            t = math.atan2(abs(a0), abs(b0))
            f = np.angle(a0) - np.angle(-b0)
        th[j], ph[j] = t, f
        c, s, e = math.cos(t), math.sin(t), np.exp(-1j * f)
        np_, nq = e * c * p + s * q, e * s * p - c * q
        p, q = np_[1:], nq[:-1]
    lam = float(np.angle(q[0])) if abs(q[0]) > 0 else 0.0
    th[0] = math.atan2(abs(q[0]), abs(p[0]))
    ph[0] = float(np.angle(p[0])) - lam
    return th, ph, lam


def gqsp_phases(table, method: str = "auto", check_tol: float = 1e-9) -> GqspPhases:
    """Angles reproducing the Laurent table on the unit circle.

    ``table`` is a :class:`LaurentTable` or a plain coefficient array (powers
    ``0..d``).  ``method`` picks the completion: ``"cepstral"``, ``"roots"`` or
    ``"auto"`` (roots up to degree 24, cepstral above).
    """
    if isinstance(table, LaurentTable):
        p, k_min = np.asarray(table.coeffs, dtype=complex), table.k_min
    else:
        p, k_min = np.asarray(table, dtype=complex).ravel(), 0
    d = p.size - 1
    grid = np.exp(2j * np.pi * np.arange(CERT_GRID_POINTS) / CERT_GRID_POINTS)
    pv = np.polyval(p[::-1], grid)
    sup = float(np.max(np.abs(pv)))
    if sup > 1 + 1e-10:
        raise DomainError(f"|P| reaches {sup:.12g} > 1 on the unit circle")
    if method == "auto":
        method = "roots" if d <= 24 else "cepstral"
    if method == "cepstral":
        q = complement_cepstral(p)
    elif method == "roots":
        q = complement_roots(p)
    else:
        raise DomainError(f"unknown completion method {method!r}")
    qv = np.polyval(q[::-1], grid)
    comp = float(np.max(np.abs(np.abs(pv) ** 2 + np.abs(qv) ** 2 - 1)))
    if comp > 1e-8:
        raise SolverError(f"completion violates |P|^2+|Q|^2=1 by {comp:.3e}", residual=comp)
    th, ph, lam = _angles(p, q)
    out = GqspPhases(th, ph, lam, k_min, k_min + d)
    err = float(np.max(np.abs(out.evaluate(grid) * grid ** (-k_min) - pv)))
    if err > check_tol:
        raise SolverError(f"GQSP angles reproduce P only to {err:.3e}", residual=err)
    return out
