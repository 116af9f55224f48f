"""Symmetric phase factors for QSVT and QETU.

The solver works in the ``W_x`` convention

    U(x) = e^{i phi_0 Z} prod_{j=1..d} W(x) e^{i phi_j Z},   W(x) = e^{i arccos(x) X},

and fits ``Re U_00(x) = f(x)`` at the positive Chebyshev nodes by a
Levenberg-Marquardt solve over the reduced (half) phase vector, starting from
zero.  Conversions give the reflection convention used by the QSVT circuit and
the X-rotation convention used by QETU.
"""
from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .errors import DomainError, ParityError, SolverError
from .poly import ChebyshevSeries

__all__ = [
    "SymmetricPhases", "solve_wx_phases", "qsp_phases_symmetric", "qetu_shift", "wx_to_qsvt",
    "wx_to_qetu", "eval_wx", "eval_reflection", "eval_qetu", "phase_cache_path", "MAX_ITER",
]

MAX_ITER = 500
DEFAULT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SymmetricPhases:
    """Phase vector with ``phases[j] == phases[d-j]`` bit for bit.

    ``convention`` is ``"wx"``, ``"qsvt"`` (reflection signal operator) or ``"qetu"``.
    """

    phases: np.ndarray
    convention: str = "wx"
    residual: float = 0.0

    def __post_init__(self):
        ph = np.array(self.phases, dtype=float).ravel()
        if ph.size == 0:
            raise DomainError("empty phase vector")
        if not np.array_equal(ph, ph[::-1]):
            raise DomainError("phases are not symmetric")
        ph.setflags(write=False)
        object.__setattr__(self, "phases", ph)

    @property
    def degree(self) -> int:
        return self.phases.size - 1


def _mirror(red: np.ndarray, d: int) -> np.ndarray:
    h = red.size
    ph = np.empty(d + 1)
    ph[:h] = red
    ph[d + 1 - h:] = red[::-1]
    return ph


def _end_shift(d: int, ends: float, interior: float) -> np.ndarray:
    s = np.full(d + 1, interior)
    s[0] = s[-1] = ends
    return s


# -- matrix-product evaluators ---------------------------------------------------------

def _zrot(phi: float):
    return np.exp(1j * phi), np.exp(-1j * phi)


def eval_wx(phases, x) -> np.ndarray:
    """``U(x)`` in the ``W_x`` convention, shape ``(len(x), 2, 2)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = np.sqrt(np.clip(1 - x * x, 0, None))
    W = np.empty((x.size, 2, 2), dtype=complex)
    W[:, 0, 0] = W[:, 1, 1] = x
    W[:, 0, 1] = W[:, 1, 0] = 1j * s
    ph = np.asarray(phases, dtype=float)
    M = np.zeros((x.size, 2, 2), dtype=complex)
    a, b = _zrot(ph[0])
    M[:, 0, 0], M[:, 1, 1] = a, b
    for p in ph[1:]:
        M = M @ W
        a, b = _zrot(p)
        M[:, :, 0] *= a
        M[:, :, 1] *= b
    return M


def eval_reflection(phases, x) -> np.ndarray:
    """``e^{i psi_0 Z} prod R(x) e^{i psi_j Z}`` with ``R(x) = [[x, s], [s, -x]]``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = np.sqrt(np.clip(1 - x * x, 0, None))
    R = np.empty((x.size, 2, 2), dtype=complex)
    R[:, 0, 0] = x
    R[:, 1, 1] = -x
    R[:, 0, 1] = R[:, 1, 0] = s
    ph = np.asarray(phases, dtype=float)
    M = np.zeros((x.size, 2, 2), dtype=complex)
    a, b = _zrot(ph[0])
    M[:, 0, 0], M[:, 1, 1] = a, b
    for p in ph[1:]:
        M = M @ R
        a, b = _zrot(p)
        M[:, :, 0] *= a
        M[:, :, 1] *= b
    return M


def eval_qetu(phases, x) -> np.ndarray:
    """QETU sequence ``e^{i p_0 X}, CU, e^{i p_1 X}, CU^dag, ...`` with ``x = cos(theta)``.

    ``CU = diag(1, e^{-2i theta})`` on the control; returns the 2x2 product per point.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    theta = np.arccos(np.clip(x, -1, 1))
    ph = np.asarray(phases, dtype=float)

    def xrot(p):
        m = np.zeros((x.size, 2, 2), dtype=complex)
        m[:, 0, 0] = m[:, 1, 1] = math.cos(p)
        m[:, 0, 1] = m[:, 1, 0] = 1j * math.sin(p)
        return m

    M = xrot(ph[0])
    for j, p in enumerate(ph[1:]):
        sign = -1.0 if j % 2 == 0 else 1.0
        M[:, 1, :] *= np.exp(sign * 2j * theta)[:, None]
        M = xrot(p) @ M
    return M


# -- solver ----------------------------------------------------------------------------

def _nodes(h: int) -> np.ndarray:
    k = np.arange(1, h + 1)
    return np.cos((2 * k - 1) * np.pi / (4 * h))


def _residual_and_jac(red, d, xs, target):
    ph = _mirror(red, d) + _end_shift(d, math.pi / 4, 0.0)
    m = xs.size
    s = np.sqrt(np.clip(1 - xs * xs, 0, None))
    W = np.empty((m, 2, 2), dtype=complex)
    W[:, 0, 0] = W[:, 1, 1] = xs
    W[:, 0, 1] = W[:, 1, 0] = 1j * s
    E = np.zeros((d + 1, 2, 2), dtype=complex)
    E[:, 0, 0] = np.exp(1j * ph)
    E[:, 1, 1] = np.exp(-1j * ph)
    # left[j] = E0 W E1 W ... E_{j-1} W ; right[j] = W E_{j+1} ... W E_d
    left = np.empty((d + 1, m, 2, 2), dtype=complex)
    left[0] = np.eye(2)
    for j in range(1, d + 1):
        left[j] = (left[j - 1] @ E[j - 1]) @ W
    right = np.empty((d + 1, m, 2, 2), dtype=complex)
    right[d] = np.eye(2)
    for j in range(d - 1, -1, -1):
        right[j] = W @ (E[j + 1] @ right[j + 1])
    U = left[d] @ E[d]
    res = U[:, 0, 0].real - target
    Zm = np.diag([1j, -1j])
    dfull = np.empty((m, d + 1))
    for j in range(d + 1):
        dU = left[j] @ (Zm @ E[j]) @ right[j]
        dfull[:, j] = dU[:, 0, 0].real
    h = red.size
    jac = dfull[:, :h].copy()
    mirror = d - np.arange(h)
    distinct = mirror != np.arange(h)
    jac[:, distinct] += dfull[:, mirror[distinct]]
    return res, jac


def _check_series(series: ChebyshevSeries):
    if series.parity not in ("even", "odd"):
        raise ParityError("symmetric phases need a definite-parity series")
    sup = series.sup_norm()
    if sup > 1.0 + 1e-12:
        raise DomainError(f"series sup-norm {sup:.6g} exceeds 1")


def _verify_points(d: int) -> np.ndarray:
    n = max(2 * d, 2)
    k = np.arange(n)
    return np.cos((2 * k + 1) * np.pi / (2 * n))


def solve_wx_phases(series: ChebyshevSeries, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                    use_cache: bool = True) -> SymmetricPhases:
    """Symmetric ``W_x`` phases with ``Re U_00 = series`` (checked at ``2d`` Chebyshev nodes)."""
    _check_series(series)
    d = series.degree
    if series.parity == "odd" and d % 2 == 0:
        d += 1
    if d == 0:
        c0 = float(np.clip(series.coeffs[0], -1, 1))
        return SymmetricPhases(np.array([math.acos(c0)]), "wx", 0.0)
    if use_cache:
        hit = _cache_lookup(series, d, tol)
        if hit is not None:
            return hit
    h = d // 2 + 1 if d % 2 == 0 else (d + 1) // 2
    xs = _nodes(h)
    target = series(xs)
    sol = least_squares(lambda r: _residual_and_jac(r, d, xs, target)[0], np.zeros(h),
                        jac=lambda r: _residual_and_jac(r, d, xs, target)[1], method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_iter * (h + 1))
    ph = _mirror(sol.x, d) + _end_shift(d, math.pi / 4, 0.0)
    check = _verify_points(d)
    resid = float(np.max(np.abs(eval_wx(ph, check)[:, 0, 0].real - series(check))))
    if not np.isfinite(resid) or resid > tol:
        raise SolverError(f"phase solver did not reach tol={tol:g} (residual {resid:.3e}, degree {d})",
                          residual=resid)
    out = SymmetricPhases(ph, "wx", resid)
    if use_cache:
        _cache_store(series, d, tol, out)
    return out


def wx_to_qsvt(ph: SymmetricPhases) -> SymmetricPhases:
    """Reflection-convention phases giving ``Re[M_R]_00`` equal to ``Re[U_Wx]_00``."""
    if ph.convention != "wx":
        raise DomainError("expected W_x phases")
    d = ph.degree
    if d == 0:
        return SymmetricPhases(ph.phases, "qsvt", ph.residual)
    if d % 2:
        raise ParityError("the reflection-convention circuit is implemented for even degree only")
    psi = ph.phases - _end_shift(d, math.pi / 4, math.pi / 2)
    if (d // 2) % 2:
        psi = psi + _end_shift(d, math.pi / 2, 0.0)
    return SymmetricPhases(psi, "qsvt", ph.residual)


def qetu_shift(ph: SymmetricPhases) -> SymmetricPhases:
    """``phi_j + (2 - delta_{j0}) pi/4`` applied symmetrically (pi/4 at both ends, pi/2 inside)."""
    d = ph.degree
    shift = _end_shift(d, math.pi / 4, math.pi / 2) if d > 0 else np.zeros(1)
    return SymmetricPhases(ph.phases + shift, "qetu", ph.residual)


def wx_to_qetu(ph: SymmetricPhases) -> SymmetricPhases:
    """QETU X-rotation phases for an even-degree ``W_x`` solution.

    This is :func:`qetu_shift` followed by an extra ``pi/2`` at both ends when
    ``d/2`` is odd; that fixes the overall sign ``(-1)**(d/2)`` of the sequence.
    """
    if ph.convention != "wx":
        raise DomainError("expected W_x phases")
    d = ph.degree
    if d % 2:
        raise ParityError("QETU needs an even polynomial")
    out = qetu_shift(ph)
    if (d // 2) % 2:
        out = SymmetricPhases(out.phases + _end_shift(d, math.pi / 2, 0.0), "qetu", ph.residual)
    return out


def qsp_phases_symmetric(series: ChebyshevSeries, tol: float = DEFAULT_TOL,
                         convention: str = "qsvt") -> SymmetricPhases:
    """Solve and return phases in the requested convention (``qsvt``, ``wx`` or ``qetu``)."""
    ph = solve_wx_phases(series, tol)
    if convention == "wx":
        return ph
    if convention == "qsvt":
        return wx_to_qsvt(ph)
    if convention == "qetu":
        return wx_to_qetu(ph)
    raise DomainError(f"unknown convention {convention!r}")


# -- append-only cache -----------------------------------------------------------------

def phase_cache_path() -> Optional[Path]:
    d = os.environ.get("BBENC_CACHE_DIR")
    return Path(d) / "phases.txt" if d else None


def _series_hash(series: ChebyshevSeries) -> str:
    payload = series.parity.encode() + np.round(series.coeffs, 15).tobytes()
    return hashlib.sha256(payload).hexdigest()[:24]


def _cache_lookup(series, d, tol) -> Optional[SymmetricPhases]:
    path = phase_cache_path()
    if path is None or not path.exists():
        return None
    key = _series_hash(series)
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) < 4 or parts[0] != key or int(parts[1]) != d or float(parts[2]) > tol:
                continue
            ph = np.array([float(p) for p in parts[3:]])
            check = _verify_points(d)
            resid = float(np.max(np.abs(eval_wx(ph, check)[:, 0, 0].real - series(check))))
            if ph.size == d + 1 and resid <= tol and np.array_equal(ph, ph[::-1]):
                return SymmetricPhases(ph, "wx", resid)
    return None


def _cache_store(series, d, tol, ph: SymmetricPhases) -> None:
    path = phase_cache_path()
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    body = " ".join(format(float(p), ".17g") for p in ph.phases)
    with open(path, "a") as fh:
        fh.write(f"{_series_hash(series)} {d} {format(tol, '.17g')} {body}\n")
