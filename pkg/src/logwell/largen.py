"""Per-well large-N spectra.

Near a minimum R the potential is replaced by its Taylor polynomial
c_0 + c_2 y^2 + c_3 y^3 + ... + c_M y^M with y = x - R.  The harmonic part
p^2 + c_2 y^2 has levels (2n+1) sqrt(c_2) in units hbar = 2m = 1; the rest is
handled either by diagonalization in the harmonic basis or by
Rayleigh-Schrodinger perturbation theory in the same basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    BasisTooSmall,
    DegenerateUnperturbedLevel,
    DegenerateWell,
    MTooSmall,
    SeriesTooShort,
)
from .wells import Well

DEFAULT_M = 4
DEFAULT_B = 64
DEFAULT_P = 4
BASIS_MARGIN = 8


@dataclass
class LocalSpectrum:
    well_id: int
    order: int
    basis_size: int
    n_max: int
    energies: np.ndarray
    method: str  # "leading", "matrix" or "rs_series"
    series: Optional[list] = None
    nonvariational: bool = False
    partial_sums: Optional[list] = field(default=None, repr=False)


def _omega(well: Well) -> float:
    if not well.c2 > 0:
        raise DegenerateWell(f"well {well.id} has c2 = {well.c2} <= 0")
    return math.sqrt(well.c2)


def leading_energies(well: Well, n_max: int) -> LocalSpectrum:
    """Harmonic approximation E_n = c_0 + (2n+1) sqrt(c_2)."""
    om = _omega(well)
    n = np.arange(n_max + 1)
    return LocalSpectrum(well.id, 2, 0, n_max, well.value + (2 * n + 1) * om, "leading")


def position_matrix(size: int, omega: float) -> np.ndarray:
    """<m|y|n> in the eigenbasis of p^2 + omega^2 y^2 (hbar = 2m = 1)."""
    off = np.sqrt(np.arange(1, size) / (2.0 * omega))
    return np.diag(off, 1) + np.diag(off, -1)


def _power_matrices(size: int, omega: float, M: int) -> list:
    """[y^0, y^1, ..., y^M] as size x size blocks, exact for the retained states."""
    work = size + M
    Y = position_matrix(work, omega)
    out = [np.eye(work)]
    for _ in range(M):
        out.append(out[-1] @ Y)
    return [P[:size, :size] for P in out]


def _perturbation(well: Well, M: int, B: int):
    om = _omega(well)
    c = well.taylor(M)
    powers = _power_matrices(B, om, M)
    W = np.zeros((B, B))
    for k in range(3, M + 1):
        if c[k] != 0.0:
            W += c[k] * powers[k]
    H0 = c[0] + (2 * np.arange(B) + 1) * om
    return H0, W


def ho_matrix(well: Well, M: int = DEFAULT_M, B: int = DEFAULT_B, n_max: int = 0) -> np.ndarray:
    """Hamiltonian of the Taylor-truncated well in the first B harmonic states.

    The constant c_0 is included on the diagonal.
    """
    if M < 2:
        raise MTooSmall(f"M must be >= 2, got {M}")
    if B < n_max + BASIS_MARGIN:
        raise BasisTooSmall(f"basis size {B} < n_max + {BASIS_MARGIN} = {n_max + BASIS_MARGIN}")
    H0, W = _perturbation(well, M, B)
    return np.diag(H0) + W


def local_spectrum_matrix(well: Well, M: int = DEFAULT_M, B: int = DEFAULT_B,
                          n_max: int = 0) -> LocalSpectrum:
    """Lowest n_max+1 eigenvalues of :func:`ho_matrix`.

    For odd M the polynomial is unbounded below and the eigenvalues are only
    finite-basis values; the result is flagged ``nonvariational``.
    """
    H = ho_matrix(well, M, B, n_max)
    vals = np.linalg.eigvalsh(H)[: n_max + 1]
    return LocalSpectrum(well.id, M, B, n_max, vals, "matrix", nonvariational=bool(M % 2))


def rs_coefficients(H0: np.ndarray, W: np.ndarray, n: int, P: int) -> list:
    """Rayleigh-Schrodinger coefficients E^(0..P) of level n for diag(H0) + t W."""
    B = H0.shape[0]
    gaps = H0[n] - H0
    if np.any(np.abs(np.delete(gaps, n)) == 0.0):
        raise DegenerateUnperturbedLevel(f"level {n} is degenerate in H0")
    resolvent = np.zeros(B)
    mask = np.arange(B) != n
    resolvent[mask] = 1.0 / gaps[mask]
    E = [float(H0[n]), float(W[n, n])]
    psi = [np.zeros(B)]
    psi[0][n] = 1.0
    for p in range(1, P):
        rhs = W @ psi[p - 1]
        for q in range(1, p + 1):
            rhs = rhs - E[q] * psi[p - q]
        psi.append(resolvent * rhs)
        E.append(float(W[n] @ psi[p]))
    return E[: P + 1]


def rs_series(well: Well, M: int = DEFAULT_M, P: int = DEFAULT_P, n: int = 0,
              B: Optional[int] = None) -> list:
    """Coefficients E_n^(0)..E_n^(P) with W = sum_{k>=3} c_k y^k as the perturbation.

    E^(0) includes c_0.  The default basis is large enough that every
    coefficient is exact for the polynomial perturbation.
    """
    if P < 1:
        raise SeriesTooShort(f"P must be >= 1, got {P}")
    if B is None:
        B = max(DEFAULT_B, n + P * M + BASIS_MARGIN)
    if n >= B:
        raise BasisTooSmall(f"level {n} outside basis of size {B}")
    H0, W = _perturbation(well, M, B)
    return rs_coefficients(H0, W, n, P)


def partial_sums(coefficients) -> list:
    return list(np.cumsum(coefficients))


def rs_spectrum(well: Well, M: int = DEFAULT_M, P: int = DEFAULT_P, n_max: int = 0) -> LocalSpectrum:
    series = [rs_series(well, M, P, n) for n in range(n_max + 1)]
    sums = [partial_sums(s) for s in series]
    energies = np.array([s[-1] for s in sums])
    return LocalSpectrum(well.id, M, 0, n_max, energies, "rs_series", series=series,
                         nonvariational=bool(M % 2), partial_sums=sums)


def optimal_truncation(sums) -> int:
    """Order whose increment S_k - S_{k-1} is smallest in magnitude (ties: lowest k)."""
    sums = list(sums)
    if len(sums) < 3:
        raise SeriesTooShort(f"need at least 3 partial sums, got {len(sums)}")
    inc = np.abs(np.diff(sums))
    return int(np.argmin(inc)) + 1
