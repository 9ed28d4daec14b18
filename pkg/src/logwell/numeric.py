"""Finite-difference reference solver for -psi'' + V psi = E psi on [-L, L].

Three-point Laplacian with Dirichlet ends.  Nodes are kept at least h/4 away
from every spike; V is sampled as is (the log singularities are integrable).
On a mirror-symmetric grid the matrix splits exactly into even and odd
blocks, which are solved separately so that parity holds by construction
even when the tunnelling splitting is below rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import potential
from .errors import ClearanceImpossible, DomainTooSmall, SpecError
from .potential import PotentialSpec
from .tridiag import eigh_tridiagonal_lowest

MIN_NODES = 99
MAX_STATES = 20
OFFSET_TRIES = 24
SUGGEST_RANGE = 64
CLEAR_SLACK = 1e-9  # relative, absorbs rounding when a point sits exactly h/4 from a node


@dataclass(frozen=True)
class Grid:
    L: float
    N: int
    h: float
    offset: float
    nodes: np.ndarray = field(repr=False, compare=False)

    @property
    def symmetric(self) -> bool:
        return self.offset == 0.0


@dataclass
class GridSpectrum:
    grid: Grid
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # shape (k, N); sum(psi**2) * h == 1
    regions: list = field(default_factory=list)
    region_mass: Optional[np.ndarray] = None  # shape (k, n_regions)
    splittings: Optional[np.ndarray] = None  # E_{2j+1} - E_{2j}, symmetric even-N grids only

    def dominant_region(self, n: int) -> int:
        return dominant_region(self.region_mass[n], self.regions)


def default_L(spec: PotentialSpec) -> float:
    sK = spec.spikes[-1][1] if spec.spikes else 0.0
    return 2.0 * max(sK, math.sqrt(spec.g2 / spec.omega2)) + 8.0 / math.sqrt(spec.omega2)


def _offsets(h):
    yield 0.0
    for j in range(1, OFFSET_TRIES + 1):
        yield h / (2 * j + 1)
        yield -h / (2 * j + 1)


def _clearance(nodes, pts):
    """Distance from each singular point to its nearest node."""
    N = nodes.shape[0]
    idx = np.clip(np.searchsorted(nodes, pts), 1, N - 1)
    return np.minimum(np.abs(nodes[idx] - pts), np.abs(nodes[idx - 1] - pts))


def _feasible_offset(base, h, pts):
    """Middle of the widest window of shifts (in units of h) clearing every point.

    A point at fractional position f between nodes is cleared by a shift u
    when frac(f - u) lies in [1/4, 3/4].  The allowed set is an intersection
    of half-circle arcs; its pieces lie between consecutive arc endpoints.
    """
    f = np.mod((pts - base[0]) / h, 1.0)
    cuts = np.sort(np.concatenate([np.mod(f - 0.25, 1.0), np.mod(f - 0.75, 1.0)]))
    cuts = np.append(cuts, cuts[0] + 1.0)
    best, width = None, 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        u = 0.5 * (a + b)
        r = np.mod(f - u, 1.0)
        if b - a >= width and np.all((r >= 0.25) & (r <= 0.75)):
            best, width = u, b - a
    if best is None:
        return None
    best = (best + 0.5) % 1.0 - 0.5  # into [-1/2, 1/2)
    return best * h


def _choose_offset(L, N, pts):
    h = 2.0 * L / (N + 1)
    base = -L + h * np.arange(1, N + 1)
    if pts.size == 0:
        return h, base, 0.0
    need = 0.25 * h * (1.0 - CLEAR_SLACK)
    for off in _offsets(h):
        if np.all(_clearance(base + off, pts) >= need):
            return h, base, off
    off = _feasible_offset(base, h, pts)
    if off is not None and np.all(_clearance(base + off, pts) >= need):
        return h, base, off
    return None


def build_grid(spec: PotentialSpec, L: Optional[float] = None, N: int = 4000) -> Grid:
    """Uniform grid of N interior nodes on [-L, L] clear of every singular point.

    The first offset from (0, h/3, -h/3, h/5, ...) giving a clearance of h/4
    is applied to all nodes.  If none does, the centre of the widest window
    of admissible shifts is used.
    """
    if L is None:
        L = default_L(spec)
    sing = potential.singularities(spec)
    reach = max((abs(p) for p in sing), default=0.0)
    if L <= reach + 1.0:
        raise DomainTooSmall(f"L = {L} must exceed the outermost spike {reach} by more than 1")
    if N < MIN_NODES:
        raise DomainTooSmall(f"N = {N} is below the minimum of {MIN_NODES} nodes")
    pts = np.asarray(sing, dtype=float)
    found = _choose_offset(L, N, pts)
    if found is not None:
        h, base, off = found
        return Grid(L, N, h, off, base + off)
    hint = next(
        (f"N={cand}" for dn in range(1, SUGGEST_RANGE + 1) for cand in (N - dn, N + dn)
         if cand >= MIN_NODES and _choose_offset(L, cand, pts) is not None),
        f"a node count outside N +- {SUGGEST_RANGE}",
    )
    raise ClearanceImpossible(f"no offset gives h/4 clearance for L={L}, N={N}; try {hint}")


def symmetric_node_count(spec: PotentialSpec, L: Optional[float] = None, N: int = 4000,
                         max_shift: int = SUGGEST_RANGE) -> int:
    """Nearest node count to N (trying N, N+1, N-1, ...) whose grid needs no offset.

    Falls back to the nearest count that admits any clearing offset.
    """
    usable = None
    for dn in range(max_shift + 1):
        for cand in ((N + dn, N - dn) if dn else (N,)):
            if cand < MIN_NODES:
                continue
            try:
                grid = build_grid(spec, L, cand)
            except ClearanceImpossible:
                continue
            if grid.symmetric:
                return cand
            if usable is None:
                usable = cand
    if usable is None:
        raise ClearanceImpossible(f"no node count within {max_shift} of N={N} clears the singular points")
    return usable


def _parity_block(diag, off, N, parity):
    """Reduced tridiagonal for the even (+1) or odd (-1) subspace of a mirror-symmetric matrix."""
    m = N // 2
    if N % 2 == 0:
        d = diag[m:].copy()
        d[0] += parity * off
        e = np.full(m - 1, off)
        return d, e
    # odd N: centre node m
    if parity < 0:
        return diag[m + 1:].copy(), np.full(m - 1, off)
    d = diag[m:].copy()
    e = np.full(m, off)
    e[0] = math.sqrt(2.0) * off
    return d, e


def _unfold(half, N, parity):
    m = N // 2
    if N % 2 == 0:
        return np.concatenate([parity * half[::-1], half])
    if parity < 0:
        return np.concatenate([-half[::-1], [0.0], half])
    centre = half[0] * math.sqrt(2.0)
    rest = half[1:]
    return np.concatenate([rest[::-1], [centre], rest])


def _normalize(vecs: np.ndarray, h: float) -> np.ndarray:
    vecs = vecs / np.sqrt(np.sum(vecs * vecs, axis=1) * h)[:, None]
    for j in range(vecs.shape[0]):
        v = vecs[j]
        big = np.flatnonzero(np.abs(v) > 1e-8 * np.max(np.abs(v)))
        if big.size and v[big[0]] < 0:
            vecs[j] = -v
    return vecs


def solve(spec: PotentialSpec, L: Optional[float] = None, N: int = 4000, k: int = 8,
          rtol: float = 1e-10) -> GridSpectrum:
    """Lowest ``k`` eigenpairs of the discretized Hamiltonian."""
    if not 1 <= k <= MAX_STATES:
        raise SpecError(f"k must be in 1..{MAX_STATES}, got {k}")
    grid = build_grid(spec, L, N)
    h = grid.h
    diag = 2.0 / h**2 + potential.evaluate(spec, grid.nodes)
    off = -1.0 / h**2
    if grid.symmetric:
        parts = []
        for parity in (1, -1):
            d, e = _parity_block(diag, off, N, parity)
            vals, vecs = eigh_tridiagonal_lowest(d, e, min((k + 2) // 2, d.shape[0]), rtol)
            full = np.array([_unfold(vecs[:, j], N, parity) for j in range(vecs.shape[1])])
            parts.append((vals, full))
        # Sturm oscillation: even and odd levels interlace, starting with even
        (ve, we), (vo, wo) = parts
        vals = np.empty(k)
        vecs = np.empty((k, N))
        for n in range(k):
            src_v, src_w = (ve, we) if n % 2 == 0 else (vo, wo)
            vals[n] = src_v[n // 2]
            vecs[n] = src_w[n // 2]
    else:
        vals, w = eigh_tridiagonal_lowest(diag, np.full(N - 1, off), k, rtol)
        vecs = w.T.copy()
    vecs = _normalize(vecs, h)
    splittings = None
    if grid.symmetric and N % 2 == 0:
        splittings = _pair_splittings(vecs, h, N)
        for j, dE in enumerate(splittings):
            lo, hi = 2 * j, 2 * j + 1
            tol = rtol * max(1.0, abs(vals[lo]))
            if np.isfinite(dE) and abs(vals[hi] - vals[lo] - dE) <= 10.0 * tol:
                vals[hi] = vals[lo] + dE
    gs = GridSpectrum(grid=grid, eigenvalues=vals, eigenvectors=vecs, splittings=splittings)
    gs.regions, gs.region_mass = localization(gs, potential.singularities(spec))
    return gs


def _pair_splittings(vecs, h, N):
    """Splitting of each even/odd pair from the rank-one identity between the parity blocks.

    The blocks differ only in their first diagonal entry (by 2/h^2), so
    (E_odd - E_even) u.v = (2/h^2) u_0 v_0 for the half-vectors u, v.  Unlike
    a difference of eigenvalues this has no cancellation when the splitting
    is far below rounding of E.  Pairs whose half-vectors are nearly
    orthogonal (not tunnelling partners) get NaN.
    """
    m = N // 2
    out = []
    for j in range(vecs.shape[0] // 2):
        u = vecs[2 * j, m:]
        v = vecs[2 * j + 1, m:]
        uv = float(u @ v)
        cos = abs(uv) / math.sqrt(float(u @ u) * float(v @ v))
        out.append((2.0 / h**2) * u[0] * v[0] / uv if cos >= 0.5 else math.nan)
    return np.asarray(out)


def richardson(spec: PotentialSpec, L: Optional[float] = None, N: int = 4000, k: int = 8,
               rtol: float = 1e-10) -> np.ndarray:
    """Extrapolate the lowest ``k`` levels from grids of N and 2N nodes.

    The three-point scheme is second order, so the error-cancelling weights
    use the exact squared step ratio (about 4).
    """
    coarse = solve(spec, L, N, k, rtol)
    fine = solve(spec, L, 2 * N, k, rtol)
    r2 = (coarse.grid.h / fine.grid.h) ** 2
    return (r2 * fine.eigenvalues - coarse.eigenvalues) / (r2 - 1.0)


def region_bounds(sing, L: float) -> list[tuple[float, float]]:
    edges = [-L] + list(sing) + [L]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def localization(gs: GridSpectrum, sing) -> tuple[list, np.ndarray]:
    """Probability mass of each state in each open region between singular points.

    Returns ``(regions, mass)`` with ``mass[n, r] = sum_{x_i in r} psi_n(x_i)^2 h``.
    """
    regions = region_bounds(sorted(sing), gs.grid.L)
    x = gs.grid.nodes
    which = np.searchsorted(np.asarray(sorted(sing), dtype=float), x)
    dens = gs.eigenvectors**2 * gs.grid.h
    mass = np.zeros((dens.shape[0], len(regions)))
    for r in range(len(regions)):
        sel = which == r
        mass[:, r] = dens[:, sel].sum(axis=1)
    return regions, mass


def _distance_to_origin(region):
    lo, hi = region
    if lo < 0 < hi:
        return 0.0
    return min(abs(lo), abs(hi))


def dominant_region(masses, regions, rel_tie: float = 1e-9) -> int:
    """Index of the heaviest region; near-ties go to the region closer to x = 0."""
    masses = np.asarray(masses)
    top = masses.max()
    tied = [r for r in range(len(regions)) if masses[r] >= top * (1.0 - rel_tie)]
    return min(tied, key=lambda r: (_distance_to_origin(regions[r]), r))


def fold_region(r: int, n_regions: int) -> int:
    """Map a region index and its mirror image to the same class."""
    return min(r, n_regions - 1 - r)


def parity_defect(gs: GridSpectrum, n: int) -> float:
    """sum_i |psi_i - (-1)^n psi_mirror(i)|; zero on a symmetric grid."""
    v = gs.eigenvectors[n]
    sign = 1.0 if n % 2 == 0 else -1.0
    return float(np.sum(np.abs(v - sign * v[::-1])))
