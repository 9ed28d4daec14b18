"""Local minima of the potential.

The general finder brackets sign changes of V' on every open interval between
spikes and polishes them with a safeguarded Newton iteration.  The closed forms
for the special topologies (K=0; g=0; K=1) are kept separately and used as
independent checks of the finder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import potential
from .errors import BracketingFailed, ComplexRoots, NoMinimumFound, WrongTopology
from .potential import PotentialSpec

INITIAL_PANELS = 256
MAX_PANELS = 1 << 16
SHALLOW_C2 = 1e-10
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Well:
    """One local minimum.

    ``value`` is V(R) and ``c2`` is V''(R)/2.  A well either carries the PotentialSpec
    it came from (coefficients computed on demand) or an explicit coefficient
    list, which is how synthetic test wells are built.
    """

    id: int
    location: float
    interval: tuple[float, float]
    value: float
    c2: float
    spec: Optional[PotentialSpec] = None
    coeffs: Optional[tuple[float, ...]] = None

    def taylor(self, M: int) -> list[float]:
        """c_0..c_M about the minimum, with c_1 forced to zero."""
        if self.coeffs is not None:
            c = list(self.coeffs[: M + 1]) + [0.0] * max(0, M + 1 - len(self.coeffs))
        else:
            c = potential.taylor_coeffs(self.spec, self.location, M)
        c[1] = 0.0
        return c

    @classmethod
    def from_coeffs(cls, coeffs, id: int = 0, location: float = 0.0) -> "Well":
        coeffs = tuple(float(v) for v in coeffs)
        if len(coeffs) < 3:
            coeffs = coeffs + (0.0,) * (3 - len(coeffs))
        return cls(
            id=id,
            location=location,
            interval=(-math.inf, math.inf),
            value=coeffs[0],
            c2=coeffs[2],
            coeffs=coeffs,
        )


def _vp(spec, x):
    return potential.derivative(spec, x, 1)


def _vpp(spec, x):
    return potential.derivative(spec, x, 2)


def outer_bound(spec: PotentialSpec) -> float:
    """Abscissa beyond which V' > 0 is guaranteed.

    For x >= sqrt(2)*s_K each spike term obeys 4 h2 x/(x^2-s^2) <= 8 h2/x, so
    V' >= 2 omega2 x - (2 g2 + 8 sum h2)/x, which is positive once
    x^2 > (g2 + 4 sum h2)/omega2.
    """
    sK = spec.spikes[-1][1] if spec.spikes else 0.0
    hsum = sum(h2 for h2, _ in spec.spikes)
    x0 = max(math.sqrt(2.0) * sK, math.sqrt((spec.g2 + 4.0 * hsum) / spec.omega2))
    return 1.05 * x0 + 1.0


def _positive_intervals(spec: PotentialSpec):
    """Open intervals on x > 0 between consecutive effective boundaries.

    Each entry is (lo, hi, sign_lo, sign_hi, true_hi) where sign_* is the known
    sign of V' at the (excluded) ends or None, and true_hi is the right end of
    the well's domain (inf for the outer interval).
    """
    edges = [0.0] + [s for _, s in spec.spikes]
    out = []
    for i, lo in enumerate(edges):
        if i + 1 < len(edges):
            hi, true_hi, sign_hi = edges[i + 1], edges[i + 1], 1.0
        else:
            hi, true_hi, sign_hi = max(outer_bound(spec), lo + 1.0), math.inf, None
        sign_lo = -1.0 if (lo > 0 or spec.g2 > 0) else None
        out.append((lo, hi, sign_lo, sign_hi, true_hi))
    return out


def _count_brackets(spec, lo, hi, sign_lo, sign_hi, panels):
    x = np.linspace(lo, hi, panels + 1)[1:-1]
    sx = np.sign(_vp(spec, x))
    xs = list(x)
    signs = list(sx)
    if sign_lo is not None:
        xs.insert(0, lo)
        signs.insert(0, sign_lo)
    if sign_hi is not None:
        xs.append(hi)
        signs.append(sign_hi)
    else:
        xs.append(hi)
        signs.append(np.sign(_vp(spec, hi)))
    brackets = []
    for i in range(len(xs) - 1):
        if signs[i] < 0 and signs[i + 1] > 0:
            brackets.append((xs[i], xs[i + 1]))
        elif signs[i] < 0 and signs[i + 1] == 0 and i + 2 < len(xs) and signs[i + 2] > 0:
            brackets.append((xs[i], xs[i + 2]))
    return brackets


def _polish(spec, a, b, maxiter=200):
    """Safeguarded Newton on V' in the open bracket (a, b) with V'(a)<0<V'(b)."""
    x = 0.5 * (a + b)
    for _ in range(maxiter):
        f = _vp(spec, x)
        fp = _vpp(spec, x)
        if abs(f) <= 1e-13 * (1.0 + abs(fp) * abs(x)):
            return x
        if f < 0:
            a = x
        else:
            b = x
        step_ok = fp > 0
        if step_ok:
            xn = x - f / fp
            step_ok = a < xn < b
        if not step_ok:
            xn = 0.5 * (a + b)
        if xn == x or b - a <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            return xn
        x = xn
    raise BracketingFailed(f"root polish did not converge in ({a}, {b})", interval=(a, b))


def _minima_in(spec, lo, hi, sign_lo, sign_hi):
    panels = INITIAL_PANELS
    counts = []
    brackets = []
    while True:
        brackets = _count_brackets(spec, lo, hi, sign_lo, sign_hi, panels)
        counts.append(len(brackets))
        if len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3]:
            break
        if panels >= MAX_PANELS:
            break
        panels *= 2
    return [_polish(spec, a, b) for a, b in brackets]


def _make_well(spec, x, interval, id=0) -> Optional[Well]:
    c2 = 0.5 * _vpp(spec, x)
    if c2 <= SHALLOW_C2:
        return None
    return Well(id=id, location=float(x), interval=interval,
                value=potential.evaluate(spec, x), c2=float(c2), spec=spec)


def _renumber(wells):
    wells = sorted(wells, key=lambda w: w.location)
    return [Well(i, w.location, w.interval, w.value, w.c2, w.spec, w.coeffs)
            for i, w in enumerate(wells)]


def find_minima(spec: PotentialSpec) -> list[Well]:
    """All local minima, ordered by location (mirror pairs plus maybe x=0)."""
    found = []
    s1 = spec.spikes[0][1] if spec.spikes else math.inf
    if spec.g2 == 0:
        w = _make_well(spec, 0.0, (-s1, s1))
        if w is not None:
            found.append(w)
    for lo, hi, sign_lo, sign_hi, true_hi in _positive_intervals(spec):
        for x in _minima_in(spec, lo, hi, sign_lo, sign_hi):
            if x <= 0.0:
                continue
            w = _make_well(spec, x, (lo, true_hi))
            if w is None:
                continue
            found.append(w)
            found.append(_make_well(spec, -x, (-true_hi, -lo)))
    if not found:
        raise NoMinimumFound(f"no minimum located for {spec!r}")
    return _renumber(found)


def _closed_well(spec, R, value, c2, interval):
    return Well(id=0, location=float(R), interval=interval,
                value=float(value), c2=float(c2), spec=spec)


def minimum_k0(spec: PotentialSpec) -> Well:
    """The x > 0 minimum at K = 0, g > 0: R = g/omega, V(R) = g2 ln(e omega2/g2)."""
    if spec.K != 0 or spec.g2 <= 0:
        raise WrongTopology("minimum_k0 needs K = 0 and g2 > 0")
    R = math.sqrt(spec.g2 / spec.omega2)
    value = spec.g2 * (1.0 + math.log(spec.omega2 / spec.g2))
    return _closed_well(spec, R, value, 2.0 * spec.omega2, (0.0, math.inf))


def central_well_g0(spec: PotentialSpec) -> Well:
    """The minimum at the origin when g = 0."""
    if spec.g2 != 0:
        raise WrongTopology("central_well_g0 needs g2 = 0")
    value = -4.0 * sum(h2 * math.log(s) for h2, s in spec.spikes)
    c2 = spec.omega2 + sum(2.0 * h2 / (s * s) for h2, s in spec.spikes)
    s1 = spec.spikes[0][1] if spec.spikes else math.inf
    return _closed_well(spec, 0.0, value, c2, (-s1, s1))


def offcentral_k1_g0(spec: PotentialSpec) -> tuple[Well, Well]:
    """The two off-central minima at g = 0, K = 1, as (left, right)."""
    if spec.g2 != 0 or spec.K != 1:
        raise WrongTopology("offcentral_k1_g0 needs g2 = 0 and K = 1")
    h2, s = spec.spikes[0]
    w2 = spec.omega2
    R = math.sqrt(s * s + 2.0 * h2 / w2)
    value = w2 * s * s + 2.0 * h2 + h2 * math.log(w2 * w2 / (4.0 * h2 * h2))
    c2 = 2.0 * w2 + s * s * w2 * w2 / h2
    left = _closed_well(spec, -R, value, c2, (-math.inf, -s))
    right = Well(1, R, (s, math.inf), left.value, left.c2, spec)
    return left, right


def _k1_abc(spec):
    if spec.K != 1 or spec.g2 <= 0:
        raise WrongTopology("roots_k1 needs K = 1 and g2 > 0")
    h2, s = spec.spikes[0]
    w2 = spec.omega2
    a = s * s + spec.g2 / w2
    b = s * s - spec.g2 / w2
    c = 2.0 * h2 / w2
    return a, b, c


def roots_k1(spec: PotentialSpec) -> tuple[float, float]:
    """Roots Z- < Z+ of the K = 1 stationarity condition in Z = x^2.

    omega2 Z - g2 - 2 h2 Z/(Z - s^2) = 0 is the quadratic
    Z^2 - (a+c) Z + (a^2-b^2)/4 = 0 with discriminant b^2 + 2ac + c^2.
    """
    a, b, c = _k1_abc(spec)
    disc = b * b + 2.0 * a * c + c * c
    if disc < 0:
        raise ComplexRoots(f"discriminant {disc} < 0")
    r = math.sqrt(disc)
    zp = 0.5 * (a + c + r)
    # product of roots (a^2 - b^2)/4 avoids cancellation in the small root
    zm = 0.25 * (a * a - b * b) / zp
    return zm, zp


def roots_k1_printed(spec: PotentialSpec) -> tuple[float, float]:
    """Same quadratic solved with the discriminant b^2 + 2ac (c^2 omitted).

    Kept only to demonstrate that this variant does not satisfy the
    stationarity condition.
    """
    a, b, c = _k1_abc(spec)
    r = math.sqrt(b * b + 2.0 * a * c)
    return 0.5 * (a + c - r), 0.5 * (a + c + r)


def k1_stationarity_residual(spec: PotentialSpec, Z: float) -> float:
    h2, s = spec.spikes[0]
    return spec.omega2 * Z - spec.g2 - 2.0 * h2 * Z / (Z - s * s)


def wells_k1(spec: PotentialSpec) -> list[Well]:
    """The four K = 1, g > 0 minima at +-sqrt(Z-) and +-sqrt(Z+) from the closed-form roots."""
    zm, zp = roots_k1(spec)
    s = spec.spikes[0][1]
    out = []
    for Z, iv in ((zm, (0.0, s)), (zp, (s, math.inf))):
        if Z <= 0:
            continue
        R = math.sqrt(Z)
        for x, ivx in ((R, iv), (-R, (-iv[1], -iv[0]))):
            w = _make_well(spec, x, ivx)
            if w is not None:
                out.append(w)
    return _renumber(out)


def residual_ok(well: Well) -> bool:
    if well.spec is None:
        return True
    x = well.location
    return abs(_vp(well.spec, x)) < RESIDUAL_TOL * (1.0 + abs(_vpp(well.spec, x)) * abs(x))
