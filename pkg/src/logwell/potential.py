"""Multi-spike log-anharmonic potential.

    V(x) = omega2 * x**2 - g2 * ln(x**2) - sum_j h2_j * ln((x**2 - s_j**2)**2)

Units are hbar = 2m = 1 throughout, so the kinetic term is -d^2/dx^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DuplicateSpikePosition,
    MTooSmall,
    NegativeG2,
    NonFiniteCoupling,
    NonPositiveOmega2,
    NonPositiveSpikeField,
    NonPositiveSpikePosition,
    SingularArgument,
    UnsupportedOrder,
)

SING_REL_TOL = 1e-12


@dataclass(frozen=True)
class PotentialSpec:
    """Parameters (omega2, g2, spikes) of the potential.

    ``spikes`` holds ``(h2, s)`` pairs: a spike of strength ``h2`` at ``x = +-s``.
    Construction does not validate; call :func:`validate`.
    """

    omega2: float
    g2: float = 0.0
    spikes: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "omega2", float(self.omega2))
        object.__setattr__(self, "g2", float(self.g2))
        object.__setattr__(
            self, "spikes", tuple((float(h2), float(s)) for h2, s in self.spikes)
        )

    @property
    def K(self) -> int:
        return len(self.spikes)

    @property
    def omega(self) -> float:
        return math.sqrt(self.omega2)

    def replace(self, **changes) -> "PotentialSpec":
        data = {"omega2": self.omega2, "g2": self.g2, "spikes": self.spikes}
        data.update(changes)
        return PotentialSpec(**data)

    def to_dict(self) -> dict:
        return {
            "omega2": self.omega2,
            "g2": self.g2,
            "spikes": [{"h2": h2, "s": s} for h2, s in self.spikes],
        }


def validate(spec: PotentialSpec) -> PotentialSpec:
    """Check the invariants and return a copy with spikes sorted by position."""
    values = [spec.omega2, spec.g2] + [v for pair in spec.spikes for v in pair]
    if not all(math.isfinite(v) for v in values):
        raise NonFiniteCoupling(f"non-finite coupling in {spec!r}")
    if spec.omega2 <= 0:
        raise NonPositiveOmega2(f"omega2 must be > 0, got {spec.omega2}")
    if spec.g2 < 0:
        raise NegativeG2(f"g2 must be >= 0, got {spec.g2}")
    for h2, s in spec.spikes:
        if h2 <= 0:
            raise NonPositiveSpikeField(f"spike field h2 must be > 0, got {h2}")
        if s <= 0:
            raise NonPositiveSpikePosition(f"spike position s must be > 0, got {s}")
    spikes = tuple(sorted(spec.spikes, key=lambda p: p[1]))
    for (_, s0), (_, s1) in zip(spikes, spikes[1:]):
        if s0 == s1:
            raise DuplicateSpikePosition(f"two spikes at s = {s0}")
    return PotentialSpec(spec.omega2, spec.g2, spikes)


def singularities(spec: PotentialSpec) -> list[float]:
    """Sorted abscissae where V diverges: 0 when g2 > 0, and every +-s_j."""
    pts = [-s for _, s in spec.spikes] + [s for _, s in spec.spikes]
    if spec.g2 > 0:
        pts.append(0.0)
    return sorted(pts)


def _check_regular(spec: PotentialSpec, x: np.ndarray) -> None:
    pts = singularities(spec)
    if not pts:
        return
    tol = SING_REL_TOL * np.maximum(1.0, np.abs(x))
    for p in pts:
        bad = np.abs(x - p) < tol
        if np.any(bad):
            xb = float(np.atleast_1d(x)[np.atleast_1d(bad)][0])
            raise SingularArgument(f"x = {xb!r} is within tolerance of the spike at {p}")


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def evaluate(spec: PotentialSpec, x):
    """V(x) for scalar or array ``x``; raises SingularArgument near a spike."""
    xa = np.asarray(x, dtype=float)
    _check_regular(spec, xa)
    ax = np.abs(xa)
    v = spec.omega2 * xa * xa
    if spec.g2 > 0:
        v = v - spec.g2 * 2.0 * np.log(ax)
    for h2, s in spec.spikes:
        # ln((x^2 - s^2)^2) split into linear factors for accuracy near the spike
        v = v - h2 * 2.0 * (np.log(np.abs(xa - s)) + np.log(np.abs(xa + s)))
    return _scalar_or_array(x, v)


def derivative(spec: PotentialSpec, x, order: int):
    """Closed-form V', V'' or V''' at ``x``."""
    if order not in (1, 2, 3):
        raise UnsupportedOrder(f"derivative order must be 1, 2 or 3, got {order}")
    xa = np.asarray(x, dtype=float)
    _check_regular(spec, xa)
    w2, g2 = spec.omega2, spec.g2
    if order == 1:
        d = 2.0 * w2 * xa
        if g2 > 0:
            d = d - 2.0 * g2 / xa
        for h2, s in spec.spikes:
            d = d - 4.0 * h2 * xa / ((xa - s) * (xa + s))
    elif order == 2:
        d = np.full_like(xa, 2.0 * w2)
        if g2 > 0:
            d = d + 2.0 * g2 / (xa * xa)
        for h2, s in spec.spikes:
            q = (xa - s) * (xa + s)
            d = d + 4.0 * h2 * (xa * xa + s * s) / (q * q)
    else:
        d = np.zeros_like(xa)
        if g2 > 0:
            d = d - 4.0 * g2 / xa**3
        for h2, s in spec.spikes:
            q = (xa - s) * (xa + s)
            d = d - 8.0 * h2 * xa * (xa * xa + 3.0 * s * s) / q**3
    return _scalar_or_array(x, d)


def taylor_coeffs(spec: PotentialSpec, R: float, M: int) -> list[float]:
    """Coefficients c_0..c_M of the Taylor expansion of V about ``R``.

    Orders 1..3 reuse :func:`derivative` so that ``c_k == V^(k)(R) / k!``
    holds bit for bit; higher orders use the exact per-factor pattern
    ``d^k/dx^k ln((x-a)^2) = 2 (-1)^(k-1) (k-1)! / (x-a)^k``.
    """
    if M < 2:
        raise MTooSmall(f"Taylor order M must be >= 2, got {M}")
    R = float(R)
    c = [evaluate(spec, R)]
    for k in (1, 2, 3):
        if k <= M:
            c.append(derivative(spec, R, k) / math.factorial(k))
    for k in range(4, M + 1):
        # c_k = -2 (-1)^(k-1) / k * sum_a coupling_a / (R - a)^k
        sign = -1.0 if k % 2 == 1 else 1.0  # -( -1)^(k-1)
        acc = 0.0
        if spec.g2 > 0:
            acc += spec.g2 / R**k
        for h2, s in spec.spikes:
            acc += h2 * (1.0 / (R - s) ** k + 1.0 / (R + s) ** k)
        c.append(sign * 2.0 * acc / k)
    return c


def potential_extent(spec: PotentialSpec) -> float:
    """Outermost singular point, or 0 when there are none."""
    pts = singularities(spec)
    return max(pts) if pts else 0.0


def from_tuples(omega2: float, g2: float = 0.0, spikes: Sequence[Sequence[float]] = ()) -> PotentialSpec:
    """Build and validate a spec from plain numbers."""
    return validate(PotentialSpec(omega2, g2, tuple(tuple(p) for p in spikes)))
