"""Ground-state relocalization along one-parameter paths.

A path interpolates (omega2, g2, h2_j, s_j^2) linearly between two specs.
Per-well ground-state candidates come from the large-N energies; a change of
sign of their difference marks a crossing, which the grid solver then checks
by looking at where the exact ground state actually lives.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import largen, numeric
from .errors import LostWell, NoSignChange, SpecError
from .potential import PotentialSpec, validate
from .wells import Well, find_minima

TOL_CROSS = 1e-8
MIN_BRACKET = 1e-10


def worker_count() -> int:
    """Worker cap from LOGWELL_THREADS (default 1)."""
    raw = os.environ.get("LOGWELL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ParamPath:
    base: PotentialSpec
    target: PotentialSpec

    def __post_init__(self):
        b, t = validate(self.base), validate(self.target)
        if b.K != t.K or (b.g2 > 0) != (t.g2 > 0):
            raise SpecError("path endpoints must share K and the zero/nonzero pattern of g2")
        object.__setattr__(self, "base", b)
        object.__setattr__(self, "target", t)

    def at(self, t: float) -> PotentialSpec:
        b, e = self.base, self.target
        lerp = lambda u, v: (1.0 - t) * u + t * v
        spikes = tuple(
            (lerp(hb, he), math.sqrt(lerp(sb * sb, se * se)))
            for (hb, sb), (he, se) in zip(b.spikes, e.spikes)
        )
        return validate(PotentialSpec(lerp(b.omega2, e.omega2), lerp(b.g2, e.g2), spikes))

    def reversed(self) -> "ParamPath":
        return ParamPath(self.target, self.base)


def ground_candidate(well: Well, method: str = "leading", M: int = 4, B: int = 64) -> float:
    if method == "leading":
        return float(largen.leading_energies(well, 0).energies[0])
    if method == "matrix":
        return float(largen.local_spectrum_matrix(well, M, B).energies[0])
    raise SpecError(f"unknown energy method {method!r}")


@dataclass
class SweepTable:
    ts: np.ndarray
    rows: list  # per sample: list of (track_id, location, E0)
    events: list = field(default_factory=list)  # TopologyChange records

    def track(self, track_id: int) -> tuple[np.ndarray, np.ndarray]:
        """(locations, E0) of one track; NaN where the track is absent."""
        loc = np.full(len(self.ts), np.nan)
        e0 = np.full(len(self.ts), np.nan)
        for i, row in enumerate(self.rows):
            for tid, x, e in row:
                if tid == track_id:
                    loc[i], e0[i] = x, e
        return loc, e0

    def records(self):
        for t, row in zip(self.ts, self.rows):
            for tid, x, e in row:
                yield {"t": float(t), "track": tid, "location": x, "E0": e}


def _guard(locations) -> float:
    locs = sorted(locations)
    if len(locs) < 2:
        return math.inf
    return 0.5 * min(b - a for a, b in zip(locs, locs[1:]))


def _match(prev: dict, wells, guard: float) -> dict:
    """Greedy nearest-location matching of new wells to previous tracks.

    Returns {well_index: track_id} for matched wells only.
    """
    pairs = sorted(
        (abs(w.location - x), wi, tid)
        for wi, w in enumerate(wells)
        for tid, x in prev.items()
    )
    out, used = {}, set()
    for d, wi, tid in pairs:
        if d > guard or wi in out or tid in used:
            continue
        out[wi] = tid
        used.add(tid)
    return out


def _evaluate(path, t, method):
    ws = find_minima(path.at(t))
    return ws, [ground_candidate(w, method) for w in ws]


def sweep(path: ParamPath, samples: int = 101, method: str = "leading",
          workers: Optional[int] = None) -> SweepTable:
    """Per-well E0 candidates on a uniform t grid, with wells tracked by location."""
    if samples < 2:
        raise SpecError("sweep needs at least 2 samples")
    ts = np.linspace(0.0, 1.0, samples)
    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _evaluate(path, t, method), ts))
    else:
        results = [_evaluate(path, t, method) for t in ts]

    rows, events = [], []
    prev, next_id = {}, 0
    for i, (ws, es) in enumerate(results):
        if i == 0:
            assign = {wi: wi for wi in range(len(ws))}
            next_id = len(ws)
        else:
            assign = _match(prev, ws, _guard(prev.values()))
            if len(ws) != len(prev) or len(assign) != len(ws):
                events.append({"kind": "TopologyChange", "t_lo": float(ts[i - 1]),
                               "t_hi": float(ts[i]), "wells_before": len(prev),
                               "wells_after": len(ws)})
            for wi in range(len(ws)):
                if wi not in assign:
                    assign[wi] = next_id
                    next_id += 1
        row = sorted((assign[wi], w.location, e) for wi, (w, e) in enumerate(zip(ws, es)))
        rows.append(row)
        prev = {tid: x for tid, x, _ in row}
    return SweepTable(ts, rows, events)


@dataclass
class CrossingReport:
    t_star: float
    well_a: Well
    well_b: Well
    E0_a: float
    E0_b: float
    bracket: tuple[float, float]
    track_a: int = 0
    track_b: int = 0
    status: str = "predicted"
    numeric_confirmation: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "bracket": list(self.bracket),
            "track_a": self.track_a,
            "track_b": self.track_b,
            "well_a": {"location": self.well_a.location, "value": self.well_a.value, "c2": self.well_a.c2},
            "well_b": {"location": self.well_b.location, "value": self.well_b.value, "c2": self.well_b.c2},
            "E0_a": self.E0_a,
            "E0_b": self.E0_b,
            "status": self.status,
            "numeric_confirmation": self.numeric_confirmation,
        }


def _locate(path, t, near_a, near_b, method):
    ws = find_minima(path.at(t))
    guard = _guard([w.location for w in ws])
    picked = []
    for x in (near_a, near_b):
        w = min(ws, key=lambda w: abs(w.location - x))
        if abs(w.location - x) > guard:
            raise LostWell(f"no well near x = {x} at t = {t}")
        picked.append(w)
    wa, wb = picked
    return wa, wb, ground_candidate(wa, method), ground_candidate(wb, method)


def find_crossing(path: ParamPath, well_a_id: int, well_b_id: int, tol_cross: float = TOL_CROSS,
                  samples: int = 101, method: str = "leading",
                  table: Optional[SweepTable] = None) -> CrossingReport:
    """First crossing of the E0 candidates of two tracked wells, refined by bisection in t."""
    table = table or sweep(path, samples, method)
    loc_a, e_a = table.track(well_a_id)
    loc_b, e_b = table.track(well_b_id)
    diff = e_a - e_b
    idx = None
    for i in range(len(diff) - 1):
        d0, d1 = diff[i], diff[i + 1]
        if not (np.isfinite(d0) and np.isfinite(d1)):
            continue
        # identically equal candidates (mirror images) are not a crossing
        if d0 * d1 < 0 or (d0 == 0.0 and d1 != 0.0):
            idx = i
            break
    if idx is None:
        raise NoSignChange(f"E0 of tracks {well_a_id} and {well_b_id} never cross on the sweep")
    lo, hi = float(table.ts[idx]), float(table.ts[idx + 1])
    d_lo = diff[idx]
    xa, xb = loc_a[idx], loc_b[idx]
    if d_lo == 0.0:
        wa, wb, ea, eb = _locate(path, lo, xa, xb, method)
        return CrossingReport(lo, wa, wb, ea, eb, (lo, lo), well_a_id, well_b_id)
    while True:
        mid = 0.5 * (lo + hi)
        wa, wb, ea, eb = _locate(path, mid, xa, xb, method)
        d = ea - eb
        if abs(d) < tol_cross or hi - lo < MIN_BRACKET:
            break
        if (d < 0) == (d_lo < 0):
            lo, d_lo = mid, d
            xa, xb = wa.location, wb.location
        else:
            hi = mid
    return CrossingReport(mid, wa, wb, ea, eb, (lo, hi), well_a_id, well_b_id)


@dataclass(frozen=True)
class NumericConfig:
    L: Optional[float] = None
    N: int = 2000
    k: int = 2
    symmetric: bool = True  # adjust N by a few nodes to keep the grid mirror-symmetric


def _ground_state_class(path, t, cfg: NumericConfig):
    spec = path.at(t)
    N = numeric.symmetric_node_count(spec, cfg.L, cfg.N) if cfg.symmetric else cfg.N
    gs = numeric.solve(spec, cfg.L, N, cfg.k)
    masses = gs.region_mass[0]
    n = len(gs.regions)
    classes = {}
    for r, m in enumerate(masses):
        c = numeric.fold_region(r, n)
        classes[c] = classes.get(c, 0.0) + float(m)
    dominant = numeric.fold_region(gs.dominant_region(0), n)
    return dominant, classes


def transition_width(path: ParamPath, t_star: float, cls: int, delta: float,
                     cfg: NumericConfig = NumericConfig(), levels=(0.75, 0.25),
                     steps: int = 30) -> Optional[float]:
    """t-distance over which the ground-state mass in region class ``cls`` falls
    from ``levels[0]`` to ``levels[1]``.

    The search window around ``t_star`` starts at +-delta and doubles until
    both levels are enclosed; None if they never are inside [0, 1].
    """
    def mass(t):
        return _ground_state_class(path, t, cfg)[1].get(cls, 0.0)

    hi_level, lo_level = levels
    w = delta
    while True:
        a, b = max(0.0, t_star - w), min(1.0, t_star + w)
        m_a, m_b = mass(a), mass(b)
        if m_a >= hi_level and m_b <= lo_level:
            break
        if a == 0.0 and b == 1.0:
            return None
        w *= 2.0

    def level_crossing(level):
        lo, hi = a, b
        for _ in range(steps):
            c = 0.5 * (lo + hi)
            if mass(c) > level:
                lo = c
            else:
                hi = c
        return 0.5 * (lo + hi)

    return level_crossing(lo_level) - level_crossing(hi_level)


def relocalize_check(path: ParamPath, report: CrossingReport, delta: float = 0.02,
                     cfg: NumericConfig = NumericConfig(), steps: int = 8,
                     measure_width: bool = False) -> CrossingReport:
    """Confirm a predicted crossing with the grid solver.

    The ground state's dominant region (mirror images folded together) is
    compared at t_star - delta and t_star + delta.  If it differs the flip is
    bracketed by bisection; otherwise the report is marked ``unconfirmed``.
    """
    t_lo = max(0.0, report.t_star - delta)
    t_hi = min(1.0, report.t_star + delta)
    c_lo, m_lo = _ground_state_class(path, t_lo, cfg)
    c_hi, m_hi = _ground_state_class(path, t_hi, cfg)
    record = {
        "window": [t_lo, t_hi],
        "dominant_region_before": c_lo,
        "dominant_region_after": c_hi,
        "masses_before": {str(c): m for c, m in sorted(m_lo.items())},
        "masses_after": {str(c): m for c, m in sorted(m_hi.items())},
    }
    if c_lo == c_hi:
        report.status = "unconfirmed"
        record["t_flip_bracket"] = None
        report.numeric_confirmation = record
        return report
    a, b = t_lo, t_hi
    for _ in range(steps):
        m = 0.5 * (a + b)
        c, _ = _ground_state_class(path, m, cfg)
        if c == c_lo:
            a = m
        else:
            b = m
    record["t_flip_bracket"] = [a, b]
    if measure_width:
        record["transition_width"] = transition_width(path, report.t_star, c_lo, delta, cfg)
    report.status = "confirmed"
    report.numeric_confirmation = record
    return report
