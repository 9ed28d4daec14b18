"""Command-line entry point: ``logwell <command> [options]``.

Commands: potential, wells, spectrum, compare, scan.  Exit status is 0 on
success, 2 on a configuration error and 3 on a numerical failure; errors are
reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import replace
from typing import Optional

import numpy as np

from . import __version__, catastrophe, largen, numeric, potential, wells
from .config import FORMATS, METHODS, PotentialInput, RunConfig
from .errors import ConfigError, LogwellError, NumericalError, SingularArgument, SpecError


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % (v + 0.0)  # no "-0"
    if v is None:
        return ""
    return str(v)


class Table:
    def __init__(self, columns, rows, meta=None, extra=None):
        self.columns = list(columns)
        self.rows = rows
        self.meta = meta or {}
        self.extra = extra or {}

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, val in self.meta.items():
            buf.write(f"# {key}: {_fmt(val)}\n")
        for key, val in self.extra.items():
            for item in val:
                buf.write(f"# {key}: {json.dumps(_jsonable(item), sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"meta": self.meta, "columns": self.columns,
               "rows": [{c: row[c] for c in self.columns} for row in self.rows]}
        doc.update(self.extra)
        return json.dumps(_jsonable(doc), sort_keys=True, indent=1) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".logwell-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta(cfg: RunConfig, command: str, offset: float) -> dict:
    return {"logwell": __version__, "command": command, "spec_hash": cfg.spec_hash(),
            "form": cfg.potential.form, "offset": offset}


def cmd_potential_dump(cfg: RunConfig) -> Table:
    spec, offset = cfg.potential.canonical()
    if cfg.dump_samples < 2:
        raise ConfigError("dump_samples must be >= 2")
    L = cfg.L if cfg.L is not None else numeric.default_L(spec)
    rows = []
    for x in np.linspace(-L, L, cfg.dump_samples):
        try:
            v = potential.evaluate(spec, float(x))
        except SingularArgument:
            continue
        rows.append({"x": float(x), "V": v + offset})
    return Table(["x", "V"], rows, _meta(cfg, "potential", offset))


def cmd_wells(cfg: RunConfig) -> Table:
    spec, offset = cfg.potential.canonical()
    rows = [{"id": w.id, "R": w.location, "V": w.value + offset, "c2": w.c2,
             "interval_lo": w.interval[0], "interval_hi": w.interval[1]}
            for w in wells.find_minima(spec)]
    return Table(["id", "R", "V", "c2", "interval_lo", "interval_hi"], rows,
                 _meta(cfg, "wells", offset))


def _local_levels(cfg, spec, method, n_max):
    out = []
    for w in wells.find_minima(spec):
        if method == "leading":
            ls = largen.leading_energies(w, n_max)
        elif method == "matrix":
            ls = largen.local_spectrum_matrix(w, cfg.M, max(cfg.B, n_max + largen.BASIS_MARGIN), n_max)
        else:
            ls = largen.rs_spectrum(w, cfg.M, cfg.P, n_max)
        out.append((w, ls))
    return out


def cmd_spectrum(cfg: RunConfig) -> Table:
    spec, offset = cfg.potential.canonical()
    meta = _meta(cfg, f"spectrum --method {cfg.method}", offset)
    if cfg.method == "numeric":
        gs = numeric.solve(spec, cfg.L, cfg.N, cfg.k)
        rows = [{"n": n, "E": float(e) + offset, "dominant_region": gs.dominant_region(n)}
                for n, e in enumerate(gs.eigenvalues)]
        meta.update({"L": gs.grid.L, "N": gs.grid.N, "offset_grid": gs.grid.offset})
        return Table(["n", "E", "dominant_region"], rows, meta)
    rows = []
    for w, ls in _local_levels(cfg, spec, cfg.method, cfg.n_max):
        for n, e in enumerate(ls.energies):
            row = {"well_id": w.id, "R": w.location, "n": n, "E": float(e) + offset, "M_opt": None}
            if ls.partial_sums is not None:
                row["M_opt"] = largen.optimal_truncation(ls.partial_sums[n])
            rows.append(row)
    if cfg.method in ("matrix", "rs"):
        meta.update({"M": cfg.M, "B": cfg.B, "P": cfg.P, "nonvariational": bool(cfg.M % 2)})
    return Table(["well_id", "R", "n", "E", "M_opt"], rows, meta)


def cmd_compare(cfg: RunConfig) -> Table:
    spec, offset = cfg.potential.canonical()
    method = "leading" if cfg.method == "numeric" else cfg.method
    gs = numeric.solve(spec, cfg.L, cfg.N, cfg.k)
    levels = sorted(
        (float(e), w.id, n)
        for w, ls in _local_levels(cfg, spec, method, cfg.k - 1)
        for n, e in enumerate(ls.energies)
    )
    rows = []
    for n, (e_num, (e_loc, wid, m)) in enumerate(zip(gs.eigenvalues, levels)):
        rows.append({"n": n, "E_numeric": float(e_num) + offset, "E_largeN": e_loc + offset,
                     "dE": e_loc - float(e_num), "well_id": wid, "local_n": m,
                     "dominant_region": gs.dominant_region(n)})
    meta = _meta(cfg, f"compare --method {method}", offset)
    meta.update({"L": gs.grid.L, "N": gs.grid.N})
    return Table(["n", "E_numeric", "E_largeN", "dE", "well_id", "local_n", "dominant_region"],
                 rows, meta)


def _default_pairs(table: catastrophe.SweepTable):
    # one representative per mirror pair: tracks at x >= 0 on the first sample
    first = [tid for tid, x, _ in table.rows[0] if x >= 0]
    return [(a, b) for i, a in enumerate(first) for b in first[i + 1:]]


def cmd_scan(cfg: RunConfig) -> Table:
    if cfg.target is None:
        raise ConfigError("scan needs a target potential")
    if cfg.target.form != cfg.potential.form:
        raise ConfigError("potential and target must use the same form")
    base, offset = cfg.potential.canonical()
    target, offset_t = cfg.target.canonical()
    path = catastrophe.ParamPath(base, target)
    method = cfg.method if cfg.method in ("leading", "matrix") else "leading"
    table = catastrophe.sweep(path, cfg.samples, method)
    pairs = [tuple(cfg.wells)] if cfg.wells else _default_pairs(table)
    reports = []
    for a, b in pairs:
        try:
            rep = catastrophe.find_crossing(path, a, b, cfg.tol_cross, cfg.samples, method, table)
        except (catastrophe.NoSignChange, catastrophe.LostWell):
            continue
        rep = catastrophe.relocalize_check(path, rep, cfg.delta,
                                           catastrophe.NumericConfig(cfg.L, min(cfg.N, 2000)))
        reports.append(rep.to_dict())
    rows = list(table.records())
    meta = _meta(cfg, f"scan --method {method}", offset)
    meta["offset_target"] = offset_t
    return Table(["t", "track", "location", "E0"], rows, meta,
                 {"crossing": reports, "event": table.events})


COMMANDS = {
    "potential": cmd_potential_dump,
    "wells": cmd_wells,
    "spectrum": cmd_spectrum,
    "compare": cmd_compare,
    "scan": cmd_scan,
}


def _parse_pair(text, names):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"expected '{names[0]},{names[1]}', got {text!r}")
    return {names[0]: a, names[1]: b}


def _potential_from_flags(base: Optional[PotentialInput], form, omega2, g2, spikes):
    if base is None and omega2 is None and not spikes and g2 is None:
        return None
    base = base or PotentialInput(form=form or "canonical")
    form = form or base.form
    names = ("h2", "s") if form == "canonical" else ("lambda2", "h2")
    spike_dicts = base.spikes
    if spikes:
        spike_dicts = tuple(_parse_pair(s, names) for s in spikes)
    elif form != base.form:
        raise ConfigError("changing --form requires re-specifying every --spike")
    return PotentialInput(
        form=form,
        omega2=base.omega2 if omega2 is None else omega2,
        g2=base.g2 if g2 is None else g2,
        spikes=spike_dicts,
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="logwell", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"logwell {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON RunConfig file")
        s.add_argument("--form", choices=("canonical", "scaled"))
        s.add_argument("--omega2", type=float)
        s.add_argument("--g2", type=float)
        s.add_argument("--spike", action="append", metavar="A,B",
                       help="h2,s (canonical) or lambda2,h2 (scaled); repeatable")
        s.add_argument("--method", choices=METHODS)
        s.add_argument("--out")
        s.add_argument("--format", choices=FORMATS)
        s.add_argument("--L", type=float)
        for flag in ("N", "k", "M", "B", "P", "samples", "dump-samples", "n-max"):
            s.add_argument(f"--{flag}", type=int)
        s.add_argument("--tol-cross", type=float)
        s.add_argument("--delta", type=float)
        if name == "scan":
            s.add_argument("--target-omega2", type=float)
            s.add_argument("--target-g2", type=float)
            s.add_argument("--target-spike", action="append", metavar="A,B")
            s.add_argument("--wells", help="pair of track ids, e.g. 1,2")
    return p


def config_from_args(args) -> RunConfig:
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = RunConfig.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    else:
        cfg = RunConfig()
    pot = _potential_from_flags(cfg.potential if args.config else None,
                                args.form, args.omega2, args.g2, args.spike)
    changes = {}
    if pot is not None:
        changes["potential"] = pot
    for name in ("method", "out", "format", "L", "N", "k", "M", "B", "P", "samples",
                 "dump_samples", "n_max", "tol_cross", "delta"):
        v = getattr(args, name, None)
        if v is not None:
            changes[name] = v
    if getattr(args, "target_omega2", None) is not None or getattr(args, "target_spike", None) \
            or getattr(args, "target_g2", None) is not None:
        seed = cfg.target or changes.get("potential", cfg.potential)
        changes["target"] = _potential_from_flags(seed, seed.form, args.target_omega2,
                                                  args.target_g2, args.target_spike)
    if getattr(args, "wells", None):
        try:
            changes["wells"] = tuple(int(v) for v in args.wells.split(","))
        except ValueError:
            raise ConfigError(f"--wells expects two integers, got {args.wells!r}")
    return replace(cfg, **changes) if changes else cfg


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        table = COMMANDS[args.command](cfg)
        text = table.to_csv() if cfg.format == "csv" else table.to_json()
        if cfg.out:
            write_atomic(cfg.out, text)
        else:
            stdout.write(text)
        return 0
    except NumericalError as exc:
        _report(exc)
        return 3
    except (SpecError, LogwellError) as exc:
        _report(exc)
        return 2


def _report(exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
