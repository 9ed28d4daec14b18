"""Run configuration: strict JSON schema, defaults, and the scaled parametrization.

Defaults
--------
=========  ==========================================================
L          2 * max(s_K, g/omega) + 8/omega  (Dirichlet half-width)
N          4000 grid nodes
k          8 grid eigenpairs
M          4 (Taylor truncation order)
B          64 (harmonic basis size)
n_max      4 (highest local level reported)
P          4 (Rayleigh-Schrodinger order)
samples    101 (sweep samples)
tol_cross  1e-8
delta      0.02 (numeric confirmation half-window in t)
=========  ==========================================================

Two spellings of the potential are accepted.  ``canonical`` uses spikes
``{"h2", "s"}`` for terms -h2 ln((x^2 - s^2)^2).  ``scaled`` uses spikes
``{"lambda2", "h2"}`` for terms -lambda2 ln((omega2 x^2 - h2)^2); it equals the
canonical potential with s^2 = h2/omega2 plus the constant
-2 ln(omega2) * sum(lambda2).
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import ConfigError
from .potential import PotentialSpec, validate

FORMS = ("canonical", "scaled")
METHODS = ("leading", "matrix", "rs", "numeric")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class PotentialInput:
    form: str = "canonical"
    omega2: float = 1.0
    g2: float = 0.0
    spikes: tuple = ()  # tuple of dicts, keys depend on form

    def __post_init__(self):
        if self.form not in FORMS:
            raise ConfigError(f"unknown potential form {self.form!r}; expected one of {FORMS}")
        keys = {"canonical": {"h2", "s"}, "scaled": {"lambda2", "h2"}}[self.form]
        spikes = []
        for sp in self.spikes:
            if not isinstance(sp, dict) or set(sp) != keys:
                raise ConfigError(f"{self.form} spikes need exactly the keys {sorted(keys)}, got {sp!r}")
            spikes.append({k: _number(sp[k], k) for k in sorted(keys)})
        object.__setattr__(self, "spikes", tuple(spikes))
        object.__setattr__(self, "omega2", _number(self.omega2, "omega2"))
        object.__setattr__(self, "g2", _number(self.g2, "g2"))

    def canonical(self) -> tuple[PotentialSpec, float]:
        """Validated canonical spec and the additive constant of this spelling."""
        if self.form == "canonical":
            spikes = tuple((sp["h2"], sp["s"]) for sp in self.spikes)
            return validate(PotentialSpec(self.omega2, self.g2, spikes)), 0.0
        if self.omega2 <= 0:
            validate(PotentialSpec(self.omega2, self.g2))
        spikes = []
        for sp in self.spikes:
            if sp["h2"] <= 0:
                raise ConfigError(f"scaled spike needs h2 > 0, got {sp['h2']}")
            spikes.append((sp["lambda2"], math.sqrt(sp["h2"] / self.omega2)))
        spec = validate(PotentialSpec(self.omega2, self.g2, tuple(spikes)))
        offset = -2.0 * math.log(self.omega2) * sum(sp["lambda2"] for sp in self.spikes)
        return spec, offset

    def to_dict(self) -> dict:
        return {"form": self.form, "omega2": self.omega2, "g2": self.g2,
                "spikes": [dict(sp) for sp in self.spikes]}

    @classmethod
    def from_dict(cls, data) -> "PotentialInput":
        if not isinstance(data, dict):
            raise ConfigError("potential must be a JSON object")
        _strict(data, {"form", "omega2", "g2", "spikes"}, "potential")
        if "omega2" not in data:
            raise ConfigError("potential.omega2 is required")
        return cls(form=data.get("form", "canonical"), omega2=data["omega2"],
                   g2=data.get("g2", 0.0), spikes=tuple(data.get("spikes", ())))


def _number(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    return float(v)


def _strict(data: dict, allowed: set, where: str):
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


@dataclass(frozen=True)
class RunConfig:
    potential: PotentialInput = field(default_factory=PotentialInput)
    target: Optional[PotentialInput] = None
    L: Optional[float] = None
    N: int = 4000
    k: int = 8
    M: int = 4
    B: int = 64
    n_max: int = 4
    P: int = 4
    samples: int = 101
    tol_cross: float = 1e-8
    delta: float = 0.02
    method: str = "leading"
    wells: Optional[tuple] = None
    dump_samples: int = 1001
    out: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        for name in ("N", "k", "M", "B", "n_max", "P", "samples", "dump_samples"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.L is not None:
            object.__setattr__(self, "L", _number(self.L, "L"))
        object.__setattr__(self, "tol_cross", _number(self.tol_cross, "tol_cross"))
        object.__setattr__(self, "delta", _number(self.delta, "delta"))
        if self.wells is not None:
            if len(self.wells) != 2 or not all(isinstance(w, int) for w in self.wells):
                raise ConfigError(f"wells must be a pair of track ids, got {self.wells!r}")
            object.__setattr__(self, "wells", tuple(self.wells))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, PotentialInput):
                v = v.to_dict()
            elif f.name == "wells" and v is not None:
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        _strict(data, {f.name for f in fields(cls)}, "config")
        kwargs = dict(data)
        if "potential" in kwargs:
            kwargs["potential"] = PotentialInput.from_dict(kwargs["potential"])
        if kwargs.get("target") is not None:
            kwargs["target"] = PotentialInput.from_dict(kwargs["target"])
        if kwargs.get("wells") is not None:
            kwargs["wells"] = tuple(kwargs["wells"])
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def spec_hash(self) -> str:
        blob = json.dumps(self.potential.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
