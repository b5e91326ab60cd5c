"""Experiment configuration (versioned JSON schema) and run manifests.

The config file is a single JSON object.  Unknown keys are rejected at every
level; parse -> serialize -> parse is the identity on the canonical form.
Outputs are registered in a line-delimited JSON manifest whose conventions
block records the sign/center/suppression-definition choices baked into the
code, so a rerun can be audited against it.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .codes import (
    JumpSet,
    RepetitionCode,
    build_lookup_table,
    build_three_qubit,
    build_trickle_down,
    build_uncorrected,
)
from .ion import IonParams, Tone, ToneSet, build_ion_jump_set, default_tones

SCHEMA_VERSION = 1

CONVENTIONS = {
    "bit_order": "qubit 0 is the least significant bit; |0_L> is the all-zeros string",
    "fidelity_model": "F(t) = 0.5*(1 + exp(-eps*(t - tau))): decay toward 0.5 after onset tau",
    "ion_resonance_center": "x0 = Delta*delta/G^2 (the delta*Delta/G printing is treated as a typo)",
    "suppression_factor": "Lambda = gamma_e_star/gamma_e (the Gamma_c/gamma_e_star printing is treated as a typo)",
    "extrapolation_exponent": "ell = (n-1)/2 primary; the (n+1)/2 variant is available as a toggle",
}


class ConfigError(ValueError):
    """Schema violation: bad value, bad type, or unknown key."""


def _take(d: dict, key: str, default, kind=None):
    val = d.pop(key, default)
    if kind is not None and val is not None and not isinstance(val, kind):
        raise ConfigError(f"config key {key!r} has wrong type {type(val).__name__}")
    return val


def _reject_unknown(d: dict, where: str):
    if d:
        raise ConfigError(f"unknown config keys in {where}: {sorted(d)}")


@dataclass
class IonConfig:
    omega: float
    delta_big: float
    delta_small: float
    kappa_eng: float
    tones: Optional[list] = None        # [x0, ...] or [{"x0": int, "g_coupling": float}, ...]
    g_coupling: Optional[float] = None  # default tone coupling; None -> resonant per tone

    @classmethod
    def from_dict(cls, d: dict) -> "IonConfig":
        d = dict(d)
        out = cls(
            omega=float(_take(d, "omega", None, (int, float))),
            delta_big=float(_take(d, "delta_big", None, (int, float))),
            delta_small=float(_take(d, "delta_small", None, (int, float))),
            kappa_eng=float(_take(d, "kappa_eng", None, (int, float))),
            tones=_take(d, "tones", None, list),
            g_coupling=_take(d, "g_coupling", None, (int, float)),
        )
        _reject_unknown(d, "ion")
        return out

    def to_dict(self) -> dict:
        out = {
            "omega": self.omega,
            "delta_big": self.delta_big,
            "delta_small": self.delta_small,
            "kappa_eng": self.kappa_eng,
        }
        if self.tones is not None:
            out["tones"] = self.tones
        if self.g_coupling is not None:
            out["g_coupling"] = self.g_coupling
        return out

    def params_for(self, n: int) -> IonParams:
        g = self.g_coupling
        if g is None:
            # base coupling is never consulted once tones carry their own;
            # any positive value satisfies the params invariant
            g = (self.delta_big * self.delta_small) ** 0.5
        return IonParams(self.omega, self.delta_big, self.delta_small, g, self.kappa_eng, n)

    def tone_set(self, code: RepetitionCode) -> ToneSet:
        if self.tones is None:
            return default_tones(code)
        tones = []
        for t in self.tones:
            if isinstance(t, dict):
                t = dict(t)
                x0 = int(_take(t, "x0", None, int))
                g = _take(t, "g_coupling", None, (int, float))
                _reject_unknown(t, "ion.tones[]")
                tones.append(Tone(x0, float(g) if g is not None else self.g_coupling))
            else:
                tones.append(Tone(int(t), self.g_coupling))
        return ToneSet(tuple(tones))


_SCHEME_KINDS = ("lookup", "trickle", "three-qubit", "ion", "none")


def _check_scheme(d: dict):
    d = dict(d)
    kind = _take(d, "kind", None, str)
    if kind not in _SCHEME_KINDS:
        raise ConfigError(f"unknown scheme kind {kind!r}; expected one of {_SCHEME_KINDS}")
    if kind == "trickle":
        m = _take(d, "m", "ell")
        if not (m == "ell" or isinstance(m, int)):
            raise ConfigError("trickle scheme key 'm' must be an integer or 'ell'")
    _reject_unknown(d, f"scheme {kind!r}")


@dataclass
class ExperimentConfig:
    codes: list = field(default_factory=lambda: [13])
    schemes: list = field(default_factory=lambda: [{"kind": "lookup"}, {"kind": "trickle"}])
    gamma_c: float = 1.0
    gamma_e: list = field(default_factory=lambda: [0.01])
    engine: str = "chain"
    t_max_factor: float = 3.0        # t_max = factor / gamma_e
    t_points: int = 240
    t_spacing: str = "log"
    n_traj: int = 10_000
    dt_rate_cap: float = 0.1
    seed: int = 20240
    out_dir: str = "out"
    threads: Optional[int] = None
    ion: Optional[IonConfig] = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.engine not in ("dense", "mcwf", "gillespie", "chain"):
            raise ConfigError(f"unknown engine {self.engine!r}")
        if self.t_spacing not in ("log", "linear"):
            raise ConfigError("t_spacing must be 'log' or 'linear'")
        if self.gamma_c < 0 or any(g <= 0 for g in self.gamma_e):
            raise ConfigError("rates must be positive")
        if self.t_max_factor <= 0 or self.t_points < 2 or self.n_traj < 1:
            raise ConfigError("bad time-grid or trajectory settings")
        for d in self.schemes:
            _check_scheme(d)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        d = dict(data)
        version = _take(d, "schema_version", SCHEMA_VERSION, int)
        gamma_e = _take(d, "gamma_e", [0.01])
        if isinstance(gamma_e, (int, float)):
            gamma_e = [float(gamma_e)]
        elif isinstance(gamma_e, list):
            gamma_e = [float(g) for g in gamma_e]
        else:
            raise ConfigError("gamma_e must be a number or list of numbers")
        ion = _take(d, "ion", None, dict)
        cfg = cls(
            codes=[int(n) for n in _take(d, "codes", [13], list)],
            schemes=_take(d, "schemes", [{"kind": "lookup"}, {"kind": "trickle"}], list),
            gamma_c=float(_take(d, "gamma_c", 1.0, (int, float))),
            gamma_e=gamma_e,
            engine=_take(d, "engine", "chain", str),
            t_max_factor=float(_take(d, "t_max_factor", 3.0, (int, float))),
            t_points=int(_take(d, "t_points", 240, int)),
            t_spacing=_take(d, "t_spacing", "log", str),
            n_traj=int(_take(d, "n_traj", 10_000, int)),
            dt_rate_cap=float(_take(d, "dt_rate_cap", 0.1, (int, float))),
            seed=int(_take(d, "seed", 20240, int)),
            out_dir=_take(d, "out_dir", "out", str),
            threads=_take(d, "threads", None, int),
            ion=IonConfig.from_dict(ion) if ion is not None else None,
            schema_version=version,
        )
        _reject_unknown(d, "top level")
        return cfg

    def to_dict(self) -> dict:
        out = {
            "schema_version": self.schema_version,
            "codes": list(self.codes),
            "schemes": [dict(s) for s in self.schemes],
            "gamma_c": self.gamma_c,
            "gamma_e": list(self.gamma_e),
            "engine": self.engine,
            "t_max_factor": self.t_max_factor,
            "t_points": self.t_points,
            "t_spacing": self.t_spacing,
            "n_traj": self.n_traj,
            "dt_rate_cap": self.dt_rate_cap,
            "seed": self.seed,
            "out_dir": self.out_dir,
        }
        if self.threads is not None:
            out["threads"] = self.threads
        if self.ion is not None:
            out["ion"] = self.ion.to_dict()
        return out

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def scheme_label(self, desc: dict, code: RepetitionCode) -> str:
        kind = desc["kind"]
        if kind == "trickle":
            m = desc.get("m", "ell")
            # the untruncated scheme keeps one label across code sizes
            return "trickle" if m == "ell" else f"trickle_m{m}"
        return kind.replace("-", "_")

    def build_jump_set(self, desc: dict, code: RepetitionCode, gamma_e: float) -> JumpSet:
        kind = desc["kind"]
        if kind == "lookup":
            return build_lookup_table(code, self.gamma_c, gamma_e=gamma_e)
        if kind == "trickle":
            m = desc.get("m", "ell")
            m = code.ell if m == "ell" else int(m)
            return build_trickle_down(code, self.gamma_c, m, gamma_e=gamma_e)
        if kind == "three-qubit":
            if code.n != 3:
                raise ConfigError("three-qubit scheme requires n=3")
            return build_three_qubit(self.gamma_c, gamma_e=gamma_e)
        if kind == "none":
            return build_uncorrected(code, gamma_e=gamma_e)
        if kind == "ion":
            if self.ion is None:
                raise ConfigError("scheme 'ion' requires the 'ion' config block")
            params = self.ion.params_for(code.n)
            return build_ion_jump_set(code, params, self.ion.tone_set(code), gamma_e)
        raise ConfigError(f"unknown scheme kind {kind!r}")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return ExperimentConfig.from_dict(data)


def dump_config(cfg: ExperimentConfig, path: str):
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Run manifest
# ---------------------------------------------------------------------------

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    outputs: list = field(default_factory=list)   # relative paths
    tool_version: str = __version__

    def register(self, path: str):
        self.outputs.append(path)

    def write(self, out_dir: str):
        lines = [
            json.dumps(
                {
                    "kind": "run",
                    "command": self.command,
                    "config_hash": self.config_hash,
                    "seed": self.seed,
                    "tool_version": self.tool_version,
                },
                sort_keys=True,
            )
        ]
        lines.append(json.dumps({"kind": "conventions", **CONVENTIONS}, sort_keys=True))
        for path in sorted(self.outputs):
            lines.append(json.dumps({"kind": "output", "path": path}, sort_keys=True))
        with open(os.path.join(out_dir, MANIFEST_NAME), "w") as fh:
            fh.write("\n".join(lines) + "\n")


def check_manifest_complete(out_dir: str):
    """Every file in out_dir must be registered; orphans are an error."""
    manifest_path = os.path.join(out_dir, MANIFEST_NAME)
    registered = set()
    with open(manifest_path) as fh:
        for line in fh:
            entry = json.loads(line)
            if entry.get("kind") == "output":
                registered.add(entry["path"])
    orphans = []
    for root, _, files in os.walk(out_dir):
        for name in files:
            rel = os.path.relpath(os.path.join(root, name), out_dir)
            if rel != MANIFEST_NAME and rel not in registered:
                orphans.append(rel)
    if orphans:
        raise RuntimeError(f"orphan output files not in manifest: {sorted(orphans)}")
