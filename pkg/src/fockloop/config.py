"""Experiment configuration: flat key = value files, defaults, cross-checks.

The file format is UTF-8 text, one `key = value` per line, `#` starts a
comment. Unknown and duplicate keys are errors. `ideal` mode forces perfect
detection, zero damping and zero report delay; explicitly setting one of
those keys to a conflicting value is an error rather than a silent override.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError

MODE_IDEAL = "ideal"
MODE_REALISTIC = "realistic"

# Keys pinned by ideal mode and the values they must take.
IDEAL_FORCED = {
    "T_cav": math.inf,
    "eta_a": 1.0,
    "eta_d": 1.0,
    "eta_f": 0.0,
    "d": 0,
}

_INT_KEYS = {"n_max", "n_tag", "d", "cycles", "trajectories", "seed"}
_FLOAT_KEYS = {"T_cav", "T_a", "n_th", "eta_a", "eta_d", "eta_f", "phi_bar",
               "sigma_r", "c2", "epsilon", "f_conv", "f_frac"}
_AUTO_KEYS = {"c1", "alpha0"}


@dataclass
class ExperimentConfig:
    """All knobs of one experiment; defaults are the hardware-like values.

    c1=None and alpha0=None mean "derive from n_tag" (the normalized
    gradient gain and a coherent state with mean photon number n_tag).
    f_conv is the estimate-fidelity level defining convergence time;
    f_frac is the fidelity level defining "converged" in fraction counts.
    """

    mode: str = MODE_REALISTIC
    n_max: int = 9
    n_tag: int = 3
    T_cav: float = 0.13
    T_a: float = 85e-6
    n_th: float = 0.05
    eta_a: float = 0.3
    eta_d: float = 0.8
    eta_f: float = 0.1
    d: int = 4
    phi_bar: float | None = math.pi / 7.0
    phi_table: tuple[float, ...] | None = None
    sigma_r: float = 0.69
    c1: float | None = None
    c2: float = 0.1
    epsilon: float = 0.1
    alpha0: float | None = None
    cycles: int = 1000
    trajectories: int = 1
    seed: int = 0
    f_conv: float = 0.8
    f_frac: float = 0.8

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @property
    def kappa(self) -> float:
        return 0.0 if math.isinf(self.T_cav) else 1.0 / self.T_cav

    def as_dict(self) -> dict:
        """JSON-safe resolved view (infinities become the string "inf")."""
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and math.isinf(v):
                v = "inf"
            if isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 over the canonical JSON form of the resolved config."""
    canon = json.dumps(cfg.as_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _parse_value(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _AUTO_KEYS:
            return None if raw == "auto" else float(raw)
        if key == "mode":
            if raw not in (MODE_IDEAL, MODE_REALISTIC):
                raise ConfigError(f"mode must be ideal or realistic, got {raw!r}")
            return raw
        if key == "phi_table":
            return tuple(float(x) for x in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse value {raw!r} for key {key!r}: {exc}") from None
    raise ConfigError(f"unknown config key {key!r}")


def parse_config_text(text: str) -> tuple[dict, set]:
    """Parse `key = value` lines into a raw mapping plus the explicit-key set."""
    known = {f.name for f in fields(ExperimentConfig)}
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for key {key!r}")
        raw[key] = _parse_value(key, value)
    return raw, set(raw)


def finalize(cfg: ExperimentConfig, explicit: set | None = None) -> ExperimentConfig:
    """Apply mode forcing, fill derived defaults, run all cross-checks."""
    explicit = explicit or set()
    if cfg.mode not in (MODE_IDEAL, MODE_REALISTIC):
        raise ConfigError(f"mode must be ideal or realistic, got {cfg.mode!r}")
    if cfg.mode == MODE_IDEAL:
        for key, forced in IDEAL_FORCED.items():
            if key in explicit and getattr(cfg, key) != forced:
                raise ConfigError(
                    f"ideal mode forces {key} = {forced!r}; remove the key or switch "
                    f"to realistic mode (got {getattr(cfg, key)!r})")
        cfg = replace(cfg, **IDEAL_FORCED)

    if cfg.phi_table is not None:
        if "phi_bar" in explicit:
            raise ConfigError("give either phi_bar or phi_table, not both")
        cfg = replace(cfg, phi_bar=None)
        if len(cfg.phi_table) < cfg.n_max + 1:
            raise ConfigError(
                f"phi_table needs {cfg.n_max + 1} entries for n_max={cfg.n_max}, "
                f"got {len(cfg.phi_table)}")

    if cfg.c1 is None:
        cfg = replace(cfg, c1=1.0 / (4.0 * cfg.n_tag + 2.0))
    if cfg.alpha0 is None:
        cfg = replace(cfg, alpha0=math.sqrt(float(cfg.n_tag)))

    _check(cfg.n_max >= 2, f"n_max must be at least 2, got {cfg.n_max}")
    _check(0 <= cfg.n_tag <= cfg.n_max - 1,
           f"n_tag must lie in [0, n_max-1], got {cfg.n_tag} at n_max={cfg.n_max}")
    _check(cfg.T_cav > 0.0, f"T_cav must be positive, got {cfg.T_cav!r}")
    _check(cfg.T_a > 0.0, f"T_a must be positive, got {cfg.T_a!r}")
    _check(cfg.n_th >= 0.0, f"n_th must be non-negative, got {cfg.n_th!r}")
    for name in ("eta_a", "eta_d"):
        v = getattr(cfg, name)
        _check(0.0 <= v <= 1.0, f"{name} must lie in [0, 1], got {v!r}")
    _check(0.0 <= cfg.eta_f < 0.5,
           f"eta_f must lie in [0, 0.5), got {cfg.eta_f!r}")
    _check(cfg.d >= 0, f"report delay d must be non-negative, got {cfg.d}")
    _check(cfg.c1 > 0.0, f"c1 must be positive, got {cfg.c1!r}")
    _check(0.0 < cfg.epsilon < 1.0, f"epsilon must lie in (0, 1), got {cfg.epsilon!r}")
    _check(abs(cfg.alpha0) <= math.sqrt(cfg.n_max),
           f"alpha0 {cfg.alpha0!r} exceeds the sqrt(n_max) displacement range")
    _check(cfg.cycles >= 1, f"cycles must be at least 1, got {cfg.cycles}")
    _check(cfg.trajectories >= 1,
           f"trajectories must be at least 1, got {cfg.trajectories}")
    _check(0 <= cfg.seed < 2 ** 64, f"seed must fit in 64 bits, got {cfg.seed}")
    for name in ("f_conv", "f_frac"):
        v = getattr(cfg, name)
        _check(0.0 < v <= 1.0, f"{name} must lie in (0, 1], got {v!r}")
    if cfg.phi_bar is not None:
        _check(cfg.phi_bar > 0.0, f"phi_bar must be positive, got {cfg.phi_bar!r}")
    # Same coarseness bound the relaxation kernel enforces, raised here as a
    # configuration problem so `validate` exits with the config error code.
    kdt = cfg.kappa * cfg.T_a
    _check(kdt * (cfg.n_max + 1) <= 0.05,
           f"kappa*T_a*(n_max+1) = {kdt * (cfg.n_max + 1):.4f} exceeds 0.05; "
           "the per-cycle relaxation step would be too coarse")
    return cfg


def _check(ok: bool, message: str) -> None:
    if not ok:
        raise ConfigError(message)


def from_mapping(mapping: dict, explicit: set | None = None) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(mapping) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**mapping)
    if isinstance(cfg.phi_table, list):
        cfg = replace(cfg, phi_table=tuple(cfg.phi_table))
    return finalize(cfg, set(mapping) if explicit is None else explicit)


def load_config(path: str) -> ExperimentConfig:
    """Read and finalize a config file; missing keys keep their defaults."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    raw, explicit = parse_config_text(text)
    return from_mapping(raw, explicit)
