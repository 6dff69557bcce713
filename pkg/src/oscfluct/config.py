"""Plain-text experiment configuration.

Format: one ``key = value`` per line, ``#`` comments, blank lines ignored.
Keys are dotted (``chain.n = 512``).  Every experiment declares its schema;
unknown keys are rejected so config drift fails loudly, and every run echoes
the fully resolved configuration into its manifest.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import ConfigError

__all__ = ["parse_config", "resolve", "SCHEMAS"]


def _to_bool(s: str) -> bool:
    if s.lower() in ("true", "yes", "1", "on"):
        return True
    if s.lower() in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass(frozen=True)
class Key:
    typ: type
    default: Any = None
    required: bool = False


_POTENTIAL = {
    "potential.family": Key(str, "harmonic"),
    "potential.alpha": Key(float, 0.0),
    "potential.gamma_v": Key(float, 1.0),
}
_CHAIN = {
    "chain.n": Key(int, 128),
    "chain.a": Key(float, 2.0),
    "chain.kappa": Key(float, 1.0),
    "chain.gamma": Key(float, 1.0),
    "chain.beta_exp": Key(float, 0.5),
    "chain.lambda": Key(float, 0.0),
}
_RUN = {
    "run.T": Key(float, 0.1),
    "run.ensemble": Key(int, 100),
    "run.seed": Key(int, 0),
    "run.ode_tol": Key(float, 1e-9),
}

SCHEMAS: dict[str, dict[str, Key]] = {
    "sample": {
        **_POTENTIAL,
        "gibbs.beta_exponent": Key(float, 0.5),
        "gibbs.lambda": Key(float, 0.0),
        "gibbs.b": Key(float, 1.0),
        "chain.n": Key(int, 128),
        "run.samples": Key(int, 10000),
        "run.seed": Key(int, 0),
    },
    "simulate": {
        **_POTENTIAL, **_CHAIN, **_RUN,
        "run.snapshots": Key(int, 10),
    },
    "qv": {
        **_POTENTIAL, **_CHAIN, **_RUN,
        "field.phi": Key(str, "gauss:0.05"),
        "field.phi2": Key(str, "gauss:0.07"),
    },
    "correlate": {
        **_POTENTIAL, **_CHAIN, **_RUN,
        "correlate.times": Key(str, "0.1,0.2"),
        "correlate.engine": Key(str, "auto"),  # auto|event|propagator
        "correlate.compare_kernel": Key(bool, True),
    },
    "kernel": {
        "kernel.gamma": Key(float, 1.0),
        "kernel.kappa": Key(float, 0.2),
        "kernel.times": Key(str, "0.5,1.0,2.0"),
        "kernel.m": Key(int, 0),        # 0 = auto
        "kernel.L": Key(str, "auto"),
        "kernel.periodized": Key(bool, False),  # allow wrap-around (ring use)
        "run.seed": Key(int, 0),
    },
    "poisson": {
        "poisson.phi": Key(str, "gauss:0.08"),
        "poisson.kappa": Key(float, 1.0 / 3.0),
        "poisson.gamma": Key(float, 1.0),
        "poisson.n_exponents": Key(str, "6,7,8,9,10"),
        "run.seed": Key(int, 0),
    },
    "nlfh": {
        **_POTENTIAL,
        "nlfh.v": Key(float, 0.0),
        "nlfh.e": Key(float, 0.5),
        "nlfh.beta": Key(float, 0.0),
        "nlfh.theta_alpha": Key(float, 1.0),
        "run.seed": Key(int, 0),
    },
    "spde": {
        "spde.kind": Key(str, "ou"),  # ou|sbe
        "spde.m": Key(int, 64),
        "spde.nu": Key(float, 0.5),
        "spde.lambda": Key(float, 0.0),
        "spde.d": Key(float, 1.0),
        "spde.dt": Key(float, 1e-5),
        "run.T": Key(float, 1.0),
        "run.ensemble": Key(int, 200),
        "run.seed": Key(int, 0),
    },
    "bg2": {
        **_POTENTIAL, **_CHAIN, **_RUN,
        "field.phi": Key(str, "gauss:0.05"),
        "bg2.ells": Key(str, "8,16,32,64"),
    },
    "validate-potential": {
        **_POTENTIAL,
        "validate.range": Key(float, 8.0),
        "validate.samples": Key(int, 400),
        "run.seed": Key(int, 0),
    },
}


def parse_config(path: str | Path) -> dict[str, str]:
    raw: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {s!r}")
        key, _, val = s.partition("=")
        key = key.strip()
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = val.strip()
    return raw


def resolve(experiment: str, raw: dict[str, str]) -> dict[str, Any]:
    """Type-check against the experiment schema; unknown keys are errors."""
    if experiment not in SCHEMAS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from {sorted(SCHEMAS)}"
        )
    schema = SCHEMAS[experiment]
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config keys for {experiment}: {sorted(unknown)}")
    out: dict[str, Any] = {}
    for key, meta in schema.items():
        if key in raw:
            try:
                out[key] = _to_bool(raw[key]) if meta.typ is bool else meta.typ(raw[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        elif meta.required:
            raise ConfigError(f"missing required key {key} for {experiment}")
        else:
            out[key] = meta.default
    return out
