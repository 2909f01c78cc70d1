"""Experiment configuration: ``key = value`` text with ``[section]``
headers and ``#`` comments.  Every key has a documented default, unknown
keys are hard errors, and the fully resolved configuration round-trips
through :func:`dumps` / :func:`parse_config` unchanged."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np


class OhmicConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


SCENARIOS = ("ground", "emit", "scatter", "susceptibility", "circuit")


def _float_tuple(text: str):
    if not text.strip():
        return ()
    return tuple(float(x) for x in text.split(","))


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    # [run]
    scenario: str = ""
    out_dir: str = "runs"
    run_id: str = ""
    threads: int = 1
    # [model]
    L: int = 121
    omega0: float = 1.0
    omega_at: float = 1.0 / 3.0
    epsilon: float = 0.0
    g: float = 0.475
    g_grid: tuple = ()
    coupling_kind: str = "flux"  # flux | charge | both (ground scenario)
    i_q: str = "0"               # site index, or "mid"
    n_max: int = 4
    # [numerics]
    chi_max: int = 40
    svd_cutoff: float = 1e-10
    dt: float = 0.05
    t_final: float = 60.0
    krylov_m: int = 8
    krylov_tol: float = 1e-8
    interaction: str = "exact"   # exact | krylov
    gs_schedule: tuple = (0.5, 0.1, 0.02)
    gs_tol: float = 1e-8
    energy_stride: int = 10
    profile_stride: int = 0      # site-profile snapshots every N steps; 0=off
    # [wavepacket]
    omega: float = 0.062
    x_center: float = -1.0       # packet center site; <0 = auto
    sigma_omega: float = 0.0     # spectral width; 0 = auto (8 mode spacings)
    n_photons: float = 1.0
    # [susceptibility]
    epsilon_bias: float = 0.0    # 0 = auto (1e-3 * omega_at)
    alpha_grid: tuple = (0.1, 0.2, 0.3, 0.4, 1.2)
    # [circuit]
    alphaJ_min: float = 0.5
    alphaJ_max: float = 0.9
    alphaJ_steps: int = 17
    EJ: float = 1.0
    EC: float = 0.02
    f_bias: float = 0.5
    n_cutoff: int = 10
    L_ind: float = 36.0
    C_cap: float = 36.0

    def resolved_i_q(self) -> int:
        if self.i_q == "mid":
            return self.L // 2
        return int(self.i_q)

    def resolved_run_id(self) -> str:
        return self.run_id or self.scenario


_SECTIONS = {
    "run": ("scenario", "out_dir", "run_id", "threads"),
    "model": ("L", "omega0", "omega_at", "epsilon", "g", "g_grid",
              "coupling_kind", "i_q", "n_max"),
    "numerics": ("chi_max", "svd_cutoff", "dt", "t_final", "krylov_m",
                 "krylov_tol", "interaction", "gs_schedule", "gs_tol",
                 "energy_stride", "profile_stride"),
    "wavepacket": ("omega", "x_center", "sigma_omega", "n_photons"),
    "susceptibility": ("epsilon_bias", "alpha_grid"),
    "circuit": ("alphaJ_min", "alphaJ_max", "alphaJ_steps", "EJ", "EC",
                "f_bias", "n_cutoff", "L_ind", "C_cap"),
}

_KEY_SECTION = {k: s for s, keys in _SECTIONS.items() for k in keys}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, raw: str, lineno: int):
    ftype = _FIELD_TYPES[key]
    try:
        if ftype == "tuple":
            return _float_tuple(raw)
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        return raw
    except ValueError:
        raise OhmicConfigError(
            f"line {lineno}: cannot parse {key} = {raw!r} as {ftype}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate, resolving every unset key from its default."""
    values = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise OhmicConfigError(
                    f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise OhmicConfigError(
                f"line {lineno}: expected 'key = value', got {rawline!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_SECTION:
            raise OhmicConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise OhmicConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, raw, lineno)
    config = ExperimentConfig(**values)
    validate(config)
    return config


def validate(config: ExperimentConfig):
    # empty scenario is allowed at parse time; the CLI subcommand fills it
    if config.scenario and config.scenario not in SCENARIOS:
        raise OhmicConfigError(
            f"scenario must be one of {SCENARIOS}, got {config.scenario!r}")
    if config.coupling_kind not in ("flux", "charge", "both"):
        raise OhmicConfigError(
            f"coupling_kind must be flux, charge or both, "
            f"got {config.coupling_kind!r}")
    if config.coupling_kind == "both" and config.scenario != "ground":
        raise OhmicConfigError(
            "coupling_kind = both is only supported by the ground scenario")
    if config.interaction not in ("exact", "krylov"):
        raise OhmicConfigError(
            f"interaction must be exact or krylov, got {config.interaction!r}")
    if config.i_q != "mid":
        try:
            int(config.i_q)
        except ValueError:
            raise OhmicConfigError(
                f"i_q must be an integer or 'mid', got {config.i_q!r}")
    for name in ("L", "n_max", "chi_max", "krylov_m", "threads",
                 "alphaJ_steps"):
        if getattr(config, name) < 1:
            raise OhmicConfigError(f"{name} must be positive")
    for name in ("omega0", "dt", "t_final"):
        if getattr(config, name) <= 0:
            raise OhmicConfigError(f"{name} must be positive")


def dumps(config: ExperimentConfig) -> str:
    """Render the fully resolved configuration; parses back identically."""
    lines = []
    for section, keys in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(getattr(config, key))}")
        lines.append("")
    return "\n".join(lines)


def config_dict(config: ExperimentConfig) -> dict:
    """JSON-ready resolved configuration."""
    out = {}
    for section, keys in _SECTIONS.items():
        out[section] = {k: (list(v) if isinstance(v := getattr(config, k),
                                                  tuple) else v)
                        for k in keys}
    return out
