"""Run configuration: a flat key=value text file, overridable by
command-line ``--set key=value`` flags.  Unknown keys are a hard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from kerrcrescent.protocol import ProtocolParams

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(Exception):
    """Bad or missing configuration input."""


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_float_list(raw: str) -> tuple[float, ...]:
    items = [s for s in (part.strip() for part in raw.split(",")) if s]
    return tuple(float(s) for s in items)


@dataclass(frozen=True)
class RunConfig:
    """All knobs of a batch run; parameter names mirror the physics symbols."""

    task: str | None = None
    alpha_mag: float | None = None
    alpha_phase: float = 0.0
    beta_mag: float | None = None
    beta_phase: float | None = None
    gamma: float | None = None
    dim: int | None = None
    tail_tol: float = 1e-9
    leak_tol: float = 1e-6
    out_dir: str = "out"
    plot: bool = True
    # photon-stats
    x_values: tuple[float, ...] | None = None
    # wigner
    state: str = "conditional"
    x: float = 0.0
    wigner_step: float = 0.1
    wigner_halfwidth: float | None = None
    radial: bool = False
    # outcome integration
    x_grid_points: int = 401
    adapt: bool = True
    # fidelity
    x_min: float | None = None
    x_max: float | None = None
    x_count: int = 81
    # scan
    sweep: str | None = None
    sweep_values: tuple[float, ...] | None = None
    sweep_gab: float = 2.0
    # operationalized figure-of-merit knobs
    support_fraction: float = 0.01
    fidelity_floor: float = 0.9

    def require(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if value is None or (name == "x_values" and len(value) == 0) \
                    or (name == "sweep_values" and len(value) == 0):
                raise ConfigError(f"missing required config key: {name}")

    def protocol_params(self, alpha_mag: float | None = None,
                        beta_mag: float | None = None) -> ProtocolParams:
        """Build protocol parameters, optionally overriding the amplitudes."""
        needed = ["gamma"]
        if alpha_mag is None:
            needed.append("alpha_mag")
        if beta_mag is None:
            needed.append("beta_mag")
        self.require(*needed)
        a_mag = self.alpha_mag if alpha_mag is None else alpha_mag
        b_mag = self.beta_mag if beta_mag is None else beta_mag
        alpha = a_mag * complex(math.cos(self.alpha_phase), math.sin(self.alpha_phase))
        try:
            return ProtocolParams(
                alpha=alpha,
                beta_mag=b_mag,
                gamma=self.gamma,
                beta_phase_override=self.beta_phase,
                dim=self.dim,
                tail_tol=self.tail_tol,
                leak_tol=self.leak_tol,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


_PARSERS = {
    "task": str,
    "alpha_mag": float,
    "alpha_phase": float,
    "beta_mag": float,
    "beta_phase": float,
    "gamma": float,
    "dim": int,
    "tail_tol": float,
    "leak_tol": float,
    "out_dir": str,
    "plot": _parse_bool,
    "x_values": _parse_float_list,
    "state": str,
    "x": float,
    "wigner_step": float,
    "wigner_halfwidth": float,
    "radial": _parse_bool,
    "x_grid_points": int,
    "adapt": _parse_bool,
    "x_min": float,
    "x_max": float,
    "x_count": int,
    "sweep": str,
    "sweep_values": _parse_float_list,
    "sweep_gab": float,
    "support_fraction": float,
    "fidelity_floor": float,
}

_VALID_TASKS = ("photon_stats", "wigner", "fidelity", "ensemble", "scan")


def _parse_value(key: str, raw: str):
    if key not in _PARSERS:
        raise ConfigError(f"unknown config key: {key}")
    raw = raw.strip()
    if raw == "":
        return None
    try:
        return _PARSERS[key](raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc


def _read_file(path: str | Path) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        values[key] = _parse_value(key, raw)
    return values


def load_config(path: str | Path | None = None,
                overrides: tuple[str, ...] = (),
                out_dir: str | None = None) -> RunConfig:
    """Assemble a RunConfig from a file plus repeatable key=value overrides."""
    values = _read_file(path) if path is not None else {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        values[key.strip()] = _parse_value(key.strip(), raw)
    if out_dir is not None:
        values["out_dir"] = out_dir
    # a blank value unsets the key, falling back to the default
    values = {k: v for k, v in values.items() if v is not None}
    if values.get("task") is not None and values["task"] not in _VALID_TASKS:
        raise ConfigError(f"unknown task {values['task']!r}; expected one of {_VALID_TASKS}")
    if values.get("state") is not None and values["state"] not in ("conditional", "ensemble"):
        raise ConfigError(f"state must be 'conditional' or 'ensemble', got {values['state']!r}")
    if values.get("sweep") is not None and values["sweep"] not in ("gamma_beta", "alpha"):
        raise ConfigError(f"sweep must be 'gamma_beta' or 'alpha', got {values['sweep']!r}")
    known = {f.name for f in fields(RunConfig)}
    assert set(values) <= known
    return RunConfig(**values)
