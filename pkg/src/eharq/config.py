"""Experiment configuration: defaults, flat config files, CLI overrides.

A config file is plain ``key = value`` text (``#`` starts a comment); lists
are comma-separated.  Values merge in order: built-in defaults, then the
file, then command-line flags.  The defaults reproduce the experiment
instance studied throughout: unit-mean Rayleigh fading at rate 1/2, a
15-quantum battery, 3+3 quanta to sample and decode, one to ACK, Bernoulli
bursts of 6 quanta.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from eharq.model import (
    LinkParameters,
    Protocol,
    bernoulli_harvest,
    success_probability,
)

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config_text"]

DEFAULT_RHO_GRID = tuple(round(0.1 * j, 1) for j in range(1, 10))
DEFAULT_TTH_GRID = tuple(round(0.05 * j, 2) for j in range(1, 14))


class ConfigError(ValueError):
    """The configuration is malformed or out of range."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a subcommand needs, in one validated bundle."""

    rate: float = 0.5
    tx_power: float = 1.0
    success_prob: float | None = None  # derived from the channel when None
    max_attempts: int = 4
    battery_capacity: int = 15
    cost_sample: int = 3
    cost_decode: int = 3
    cost_feedback: int = 1
    eh_quantum: int = 6
    rho: float = 0.6
    eh_values: tuple[int, ...] | None = None  # explicit harvest support
    eh_probs: tuple[float, ...] | None = None
    protocol: str = "adaptive"
    tth: float = 0.2
    rho_grid: tuple[float, ...] = DEFAULT_RHO_GRID
    tth_grid: tuple[float, ...] = DEFAULT_TTH_GRID
    ef_grid: tuple[int, ...] = (1, 2)
    horizon: int = 1_000_000
    seed: int = 20250814
    n_reps: int = 10
    i_max: int = 20
    delta: float = 1e-6
    workers: int = 1
    policy_kind: str = "myopic"
    policy_file: str | None = None
    out: str | None = None

    def __post_init__(self) -> None:
        if self.protocol not in ("wo", "na", "adaptive"):
            raise ConfigError(f"protocol must be wo, na or adaptive, got {self.protocol!r}")
        if self.policy_kind not in ("myopic", "optimal"):
            raise ConfigError(f"policy_kind must be myopic or optimal, got {self.policy_kind!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")
        if self.tth < 0.0:
            raise ConfigError(f"tth must be non-negative, got {self.tth}")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.n_reps < 1:
            raise ConfigError("n_reps must be at least 1")
        if self.i_max < 1:
            raise ConfigError("i_max must be at least 1")
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        for name, grid in (("rho_grid", self.rho_grid), ("tth_grid", self.tth_grid),
                           ("ef_grid", self.ef_grid)):
            if not grid:
                raise ConfigError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must be strictly increasing, got {grid}")
        if any(not 0.0 <= r <= 1.0 for r in self.rho_grid):
            raise ConfigError("rho_grid values must lie in [0, 1]")
        if any(t < 0.0 for t in self.tth_grid):
            raise ConfigError("tth_grid values must be non-negative")
        if any(e < 0 for e in self.ef_grid):
            raise ConfigError("ef_grid values must be non-negative")
        if (self.eh_values is None) != (self.eh_probs is None):
            raise ConfigError("eh_values and eh_probs must be given together")

    def protocol_enum(self) -> Protocol:
        return Protocol(self.protocol)

    def link_parameters(
        self, rho: float | None = None, cost_feedback: int | None = None
    ) -> LinkParameters:
        """Materialize the link instance, optionally overriding sweep axes."""
        if self.eh_values is not None:
            harvest = (self.eh_values, self.eh_probs)
        else:
            harvest = bernoulli_harvest(self.rho if rho is None else rho, self.eh_quantum)
        p_c = (
            success_probability(self.rate, self.tx_power)
            if self.success_prob is None
            else self.success_prob
        )
        try:
            return LinkParameters(
                max_attempts=self.max_attempts,
                battery_capacity=self.battery_capacity,
                cost_sample=self.cost_sample,
                cost_decode=self.cost_decode,
                cost_feedback=(
                    self.cost_feedback if cost_feedback is None else cost_feedback
                ),
                eh_values=harvest[0],
                eh_probs=harvest[1],
                success_prob=p_c,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


_LIST_FIELDS = {"rho_grid", "tth_grid", "ef_grid", "eh_values", "eh_probs"}
_FIELD_TYPES = {f.name: f for f in fields(ExperimentConfig)}


def _parse_scalar(name: str, text: str):
    if name in ("protocol", "policy_kind", "policy_file", "out"):
        return text
    if name in ("rate", "tx_power", "success_prob", "rho", "tth", "delta"):
        return float(text)
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {name}={text!r} as an integer") from exc


def _parse_value(name: str, text: str):
    if name not in _FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {name!r}")
    text = text.strip()
    if name in _LIST_FIELDS:
        items = [piece.strip() for piece in text.split(",") if piece.strip()]
        caster = float if name in ("rho_grid", "tth_grid", "eh_probs") else int
        try:
            return tuple(caster(piece) for piece in items)
        except ValueError as exc:
            raise ConfigError(f"cannot parse list value {name}={text!r}") from exc
    try:
        return _parse_scalar(name, text)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"cannot parse {name}={text!r}") from exc


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into an override mapping."""
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        overrides[key.strip()] = _parse_value(key.strip(), value)
    return overrides


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then the config file, then explicit overrides."""
    merged: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        merged.update(parse_config_text(text))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown configuration key {key!r}")
        merged[key] = value
    try:
        return ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
