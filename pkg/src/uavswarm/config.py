"""Scenario configuration: validation, the plain-text config format, RNG streams.

Config files are `key = value` lines; blank lines and `#` comments are
ignored. Unknown keys are errors. In sweep configs, the keys listed in
SWEEPABLE may carry comma-separated value lists; the sweep runner expands
their cross product.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from uavswarm.grid import GridSpec

POLICIES = ("pheromone", "bscap", "concov", "dqn")

SWEEPABLE = ("policy", "beta", "omega", "reward_n", "n_uavs", "speed_mps", "failure_pct")

STREAM_NAMES = ("deployment", "tiebreak", "explore", "failures")


class ConfigError(Exception):
    """Invalid scenario configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario; defaults follow the reference setup."""

    map_km: float = 6.0
    cell_size_m: float = 100.0
    n_uavs: int = 30
    speed_mps: float = 20.0
    tx_range_m: float = 1000.0
    sim_seconds: float = 2000.0
    evaporation: float = 0.006
    diffusion: float = 0.006
    policy: str = "bscap"
    beta: float = 1.5
    beta_prime: float = 3.0
    omega: float = 0.3
    sensing_period_s: float = 5.0
    sensing_range_m: float = 100.0
    reward_m: float = 3.0
    reward_n: float = 3.0
    epsilon: float = 0.0
    failure_pct: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        problems = []
        if self.map_km <= 0:
            problems.append("map_km must be positive")
        if self.cell_size_m <= 0:
            problems.append("cell_size_m must be positive")
        else:
            cells = self.map_km * 1000.0 / self.cell_size_m
            if abs(cells - round(cells)) > 1e-9 or round(cells) < 5:
                problems.append("map_km must divide into at least 5x5 whole cells")
        if not 1 <= self.n_uavs <= 126:
            problems.append("n_uavs must lie in 1..126 (7-bit ids, 127 reserved)")
        if self.speed_mps <= 0:
            problems.append("speed_mps must be positive")
        if self.tx_range_m <= 0:
            problems.append("tx_range_m must be positive")
        if self.sim_seconds <= 0:
            problems.append("sim_seconds must be positive")
        if not 0.0 <= self.evaporation <= 1.0:
            problems.append("evaporation must lie in [0, 1]")
        if not 0.0 <= self.diffusion <= 1.0:
            problems.append("diffusion must lie in [0, 1]")
        if self.policy not in POLICIES:
            problems.append(f"policy must be one of {POLICIES}")
        if not 0 < self.beta <= self.beta_prime:
            problems.append("need 0 < beta <= beta_prime")
        if not 0.0 <= self.omega <= 1.0:
            problems.append("omega must lie in [0, 1]")
        if self.sensing_period_s <= 0:
            problems.append("sensing_period_s must be positive")
        if self.sensing_range_m <= 0:
            problems.append("sensing_range_m must be positive")
        if not 0.0 <= self.epsilon <= 1.0:
            problems.append("epsilon must lie in [0, 1]")
        if not 0.0 <= self.failure_pct <= 100.0:
            problems.append("failure_pct must lie in [0, 100]")
        if self.seed < 0:
            problems.append("seed must be non-negative")
        if problems:
            raise ConfigError("; ".join(problems))

    def grid(self) -> GridSpec:
        side = int(round(self.map_km * 1000.0 / self.cell_size_m))
        return GridSpec(width=side, height=side, cell_size=self.cell_size_m)

    @property
    def bs_position(self) -> tuple[float, float]:
        """Bottom center of the map."""
        return (self.map_km * 1000.0 / 2.0, 0.0)


@dataclass
class RngStreams:
    """Independent named generators split from one master seed, so changing
    one consumer does not perturb the others."""

    deployment: np.random.Generator
    tiebreak: np.random.Generator
    explore: np.random.Generator
    failures: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
        return cls(*(np.random.Generator(np.random.PCG64(ss)) for ss in children))


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}
_INT_KEYS = {"n_uavs", "seed"}
_STR_KEYS = {"policy"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _STR_KEYS:
        return raw
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def _read_pairs(path: str | Path) -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        pairs.append((key, raw))
    return pairs


def load_config(path: str | Path, **overrides) -> ScenarioConfig:
    """Parse a single-run config file; lists are not allowed here."""
    values = {}
    for key, raw in _read_pairs(path):
        if "," in raw and key not in _STR_KEYS:
            raise ConfigError(f"{key}: value lists are only valid in sweep configs")
        values[key] = _parse_value(key, raw)
    values.update(overrides)
    return ScenarioConfig(**values)


def load_sweep(path: str | Path, **overrides) -> list[ScenarioConfig]:
    """Parse a sweep config; sweepable keys may hold comma-separated lists.

    Returns the cross product of all list-valued keys, in file order per key
    (first listed value varies slowest).
    """
    base: dict = {}
    axes: list[tuple[str, list]] = []
    for key, raw in _read_pairs(path):
        parts = [p for p in raw.split(",")] if "," in raw else [raw]
        if len(parts) > 1:
            if key not in SWEEPABLE:
                raise ConfigError(f"{key} cannot be swept (allowed: {SWEEPABLE})")
            axes.append((key, [_parse_value(key, p) for p in parts]))
        else:
            base[key] = _parse_value(key, parts[0])
    base.update(overrides)
    expanded: list[dict] = [dict(base)]
    for key, values in axes:
        expanded = [dict(c, **{key: v}) for c in expanded for v in values]
    return [ScenarioConfig(**c) for c in expanded]
