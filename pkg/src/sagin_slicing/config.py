"""Scenario and training constants, plus the flat ``key=value`` file format.

Every physical default below is the simulation setting of the three-layer
(ground / UAV / LEO) network: a 3 km square, two base stations, three UAVs,
one satellite, 7 subchannels of a 30 MHz band per layer.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8
N_CLASSES = 3
N_COMP_TYPES = 3  # vBS, vUAV, vLEO
COMP_TYPE_NAMES = ("vbs", "vuav", "vleo")


class ConfigError(ValueError):
    """Invalid or unknown configuration field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


def dbw_to_watts(dbw: float) -> float:
    return 10.0 ** (dbw / 10.0)


def dbm_per_hz_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    # geometry
    area_side_m: float = 3000.0
    dense_side_m: float = 1500.0          # dense zone is [0, dense_side]^2
    density_ratio: float = 5.0            # dense:sparse users per unit area
    M: int = 2                            # vBSs
    V: int = 3                            # vUAVs
    K: tuple[int, int, int] = (11, 11, 11)  # users per slice class
    vbs_coords: tuple[tuple[float, float], ...] = ((1000.0, 1000.0), (2000.0, 2000.0))
    uav_init_coords: tuple[tuple[float, float], ...] = (
        (500.0, 500.0), (1500.0, 1500.0), (2500.0, 2500.0))
    z_uav_m: float = 100.0
    z_leo_m: float = 200_000.0
    d_min_uav_m: float = 100.0
    # radio
    N: int = 7                            # subchannels per layer
    B: float = 30e6                       # Hz per layer
    P_B: float = dbw_to_watts(10.0)       # 10 dBW
    P_V: float = dbw_to_watts(20.0)       # 20 dBW
    P_L: float = dbw_to_watts(30.0)       # 30 dBW
    N0: float = dbm_per_hz_to_watts(-130.0)  # -130 dBm/Hz
    f_c: float = 5e9
    alpha_pl: float = 1.5                 # path-loss exponent
    rician_R: float = 6.0
    h0: float = db_to_linear(-30.0)       # UAV reference gain at 1 m
    leo_rate_cap_bps: float = 100e6
    # traffic / QoS
    delta_s: float = 0.1                  # TS duration
    beta_s: float = 0.2                   # delay threshold
    lambda2_bps: float | None = None      # None -> 10 kbps x K2
    packet_bits: float = 1000.0
    delay_penalty_factor: float = 10.0    # unstable queue -> factor * beta
    # training
    E: int = 20
    T: int = 1000
    seed: int = 0
    gamma: float = 0.95
    tau: float = 0.001
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    optimizer: str = "sgd"                # sgd | adam
    hidden: tuple[int, ...] = (100, 100)
    critic_output: str = "sigmoid"        # sigmoid | linear
    buffer_central: int = 10_000
    buffer_distributed: int = 2_000
    batch_central: int = 100
    batch_distributed: int = 50
    noise: str = "gaussian"               # gaussian | ou
    noise_start: float = 0.2
    noise_end: float = 0.02
    share_floor: float = 0.15             # min eta/rho share of every class
    pareto_episodes: int = 3              # collect candidates over the last n episodes

    def __post_init__(self):
        if self.lambda2_bps is None:
            object.__setattr__(self, "lambda2_bps", 10e3 * self.K[1])
        object.__setattr__(self, "K", tuple(int(k) for k in self.K))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "vbs_coords",
                           tuple((float(x), float(y)) for x, y in self.vbs_coords))
        object.__setattr__(self, "uav_init_coords",
                           tuple((float(x), float(y)) for x, y in self.uav_init_coords))
        self.validate()

    def validate(self) -> None:
        for name in ("M", "V", "N", "E", "T"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if len(self.K) != N_CLASSES:
            raise ConfigError("K", "needs one user count per slice class")
        if any(k < 0 for k in self.K):
            raise ConfigError("K", "user counts must be >= 0")
        for name in ("area_side_m", "P_B", "P_V", "P_L", "B", "N0", "f_c", "beta_s",
                     "d_min_uav_m", "delta_s", "h0", "packet_bits", "density_ratio",
                     "leo_rate_cap_bps", "z_uav_m", "z_leo_m"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(name, "must be a positive finite number")
        if self.lambda2_bps < 0:
            raise ConfigError("lambda2_bps", "must be >= 0")
        if not 0 < self.dense_side_m < self.area_side_m:
            raise ConfigError("dense_side_m", "must lie strictly inside the area")
        if len(self.vbs_coords) != self.M:
            raise ConfigError("vbs_coords", f"expected {self.M} coordinates")
        if len(self.uav_init_coords) != self.V:
            raise ConfigError("uav_init_coords", f"expected {self.V} coordinates")
        for name in ("vbs_coords", "uav_init_coords"):
            for x, y in getattr(self, name):
                if not (0 <= x <= self.area_side_m and 0 <= y <= self.area_side_m):
                    raise ConfigError(name, "coordinate outside the area")
        if not 0 <= self.gamma < 1:
            raise ConfigError("gamma", "must lie in [0, 1)")
        if not 0 < self.tau <= 1:
            raise ConfigError("tau", "must lie in (0, 1]")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ConfigError("actor_lr" if self.actor_lr <= 0 else "critic_lr", "must be > 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError("optimizer", "must be 'sgd' or 'adam'")
        if self.critic_output not in ("sigmoid", "linear"):
            raise ConfigError("critic_output", "must be 'sigmoid' or 'linear'")
        if self.noise not in ("gaussian", "ou"):
            raise ConfigError("noise", "must be 'gaussian' or 'ou'")
        if not 0 < self.share_floor < 1 / N_CLASSES:
            raise ConfigError("share_floor", "must lie in (0, 1/3)")
        for name in ("buffer_central", "buffer_distributed", "batch_central",
                     "batch_distributed"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if self.pareto_episodes < 1:
            raise ConfigError("pareto_episodes", "must be >= 1")

    # derived quantities
    @property
    def K_total(self) -> int:
        return sum(self.K)

    @property
    def n_components(self) -> int:
        return self.M + self.V + 1

    @property
    def subchannel_bw(self) -> float:
        return self.B / self.N

    @property
    def noise_power(self) -> float:
        """Noise power in one subchannel, (B/N) * N0."""
        return self.subchannel_bw * self.N0

    @property
    def lambda2_per_user(self) -> float:
        return self.lambda2_bps / self.K[1] if self.K[1] else 0.0

    @property
    def power_budgets(self) -> np.ndarray:
        return np.array([self.P_B, self.P_V, self.P_L])

    def comp_type(self, c: int) -> int:
        """0 for a vBS, 1 for a vUAV, 2 for the vLEO."""
        if c < self.M:
            return 0
        if c < self.M + self.V:
            return 1
        return 2

    @property
    def comp_types(self) -> np.ndarray:
        return np.array([self.comp_type(c) for c in range(self.n_components)])

    def replace(self, **changes: Any) -> "ScenarioConfig":
        if "K" in changes and "lambda2_bps" not in changes:
            # keep the derived default when only the user counts move
            if self.lambda2_bps == 10e3 * self.K[1]:
                changes["lambda2_bps"] = None
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_TUPLE_PAIRS = {"vbs_coords", "uav_init_coords"}
_INT_TUPLES = {"K", "hidden"}


def _parse_value(name: str, raw: str, default: Any) -> Any:
    raw = raw.strip()
    try:
        if name in _TUPLE_PAIRS:
            pairs = [p for p in raw.replace(" ", "").split(";") if p]
            return tuple(tuple(float(v) for v in p.split(",")) for p in pairs)
        if name in _INT_TUPLES:
            return tuple(int(v) for v in raw.replace(" ", "").split(",") if v)
        if name == "lambda2_bps" and raw.lower() in ("", "none", "auto"):
            return None
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float) or default is None:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(name, f"cannot parse {raw!r}") from exc


def parse_config(text: str, **overrides: Any) -> ScenarioConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Pair lists are written ``x,y; x,y`` and integer tuples ``a,b,c``.
    """
    defaults = {f.name: f.default for f in dataclasses.fields(ScenarioConfig)}
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected key=value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in defaults:
            raise ConfigError(key, "unknown configuration key")
        values[key] = _parse_value(key, raw, defaults[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig(**values)


def load_config(path: str | Path, **overrides: Any) -> ScenarioConfig:
    return parse_config(Path(path).read_text(), **overrides)


def format_config(config: ScenarioConfig) -> str:
    """Render a config in the same ``key = value`` format :func:`parse_config` reads."""
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name in _TUPLE_PAIRS:
            text = "; ".join(f"{x!r},{y!r}" for x, y in value)
        elif f.name in _INT_TUPLES:
            text = ",".join(str(v) for v in value)
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
