"""Uplink scenario construction: unit helpers, path-loss channel model, seeded user drops.

All quantities are SI: channel gains are linear power gains (dimensionless),
powers in watts, bandwidth in Hz, noise power spectral density in W/Hz.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

# Cellular macro path-loss law: PL_dB = 128.1 + 37.6 log10(d_km).
PATH_LOSS_REF_DB = 128.1
PATH_LOSS_SLOPE_DB = 37.6

# Drop defaults (macro cell, 1 MHz carrier, 1 dBm terminals).
DEFAULT_P_MAX_DBM = 1.0
DEFAULT_BANDWIDTH_HZ = 1.0e6
DEFAULT_NOISE_PSD_DBM_HZ = -174.0
DEFAULT_SHADOW_STD_DB = 8.0
DEFAULT_AREA_SIDE_M = 500.0


def dbm_to_watt(p_dbm: float) -> float:
    """Convert a power from dBm to watts."""
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watt_to_dbm(p_w: float) -> float:
    """Convert a power from watts to dBm."""
    if p_w <= 0.0:
        raise ValueError(f"power must be positive, got {p_w}")
    return 30.0 + 10.0 * math.log10(p_w)


def channel_gain(d_km: float, shadow_db: float = 0.0) -> float:
    """Linear channel power gain at distance d_km with a shadowing offset in dB."""
    if d_km <= 0.0:
        raise ValueError(f"distance must be positive, got {d_km} km")
    loss_db = PATH_LOSS_REF_DB + PATH_LOSS_SLOPE_DB * math.log10(d_km) + shadow_db
    return 10.0 ** (-loss_db / 10.0)


def fairness_index(weights: Sequence[float]) -> float:
    """Jain-style spread of the rate weights; 1.0 means all users get equal rate."""
    w = np.asarray(weights, dtype=float)
    return float(w.sum() ** 2 / (w.size * (w * w).sum()))


@dataclass(frozen=True)
class UserParams:
    """One uplink user: channel gain h, power budget p_max (W), rate weight d."""

    h: float
    p_max: float
    d: float

    def __post_init__(self):
        if not (self.h > 0.0 and math.isfinite(self.h)):
            raise ValueError(f"channel gain must be positive and finite, got {self.h}")
        if not (self.p_max > 0.0 and math.isfinite(self.p_max)):
            raise ValueError(f"power budget must be positive and finite, got {self.p_max}")
        if not (self.d > 0.0 and math.isfinite(self.d)):
            raise ValueError(f"rate weight must be positive and finite, got {self.d}")


@dataclass(frozen=True)
class Scenario:
    """An uplink cell: ordered users, shared bandwidth, and noise density.

    Rate weights are normalized to sum to one at construction, so any positive
    weight vector may be supplied. Instances are immutable and safe to share
    across parallel workers.
    """

    users: tuple[UserParams, ...]
    bandwidth_hz: float
    noise_psd_w_per_hz: float

    def __post_init__(self):
        if len(self.users) < 1:
            raise ValueError("scenario needs at least one user")
        if not (self.bandwidth_hz > 0.0 and math.isfinite(self.bandwidth_hz)):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth_hz}")
        if not (self.noise_psd_w_per_hz > 0.0 and math.isfinite(self.noise_psd_w_per_hz)):
            raise ValueError(f"noise density must be positive, got {self.noise_psd_w_per_hz}")
        object.__setattr__(self, "users", tuple(self.users))
        total = math.fsum(u.d for u in self.users)
        if abs(total - 1.0) > 1e-12:
            normalized = tuple(
                UserParams(u.h, u.p_max, u.d / total) for u in self.users
            )
            object.__setattr__(self, "users", normalized)

    @property
    def k(self) -> int:
        return len(self.users)

    @cached_property
    def gains(self) -> np.ndarray:
        g = np.array([u.h for u in self.users])
        g.setflags(write=False)
        return g

    @cached_property
    def p_max(self) -> np.ndarray:
        p = np.array([u.p_max for u in self.users])
        p.setflags(write=False)
        return p

    @cached_property
    def weights(self) -> np.ndarray:
        d = np.array([u.d for u in self.users])
        d.setflags(write=False)
        return d

    @property
    def noise_floor_w(self) -> float:
        """Total noise power over the full band (W)."""
        return self.noise_psd_w_per_hz * self.bandwidth_hz

    def with_weights(self, weights: Sequence[float]) -> "Scenario":
        if len(weights) != self.k:
            raise ValueError("weight count must match user count")
        users = tuple(UserParams(u.h, u.p_max, d) for u, d in zip(self.users, weights))
        return Scenario(users, self.bandwidth_hz, self.noise_psd_w_per_hz)

    def with_p_max(self, p_max_w: float) -> "Scenario":
        users = tuple(UserParams(u.h, p_max_w, u.d) for u in self.users)
        return Scenario(users, self.bandwidth_hz, self.noise_psd_w_per_hz)

    def with_bandwidth(self, bandwidth_hz: float) -> "Scenario":
        return Scenario(self.users, bandwidth_hz, self.noise_psd_w_per_hz)

    def subset(self, indices: Sequence[int]) -> "Scenario":
        """Sub-scenario keeping the selected users (weights renormalized)."""
        users = tuple(self.users[i] for i in indices)
        return Scenario(users, self.bandwidth_hz, self.noise_psd_w_per_hz)

    def to_json_dict(self) -> dict:
        return {
            "bandwidth_hz": self.bandwidth_hz,
            "noise_psd_w_per_hz": self.noise_psd_w_per_hz,
            "users": [
                {"gain": u.h, "p_max_w": u.p_max, "weight": u.d} for u in self.users
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Scenario":
        users = tuple(
            UserParams(u["gain"], u["p_max_w"], u["weight"]) for u in doc["users"]
        )
        return cls(users, doc["bandwidth_hz"], doc["noise_psd_w_per_hz"])

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def make_scenario(
    gains: Sequence[float],
    p_max_w: float | Sequence[float],
    weights: Sequence[float] | None = None,
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ,
    noise_psd_w_per_hz: float | None = None,
) -> Scenario:
    """Convenience constructor from plain arrays."""
    k = len(gains)
    if noise_psd_w_per_hz is None:
        noise_psd_w_per_hz = dbm_to_watt(DEFAULT_NOISE_PSD_DBM_HZ)
    if weights is None:
        weights = [1.0 / k] * k
    if np.isscalar(p_max_w):
        p_max_w = [float(p_max_w)] * k
    users = tuple(
        UserParams(h, p, d) for h, p, d in zip(gains, p_max_w, weights, strict=True)
    )
    return Scenario(users, bandwidth_hz, noise_psd_w_per_hz)


@dataclass(frozen=True)
class DropConfig:
    """Random user drop: square cell of side area_side_m with the BS at center."""

    area_side_m: float = DEFAULT_AREA_SIDE_M
    k: int = 2
    shadow_std_db: float = DEFAULT_SHADOW_STD_DB
    seed: int = 0
    min_dist_m: float = 1.0

    def __post_init__(self):
        if self.area_side_m <= 0.0:
            raise ValueError("area side must be positive")
        if self.min_dist_m <= 0.0:
            raise ValueError("distance floor must be positive")
        if self.k < 1:
            raise ValueError("user count must be at least 1")


def draw_drop_geometry(cfg: DropConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw user positions, BS distances (floored), and static shadowing in dB.

    Positions are uniform over the square, distances are clamped below by
    cfg.min_dist_m (the path-loss law diverges at zero distance), and one
    shadowing value is drawn per user per drop. Deterministic given cfg.seed.
    """
    rng = np.random.default_rng(cfg.seed)
    half = cfg.area_side_m / 2.0
    positions = rng.uniform(-half, half, size=(cfg.k, 2))
    distances = np.maximum(np.hypot(positions[:, 0], positions[:, 1]), cfg.min_dist_m)
    shadows = rng.normal(0.0, cfg.shadow_std_db, size=cfg.k)
    return positions, distances, shadows


def drop_users(
    cfg: DropConfig,
    p_max_w: float | Sequence[float] | None = None,
    weights: Sequence[float] | None = None,
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ,
    noise_psd_w_per_hz: float | None = None,
) -> Scenario:
    """Generate a scenario by dropping cfg.k users uniformly in the cell."""
    if p_max_w is None:
        p_max_w = dbm_to_watt(DEFAULT_P_MAX_DBM)
    _, distances, shadows = draw_drop_geometry(cfg)
    gains = [
        channel_gain(d_m / 1000.0, s_db) for d_m, s_db in zip(distances, shadows)
    ]
    return make_scenario(
        gains,
        p_max_w,
        weights=weights,
        bandwidth_hz=bandwidth_hz,
        noise_psd_w_per_hz=noise_psd_w_per_hz,
    )
