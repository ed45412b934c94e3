"""Capacity-region math for the uplink multiple-access channel.

The achievable region is a polymatroid: one sum-rate bound per nonempty user
subset, each at the full power budgets. The proportional-rate optimum follows
in closed form as a minimum over subsets. For two users the region boundary
and the split powers realizing it have explicit expressions, as do the NOMA,
FDMA, and TDMA two-user frontiers used for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .numerics import bandwidth_fraction_for_rate, rate_on_fraction
from .order_recovery import DecodingOrder
from .scenario import Scenario

MAX_SUBSET_USERS = 25  # subset enumeration is 2^K - 1 terms
_ENUM_BLOCK = 1 << 20

BASELINE_SCHEMES = ("NOMA", "FDMA", "TDMA")


@dataclass(frozen=True)
class RateAllocation:
    """Per-user rates and their sum, in bits/s."""

    rates: np.ndarray
    sum: float

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float)
        r.setflags(write=False)
        object.__setattr__(self, "rates", r)

    @classmethod
    def from_rates(cls, rates) -> "RateAllocation":
        r = np.asarray(rates, dtype=float)
        return cls(r, float(r.sum()))


def subset_capacity(s: Scenario, subset: Iterable[int]) -> float:
    """Sum-rate bound for a user subset: B log2(1 + sum h_k P_k / (sigma^2 B))."""
    idx = sorted(set(subset))
    if not idx:
        raise ValueError("subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= s.k:
        raise ValueError(f"subset indices out of range for {s.k} users")
    received = float((s.gains[idx] * s.p_max[idx]).sum())
    return s.bandwidth_hz * math.log2(1.0 + received / s.noise_floor_w)


def rsma_optimal_sum_rate(
    s: Scenario,
) -> tuple[float, RateAllocation, tuple[int, ...]]:
    """Optimal sum-rate scale under proportional rates, with the binding subset.

    tau* = min over nonempty subsets of subset_capacity / subset weight sum;
    user rates are weights * tau*. Also returns the argmin subset, whose
    bound the solution meets with equality. Enumeration is exhaustive over
    2^K - 1 subsets and refuses K > MAX_SUBSET_USERS.
    """
    k = s.k
    if k > MAX_SUBSET_USERS:
        raise ValueError(f"subset enumeration is capped at {MAX_SUBSET_USERS} users")
    hp = s.gains * s.p_max
    w = s.weights
    noise = s.noise_floor_w
    bits = np.arange(k)

    best_tau = math.inf
    best_mask = 0
    n = 1 << k
    for start in range(1, n, _ENUM_BLOCK):
        masks = np.arange(start, min(start + _ENUM_BLOCK, n), dtype=np.int64)
        member = ((masks[:, None] >> bits[None, :]) & 1).astype(float)
        taus = s.bandwidth_hz * np.log2(1.0 + (member @ hp) / noise) / (member @ w)
        i = int(np.argmin(taus))
        if taus[i] < best_tau:
            best_tau = float(taus[i])
            best_mask = int(masks[i])

    binding = tuple(b for b in range(k) if (best_mask >> b) & 1)
    alloc = RateAllocation.from_rates(w * best_tau)
    return best_tau, alloc, binding


def two_user_corners(s: Scenario) -> tuple[float, float, float]:
    """Two-user region corners: single-user capacities R1, R2 and the sum cap."""
    if s.k != 2:
        raise ValueError(f"needs exactly 2 users, got {s.k}")
    r1 = subset_capacity(s, [0])
    r2 = subset_capacity(s, [1])
    r_max = subset_capacity(s, [0, 1])
    return r1, r2, r_max


# Two-user split order realizing every boundary point: user 2's first message,
# then user 1's single message, then user 2's second message (decoded clean).
TWO_USER_SPLIT_ORDER = DecodingOrder(((1, 0), (0, 0), (1, 1), (0, 1)))

CASE_USER1_MAX = "user1_max"
CASE_USER2_MAX = "user2_max"
CASE_SUM_MAX = "sum_max"

_R1_SINGULAR_FRACTION = 1e-12  # below r1 = B * this, the sum-max powers are singular


@dataclass(frozen=True)
class TwoUserBoundaryPoint:
    """A boundary rate pair with the split powers and decode order reaching it."""

    r1: float
    r2: float
    powers: np.ndarray
    order: DecodingOrder
    case_tag: str

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "powers", p)


def two_user_boundary_point(s: Scenario, r1: float) -> TwoUserBoundaryPoint:
    """Maximal r2 for a given r1 on the two-user boundary, with explicit powers.

    Three closed-form regimes: user 2 at its single-user cap (flat segment),
    the sum-rate face, and user 1 at its cap (the vertical segment endpoint).
    User 1 sends a single message; powers follow from inverting the SIC rate
    expressions for the fixed decode order TWO_USER_SPLIT_ORDER.
    """
    r1_cap, r2_cap, r_sum = two_user_corners(s)
    if not (-1e-9 * r1_cap <= r1 <= r1_cap * (1.0 + 1e-12)):
        raise ValueError(f"r1 must lie in [0, {r1_cap}], got {r1}")
    r1 = min(max(r1, 0.0), r1_cap)

    b = s.bandwidth_hz
    noise = s.noise_floor_w
    (h1, h2), (p1_max, p2_max) = s.gains, s.p_max

    if r1 <= max(r_sum - r2_cap, b * _R1_SINGULAR_FRACTION):
        # User 2 at its cap; user 1's message rides over clean decoding of s22.
        r2 = r2_cap
        p11 = (2.0 ** (r1 / b) - 1.0) * (h2 * p2_max + noise) / h1
        powers = np.array([[min(p11, p1_max), 0.0], [0.0, p2_max]])
        tag = CASE_USER2_MAX
    elif r1 >= r1_cap * (1.0 - 1e-12):
        # User 1 at its cap; user 2 gets the leftover sum-rate on one message.
        r2 = r_sum - r1_cap
        p21 = (2.0 ** (r2 / b) - 1.0) * (h1 * p1_max + noise) / h2
        powers = np.array([[p1_max, 0.0], [min(p21, p2_max), 0.0]])
        tag = CASE_USER1_MAX
    else:
        # Sum-rate face: both budgets fully spent, user 2 split across the chain.
        r2 = r_sum - r1
        p22 = (h1 * p1_max / (2.0 ** (r1 / b) - 1.0) - noise) / h2
        p22 = min(max(p22, 0.0), p2_max)
        powers = np.array([[p1_max, 0.0], [p2_max - p22, p22]])
        tag = CASE_SUM_MAX
    return TwoUserBoundaryPoint(r1, r2, powers, TWO_USER_SPLIT_ORDER, tag)


def two_user_baseline_boundary(scheme: str, s: Scenario, r1: float) -> float:
    """Frontier r2(r1) of the two-user NOMA / FDMA / TDMA rate regions.

    NOMA decodes user 1 first (one message per user); FDMA splits bandwidth at
    full powers; TDMA time-shares the full band. r2 is clamped at 0.
    """
    name = scheme.upper()
    if name not in BASELINE_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    r1_cap, r2_cap, _ = two_user_corners(s)
    if not (-1e-9 * r1_cap <= r1 <= r1_cap * (1.0 + 1e-12)):
        raise ValueError(f"r1 must lie in [0, {r1_cap}], got {r1}")
    r1 = min(max(r1, 0.0), r1_cap)

    b = s.bandwidth_hz
    noise = s.noise_floor_w
    (h1, h2), (p1_max, p2_max) = s.gains, s.p_max

    if name == "TDMA":
        return r2_cap * (1.0 - r1 / r1_cap)
    if name == "NOMA":
        if r1 == 0.0:
            return r2_cap
        frontier = b * math.log2(h1 * p1_max / noise) - b * math.log2(
            2.0 ** (r1 / b) - 1.0
        )
        return max(min(r2_cap, frontier), 0.0)
    # FDMA: user 2 gets whatever bandwidth user 1 leaves behind.
    f1 = bandwidth_fraction_for_rate(r1, h1, p1_max, b, s.noise_psd_w_per_hz)
    leftover = 1.0 - f1
    if leftover <= 0.0:
        return 0.0
    return rate_on_fraction(leftover, h2, p2_max, b, s.noise_psd_w_per_hz)


@dataclass(frozen=True)
class RegionRow:
    """One sampled frontier point for CSV emission."""

    r1_bits_per_s: float
    r2_bits_per_s: float
    scheme: str
    case_tag: str


def region_rows(
    s: Scenario, schemes: Sequence[str] = ("RSMA",) + BASELINE_SCHEMES, grid_points: int = 101
) -> list[RegionRow]:
    """Sample all requested two-user frontiers on a shared r1 grid."""
    if grid_points < 2:
        raise ValueError("need at least 2 grid points")
    r1_cap, _, _ = two_user_corners(s)
    grid = np.linspace(0.0, r1_cap, grid_points)
    rows: list[RegionRow] = []
    for scheme in schemes:
        name = scheme.upper()
        for r1 in grid:
            if name == "RSMA":
                point = two_user_boundary_point(s, float(r1))
                rows.append(RegionRow(point.r1, point.r2, name, point.case_tag))
            else:
                r2 = two_user_baseline_boundary(name, s, float(r1))
                rows.append(RegionRow(float(r1), r2, name, ""))
    return rows
