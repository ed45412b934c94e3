"""Low-complexity allocation via user pairing.

Users are paired by channel rank, pairs get orthogonal bandwidth fractions,
and each pair runs two-user RSMA internally. For a given sum-rate scale tau
the minimum fraction of each pair has a closed form (two single-user demands
and one pair-sum demand), so feasibility is a single comparison and the
optimal tau is found by bisection between 0 and the unpaired optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import bandwidth_fraction_for_rate
from .rate_region import (
    TWO_USER_SPLIT_ORDER,
    TwoUserBoundaryPoint,
    rsma_optimal_sum_rate,
    two_user_boundary_point,
)
from .scenario import Scenario

STRATEGIES = ("SW", "SM", "SS")
DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class PairingPlan:
    """Disjoint user pairs covering all K = 2M users, by original index."""

    pairs: tuple[tuple[int, int], ...]
    strategy: str

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(map(tuple, self.pairs)))
        seen = [i for pair in self.pairs for i in pair]
        if len(set(seen)) != len(seen):
            raise ValueError("pairs must be disjoint")


def make_pairs(s: Scenario, strategy: str) -> PairingPlan:
    """Pair users by descending channel rank: SW, SM, or SS selection.

    SW pairs strongest with weakest, SM pairs rank i with rank K/2 + i, SS
    pairs adjacent ranks. Ties break by original index. K must be even.
    """
    name = strategy.upper()
    if name not in STRATEGIES:
        raise ValueError(f"unknown pairing strategy {strategy!r}")
    k = s.k
    if k % 2:
        raise ValueError(f"pairing needs an even user count, got {k}")
    by_rank = np.argsort(-s.gains, kind="stable")
    m = k // 2
    if name == "SW":
        pairs = tuple((int(by_rank[i]), int(by_rank[k - 1 - i])) for i in range(m))
    elif name == "SM":
        pairs = tuple((int(by_rank[i]), int(by_rank[m + i])) for i in range(m))
    else:
        pairs = tuple((int(by_rank[2 * i]), int(by_rank[2 * i + 1])) for i in range(m))
    return PairingPlan(pairs, name)


def pair_min_fraction(s: Scenario, pair: tuple[int, int], tau: float) -> float:
    """Smallest bandwidth fraction letting the pair carry its share of tau.

    The binding constraint is the largest of the two single-user demands and
    the pair-sum demand against the combined received power. math.inf when
    some demand exceeds even the full band.
    """
    if tau < 0.0:
        raise ValueError("tau must be nonnegative")
    i, j = pair
    ui, uj = s.users[i], s.users[j]
    bandwidth, noise_psd = s.bandwidth_hz, s.noise_psd_w_per_hz
    f_i = bandwidth_fraction_for_rate(ui.d * tau, ui.h, ui.p_max, bandwidth, noise_psd)
    f_j = bandwidth_fraction_for_rate(uj.d * tau, uj.h, uj.p_max, bandwidth, noise_psd)
    combined = ui.h * ui.p_max + uj.h * uj.p_max
    f_sum = bandwidth_fraction_for_rate(
        (ui.d + uj.d) * tau, 1.0, combined, bandwidth, noise_psd
    )
    return max(f_i, f_j, f_sum)


def pairing_feasible(s: Scenario, plan: PairingPlan, tau: float) -> bool:
    """True when the pairs' minimum fractions fit in the unit bandwidth."""
    total = 0.0
    for pair in plan.pairs:
        total += pair_min_fraction(s, pair, tau)
        if total > 1.0:
            return False
    return True


@dataclass(frozen=True)
class PairAllocation:
    """Solved pairing allocation: fractions, sum-rate scale, per-user rates."""

    pairs: tuple[tuple[int, int], ...]
    strategy: str
    f: tuple[float, ...]
    tau: float
    c: np.ndarray  # per-user rates, original indexing (bits/s)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def to_json_dict(self) -> dict:
        return {
            "scheme": f"RSMA-UP-{self.strategy}",
            "pairs": [list(p) for p in self.pairs],
            "bandwidth_fractions": list(self.f),
            "tau_bits_per_s": self.tau,
            "rates_bits_per_s": self.c.tolist(),
        }


def pairing_solve(
    s: Scenario,
    plan: PairingPlan,
    eps: float = DEFAULT_EPS,
    tau_max: float | None = None,
) -> PairAllocation:
    """Maximize the common rate scale by bisection on pair feasibility.

    Feasibility is monotone in tau, so bisect on [0, tau_max] (the unpaired
    optimum by default, which orthogonal pairing cannot beat) until the
    bracket's relative width is at most eps; the last feasible tau is kept.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if tau_max is None:
        tau_max, _, _ = rsma_optimal_sum_rate(s)
    lo, hi = 0.0, float(tau_max)
    if hi <= 0.0:
        raise ValueError("tau_max must be positive")
    if pairing_feasible(s, plan, hi):
        lo = hi
    while (hi - lo) / hi > eps:
        mid = 0.5 * (lo + hi)
        if pairing_feasible(s, plan, mid):
            lo = mid
        else:
            hi = mid
    tau = lo
    fractions = tuple(pair_min_fraction(s, pair, tau) for pair in plan.pairs)
    c = s.weights * tau
    return PairAllocation(plan.pairs, plan.strategy, fractions, tau, c)


def realize_pair_powers(
    s: Scenario, alloc: PairAllocation
) -> list[TwoUserBoundaryPoint]:
    """Split powers and decode order inside each pair at its allocated band.

    Each pair is a two-user sub-scenario on bandwidth B * f_m; its rate pair
    (c_m1, c_m2) sits inside that region, and the boundary construction at
    r1 = c_m1 yields powers meeting or exceeding c_m2. Pairs with zero
    fraction are returned as all-zero allocations.
    """
    points: list[TwoUserBoundaryPoint] = []
    for pair, frac in zip(alloc.pairs, alloc.f):
        i, j = pair
        if frac <= 0.0 or math.isinf(frac):
            points.append(
                TwoUserBoundaryPoint(
                    0.0, 0.0, np.zeros((2, 2)), TWO_USER_SPLIT_ORDER, "user2_max"
                )
            )
            continue
        sub = s.subset([i, j]).with_bandwidth(s.bandwidth_hz * frac)
        # Fraction residual tolerance can leave c_i a hair above the sub-band
        # single-user cap; clamp to stay inside the sub-region.
        ui = s.users[i]
        r1_cap = sub.bandwidth_hz * math.log2(
            1.0 + ui.h * ui.p_max / (sub.noise_psd_w_per_hz * sub.bandwidth_hz)
        )
        points.append(two_user_boundary_point(sub, min(float(alloc.c[i]), r1_cap)))
    return points
