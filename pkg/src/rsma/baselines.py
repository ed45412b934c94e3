"""Closed-form optimal sum-rate solvers for uplink NOMA, FDMA, and TDMA.

All three schemes admit exact solutions under proportional-rate constraints:
NOMA by inverting its SIC rate chain recursively and bisecting each user's
power cap, FDMA by bisecting the total-bandwidth constraint over per-user
Lambert-W bandwidth demands, TDMA by a harmonic mean of single-user
capacities. The scheme ordering check compares all four optima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import bandwidth_fraction_for_rate, bisect_root
from .rate_region import rsma_optimal_sum_rate
from .scenario import Scenario

_TAU_TOL = 1e-13


@dataclass(frozen=True)
class NomaSolution:
    """NOMA optimum: sum-rate scale, per-user powers, and the decode order."""

    tau: float
    q: np.ndarray  # transmit powers, original user indexing (W)
    order: tuple[int, ...]  # user indices in decode sequence (descending gain)
    rates: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "scheme": "NOMA",
            "tau_bits_per_s": self.tau,
            "powers_w": self.q.tolist(),
            "decode_order": list(self.order),
            "rates_bits_per_s": self.rates.tolist(),
        }


@dataclass(frozen=True)
class FdmaSolution:
    """FDMA optimum: sum-rate scale and per-user bandwidth fractions."""

    tau: float
    b: np.ndarray
    rates: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "scheme": "FDMA",
            "tau_bits_per_s": self.tau,
            "bandwidth_fractions": self.b.tolist(),
            "rates_bits_per_s": self.rates.tolist(),
        }


@dataclass(frozen=True)
class TdmaSolution:
    """TDMA optimum: sum-rate scale and per-user time fractions."""

    tau: float
    a: np.ndarray
    rates: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "scheme": "TDMA",
            "tau_bits_per_s": self.tau,
            "time_fractions": self.a.tolist(),
            "rates_bits_per_s": self.rates.tolist(),
        }


def _descending_gain_order(s: Scenario) -> np.ndarray:
    # Stable sort keeps original index order on ties.
    return np.argsort(-s.gains, kind="stable")


def _noma_powers_sorted(
    tau: float, w: np.ndarray, h: np.ndarray, bandwidth: float, noise: float
) -> np.ndarray:
    """Powers for the descending-gain SIC chain delivering rates w * tau.

    Works on the cumulative received powers z_k of users k..K: the last user
    decodes clean, and each earlier user's target rate fixes z_k from z_{k+1}
    recursively; powers are the scaled increments.
    """
    k = w.size
    growth = 2.0 ** (w * tau / bandwidth)
    z = np.zeros(k + 1)
    for i in range(k - 1, -1, -1):
        z[i] = growth[i] * z[i + 1] + (growth[i] - 1.0) * noise
    return (z[:-1] - z[1:]) / h


def _noma_rates_sorted(
    q: np.ndarray, h: np.ndarray, bandwidth: float, noise: float
) -> np.ndarray:
    """Forward SIC rates of the descending-gain chain for given powers."""
    hq = h * q
    interference = np.concatenate([np.cumsum(hq[::-1])[::-1][1:], [0.0]])
    return bandwidth * np.log2(1.0 + hq / (interference + noise))


def noma_power_for_tau(s: Scenario, tau: float) -> np.ndarray:
    """Per-user NOMA powers achieving rates weights * tau, original indexing.

    Componentwise monotone increasing in tau; tau = 0 gives all zeros.
    """
    if tau < 0.0:
        raise ValueError("tau must be nonnegative")
    order = _descending_gain_order(s)
    q_sorted = _noma_powers_sorted(
        tau, s.weights[order], s.gains[order], s.bandwidth_hz, s.noise_floor_w
    )
    q = np.empty(s.k)
    q[order] = q_sorted
    return q


def noma_solve(s: Scenario, tau_tol: float = _TAU_TOL) -> NomaSolution:
    """Optimal NOMA sum-rate scale: the tightest per-user power cap binds.

    For each user, bisect the tau at which its required power meets its
    budget; the optimum is the minimum over users.
    """
    order = _descending_gain_order(s)
    h = s.gains[order]
    w = s.weights[order]
    p_cap = s.p_max[order]
    bandwidth, noise = s.bandwidth_hz, s.noise_floor_w

    tau_star = math.inf
    for i in range(s.k):
        cap_i = bandwidth * math.log2(1.0 + h[i] * p_cap[i] / noise)

        def over_budget(tau, i=i):
            return _noma_powers_sorted(tau, w, h, bandwidth, noise)[i] - p_cap[i]

        tau_i = bisect_root(over_budget, 0.0, cap_i, tol=tau_tol, expand=True)
        tau_star = min(tau_star, tau_i)

    q_sorted = _noma_powers_sorted(tau_star, w, h, bandwidth, noise)
    np.minimum(q_sorted, p_cap, out=q_sorted)  # trim bisection rounding
    rates_sorted = _noma_rates_sorted(q_sorted, h, bandwidth, noise)
    q = np.empty(s.k)
    q[order] = q_sorted
    rates = np.empty(s.k)
    rates[order] = rates_sorted
    return NomaSolution(tau_star, q, tuple(int(i) for i in order), rates)


def fdma_solve(s: Scenario, tau_tol: float = _TAU_TOL) -> FdmaSolution:
    """Optimal FDMA sum-rate scale: bandwidth demands must total one.

    Each user transmits at full power on its fraction; the fraction needed
    for rate weight * tau is monotone in tau, so the budget constraint is
    bisected. The RSMA optimum upper-bounds the root.
    """
    noise_psd = s.noise_psd_w_per_hz
    bandwidth = s.bandwidth_hz

    def demand(tau):
        total = 0.0
        for u in s.users:
            frac = bandwidth_fraction_for_rate(
                u.d * tau, u.h, u.p_max, bandwidth, noise_psd, residual_tol=1e-12
            )
            if math.isinf(frac):
                return math.inf
            total += frac
        return total

    hi, _, _ = rsma_optimal_sum_rate(s)
    tau_star = bisect_root(lambda t: demand(t) - 1.0, 0.0, hi, tol=tau_tol, expand=True)
    b = np.array(
        [
            bandwidth_fraction_for_rate(
                u.d * tau_star, u.h, u.p_max, bandwidth, noise_psd, residual_tol=1e-12
            )
            for u in s.users
        ]
    )
    rates = s.weights * tau_star
    return FdmaSolution(tau_star, b, rates)


def tdma_solve(s: Scenario) -> TdmaSolution:
    """Optimal TDMA sum-rate scale: harmonic form over single-user capacities."""
    caps = s.bandwidth_hz * np.log2(1.0 + s.gains * s.p_max / s.noise_floor_w)
    tau_star = 1.0 / float((s.weights / caps).sum())
    a = s.weights * tau_star / caps
    rates = a * caps
    return TdmaSolution(tau_star, a, rates)


@dataclass(frozen=True)
class OrderingReport:
    """Optimal sum-rates of all four schemes and the expected dominance chain."""

    tau_rsma: float
    tau_noma: float
    tau_fdma: float
    tau_tdma: float
    rsma_ge_noma: bool
    rsma_ge_fdma: bool
    fdma_ge_tdma: bool

    @property
    def all_hold(self) -> bool:
        return self.rsma_ge_noma and self.rsma_ge_fdma and self.fdma_ge_tdma

    def to_json_dict(self) -> dict:
        return {
            "tau_rsma_bits_per_s": self.tau_rsma,
            "tau_noma_bits_per_s": self.tau_noma,
            "tau_fdma_bits_per_s": self.tau_fdma,
            "tau_tdma_bits_per_s": self.tau_tdma,
            "rsma_ge_noma": self.rsma_ge_noma,
            "rsma_ge_fdma": self.rsma_ge_fdma,
            "fdma_ge_tdma": self.fdma_ge_tdma,
        }


def check_ordering(s: Scenario, rel_slack: float = 1e-9) -> OrderingReport:
    """Verify the scheme dominance chains on one scenario."""
    tau_rsma, _, _ = rsma_optimal_sum_rate(s)
    tau_noma = noma_solve(s).tau
    tau_fdma = fdma_solve(s).tau
    tau_tdma = tdma_solve(s).tau
    return OrderingReport(
        tau_rsma,
        tau_noma,
        tau_fdma,
        tau_tdma,
        rsma_ge_noma=tau_rsma >= tau_noma * (1.0 - rel_slack),
        rsma_ge_fdma=tau_rsma >= tau_fdma * (1.0 - rel_slack),
        fdma_ge_tdma=tau_fdma >= tau_tdma * (1.0 - rel_slack),
    )
