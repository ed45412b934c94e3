"""Scalar numerical primitives.

Real Lambert-W on both branches (Halley iteration), bracketed bisection for
monotone roots, and the inverse of the bandwidth-rate map f -> B f log2(1 +
g P / (sigma^2 B f)) used by orthogonal allocation and pairing.
"""

from __future__ import annotations

import math
from typing import Callable

_NEG_INV_E = -math.exp(-1.0)
_EPS = 2.220446049250313e-16

PRINCIPAL = "principal"
LOWER = "lower"


def _w_branch_point_series(p: float) -> float:
    # Expansion of W around x = -1/e; p = +-sqrt(2 (1 + e x)).
    return -1.0 + p - p * p / 3.0 + (11.0 / 72.0) * p ** 3


def lambert_w(x: float, branch: str = PRINCIPAL) -> float:
    """Real Lambert-W: the solution w of w e^w = x on the requested branch.

    The principal branch covers w >= -1 for x >= -1/e; the lower branch covers
    w <= -1 for -1/e <= x < 0. Residual |w e^w - x| is driven below
    1e-14 * max(1, |x|) by Halley iteration from a series or asymptotic guess.
    """
    if branch not in (PRINCIPAL, LOWER):
        raise ValueError(f"unknown branch {branch!r}")
    if math.isnan(x):
        raise ValueError("lambert_w argument is NaN")

    # 2 (1 + e x), clamped against rounding just below the branch point.
    p_sq = 2.0 * (1.0 + math.e * x)
    if p_sq < 0.0:
        if p_sq < -1e-12:
            raise ValueError(f"lambert_w argument {x} below branch point -1/e")
        p_sq = 0.0

    if branch == PRINCIPAL:
        if x == 0.0:
            return 0.0
        if x < -0.25:
            w = _w_branch_point_series(math.sqrt(p_sq))
        elif x < math.e:
            w = math.log1p(x) if x > -0.5 else x
        else:
            l1 = math.log(x)
            l2 = math.log(l1)
            w = l1 - l2 + l2 / l1
    else:
        if x >= 0.0:
            raise ValueError(f"lower branch needs -1/e <= x < 0, got {x}")
        if x > -0.25:
            # Asymptotic guess toward x -> 0-.
            l1 = math.log(-x)
            l2 = math.log(-l1)
            w = l1 - l2 + l2 / l1
        else:
            w = _w_branch_point_series(-math.sqrt(p_sq))

    target = 1e-14 * max(1.0, abs(x))
    for _ in range(50):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= target:
            break
        wp1 = w + 1.0
        if ew == 0.0 or wp1 == 0.0:
            break
        denom = ew * wp1 - f * (w + 2.0) / (2.0 * wp1)
        if denom == 0.0 or not math.isfinite(denom):
            break
        step = f / denom
        w_new = w - step
        # Keep the iterate on its branch.
        if branch == PRINCIPAL:
            w_new = max(w_new, -1.0)
        else:
            w_new = min(w_new, -1.0)
        if w_new == w:
            break
        w = w_new
    return w


def bisect_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    expand: bool = False,
    max_expand: int = 200,
) -> float:
    """Root of a monotone f bracketed by [lo, hi], to relative width tol.

    With expand=True the upper end is doubled away from lo (up to max_expand
    times) until the bracket straddles a sign change. Raises ValueError when no
    sign change can be found.
    """
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if expand:
        n = 0
        while fhi != 0.0 and (flo > 0.0) == (fhi > 0.0) and n < max_expand:
            hi = lo + 2.0 * (hi - lo)
            fhi = f(hi)
            n += 1
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise ValueError(f"no sign change in bracket [{lo}, {hi}]")
    lo_positive = flo > 0.0
    while (hi - lo) > tol * max(abs(hi), abs(lo), _EPS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0.0) == lo_positive:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rate_on_fraction(
    fraction: float, gain: float, power: float, bandwidth_hz: float, noise_psd: float
) -> float:
    """Rate achieved on a bandwidth fraction at full transmit power (bits/s)."""
    if fraction <= 0.0:
        return 0.0
    snr = gain * power / (noise_psd * bandwidth_hz * fraction)
    return bandwidth_hz * fraction * math.log2(1.0 + snr)


def bandwidth_fraction_for_rate(
    rate: float,
    gain: float,
    power: float,
    bandwidth_hz: float,
    noise_psd: float,
    residual_tol: float = 1e-9,
) -> float:
    """Smallest bandwidth fraction delivering the demanded rate, or math.inf.

    Solves rate = B f log2(1 + g P / (sigma^2 B f)) for f. The map is
    monotone increasing in f, so the demand is infeasible within the full band
    (math.inf) exactly when rate exceeds B log2(1 + g P / (sigma^2 B)).

    The closed form goes through Lambert-W: with a = ln2 * rate * sigma^2 /
    (g P), the substitution v = 1 + g P / (sigma^2 B f) turns the equation
    into (-a v) e^(-a v) = -a e^(-a). The root v = 1 (W = -a) corresponds to
    the useless f = infinity, so the other real branch is taken; the result is
    always residual-checked and bisection on the monotone map is used as the
    fallback source of truth.
    """
    if rate < 0.0 or not math.isfinite(rate):
        raise ValueError(f"rate must be finite and nonnegative, got {rate}")
    if rate == 0.0:
        return 0.0
    received = gain * power
    noise_floor = noise_psd * bandwidth_hz
    capacity = bandwidth_hz * math.log2(1.0 + received / noise_floor)
    if rate > capacity:
        return math.inf
    if rate == capacity:
        return 1.0

    # rate < capacity < g P / (sigma^2 ln2) implies a < 1, so the nontrivial
    # root lies on the lower branch.
    a = math.log(2.0) * rate * noise_psd / received
    fraction = math.nan
    try:
        w = lambert_w(-a * math.exp(-a), LOWER)
        u = -(w + a) / a  # u = g P / (sigma^2 B f) > 0
        if u > 0.0:
            fraction = received / (noise_floor * u)
    except ValueError:
        pass

    ok = (
        math.isfinite(fraction)
        and 0.0 < fraction
        and abs(rate_on_fraction(fraction, gain, power, bandwidth_hz, noise_psd) - rate)
        <= residual_tol * rate
    )
    if not ok:
        fraction = bisect_root(
            lambda f: rate_on_fraction(f, gain, power, bandwidth_hz, noise_psd) - rate,
            0.0,
            1.0,
            tol=1e-14,
        )
    return min(fraction, 1.0)
