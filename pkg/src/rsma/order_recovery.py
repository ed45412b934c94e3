"""Decoding-order search and split-power recovery for uplink RSMA.

Each user splits its traffic into two messages; the receiver decodes all 2K
messages in one SIC chain. Given per-user rate targets (typically the
closed-form optimum), this module finds a decoding order and per-message
powers achieving them: for each candidate order it maximizes the common
target-scaling factor alpha via successive convex approximation of the
difference-of-concave rate expressions, and accepts the first order whose
alpha certifies feasibility (alpha >= 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import minimize

from .scenario import Scenario

MAX_ORDER_USERS = 4  # exhaustive order search size cap: (2K)!/2^K = 2520 at K=4
ALPHA_CAP = 10.0  # objective cap for degenerate all-zero targets
SCA_ALPHA_TOL = 1e-7
SCA_MAX_ITER = 100
ACCEPT_ALPHA = 1.0 - 1e-4

_LN2 = math.log(2.0)


class OrderRecoveryError(RuntimeError):
    """No decoding order certified the rate targets; retry with more starts."""


@dataclass(frozen=True)
class DecodingOrder:
    """Decode sequence over the 2K split messages, first decoded to last.

    Entries are (user, split) with split in {0, 1}. Canonical form requires
    split 0 of each user to be decoded before its split 1; the two splits of
    one user are interchangeable, so canonical orders cover all distinct SIC
    chains, (2K)!/2^K of them.
    """

    sequence: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(map(tuple, self.sequence)))
        n = len(self.sequence)
        if n == 0 or n % 2:
            raise ValueError("sequence must hold both splits of every user")
        k = n // 2
        expected = {(u, j) for u in range(k) for j in (0, 1)}
        if set(self.sequence) != expected:
            raise ValueError("sequence must be a permutation of all user splits")
        pos = {msg: t for t, msg in enumerate(self.sequence)}
        for u in range(k):
            if pos[(u, 0)] > pos[(u, 1)]:
                raise ValueError(f"canonical form: split 0 of user {u} decodes first")

    @property
    def k_users(self) -> int:
        return len(self.sequence) // 2

    def rank(self, user: int, split: int) -> int:
        """1-based decode position; larger rank means decoded later."""
        return self.sequence.index((user, split)) + 1

    def rank_array(self) -> np.ndarray:
        """Ranks indexed by flat message id m = 2*user + split."""
        ranks = np.empty(2 * self.k_users, dtype=int)
        for t, (u, j) in enumerate(self.sequence):
            ranks[2 * u + j] = t + 1
        return ranks


def enumerate_orders(k_users: int) -> Iterator[DecodingOrder]:
    """All canonical decoding orders for k_users, in lexicographic sequence.

    Count is (2K)!/2^K. Refuses k_users above MAX_ORDER_USERS; the search is
    factorial and only meant for small SIC chains.
    """
    if k_users < 1:
        raise ValueError("need at least one user")
    if k_users > MAX_ORDER_USERS:
        raise ValueError(
            f"order enumeration is capped at {MAX_ORDER_USERS} users, got {k_users}"
        )

    def extend(prefix: list[tuple[int, int]], placed_first: set[int]) -> Iterator:
        if len(prefix) == 2 * k_users:
            yield DecodingOrder(tuple(prefix))
            return
        for u in range(k_users):
            for j in (0, 1):
                msg = (u, j)
                if msg in prefix:
                    continue
                if j == 1 and u not in placed_first:
                    continue
                prefix.append(msg)
                yield from extend(prefix, placed_first | ({u} if j == 0 else set()))
                prefix.pop()

    yield from extend([], set())


def _as_power_matrix(s: Scenario, powers) -> np.ndarray:
    p = np.asarray(powers, dtype=float)
    if p.shape != (s.k, 2):
        raise ValueError(f"powers must have shape ({s.k}, 2), got {p.shape}")
    return p


def _as_targets(r_target) -> np.ndarray:
    return np.asarray(getattr(r_target, "rates", r_target), dtype=float)


class _SicChain:
    """Precomputed interference masks for one (scenario, order) pair."""

    def __init__(self, s: Scenario, order: DecodingOrder):
        if order.k_users != s.k:
            raise ValueError("order and scenario user counts differ")
        self.s = s
        self.b = s.bandwidth_hz
        self.noise = s.noise_floor_w
        self.h_msg = np.repeat(s.gains, 2)  # flat message id m = 2u + j
        ranks = order.rank_array()
        self.later = ranks[None, :] > ranks[:, None]  # [m, l]: l decoded after m
        self.later_eq = self.later | np.eye(2 * s.k, dtype=bool)
        self.budget = s.p_max
        self.msg_cap = np.repeat(s.p_max, 2)  # per-message power scale

    def message_rates(self, p_flat: np.ndarray) -> np.ndarray:
        hp = self.h_msg * p_flat
        interference = self.later @ hp
        return self.b * np.log2(1.0 + hp / (interference + self.noise))

    def user_rates(self, p_flat: np.ndarray) -> np.ndarray:
        return self.message_rates(p_flat).reshape(-1, 2).sum(axis=1)

    def rate_lb(self, p_flat: np.ndarray, ref_flat: np.ndarray) -> np.ndarray:
        """Concave lower bound on user rates, tight at p_flat == ref_flat.

        The rate is a difference of two concave log terms; the subtracted one
        is replaced by its first-order expansion around the reference point.
        """
        hp = self.h_msg * p_flat
        hp_ref = self.h_msg * ref_flat
        full = self.b * np.log2(self.later_eq @ hp + self.noise)
        ref_later = self.later @ hp_ref + self.noise
        sub_ref = self.b * np.log2(ref_later)
        linear = (self.b / _LN2) * (self.later @ (hp - hp_ref)) / ref_later
        per_msg = full - sub_ref - linear
        return per_msg.reshape(-1, 2).sum(axis=1)

    def rate_lb_grad(self, p_flat: np.ndarray, ref_flat: np.ndarray) -> np.ndarray:
        """Gradient of rate_lb per user, shape (K, 2K)."""
        hp = self.h_msg * p_flat
        hp_ref = self.h_msg * ref_flat
        denom_full = self.later_eq @ hp + self.noise
        denom_ref = self.later @ hp_ref + self.noise
        per_msg = (self.b / _LN2) * (
            self.later_eq * self.h_msg[None, :] / denom_full[:, None]
            - self.later * self.h_msg[None, :] / denom_ref[:, None]
        )
        return per_msg.reshape(-1, 2, per_msg.shape[1]).sum(axis=1)

    def project(self, p_flat: np.ndarray) -> np.ndarray:
        """Clamp to nonnegative and rescale rows exceeding their budgets."""
        p = np.clip(p_flat, 0.0, None).reshape(-1, 2)
        sums = p.sum(axis=1)
        over = sums > self.budget
        if np.any(over):
            p[over] *= (self.budget[over] / sums[over])[:, None]
        return p.ravel()

    def alpha_of(self, p_flat: np.ndarray, targets: np.ndarray) -> float:
        mask = targets > 0.0
        if not np.any(mask):
            return ALPHA_CAP
        ratios = self.user_rates(p_flat)[mask] / targets[mask]
        return min(float(ratios.min()), ALPHA_CAP)


def message_rate(s: Scenario, order: DecodingOrder, powers, k: int, j: int) -> float:
    """Rate of message (k, j) under SIC: later-decoded messages interfere."""
    p = _as_power_matrix(s, powers)
    chain = _SicChain(s, order)
    return float(chain.message_rates(p.ravel())[2 * k + j])


def user_rates(s: Scenario, order: DecodingOrder, powers) -> np.ndarray:
    """Per-user rates (sum of both split-message rates) in bits/s."""
    p = _as_power_matrix(s, powers)
    return _SicChain(s, order).user_rates(p.ravel())


def dc_lower_bound(s: Scenario, order: DecodingOrder, powers, p_ref, k: int) -> float:
    """Concave lower bound on user k's rate, linearized around p_ref."""
    p = _as_power_matrix(s, powers)
    ref = _as_power_matrix(s, p_ref)
    return float(_SicChain(s, order).rate_lb(p.ravel(), ref.ravel())[k])


def _supergradient_ascent(ratio, ratio_grad, x_ref: np.ndarray, iters: int = 300):
    """Projected supergradient ascent on min_k ratio_k(x) (fallback solver).

    Works in budget-fraction coordinates x in [0, 1]^(2K) with per-user row
    sums at most 1; diminishing steps c / sqrt(t).
    """
    x = x_ref.copy()
    best_x = x.copy()
    best_val = -math.inf
    for t in range(1, iters + 1):
        vals = ratio(x)
        worst = int(np.argmin(vals))
        if vals[worst] > best_val:
            best_val = float(vals[worst])
            best_x = x.copy()
        g = ratio_grad(x)[worst]
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            break
        x = _project_fractions(x + (0.5 / math.sqrt(t)) * g / norm)
    return best_x


def _project_fractions(x: np.ndarray) -> np.ndarray:
    """Clamp budget fractions to [0, 1] and rescale rows summing above 1."""
    x = np.clip(x, 0.0, 1.0).reshape(-1, 2)
    sums = x.sum(axis=1)
    over = sums > 1.0
    if np.any(over):
        x[over] /= sums[over][:, None]
    return x.ravel()


def _solve_linearized(
    chain: _SicChain, targets: np.ndarray, ref_flat: np.ndarray
) -> tuple[float, np.ndarray]:
    """One linearized subproblem; nondimensionalized for solver conditioning.

    Powers are expressed as fractions of each user's budget and rates as
    ratios to their targets, so every variable, constraint, and gradient is
    O(1) regardless of the physical scales.
    """
    mask = targets > 0.0
    if not np.any(mask):
        return ALPHA_CAP, ref_flat.copy()
    tgt = targets[mask]
    cap = chain.msg_cap
    n = ref_flat.size
    x_ref = ref_flat / cap

    def ratio(x):
        return chain.rate_lb(x * cap, ref_flat)[mask] / tgt

    def ratio_grad(x):
        return chain.rate_lb_grad(x * cap, ref_flat)[mask] * cap[None, :] / tgt[:, None]

    alpha0 = min(float(np.min(ratio(x_ref))), ALPHA_CAP)
    x0 = np.concatenate([x_ref, [max(alpha0, 0.0)]])

    def rate_cons(z):
        return ratio(z[:n]) - z[n]

    def rate_cons_jac(z):
        jac = np.empty((tgt.size, n + 1))
        jac[:, :n] = ratio_grad(z[:n])
        jac[:, n] = -1.0
        return jac

    budget_jac = np.zeros((chain.budget.size, n + 1))
    for k in range(chain.budget.size):
        budget_jac[k, 2 * k] = -1.0
        budget_jac[k, 2 * k + 1] = -1.0

    def budget_cons(z):
        return 1.0 - z[:n].reshape(-1, 2).sum(axis=1)

    obj_jac = np.zeros(n + 1)
    obj_jac[n] = -1.0
    bounds = [(0.0, 1.0)] * n + [(0.0, ALPHA_CAP)]
    try:
        res = minimize(
            lambda z: -z[n],
            x0,
            jac=lambda z: obj_jac,
            method="SLSQP",
            bounds=bounds,
            constraints=[
                {"type": "ineq", "fun": rate_cons, "jac": rate_cons_jac},
                {"type": "ineq", "fun": budget_cons, "jac": lambda z: budget_jac},
            ],
            options={"maxiter": 60, "ftol": 1e-10},
        )
        cand_x = _project_fractions(res.x[:n])
        cand_alpha = float(np.min(ratio(cand_x)))
    except (ValueError, FloatingPointError):
        cand_x, cand_alpha = None, -math.inf

    # Fall back to supergradient ascent only on a clear solver failure; a
    # result at the reference value just means the expansion point converged.
    if cand_x is None or cand_alpha < alpha0 - 1e-6 * max(1.0, abs(alpha0)):
        fb_x = _supergradient_ascent(ratio, ratio_grad, x_ref)
        fb_alpha = float(np.min(ratio(fb_x)))
        if fb_alpha > cand_alpha:
            cand_x, cand_alpha = fb_x, fb_alpha
    if cand_x is None or cand_alpha < alpha0:
        cand_x, cand_alpha = x_ref.copy(), alpha0
    if not math.isfinite(cand_alpha):
        raise OrderRecoveryError("linearized subproblem diverged")
    return min(cand_alpha, ALPHA_CAP), cand_x * cap


def solve_linearized(
    s: Scenario, order: DecodingOrder, r_target, p_ref
) -> tuple[float, np.ndarray]:
    """Maximize alpha s.t. the linearized user rates cover alpha * targets.

    Returns (alpha, powers) with powers feasible; alpha is the surrogate
    objective min_k rate_lb_k / target_k at the returned point. Degenerate
    all-zero targets return the cap ALPHA_CAP.
    """
    chain = _SicChain(s, order)
    ref = _as_power_matrix(s, p_ref).ravel()
    alpha, p = _solve_linearized(chain, _as_targets(r_target), ref)
    return alpha, p.reshape(-1, 2)


def _random_start(chain: _SicChain, rng: np.random.Generator) -> np.ndarray:
    p = rng.uniform(0.0, 1.0, size=(chain.budget.size, 2)) * chain.budget[:, None]
    sums = p.sum(axis=1)
    sums[sums == 0.0] = 1.0
    p *= (chain.budget / sums)[:, None]
    return p.ravel()


def _sca_from(
    chain: _SicChain,
    targets: np.ndarray,
    start_flat: np.ndarray,
    stop_at: float | None,
    alpha_tol: float,
) -> tuple[float, np.ndarray, int]:
    p = start_flat
    alpha = chain.alpha_of(p, targets)
    iters = 0
    for iters in range(1, SCA_MAX_ITER + 1):
        if stop_at is not None and alpha >= stop_at:
            break
        _, p_new = _solve_linearized(chain, targets, p)
        alpha_new = chain.alpha_of(p_new, targets)
        if alpha_new <= alpha:
            break
        step = alpha_new - alpha
        p, alpha = p_new, alpha_new
        if step <= alpha_tol * max(1.0, alpha):
            break
    return alpha, p, iters


def _multi_start_sca(
    chain: _SicChain,
    targets: np.ndarray,
    n_starts: int,
    rng: np.random.Generator,
    stop_at: float | None,
    alpha_tol: float,
    extra_starts: tuple[np.ndarray, ...] = (),
    reject_after: int | None = None,
    reject_below: float = 1.0 - 1e-3,
) -> tuple[float, np.ndarray]:
    """Best (alpha, flat powers) over SCA starts, with optional early exits.

    Start 0 is the deterministic even half-budget split, extra_starts follow,
    then random full-budget splits until n_starts total random-or-even starts
    ran. stop_at accepts early; reject_after gives up on a hopeless order
    once that many starts stayed below reject_below.
    """
    starts = [np.repeat(chain.budget / 2.0, 2)]
    starts.extend(extra_starts)
    randoms_needed = max(n_starts - 1, 0)

    best_alpha, best_p = -math.inf, starts[0]
    done = 0
    i = 0
    while True:
        if i < len(starts):
            p0 = starts[i]
        elif randoms_needed > 0:
            p0 = _random_start(chain, rng)
            randoms_needed -= 1
        else:
            break
        i += 1
        alpha, p, _ = _sca_from(chain, targets, p0, stop_at, alpha_tol)
        done += 1
        if alpha > best_alpha:
            best_alpha, best_p = alpha, p
        if stop_at is not None and best_alpha >= stop_at:
            break
        if (
            reject_after is not None
            and done >= reject_after
            and best_alpha < reject_below
        ):
            break
    return best_alpha, best_p


def solve_inner(
    s: Scenario,
    order: DecodingOrder,
    r_target,
    n_starts: int = 10,
    rng=None,
    stop_at: float | None = None,
    alpha_tol: float = SCA_ALPHA_TOL,
) -> tuple[float, np.ndarray]:
    """Multi-start SCA on the alpha-maximization problem for a fixed order.

    Starts are random full-budget power splits (the first is the even split
    for reproducibility); each iterates the linearized subproblem, updating
    the expansion point, until the objective step falls below alpha_tol or
    SCA_MAX_ITER iterations. The best (alpha, powers) over the starts is
    returned; alpha is the exact achieved min_k rate_k / target_k. stop_at
    short-circuits remaining starts once the incumbent alpha reaches it.
    """
    if n_starts < 1:
        raise ValueError("need at least one start")
    chain = _SicChain(s, order)
    targets = _as_targets(r_target)
    if not np.any(targets > 0.0):
        even = np.repeat(chain.budget / 2.0, 2)
        return ALPHA_CAP, even.reshape(-1, 2)
    rng = np.random.default_rng(rng)
    best_alpha, best_p = _multi_start_sca(
        chain, targets, n_starts, rng, stop_at, alpha_tol
    )
    return best_alpha, best_p.reshape(-1, 2)


@dataclass(frozen=True)
class RecoveredSolution:
    """Decoding order and split powers certifying the rate targets."""

    order: DecodingOrder
    powers: np.ndarray
    alpha: float
    trace: tuple[dict, ...] = field(default_factory=tuple)

    def trace_json(self) -> list[dict]:
        return [dict(entry) for entry in self.trace]


def recover_order_and_power(
    s: Scenario,
    r_star,
    n_starts: int = 10,
    seed: int = 0,
    collect_trace: bool = False,
    alpha_tol: float = SCA_ALPHA_TOL,
) -> RecoveredSolution:
    """Find a decoding order and powers achieving the target rates.

    Iterates canonical orders in lexicographic sequence, runs the multi-start
    SCA for each, and returns the first order whose best alpha reaches
    ACCEPT_ALPHA. Raises OrderRecoveryError when no order passes (the caller
    may raise n_starts).
    """
    if s.k > MAX_ORDER_USERS:
        raise ValueError(
            f"order recovery is capped at {MAX_ORDER_USERS} users, got {s.k}"
        )
    targets = _as_targets(r_star)
    if targets.shape != (s.k,):
        raise ValueError(f"need {s.k} rate targets, got shape {targets.shape}")

    if s.k == 1:
        order = DecodingOrder(((0, 0), (0, 1)))
        powers = np.array([[s.users[0].p_max, 0.0]])
        chain = _SicChain(s, order)
        alpha = chain.alpha_of(powers.ravel(), targets)
        if alpha < ACCEPT_ALPHA:
            raise OrderRecoveryError(f"single-user target exceeds capacity: {alpha=}")
        return RecoveredSolution(order, powers, alpha)

    orders = list(enumerate_orders(s.k))
    trace: list[dict] = []

    def sweep(screen: bool) -> RecoveredSolution | None:
        # Screening gives up on an order after a few stalled starts and warm
        # starts each order from the best power point seen so far; the
        # unscreened pass runs every start of every order.
        warm: tuple[np.ndarray, ...] = ()
        for idx, order in enumerate(orders):
            chain = _SicChain(s, order)
            rng = np.random.default_rng([seed, idx])
            alpha, p_flat = _multi_start_sca(
                chain,
                targets,
                n_starts,
                rng,
                stop_at=1.0 - 1e-6,
                alpha_tol=alpha_tol,
                extra_starts=warm,
                reject_after=3 if screen else None,
            )
            if collect_trace:
                trace.append(
                    {
                        "order": list(map(list, order.sequence)),
                        "alpha": float(alpha),
                        "screened": screen,
                    }
                )
            if alpha >= ACCEPT_ALPHA:
                powers = p_flat.reshape(-1, 2)
                return RecoveredSolution(order, powers, float(alpha), tuple(trace))
            warm = (p_flat,)
        return None

    found = sweep(screen=True)
    if found is None:
        found = sweep(screen=False)
    if found is None:
        raise OrderRecoveryError(
            f"no decoding order certified the targets with {n_starts} starts"
        )
    return found
