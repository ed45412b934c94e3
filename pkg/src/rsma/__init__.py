"""Uplink sum-rate maximization under proportional-rate fairness.

RSMA with decoding-order and split-power recovery, a low-complexity
user-pairing scheme, and closed-form NOMA / FDMA / TDMA baselines.
"""

__version__ = "0.1.0"

from .baselines import (
    FdmaSolution,
    NomaSolution,
    OrderingReport,
    TdmaSolution,
    check_ordering,
    fdma_solve,
    noma_power_for_tau,
    noma_solve,
    tdma_solve,
)
from .montecarlo import (
    CdfRow,
    DropDefaults,
    ResultRow,
    SweepSpec,
    emit_csv,
    run_cdf,
    run_sweep,
    solve_sum_rate,
)
from .numerics import bandwidth_fraction_for_rate, bisect_root, lambert_w
from .order_recovery import (
    DecodingOrder,
    OrderRecoveryError,
    RecoveredSolution,
    dc_lower_bound,
    enumerate_orders,
    message_rate,
    recover_order_and_power,
    solve_inner,
    solve_linearized,
    user_rates,
)
from .pairing import (
    PairAllocation,
    PairingPlan,
    make_pairs,
    pair_min_fraction,
    pairing_feasible,
    pairing_solve,
    realize_pair_powers,
)
from .rate_region import (
    RateAllocation,
    RegionRow,
    TwoUserBoundaryPoint,
    region_rows,
    rsma_optimal_sum_rate,
    subset_capacity,
    two_user_baseline_boundary,
    two_user_boundary_point,
    two_user_corners,
)
from .scenario import (
    DropConfig,
    Scenario,
    UserParams,
    channel_gain,
    dbm_to_watt,
    drop_users,
    fairness_index,
    make_scenario,
    watt_to_dbm,
)
