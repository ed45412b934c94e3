"""Experiment harness: parameter sweeps, random-drop averaging, CDFs, CSV out.

Runs are deterministic given the base seed: each trial derives its own drop
seed by hashing (base seed, trial index), and for a fixed trial the same drop
is reused across all values of the swept axis so scheme curves are paired.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .baselines import fdma_solve, noma_solve, tdma_solve
from .pairing import make_pairs, pairing_solve
from .rate_region import rsma_optimal_sum_rate
from .scenario import (
    DEFAULT_AREA_SIDE_M,
    DEFAULT_BANDWIDTH_HZ,
    DEFAULT_NOISE_PSD_DBM_HZ,
    DEFAULT_P_MAX_DBM,
    DEFAULT_SHADOW_STD_DB,
    DropConfig,
    Scenario,
    dbm_to_watt,
    drop_users,
)

AXES = ("p_max_dbm", "bandwidth_hz", "d2_weight", "k_users")
SCHEMES = ("RSMA", "RSMA-UP-SW", "RSMA-UP-SM", "RSMA-UP-SS", "NOMA", "FDMA", "TDMA")


@dataclass(frozen=True)
class DropDefaults:
    """Cell and radio defaults filled in where the sweep axis is silent."""

    k_users: int = 2
    area_side_m: float = DEFAULT_AREA_SIDE_M
    shadow_std_db: float = DEFAULT_SHADOW_STD_DB
    p_max_dbm: float = DEFAULT_P_MAX_DBM
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ
    noise_psd_dbm_hz: float = DEFAULT_NOISE_PSD_DBM_HZ
    min_dist_m: float = 1.0


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: axis, its values, trial count, base seed, scheme list."""

    axis: str
    values: tuple[float, ...]
    trials: int
    seed: int
    schemes: tuple[str, ...]

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}, expected one of {AXES}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("values must be nonempty")
        if list(values) != sorted(values):
            raise ValueError("values must be sorted ascending")
        object.__setattr__(self, "values", values)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        schemes = tuple(str(x).upper() for x in self.schemes)
        unknown = [x for x in schemes if x not in SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes {unknown}, expected from {SCHEMES}")
        object.__setattr__(self, "schemes", schemes)

    def to_json_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ResultRow:
    """Aggregated sum-rate for one (axis value, scheme) cell."""

    axis: str
    value: float
    scheme: str
    mean_sum_rate_bits_per_s: float
    std_sum_rate_bits_per_s: float
    trials: int


@dataclass(frozen=True)
class CdfRow:
    """One empirical-CDF sample point for a scheme."""

    scheme: str
    sum_rate_bits_per_s: float
    cdf: float


def trial_seed(base_seed: int, trial: int) -> int:
    """Stable per-trial drop seed derived from the base seed."""
    return int(np.random.SeedSequence([base_seed, trial]).generate_state(1)[0])


def solve_sum_rate(scheme: str, s: Scenario) -> float:
    """Optimal sum-rate of one scheme on one scenario, in bits/s.

    RSMA uses the closed-form subset optimum (no order recovery; the sum-rate
    value does not need it). Pairing schemes require an even user count.
    """
    name = scheme.upper()
    if name == "RSMA":
        return rsma_optimal_sum_rate(s)[0]
    if name == "NOMA":
        return noma_solve(s).tau
    if name == "FDMA":
        return fdma_solve(s).tau
    if name == "TDMA":
        return tdma_solve(s).tau
    if name.startswith("RSMA-UP-"):
        plan = make_pairs(s, name.removeprefix("RSMA-UP-"))
        return pairing_solve(s, plan).tau
    raise ValueError(f"unknown scheme {scheme!r}")


def _trial_scenario(
    spec: SweepSpec, defaults: DropDefaults, value: float, trial: int
) -> Scenario:
    k = int(value) if spec.axis == "k_users" else defaults.k_users
    p_max_dbm = value if spec.axis == "p_max_dbm" else defaults.p_max_dbm
    bandwidth = value if spec.axis == "bandwidth_hz" else defaults.bandwidth_hz
    weights = None
    if spec.axis == "d2_weight":
        if k != 2:
            raise ValueError("d2_weight sweeps need k_users = 2")
        if not 0.0 < value < 1.0:
            raise ValueError(f"d2_weight values must lie in (0, 1), got {value}")
        weights = (1.0 - value, value)
    cfg = DropConfig(
        area_side_m=defaults.area_side_m,
        k=k,
        shadow_std_db=defaults.shadow_std_db,
        seed=trial_seed(spec.seed, trial),
        min_dist_m=defaults.min_dist_m,
    )
    return drop_users(
        cfg,
        p_max_w=dbm_to_watt(p_max_dbm),
        weights=weights,
        bandwidth_hz=bandwidth,
        noise_psd_w_per_hz=dbm_to_watt(defaults.noise_psd_dbm_hz),
    )


def run_sweep(spec: SweepSpec, defaults: DropDefaults = DropDefaults()) -> list[ResultRow]:
    """Average each scheme's optimal sum-rate over random drops per axis value."""
    rows: list[ResultRow] = []
    for value in spec.values:
        scenarios = [
            _trial_scenario(spec, defaults, value, t) for t in range(spec.trials)
        ]
        for scheme in spec.schemes:
            samples = np.array([solve_sum_rate(scheme, s) for s in scenarios])
            rows.append(
                ResultRow(
                    axis=spec.axis,
                    value=value,
                    scheme=scheme,
                    mean_sum_rate_bits_per_s=float(samples.mean()),
                    std_sum_rate_bits_per_s=float(samples.std()),
                    trials=spec.trials,
                )
            )
    return rows


def run_cdf(
    k_users: int,
    trials: int,
    seed: int,
    schemes=("RSMA", "RSMA-UP-SW", "NOMA", "FDMA"),
    defaults: DropDefaults = DropDefaults(),
) -> list[CdfRow]:
    """Empirical sum-rate CDF samples per scheme over random drops.

    Samples are sorted ascending with ordinates (i - 0.5) / n; all schemes
    see the same drops.
    """
    if trials < 10:
        raise ValueError("need at least 10 trials for a CDF")
    schemes = tuple(str(x).upper() for x in schemes)
    spec = SweepSpec("k_users", (float(k_users),), trials, seed, schemes)
    scenarios = [
        _trial_scenario(spec, defaults, float(k_users), t) for t in range(trials)
    ]
    rows: list[CdfRow] = []
    for scheme in schemes:
        samples = np.sort([solve_sum_rate(scheme, s) for s in scenarios])
        for i, x in enumerate(samples):
            rows.append(CdfRow(scheme, float(x), (i + 0.5) / trials))
    return rows


def _format_field(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17e")
    return str(value)


def emit_csv(rows, path, row_type=None) -> None:
    """Write dataclass rows as CSV; floats keep 17 significant digits."""
    if row_type is None:
        if not rows:
            raise ValueError("row_type is required for an empty row list")
        row_type = type(rows[0])
    fields = [f.name for f in dataclasses.fields(row_type)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow(
                [_format_field(getattr(row, name)) for name in fields]
            )


def read_csv_rows(path, row_type) -> list:
    """Parse a CSV written by emit_csv back into dataclass rows."""
    fields = {f.name: f.type for f in dataclasses.fields(row_type)}
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            kwargs = {}
            for name, type_name in fields.items():
                raw = rec[name]
                if type_name in ("float", float):
                    kwargs[name] = float(raw)
                elif type_name in ("int", int):
                    kwargs[name] = int(raw)
                else:
                    kwargs[name] = raw
            out.append(row_type(**kwargs))
    return out
