"""Command-line front end: region tracing, single-scenario solves, sweeps, CDFs.

Configuration is a single JSON document (see README for the schema); command
line flags override config values, with a warning when both are given. The
seed and resolved settings are echoed into every output for provenance.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .baselines import check_ordering, fdma_solve, noma_solve, tdma_solve
from .montecarlo import (
    AXES,
    CdfRow,
    DropDefaults,
    ResultRow,
    SweepSpec,
    emit_csv,
    run_cdf,
    run_sweep,
)
from .order_recovery import (
    MAX_ORDER_USERS,
    OrderRecoveryError,
    recover_order_and_power,
)
from .pairing import make_pairs, pairing_solve
from .rate_region import RegionRow, region_rows, rsma_optimal_sum_rate
from .scenario import Scenario

SOLVE_SCHEMES = ("RSMA", "NOMA", "FDMA", "TDMA")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _load_config(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _scheme_list(text: str) -> tuple[str, ...]:
    return tuple(x.strip().upper() for x in text.split(",") if x.strip())


def _resolve(flag_value, config: dict, section: str, key: str, default=None):
    """Flag beats config beats default; warn when flag shadows config."""
    section_doc = config.get(section, {})
    if flag_value is not None:
        if key in section_doc:
            _warn(f"--{key.replace('_', '-')} overrides {section}.{key} from config")
        return flag_value
    if key in section_doc:
        return section_doc[key]
    return default


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsma",
        description="Uplink sum-rate allocation: RSMA, user pairing, and baselines.",
    )
    parser.add_argument("--version", action="version", version=f"rsma {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    region = sub.add_parser("region", help="trace two-user rate-region frontiers")
    region.add_argument("--config", required=True, help="scenario JSON (K=2)")
    region.add_argument("--grid-points", type=int, default=101)
    region.add_argument("--schemes", default="RSMA,NOMA,FDMA,TDMA")
    region.add_argument("--out", required=True, help="CSV output path")

    solve = sub.add_parser("solve", help="solve one scenario with all schemes")
    solve.add_argument("--config", required=True, help="scenario JSON")
    solve.add_argument("--schemes", default=",".join(SOLVE_SCHEMES))
    solve.add_argument("--out", default=None, help="JSON output path (default stdout)")
    solve.add_argument(
        "--recover-order",
        action="store_true",
        help=f"force RSMA order recovery (auto when K <= {MAX_ORDER_USERS})",
    )
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--n-starts", type=int, default=10)
    solve.add_argument("--sca-tol", type=float, default=1e-7)
    solve.add_argument("--tau-tol", type=float, default=1e-13)
    solve.add_argument("--pairing-eps", type=float, default=1e-6)
    solve.add_argument("--pairing", default=None, help="also solve RSMA-UP-<STRATEGY>")
    solve.add_argument("-v", "--verbose", action="store_true")

    sweep = sub.add_parser("sweep", help="axis sweep averaged over random drops")
    sweep.add_argument("--config", default=None, help="optional JSON with defaults")
    sweep.add_argument("--axis", choices=AXES, default=None)
    sweep.add_argument("--values", default=None, help="comma-separated axis values")
    sweep.add_argument("--trials", type=int, default=None)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--schemes", default=None)
    sweep.add_argument("--out", required=True, help="CSV output path")

    cdf = sub.add_parser("cdf", help="empirical sum-rate CDF over random drops")
    cdf.add_argument("--config", default=None)
    cdf.add_argument("--k", type=int, default=None)
    cdf.add_argument("--trials", type=int, default=None)
    cdf.add_argument("--seed", type=int, default=None)
    cdf.add_argument("--schemes", default=None)
    cdf.add_argument("--out", required=True, help="CSV output path")
    return parser


def _cmd_region(args) -> int:
    try:
        config = _load_config(args.config)
        scenario = Scenario.from_json_dict(config.get("scenario", config))
    except (OSError, KeyError, ValueError, TypeError) as exc:
        return _fail(f"cannot load scenario from {args.config}: {exc}")
    if scenario.k != 2:
        return _fail(f"region tracing needs K=2, config has K={scenario.k}")
    rows = region_rows(scenario, _scheme_list(args.schemes), args.grid_points)
    emit_csv(rows, args.out, row_type=RegionRow)
    return 0


def _solve_one(scheme: str, scenario: Scenario, args) -> dict:
    if scheme == "RSMA":
        tau, alloc, binding = rsma_optimal_sum_rate(scenario)
        doc = {
            "scheme": "RSMA",
            "tau_bits_per_s": tau,
            "rates_bits_per_s": alloc.rates.tolist(),
            "binding_subset": list(binding),
        }
        if args.recover_order and scenario.k > MAX_ORDER_USERS:
            raise ValueError(
                f"order recovery requested but is capped at K <= {MAX_ORDER_USERS}; "
                f"this scenario has K={scenario.k}"
            )
        if scenario.k <= MAX_ORDER_USERS:
            rec = recover_order_and_power(
                scenario,
                alloc,
                n_starts=args.n_starts,
                seed=args.seed,
                collect_trace=args.verbose,
                alpha_tol=args.sca_tol,
            )
            doc["decode_order"] = [list(msg) for msg in rec.order.sequence]
            doc["split_powers_w"] = rec.powers.tolist()
            doc["alpha"] = rec.alpha
            if args.verbose:
                doc["trace"] = rec.trace_json()
        return doc
    if scheme == "NOMA":
        return noma_solve(scenario, tau_tol=args.tau_tol).to_json_dict()
    if scheme == "FDMA":
        return fdma_solve(scenario, tau_tol=args.tau_tol).to_json_dict()
    if scheme == "TDMA":
        return tdma_solve(scenario).to_json_dict()
    raise ValueError(f"unknown scheme {scheme!r}")


def _cmd_solve(args) -> int:
    try:
        config = _load_config(args.config)
        scenario = Scenario.from_json_dict(config.get("scenario", config))
    except (OSError, KeyError, ValueError, TypeError) as exc:
        return _fail(f"cannot load scenario from {args.config}: {exc}")

    schemes = _scheme_list(args.schemes)
    results: dict = {}
    failed: list[str] = []
    for scheme in schemes:
        try:
            results[scheme] = _solve_one(scheme, scenario, args)
        except (ValueError, OrderRecoveryError) as exc:
            failed.append(scheme)
            results[scheme] = {"scheme": scheme, "error": str(exc)}
    if args.pairing is not None:
        tag = f"RSMA-UP-{args.pairing.upper()}"
        try:
            plan = make_pairs(scenario, args.pairing)
            results[tag] = pairing_solve(scenario, plan, eps=args.pairing_eps).to_json_dict()
        except ValueError as exc:
            failed.append(tag)
            results[tag] = {"scheme": tag, "error": str(exc)}

    bundle = {
        "seed": args.seed,
        "tolerances": {
            "sca_tol": args.sca_tol,
            "tau_tol": args.tau_tol,
            "pairing_eps": args.pairing_eps,
            "n_starts": args.n_starts,
        },
        "schemes": results,
        "ordering": check_ordering(scenario).to_json_dict(),
        "failed": failed,
    }
    text = json.dumps(bundle, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if failed:
        print(f"error: schemes failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _cmd_sweep(args) -> int:
    try:
        config = _load_config(args.config) if args.config else {}
    except (OSError, ValueError) as exc:
        return _fail(f"cannot load config {args.config}: {exc}")
    axis = _resolve(args.axis, config, "sweep", "axis")
    values = _resolve(args.values, config, "sweep", "values")
    trials = _resolve(args.trials, config, "sweep", "trials", 200)
    seed = _resolve(args.seed, config, "sweep", "seed", 0)
    schemes = _resolve(args.schemes, config, "sweep", "schemes", list(SOLVE_SCHEMES))
    if axis is None or values is None:
        return _fail("sweep needs --axis and --values (flags or config)")
    if isinstance(values, str):
        values = [float(v) for v in values.split(",") if v.strip()]
    if isinstance(schemes, str):
        schemes = _scheme_list(schemes)
    try:
        spec = SweepSpec(axis, tuple(values), int(trials), int(seed), tuple(schemes))
        defaults = DropDefaults(**config.get("defaults", {}))
        rows = run_sweep(spec, defaults)
    except ValueError as exc:
        return _fail(str(exc))
    emit_csv(rows, args.out, row_type=ResultRow)
    echo = {"spec": spec.to_json_dict(), "defaults": defaults.__dict__}
    with open(f"{args.out}.spec.json", "w") as fh:
        json.dump(echo, fh, indent=2)
        fh.write("\n")
    return 0


def _cmd_cdf(args) -> int:
    try:
        config = _load_config(args.config) if args.config else {}
    except (OSError, ValueError) as exc:
        return _fail(f"cannot load config {args.config}: {exc}")
    k = _resolve(args.k, config, "cdf", "k_users", 10)
    trials = _resolve(args.trials, config, "cdf", "trials", 200)
    seed = _resolve(args.seed, config, "cdf", "seed", 0)
    schemes = _resolve(
        args.schemes, config, "cdf", "schemes", ["RSMA", "RSMA-UP-SW", "NOMA", "FDMA"]
    )
    if isinstance(schemes, str):
        schemes = _scheme_list(schemes)
    try:
        defaults = DropDefaults(**config.get("defaults", {}))
        rows = run_cdf(int(k), int(trials), int(seed), tuple(schemes), defaults)
    except ValueError as exc:
        return _fail(str(exc))
    emit_csv(rows, args.out, row_type=CdfRow)
    echo = {
        "cdf": {"k_users": int(k), "trials": int(trials), "seed": int(seed),
                "schemes": list(schemes)},
        "defaults": defaults.__dict__,
    }
    with open(f"{args.out}.spec.json", "w") as fh:
        json.dump(echo, fh, indent=2)
        fh.write("\n")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "region": _cmd_region,
        "solve": _cmd_solve,
        "sweep": _cmd_sweep,
        "cdf": _cmd_cdf,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
