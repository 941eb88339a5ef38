"""Command line front end.

Exit codes: 0 success, 1 configuration or feasibility error, 2 I/O error,
3 validation-suite failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import benchmarks, experiment, validation
from .config import (
    ScenarioConfig,
    load_config_document,
    scenario_from_mapping,
    with_overrides,
)
from .errors import ConfigError, InitializationInfeasible, OutOfRegion, SearchSpaceTooLarge
from .matching import run_matching


def _load_scenario(args) -> ScenarioConfig:
    if args.config is None:
        config = ScenarioConfig()
    else:
        config = scenario_from_mapping(load_config_document(args.config))
    if getattr(args, "seed", None) is not None:
        config = with_overrides(config, rng_seed=args.seed)
    return config


def _parse_schemes(raw: str) -> tuple[benchmarks.SchemeId, ...]:
    out = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            out.append(benchmarks.SchemeId(token))
        except ValueError:
            valid = ", ".join(s.value for s in benchmarks.SchemeId)
            raise ConfigError(f"unknown scheme {token!r}; valid: {valid}")
    if not out:
        raise ConfigError("empty scheme list")
    return tuple(out)


def _cmd_run(args) -> int:
    config = _load_scenario(args)
    seed = config.rng_seed
    scheme = benchmarks.SchemeId(args.scheme)
    layout, channel = experiment.generate_scenario(config, seed)
    if scheme is benchmarks.SchemeId.PROPOSED:
        state = run_matching(channel, config, experiment.matching_rng(seed))
        outcome = state.outcome
    elif scheme is benchmarks.SchemeId.CONVENTIONAL:
        coeffs = benchmarks.feed_channel_coefficients(config, layout)
        outcome, _ = benchmarks.conventional_baseline(coeffs, config)
    elif scheme is benchmarks.SchemeId.MIN_POWER:
        state = benchmarks.min_power_scheme(channel, config, experiment.matching_rng(seed))
        outcome = state.outcome
    elif scheme is benchmarks.SchemeId.NEAREST:
        outcome, _, _ = benchmarks.nearest_pa_scheme(channel, layout, config)
    else:
        outcome = benchmarks.exhaustive_search(
            channel, config, max_subset_size=args.exhaustive_cap
        )
    payload = outcome.as_dict()
    payload["scheme"] = scheme.value
    payload["seed"] = seed
    if not outcome.feasible:
        payload["ee"] = None  # -inf has no JSON form
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_sweep(args) -> int:
    document = load_config_document(args.config)
    base = scenario_from_mapping(document)
    if args.seed is not None:
        base = with_overrides(base, rng_seed=args.seed)

    variable = document.get("sweep_variable")
    if variable is None:
        raise ConfigError("sweep config must set sweep_variable")
    values = document.get("sweep_values")
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep config must set sweep_values as a non-empty list")
    if args.schemes is not None:
        schemes = _parse_schemes(args.schemes)
    elif "schemes" in document:
        if not isinstance(document["schemes"], list):
            raise ConfigError("schemes must be a list of scheme names")
        schemes = _parse_schemes(",".join(document["schemes"]))
    else:
        schemes = (
            benchmarks.SchemeId.PROPOSED,
            benchmarks.SchemeId.CONVENTIONAL,
            benchmarks.SchemeId.MIN_POWER,
            benchmarks.SchemeId.NEAREST,
        )
    num_trials = args.trials if args.trials is not None else document.get("num_trials", 100)

    spec = experiment.SweepSpec(
        variable=str(variable),
        values=tuple(values),
        schemes=schemes,
        num_trials=int(num_trials),
        base_config=base,
    )
    records = experiment.run_sweep(spec, exhaustive_cap=args.exhaustive_cap)
    experiment.write_results(records, args.out, args.format)
    print(f"wrote {len(records)} rows to {args.out}")
    return 0


def _cmd_convergence(args) -> int:
    config = _load_scenario(args)
    records = experiment.run_convergence(config, config.rng_seed)
    experiment.write_convergence(records, args.out, args.format)
    print(f"wrote {len(records)} accepted moves to {args.out}")
    return 0


def _cmd_validate(args) -> int:
    results = validation.run_all(fast=args.fast)
    all_passed = True
    for result in results:
        mark = "PASS" if result.passed else "FAIL"
        print(f"{mark}  {result.name}: {result.detail}  ({result.seconds:.1f}s)")
        all_passed = all_passed and result.passed
    return 0 if all_passed else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noma-pass",
        description=(
            "Energy-efficiency optimization for a downlink NOMA "
            "pinching-antenna system"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve one scenario and print the outcome as JSON")
    run.add_argument("--config", default=None, help="flat TOML scenario file")
    run.add_argument("--seed", type=int, default=None, help="override rng_seed")
    run.add_argument(
        "--scheme",
        default=benchmarks.SchemeId.PROPOSED.value,
        choices=[s.value for s in benchmarks.SchemeId],
    )
    run.add_argument("--exhaustive-cap", type=int, default=None,
                     help="max activation-set size for the exhaustive scheme")
    run.add_argument("--out", default=None, help="write JSON here instead of stdout")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="Monte Carlo sweep driven by a config file")
    sweep.add_argument("--config", required=True, help="flat TOML file with sweep_* keys")
    sweep.add_argument("--seed", type=int, default=None, help="override base rng_seed")
    sweep.add_argument("--trials", type=int, default=None)
    sweep.add_argument("--schemes", default=None, help="comma-separated scheme names")
    sweep.add_argument("--exhaustive-cap", type=int, default=None)
    sweep.add_argument("--out", default="results.csv")
    sweep.add_argument("--format", default="csv", choices=["csv", "json"])
    sweep.set_defaults(func=_cmd_sweep)

    conv = sub.add_parser("convergence", help="accepted-move trace of one search")
    conv.add_argument("--config", default=None)
    conv.add_argument("--seed", type=int, default=None)
    conv.add_argument("--out", default="convergence.csv")
    conv.add_argument("--format", default="csv", choices=["csv", "json"])
    conv.set_defaults(func=_cmd_convergence)

    check = sub.add_parser("validate", help="run the built-in correctness checks")
    check.add_argument("--fast", action="store_true", help="smaller check sizes")
    check.set_defaults(func=_cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OutOfRegion, SearchSpaceTooLarge, InitializationInfeasible) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    sys.exit(main())
