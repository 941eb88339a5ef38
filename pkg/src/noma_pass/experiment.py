"""Seeded Monte Carlo sweeps and result persistence.

A trial is a pure function of (config, seed): user positions are drawn
uniformly over the served rectangle, every scheme then sees the same layout
and channel matrix, and rows come out sorted so that parallel execution can
never change the files.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Optional, Sequence

import numpy as np

from . import benchmarks
from .channel import ChannelMatrix, Layout, build_channel_matrix, build_layout
from .config import ScenarioConfig, dbm_to_watt, watt_to_dbm
from .errors import ConfigError, InitializationInfeasible
from .matching import run_matching

log = logging.getLogger(__name__)

SWEEP_VARIABLES = ("Pt_dBm", "Pact_dBm", "L")

# Above this grid size the exhaustive benchmark inside sweeps is rebuilt on a
# reduced grid instead of enumerating 2^L subsets.
EXHAUSTIVE_SWEEP_L = 10

TRIAL_FIELDS = (
    "seed",
    "K",
    "L",
    "Pt_dBm",
    "Pact_dBm",
    "scheme",
    "ee_bits_per_joule",
    "sum_rate_bps",
    "n_active",
    "feasible",
    "outer_iterations",
    "dinkelbach_iterations_total",
)

CONVERGENCE_FIELDS = ("seed", "sweep_index", "utility_after_move", "n_active_after_move")


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    K: int
    L: int
    Pt_dBm: float
    Pact_dBm: float
    scheme: str
    ee_bits_per_joule: float
    sum_rate_bps: float
    n_active: int
    feasible: bool
    outer_iterations: int
    dinkelbach_iterations_total: int


@dataclass(frozen=True)
class ConvergenceRecord:
    seed: int
    sweep_index: int
    utility_after_move: float
    n_active_after_move: int


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    schemes: tuple[benchmarks.SchemeId, ...]
    num_trials: int
    base_config: ScenarioConfig

    def __post_init__(self) -> None:
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep_variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}"
            )
        if not self.values:
            raise ConfigError("sweep_values must be non-empty")
        if list(self.values) != sorted(self.values):
            raise ConfigError("sweep_values must be sorted ascending")
        if not self.schemes:
            raise ConfigError("schemes must be non-empty")
        if self.num_trials < 1:
            raise ConfigError("num_trials must be >= 1")


def scenario_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([0, seed])


def matching_rng(seed: int) -> np.random.Generator:
    # Distinct stream so activation draws never alias the user-position draws.
    return np.random.default_rng([1, seed])


def sample_user_positions(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """K user drops, i.i.d. uniform over the served rectangle, as (K, 2)."""
    x = rng.uniform(0.0, config.region_length_D2, config.num_users_K)
    y = rng.uniform(
        -config.region_width_D1 / 2.0, config.region_width_D1 / 2.0, config.num_users_K
    )
    return np.column_stack([x, y])


def generate_scenario(config: ScenarioConfig, seed: int) -> tuple[Layout, ChannelMatrix]:
    """Deterministic layout and channel for one (config, seed) pair."""
    user_xy = sample_user_positions(config, scenario_rng(seed))
    layout = build_layout(config, [(float(x), float(y)) for x, y in user_xy])
    return layout, build_channel_matrix(config, layout)


def apply_sweep_value(config: ScenarioConfig, variable: str, value) -> ScenarioConfig:
    if variable == "Pt_dBm":
        return replace(config, transmit_budget_P_t=dbm_to_watt(float(value)))
    if variable == "Pact_dBm":
        return replace(config, activation_power_P_act=dbm_to_watt(float(value)))
    if variable == "L":
        return replace(config, num_candidate_positions_L=int(value))
    raise ConfigError(f"unknown sweep variable {variable!r}")


def _record(config: ScenarioConfig, seed: int, scheme: benchmarks.SchemeId,
            outcome, outer: int, dinkelbach_total: int, L: int) -> TrialRecord:
    feasible = bool(outcome.feasible)
    return TrialRecord(
        seed=seed,
        K=config.num_users_K,
        L=L,
        Pt_dBm=watt_to_dbm(config.transmit_budget_P_t),
        Pact_dBm=watt_to_dbm(config.activation_power_P_act),
        scheme=scheme.value,
        ee_bits_per_joule=float(outcome.ee) if feasible else 0.0,
        sum_rate_bps=float(outcome.sum_rate) if feasible else 0.0,
        n_active=int(outcome.n_active),
        feasible=feasible,
        outer_iterations=int(outer),
        dinkelbach_iterations_total=int(dinkelbach_total),
    )


def _infeasible_record(config: ScenarioConfig, seed: int,
                       scheme: benchmarks.SchemeId) -> TrialRecord:
    return TrialRecord(
        seed=seed,
        K=config.num_users_K,
        L=config.num_candidate_positions_L,
        Pt_dBm=watt_to_dbm(config.transmit_budget_P_t),
        Pact_dBm=watt_to_dbm(config.activation_power_P_act),
        scheme=scheme.value,
        ee_bits_per_joule=0.0,
        sum_rate_bps=0.0,
        n_active=0,
        feasible=False,
        outer_iterations=0,
        dinkelbach_iterations_total=0,
    )


def run_trial(
    config: ScenarioConfig,
    seed: int,
    schemes: Sequence[benchmarks.SchemeId],
    exhaustive_cap: Optional[int] = None,
) -> list[TrialRecord]:
    """One scenario, every requested scheme on the same layout and channel."""
    layout, channel = generate_scenario(config, seed)
    records = []
    for scheme in schemes:
        if scheme is benchmarks.SchemeId.PROPOSED:
            try:
                state = run_matching(channel, config, matching_rng(seed))
            except InitializationInfeasible:
                records.append(_infeasible_record(config, seed, scheme))
                continue
            out = state.outcome
            records.append(
                _record(config, seed, scheme, out, out.outer_iterations,
                        out.dinkelbach_iterations, config.num_candidate_positions_L)
            )
        elif scheme is benchmarks.SchemeId.CONVENTIONAL:
            coeffs = benchmarks.feed_channel_coefficients(config, layout)
            outcome, trace = benchmarks.conventional_baseline(coeffs, config)
            records.append(
                _record(config, seed, scheme, outcome, 0, trace.iterations,
                        config.num_candidate_positions_L)
            )
        elif scheme is benchmarks.SchemeId.MIN_POWER:
            try:
                state = benchmarks.min_power_scheme(channel, config, matching_rng(seed))
            except InitializationInfeasible:
                records.append(_infeasible_record(config, seed, scheme))
                continue
            out = state.outcome
            records.append(
                _record(config, seed, scheme, out, out.outer_iterations,
                        out.dinkelbach_iterations, config.num_candidate_positions_L)
            )
        elif scheme is benchmarks.SchemeId.NEAREST:
            outcome, _, trace = benchmarks.nearest_pa_scheme(channel, layout, config)
            records.append(
                _record(config, seed, scheme, outcome, 0, trace.iterations,
                        config.num_candidate_positions_L)
            )
        elif scheme is benchmarks.SchemeId.EXHAUSTIVE:
            ex_config, ex_channel = config, channel
            if config.num_candidate_positions_L > EXHAUSTIVE_SWEEP_L:
                log.info(
                    "exhaustive scheme: reducing grid from L=%d to L=%d for seed %d",
                    config.num_candidate_positions_L, EXHAUSTIVE_SWEEP_L, seed,
                )
                ex_config = replace(config, num_candidate_positions_L=EXHAUSTIVE_SWEEP_L)
                ex_layout = build_layout(
                    ex_config, [(float(x), float(y)) for x, y, _ in layout.user_positions]
                )
                ex_channel = build_channel_matrix(ex_config, ex_layout)
            _, outcome, total_iter = benchmarks.best_activation(
                ex_channel, ex_config, max_subset_size=exhaustive_cap
            )
            records.append(
                _record(ex_config, seed, scheme, outcome, 0, total_iter,
                        ex_config.num_candidate_positions_L)
            )
        else:  # pragma: no cover - the enum is closed
            raise ConfigError(f"unknown scheme {scheme!r}")
    return records


def _trial_task(args) -> tuple:
    sort_value, config, seed, schemes, exhaustive_cap = args
    return sort_value, run_trial(config, seed, schemes, exhaustive_cap)


def run_sweep(
    spec: SweepSpec,
    exhaustive_cap: Optional[int] = None,
    workers: int = 1,
) -> list[TrialRecord]:
    """All (sweep value, trial, scheme) rows, sorted by (value, seed, scheme)."""
    tasks = []
    for value in spec.values:
        config = apply_sweep_value(spec.base_config, spec.variable, value)
        for trial in range(spec.num_trials):
            seed = spec.base_config.rng_seed + trial
            tasks.append((value, config, seed, tuple(spec.schemes), exhaustive_cap))

    keyed: list[tuple] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for value, records in pool.map(_trial_task, tasks, chunksize=1):
                keyed.extend((value, r) for r in records)
    else:
        for task in tasks:
            value, records = _trial_task(task)
            keyed.extend((value, r) for r in records)

    keyed.sort(key=lambda vr: (vr[0], vr[1].seed, vr[1].scheme))
    return [r for _, r in keyed]


def run_convergence(config: ScenarioConfig, seed: int) -> list[ConvergenceRecord]:
    """One accepted-move trace of the proposed search for one scenario."""
    _, channel = generate_scenario(config, seed)
    log_entries: list[tuple] = []
    run_matching(channel, config, matching_rng(seed), accept_log=log_entries)
    return [
        ConvergenceRecord(seed, i + 1, float(u), int(n))
        for i, (u, n) in enumerate(log_entries)
    ]


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_rows(path: str, fmt: str, header: Sequence[str], rows: list) -> None:
    if fmt == "csv":
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_format_value(getattr(row, f)) for f in header))
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        if not rows:
            text = "[]\n"
        else:
            body = []
            for row in rows:
                pairs = []
                for f in header:
                    value = getattr(row, f)
                    if isinstance(value, str):
                        pairs.append(f'"{f}": "{value}"')
                    else:
                        pairs.append(f'"{f}": {_format_value(value)}')
                body.append("  {" + ", ".join(pairs) + "}")
            text = "[\n" + ",\n".join(body) + "\n]\n"
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_results(records: list[TrialRecord], path: str, fmt: str = "csv") -> None:
    """Persist trial rows; floats carry 17 significant digits."""
    _write_rows(path, fmt, TRIAL_FIELDS, records)


def write_convergence(records: list[ConvergenceRecord], path: str, fmt: str = "csv") -> None:
    _write_rows(path, fmt, CONVERGENCE_FIELDS, records)


def _parse_field(name: str, raw) -> object:
    kind = {f.name: f.type for f in fields(TrialRecord)}[name]
    if kind == "bool" or name == "feasible":
        if isinstance(raw, bool):
            return raw
        return raw == "true"
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return str(raw)


def read_results(path: str, fmt: str = "csv") -> list[TrialRecord]:
    """Inverse of write_results, exact for every value written."""
    if fmt == "csv":
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line for line in fh.read().splitlines() if line]
        header = lines[0].split(",")
        if tuple(header) != TRIAL_FIELDS:
            raise ConfigError(f"{path}: unexpected CSV header {header!r}")
        out = []
        for line in lines[1:]:
            values = line.split(",")
            out.append(
                TrialRecord(**{
                    name: _parse_field(name, raw)
                    for name, raw in zip(TRIAL_FIELDS, values)
                })
            )
        return out
    if fmt == "json":
        import json

        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return [
            TrialRecord(**{name: _parse_field(name, row[name]) for name in TRIAL_FIELDS})
            for row in data
        ]
    raise ConfigError(f"unknown output format {fmt!r}")


@dataclass(frozen=True)
class GroupSummary:
    mean_ee: float
    mean_n_active: float
    feasible_count: int
    infeasible_count: int


def lookup_group(summary: dict, value, scheme: str) -> "GroupSummary":
    """Fetch a summarize() group, tolerating dBm->watt->dBm rounding.

    Swept dBm levels are stored in watts and re-derived for the records, a
    round trip that can be off by one ulp.
    """
    key = (value, scheme)
    if key in summary:
        return summary[key]
    for (stored, name), group in summary.items():
        if name == scheme and math.isclose(stored, value, rel_tol=1e-12, abs_tol=1e-12):
            return group
    raise KeyError(key)


def summarize(records: list[TrialRecord], variable: str) -> dict:
    """Per (sweep value, scheme) means over feasible trials only."""
    attr = {"Pt_dBm": "Pt_dBm", "Pact_dBm": "Pact_dBm", "L": "L"}[variable]
    groups: dict = {}
    for record in records:
        groups.setdefault((getattr(record, attr), record.scheme), []).append(record)
    out = {}
    for key, rows in groups.items():
        feasible = [r for r in rows if r.feasible]
        out[key] = GroupSummary(
            mean_ee=(
                sum(r.ee_bits_per_joule for r in feasible) / len(feasible)
                if feasible
                else float("nan")
            ),
            mean_n_active=(
                sum(r.n_active for r in feasible) / len(feasible)
                if feasible
                else float("nan")
            ),
            feasible_count=len(feasible),
            infeasible_count=len(rows) - len(feasible),
        )
    return out
