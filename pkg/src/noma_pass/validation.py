"""Self-contained correctness checks runnable from the CLI.

The centerpiece is a brute-force reference for the inner allocation: it
never touches the closed-form aggregates used by the solver.  Instead it
expands the rate-floor recursion literally over a dense grid of the free
scalar, finds the budget edge by bisection, and scores every grid point
through the plain rate and power formulas.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import benchmarks, link, power_alloc
from .config import ScenarioConfig, dbm_to_watt, with_overrides
from .experiment import generate_scenario, matching_rng
from .matching import is_core_stable, run_matching

DEFAULT_GRID_POINTS = 100_001


def _literal_alpha_grid(
    alpha_K: np.ndarray, gamma: float, c: np.ndarray
) -> np.ndarray:
    """Expand the rate-floor recursion for every grid value of alpha_K.

    Returns an array of shape (K, G) where column g is the full allocation
    for alpha_K = alpha_K[g].
    """
    k_users = c.shape[0]
    alpha = np.zeros((k_users, alpha_K.shape[0]))
    alpha[-1] = alpha_K
    tail = np.zeros_like(alpha_K)
    for k in range(k_users - 2, -1, -1):
        tail += alpha[k + 1]
        alpha[k] = gamma * tail + c[k]
    return alpha


def _literal_rates(
    alpha: np.ndarray, gains: np.ndarray, config: ScenarioConfig, n_active: int
) -> np.ndarray:
    share = config.transmit_budget_P_t / n_active
    sigma2 = dbm_to_watt(config.noise_psd_N0) * config.bandwidth_B
    received = share * gains[:, None] * alpha
    tail = np.flip(np.cumsum(np.flip(alpha, axis=0), axis=0), axis=0) - alpha
    interference = share * gains[:, None] * tail
    return config.bandwidth_B * np.log2(1.0 + received / (interference + sigma2))


def grid_search_reference(
    gains: np.ndarray,
    n_active: int,
    config: ScenarioConfig,
    circuit_power: Optional[float] = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> Optional[float]:
    """Best efficiency over a dense alpha_K grid; None when infeasible."""
    gains = np.sort(np.asarray(gains, dtype=float))
    if gains[0] <= 0.0:
        return None
    k_users = gains.shape[0]
    gamma = 2.0 ** (config.min_rate_R_min / config.bandwidth_B) - 1.0
    sigma2 = dbm_to_watt(config.noise_psd_N0) * config.bandwidth_B
    c = gamma * sigma2 * n_active / (config.transmit_budget_P_t * gains)
    alpha_min = float(c[-1])

    def total_alpha(alpha_K: float) -> float:
        grid = np.array([alpha_K])
        return float(_literal_alpha_grid(grid, gamma, c).sum(axis=0)[0])

    if alpha_min > 1.0 or total_alpha(alpha_min) > 1.0:
        return None
    if total_alpha(1.0) <= 1.0:
        alpha_max = 1.0
    else:
        lo, hi = alpha_min, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if total_alpha(mid) <= 1.0:
                lo = mid
            else:
                hi = mid
        alpha_max = lo

    grid = np.linspace(alpha_min, alpha_max, grid_points)
    alpha = _literal_alpha_grid(grid, gamma, c)
    rates = _literal_rates(alpha, gains, config, n_active)
    circuit = (
        config.static_power_P_static + n_active * config.activation_power_P_act
        if circuit_power is None
        else circuit_power
    )
    power = (
        config.transmit_budget_P_t / config.amplifier_efficiency_eta * alpha.sum(axis=0)
        + circuit
    )
    return float(np.max(rates.sum(axis=0) / power))


def random_inner_instance(rng: np.random.Generator) -> tuple:
    """A random (gains, n_active, config) triple at desk scale."""
    k_users = int(rng.integers(1, 6))
    num_positions = int(rng.integers(4, 11))
    n_active = int(rng.integers(1, num_positions + 1))
    config = ScenarioConfig(
        num_users_K=k_users,
        num_candidate_positions_L=num_positions,
        transmit_budget_P_t=dbm_to_watt(float(rng.uniform(-10.0, 30.0))),
        activation_power_P_act=dbm_to_watt(float(rng.uniform(1.0, 13.0))),
        min_rate_R_min=float(rng.choice([0.5, 1.0, 2.0])) * 10e6,
        rng_seed=0,
    )
    # Log-uniform effective gains spanning the geometry's realistic range.
    gains = np.sort(10.0 ** rng.uniform(-10.5, -7.0, size=k_users))
    return tuple(float(g) for g in gains), n_active, config


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def check_inner_oracle(
    num_instances: int = 60, seed: int = 2001, grid_points: int = DEFAULT_GRID_POINTS
) -> CheckResult:
    """Dinkelbach efficiency vs the dense-grid reference, 1e-4 relative."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    compared = 0
    for _ in range(num_instances):
        gains, n_active, config = random_inner_instance(rng)
        reference = grid_search_reference(
            np.array(gains), n_active, config, grid_points=grid_points
        )
        _, outcome, _ = power_alloc.solve_for_gains(gains, n_active, config)
        if reference is None:
            if outcome.feasible:
                return CheckResult(
                    "inner_oracle", False,
                    f"solver feasible where the reference is not: {gains}",
                    time.perf_counter() - t0,
                )
            continue
        if not outcome.feasible:
            return CheckResult(
                "inner_oracle", False,
                f"solver infeasible where the reference is not: {gains}",
                time.perf_counter() - t0,
            )
        compared += 1
        worst = max(worst, abs(outcome.ee - reference) / reference)
    passed = worst <= 1e-4 and compared > 0
    return CheckResult(
        "inner_oracle", passed,
        f"{compared}/{num_instances} feasible, worst relative gap {worst:.3e}",
        time.perf_counter() - t0,
    )


def check_identities(num_draws: int = 2000, seed: int = 2002) -> CheckResult:
    """Closed-form aggregates vs literal recursion, and rate/power identities."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_sum = worst_rate = worst_power = 0.0
    for _ in range(num_draws):
        gains, n_active, config = random_inner_instance(rng)
        k_users = len(gains)
        try:
            qos = power_alloc.build_qos(gains, n_active, config)
        except Exception:
            continue
        if not qos.feasible:
            continue
        alpha_k = float(rng.uniform(qos.alpha_K_min, qos.alpha_K_max))
        alloc = power_alloc.qos_recursion(alpha_k, qos, k_users)
        # aggregate identity
        predicted = qos.A_sum * alpha_k + qos.B_sum
        worst_sum = max(worst_sum, abs(alloc.total - predicted) / max(predicted, 1e-300))
        # closed-form rate vs per-user rates
        f = (k_users - 1) * config.min_rate_R_min + config.bandwidth_B * math.log2(
            1.0
            + config.transmit_budget_P_t
            * gains[-1]
            / (n_active * config.noise_power)
            * alpha_k
        )
        rates = link.rates_for_allocation(alloc.alpha, gains, config, n_active)
        worst_rate = max(worst_rate, abs(f - float(rates.sum())) / f)
        # affine power vs accounted power
        g = (
            config.transmit_budget_P_t
            / config.amplifier_efficiency_eta
            * (qos.A_sum * alpha_k + qos.B_sum)
            + config.static_power_P_static
            + n_active * config.activation_power_P_act
        )
        accounted = link.total_power(alloc, n_active, config)
        worst_power = max(worst_power, abs(g - accounted) / accounted)
    passed = worst_sum <= 1e-12 and worst_rate <= 1e-6 and worst_power <= 1e-12
    return CheckResult(
        "algebraic_identities", passed,
        f"sum {worst_sum:.2e} (<=1e-12), rate {worst_rate:.2e} (<=1e-6), "
        f"power {worst_power:.2e} (<=1e-12)",
        time.perf_counter() - t0,
    )


def check_monotone_traces(num_runs: int = 100, seed: int = 2003) -> CheckResult:
    """Strictly increasing accepted utilities; non-decreasing ratio iterates."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    utility_violations = beta_violations = 0
    for _ in range(num_runs):
        config = ScenarioConfig(
            num_users_K=int(rng.integers(1, 6)),
            num_candidate_positions_L=int(rng.integers(4, 11)),
            transmit_budget_P_t=dbm_to_watt(float(rng.uniform(0.0, 30.0))),
            rng_seed=0,
        )
        scenario_seed = int(rng.integers(0, 2**31))
        _, channel = generate_scenario(config, scenario_seed)

        traces = []

        def tracking_allocator(gains, n_active, cfg):
            result = power_alloc.solve_for_gains(gains, n_active, cfg)
            traces.append(result[2])
            return result

        log_entries: list = []
        run_matching(
            channel, config, matching_rng(scenario_seed),
            allocator=tracking_allocator, accept_log=log_entries,
        )
        utilities = [u for u, _ in log_entries]
        if any(b <= a for a, b in zip(utilities, utilities[1:])):
            utility_violations += 1
        for trace in traces:
            # Monotone from the first computed iterate; the seed ratio of the
            # floor-violating equal split is excluded, and the slack covers
            # sub-ulp rounding at the convergence plateau.
            iterates = trace.beta_sequence[1:]
            if any(
                b < a * (1.0 - 1e-12) for a, b in zip(iterates, iterates[1:])
            ):
                beta_violations += 1
                break
    passed = utility_violations == 0 and beta_violations == 0
    return CheckResult(
        "monotone_traces", passed,
        f"{num_runs} runs, utility violations {utility_violations}, "
        f"beta violations {beta_violations}",
        time.perf_counter() - t0,
    )


def check_dominance(num_instances: int = 15, seed: int = 2004) -> CheckResult:
    """Exhaustive >= proposed >= initial state; exhaustive >= nearest."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    gaps = []
    for _ in range(num_instances):
        config = ScenarioConfig(
            num_users_K=int(rng.integers(1, 6)),
            num_candidate_positions_L=int(rng.integers(4, 11)),
            rng_seed=0,
        )
        scenario_seed = int(rng.integers(0, 2**31))
        layout, channel = generate_scenario(config, scenario_seed)
        exhaustive = benchmarks.exhaustive_search(channel, config)
        state = run_matching(channel, config, matching_rng(scenario_seed))
        nearest, _, _ = benchmarks.nearest_pa_scheme(channel, layout, config)
        tol = 1e-9 * abs(exhaustive.ee)
        if state.utility > exhaustive.ee + tol:
            return CheckResult(
                "dominance", False,
                f"local search beat full enumeration: {state.utility} > {exhaustive.ee}",
                time.perf_counter() - t0,
            )
        if nearest.feasible and nearest.ee > exhaustive.ee + tol:
            return CheckResult(
                "dominance", False,
                f"nearest beat full enumeration: {nearest.ee} > {exhaustive.ee}",
                time.perf_counter() - t0,
            )
        if not is_core_stable(state, channel, config):
            return CheckResult(
                "dominance", False, "returned matching is not stable",
                time.perf_counter() - t0,
            )
        gaps.append((exhaustive.ee - state.utility) / exhaustive.ee)
    mean_gap = sum(gaps) / len(gaps)
    return CheckResult(
        "dominance", True,
        f"{num_instances} instances, mean gap to enumeration {mean_gap:.3%}",
        time.perf_counter() - t0,
    )


def check_determinism(seed: int = 2005) -> CheckResult:
    """Identical sweep bytes across two runs of the same spec."""
    import tempfile
    from pathlib import Path

    from . import experiment

    t0 = time.perf_counter()
    config = with_overrides(
        ScenarioConfig(), num_candidate_positions_L=8, num_users_K=3, rng_seed=seed
    )
    spec = experiment.SweepSpec(
        variable="Pt_dBm",
        values=(0.0, 10.0),
        schemes=(
            benchmarks.SchemeId.PROPOSED,
            benchmarks.SchemeId.CONVENTIONAL,
            benchmarks.SchemeId.MIN_POWER,
            benchmarks.SchemeId.NEAREST,
        ),
        num_trials=3,
        base_config=config,
    )
    with tempfile.TemporaryDirectory() as tmp:
        first = Path(tmp) / "a.csv"
        second = Path(tmp) / "b.csv"
        experiment.write_results(experiment.run_sweep(spec), str(first))
        experiment.write_results(experiment.run_sweep(spec), str(second))
        identical = first.read_bytes() == second.read_bytes()
    return CheckResult(
        "determinism", identical,
        "byte-identical sweep output" if identical else "sweep output differs",
        time.perf_counter() - t0,
    )


def run_all(fast: bool = False) -> list[CheckResult]:
    if fast:
        return [
            check_identities(num_draws=300),
            check_inner_oracle(num_instances=15, grid_points=20_001),
            check_monotone_traces(num_runs=20),
            check_dominance(num_instances=5),
            check_determinism(),
        ]
    return [
        check_identities(),
        check_inner_oracle(),
        check_monotone_traces(),
        check_dominance(),
        check_determinism(),
    ]
