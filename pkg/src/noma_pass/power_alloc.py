"""Optimal per-user power fractions for one fixed activation set.

With every user except the strongest pinned exactly at its minimum-rate
SINR, the whole allocation collapses to a single scalar: the fraction
alpha_K handed to the last-decoded user.  Summing the pinning recursion

    alpha_k = gamma * sum_{j > k} alpha_j + C_k,   C_k = gamma * sigma^2 * N / (Pt * g_k)

gives sum(alpha) = A_sum * alpha_K + B_sum with A_sum = (1 + gamma)^(K-1)
and B_sum = sum_{i=1}^{K-1} C_i (1 + gamma)^(i-1).  The efficiency ratio
then has a closed-form stationary point in alpha_K per Dinkelbach step, so
the whole inner problem is solved by a handful of scalar updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import link
from .channel import ChannelMatrix, effective_gains, sic_order
from .config import ScenarioConfig
from .errors import ConvergenceFailure, Infeasible, NonPositiveBeta, ZeroGain

_LN2 = math.log(2.0)

# Hard cap; the ratio iteration converges superlinearly and is expected to
# terminate in well under 50 steps.
MAX_DINKELBACH_ITERATIONS = 1000


@dataclass(frozen=True)
class QosStructure:
    """Aggregated QoS constants for gains sorted in SIC order."""

    gamma: float
    C: tuple[float, ...]
    A_sum: float
    B_sum: float
    alpha_K_min: float
    alpha_K_max: float

    @property
    def feasible(self) -> bool:
        return self.alpha_K_min <= self.alpha_K_max and self.B_sum < 1.0


@dataclass(frozen=True)
class DinkelbachTrace:
    """Ratio iterates of one solve; the head entry is the equal-split seed.

    The seed rates a point that may violate the rate floors, so only the
    entries after it form the guaranteed non-decreasing chain.
    """

    beta_sequence: tuple[float, ...]
    iterations: int
    converged: bool


def _circuit_power(n_active: int, config: ScenarioConfig, circuit_power: Optional[float]) -> float:
    if circuit_power is None:
        return config.static_power_P_static + n_active * config.activation_power_P_act
    return circuit_power


def build_qos(gains: Sequence[float], n_active: int, config: ScenarioConfig) -> QosStructure:
    """QoS constants for ascending-sorted effective gains."""
    k_users = len(gains)
    if min(gains) <= 0.0:
        raise ZeroGain("effective channel gain is zero; QoS unreachable")
    gamma = link.sinr_target(config)
    scale = gamma * config.noise_power * n_active / config.transmit_budget_P_t
    c = tuple(scale / float(g) for g in gains)
    a_sum = (1.0 + gamma) ** (k_users - 1)
    b_sum = 0.0
    weight = 1.0
    for j in range(k_users - 1):
        b_sum += c[j] * weight
        weight *= 1.0 + gamma
    return QosStructure(
        gamma=gamma,
        C=c,
        A_sum=a_sum,
        B_sum=b_sum,
        alpha_K_min=c[-1],
        alpha_K_max=min(1.0, (1.0 - b_sum) / a_sum),
    )


def qos_recursion(alpha_K: float, qos: QosStructure, k_users: int) -> link.PowerAllocation:
    """Expand the scalar alpha_K into the full allocation, back to front."""
    alpha = [0.0] * k_users
    alpha[-1] = alpha_K
    tail = 0.0
    for k in range(k_users - 2, -1, -1):
        tail += alpha[k + 1]
        alpha[k] = qos.gamma * tail + qos.C[k]
    return link.PowerAllocation(np.array(alpha))


def stationary_alpha_K(
    beta: float,
    qos: QosStructure,
    gains: Sequence[float],
    n_active: int,
    config: ScenarioConfig,
) -> float:
    """Unconstrained maximizer of rate minus beta times power, in alpha_K."""
    if beta <= 0.0:
        raise NonPositiveBeta(f"Dinkelbach parameter must be > 0, got {beta!r}")
    d1 = config.transmit_budget_P_t / config.amplifier_efficiency_eta * qos.A_sum
    offset = n_active * config.noise_power / (config.transmit_budget_P_t * float(gains[-1]))
    return config.bandwidth_B / (_LN2 * beta * d1) - offset


def clamp_alpha_K(stationary: float, qos: QosStructure) -> float:
    if qos.alpha_K_min > qos.alpha_K_max:
        raise Infeasible(
            f"empty feasible interval [{qos.alpha_K_min}, {qos.alpha_K_max}]"
        )
    return min(qos.alpha_K_max, max(qos.alpha_K_min, stationary))


def dinkelbach_init(
    gains: Sequence[float],
    n_active: int,
    config: ScenarioConfig,
    circuit_power: Optional[float] = None,
) -> float:
    """Seed ratio: the efficiency of a plain equal split alpha_k = 1/K.

    The split may violate the per-user rate floors; it only serves as a
    starting ratio.  Written in closed form (interference = (K-1-k)/K of the
    received power) so it stays an independent arithmetic path from the
    running-sum rate evaluation used elsewhere.
    """
    k_users = len(gains)
    share = config.transmit_budget_P_t / n_active
    sigma2 = config.noise_power
    total_rate = 0.0
    for k in range(k_users):
        received = share * float(gains[k])
        interference = received * (k_users - 1 - k) / k_users
        total_rate += config.bandwidth_B * math.log2(
            1.0 + (received / k_users) / (interference + sigma2)
        )
    power = (
        _circuit_power(n_active, config, circuit_power)
        + config.transmit_budget_P_t / config.amplifier_efficiency_eta
    )
    return total_rate / power


def beta_update(
    alpha_K_star: float,
    qos: QosStructure,
    gains: Sequence[float],
    n_active: int,
    config: ScenarioConfig,
    circuit_power: Optional[float] = None,
) -> float:
    """Ratio at the pinned allocation: closed-form rate over affine power."""
    k_users = len(gains)
    snr_slope = config.transmit_budget_P_t * float(gains[-1]) / (n_active * config.noise_power)
    f = (k_users - 1) * config.min_rate_R_min + config.bandwidth_B * math.log2(
        1.0 + snr_slope * alpha_K_star
    )
    g = (
        config.transmit_budget_P_t
        / config.amplifier_efficiency_eta
        * (qos.A_sum * alpha_K_star + qos.B_sum)
        + _circuit_power(n_active, config, circuit_power)
    )
    return f / g


def _infeasible_outcome(
    k_users: int, n_active: int, circuit: float
) -> link.EEOutcome:
    return link.EEOutcome(
        rates=np.zeros(k_users),
        sum_rate=0.0,
        total_power=circuit,
        ee=float("-inf"),
        n_active=n_active,
        feasible=False,
    )


def evaluate_at_alpha_K(
    alpha_K: float,
    gains: Sequence[float],
    n_active: int,
    config: ScenarioConfig,
    circuit_power: Optional[float] = None,
) -> tuple[link.PowerAllocation, link.EEOutcome]:
    """Outcome of the pinned allocation at a given alpha_K (no optimization)."""
    qos = build_qos(gains, n_active, config)
    alloc = qos_recursion(alpha_K, qos, len(gains))
    rates = link.rates_for_allocation(alloc.alpha, gains, config, n_active)
    total = (
        config.transmit_budget_P_t / config.amplifier_efficiency_eta * alloc.total
        + _circuit_power(n_active, config, circuit_power)
    )
    sum_rate = float(rates.sum())
    outcome = link.EEOutcome(
        rates=rates,
        sum_rate=sum_rate,
        total_power=total,
        ee=sum_rate / total,
        n_active=n_active,
        feasible=True,
    )
    return alloc, outcome


def solve_for_gains(
    gains: Sequence[float],
    n_active: int,
    config: ScenarioConfig,
    circuit_power: Optional[float] = None,
) -> tuple[Optional[link.PowerAllocation], link.EEOutcome, DinkelbachTrace]:
    """Dinkelbach iteration over the scalarized problem.

    ``gains`` must be sorted ascending.  Infeasible QoS (including a zero
    gain) is reported through the outcome, never raised.
    """
    k_users = len(gains)
    circuit = _circuit_power(n_active, config, circuit_power)
    try:
        qos = build_qos(gains, n_active, config)
    except ZeroGain:
        return None, _infeasible_outcome(k_users, n_active, circuit), DinkelbachTrace((), 0, False)
    if not qos.feasible:
        return None, _infeasible_outcome(k_users, n_active, circuit), DinkelbachTrace((), 0, False)

    beta = dinkelbach_init(gains, n_active, config, circuit_power)
    betas = [beta]
    alpha_k_star = qos.alpha_K_max
    converged = False
    for _ in range(MAX_DINKELBACH_ITERATIONS):
        if beta <= 0.0:
            # Zero-rate ratio can only appear with a zero QoS target and a
            # clamped-to-zero allocation; the subproblem then maximizes the
            # bare rate, i.e. pushes alpha_K to its upper end.
            alpha_k_star = qos.alpha_K_max
        else:
            alpha_k_star = clamp_alpha_K(
                stationary_alpha_K(beta, qos, gains, n_active, config), qos
            )
        new_beta = beta_update(alpha_k_star, qos, gains, n_active, config, circuit_power)
        betas.append(new_beta)
        if abs(new_beta - beta) <= config.dinkelbach_tolerance_eps:
            beta = new_beta
            converged = True
            break
        beta = new_beta
    if not converged:
        raise ConvergenceFailure(
            f"no ratio convergence within {MAX_DINKELBACH_ITERATIONS} iterations; "
            f"last iterates {betas[-3:]}, n_active={n_active}, K={k_users}"
        )

    alloc = qos_recursion(alpha_k_star, qos, k_users)
    rates = link.rates_for_allocation(alloc.alpha, gains, config, n_active)
    sum_rate = float(rates.sum())
    total = (
        config.transmit_budget_P_t / config.amplifier_efficiency_eta * alloc.total + circuit
    )
    outcome = link.EEOutcome(
        rates=rates,
        sum_rate=sum_rate,
        total_power=total,
        ee=sum_rate / total,
        n_active=n_active,
        feasible=True,
        dinkelbach_iterations=len(betas) - 1,
    )
    return alloc, outcome, DinkelbachTrace(tuple(betas), len(betas) - 1, True)


# Signature shared by the optimal and the pinned-minimum allocation rules,
# so the activation search can swap them.
Allocator = Callable[
    [Sequence[float], int, ScenarioConfig],
    tuple[Optional[link.PowerAllocation], link.EEOutcome, DinkelbachTrace],
]


def min_power_allocator(
    gains: Sequence[float],
    n_active: int,
    config: ScenarioConfig,
    circuit_power: Optional[float] = None,
) -> tuple[Optional[link.PowerAllocation], link.EEOutcome, DinkelbachTrace]:
    """Allocation rule that leaves every user exactly at its rate floor."""
    k_users = len(gains)
    circuit = _circuit_power(n_active, config, circuit_power)
    try:
        qos = build_qos(gains, n_active, config)
    except ZeroGain:
        return None, _infeasible_outcome(k_users, n_active, circuit), DinkelbachTrace((), 0, False)
    if not qos.feasible:
        return None, _infeasible_outcome(k_users, n_active, circuit), DinkelbachTrace((), 0, False)
    alloc, outcome = evaluate_at_alpha_K(
        qos.alpha_K_min, gains, n_active, config, circuit_power
    )
    return alloc, outcome, DinkelbachTrace((outcome.ee,), 0, True)


def solve_power_allocation(
    active: Iterable[int],
    channel: ChannelMatrix,
    config: ScenarioConfig,
    circuit_power: Optional[float] = None,
) -> tuple[Optional[link.PowerAllocation], link.EEOutcome, DinkelbachTrace]:
    """Solve the inner problem for one activation set of a channel matrix."""
    active = tuple(active)
    order = sic_order(active, channel)
    gains = effective_gains(active, channel)[order]
    return solve_for_gains(
        tuple(float(g) for g in gains), len(active), config, circuit_power
    )
