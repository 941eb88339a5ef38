"""Achievable NOMA rates under SIC and the consumed-power accounting.

Everything here works on gains and allocations that are already in SIC
order (ascending effective gain); no reordering happens internally.  The
transmit power is split evenly over the N active positions, so user k sees

    rate_k = B * log2(1 + (Pt/N) g_k a_k / ((Pt/N) g_k * sum_{j>k} a_j + sigma^2))

and the last user decodes interference free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import ScenarioConfig

BUDGET_SLACK = 1e-9  # numeric slack on sum(alpha) <= 1


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user power fractions, indexed in SIC order."""

    alpha: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.alpha, dtype=float)
        object.__setattr__(self, "alpha", a)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("alpha must be a non-empty vector")
        if np.any(a < 0.0):
            raise ValueError(f"negative power fraction in {a!r}")
        if float(a.sum()) > 1.0 + BUDGET_SLACK:
            raise ValueError(f"power fractions sum to {a.sum()!r} > 1")

    @property
    def total(self) -> float:
        return float(self.alpha.sum())


@dataclass(frozen=True)
class EEOutcome:
    """Result of one energy-efficiency evaluation."""

    rates: np.ndarray        # bits/s, SIC order
    sum_rate: float          # bits/s
    total_power: float       # W
    ee: float                # bits/joule; -inf when infeasible
    n_active: int
    feasible: bool
    dinkelbach_iterations: int = 0
    outer_iterations: int = 0

    def as_dict(self) -> dict:
        return {
            "rates": [float(r) for r in self.rates],
            "sum_rate": self.sum_rate,
            "total_power": self.total_power,
            "ee": self.ee,
            "n_active": self.n_active,
            "feasible": self.feasible,
            "dinkelbach_iterations": self.dinkelbach_iterations,
            "outer_iterations": self.outer_iterations,
        }


def sinr_target(config: ScenarioConfig) -> float:
    """SINR every user needs to reach the minimum rate."""
    return 2.0 ** (config.min_rate_R_min / config.bandwidth_B) - 1.0


def achievable_rate(
    k: int,
    alloc: PowerAllocation,
    gains: Sequence[float],
    config: ScenarioConfig,
    n_active: int,
) -> float:
    """Rate of the user at SIC stage k (0-based), bits/s."""
    share = config.transmit_budget_P_t / n_active
    received = share * float(gains[k])
    interference = received * float(np.sum(alloc.alpha[k + 1 :]))
    signal = received * float(alloc.alpha[k])
    return config.bandwidth_B * math.log2(1.0 + signal / (interference + config.noise_power))


def rates_for_allocation(
    alpha: Sequence[float],
    gains: Sequence[float],
    config: ScenarioConfig,
    n_active: int,
) -> np.ndarray:
    """All per-user rates for one allocation, bits/s in SIC order."""
    share = config.transmit_budget_P_t / n_active
    sigma2 = config.noise_power
    bw = config.bandwidth_B
    k_users = len(alpha)
    out = np.empty(k_users, dtype=float)
    tail = 0.0  # sum of alpha_j for j > k, built back to front
    for k in range(k_users - 1, -1, -1):
        received = share * float(gains[k])
        out[k] = bw * math.log2(1.0 + received * float(alpha[k]) / (received * tail + sigma2))
        tail += float(alpha[k])
    return out


def total_power(alloc: PowerAllocation, n_active: int, config: ScenarioConfig) -> float:
    """Static + amplifier + activation power, W."""
    return (
        config.static_power_P_static
        + config.transmit_budget_P_t / config.amplifier_efficiency_eta * alloc.total
        + n_active * config.activation_power_P_act
    )
