"""Comparison schemes sharing the same inner power allocation.

All schemes differ only in how the radiating positions are chosen (and, for
the fixed-antenna baseline, in the power model), so efficiency differences
between them isolate the activation strategy.
"""

from __future__ import annotations

import itertools
from enum import Enum
from typing import Optional

import numpy as np

from . import power_alloc
from .channel import ChannelMatrix, Layout, _distance, _freespace_factors, user_position_distances
from .config import ScenarioConfig
from .errors import SearchSpaceTooLarge
from .link import EEOutcome
from .matching import MatchState, run_matching

# Full subset enumeration beyond this grid size needs an explicit opt-in.
EXHAUSTIVE_GUARD_L = 14


class SchemeId(str, Enum):
    PROPOSED = "proposed"
    CONVENTIONAL = "conventional"
    MIN_POWER = "min_power"
    NEAREST = "nearest"
    EXHAUSTIVE = "exhaustive"


def feed_channel_coefficients(config: ScenarioConfig, layout: Layout) -> np.ndarray:
    """Free-space coefficients from the feed point itself to every user."""
    distances = _distance(layout.user_positions - layout.feed_point)
    return _freespace_factors(config, distances)


def conventional_baseline(
    channel_at_feed: np.ndarray, config: ScenarioConfig
) -> tuple[EEOutcome, power_alloc.DinkelbachTrace]:
    """Single fixed antenna at the feed point; no activation power is spent."""
    gains = channel_at_feed.real**2 + channel_at_feed.imag**2
    gains = np.sort(gains, kind="stable")
    _, outcome, trace = power_alloc.solve_for_gains(
        tuple(float(g) for g in gains),
        n_active=1,
        config=config,
        circuit_power=config.static_power_P_static,
    )
    return outcome, trace


def min_power_scheme(
    channel: ChannelMatrix, config: ScenarioConfig, rng: np.random.Generator
) -> MatchState:
    """Matching search whose utility is the rate-floor-only allocation."""
    return run_matching(channel, config, rng, allocator=power_alloc.min_power_allocator)


def nearest_pa_scheme(
    channel: ChannelMatrix, layout: Layout, config: ScenarioConfig
) -> tuple[EEOutcome, frozenset, power_alloc.DinkelbachTrace]:
    """Activate, for each user, the geometrically closest candidate."""
    distances = user_position_distances(layout)
    chosen = frozenset(int(np.argmin(distances[k])) for k in range(layout.num_users))
    alloc, outcome, trace = power_alloc.solve_power_allocation(chosen, channel, config)
    return outcome, chosen, trace


def best_activation(
    channel: ChannelMatrix,
    config: ScenarioConfig,
    max_subset_size: Optional[int] = None,
    allow_large: bool = False,
) -> tuple[frozenset, EEOutcome, int]:
    """Enumerate activation subsets and keep the best efficiency.

    Ties go to the smaller subset, then to the lexicographically smallest
    one.  Also returns the total inner-solver iterations spent.
    """
    num_positions = channel.num_positions
    if num_positions > EXHAUSTIVE_GUARD_L and not allow_large:
        raise SearchSpaceTooLarge(
            f"{num_positions} candidate positions exceed the enumeration guard "
            f"({EXHAUSTIVE_GUARD_L}); pass allow_large=True to force it"
        )
    cap = num_positions if max_subset_size is None else max_subset_size
    if cap < 1:
        raise ValueError("max_subset_size must be >= 1")
    cap = min(cap, num_positions)

    best_key: Optional[tuple] = None
    best: Optional[tuple] = None
    total_iterations = 0
    for size in range(1, cap + 1):
        for combo in itertools.combinations(range(num_positions), size):
            alloc, outcome, trace = power_alloc.solve_power_allocation(
                combo, channel, config
            )
            total_iterations += trace.iterations
            ee = outcome.ee if outcome.feasible else float("-inf")
            key = (-ee, size, combo)
            if best_key is None or key < best_key:
                best_key = key
                best = (frozenset(combo), outcome)
    assert best is not None  # cap >= 1 guarantees at least one subset
    return best[0], best[1], total_iterations


def exhaustive_search(
    channel: ChannelMatrix,
    config: ScenarioConfig,
    max_subset_size: Optional[int] = None,
    allow_large: bool = False,
) -> EEOutcome:
    _, outcome, _ = best_activation(channel, config, max_subset_size, allow_large)
    return outcome
