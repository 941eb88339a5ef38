"""Activation search: one-sided one-to-one matching with greedy sweeps.

Labels 1..N_m are matched injectively to candidate positions; the set of
occupied positions is the activation set.  Each sweep scans every (label,
position) pair in ascending order and immediately applies any strictly
utility-improving relocation, activation or removal, where utility is the
energy efficiency delivered by the inner power allocation.  A sweep with no
accepted move certifies that no single reassignment can improve the state,
which is the stopping rule.

Utilities are cached by activation set: two matchings occupying the same
positions differ only in labelling and share their utility.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional

import numpy as np

from . import power_alloc
from .channel import ChannelMatrix
from .config import ScenarioConfig
from .errors import ConvergenceFailure, InitializationInfeasible
from .link import EEOutcome, PowerAllocation

NEG_INF = float("-inf")

# Sweeps needed in practice are far fewer; exceeding this means the search
# is cycling, which the strict-improvement rule makes impossible unless the
# utility evaluation itself is broken.
SWEEP_CAP_FACTOR = 10


@dataclass(frozen=True)
class Matching:
    """Injective partial assignment of antenna labels to position indices."""

    assignment: tuple[Optional[int], ...]

    def __post_init__(self) -> None:
        seen = set()
        for n, pos in enumerate(self.assignment):
            if pos is None:
                continue
            if not isinstance(pos, int) or not (0 <= pos < len(self.assignment)):
                raise ValueError(f"label {n} assigned to invalid position {pos!r}")
            if pos in seen:
                raise ValueError(f"position {pos} occupied by two labels")
            seen.add(pos)

    @classmethod
    def empty(cls, num_labels: int) -> "Matching":
        return cls(tuple([None] * num_labels))

    @cached_property
    def active_positions(self) -> frozenset:
        return frozenset(p for p in self.assignment if p is not None)

    @property
    def num_labels(self) -> int:
        return len(self.assignment)

    @property
    def size(self) -> int:
        return len(self.active_positions)

    def assign(self, n: int, l: int) -> "Matching":
        updated = list(self.assignment)
        updated[n] = l
        return Matching(tuple(updated))

    def remove(self, n: int) -> "Matching":
        updated = list(self.assignment)
        updated[n] = None
        return Matching(tuple(updated))


@dataclass(frozen=True)
class MatchState:
    """A matching together with its evaluated utility and inner solution."""

    matching: Matching
    sic_order: Optional[np.ndarray]
    utility: float
    alpha_star: Optional[PowerAllocation]
    outcome: Optional[EEOutcome]


class _Evaluator:
    """Utility evaluation with a per-search cache keyed by activation set."""

    def __init__(
        self,
        channel: ChannelMatrix,
        config: ScenarioConfig,
        allocator: Optional[power_alloc.Allocator] = None,
    ):
        self.coefficients = channel.coefficients
        self.config = config
        self.allocator = allocator or power_alloc.solve_for_gains
        self.cache: dict = {}
        self.total_inner_iterations = 0

    def lookup(self, active: frozenset) -> tuple:
        """(utility, sic_order, alloc, outcome) for one activation set."""
        hit = self.cache.get(active)
        if hit is not None:
            return hit
        if not active:
            entry = (NEG_INF, None, None, None)
        else:
            idx = np.fromiter(active, dtype=np.intp)
            idx.sort()
            s = self.coefficients[:, idx].sum(axis=1)
            gains = s.real * s.real + s.imag * s.imag
            order = np.argsort(gains, kind="stable")
            alloc, outcome, trace = self.allocator(
                tuple(float(g) for g in gains[order]), len(active), self.config
            )
            self.total_inner_iterations += trace.iterations
            utility = outcome.ee if outcome.feasible else NEG_INF
            entry = (utility, order, alloc, outcome)
        self.cache[active] = entry
        return entry

    def state(self, matching: Matching) -> MatchState:
        utility, order, alloc, outcome = self.lookup(matching.active_positions)
        return MatchState(matching, order, utility, alloc, outcome)


def evaluate_matching(
    matching: Matching,
    channel: ChannelMatrix,
    config: ScenarioConfig,
    allocator: Optional[power_alloc.Allocator] = None,
) -> MatchState:
    return _Evaluator(channel, config, allocator).state(matching)


def utility(
    matching: Matching,
    channel: ChannelMatrix,
    config: ScenarioConfig,
    allocator: Optional[power_alloc.Allocator] = None,
) -> float:
    """Energy efficiency of a matching; -inf when empty or QoS-infeasible."""
    return evaluate_matching(matching, channel, config, allocator).utility


def candidate_moves(matching: Matching, n: int) -> list[Matching]:
    """All single reassignments of label n: free positions plus removal."""
    occupied = matching.active_positions
    current = matching.assignment[n]
    moves = [
        matching.assign(n, l)
        for l in range(matching.num_labels)
        if l not in occupied
    ]
    if current is not None:
        moves.append(matching.remove(n))
    return moves


def accept_if_better(
    current: MatchState,
    candidate: Matching,
    channel: ChannelMatrix,
    config: ScenarioConfig,
    allocator: Optional[power_alloc.Allocator] = None,
) -> MatchState:
    """Keep the candidate only on strict utility improvement."""
    cand_state = evaluate_matching(candidate, channel, config, allocator)
    return cand_state if cand_state.utility > current.utility else current


def _initial_matching(
    num_labels: int, num_users: int, rng: np.random.Generator
) -> Matching:
    # One antenna per user (capped by the grid size) at distinct random spots.
    m = min(num_users, num_labels)
    positions = rng.choice(num_labels, size=m, replace=False)
    assignment: list[Optional[int]] = [None] * num_labels
    for label, pos in enumerate(positions):
        assignment[label] = int(pos)
    return Matching(tuple(assignment))


def run_matching(
    channel: ChannelMatrix,
    config: ScenarioConfig,
    rng: np.random.Generator,
    allocator: Optional[power_alloc.Allocator] = None,
    accept_log: Optional[list] = None,
) -> MatchState:
    """Greedy matching search until no single reassignment improves utility.

    The returned state's outcome carries the number of sweeps executed
    (``outer_iterations``, including the final certifying sweep) and the
    total inner-solver iterations spent across all distinct activation sets
    (``dinkelbach_iterations``).  ``accept_log``, when given, receives one
    ``(utility, n_active)`` tuple per accepted move.
    """
    num_positions = channel.num_positions
    num_labels = num_positions
    ev = _Evaluator(channel, config, allocator)

    matching = _initial_matching(num_labels, channel.num_users, rng)
    cur_util = ev.lookup(matching.active_positions)[0]
    if cur_util == NEG_INF:
        # A dead start would leave hill climbing stuck below feasibility;
        # fall back to the best single activation, if any exists.
        best_l, best_util = -1, NEG_INF
        for l in range(num_positions):
            u = ev.lookup(frozenset((l,)))[0]
            if u > best_util:
                best_l, best_util = l, u
        if best_util == NEG_INF:
            raise InitializationInfeasible(
                "no single-position activation satisfies the rate floors"
            )
        matching = Matching.empty(num_labels).assign(0, best_l)
        cur_util = best_util

    assignment: list = list(matching.assignment)
    owner: list = [None] * num_positions
    for n, pos in enumerate(assignment):
        if pos is not None:
            owner[pos] = n
    active = matching.active_positions

    sweep_cap = SWEEP_CAP_FACTOR * num_labels
    sweeps = 0
    stable = False
    while sweeps < sweep_cap:
        sweeps += 1
        accepted_in_sweep = False
        for n in range(num_labels):
            for l in range(num_positions):
                pos_n = assignment[n]
                if owner[l] is None:
                    key = (
                        active | {l}
                        if pos_n is None
                        else (active - {pos_n}) | {l}
                    )
                elif pos_n == l:
                    key = active - {l}
                else:
                    continue
                if ev.lookup(key)[0] <= cur_util:
                    continue
                # apply the move in place
                if owner[l] is None:
                    if pos_n is not None:
                        owner[pos_n] = None
                    owner[l] = n
                    assignment[n] = l
                else:
                    owner[l] = None
                    assignment[n] = None
                active = key
                cur_util = ev.lookup(key)[0]
                accepted_in_sweep = True
                if accept_log is not None:
                    accept_log.append((cur_util, len(active)))
        if not accepted_in_sweep:
            stable = True
            break
    if not stable:
        raise ConvergenceFailure(
            f"matching search still accepting moves after {sweep_cap} sweeps"
        )

    final = Matching(tuple(assignment))
    utility_, order, alloc, outcome = ev.lookup(final.active_positions)
    if outcome is not None:
        outcome = replace(
            outcome,
            outer_iterations=sweeps,
            dinkelbach_iterations=ev.total_inner_iterations,
        )
    return MatchState(final, order, utility_, alloc, outcome)


def is_core_stable(
    state: MatchState,
    channel: ChannelMatrix,
    config: ScenarioConfig,
    allocator: Optional[power_alloc.Allocator] = None,
) -> bool:
    """True iff no single reassignment of any label strictly improves."""
    ev = _Evaluator(channel, config, allocator)
    for n in range(state.matching.num_labels):
        for candidate in candidate_moves(state.matching, n):
            if ev.lookup(candidate.active_positions)[0] > state.utility:
                return False
    return True
