"""Geometry and deterministic channel coefficients.

The link from the feed point to a user through one candidate position
factorizes into an in-waveguide part and a free-space part:

    waveguide:  sqrt(10^(-kappa * L_l / 10)) * exp(-j * 2*pi * L_l / lambda_g)
    free space: (lambda / (4*pi*d_kl)) * exp(-j * 2*pi * d_kl / lambda)

with L_l the distance from the feed point to position l along the guide and
d_kl the 3-D distance from position l to user k.  A user's effective power
gain for a set of active positions is the squared magnitude of the coherent
sum of the per-position coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import ScenarioConfig
from .errors import EmptyActivation, OutOfRegion


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Layout:
    """Feed point, candidate positions and user positions, all in meters."""

    feed_point: np.ndarray          # (3,)
    candidate_positions: np.ndarray  # (L, 3), on the waveguide at height d
    user_positions: np.ndarray      # (K, 3), on the ground plane z = 0

    @property
    def num_positions(self) -> int:
        return self.candidate_positions.shape[0]

    @property
    def num_users(self) -> int:
        return self.user_positions.shape[0]


def build_layout(config: ScenarioConfig, user_xy: Sequence[tuple[float, float]]) -> Layout:
    """Place the uniform candidate grid and validate the user drop.

    Candidates span [0, D2] inclusive of both ends; a single candidate sits
    at the middle of the guide.  Users must lie inside the served rectangle.
    """
    if len(user_xy) != config.num_users_K:
        raise OutOfRegion(
            f"expected {config.num_users_K} users, got {len(user_xy)} positions"
        )
    d2 = config.region_length_D2
    half_width = config.region_width_D1 / 2.0
    users = np.zeros((len(user_xy), 3), dtype=float)
    for k, (x, y) in enumerate(user_xy):
        if not (0.0 <= x <= d2) or not (-half_width <= y <= half_width):
            raise OutOfRegion(
                f"user {k} at ({x}, {y}) outside [0, {d2}] x [{-half_width}, {half_width}]"
            )
        users[k, 0] = x
        users[k, 1] = y

    n = config.num_candidate_positions_L
    if n == 1:
        xs = np.array([d2 / 2.0])
    else:
        xs = np.linspace(0.0, d2, n)
    candidates = np.zeros((n, 3), dtype=float)
    candidates[:, 0] = xs
    candidates[:, 2] = config.waveguide_height_d

    feed = np.array([0.0, 0.0, config.waveguide_height_d])
    return Layout(
        feed_point=_readonly(feed),
        candidate_positions=_readonly(candidates),
        user_positions=_readonly(users),
    )


def _distance(delta: np.ndarray) -> np.ndarray:
    # Shared by the scalar and vectorized paths so both produce identical bits.
    return np.sqrt((delta[..., 0] ** 2 + delta[..., 1] ** 2) + delta[..., 2] ** 2)


def feed_path_lengths(layout: Layout) -> np.ndarray:
    """Distance along the guide from the feed point to each candidate, (L,)."""
    return _distance(layout.candidate_positions - layout.feed_point)


def user_position_distances(layout: Layout) -> np.ndarray:
    """3-D distance from every candidate position to every user, (K, L)."""
    delta = layout.user_positions[:, None, :] - layout.candidate_positions[None, :, :]
    return _distance(delta)


def _waveguide_factors(config: ScenarioConfig, path_lengths: np.ndarray) -> np.ndarray:
    magnitude = np.sqrt(10.0 ** (-config.waveguide_attenuation_kappa * path_lengths / 10.0))
    phase = np.exp(-2j * np.pi * path_lengths / config.guided_wavelength)
    return magnitude * phase


def _freespace_factors(config: ScenarioConfig, distances: np.ndarray) -> np.ndarray:
    lam = config.wavelength
    return (lam / (4.0 * np.pi * distances)) * np.exp(-2j * np.pi * distances / lam)


def waveguide_factor(l: int, config: ScenarioConfig, layout: Layout) -> complex:
    """In-guide attenuation and phase for candidate position l."""
    length = feed_path_lengths(layout)[l : l + 1]
    return complex(_waveguide_factors(config, length)[0])


def freespace_factor(k: int, l: int, config: ScenarioConfig, layout: Layout) -> complex:
    """Spherical-spreading loss and phase from position l down to user k."""
    distance = user_position_distances(layout)[k : k + 1, l]
    return complex(_freespace_factors(config, distance)[0])


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex link coefficients for every user x candidate position."""

    coefficients: np.ndarray       # (K, L) = waveguide * freespace
    waveguide_factors: np.ndarray  # (L,)
    freespace_factors: np.ndarray  # (K, L)

    @property
    def num_users(self) -> int:
        return self.coefficients.shape[0]

    @property
    def num_positions(self) -> int:
        return self.coefficients.shape[1]


def build_channel_matrix(config: ScenarioConfig, layout: Layout) -> ChannelMatrix:
    wg = _waveguide_factors(config, feed_path_lengths(layout))
    fs = _freespace_factors(config, user_position_distances(layout))
    # Expand the complex product into real arithmetic: numpy's vectorized
    # complex multiply may round differently from a scalar multiply, and the
    # coefficients must factor exactly into the stored per-part factors.
    wr, wi = wg.real[None, :], wg.imag[None, :]
    fr, fi = fs.real, fs.imag
    coefficients = np.empty(fs.shape, dtype=complex)
    coefficients.real = wr * fr - wi * fi
    coefficients.imag = wr * fi + wi * fr
    return ChannelMatrix(
        coefficients=_readonly(coefficients),
        waveguide_factors=_readonly(wg),
        freespace_factors=_readonly(fs),
    )


def _as_index_array(active: Iterable[int]) -> np.ndarray:
    idx = np.fromiter(active, dtype=np.intp)
    if idx.size == 0:
        raise EmptyActivation("activation set is empty")
    # Canonical order: float summation must not depend on how the caller's
    # set happens to iterate.
    idx.sort()
    return idx


def effective_gain(active: Iterable[int], k: int, channel: ChannelMatrix) -> float:
    """|sum of coefficients over the active set|^2 for user k."""
    idx = _as_index_array(active)
    s = channel.coefficients[k, idx].sum()
    return float(s.real * s.real + s.imag * s.imag)


def effective_gains(active: Iterable[int], channel: ChannelMatrix) -> np.ndarray:
    """Effective power gain of every user for one activation set, (K,)."""
    idx = _as_index_array(active)
    s = channel.coefficients[:, idx].sum(axis=1)
    return s.real * s.real + s.imag * s.imag


def sic_order(active: Iterable[int], channel: ChannelMatrix) -> np.ndarray:
    """User indices sorted by ascending effective gain (decoding order).

    Ties break toward the lower user index, which keeps the whole pipeline
    deterministic.
    """
    gains = effective_gains(active, channel)
    return np.argsort(gains, kind="stable")
