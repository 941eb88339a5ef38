import cmath
import math

import numpy as np
import pytest

from noma_pass import (
    EmptyActivation,
    OutOfRegion,
    ScenarioConfig,
    build_channel_matrix,
    build_layout,
    effective_gain,
    effective_gains,
    freespace_factor,
    sic_order,
    waveguide_factor,
)
from noma_pass.channel import ChannelMatrix, feed_path_lengths, user_position_distances

from conftest import small_config


def layout_for(config, user_xy=None):
    if user_xy is None:
        user_xy = [(config.region_length_D2 / 2.0, 0.0)] * config.num_users_K
    return build_layout(config, user_xy)


# ---- layout ------------------------------------------------------------

def test_two_candidates_sit_at_the_ends():
    cfg = small_config(num_candidate_positions_L=2, num_users_K=1)
    layout = layout_for(cfg)
    assert layout.candidate_positions[:, 0].tolist() == [0.0, 20.0]


def test_uniform_spacing_forty_positions():
    cfg = ScenarioConfig(num_users_K=1)
    layout = layout_for(cfg)
    xs = layout.candidate_positions[:, 0]
    spacing = np.diff(xs)
    assert spacing == pytest.approx(np.full(39, 20.0 / 39.0), rel=1e-12)
    assert xs[0] == 0.0 and xs[-1] == 20.0


def test_single_candidate_centered():
    cfg = small_config(num_candidate_positions_L=1, num_users_K=1)
    layout = layout_for(cfg)
    assert layout.candidate_positions[0].tolist() == [10.0, 0.0, cfg.waveguide_height_d]


def test_geometry_planes():
    cfg = small_config()
    layout = layout_for(cfg, [(1.0, 2.0), (3.0, -4.0), (20.0, 5.0)])
    assert np.all(layout.user_positions[:, 2] == 0.0)
    assert np.all(layout.candidate_positions[:, 2] == cfg.waveguide_height_d)
    assert np.all(np.diff(layout.candidate_positions[:, 0]) > 0)


def test_out_of_region_users_rejected():
    cfg = small_config(num_users_K=1)
    with pytest.raises(OutOfRegion):
        build_layout(cfg, [(25.0, 0.0)])
    with pytest.raises(OutOfRegion):
        build_layout(cfg, [(5.0, 5.1)])
    with pytest.raises(OutOfRegion):
        build_layout(cfg, [(-0.1, 0.0)])


def test_wrong_user_count_rejected():
    cfg = small_config(num_users_K=2)
    with pytest.raises(OutOfRegion):
        build_layout(cfg, [(1.0, 0.0)])


def test_users_allowed_directly_under_the_guide():
    cfg = small_config(num_users_K=1)
    layout = build_layout(cfg, [(10.0, 0.0)])
    assert layout.user_positions[0, 1] == 0.0


# ---- waveguide factor ----------------------------------------------------

def test_waveguide_factor_at_feed_point_is_one():
    cfg = small_config(num_users_K=1)
    layout = layout_for(cfg)  # position 0 is exactly at the feed x=0
    assert waveguide_factor(0, cfg, layout) == 1.0 + 0.0j


def test_waveguide_magnitude_twenty_meters():
    # sqrt(10^(-0.02*20/10)) = 10^(-0.02), frozen from 40-digit arithmetic
    cfg = small_config(num_candidate_positions_L=2, num_users_K=1)
    layout = layout_for(cfg)
    value = waveguide_factor(1, cfg, layout)  # position at x = 20 m
    assert abs(value) == pytest.approx(0.9549925860214359, rel=1e-14)


def test_waveguide_phase_wraps_at_guided_wavelength():
    cfg = small_config(num_users_K=1)
    lam_g = cfg.guided_wavelength
    # build a layout whose second candidate sits exactly one guided
    # wavelength from the feed
    cfg2 = ScenarioConfig(
        num_users_K=1,
        num_candidate_positions_L=2,
        region_length_D2=lam_g,
    )
    layout = build_layout(cfg2, [(0.0, 0.0)])
    value = waveguide_factor(1, cfg2, layout)
    assert cmath.phase(value) == pytest.approx(0.0, abs=1e-9)


# ---- free-space factor ----------------------------------------------------

def test_freespace_magnitude_directly_below():
    cfg = small_config(num_candidate_positions_L=2, num_users_K=1)
    layout = build_layout(cfg, [(0.0, 0.0)])  # straight below candidate 0
    lam = 299_792_458.0 / 28e9
    value = freespace_factor(0, 0, cfg, layout)
    assert abs(value) == pytest.approx(lam / (12.0 * math.pi), rel=1e-14)
    assert abs(value) == pytest.approx(0.00028400864043077035, rel=1e-12)


def test_freespace_magnitude_halves_with_double_distance():
    cfg = small_config(num_candidate_positions_L=2, num_users_K=1)
    near = build_layout(cfg, [(0.0, 0.0)])
    # horizontal offset making the slant distance exactly 2d
    offset = math.sqrt((2.0 * 3.0) ** 2 - 3.0**2)
    far = build_layout(cfg, [(offset, 0.0)])
    assert abs(freespace_factor(0, 0, cfg, far)) == pytest.approx(
        abs(freespace_factor(0, 0, cfg, near)) / 2.0, rel=1e-12
    )


def test_freespace_phase_wraps_at_wavelength():
    lam = 299_792_458.0 / 28e9
    cfg = ScenarioConfig(
        num_users_K=1, num_candidate_positions_L=2, waveguide_height_d=lam
    )
    layout = build_layout(cfg, [(0.0, 0.0)])  # slant distance is exactly lam
    value = freespace_factor(0, 0, cfg, layout)
    assert cmath.phase(value) == pytest.approx(0.0, abs=1e-9)


def test_freespace_magnitude_never_exceeds_overhead_bound(default_config):
    rng = np.random.default_rng(5)
    users = [(float(x), float(y)) for x, y in zip(
        rng.uniform(0, 20, 4), rng.uniform(-5, 5, 4))]
    layout = build_layout(default_config, users)
    channel = build_channel_matrix(default_config, layout)
    bound = default_config.wavelength / (4.0 * math.pi * default_config.waveguide_height_d)
    assert np.all(np.abs(channel.freespace_factors) <= bound * (1 + 1e-12))
    assert np.all(np.abs(channel.waveguide_factors) <= 1.0 + 1e-12)


# ---- channel matrix -------------------------------------------------------

def test_factorization_is_exact(default_config):
    rng = np.random.default_rng(6)
    users = [(float(x), float(y)) for x, y in zip(
        rng.uniform(0, 20, 4), rng.uniform(-5, 5, 4))]
    layout = build_layout(default_config, users)
    channel = build_channel_matrix(default_config, layout)
    for k in range(4):
        for l in range(40):
            entry = complex(channel.coefficients[k, l])
            stored = complex(channel.waveguide_factors[l]) * complex(
                channel.freespace_factors[k, l]
            )
            assert entry == stored
    for k in (0, 3):
        for l in (0, 17, 39):
            assert complex(channel.coefficients[k, l]) == (
                waveguide_factor(l, default_config, layout)
                * freespace_factor(k, l, default_config, layout)
            )


def synthetic_channel(coefficients: np.ndarray) -> ChannelMatrix:
    k, l = coefficients.shape
    return ChannelMatrix(
        coefficients=coefficients,
        waveguide_factors=np.ones(l, dtype=complex),
        freespace_factors=coefficients.copy(),
    )


def test_effective_gain_single_and_coherent_pairs():
    c = 3e-4 - 4e-4j
    channel = synthetic_channel(np.array([[c, c, -c]]))
    single = effective_gain({0}, 0, channel)
    assert single == pytest.approx(abs(c) ** 2, rel=1e-15)
    assert effective_gain({0, 1}, 0, channel) == pytest.approx(4 * abs(c) ** 2, rel=1e-14)
    assert effective_gain({1, 2}, 0, channel) == 0.0


def test_effective_gain_empty_set_rejected():
    channel = synthetic_channel(np.array([[1.0 + 0j]]))
    with pytest.raises(EmptyActivation):
        effective_gain(set(), 0, channel)
    with pytest.raises(EmptyActivation):
        sic_order(set(), channel)


def test_effective_gain_monotone_decay_single_position(default_config):
    distances = np.linspace(0.0, 19.0, 30)
    gains = []
    for x in distances:
        layout = build_layout(
            ScenarioConfig(num_users_K=1, num_candidate_positions_L=2), [(x, 0.0)]
        )
        channel = build_channel_matrix(
            ScenarioConfig(num_users_K=1, num_candidate_positions_L=2), layout
        )
        gains.append(effective_gain({0}, 0, channel))
    assert all(b < a for a, b in zip(gains, gains[1:]))


def test_superadditivity_bound(default_config):
    rng = np.random.default_rng(7)
    users = [(float(x), float(y)) for x, y in zip(
        rng.uniform(0, 20, 4), rng.uniform(-5, 5, 4))]
    layout = build_layout(default_config, users)
    channel = build_channel_matrix(default_config, layout)
    for _ in range(100):
        size = int(rng.integers(1, 8))
        active = frozenset(int(i) for i in rng.choice(40, size=size, replace=False))
        for k in range(4):
            coherent = effective_gain(active, k, channel)
            amplitude_sum = sum(abs(channel.coefficients[k, l]) for l in active)
            assert coherent <= amplitude_sum**2 * (1 + 1e-12)


# ---- SIC order -------------------------------------------------------------

def test_sic_order_sorts_ascending():
    channel = synthetic_channel(np.array([[2.0 + 0j], [1.0 + 0j], [3.0 + 0j]]))
    assert sic_order({0}, channel).tolist() == [1, 0, 2]


def test_sic_order_ties_break_by_index():
    channel = synthetic_channel(np.array([[1.0 + 0j], [1.0 + 0j], [1.0 + 0j]]))
    assert sic_order({0}, channel).tolist() == [0, 1, 2]


def test_sic_order_single_user():
    channel = synthetic_channel(np.array([[1.0 + 0j]]))
    assert sic_order({0}, channel).tolist() == [0]


def test_sic_order_is_permutation_with_sorted_gains(default_config):
    rng = np.random.default_rng(8)
    users = [(float(x), float(y)) for x, y in zip(
        rng.uniform(0, 20, 5), rng.uniform(-5, 5, 5))]
    cfg = ScenarioConfig(num_users_K=5)
    layout = build_layout(cfg, users)
    channel = build_channel_matrix(cfg, layout)
    for _ in range(50):
        size = int(rng.integers(1, 6))
        active = frozenset(int(i) for i in rng.choice(40, size=size, replace=False))
        order = sic_order(active, channel)
        assert sorted(order.tolist()) == list(range(5))
        sorted_gains = effective_gains(active, channel)[order]
        assert np.all(np.diff(sorted_gains) >= 0)


# ---- helpers used elsewhere -------------------------------------------------

def test_path_length_and_distance_helpers():
    cfg = small_config(num_candidate_positions_L=3, num_users_K=1)
    layout = build_layout(cfg, [(10.0, 4.0)])
    assert feed_path_lengths(layout).tolist() == [0.0, 10.0, 20.0]
    d = user_position_distances(layout)
    assert d.shape == (1, 3)
    assert d[0, 1] == pytest.approx(math.sqrt(4.0**2 + 3.0**2), rel=1e-15)
