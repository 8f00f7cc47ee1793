import numpy as np
import pytest

from palette_quant.core.histogram import WeightedHistogram
from palette_quant.core.initializers import (
    INITIALIZERS,
    SeedConfig,
    apportion,
    farthest_first,
    init_density,
    init_forgy,
    init_kmeanspp,
    init_lbg,
    init_maximin,
    init_maxvar,
    init_sff,
    initialize,
    kmeanspp_from,
    sff_subset_size,
)
from palette_quant.errors import InvalidParameterError

BLACK, WHITE, GRAY = (0, 0, 0), (255, 255, 255), (128, 128, 128)


def _hist(colors, weights=None):
    colors = np.asarray(colors, dtype=np.float64)
    if weights is None:
        weights = np.full(colors.shape[0], 1.0 / colors.shape[0])
    return WeightedHistogram(colors=colors, weights=np.asarray(weights, dtype=np.float64),
                             source_pixel_count=colors.shape[0])


def _rows(arr):
    return sorted(map(tuple, np.asarray(arr).tolist()))


@pytest.mark.parametrize("token", sorted(INITIALIZERS))
def test_every_scheme_returns_k_centers(gradient_hist, token):
    centers = initialize(token, gradient_hist, SeedConfig(k=10, seed=3))
    assert centers.shape == (10, 3)
    assert np.all(centers >= 0) and np.all(centers <= 255)


@pytest.mark.parametrize("token", sorted(INITIALIZERS))
def test_every_scheme_is_deterministic(gradient_hist, token):
    a = initialize(token, gradient_hist, SeedConfig(k=7, seed=11))
    b = initialize(token, gradient_hist, SeedConfig(k=7, seed=11))
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("token", sorted(INITIALIZERS))
def test_every_scheme_rejects_k_above_distinct(token):
    with pytest.raises(InvalidParameterError):
        initialize(token, _hist([BLACK, WHITE]), SeedConfig(k=3))


def test_unknown_token():
    with pytest.raises(InvalidParameterError):
        initialize("xyz", _hist([BLACK, WHITE]), SeedConfig(k=1))


def test_seed_config_validation():
    with pytest.raises(InvalidParameterError):
        SeedConfig(k=0)
    with pytest.raises(InvalidParameterError):
        SeedConfig(k=2, den_grid=0)


# --- FGY ---

def test_forgy_exhaustive_when_k_equals_distinct():
    h = _hist([BLACK, WHITE, GRAY, (1, 2, 3)])
    assert _rows(init_forgy(h, SeedConfig(k=4, seed=5))) == _rows(h.colors)


def test_forgy_single_center_is_a_histogram_color(gradient_hist):
    c = init_forgy(gradient_hist, SeedConfig(k=1, seed=2))
    assert tuple(c[0]) in set(map(tuple, gradient_hist.colors.tolist()))


def test_forgy_samples_distinct_colors(gradient_hist):
    c = init_forgy(gradient_hist, SeedConfig(k=50, seed=0))
    assert len(set(map(tuple, c.tolist()))) == 50


# --- LBG ---

def test_lbg_single_center_is_weighted_centroid():
    h = _hist([BLACK, (100, 0, 0)], [0.75, 0.25])
    np.testing.assert_allclose(init_lbg(h, SeedConfig(k=1)), [[25.0, 0.0, 0.0]])


def test_lbg_two_atoms():
    h = _hist([BLACK, (100, 100, 100)], [0.5, 0.5])
    centers = init_lbg(h, SeedConfig(k=2))
    np.testing.assert_allclose(sorted(centers.tolist()), [[0, 0, 0], [100, 100, 100]], atol=1e-9)


def test_lbg_non_power_of_two(gradient_hist):
    assert init_lbg(gradient_hist, SeedConfig(k=3)).shape == (3, 3)
    assert init_lbg(gradient_hist, SeedConfig(k=6)).shape == (6, 3)


# --- MMX ---

def test_farthest_first_picks_white_then_gray():
    pts = np.array([BLACK, WHITE, GRAY], dtype=np.float64)
    assert farthest_first(pts, 0, 2).tolist() == [0, 1]
    assert farthest_first(pts, 0, 3).tolist() == [0, 1, 2]


def test_farthest_first_ties_to_lower_index():
    pts = np.array([(50, 0, 0), (0, 0, 0), (100, 0, 0)], dtype=np.float64)
    assert farthest_first(pts, 0, 2).tolist() == [0, 1]


def test_maximin_exhaustion():
    h = _hist([BLACK, WHITE, GRAY])
    assert _rows(init_maximin(h, SeedConfig(k=3, seed=1))) == _rows(h.colors)


def test_maximin_uniform_first_option(gradient_hist):
    c = init_maximin(gradient_hist, SeedConfig(k=5, seed=1, weighted_first=False))
    assert c.shape == (5, 3)


# --- DEN ---

def test_apportion_largest_remainder():
    assert apportion(np.array([0.6, 0.4]), np.array([10, 10]), 5).tolist() == [3, 2]


def test_apportion_respects_capacity():
    quotas = apportion(np.array([0.9, 0.1]), np.array([2, 10]), 6)
    assert quotas.tolist() == [2, 4]


def test_density_single_cell_equals_forgy():
    rng = np.random.default_rng(0)
    colors = np.unique(rng.integers(0, 32, size=(60, 3)), axis=0)
    h = _hist(colors)
    cfg = SeedConfig(k=6, seed=21)
    np.testing.assert_array_equal(init_density(h, cfg), init_forgy(h, cfg))


def test_density_one_center_per_equal_cell():
    h = _hist([(0, 0, 0), (1, 1, 1), (250, 250, 250), (251, 251, 251)])
    centers = init_density(h, SeedConfig(k=2, seed=0))
    assert sorted(int(c[0] >= 128) for c in centers) == [0, 1]


# --- VAR ---

def test_maxvar_lower_medians():
    h = _hist([(0, 0, 0), (10, 0, 0), (20, 0, 0), (30, 0, 0)])
    centers = init_maxvar(h, SeedConfig(k=2))
    assert centers[:, 0].tolist() == [0.0, 20.0]


def test_maxvar_single_group():
    h = _hist([(30, 0, 0), (0, 0, 0), (20, 0, 0), (10, 0, 0)])
    assert init_maxvar(h, SeedConfig(k=1))[0, 0] == 10.0


def test_maxvar_picks_max_variance_channel():
    h = _hist([(5, 0, 0), (5, 100, 0), (6, 200, 0), (6, 255, 0)])
    centers = init_maxvar(h, SeedConfig(k=2))
    assert centers[:, 1].tolist() == [0.0, 200.0]


# --- SFF ---

def test_sff_subset_sizes():
    assert sff_subset_size(2, 10_000) == 3
    assert sff_subset_size(256, 1_000_000) == 2840
    assert sff_subset_size(256, 500) == 500


def test_sff_full_subset_is_maximin():
    h = _hist([BLACK, WHITE, GRAY])
    assert _rows(init_sff(h, SeedConfig(k=2, seed=3))) in (
        _rows([BLACK, WHITE]), _rows([WHITE, BLACK]), _rows([GRAY, WHITE]), _rows([GRAY, BLACK]),
    )


# --- KPP ---

def test_kmeanspp_second_pick_law():
    pts = np.array([BLACK, WHITE, GRAY], dtype=np.float64)
    w = np.full(3, 1.0 / 3.0)
    rng = np.random.default_rng(12345)
    draws = 100_000
    white = sum(int(kmeanspp_from(pts, w, 0, 2, rng)[1] == 1) for _ in range(draws))
    assert white / draws == pytest.approx(195075 / (195075 + 49152), abs=0.01)


def test_kmeanspp_never_repeats():
    h = _hist([BLACK, WHITE, GRAY, (10, 200, 30)])
    for seed in range(20):
        c = init_kmeanspp(h, SeedConfig(k=4, seed=seed))
        assert _rows(c) == _rows(h.colors)
