import numpy as np
import pytest

from palette_quant.core.histogram import WeightedHistogram, build_histogram
from palette_quant.core.initializers import SeedConfig, init_forgy
from palette_quant.core.kmeans import (
    DistanceCounter,
    Termination,
    assign_point_sortmeans,
    build_center_distance_table,
    kmeans_full,
    nearest_centers,
    wsm,
)


def _brute_labels(points, centers):
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
    return np.argmin(d2, axis=1), d2


@pytest.mark.parametrize("trial", range(120))
def test_wsm_matches_kmeans_on_unit_weights(trial):
    rng = np.random.default_rng(1000 + trial)
    n = int(rng.integers(20, 200))
    pts = rng.uniform(0.0, 255.0, size=(n, 3))
    k = int(rng.integers(1, min(16, n) + 1))
    init = pts[rng.choice(n, size=k, replace=False)]
    term = Termination(fixed_iterations=10)

    ref = kmeans_full(pts, init, term)
    got = wsm(WeightedHistogram.from_points(pts), init, term)

    np.testing.assert_array_equal(got.memberships, ref.memberships)
    np.testing.assert_allclose(got.centers, ref.centers, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(got.normalized_sse_trace, ref.normalized_sse_trace, rtol=1e-9)


@pytest.mark.parametrize("trial", range(40))
def test_sortmeans_assignment_is_exact(trial):
    rng = np.random.default_rng(trial)
    k = int(rng.integers(1, 40))
    centers = rng.uniform(0.0, 255.0, size=(k, 3))
    pts = rng.integers(0, 256, size=(300, 3)).astype(np.float64)
    table = build_center_distance_table(centers)
    ref, d2 = _brute_labels(pts, centers)
    for i, x in enumerate(pts):
        prev = int(rng.integers(k))
        got = assign_point_sortmeans(x, prev, table, centers, DistanceCounter())
        assert d2[i, got] == d2[i].min()


@pytest.mark.parametrize("trial", range(40))
def test_nearest_centers_lowest_index_ties(trial):
    rng = np.random.default_rng(500 + trial)
    k = int(rng.integers(1, 24))
    # Integer centers with duplicates make exact ties common
    centers = rng.integers(0, 16, size=(k, 3)).astype(np.float64)
    pts = rng.integers(0, 16, size=(400, 3)).astype(np.float64)
    ref, _ = _brute_labels(pts, centers)
    labels, ndc = nearest_centers(pts, centers)
    np.testing.assert_array_equal(labels, ref)
    assert pts.shape[0] <= ndc <= pts.shape[0] * k


def test_nearest_centers_with_hint():
    centers = np.array([[0, 0, 0], [100, 0, 0], [0, 100, 0]], dtype=np.float64)
    pts = np.array([[90, 0, 0], [5, 95, 0], [1, 1, 1]], dtype=np.float64)
    labels, _ = nearest_centers(pts, centers, hint=np.array([0, 0, 2]))
    assert labels.tolist() == [1, 2, 0]


def _distinct_colors(rng, n):
    codes = rng.choice(1 << 24, size=n, replace=False)
    return np.stack([(codes >> 16) & 255, (codes >> 8) & 255, codes & 255], axis=1).astype(np.float64)


@pytest.mark.parametrize("trial", range(100))
def test_every_sortmeans_assignment_phase_is_exact(trial):
    rng = np.random.default_rng(7000 + trial)
    n = int(rng.integers(64, 5001))
    k = int(rng.integers(2, 65))
    colors = _distinct_colors(rng, n)
    counts = rng.integers(1, 50, size=n)
    hist = WeightedHistogram(
        colors=colors, weights=counts / counts.sum(), source_pixel_count=int(counts.sum()), counts=counts,
    )
    init = colors[rng.choice(n, size=k, replace=False)]

    # Iteration t assigns against the centers that t-1 iterations end with
    prev = wsm(hist, init, Termination(fixed_iterations=1))
    for t in range(2, 21):
        cur = wsm(hist, init, Termination(fixed_iterations=t))
        if cur.repairs == prev.repairs:
            _, d2 = _brute_labels(colors, prev.centers)
            np.testing.assert_array_equal(d2[np.arange(n), cur.memberships], d2.min(axis=1))
        prev = cur


@pytest.mark.parametrize("seed", range(10))
def test_weighted_histogram_matches_raw_pixels(image_factory, seed):
    rng = np.random.default_rng(seed)
    img = image_factory(int(rng.integers(16, 65)), int(rng.integers(16, 65)), seed=40 + seed, noise=float(rng.uniform(3.0, 20.0)))
    hist = build_histogram(img.pixels)
    init = init_forgy(hist, SeedConfig(k=int(rng.integers(2, 17)), seed=seed))
    term = Termination(fixed_iterations=8)

    raw = kmeans_full(img.pixels, init, term)
    weighted = wsm(hist, init, term)

    np.testing.assert_allclose(weighted.normalized_sse_trace, raw.normalized_sse_trace, rtol=1e-6)


def test_repair_moves_every_pixel_of_the_donor_color():
    pixels = np.array([[10, 0, 0], [10, 0, 0], [0, 0, 0]], dtype=np.uint8)
    init = [[0, 0, 0], [200, 200, 200]]
    term = Termination(fixed_iterations=2)

    raw = kmeans_full(pixels, init, term)
    weighted = wsm(build_histogram(pixels), init, term)

    assert raw.memberships.tolist() == [1, 1, 0]
    assert raw.repairs == weighted.repairs == 1
    np.testing.assert_allclose(raw.normalized_sse_trace, [0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(weighted.normalized_sse_trace, raw.normalized_sse_trace, atol=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_repaired_runs_agree_on_duplicate_pixels(seed):
    rng = np.random.default_rng(300 + seed)
    palette = rng.integers(0, 256, size=(12, 3))
    pixels = palette[rng.integers(0, 12, size=400)].astype(np.uint8)
    hist = build_histogram(pixels)
    # Coincident starting centers force empty clusters on the first pass
    init = np.repeat(hist.colors[:2], 3, axis=0)
    term = Termination(fixed_iterations=6)

    raw = kmeans_full(pixels, init, term)
    weighted = wsm(hist, init, term)

    assert raw.repairs == weighted.repairs >= 4
    np.testing.assert_allclose(weighted.normalized_sse_trace, raw.normalized_sse_trace, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_sse_trace_non_increasing(gradient_hist, seed):
    init = init_forgy(gradient_hist, SeedConfig(k=12, seed=seed))
    state = wsm(gradient_hist, init, Termination(epsilon=0.0, max_iterations=30))
    trace = np.asarray(state.sse_trace)
    assert np.all(trace[1:] <= trace[:-1] * (1.0 + 1e-12))


def test_wsm_ndc_well_below_full_search(image_factory):
    img = image_factory(64, 64, seed=2)
    hist = build_histogram(img.pixels)
    k = 32
    init = init_forgy(hist, SeedConfig(k=k, seed=0))
    term = Termination(fixed_iterations=20)

    km = kmeans_full(img.pixels, init, term)
    ws = wsm(hist, init, term)
    assert km.ndc_per_point_iter == k
    assert ws.ndc_per_point_iter <= k / 4


def test_fixed_iterations_ignore_convergence(gradient_hist):
    state = wsm(gradient_hist, gradient_hist.colors[:4], Termination(epsilon=1.0, fixed_iterations=7))
    assert state.iterations == 7
    assert len(state.sse_trace) == 7
