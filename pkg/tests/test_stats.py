from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docode.errors import (
    EdgeMismatchError,
    EmptyInputError,
    LengthMismatchError,
    ZeroResamplesError,
    ZeroVarianceError,
)
from docode.stats import SMOOTHING, Histogram, bootstrap, histogram_pair, js_distance, jsd, pearson


def hist(masses, edges=None):
    masses = np.asarray(masses, dtype=float)
    if edges is None:
        edges = np.arange(masses.size + 1, dtype=float)
    return Histogram(np.asarray(edges, dtype=float), masses)


def jsd_oracle(p, q, base=2.0):
    """Term-by-term evaluation with 0 log 0 = 0, in log space so nothing underflows."""
    total = 0.0
    for a, b in zip(p, q):
        log_m = math.log(a + b) - math.log(2) if a + b > 0 else 0.0
        if a > 0:
            total += 0.5 * a * (math.log(a) - log_m)
        if b > 0:
            total += 0.5 * b * (math.log(b) - log_m)
    return total / math.log(base)


# pearson ---------------------------------------------------------------------


def test_pearson_examples():
    x = [1.0, 2.0, 3.5, 7.0]
    assert pearson(x, x) == pytest.approx(1.0)
    assert pearson(x, [-v for v in x]) == pytest.approx(-1.0)
    assert pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(15 / math.sqrt(228), abs=1e-12)


def test_pearson_errors():
    with pytest.raises(LengthMismatchError):
        pearson([1, 2], [1, 2, 3])
    with pytest.raises(LengthMismatchError):
        pearson([1], [1])
    with pytest.raises(ZeroVarianceError):
        pearson([1, 1, 1], [1, 2, 3])


finite = st.floats(-1e3, 1e3, allow_nan=False)
nonzero = st.floats(0.1, 10) | st.floats(-10, -0.1)


@given(
    st.lists(st.tuples(finite, finite), min_size=3, max_size=30),
    nonzero,
    finite,
    nonzero,
    finite,
)
def test_pearson_affine_invariance(pairs, a, b, c, d):
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    if np.ptp(x) < 1e-3 or np.ptp(y) < 1e-3:
        return
    r = pearson(x, y)
    assert -1 <= r <= 1
    assert pearson(a * x + b, c * y + d) == pytest.approx(np.sign(a * c) * r, abs=1e-9)


# bootstrap -------------------------------------------------------------------


def test_bootstrap_constant_series():
    assert np.all(bootstrap([4.2] * 9, 50, seed=1) == 4.2)


def test_bootstrap_errors():
    with pytest.raises(ZeroResamplesError):
        bootstrap([1.0, 2.0], 0, seed=1)
    with pytest.raises(EmptyInputError):
        bootstrap([], 10, seed=1)


def test_bootstrap_is_bitwise_deterministic():
    x = np.random.default_rng(3).normal(size=40)
    a = bootstrap(x, 500, seed=11)
    b = bootstrap(x, 500, seed=11)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, bootstrap(x, 500, seed=12))


def test_bootstrap_resample_streams_are_prefix_stable():
    # resample i depends only on (seed, i), not on how many are requested
    x = np.arange(25.0)
    assert np.array_equal(bootstrap(x, 30, seed=5)[:10], bootstrap(x, 10, seed=5))


def test_bootstrap_custom_statistic():
    x = np.arange(10.0)
    assert np.all(bootstrap(x, 20, seed=0, statistic=np.max) <= 9)


def test_bootstrap_follows_documented_stream_derivation():
    # resample i draws len(x) indices from default_rng(SeedSequence(seed).spawn(n)[i])
    x = np.arange(10.0)
    streams = np.random.SeedSequence(0).spawn(3)
    expected = [x[np.random.default_rng(s).integers(0, 10, 10)].mean() for s in streams]
    assert bootstrap(x, 3, seed=0).tolist() == expected
    assert expected == [5.0, 3.9, 4.9]  # frozen


# histograms and JSD ------------------------------------------------------------


def test_identical_series_give_identical_histograms():
    a = [0.1, 0.5, 0.5, 2.0]
    p, q = histogram_pair(a, list(a), bins=5)
    assert p == q
    assert p.masses.sum() == pytest.approx(1.0, abs=1e-12)


def test_disjoint_series_have_epsilon_overlap():
    p, q = histogram_pair([0.0, 0.1, 0.2], [9.8, 9.9, 10.0], bins=10)
    overlap = np.minimum(p.masses, q.masses).sum()
    assert overlap <= 10 * SMOOTHING * 1.01


def test_degenerate_range_is_widened():
    p, q = histogram_pair([3.0, 3.0], [3.0], bins=4)
    assert p.bin_edges[0] == 2.5 and p.bin_edges[-1] == 3.5
    assert p == q


def test_histogram_errors():
    with pytest.raises(EmptyInputError):
        histogram_pair([], [1.0])
    with pytest.raises(ValueError):
        histogram_pair([1.0], [2.0], bins=1)


def test_jsd_closed_forms():
    assert jsd(hist([1, 0]), hist([0, 1])) == pytest.approx(1.0, abs=1e-12)
    assert jsd(hist([0.5, 0.5]), hist([1, 0])) == pytest.approx(0.3112781244591328, abs=1e-12)
    assert jsd(hist([0.5, 0.5]), hist([1, 0])) == pytest.approx(jsd_oracle([0.5, 0.5], [1, 0]), abs=1e-12)
    assert jsd(hist([1, 0]), hist([0, 1]), log_base=math.e) == pytest.approx(math.log(2), abs=1e-12)


def test_jsd_of_identical_histograms_is_exactly_zero():
    p = hist([0.2, 0.3, 0.5])
    assert jsd(p, p) == 0.0


def test_jsd_requires_shared_edges():
    with pytest.raises(EdgeMismatchError):
        jsd(hist([0.5, 0.5]), hist([0.5, 0.5], edges=[0, 2, 3]))


masses = st.lists(st.floats(0, 1), min_size=2, max_size=12).filter(lambda m: sum(m) > 1e-6)


@settings(max_examples=200)
@given(masses, st.data())
def test_jsd_symmetry_bounds_and_oracle(m1, data):
    m2 = data.draw(st.lists(st.floats(0, 1), min_size=len(m1), max_size=len(m1)).filter(lambda m: sum(m) > 1e-6))
    p = np.array(m1) / sum(m1)
    q = np.array(m2) / sum(m2)
    a = jsd(hist(p), hist(q))
    assert a == jsd(hist(q), hist(p))
    assert 0.0 <= a <= 1.0
    assert a == pytest.approx(jsd_oracle(p, q), abs=1e-12)


# JS distance -------------------------------------------------------------------


def test_js_distance_of_identical_series_is_zero():
    x = np.random.default_rng(1).normal(size=50)
    res = js_distance(x, x.copy(), seed=3, bootstrap_n=200)
    assert res.value == 0.0
    assert (res.kind, res.n, res.seed, res.bootstrap_n, res.bins, res.log_base) == ("js_distance", 100, 3, 200, 30, 2)


def test_js_distance_squares_the_divergence():
    rng = np.random.default_rng(2)
    a, b = rng.normal(0, 1, 60), rng.normal(0.3, 1, 60)
    res, boot_a, boot_b = js_distance(a, b, seed=4, bootstrap_n=300, return_distributions=True)
    divergence = jsd(*histogram_pair(boot_a, boot_b, 30))
    assert res.value == divergence**2
    root = js_distance(a, b, seed=4, bootstrap_n=300, metric_root=True)
    assert root.value == math.sqrt(divergence)
    assert root.metric == "root" and res.metric == "squared"


def test_divergence_half_gives_distance_quarter(monkeypatch):
    import docode.stats

    monkeypatch.setattr(docode.stats, "jsd", lambda p, q, log_base=2: 0.5)
    assert js_distance([1.0, 2.0], [3.0, 4.0], seed=0, bootstrap_n=5).value == 0.25


def test_separated_gaussians_reach_the_maximum():
    rng = np.random.default_rng(0)
    res = js_distance(rng.normal(0, 1, 500), rng.normal(10, 1, 500), seed=0)
    assert res.value >= 0.99


def test_association_json_keys():
    res = js_distance([1.0, 2.0], [2.0, 3.0], seed=1, bootstrap_n=10)
    assert set(res.to_json()) >= {"kind", "value", "n", "seed", "bootstrap_n", "bins", "log_base"}
