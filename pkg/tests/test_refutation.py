from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from docode.causal import CausalData, ate_linear, ate_psm, estimate
from docode.errors import SubsetTooSmallError
from docode.refutation import (
    Tolerances,
    _confound_treatment,
    detect_spurious,
    placebo_passes,
    random_cause_passes,
    refute,
    refute_placebo,
    refute_random_common_cause,
    refute_subset,
    refute_unobserved_common_cause,
    subset_passes,
    unobserved_cause_passes,
)
from docode.synthetic import confounded, dose_response


def psm(data):
    return ate_psm(data.covariates, data.treatment, data.outcome)


@pytest.fixture(scope="module")
def small():
    return confounded(n=1000, seed=4)


def test_constant_random_cause_reproduces_the_estimate(small):
    # a constant column is dropped by the propensity model, so nothing changes
    original = psm(small).ate
    assert refute_random_common_cause(small, psm, covariate=np.ones(len(small))) == original


def test_random_cause_stays_close(small):
    original = psm(small).ate
    assert random_cause_passes(original, refute_random_common_cause(small, psm, seed=1, n_simulations=5))


def test_zero_strength_unobserved_cause_is_a_no_op(small):
    original = psm(small).ate
    assert refute_unobserved_common_cause(small, psm, 0.0, 0.0, seed=3, n_simulations=3) == original


def test_unobserved_cause_rejects_non_finite_strengths(small):
    with pytest.raises(ValueError):
        refute_unobserved_common_cause(small, psm, float("nan"), 0.2)


def test_confounded_treatment_keeps_binary_support(small):
    u = np.random.default_rng(0).standard_normal(len(small))
    t = _confound_treatment(small, u, 1.0, np.random.default_rng(1))
    assert set(np.unique(t)) <= {0.0, 1.0}
    # units with large U become more likely to be treated
    assert t[u > 1].mean() > small.treatment[u > 1].mean()


def test_strong_unobserved_cause_biases_the_estimate(small):
    original = psm(small).ate
    shifted = refute_unobserved_common_cause(small, psm, 2.0, 1.0, seed=3, n_simulations=3)
    assert shifted > original + 0.3


def test_placebo_vanishes(small):
    assert abs(refute_placebo(small, psm, seed=5, n_simulations=10)) < 0.1


def test_placebo_is_a_permutation():
    d = confounded(n=50, seed=0)
    seen = []

    def spy(data):
        seen.append(data.treatment.copy())
        return estimate(data)

    refute_placebo(d, spy, seed=1, n_simulations=3)
    assert len(seen) == 3
    assert all(np.array_equal(np.sort(t), np.sort(d.treatment)) for t in seen)


def test_full_subset_is_the_original(small):
    assert refute_subset(small, psm, keep_fraction=1.0) == psm(small).ate


def test_subset_errors():
    d = confounded(n=10, seed=0)
    with pytest.raises(ValueError):
        refute_subset(d, psm, keep_fraction=0.0)
    with pytest.raises(SubsetTooSmallError):
        refute_subset(d, psm, keep_fraction=0.1)
    one_treated = CausalData(np.r_[1.0, np.zeros(9)], np.arange(10.0), np.zeros((10, 1)))
    with pytest.raises(SubsetTooSmallError):
        refute_subset(one_treated, psm, keep_fraction=0.5, n_simulations=25)


def test_subset_stays_close(small):
    original = psm(small).ate
    assert subset_passes(original, refute_subset(small, psm, 0.8, seed=2, n_simulations=5))


def test_refute_uses_offset_seeds(small):
    rep = refute(small, psm, seed=10, n_simulations=4)
    assert rep.r1_random_cause == refute_random_common_cause(small, psm, 11, n_simulations=4)
    assert rep.r2_unobserved_cause == refute_unobserved_common_cause(small, psm, 0.2, 0.2, 12, n_simulations=4)
    assert rep.r3_placebo == refute_placebo(small, psm, 13, n_simulations=4)
    assert rep.r4_subset == refute_subset(small, psm, 0.8, 14, n_simulations=4)
    assert rep.passed
    assert set(rep.to_json()["verdicts"]) == {"r1_random_cause", "r2_unobserved_cause", "r3_placebo", "r4_subset"}


def test_refute_is_deterministic(small):
    a = refute(small, psm, seed=0, n_simulations=3).to_json()
    b = refute(small, psm, seed=0, n_simulations=3).to_json()
    assert a == b


def test_refute_continuous_treatment():
    d = dose_response(seed=0)

    def ols(data):
        return ate_linear(data.treatment, data.outcome, data.covariates)

    rep = refute(d, ols, seed=0, n_simulations=5)
    assert rep.passed, rep.verdicts


def test_verdict_rules():
    tol = Tolerances()
    assert random_cause_passes(2.0, 2.19, tol) and not random_cause_passes(2.0, 2.21, tol)
    assert random_cause_passes(0.0, 0.009, tol)
    assert unobserved_cause_passes(2.0, 3.9) and not unobserved_cause_passes(2.0, 4.1)
    assert not unobserved_cause_passes(2.0, -2.0)
    assert unobserved_cause_passes(0.0, 0.0) and not unobserved_cause_passes(0.0, 0.1)
    assert placebo_passes(0.04, 1.0) and not placebo_passes(0.06, 1.0)
    assert placebo_passes(0.019, 0.0)
    assert subset_passes(2.0, 2.29) and not subset_passes(2.0, 2.31)


def test_spurious_examples():
    assert detect_spurious(0.67, -0.0002).verdict == "spurious"
    assert detect_spurious(0.67, 0.5).verdict == "causal"
    assert detect_spurious(0.1, 0.5).verdict == "no_effect"
    assert detect_spurious(-0.5, 0.0).verdict == "spurious"


@given(st.floats(-1, 1), st.floats(-10, 10), st.floats(0, 1), st.floats(0, 1))
def test_spurious_verdict_is_a_partition(assoc, ate, assoc_min, ate_min):
    v = detect_spurious(assoc, ate, assoc_min, ate_min).verdict
    strong, effect = abs(assoc) >= assoc_min, abs(ate) >= ate_min
    assert v == {(True, False): "spurious", (True, True): "causal"}.get((strong, effect), "no_effect")
