"""Refutation checks for an ATE estimate and the spurious-correlation verdict.

Each refuter perturbs the data, re-runs the estimator and reports the mean
re-estimate over ``n_simulations`` independent perturbations:

R1  add a random standard-normal common cause
R2  simulate an unobserved confounder acting on T and Y, then omit it
R3  replace the treatment by a random permutation of itself (placebo)
R4  re-estimate on a random subset of the units

R1, R2 and R4 should stay close to the original ATE; R3 should vanish.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .causal import CausalData, CausalEstimate, estimate, logistic_propensity
from .errors import EstimationError, SingleArmError, SubsetTooSmallError

Estimator = Callable[[CausalData], CausalEstimate]

DEFAULT_SIMULATIONS = 25


@dataclass(frozen=True)
class Tolerances:
    random_cause_rel: float = 0.10
    random_cause_abs: float = 0.01
    unobserved_ratio: float = 2.0
    placebo_sd_fraction: float = 0.05
    placebo_abs: float = 0.02
    subset_rel: float = 0.15
    subset_abs: float = 0.02


@dataclass(frozen=True)
class RefutationReport:
    original_ate: float
    r1_random_cause: float
    r2_unobserved_cause: float
    r3_placebo: float
    r4_subset: float
    verdicts: dict[str, str]
    tolerances: Tolerances
    seed: int
    settings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v == "pass" for v in self.verdicts.values())

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["tolerances"] = asdict(self.tolerances)
        return doc


@dataclass(frozen=True)
class SpuriousVerdict:
    association: float
    ate: float
    verdict: str  # "causal", "spurious" or "no_effect"
    assoc_min: float
    ate_min: float

    def to_json(self) -> dict:
        return asdict(self)


def _mean(values) -> float:
    # identical re-estimates must reproduce the original bit for bit
    if all(v == values[0] for v in values):
        return float(values[0])
    return math.fsum(values) / len(values)


def _rngs(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def refute_random_common_cause(
    data: CausalData,
    estimator: Estimator = estimate,
    seed: int = 0,
    *,
    n_simulations: int = DEFAULT_SIMULATIONS,
    covariate=None,
) -> float:
    """Re-estimate after appending an independent N(0, 1) covariate.

    Pass ``covariate`` to append a specific column instead (one run).
    """
    def rerun(column):
        return estimator(
            data.with_columns(
                covariates=np.column_stack([data.covariates, column]),
                covariate_names=(*data.covariate_names, "random_common_cause"),
            )
        ).ate

    if covariate is not None:
        return rerun(np.asarray(covariate, dtype=float))
    return _mean([rerun(rng.standard_normal(len(data))) for rng in _rngs(seed, n_simulations)])


def _confound_treatment(data: CausalData, u: np.ndarray, strength: float, rng) -> np.ndarray:
    t = data.treatment
    if strength == 0:
        return t
    if data.kind != "binary":
        sd = t.std()
        return t + strength * (sd if sd > 0 else 1.0) * u
    # shift each unit's propensity on the logit scale, flipping just enough
    # units that P(T'=1 | Z, U) = sigmoid(logit e(Z) + strength * U)
    if data.covariates.shape[1]:
        e = logistic_propensity(data.covariates, t)
    else:
        e = np.full(t.size, t.mean())
    e = np.clip(e, 1e-12, 1 - 1e-12)
    shifted = 1.0 / (1.0 + np.exp(-(np.log(e / (1 - e)) + strength * u)))
    delta = shifted - e
    v = rng.random(t.size)
    to_control = (t == 1) & (delta < 0) & (v < -delta / e)
    to_treated = (t == 0) & (delta > 0) & (v < delta / (1 - e))
    out = t.copy()
    out[to_control] = 0.0
    out[to_treated] = 1.0
    return out


def refute_unobserved_common_cause(
    data: CausalData,
    estimator: Estimator = estimate,
    effect_on_t: float = 0.2,
    effect_on_y: float = 0.2,
    seed: int = 0,
    *,
    n_simulations: int = DEFAULT_SIMULATIONS,
) -> float:
    """Re-estimate under a simulated latent confounder U ~ N(0, 1) left out of Z.

    U moves the treatment by ``effect_on_t`` (logit scale for binary T, SDs of
    T otherwise) and the outcome by ``effect_on_y`` SDs of Y.
    """
    if not (math.isfinite(effect_on_t) and math.isfinite(effect_on_y)):
        raise ValueError("confounder strengths must be finite")
    sd_y = data.outcome.std()
    values = []
    for rng in _rngs(seed, n_simulations):
        u = rng.standard_normal(len(data))
        t = _confound_treatment(data, u, effect_on_t, rng)
        y = data.outcome + effect_on_y * sd_y * u if effect_on_y else data.outcome
        values.append(estimator(data.with_columns(treatment=t, outcome=y)).ate)
    return _mean(values)


def placebo_treatment(treatment: np.ndarray, rng) -> np.ndarray:
    return rng.permutation(treatment)


def refute_placebo(
    data: CausalData,
    estimator: Estimator = estimate,
    seed: int = 0,
    *,
    n_simulations: int = DEFAULT_SIMULATIONS,
) -> float:
    """Re-estimate with the treatment column randomly permuted."""
    values = [
        estimator(data.with_columns(treatment=placebo_treatment(data.treatment, rng))).ate
        for rng in _rngs(seed, n_simulations)
    ]
    return _mean(values)


def refute_subset(
    data: CausalData,
    estimator: Estimator = estimate,
    keep_fraction: float = 0.8,
    seed: int = 0,
    *,
    n_simulations: int = DEFAULT_SIMULATIONS,
) -> float:
    """Re-estimate on uniform subsamples (without replacement) of the units."""
    if not 0 < keep_fraction <= 1:
        raise ValueError("keep_fraction must lie in (0, 1]")
    n = len(data)
    size = int(round(keep_fraction * n))
    if size < 2:
        raise SubsetTooSmallError(f"keeping {keep_fraction} of {n} units leaves {size}")
    if size == n:
        return estimator(data).ate
    values = []
    for rng in _rngs(seed, n_simulations):
        rows = np.sort(rng.choice(n, size=size, replace=False))
        try:
            values.append(estimator(data.subset(rows)).ate)
        except (SingleArmError, EstimationError) as exc:
            raise SubsetTooSmallError(f"subset of {size} units is not estimable: {exc}") from exc
    return _mean(values)


# verdict rules -------------------------------------------------------------


def random_cause_passes(original: float, value: float, tol: Tolerances = Tolerances()) -> bool:
    return abs(value - original) <= max(tol.random_cause_rel * abs(original), tol.random_cause_abs)


def unobserved_cause_passes(original: float, value: float, tol: Tolerances = Tolerances()) -> bool:
    if original == 0 or value == 0:
        return original == value
    if math.copysign(1, original) != math.copysign(1, value):
        return False
    ratio = abs(value) / abs(original)
    return 1 / tol.unobserved_ratio <= ratio <= tol.unobserved_ratio


def placebo_passes(value: float, outcome_sd: float, tol: Tolerances = Tolerances()) -> bool:
    return abs(value) <= max(tol.placebo_sd_fraction * outcome_sd, tol.placebo_abs)


def subset_passes(original: float, value: float, tol: Tolerances = Tolerances()) -> bool:
    return abs(value - original) <= max(tol.subset_rel * abs(original), tol.subset_abs)


def refute(
    data: CausalData,
    estimator: Estimator = estimate,
    seed: int = 0,
    *,
    original: float | None = None,
    effect_on_t: float = 0.2,
    effect_on_y: float = 0.2,
    keep_fraction: float = 0.8,
    n_simulations: int = DEFAULT_SIMULATIONS,
    tolerances: Tolerances = Tolerances(),
) -> RefutationReport:
    """Run R1-R4 with per-method seeds ``seed + 1`` ... ``seed + 4``."""
    if original is None:
        original = estimator(data).ate
    sims = {"n_simulations": n_simulations}
    r1 = refute_random_common_cause(data, estimator, seed + 1, **sims)
    r2 = refute_unobserved_common_cause(data, estimator, effect_on_t, effect_on_y, seed + 2, **sims)
    r3 = refute_placebo(data, estimator, seed + 3, **sims)
    r4 = refute_subset(data, estimator, keep_fraction, seed + 4, **sims)
    sd_y = float(data.outcome.std())
    verdicts = {
        "r1_random_cause": random_cause_passes(original, r1, tolerances),
        "r2_unobserved_cause": unobserved_cause_passes(original, r2, tolerances),
        "r3_placebo": placebo_passes(r3, sd_y, tolerances),
        "r4_subset": subset_passes(original, r4, tolerances),
    }
    return RefutationReport(
        original_ate=original,
        r1_random_cause=r1,
        r2_unobserved_cause=r2,
        r3_placebo=r3,
        r4_subset=r4,
        verdicts={k: "pass" if ok else "fail" for k, ok in verdicts.items()},
        tolerances=tolerances,
        seed=seed,
        settings={
            "effect_on_t": effect_on_t,
            "effect_on_y": effect_on_y,
            "keep_fraction": keep_fraction,
            "n_simulations": n_simulations,
        },
    )


def detect_spurious(
    association: float, ate: float, assoc_min: float = 0.3, ate_min: float = 0.05
) -> SpuriousVerdict:
    """Classify an (association, ATE) pair.

    spurious: strong association, negligible effect; causal: both strong;
    no_effect: anything else.
    """
    strong_assoc = abs(association) >= assoc_min
    strong_effect = abs(ate) >= ate_min
    if strong_assoc and not strong_effect:
        verdict = "spurious"
    elif strong_assoc and strong_effect:
        verdict = "causal"
    else:
        verdict = "no_effect"
    return SpuriousVerdict(association, ate, verdict, assoc_min, ate_min)
