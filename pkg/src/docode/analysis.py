"""From testbeds to causal reports.

This module joins the pieces: per-record outcomes and covariates, unit
tables for estimation, and :func:`run_analysis`, which runs the steps in
order (taxonomy -> SCM -> data -> association -> estimate -> refute -> explain).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .causal import CausalData, Estimand, Scm, default_method, estimate, identify
from .covariates import COVARIATE_NAMES, CovariateVector, extract_covariates
from .errors import DocodeError, MissingNodeError, MissingSourceError
from .ingest import Testbed, clone_pairs, dose_clone_pairs, pair_records
from .outcomes import LocalOutcome, cross_entropy, ntp_by_category
from .refutation import Tolerances, detect_spurious, refute
from .report import CausalReport, LocalEffect, render_explanation
from .stats import AssociationResult, js_distance, pearson
from .taxonomy import Taxonomy

GLOBAL_OUTCOME = "cross_entropy"


@dataclass(frozen=True)
class RecordOutcome:
    cross_entropy: float
    local: LocalOutcome

    def value(self, outcome: str) -> float | None:
        if outcome == GLOBAL_OUTCOME:
            return self.cross_entropy
        return self.local.means.get(_category(outcome))


def _category(outcome: str) -> str:
    return outcome[4:] if outcome.startswith("ntp:") else outcome


def performance_sign(outcome: str) -> int:
    """+1 when larger outcome values mean better predictions."""
    return -1 if outcome == GLOBAL_OUTCOME else 1


@dataclass(frozen=True)
class AnalysisConfig:
    seed: int
    bootstrap_n: int = 1000
    bins: int = 30
    log_base: float = 2
    ce_mode: str = "sum"
    ce_base: float = math.e
    metric_root: bool = False
    association: str | None = None  # "js" or "pearson"; default by kind
    method: str | None = None  # estimator override
    caliper: float | None = None  # PSM caliper, SDs of the logit score
    ties: str = "lowest"  # PSM tie handling: "lowest" or "average"
    covariates_from: str = "control"  # or "own"
    granularity: str = "char"
    normalized_dose: bool = False
    signed: bool = False
    n_simulations: int = 25
    keep_fraction: float = 0.8
    effect_on_t: float = 0.2
    effect_on_y: float = 0.2
    assoc_min: float = 0.3
    ate_min: float = 0.05
    tolerances: Tolerances = field(default_factory=Tolerances)
    from_label: str | None = None
    to_label: str | None = None
    local: bool = True
    refute: bool = True

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["tolerances"] = asdict(self.tolerances)
        return doc


# per-record measurements -----------------------------------------------------


def record_outcomes(
    testbed: Testbed, taxonomy: Taxonomy, mode: str = "sum", base: float = math.e
) -> dict[str, RecordOutcome]:
    return {
        r.id: RecordOutcome(cross_entropy(r.ntp, mode, base).value, ntp_by_category(r, taxonomy))
        for r in testbed.records
    }


def record_covariates(testbed: Testbed) -> dict[str, CovariateVector]:
    out = {}
    for r in testbed.records:
        if r.source is None:
            raise MissingSourceError(f"record {r.id!r} has no source; covariates need method text")
        out[r.id] = extract_covariates(r.source, len(r.tokens))
    return out


def prepare(testbed: Testbed, config: AnalysisConfig) -> Testbed:
    """Derive clone doses when a non-binary testbed carries sources instead of doses."""
    if testbed.needs_clone_doses():
        return dose_clone_pairs(testbed, config.granularity, config.normalized_dose)
    return testbed


@dataclass(frozen=True)
class UnitTable:
    data: CausalData
    unit_ids: tuple[str, ...]

    @property
    def arms(self) -> list[str]:
        if self.data.kind != "binary":
            return ["dose"] * len(self.unit_ids)
        return ["treatment" if t == 1 else "control" for t in self.data.treatment]


def build_units(
    testbed: Testbed,
    outcomes: dict[str, RecordOutcome],
    covariates: dict[str, CovariateVector] | None,
    outcome: str,
    covariate_names: tuple[str, ...] = (),
    *,
    covariates_from: str = "control",
    signed: bool = False,
) -> UnitTable:
    """One estimation row per unit.

    Binary testbeds yield one unit per record, with covariates read from the
    pair's control record by default. Clone testbeds yield one unit per pair
    whose outcome is the absolute (or signed) difference of the siblings'
    outcomes. Units lacking the outcome (a category absent from a method)
    are dropped.
    """
    unknown = [c for c in covariate_names if c not in COVARIATE_NAMES]
    if unknown:
        raise MissingNodeError(f"unknown covariates {unknown}; choose from {list(COVARIATE_NAMES)}")
    if covariate_names and covariates is None:
        raise MissingSourceError("covariates requested but not extracted")

    def z_of(record_id):
        return covariates[record_id].values(covariate_names) if covariate_names else []

    ids, t, y, z = [], [], [], []
    if testbed.intervention_kind == "binary":
        for treated, control in pair_records(testbed):
            for rec, arm in ((treated, 1.0), (control, 0.0)):
                value = outcomes[rec.id].value(outcome)
                if value is None:
                    continue
                source = control if covariates_from == "control" else rec
                ids.append(rec.id)
                t.append(arm)
                y.append(value)
                z.append(z_of(source.id))
    elif testbed.clone_pairs:
        for first, second in clone_pairs(testbed):
            a = outcomes[first.id].value(outcome)
            b = outcomes[second.id].value(outcome)
            if a is None or b is None:
                continue
            ids.append(first.pair_id)
            t.append(first.dose)
            y.append(b - a if signed else abs(b - a))
            z.append(z_of(first.id))
    else:
        for rec in sorted(testbed.records, key=lambda r: r.id):
            value = outcomes[rec.id].value(outcome)
            if value is None:
                continue
            ids.append(rec.id)
            t.append(rec.dose)
            y.append(value)
            z.append(z_of(rec.id))
    n = len(ids)
    data = CausalData(
        np.asarray(t, dtype=float),
        np.asarray(y, dtype=float),
        np.asarray(z, dtype=float).reshape(n, len(covariate_names)),
        tuple(covariate_names),
        testbed.intervention_kind,
    )
    return UnitTable(data, tuple(ids))


# association and deltas ------------------------------------------------------


def association_kind(kind: str, override: str | None = None) -> str:
    if override:
        return override
    return "js" if kind == "binary" else "pearson"


def associate(units: UnitTable, config: AnalysisConfig, return_distributions: bool = False):
    data = units.data
    kind = association_kind(data.kind, config.association)
    if kind == "js":
        if data.kind != "binary":
            raise ValueError("JS distance compares two arms; use pearson for dose treatments")
        treated = data.outcome[data.treatment == 1]
        control = data.outcome[data.treatment == 0]
        return js_distance(
            control,
            treated,
            seed=config.seed,
            bootstrap_n=config.bootstrap_n,
            bins=config.bins,
            log_base=config.log_base,
            metric_root=config.metric_root,
            return_distributions=return_distributions,
        )
    value = pearson(data.treatment, data.outcome)
    result = AssociationResult("pearson", value, len(data), seed=config.seed)
    if return_distributions:
        return result, None, None
    return result


def observed_change(data: CausalData) -> float:
    """Raw outcome change: difference in arm means, or OLS slope per unit dose."""
    if data.kind == "binary":
        return float(data.outcome[data.treatment == 1].mean() - data.outcome[data.treatment == 0].mean())
    t = data.treatment - data.treatment.mean()
    return float(t @ (data.outcome - data.outcome.mean()) / (t @ t))


def _labels(testbed: Testbed, config: AnalysisConfig) -> tuple[str, str]:
    if testbed.intervention_kind == "binary":
        default = ("control", "treatment")
    else:
        default = ("lower dose", "higher dose")
    return config.from_label or default[0], config.to_label or default[1]


def make_estimator(method: str, config: AnalysisConfig):
    options = {}
    if method == "psm":
        options = {"caliper": config.caliper, "ties": config.ties}
    return lambda data: estimate(data, method, **options)


# pipeline --------------------------------------------------------------------


def run_analysis(
    testbed: Testbed, taxonomy: Taxonomy, scm: Scm, config: AnalysisConfig, *, provenance=None
) -> CausalReport:
    testbed = prepare(testbed, config)
    estimand: Estimand = identify(scm)
    outcomes = record_outcomes(testbed, taxonomy, config.ce_mode, config.ce_base)
    covariates = record_covariates(testbed) if estimand.adjustment_set else None

    def units_for(outcome):
        return build_units(
            testbed,
            outcomes,
            covariates,
            outcome,
            estimand.adjustment_set,
            covariates_from=config.covariates_from,
            signed=config.signed,
        )

    units = units_for(scm.outcome)
    method = config.method or default_method(testbed.intervention_kind, bool(estimand.adjustment_set))
    estimator = make_estimator(method, config)
    association = associate(units, config)
    est = estimator(units.data)

    refutations = None
    if config.refute:
        refutations = refute(
            units.data,
            estimator,
            config.seed,
            original=est.ate,
            effect_on_t=config.effect_on_t,
            effect_on_y=config.effect_on_y,
            keep_fraction=config.keep_fraction,
            n_simulations=config.n_simulations,
            tolerances=config.tolerances,
        )
    spurious = detect_spurious(association.value, est.ate, config.assoc_min, config.ate_min)

    from_label, to_label = _labels(testbed, config)
    concept = "global" if scm.outcome == GLOBAL_OUTCOME else _category(scm.outcome)
    explanations = [
        render_explanation(
            concept,
            performance_sign(scm.outcome) * observed_change(units.data),
            from_label,
            to_label,
            est.ate,
        )
    ]

    local_effects = []
    if config.local:
        for category in taxonomy.names:
            if _category(scm.outcome) == category:
                continue
            effect, explanation = _local_effect(units_for(f"ntp:{category}"), category, estimator, config)
            local_effects.append(effect)
            if explanation is not None:
                explanations.append(
                    render_explanation(category, explanation[0], from_label, to_label, explanation[1])
                )

    prov = {
        "version": __version__,
        "testbed": testbed.name,
        "kind": testbed.intervention_kind,
        "clone_pairs": testbed.clone_pairs,
        "n_records": len(testbed),
        "taxonomy_version": taxonomy.version,
        "scm": scm.to_json(),
        "method": method,
        "config": config.to_json(),
    }
    if provenance:
        prov.update(provenance)
    return CausalReport(
        testbed=testbed.name,
        outcome=scm.outcome,
        association=association,
        estimand=estimand,
        estimate=est,
        refutations=refutations,
        spurious=spurious,
        explanations=tuple(explanations),
        local_effects=tuple(local_effects),
        provenance=prov,
    )


def _local_effect(units: UnitTable, category: str, estimator, config: AnalysisConfig):
    data = units.data
    if len(data) < 2:
        return LocalEffect(category, len(data), note="too few units"), None
    try:
        assoc = associate(units, config).value
        ate = estimator(data).ate
    except (DocodeError, ValueError, np.linalg.LinAlgError) as exc:
        return LocalEffect(category, len(data), note=f"not estimable: {exc}"), None
    delta = observed_change(data)
    return LocalEffect(category, len(data), assoc, ate), (delta, ate)
