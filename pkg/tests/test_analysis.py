from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest

from docode.analysis import (
    AnalysisConfig,
    build_units,
    observed_change,
    performance_sign,
    record_covariates,
    record_outcomes,
    run_analysis,
)
from docode.causal import build_scm
from docode.errors import MissingNodeError, MissingSourceError
from docode.ingest import parse_prediction_log
from docode.report import emit_report
from docode.taxonomy import default_taxonomy
from docode.toy import TOY_SCM, make_clone_testbed, make_toy_testbed, write_toy_files

TAX = default_taxonomy()
FAST = AnalysisConfig(seed=0, bootstrap_n=100, n_simulations=3)


def test_bundled_files_match_the_generator(toy_paths, tmp_path):
    fresh = write_toy_files(tmp_path)
    for bundled, generated in zip(toy_paths, fresh):
        assert open(bundled, "rb").read() == open(generated, "rb").read()


def test_toy_shape():
    tb = make_toy_testbed()
    assert len(tb) == 40 and tb.intervention_kind == "binary"
    assert {r.arm for r in tb.records} == {"control", "treatment"}
    assert all(r.source for r in tb.records)


def test_units_take_covariates_from_the_control_record():
    tb = make_toy_testbed()
    outcomes = record_outcomes(tb, TAX)
    covs = record_covariates(tb)
    units = build_units(tb, outcomes, covs, "cross_entropy", ("subwords",))
    z = units.data.covariates[:, 0]
    assert np.array_equal(z[0::2], z[1::2])
    own = build_units(tb, outcomes, covs, "cross_entropy", ("subwords",), covariates_from="own")
    assert own.data.covariates[:, 0].tolist() == [covs[i].subwords for i in own.unit_ids]
    assert units.arms[:2] == ["treatment", "control"]


def test_unit_errors():
    tb = make_toy_testbed()
    outcomes = record_outcomes(tb, TAX)
    with pytest.raises(MissingNodeError):
        build_units(tb, outcomes, None, "cross_entropy", ("height",))
    with pytest.raises(MissingSourceError):
        build_units(tb, outcomes, None, "cross_entropy", ("subwords",))


def test_clone_units_are_absolute_differences():
    from docode.analysis import prepare

    tb = prepare(make_clone_testbed(), FAST)
    outcomes = record_outcomes(tb, TAX)
    units = build_units(tb, outcomes, None, "cross_entropy")
    signed = build_units(tb, outcomes, None, "cross_entropy", signed=True)
    assert np.array_equal(units.data.outcome, np.abs(signed.data.outcome))
    assert units.data.kind == "continuous" and len(units.data) == 24


def test_observed_change():
    from docode.causal import CausalData

    binary = CausalData(np.array([1.0, 0.0, 1.0, 0.0]), np.array([3.0, 1.0, 5.0, 1.0]), np.empty((4, 0)))
    assert observed_change(binary) == 3.0
    dose = CausalData(np.array([1.0, 2.0, 3.0]), np.array([2.0, 4.0, 6.0]), np.empty((3, 0)), kind="discrete")
    assert observed_change(dose) == pytest.approx(2.0)
    assert performance_sign("cross_entropy") == -1 and performance_sign("ntp:loops") == 1


def test_run_analysis_on_the_toy():
    tb = make_toy_testbed()
    report = run_analysis(tb, TAX, build_scm(TOY_SCM), FAST)
    doc = json.loads(emit_report(report))
    assert doc["estimate"]["method"] == "psm"
    assert doc["association"]["kind"] == "js_distance"
    assert doc["explanations"][0]["text"].startswith("global ")
    assert {e["category"] for e in doc["local_effects"]} <= set(TAX.names)
    assert doc["provenance"]["config"]["seed"] == 0
    # cross-entropy rises when predictions worsen, so the sign flips for the explanation
    change = observed_change(
        build_units(tb, record_outcomes(tb, TAX), record_covariates(tb), "cross_entropy", ("subwords",)).data
    )
    assert report.explanations[0].delta == -change


def test_run_analysis_is_deterministic():
    tb = make_toy_testbed()
    scm = build_scm(TOY_SCM)
    assert emit_report(run_analysis(tb, TAX, scm, FAST)) == emit_report(run_analysis(tb, TAX, scm, FAST))
    other = dataclasses.replace(FAST, seed=1)
    assert emit_report(run_analysis(tb, TAX, scm, other)) != emit_report(run_analysis(tb, TAX, scm, FAST))


def test_round_trip_through_the_log_format(toy_paths):
    with open(toy_paths[0], encoding="utf-8") as fh:
        parsed = parse_prediction_log(fh, "binary", "toy_testbed")
    assert [r.id for r in parsed.records] == [r.id for r in make_toy_testbed().records]
