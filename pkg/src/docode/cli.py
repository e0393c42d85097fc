"""Causal analysis of code model prediction logs from the command line.

Subcommands follow the analysis order: ``ingest``, ``covariates``,
``outcomes``, ``associate``, ``estimate``, ``refute``, ``report``, and
``pipeline`` (all of them, in that order, plus a manifest).

Exit codes: 0 success, 1 invalid input, 2 estimation failure, 3 a refutation
failed under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
from functools import cached_property

import numpy as np

from . import __version__
from .analysis import (
    GLOBAL_OUTCOME,
    AnalysisConfig,
    associate,
    build_units,
    default_method,
    make_estimator,
    observed_change,
    prepare,
    record_covariates,
    record_outcomes,
    run_analysis,
)
from .causal import build_scm, identify
from .covariates import APPROXIMATE_COVARIATES, COVARIATE_NAMES
from .errors import EstimationError, ValidationError
from .ingest import KINDS, clone_pairs, dump_prediction_log, pair_records, parse_prediction_log
from .refutation import refute
from .report import dumps, emit_plot_data, emit_report
from .taxonomy import default_taxonomy, load_taxonomy

STOCHASTIC = {"associate", "refute", "report", "pipeline"}
STAGES = ("ingest", "covariates", "outcomes", "associate", "estimate", "refute", "report")


class UsageError(ValidationError):
    pass


class StrictFailure(Exception):
    pass


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _write(out_dir: str, name: str, text: str) -> str:
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


class Run:
    """Lazily loaded inputs shared by the stages of one invocation."""

    def __init__(self, args):
        self.args = args
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)
        self.written: list[str] = []

    def emit(self, name: str, text: str):
        self.written.append(_write(self.out, name, text))

    @cached_property
    def config(self) -> AnalysisConfig:
        a = self.args
        strength_t, strength_y = a.confounder_strength
        return AnalysisConfig(
            seed=a.seed if a.seed is not None else 0,
            bootstrap_n=a.bootstrap_n,
            bins=a.bins,
            log_base=2 if a.log_base == "2" else math.e,
            ce_mode=a.ce_mode,
            ce_base=2 if a.ce_base == "2" else math.e,
            metric_root=a.metric_root,
            association=a.association,
            method=a.method,
            caliper=a.caliper,
            ties=a.ties,
            covariates_from=a.covariates_from,
            granularity=a.granularity,
            normalized_dose=a.normalized_dose,
            signed=a.signed,
            n_simulations=a.simulations,
            keep_fraction=a.keep_fraction,
            effect_on_t=strength_t,
            effect_on_y=strength_y,
            assoc_min=a.assoc_min,
            ate_min=a.ate_min,
            from_label=a.from_label,
            to_label=a.to_label,
            local=not a.no_local,
        )

    @cached_property
    def testbed(self):
        path = self.args.testbed
        if not path:
            raise UsageError("--testbed is required")
        name = os.path.splitext(os.path.basename(path))[0]
        with open(path, encoding="utf-8") as fh:
            raw = parse_prediction_log(fh, self.args.kind, name)
        return prepare(raw, self.config)

    @cached_property
    def taxonomy(self):
        path = self.args.taxonomy
        if path in (None, "default"):
            return default_taxonomy()
        with open(path, encoding="utf-8") as fh:
            return load_taxonomy(fh.read())

    @cached_property
    def scm(self):
        path = self.args.scm
        if not path:
            return build_scm({"treatment": "T", "outcome": GLOBAL_OUTCOME, "covariates": []})
        with open(path, encoding="utf-8") as fh:
            return build_scm(fh.read())

    @cached_property
    def estimand(self):
        return identify(self.scm)

    @cached_property
    def outcomes(self):
        return record_outcomes(self.testbed, self.taxonomy, self.config.ce_mode, self.config.ce_base)

    @cached_property
    def covariates(self):
        return record_covariates(self.testbed)

    @cached_property
    def units(self):
        covs = self.covariates if self.estimand.adjustment_set else None
        return build_units(
            self.testbed,
            self.outcomes,
            covs,
            self.scm.outcome,
            self.estimand.adjustment_set,
            covariates_from=self.config.covariates_from,
            signed=self.config.signed,
        )

    @cached_property
    def method(self):
        return self.config.method or default_method(
            self.testbed.intervention_kind, bool(self.estimand.adjustment_set)
        )

    @cached_property
    def estimator(self):
        return make_estimator(self.method, self.config)

    def input_digests(self) -> dict:
        digests = {"testbed": _sha256(self.args.testbed)}
        if self.args.taxonomy not in (None, "default"):
            digests["taxonomy"] = _sha256(self.args.taxonomy)
        else:
            digests["taxonomy"] = hashlib.sha256(self.taxonomy.to_json().encode()).hexdigest()
        if self.args.scm:
            digests["scm"] = _sha256(self.args.scm)
        return digests


# stages ----------------------------------------------------------------------


def stage_ingest(run: Run):
    tb = run.testbed
    run.emit("records.jsonl", dump_prediction_log(tb))
    if tb.intervention_kind == "binary":
        rows = [("pair_id", "treatment_id", "control_id")]
        rows += [(t.pair_id, t.id, c.id) for t, c in pair_records(tb)]
        run.emit("pairs.csv", _csv(rows))
    elif tb.clone_pairs:
        rows = [("pair_id", "first_id", "second_id", "dose")]
        rows += [(a.pair_id, a.id, b.id, _num(a.dose)) for a, b in clone_pairs(tb)]
        run.emit("doses.csv", _csv(rows))
    else:
        rows = [("id", "pair_id", "dose")] + [(r.id, r.pair_id, _num(r.dose)) for r in tb.records]
        run.emit("doses.csv", _csv(rows))


def stage_covariates(run: Run):
    missing = any(r.source is None for r in run.testbed.records)
    if missing and run.args.command == "pipeline" and not run.estimand.adjustment_set:
        run.emit("covariates.meta.json", dumps({"skipped": "records carry no source text"}))
        return
    covs = run.covariates
    rows = [("id", *COVARIATE_NAMES)]
    rows += [(rid, *vec.values()) for rid, vec in covs.items()]
    run.emit("covariates.csv", _csv(rows))
    meta = {"approx": True, "approximate_metrics": list(APPROXIMATE_COVARIATES)}
    run.emit("covariates.meta.json", dumps(meta))


def stage_outcomes(run: Run):
    tb = run.testbed
    cats = run.taxonomy.names
    label = "arm" if tb.intervention_kind == "binary" else "dose"
    rows = [("id", "pair_id", label, "cross_entropy", *cats)]
    for rec in tb.records:
        out = run.outcomes[rec.id]
        tag = rec.arm if label == "arm" else _num(rec.dose)
        rows.append(
            (rec.id, rec.pair_id, tag, _num(out.cross_entropy), *(_num(out.local.means.get(c)) for c in cats))
        )
    run.emit("outcomes.csv", _csv(rows))


def stage_associate(run: Run):
    result, boot_a, boot_b = associate(run.units, run.config, return_distributions=True)
    doc = result.to_json()
    if result.kind == "js_distance":
        doc["note"] = "value is the squared JS divergence" if result.metric == "squared" else "value is sqrt(JSD)"
    run.emit("association.json", dumps(doc))
    if boot_a is not None:
        path = os.path.join(run.out, "bootstrap.csv")
        run.written += emit_plot_data(
            path, distributions={"control": boot_a, "treatment": boot_b}, svg=run.args.plots, bins=run.config.bins
        )
    return result


def stage_estimate(run: Run):
    est = run.estimator(run.units.data)
    doc = {
        "ate": est.ate,
        "method": est.method,
        "n": est.n,
        "estimand": run.estimand.to_json(),
        "diagnostics": est.diagnostics,
        "outcome": run.scm.outcome,
        "observed_change": observed_change(run.units.data),
    }
    run.emit("estimate.json", dumps(doc))
    return est


def stage_refute(run: Run):
    cfg = run.config
    report = refute(
        run.units.data,
        run.estimator,
        cfg.seed,
        effect_on_t=cfg.effect_on_t,
        effect_on_y=cfg.effect_on_y,
        keep_fraction=cfg.keep_fraction,
        n_simulations=cfg.n_simulations,
        tolerances=cfg.tolerances,
    )
    run.emit("refutation.json", dumps(report.to_json()))
    return report


def stage_report(run: Run):
    report = run_analysis(
        run.testbed, run.taxonomy, run.scm, run.config, provenance={"inputs": run.input_digests()}
    )
    run.emit("report.json", emit_report(report, "json"))
    run.emit("report.md", emit_report(report, "markdown"))
    units = run.units
    if units.data.covariates.shape[1]:
        x = units.data.covariates[:, 0]
        run.written += emit_plot_data(
            os.path.join(run.out, "scatter.csv"),
            scatter=(x, units.data.outcome, units.arms),
            svg=run.args.plots,
        )
    return report


_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "covariates": stage_covariates,
    "outcomes": stage_outcomes,
    "associate": stage_associate,
    "estimate": stage_estimate,
    "refute": stage_refute,
    "report": stage_report,
}


def _manifest(run: Run) -> dict:
    args = {k: v for k, v in vars(run.args).items() if k not in ("func", "manifest", "out")}
    return {
        "docode_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "args": args,
        "inputs": run.input_digests(),
        "outputs": {
            os.path.relpath(p, run.out): _sha256(p) for p in sorted(run.written)
        },
    }


def _execute(args) -> int:
    if args.command in STOCHASTIC and args.seed is None:
        raise UsageError(f"--seed is required for the {args.command} stage (no wall-clock seeding)")
    if not args.testbed:
        raise UsageError("--testbed is required")
    for flag, path in (("--testbed", args.testbed), ("--taxonomy", args.taxonomy), ("--scm", args.scm)):
        if path and path != "default" and not os.path.isfile(path):
            raise UsageError(f"{flag}: no such file {path!r}")
    run = Run(args)
    stages = STAGES if args.command == "pipeline" else (args.command,)
    refutation = None
    for name in stages:
        result = _STAGE_FUNCS[name](run)
        if name == "refute":
            refutation = result
    if args.command == "pipeline":
        _write(run.out, "manifest.json", dumps(_manifest(run)))
    if args.strict and refutation is not None and not refutation.passed:
        failed = [k for k, v in refutation.verdicts.items() if v == "fail"]
        raise StrictFailure(f"refutation failed: {', '.join(failed)}")
    return 0


def _apply_manifest(args, parser):
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    recorded = manifest.get("args", {})
    out = args.out
    for key, value in recorded.items():
        if key != "command":
            setattr(args, key, tuple(value) if key == "confounder_strength" else value)
    args.out = out
    for key, expected in manifest.get("inputs", {}).items():
        path = getattr(args, key, None)
        if path and path != "default" and _sha256(path) != expected:
            raise UsageError(f"input {key} ({path}) does not match the manifest digest")
    return args


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("inputs")
    g.add_argument("--testbed", help="prediction log (JSONL)")
    g.add_argument("--kind", choices=KINDS, default="binary", help="intervention kind")
    g.add_argument("--taxonomy", default="default", help="taxonomy JSON or 'default'")
    g.add_argument("--scm", help="SCM document (JSON)")
    g.add_argument("--manifest", help="re-run with the arguments recorded in a manifest")

    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, help="seed for every stochastic stage (required there)")
    g.add_argument("--bootstrap-n", type=int, default=1000)
    g.add_argument("--bins", type=int, default=30)
    g.add_argument("--log-base", choices=["2", "e"], default="2", help="log base of the JS divergence")
    g.add_argument("--ce-mode", choices=["sum", "mean"], default="sum")
    g.add_argument("--ce-base", choices=["e", "2"], default="e", help="log base of cross-entropy")
    g.add_argument("--strict", action="store_true", help="exit 3 when any refutation fails")
    g.add_argument("--out", default="results", help="output directory")

    g = common.add_argument_group("analysis options")
    g.add_argument("--method", choices=["psm", "linear_regression", "stratified"])
    g.add_argument("--caliper", type=float, help="PSM caliper in SDs of the logit score (e.g. 0.2)")
    g.add_argument(
        "--ties", choices=["lowest", "average"], default="lowest", help="PSM: equally close matches"
    )
    g.add_argument("--association", choices=["js", "pearson"])
    g.add_argument("--metric-root", action="store_true", help="report sqrt(JSD) instead of JSD squared")
    g.add_argument("--covariates-from", choices=["control", "own"], default="control")
    g.add_argument("--granularity", choices=["char", "token"], default="char")
    g.add_argument("--normalized-dose", action="store_true")
    g.add_argument("--signed", action="store_true", help="signed clone outcome differences")
    g.add_argument("--simulations", type=int, default=25, help="perturbations per refutation")
    g.add_argument("--keep-fraction", type=float, default=0.8)
    g.add_argument("--confounder-strength", type=float, nargs=2, default=(0.2, 0.2), metavar=("ON_T", "ON_Y"))
    g.add_argument("--assoc-min", type=float, default=0.3)
    g.add_argument("--ate-min", type=float, default=0.05)
    g.add_argument("--from-label")
    g.add_argument("--to-label")
    g.add_argument("--no-local", action="store_true", help="skip per-category outcomes")
    g.add_argument("--plots", action="store_true", help="also write SVG plots")

    parser = argparse.ArgumentParser(prog="docode", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"docode {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ingest": "validate a prediction log and pair its records",
        "covariates": "extract software metrics per method",
        "outcomes": "cross-entropy and per-category NTP per record",
        "associate": "association between treatment and outcome",
        "estimate": "average treatment effect",
        "refute": "refutation checks of the estimate",
        "report": "full causal report (JSON and Markdown)",
        "pipeline": "run every stage in order and write a manifest",
    }
    for name in (*STAGES, "pipeline"):
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.manifest:
            args = _apply_manifest(args, parser)
        return _execute(args)
    except StrictFailure as exc:
        print(f"docode: {exc}", file=sys.stderr)
        return 3
    except EstimationError as exc:
        print(f"docode: estimation failed: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"docode: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
