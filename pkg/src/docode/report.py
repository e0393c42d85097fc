"""Explanations, reports and plot artefacts."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Mapping, Sequence

import numpy as np

from .causal import CausalEstimate, Estimand
from .errors import IoError
from .refutation import RefutationReport, SpuriousVerdict
from .stats import AssociationResult

UNAFFECTED_BELOW = 1e-6

TEMPLATE = (
    "{concept} {verb} by {delta}, due to a change in model application "
    "from {source} to {target}, with a causal analysis ATE of {ate}"
)


def fmt(x: float) -> str:
    """Four significant digits; scientific notation below 1e-4, as in result tables."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "-"
    text = format(float(x), ".4g")
    return "0" if text in ("-0", "0") else text


@dataclass(frozen=True)
class Explanation:
    concept: str
    delta: float
    intervention_from: str
    intervention_to: str
    ate: float
    text: str


def render_explanation(
    concept: str, delta: float, from_label: str, to_label: str, ate: float
) -> Explanation:
    if not (math.isfinite(delta) and math.isfinite(ate)):
        raise ValueError("explanations need finite delta and ATE")
    if abs(delta) < UNAFFECTED_BELOW:
        verb = "was unaffected"
    elif delta < 0:
        verb = "performed worse"
    else:
        verb = "performed better"
    text = TEMPLATE.format(
        concept=concept,
        verb=verb,
        delta=fmt(abs(delta)),
        source=from_label,
        target=to_label,
        ate=fmt(ate),
    )
    return Explanation(concept, delta, from_label, to_label, ate, text)


@dataclass(frozen=True)
class LocalEffect:
    category: str
    n: int
    association: float | None = None
    ate: float | None = None
    note: str | None = None


@dataclass(frozen=True)
class CausalReport:
    testbed: str
    outcome: str
    association: AssociationResult
    estimand: Estimand
    estimate: CausalEstimate
    refutations: RefutationReport | None
    spurious: SpuriousVerdict
    explanations: tuple[Explanation, ...] = ()
    local_effects: tuple[LocalEffect, ...] = ()
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return _clean(
            {
                "testbed": self.testbed,
                "outcome": self.outcome,
                "association": self.association.to_json(),
                "estimand": self.estimand.to_json(),
                "estimate": self.estimate.to_json(),
                "refutations": None if self.refutations is None else self.refutations.to_json(),
                "spurious": self.spurious.to_json(),
                "explanations": [asdict(e) for e in self.explanations],
                "local_effects": [asdict(e) for e in self.local_effects],
                "provenance": self.provenance,
            }
        )


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as null."""
    if is_dataclass(obj):
        obj = asdict(obj)
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(doc) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


_ROWS = (
    ("Causal Eff. ATE", None),
    ("Random Comm. Cause", "r1_random_cause"),
    ("Unobserved Comm. Cause", "r2_unobserved_cause"),
    ("Placebo", "r3_placebo"),
    ("Remove Subset", "r4_subset"),
)


def _markdown(report: CausalReport) -> str:
    assoc = report.association
    label = "JS Dist." if assoc.kind == "js_distance" else "Pearson"
    out = [f"# Causal report: {report.testbed}", ""]
    out.append(f"| | {report.outcome} |")
    out.append("|---|---|")
    out.append(f"| Association ({label}) | {fmt(assoc.value)} |")
    refs = report.refutations
    for title, key in _ROWS:
        if key is None:
            value = fmt(report.estimate.ate)
        elif refs is None:
            value = "-"
        else:
            value = f"{fmt(getattr(refs, key))} ({refs.verdicts[key]})"
        out.append(f"| {title} | {value} |")
    out.append("")

    sp = report.spurious
    if sp.verdict == "spurious":
        out.append(
            f"**⚠ spurious correlation**: association {fmt(sp.association)} "
            f"(>= {fmt(sp.assoc_min)}) but |ATE| {fmt(abs(sp.ate))} (< {fmt(sp.ate_min)})."
        )
    elif sp.verdict == "causal":
        out.append(f"Verdict: causal effect (association {fmt(sp.association)}, ATE {fmt(sp.ate)}).")
    else:
        out.append(f"Verdict: no effect (association {fmt(sp.association)}, ATE {fmt(sp.ate)}).")
    out.append("")
    est = report.estimate
    adjust = ", ".join(report.estimand.adjustment_set) or "none"
    out.append(f"Estimator: {est.method} on {est.n} units; adjustment set: {adjust}.")
    out.append("")

    if report.explanations:
        out += ["## Explanations", ""]
        out += [f"- {e.text}" for e in report.explanations]
        out.append("")
    if report.local_effects:
        out += ["## Local performance by category", ""]
        out += ["| Category | n | Association | ATE | Note |", "|---|---|---|---|---|"]
        for le in report.local_effects:
            out.append(
                f"| {le.category} | {le.n} | {fmt(le.association)} | {fmt(le.ate)} | {le.note or ''} |"
            )
        out.append("")
    if report.provenance:
        out += ["## Provenance", "", "```json", dumps(report.provenance).rstrip(), "```", ""]
    return "\n".join(out)


def emit_report(report: CausalReport, format: str = "json") -> str:
    if format == "json":
        return dumps(report.to_json())
    if format == "markdown":
        return _markdown(report)
    raise ValueError(f"unknown report format {format!r}")


# plot data -------------------------------------------------------------------


def _columns(columns: Mapping[str, Sequence]) -> dict[str, list]:
    if not columns or any(len(v) == 0 for v in columns.values()):
        raise IoError("refusing to write plot data for an empty series")
    lengths = {len(v) for v in columns.values()}
    if len(lengths) != 1:
        raise IoError(f"plot columns differ in length: {sorted(lengths)}")
    return {k: list(v) for k, v in columns.items()}


def _write(path, text: str):
    try:
        parent = os.path.dirname(os.fspath(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(str(exc)) from exc


def write_series_csv(path, columns: Mapping[str, Sequence]) -> None:
    """One CSV column per series (e.g. two bootstrap distributions)."""
    cols = _columns(columns)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in zip(*cols.values()):
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    _write(path, buf.getvalue())


def write_scatter_csv(path, x: Sequence[float], y: Sequence[float], arm: Sequence) -> None:
    write_series_csv(path, {"x": x, "y": y, "arm": arm})


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")
_W, _H, _PAD = 480, 320, 40


def _scale(values, lo, hi, out_lo, out_hi):
    span = (hi - lo) or 1.0
    return out_lo + (np.asarray(values, dtype=float) - lo) / span * (out_hi - out_lo)


def _svg(body: list[str], title: str) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">'
    )
    frame = (
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        'fill="none" stroke="#444"/>'
    )
    caption = f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="13">{title}</text>'
    return "\n".join([head, caption, frame, *body, "</svg>"]) + "\n"


def write_histogram_svg(path, series: Mapping[str, Sequence[float]], bins: int = 30, title: str = "") -> None:
    """Overlaid histograms on shared bins."""
    if not series or any(len(v) == 0 for v in series.values()):
        raise IoError("refusing to plot an empty series")
    pooled = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    lo, hi = float(pooled.min()), float(pooled.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    hists = {k: np.histogram(v, bins=edges)[0] / len(v) for k, v in series.items()}
    top = max(float(h.max()) for h in hists.values()) or 1.0
    xs = _scale(edges, lo, hi, _PAD, _W - _PAD)
    body = []
    for i, (name, h) in enumerate(hists.items()):
        color = _PALETTE[i % len(_PALETTE)]
        heights = _scale(h, 0, top, 0, _H - 2 * _PAD)
        for k, height in enumerate(heights):
            if height > 0:
                body.append(
                    f'<rect x="{xs[k]:.2f}" y="{_H - _PAD - height:.2f}" width="{xs[k + 1] - xs[k]:.2f}" '
                    f'height="{height:.2f}" fill="{color}" fill-opacity="0.45"/>'
                )
        body.append(
            f'<text x="{_W - _PAD - 4}" y="{_PAD + 16 * (i + 1)}" text-anchor="end" '
            f'font-size="11" fill="{color}">{name}</text>'
        )
    _write(path, _svg(body, title))


def write_scatter_svg(path, x: Sequence[float], y: Sequence[float], arm: Sequence, title: str = "") -> None:
    """Scatter coloured by arm with the pooled least-squares line."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or x.size != y.size or len(arm) != x.size:
        raise IoError("scatter needs equal-length, non-empty x, y and arm")
    xlo, xhi, ylo, yhi = x.min(), x.max(), y.min(), y.max()
    px = _scale(x, xlo, xhi, _PAD, _W - _PAD)
    py = _scale(y, ylo, yhi, _H - _PAD, _PAD)
    groups = list(dict.fromkeys(arm))
    body = []
    for xi, yi, a in zip(px, py, arm):
        color = _PALETTE[groups.index(a) % len(_PALETTE)]
        body.append(f'<circle cx="{xi:.2f}" cy="{yi:.2f}" r="2.5" fill="{color}" fill-opacity="0.7"/>')
    if x.size >= 2 and xhi > xlo:
        slope, intercept = np.polyfit(x, y, 1)
        ends = np.array([xlo, xhi])
        lx = _scale(ends, xlo, xhi, _PAD, _W - _PAD)
        ly = _scale(slope * ends + intercept, ylo, yhi, _H - _PAD, _PAD)
        body.append(
            f'<line x1="{lx[0]:.2f}" y1="{ly[0]:.2f}" x2="{lx[1]:.2f}" y2="{ly[1]:.2f}" '
            'stroke="#222" stroke-width="1.5"/>'
        )
    for i, g in enumerate(groups):
        body.append(
            f'<text x="{_W - _PAD - 4}" y="{_PAD + 16 * (i + 1)}" text-anchor="end" '
            f'font-size="11" fill="{_PALETTE[i % len(_PALETTE)]}">{g}</text>'
        )
    _write(path, _svg(body, title))


def emit_plot_data(path, *, distributions=None, scatter=None, svg: bool = False, bins: int = 30) -> list[str]:
    """Write plot CSV (and optionally SVG) files; returns the paths written.

    ``distributions`` maps series names to values; ``scatter`` is an
    ``(x, y, arm)`` triple. Nothing is written if any series is empty.
    """
    written = []
    base, _ = os.path.splitext(os.fspath(path))
    if distributions is not None:
        write_series_csv(path, distributions)
        written.append(os.fspath(path))
        if svg:
            write_histogram_svg(base + ".svg", distributions, bins)
            written.append(base + ".svg")
    if scatter is not None:
        x, y, arm = scatter
        target = path if distributions is None else base + "_scatter.csv"
        write_scatter_csv(target, x, y, arm)
        written.append(os.fspath(target))
        if svg:
            svg_path = os.path.splitext(os.fspath(target))[0] + ".svg"
            write_scatter_svg(svg_path, x, y, arm)
            written.append(svg_path)
    if not written:
        raise IoError("nothing to write: pass distributions or scatter")
    return written
