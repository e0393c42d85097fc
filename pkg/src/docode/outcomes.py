"""Potential outcomes of a prediction record.

Global performance is the cross-entropy of the ground-truth tokens; local
performance is the mean next-token probability per taxonomy category.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyMapError, EmptySequenceError, ZeroMaxError
from .ingest import PredictionRecord
from .taxonomy import Taxonomy, category_positions

PROBABILITY_FLOOR = 1e-12


@dataclass(frozen=True)
class GlobalOutcome:
    value: float
    mode: str = "sum"


@dataclass(frozen=True)
class LocalOutcome:
    means: dict[str, float]
    counts: dict[str, int]


def cross_entropy(ntp: Sequence[float], mode: str = "sum", base: float = math.e) -> GlobalOutcome:
    """Negative log-likelihood of the observed tokens, summed or averaged.

    Probabilities are floor-clamped at 1e-12 so exact zeros stay finite.
    """
    if mode not in ("sum", "mean"):
        raise ValueError(f"mode must be 'sum' or 'mean', not {mode!r}")
    p = np.asarray(ntp, dtype=float)
    if p.size == 0:
        raise EmptySequenceError("cross-entropy of an empty sequence")
    nll = -np.log(np.clip(p, PROBABILITY_FLOOR, 1.0))
    if base != math.e:
        nll = nll / math.log(base)
    value = float(nll.sum()) if mode == "sum" else float(nll.mean())
    return GlobalOutcome(value + 0.0, mode)  # + 0.0 turns -0.0 into 0.0


def ntp_by_category(record: PredictionRecord, taxonomy: Taxonomy) -> LocalOutcome:
    ntp = record.ntp
    means = {}
    counts = {}
    for name, positions in category_positions(taxonomy, record.tokens).items():
        means[name] = math.fsum(ntp[i] for i in positions) / len(positions)
        counts[name] = len(positions)
    return LocalOutcome(means, counts)


def normalized_ccp(category_means: Mapping[str, float]) -> dict[str, float]:
    """Scale category means so the best-predicted category maps to 1.0."""
    if not category_means:
        raise EmptyMapError("no category means to normalise")
    top = max(category_means.values())
    if top <= 0:
        raise ZeroMaxError("all category means are zero")
    return {name: value / top for name, value in category_means.items()}
