"""Association measures: Pearson correlation and bootstrapped Jensen-Shannon distance.

The JS distance here is the *square* of the Jensen-Shannon divergence between
histograms of bootstrapped means of the two outcome samples. Pass
``metric_root=True`` to :func:`js_distance` for the conventional square root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    EdgeMismatchError,
    EmptyInputError,
    LengthMismatchError,
    ZeroResamplesError,
    ZeroVarianceError,
)

SMOOTHING = 1e-10


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    masses: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return np.array_equal(self.bin_edges, other.bin_edges) and np.array_equal(
            self.masses, other.masses
        )


@dataclass(frozen=True)
class AssociationResult:
    kind: str  # "pearson" or "js_distance"
    value: float
    n: int
    seed: int | None = None
    bootstrap_n: int | None = None
    bins: int | None = None
    log_base: float | None = None
    metric: str | None = None  # "squared" (default) or "root" for js_distance

    def to_json(self) -> dict:
        doc = {
            "kind": self.kind,
            "value": self.value,
            "n": self.n,
            "seed": self.seed,
            "bootstrap_n": self.bootstrap_n,
            "bins": self.bins,
            "log_base": self.log_base,
        }
        if self.metric is not None:
            doc["metric"] = self.metric
        return doc


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatchError(f"series lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise LengthMismatchError("pearson needs at least two observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ZeroVarianceError("pearson correlation undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def bootstrap(
    values: Sequence[float],
    n_resamples: int,
    seed: int,
    statistic: Callable[..., np.ndarray] = np.mean,
) -> np.ndarray:
    """Statistic of ``n_resamples`` with-replacement resamples of ``values``.

    ``statistic`` must accept an ``axis`` keyword (any numpy reduction does).
    Resample ``i`` draws its indices from a stream derived from ``(seed, i)``,
    so results do not depend on how the work is chunked.
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise EmptyInputError("cannot bootstrap an empty series")
    if n_resamples < 1:
        raise ZeroResamplesError("n_resamples must be at least 1")
    streams = np.random.SeedSequence(seed).spawn(n_resamples)
    out = np.empty(n_resamples)
    chunk = max(1, 2_000_000 // x.size)
    for lo in range(0, n_resamples, chunk):
        block = streams[lo : lo + chunk]
        idx = np.stack([np.random.default_rng(s).integers(0, x.size, x.size) for s in block])
        out[lo : lo + len(block)] = statistic(x[idx], axis=1)
    return out


def histogram_pair(a: Sequence[float], b: Sequence[float], bins: int = 30) -> tuple[Histogram, Histogram]:
    """Smoothed, normalised histograms of ``a`` and ``b`` on shared equal-width bins."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size == 0 or y.size == 0:
        raise EmptyInputError("histograms need non-empty series")
    if bins < 2:
        raise ValueError("bins must be at least 2")
    lo = min(x.min(), y.min())
    hi = max(x.max(), y.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)

    def masses(v):
        counts, _ = np.histogram(v, bins=edges)
        m = counts / counts.sum() + SMOOTHING
        return m / m.sum()

    return Histogram(edges, masses(x)), Histogram(edges.copy(), masses(y))


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    # q == 0 with p > 0 only happens when (p + q') / 2 underflows (subnormal p);
    # such terms are below 1e-300 and are dropped
    mask = (p > 0) & (q > 0)
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def jsd(p: Histogram, q: Histogram, log_base: float = 2) -> float:
    """Jensen-Shannon divergence, 0 <= jsd <= log_base(2)."""
    if not np.array_equal(p.bin_edges, q.bin_edges):
        raise EdgeMismatchError("histograms do not share bin edges")
    pm = np.asarray(p.masses, dtype=float)
    qm = np.asarray(q.masses, dtype=float)
    m = (pm + qm) / 2
    value = 0.5 * _kl(pm, m) + 0.5 * _kl(qm, m)
    value /= math.log(log_base)
    return min(max(value, 0.0), math.log(2) / math.log(log_base))


def js_distance(
    a_values: Sequence[float],
    b_values: Sequence[float],
    *,
    seed: int,
    bootstrap_n: int = 1000,
    bins: int = 30,
    log_base: float = 2,
    metric_root: bool = False,
    return_distributions: bool = False,
):
    """Bootstrapped JS distance between two outcome samples.

    Both samples are resampled with the same seed, so identical inputs give
    identical bootstrap distributions and a distance of exactly zero.
    """
    boot_a = bootstrap(a_values, bootstrap_n, seed)
    boot_b = bootstrap(b_values, bootstrap_n, seed)
    p, q = histogram_pair(boot_a, boot_b, bins)
    divergence = jsd(p, q, log_base)
    value = math.sqrt(divergence) if metric_root else divergence**2
    result = AssociationResult(
        kind="js_distance",
        value=value,
        n=len(a_values) + len(b_values),
        seed=seed,
        bootstrap_n=bootstrap_n,
        bins=bins,
        log_base=log_base,
        metric="root" if metric_root else "squared",
    )
    if return_distributions:
        return result, boot_a, boot_b
    return result
