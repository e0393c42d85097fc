"""Synthetic data families with known treatment effects."""

from __future__ import annotations

import numpy as np

from .causal import CausalData


def confounded(n: int = 5000, seed: int = 0, effect: float = 2.0, z_effect: float = 3.0) -> CausalData:
    """Z ~ N(0, 1), T = 1[Z + e > 0], Y = effect * T + z_effect * Z + e'."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    t = (z + rng.standard_normal(n) > 0).astype(float)
    y = effect * t + z_effect * z + rng.standard_normal(n)
    return CausalData(t, y, z[:, None], ("z",), "binary")


def randomized(n: int = 5000, seed: int = 0, effect: float = 2.0, noise: float = 0.1) -> CausalData:
    """T ~ Bernoulli(0.5) independent of Z; Y = effect * T + noise * e."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    t = (rng.random(n) < 0.5).astype(float)
    y = effect * t + noise * rng.standard_normal(n)
    return CausalData(t, y, z[:, None], ("z",), "binary")


def spurious(n: int = 5000, seed: int = 0) -> CausalData:
    """Confounded family with no direct effect: Y = 3Z + e, T = 1[Z + e' > 0]."""
    return confounded(n, seed, effect=0.0)


def discrete_confounded(n: int = 4000, seed: int = 0, strata: int = 4, effect: float = 2.0) -> CausalData:
    """Z uniform on ``strata`` levels driving both T and Y; the adjustment formula is exact here."""
    rng = np.random.default_rng(seed)
    z = rng.integers(0, strata, n).astype(float)
    p = 0.2 + 0.6 * z / max(strata - 1, 1)
    t = (rng.random(n) < p).astype(float)
    y = effect * t + 1.5 * z + rng.standard_normal(n)
    return CausalData(t, y, z[:, None], ("z",), "binary")


def dose_response(doses=(6, 12, 24), n_per: int = 200, slope: float = 0.5, seed: int = 0) -> CausalData:
    """Y = slope * T + e on a discrete dose grid."""
    rng = np.random.default_rng(seed)
    t = np.repeat(np.asarray(doses, dtype=float), n_per)
    y = slope * t + rng.standard_normal(t.size)
    return CausalData(t, y, np.empty((t.size, 0)), (), "discrete")
