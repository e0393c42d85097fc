"""Structural causal models and average treatment effect estimation.

The supported graph is the canonical confounding shape: covariates ``Z``
point at both treatment ``T`` and outcome ``Y``, ``T`` points at ``Y``, and
each of ``T`` and ``Y`` has its own exogenous disturbance. Identification
adjusts for every declared covariate (the backdoor set of that shape).

Estimators
----------
* :func:`ate_psm`: 1-nearest-neighbour propensity score matching, binary T.
* :func:`ate_linear`: OLS coefficient of T, discrete or continuous T.
* :func:`ate_stratified`: exact adjustment formula over a discrete covariate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from graphlib import CycleError as _GraphCycle
from graphlib import TopologicalSorter
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    CycleError,
    EmptyCellError,
    MissingNodeError,
    NonFiniteError,
    ParseError,
    RankDeficiencyError,
    SingleArmError,
    ZeroVarianceError,
)

L2_PENALTY = 1e-4
MAX_ITER = 500
TOLERANCE = 1e-8


# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True)
class Scm:
    treatment: str
    outcome: str
    covariates: tuple[str, ...] = ()
    disturbances: tuple[str, ...] = ()
    edges: frozenset[tuple[str, str]] = frozenset()
    fixed: tuple[tuple[str, Any], ...] = ()

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.treatment, self.outcome, *self.covariates, *self.disturbances)

    def parents(self, node: str) -> set[str]:
        return {src for src, dst in self.edges if dst == node}

    def in_degree(self, node: str) -> int:
        return len(self.parents(node))

    def to_json(self) -> dict:
        return {
            "treatment": self.treatment,
            "outcome": self.outcome,
            "covariates": list(self.covariates),
            "disturbances": list(self.disturbances),
            "edges": sorted([list(e) for e in self.edges]),
            "fixed": {k: v for k, v in self.fixed},
        }


@dataclass(frozen=True)
class Estimand:
    adjustment_set: tuple[str, ...]
    formula_kind: str  # "backdoor_adjustment" or "naive_difference"

    def to_json(self) -> dict:
        return {"adjustment_set": list(self.adjustment_set), "formula_kind": self.formula_kind}


@dataclass(frozen=True)
class CausalEstimate:
    ate: float
    method: str  # "psm", "linear_regression" or "stratified"
    n: int
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"ate": self.ate, "method": self.method, "n": self.n, "diagnostics": self.diagnostics}


def _check_acyclic(nodes, edges):
    graph = {n: set() for n in nodes}
    for src, dst in edges:
        graph[dst].add(src)
    try:
        tuple(TopologicalSorter(graph).static_order())
    except _GraphCycle as exc:
        cycle = " -> ".join(exc.args[1]) if len(exc.args) > 1 else "?"
        raise CycleError(f"causal graph has a cycle: {cycle}") from None


def build_scm(doc: Mapping[str, Any] | str) -> Scm:
    """Build the canonical SCM from ``{"treatment", "outcome", "covariates"}``.

    An optional ``"edges"`` list adds extra directed edges; they must keep
    the graph acyclic.
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"SCM document is not valid JSON: {exc}") from None
    if not isinstance(doc, Mapping):
        raise ParseError("SCM document must be a JSON object")
    for key in ("treatment", "outcome"):
        if not doc.get(key):
            raise MissingNodeError(f"SCM document names no {key}")
    t, y = str(doc["treatment"]), str(doc["outcome"])
    covariates = tuple(str(z) for z in doc.get("covariates", []))
    if t == y or len({t, y, *covariates}) != 2 + len(covariates):
        raise ParseError("treatment, outcome and covariates must be distinct nodes")

    u_t, u_y = f"U_{t}", f"U_{y}"
    edges = {(t, y), (u_t, t), (u_y, y)}
    for z in covariates:
        edges.update({(z, t), (z, y)})
    nodes = {t, y, *covariates, u_t, u_y}
    for pair in doc.get("edges", []):
        src, dst = (str(v) for v in pair)
        for node in (src, dst):
            if node not in nodes:
                raise MissingNodeError(f"edge refers to undeclared node {node!r}")
        edges.add((src, dst))
    _check_acyclic(nodes, edges)
    return Scm(t, y, covariates, (u_t, u_y), frozenset(edges))


def do_surgery(scm: Scm, treatment_value: Any = None) -> Scm:
    """Intervene on the treatment: drop every edge into T and record its value."""
    edges = frozenset(e for e in scm.edges if e[1] != scm.treatment)
    fixed = dict(scm.fixed)
    fixed[scm.treatment] = treatment_value
    return Scm(
        scm.treatment, scm.outcome, scm.covariates, scm.disturbances, edges, tuple(fixed.items())
    )


def identify(scm: Scm) -> Estimand:
    """Adjustment set for the canonical shape: all declared covariates.

    The set is read from the declared structure rather than the current
    edges, so identification is unchanged by surgery.
    """
    if scm.covariates:
        return Estimand(tuple(scm.covariates), "backdoor_adjustment")
    return Estimand((), "naive_difference")


# ---------------------------------------------------------------------------
# estimation helpers


def _as_matrix(Z, n: int) -> np.ndarray:
    if Z is None:
        return np.empty((n, 0))
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != n:
        raise ValueError(f"covariate matrix has {Z.shape[0]} rows for {n} units")
    return Z


def _binary_arms(T) -> np.ndarray:
    t = np.asarray(T, dtype=float)
    if not np.isin(t, (0.0, 1.0)).all():
        raise ValueError("binary treatment must be coded 0/1")
    if t.size < 2 or t.min() == t.max():
        raise SingleArmError("both treatment arms must be present")
    return t


def _check_finite(name: str, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError(f"{name} contains non-finite values")


def _informative_columns(Z: np.ndarray) -> np.ndarray:
    """Standardised covariates with constant columns removed."""
    if Z.shape[1] == 0:
        return Z
    sd = Z.std(axis=0)
    keep = sd > 0
    return (Z[:, keep] - Z[:, keep].mean(axis=0)) / sd[keep]


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def logistic_propensity(Z, T, *, return_fit: bool = False):
    """Fitted P(T=1 | Z) from an L2-penalised logistic regression.

    Covariates are standardised and the penalised mean log-likelihood is
    maximised by gradient ascent with a 1/L step, where L bounds the Hessian.
    The intercept is not penalised.
    """
    t = _binary_arms(T)
    Z = _as_matrix(Z, t.size)
    _check_finite("covariates", Z)
    X = np.column_stack([np.ones(t.size), _informative_columns(Z)])
    n, d = X.shape

    penalty = np.full(d, L2_PENALTY)
    penalty[0] = 0.0
    lipschitz = 0.25 * float(np.linalg.eigvalsh(X.T @ X / n).max()) + L2_PENALTY
    step = 1.0 / lipschitz

    base = t.mean()
    w = np.zeros(d)
    w[0] = math.log(base / (1 - base))
    iterations = 0
    converged = False
    for iterations in range(1, MAX_ITER + 1):
        p = _sigmoid(X @ w)
        grad = X.T @ (t - p) / n - penalty * w
        delta = step * grad
        w = w + delta
        if np.max(np.abs(delta)) < TOLERANCE:
            converged = True
            break
    scores = _sigmoid(X @ w)
    if return_fit:
        return scores, {"weights": w.tolist(), "iterations": iterations, "converged": converged}
    return scores


def _nearest(queries: np.ndarray, pool_scores: np.ndarray, pool_index: np.ndarray) -> np.ndarray:
    """Unit index of the closest pool score for each query; ties go to the lowest index."""
    order = np.lexsort((pool_index, pool_scores))
    s = pool_scores[order]
    idx = pool_index[order]
    m = s.size
    # sorting by (score, index) puts the lowest index first within equal scores
    above = np.searchsorted(s, queries, side="left")
    below = np.searchsorted(s, s[np.clip(above - 1, 0, m - 1)], side="left")
    has_above = above < m
    has_below = above > 0
    above = np.clip(above, 0, m - 1)
    d_above = np.where(has_above, np.abs(s[above] - queries), np.inf)
    d_below = np.where(has_below, np.abs(queries - s[below]), np.inf)
    take_below = (d_below < d_above) | ((d_below == d_above) & (idx[below] < idx[above]))
    return np.where(take_below, idx[below], idx[above])


def _tied_mean(queries: np.ndarray, pool_scores: np.ndarray, pool_y: np.ndarray) -> np.ndarray:
    """Mean outcome over every pool unit at the minimal score distance."""
    order = np.argsort(pool_scores, kind="stable")
    s = pool_scores[order]
    cs = np.concatenate([[0.0], np.cumsum(pool_y[order])])
    m = s.size
    above = np.searchsorted(s, queries, side="left")
    a = np.clip(above, 0, m - 1)
    b = np.clip(above - 1, 0, m - 1)
    d_above = np.where(above < m, s[a] - queries, np.inf)
    d_below = np.where(above > 0, queries - s[b], np.inf)
    d = np.minimum(d_above, d_below)
    total = np.zeros(queries.size)
    count = np.zeros(queries.size)
    use_a = d_above == d
    hi = np.searchsorted(s, s[a], side="right")
    total += np.where(use_a, cs[hi] - cs[a], 0.0)
    count += np.where(use_a, hi - a, 0)
    use_b = d_below == d
    lo = np.searchsorted(s, s[b], side="left")
    total += np.where(use_b, cs[b + 1] - cs[lo], 0.0)
    count += np.where(use_b, b + 1 - lo, 0)
    return total / count


def ate_psm(Z, T, Y, *, caliper: float | None = None, ties: str = "lowest") -> CausalEstimate:
    """Propensity score matching estimate of the ATE.

    Every unit is matched with replacement to the opposite-arm unit with the
    closest propensity score; the ATE is the mean of treated-minus-control
    outcomes over all units. Equally close candidates resolve to the lowest
    index, or with ``ties="average"`` all of them contribute their mean
    outcome. ``caliper`` (in SDs of the logit score, e.g. 0.2) drops units
    whose best match is farther away.
    """
    if ties not in ("lowest", "average"):
        raise ValueError(f"ties must be 'lowest' or 'average', not {ties!r}")
    t = _binary_arms(T)
    y = np.asarray(Y, dtype=float)
    if y.shape != t.shape:
        raise ValueError("T and Y lengths differ")
    _check_finite("outcome", y)
    scores, fit = logistic_propensity(Z, t, return_fit=True)
    n = t.size

    treated = np.flatnonzero(t == 1)
    control = np.flatnonzero(t == 0)
    match = np.empty(n, dtype=int)
    clipped = np.clip(scores, 1e-15, 1 - 1e-15)
    logit = np.log(clipped / (1 - clipped))
    match[treated] = _nearest(scores[treated], scores[control], control)
    match[control] = _nearest(scores[control], scores[treated], treated)
    gap = np.abs(logit - logit[match])

    keep = np.ones(n, dtype=bool)
    caliper_width = None
    if caliper is not None:
        caliper_width = caliper * float(logit.std())
        keep = gap <= caliper_width
        if not keep.any():
            raise SingleArmError("no unit has a match within the caliper")
    counterfactual = y[match]
    if ties == "average":
        counterfactual = counterfactual.copy()
        counterfactual[treated] = _tied_mean(scores[treated], scores[control], y[control])
        counterfactual[control] = _tied_mean(scores[control], scores[treated], y[treated])
    y1 = np.where(t == 1, y, counterfactual)
    y0 = np.where(t == 0, y, counterfactual)
    effects = (y1 - y0)[keep]
    diagnostics = {
        "n_treated": int(treated.size),
        "n_control": int(control.size),
        "propensity_min": float(scores.min()),
        "propensity_max": float(scores.max()),
        "propensity_mean_treated": float(scores[treated].mean()),
        "propensity_mean_control": float(scores[control].mean()),
        "overlap": [
            float(max(scores[treated].min(), scores[control].min())),
            float(min(scores[treated].max(), scores[control].max())),
        ],
        "unique_matches": int(np.unique(match).size),
        "dropped_by_caliper": int(n - keep.sum()),
        "caliper": caliper_width,
        "ties": ties,
        "fit_iterations": fit["iterations"],
        "fit_converged": fit["converged"],
    }
    return CausalEstimate(float(effects.mean()), "psm", n, diagnostics)


def ate_linear(T, Y, Z=None) -> CausalEstimate:
    """OLS coefficient of T in the regression of Y on [1, T, Z].

    Constant covariate columns are absorbed by the intercept and dropped.
    """
    t = np.asarray(T, dtype=float)
    y = np.asarray(Y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("T and Y must be equal-length vectors")
    if t.size < 2:
        raise ZeroVarianceError("need at least two units")
    _check_finite("treatment", t)
    _check_finite("outcome", y)
    if t.min() == t.max():
        raise ZeroVarianceError("treatment is constant; its effect is not identifiable")
    Z = _as_matrix(Z, t.size)
    _check_finite("covariates", Z)
    Z = Z[:, Z.std(axis=0) > 0] if Z.shape[1] else Z
    X = np.column_stack([np.ones(t.size), t, Z])
    n, d = X.shape
    if n < d or np.linalg.matrix_rank(X) < d:
        raise RankDeficiencyError(
            f"design matrix [1, T, Z] ({n}x{d}) is rank deficient"
        )
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    dof = n - d
    if dof > 0:
        sigma2 = rss / dof
        cov = sigma2 * np.linalg.inv(X.T @ X)
        se = float(math.sqrt(max(cov[1, 1], 0.0)))
    else:
        se = float("nan")
    diagnostics = {
        "r2": 1.0 - rss / tss if tss > 0 else 1.0,
        "std_error": se,
        "intercept": float(coef[0]),
        "covariate_coefficients": [float(c) for c in coef[2:]],
    }
    return CausalEstimate(float(coef[1]), "linear_regression", n, diagnostics)


def ate_stratified(Z, T, Y) -> CausalEstimate:
    """Adjustment formula over the strata of one discrete covariate.

    sum_z [mean(Y | T=1, z) - mean(Y | T=0, z)] * P(z), with P(z) the
    stratum share of all units.
    """
    t = _binary_arms(T)
    y = np.asarray(Y, dtype=float)
    z = np.asarray(Z)
    if z.ndim != 1 or z.shape != t.shape or y.shape != t.shape:
        raise ValueError("Z, T and Y must be equal-length vectors")
    _check_finite("outcome", y)
    strata = np.unique(z)
    total = 0.0
    per_stratum = {}
    for s in strata:
        in_s = z == s
        cells = []
        for arm in (1, 0):
            cell = in_s & (t == arm)
            if not cell.any():
                raise EmptyCellError(arm, s.item() if hasattr(s, "item") else s)
            cells.append(y[cell].mean())
        weight = in_s.mean()
        total += (cells[0] - cells[1]) * weight
        per_stratum[str(s.item() if hasattr(s, "item") else s)] = {
            "effect": float(cells[0] - cells[1]),
            "weight": float(weight),
        }
    return CausalEstimate(float(total), "stratified", int(t.size), {"strata": per_stratum})


def quantile_strata(values, k: int = 4) -> np.ndarray:
    """Stratum label 0..k-1 by empirical k-quantiles of a continuous covariate."""
    v = np.asarray(values, dtype=float)
    inner = np.quantile(v, np.linspace(0, 1, k + 1)[1:-1])
    return np.searchsorted(inner, v, side="right")


def difference_in_means(T, Y) -> float:
    t = _binary_arms(T)
    y = np.asarray(Y, dtype=float)
    return float(y[t == 1].mean() - y[t == 0].mean())


# ---------------------------------------------------------------------------
# dispatch


@dataclass(frozen=True)
class CausalData:
    """Estimation inputs: one row per unit."""

    treatment: np.ndarray
    outcome: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple[str, ...] = ()
    kind: str = "binary"

    def __post_init__(self):
        t = np.asarray(self.treatment, dtype=float)
        y = np.asarray(self.outcome, dtype=float)
        z = _as_matrix(self.covariates, t.size)
        if y.shape != t.shape:
            raise ValueError("treatment and outcome lengths differ")
        object.__setattr__(self, "treatment", t)
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "covariates", z)
        if not self.covariate_names:
            names = tuple(f"z{i}" for i in range(z.shape[1]))
            object.__setattr__(self, "covariate_names", names)
        if len(self.covariate_names) != z.shape[1]:
            raise ValueError("covariate_names does not match covariate columns")

    def __len__(self):
        return self.treatment.size

    def with_columns(self, **changes) -> "CausalData":
        fields = {
            "treatment": self.treatment,
            "outcome": self.outcome,
            "covariates": self.covariates,
            "covariate_names": self.covariate_names,
            "kind": self.kind,
        }
        fields.update(changes)
        return CausalData(**fields)

    def subset(self, rows) -> "CausalData":
        return self.with_columns(
            treatment=self.treatment[rows],
            outcome=self.outcome[rows],
            covariates=self.covariates[rows],
        )


def default_method(kind: str, has_covariates: bool = True) -> str:
    if kind == "binary" and has_covariates:
        return "psm"
    return "linear_regression"


def estimate(data: CausalData, method: str | None = None, **options) -> CausalEstimate:
    """Estimate the ATE with ``method``, chosen from the treatment kind when omitted.

    Binary treatments use PSM; discrete and continuous ones use OLS. Binary
    data without covariates falls back to OLS on [1, T], i.e. the difference
    in means.
    """
    method = method or default_method(data.kind, data.covariates.shape[1] > 0)
    if method == "psm":
        return ate_psm(data.covariates, data.treatment, data.outcome, **options)
    if method == "linear_regression":
        return ate_linear(data.treatment, data.outcome, data.covariates)
    if method == "stratified":
        if data.covariates.shape[1] != 1:
            raise ValueError("stratified estimation takes exactly one discrete covariate")
        return ate_stratified(data.covariates[:, 0], data.treatment, data.outcome)
    raise ValueError(f"unknown estimation method {method!r}")
