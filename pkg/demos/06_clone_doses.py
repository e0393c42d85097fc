"""Clones as a continuous intervention.

Each clone pair gets a dose: the edit distance between the siblings. The
outcome is the absolute change in cross-entropy, and OLS gives the effect per
unit of edit distance.
"""

# %%
from __future__ import annotations

from docode.analysis import AnalysisConfig, build_units, prepare, record_outcomes
from docode.causal import ate_linear
from docode.ingest import levenshtein
from docode.stats import pearson
from docode.taxonomy import default_taxonomy
from docode.toy import make_clone_testbed

print(levenshtein("kitten", "sitting"))

# %%
config = AnalysisConfig(seed=0)
testbed = prepare(make_clone_testbed(seed=0), config)
units = build_units(testbed, record_outcomes(testbed, default_taxonomy()), None, "cross_entropy")
est = ate_linear(units.data.treatment, units.data.outcome)
print(f"{len(units.data)} clone pairs, doses {sorted(set(units.data.treatment.tolist()))[:5]} ...")
print(f"pearson(dose, |delta CE|) = {pearson(units.data.treatment, units.data.outcome):.3f}")
print(f"ATE per unit of edit distance = {est.ate:.4f} (se {est.diagnostics['std_error']:.4f})")
