"""End to end on the bundled buggy/fixed toy testbed.

Twenty method pairs with synthetic next-token probabilities: buggy versions
get slightly lower probabilities. The SCM adjusts for the subword count.
"""

# %%
from __future__ import annotations

from importlib import resources

from docode.analysis import AnalysisConfig, run_analysis
from docode.causal import build_scm
from docode.ingest import parse_prediction_log
from docode.report import emit_report
from docode.taxonomy import default_taxonomy

data = resources.files("docode") / "data"
with open(data / "toy_testbed.jsonl", encoding="utf-8") as fh:
    testbed = parse_prediction_log(fh, "binary", "toy")
scm = build_scm((data / "toy_scm.json").read_text())

# %% Every stochastic step takes its seed from the config.
config = AnalysisConfig(seed=7, from_label="FixedCode", to_label="BuggyCode")
report = run_analysis(testbed, default_taxonomy(), scm, config)
print(emit_report(report, "markdown"))
