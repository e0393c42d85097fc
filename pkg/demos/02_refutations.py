"""Stress-testing an estimate with four refuters.

R1 adds a random covariate, R2 simulates a hidden confounder, R3 permutes the
treatment and R4 drops a fifth of the units. A credible estimate survives R1,
R2 and R4 and collapses to zero under R3.
"""

# %%
from __future__ import annotations

import json

from docode.causal import ate_psm
from docode.refutation import refute
from docode.synthetic import confounded


def psm(data):
    return ate_psm(data.covariates, data.treatment, data.outcome)


# %%
d = confounded(n=2000, seed=1)
report = refute(d, psm, seed=7)
print(f"original ATE {report.original_ate:.3f}")
for key in ("r1_random_cause", "r2_unobserved_cause", "r3_placebo", "r4_subset"):
    print(f"{key:<22} {getattr(report, key):>8.4f}  {report.verdicts[key]}")

# %% A strong hidden confounder pushes the estimate away, which R2 reports.
strong = refute(d, psm, seed=7, effect_on_t=2.0, effect_on_y=1.0, n_simulations=5)
print(f"strong confounder: R2 = {strong.r2_unobserved_cause:.3f} ({strong.verdicts['r2_unobserved_cause']})")
print(json.dumps(report.settings))
