"""Causal interpretability analysis for neural code model predictions."""

__version__ = "0.1.0"

from .causal import (  # noqa: E402
    CausalData,
    CausalEstimate,
    Estimand,
    Scm,
    ate_linear,
    ate_psm,
    ate_stratified,
    build_scm,
    do_surgery,
    estimate,
    identify,
    logistic_propensity,
)
from .covariates import CovariateVector, LexToken, extract_covariates, lex_java, mccabe  # noqa: E402
from .ingest import (  # noqa: E402
    PredictionRecord,
    Testbed,
    dose_clone_pairs,
    levenshtein,
    pair_records,
    parse_prediction_log,
)
from .outcomes import cross_entropy, normalized_ccp, ntp_by_category  # noqa: E402
from .refutation import (  # noqa: E402
    detect_spurious,
    refute,
    refute_placebo,
    refute_random_common_cause,
    refute_subset,
    refute_unobserved_common_cause,
)
from .report import CausalReport, emit_plot_data, emit_report, render_explanation  # noqa: E402
from .stats import bootstrap, histogram_pair, js_distance, jsd, pearson  # noqa: E402
from .taxonomy import Taxonomy, default_taxonomy, load_taxonomy, map_sequence, map_token  # noqa: E402
from .analysis import AnalysisConfig, run_analysis  # noqa: E402
