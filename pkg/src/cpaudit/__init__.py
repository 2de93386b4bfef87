"""Conditional-coverage auditing for prediction-interval methods.

The package builds interval predictors (split-conformal variants plus
classical baselines), learns how their coverage varies across the feature
space from binary coverage indicators, summarizes the result with a validity
index family and quantile profiles, and selects among candidate methods by
repeated-split scoring. Synthetic generators with analytic coverage oracles
validate the whole stack.
"""

from .conformal import (
    CPResidual,
    CPStudentized,
    CQR,
    CVPlus,
    IntervalPredictor,
    LCP,
    MethodConfig,
    OLSInterval,
    QRFInterval,
    RLCP,
    ResidualBootstrap,
    TrivialInterval,
    fit_bootstrap,
    fit_cp_residual,
    fit_cp_studentized,
    fit_cqr,
    fit_cv_plus,
    fit_lcp,
    fit_method,
    fit_ols_interval,
    fit_qrf,
    fit_rlcp,
)
from .data import Dataset, DataError, OracleInfo, SplitPlan, kfold, load_csv, split, write_csv
from .metrics import (
    CviReport,
    CvpCurve,
    DiagramBins,
    WscResult,
    cvi_report,
    cvp_curve,
    hit_at_k,
    marginal_stats,
    ndcg_at_k,
    ranking_from_scores,
    reliability_diagram,
    weighted_kendall_tau,
    wsc,
)
from .quantiles import conformal_quantile, weighted_quantile
from .reliability import (
    CoverageLabels,
    EstimatorConfig,
    ReliabilityEstimator,
    ReliabilityMember,
    cpa_train,
    estimator_preset,
    fit_member,
    generate_labels,
    predict_reliability,
)
from .rng import RngStream
from .selection import SelectionResult, cc_select, predict_with_trust, trust_score
from .serialize import load_model, load_selection_bundle, save_model, save_selection_bundle
from .synth import (
    OracleStubPredictor,
    ProtocolReport,
    feasibility_experiment,
    gen_feasibility,
    gen_setting_a,
    gen_setting_b,
    gen_setting_c,
    gen_setting_d,
    generate_setting,
    mc_oracle_coverage,
    oracle_coverage,
    oracle_cvi,
    run_protocol,
)

__version__ = "0.1.0"
