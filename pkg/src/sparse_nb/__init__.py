"""Sparse naive Bayes: exact Bernoulli fits, a convex multinomial relaxation
with a-posteriori gap certificates, and LP post-processing."""

from .baselines import FeatureRanking, odds_ratio_rank, select_top, tmnb_rank
from .bernoulli import (
    BernoulliModel,
    SbnbScore,
    fit_bernoulli_mle,
    fit_sparse_bernoulli,
    predict_bernoulli,
    sbnb_score,
)
from .data import ClassSummary, DataError, LabeledDataset, SparseCountMatrix, binarize, summarize
from .experiments import (
    GapCurve,
    PipelineReport,
    ScalingReport,
    planted_dataset,
    run_gap_experiment,
    run_pipeline,
    run_scaling,
)
from .io import load_model, read_svmlight, save_model, write_csv, write_svmlight
from .multinomial import (
    GapCertificate,
    MultinomialModel,
    SmnbRelaxation,
    fit_multinomial_mle,
    gap_certificate,
    h_vector,
    predict_multinomial,
    reconstruct_primal,
    smnb_bound,
)
from .primalization import LpSolution, SkCertificate, lp_postprocess, sk_certificate, solve_boxed_lp
from .topk import topk_indices, topk_sum

__version__ = "0.1.0"
