"""Interpolating Nadaraya-Watson (Shepard / inverse-distance-weighted)
classifier with singular kernels, plus the Monte Carlo harness and
distributional verification checks around it."""

from .predictor import (
    LabeledPoint,
    PredictorConfig,
    ScoreResult,
    TrainingSet,
    knn_predict,
    predict,
    predict_batch,
    raw_score,
)
from .rng import SeededRng
from .synth import (
    BallAnnulus,
    BallTruth,
    CapTruth,
    IntervalTruth,
    NoiseSpec,
    OneDMixture,
    SphereCap,
    add_gaussian_input_noise,
    catastrophic_mass_bound,
    flip_labels,
    sample_1d_mixture,
    sample_ball_annulus,
    sample_sphere_cap,
    tempered_constant,
    unit_ball_volume,
)
from .verifiers import (
    AgreementReport,
    KsReport,
    TailReport,
    exp_partial_sum_tail,
    interpolation_check,
    knn_agreement,
    ks_two_sample_statistic,
    local_cdf_check,
    order_stat_representation_check,
)
from .harness import (
    CurveRow,
    EmpiricalPool,
    ErrorCurve,
    ExperimentConfig,
    SigmaBest,
    beta_sweep,
    clean_error_estimate,
    noisy_input_sweep,
    profile_classification,
)
from .idx import IdxFormatError, IdxTensor, load_idx, mnist_binary_subset

__version__ = "0.1.0"
