"""Quality-aware respiratory-rate estimation from candidate respiration signals.

Submodules:
  signals     time-series carrier, resampling, band-pass, windowing
  spectral    FFT / Welch / MUSIC / peak-detection RR estimators
  quality     ten signal-quality indices, orientation, normalization
  scoring     composite scores and the exhaustive metric-subset search
  predictors  scaler, error regressor, best-method classifier
  fusion      candidate sets, fusion strategies, filtering, evaluation
  synth       seeded synthetic benchmarks
  fileio      CSV schemas and the run configuration
  cli         command-line entry points
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .signals import BandLimits, Segment, TimeSeries, WindowingConfig, bandpass, detrend, resample, segment
from .spectral import (
    ESTIMATORS,
    MusicConfig,
    RrEstimate,
    Spectrum,
    WelchConfig,
    autocorr_toeplitz,
    estimate_rr,
    fft_periodogram,
    music_pseudospectrum,
    peak_rr,
    spectrum_rr,
    welch,
)
from .quality import (
    METRICS,
    NormalizationStats,
    PreferenceTable,
    QualityVector,
    compute_quality_vector,
    fit_normalization,
    normalize,
    orient,
)
from .scoring import MetricMask, SubsetResult, fmm, select_by_score, smm, subset_search, transfer_subset
from .predictors import (
    ClassifierModel,
    RegressorModel,
    StandardScaler,
    TrainConfig,
    fit_scaler,
    labels_from_errors,
    load_model,
    predict_mae,
    save_model,
    train_classifier,
    train_regressor,
)
from .fusion import (
    ChainConfig,
    EvalReport,
    FusionStrategy,
    FusionTrace,
    MethodCandidateSet,
    baseline_select,
    build_candidate_set,
    evaluate,
    evaluate_trace,
    filter_segments,
    filter_sweep,
    fuse,
    gt_rr_series,
    rr_series,
    sweep_report,
)
from .synth import BreathProfile, CorruptionSpec, MethodCorruption, gen_benchmark, gen_candidates, gen_respiration

__version__ = "0.1.0"
