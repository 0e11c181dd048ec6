"""scorekit: verification back-end toolkit.

Turns pre-extracted biometric embeddings and trial protocols into
normalized, calibrated, fused scores and standard detection metrics.
"""

__version__ = "0.1.0"

from .aggregation import (
    AggregationMethod,
    RecognizabilityParams,
    aggregate_frames,
    parse_frame_table,
    recognizability,
    score_multiframe_trials,
)
from .calibration import (
    AffineCalibration,
    AffineCalibrator,
    fit_logistic,
    logistic_loss_and_grad,
    training_prior,
)
from .embeddings import (
    EmbeddingRecord,
    EmbeddingSet,
    filter_classes,
    fuse_cl,
    l2_normalize,
    rank_class_informativeness,
    read_embeddings,
    write_embeddings,
)
from .exceptions import DataError, NumericalError, ScorekitError
from .fusion import (
    GreedySelection,
    LinearFuser,
    PipelineResult,
    greedy_fuse,
    submission_pipeline,
)
from .metrics import (
    DcfParams,
    DetCurve,
    MetricsReport,
    act_dcf,
    det_curve,
    distribution_report,
    eer,
    evaluate_scores,
    min_dcf,
)
from .normalization import (
    AdaptiveSNorm,
    ChannelNorm,
    ChannelPairStats,
    CohortStats,
    adaptive_snorm,
    channel_norm,
    estimate_channel_stats,
    normalize_pipeline,
    topn_stats,
)
from .protocol import (
    ChannelPair,
    SegmentMeta,
    SourceType,
    Trial,
    TrialSet,
    channel_pair_of,
    parse_segment_meta,
    parse_trials,
)
from .scoring import ScoreSet, Stage, cosine, score_trials

__all__ = [
    "AdaptiveSNorm",
    "AffineCalibration",
    "AffineCalibrator",
    "AggregationMethod",
    "ChannelNorm",
    "ChannelPair",
    "ChannelPairStats",
    "CohortStats",
    "DataError",
    "DcfParams",
    "DetCurve",
    "EmbeddingRecord",
    "EmbeddingSet",
    "GreedySelection",
    "LinearFuser",
    "MetricsReport",
    "NumericalError",
    "PipelineResult",
    "RecognizabilityParams",
    "ScoreSet",
    "ScorekitError",
    "SegmentMeta",
    "SourceType",
    "Stage",
    "Trial",
    "TrialSet",
    "act_dcf",
    "adaptive_snorm",
    "aggregate_frames",
    "channel_norm",
    "channel_pair_of",
    "cosine",
    "det_curve",
    "distribution_report",
    "eer",
    "estimate_channel_stats",
    "evaluate_scores",
    "filter_classes",
    "fit_logistic",
    "fuse_cl",
    "greedy_fuse",
    "l2_normalize",
    "logistic_loss_and_grad",
    "min_dcf",
    "normalize_pipeline",
    "parse_frame_table",
    "parse_segment_meta",
    "parse_trials",
    "rank_class_informativeness",
    "read_embeddings",
    "recognizability",
    "score_multiframe_trials",
    "score_trials",
    "submission_pipeline",
    "topn_stats",
    "training_prior",
    "write_embeddings",
]
