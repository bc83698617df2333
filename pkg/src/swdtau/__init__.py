"""Spike-and-wave discharge detection by Kendall tau template matching."""

__version__ = "0.1.0"

from .classify import ConfusionMatrix, fit, leave_one_out, metrics, predict, proportion_ci, roc
from .detector import DetectorConfig, ScanReport, match_annotations, scan_recording, score_segment
from .kendall import (
    PairCounts,
    TauResult,
    count_pairs_bruteforce,
    count_pairs_fast,
    significance,
    tau_a,
    tau_b,
    tau_fast,
    tau_matrix,
    tau_signsum,
)
from .preprocess import FilterConfig, ScaleParams, minmax_scale, moving_average, segment_channel
from .signal_model import (
    AnnotationEvent,
    AnnotationSet,
    DetectionResult,
    FeaturePoint,
    Recording,
    Segment,
    Template,
    validate_recording,
)
from .synthgen import SwdEvent, SynthConfig, make_recording, make_template
