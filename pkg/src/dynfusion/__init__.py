"""Context-aware two-dimensional dynamic fusion for continuous authentication.

Classifier scheduling, windowed multi-sample / multi-classifier score fusion,
a discrete-event authentication loop, parallel fusion baselines, calibrated
synthetic score models and EER/DET evaluation.
"""

__version__ = "0.1.0"

from .core import ConfigError, History, ScoreRecord, ValidationError, history_insert, history_since
from .scheduler import ClassifierProfile, ClassifierSpec, SchedulerParams, combined_prob, schedule
from .fusion import (
    NormParams,
    WindowPolicy,
    accepted,
    auth_window,
    classifier_fusion,
    critical_time,
    fuse,
    sample_fusion,
    zscore_apply,
    zscore_fit,
)
from .metrics import DetCurve, det_curve, eer, eer_from_scores, far_frr
from .baselines import CwmaWeights, cwma_fuse, cwma_train, fuse_max, fuse_sum
from .synthdata import ScoreModel, build_trials, calibrate, draw_score
from .authloop import AuthLoop, DeviceState, PolicyConfig, Scenario, Segment, run_scenario
from .traces import parse_trace, write_trace
from .config import ExperimentConfig, load_config, parse_config
from .experiment import replay, run_experiment

__all__ = [
    "AuthLoop", "ClassifierProfile", "ClassifierSpec", "ConfigError", "CwmaWeights", "DetCurve",
    "DeviceState", "ExperimentConfig", "History", "NormParams", "PolicyConfig", "Scenario", "SchedulerParams",
    "ScoreModel", "ScoreRecord", "Segment", "ValidationError", "WindowPolicy", "accepted",
    "auth_window", "build_trials", "calibrate", "classifier_fusion", "combined_prob",
    "critical_time", "cwma_fuse", "cwma_train", "det_curve", "draw_score", "eer",
    "eer_from_scores", "far_frr", "fuse", "fuse_max", "fuse_sum", "history_insert",
    "history_since", "load_config", "parse_config", "parse_trace", "replay", "run_experiment", "run_scenario", "sample_fusion", "schedule",
    "write_trace", "zscore_apply", "zscore_fit",
]
