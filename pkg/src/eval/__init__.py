# Evaluation modules
from .evaluator import Evaluator, FrameRecord, evaluate
from .metrics import PointRecord, dice_score, existence_counts, false_positive_rate, iou, pck, point_correct, precision_recall
from .report import SCHEMA_VERSION, ClipMetrics, EvalReport, score_clip, validate_report

__all__ = [
    "Evaluator",
    "FrameRecord",
    "evaluate",
    "PointRecord",
    "dice_score",
    "existence_counts",
    "false_positive_rate",
    "iou",
    "pck",
    "point_correct",
    "precision_recall",
    "SCHEMA_VERSION",
    "ClipMetrics",
    "EvalReport",
    "score_clip",
    "validate_report",
]
