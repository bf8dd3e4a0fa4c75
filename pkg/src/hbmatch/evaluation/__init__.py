"""Score sets, TAR/FAR/EER metrics, dataset evaluation and timing."""

from .metrics import RocReport, ScoreSet, eer, roc_report, tar_at_far

__all__ = ["RocReport", "ScoreSet", "eer", "roc_report", "tar_at_far"]
