"""Coherence gate: low image-caption IoU scores short-circuit to a NOOC prediction.

Records that pass the gate (score at or above the threshold) continue to
caption analysis. Equality at the threshold proceeds: more analysis, not less.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import OutOfRangeScore

DEFAULT_IOU_THRESHOLD = 0.25


class GateDecision(enum.Enum):
    EARLY_NOOC = "early_nooc"
    PROCEED = "proceed"


@dataclass(frozen=True)
class GateConfig:
    threshold: float = DEFAULT_IOU_THRESHOLD

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")


def gate_by_iou(iou: float, config: GateConfig = GateConfig()) -> GateDecision:
    """EARLY_NOOC iff iou < threshold; PROCEED otherwise."""
    if not (0.0 <= iou <= 1.0):
        raise OutOfRangeScore(f"iou score must lie in [0, 1], got {iou}")
    return GateDecision.EARLY_NOOC if iou < config.threshold else GateDecision.PROCEED
