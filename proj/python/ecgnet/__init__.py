"""ECG rhythm classification with CNN and BiLSTM networks."""

import json

from ._ecgnet import (
    Classifier,
    EcgError,
    InvariantError,
    Segment,
    cross_entropy,
    design_bandpass,
    detect_r_peaks,
    focal_loss,
    preprocess,
    read_segment_pack,
    segment_directory,
    segment_record,
    synth_ecg,
)
from ._ecgnet import metrics_json as _metrics_json

LABELS = ("N", "A", "O")


def metrics(predicted, truth):
    """Per-class and weighted metrics for integer class indices."""
    return json.loads(_metrics_json(predicted, truth))


def evaluate(model, segments, gamma=2.0):
    """Segment- and record-level reports for `model` on `segments`."""
    return json.loads(model.evaluate_json(segments, gamma))


__all__ = [
    "LABELS",
    "Classifier",
    "EcgError",
    "InvariantError",
    "Segment",
    "cross_entropy",
    "design_bandpass",
    "detect_r_peaks",
    "evaluate",
    "focal_loss",
    "metrics",
    "preprocess",
    "read_segment_pack",
    "segment_directory",
    "segment_record",
    "synth_ecg",
]
