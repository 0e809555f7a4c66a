"""Repetition segmentation and quality classification for shin-worn IMU exercise recordings."""
from .features import REPETITION_SCHEMA, FeatureSchema, FeatureVector, repetition_feature_vector
from .learners import Dataset, Model, TrainConfig, predict, train
from .segmentation import SegmentationConfig, SegmentationResult, segment, segmentation_accuracy
from .signal import Channel, DeviceConfig, ProcessedRecording, RawRecording, preprocess

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "Dataset",
    "DeviceConfig",
    "FeatureSchema",
    "FeatureVector",
    "Model",
    "ProcessedRecording",
    "RawRecording",
    "REPETITION_SCHEMA",
    "SegmentationConfig",
    "SegmentationResult",
    "TrainConfig",
    "predict",
    "preprocess",
    "repetition_feature_vector",
    "segment",
    "segmentation_accuracy",
    "train",
]
