"""CNN-based bandwidth-compression-factor classifier for IQ frames."""

from .data import DatasetError, LoadedDataset, load_dataset, split_indices
from .evaluate import (
    ConfusionMatrix,
    evaluate,
    read_confusion_csv,
    write_confusion_csv,
    write_predictions_csv,
)
from .model import IqClassifier, build_model, load_model, save_model
from .train import TrainConfig, TrainResult, train

__version__ = "0.1.0"
