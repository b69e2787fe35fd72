"""Dataset loading.

Consumes the waveform toolkit's export format directly: a JSON manifest
describing per-class IQ binaries (little-endian interleaved float32 re/im,
contiguous frames) plus a label CSV. Frames are stacked into a (frames, 2,
samples) float32 array with I and Q as the two input rows, normalized to
unit RMS per frame.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Malformed or inconsistent dataset files."""


@dataclass
class LoadedDataset:
    frames: np.ndarray        # (n_frames, 2, samples_per_frame) float32
    class_indices: np.ndarray  # (n_frames,) int64
    frame_indices: np.ndarray  # original export-time frame indices
    class_alphas: tuple        # class label -> compression factor
    samples_per_frame: int

    @property
    def n_classes(self) -> int:
        return len(self.class_alphas)

    def __len__(self):
        return self.frames.shape[0]


def _read_iq(path, samples_per_frame):
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % (2 * samples_per_frame) != 0:
        raise DatasetError(f"{path}: not a whole number of frames")
    raw = raw.reshape(-1, samples_per_frame, 2)
    return raw.transpose(0, 2, 1)  # (frames, iq, samples)


def load_dataset(manifest_path) -> LoadedDataset:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    for key in ("samples_per_frame", "labels", "files", "frames"):
        if key not in manifest:
            raise DatasetError(f"{manifest_path}: manifest missing {key!r}")
    samples = int(manifest["samples_per_frame"])
    class_alphas = tuple(float(a) for a in manifest["labels"])

    blocks = []
    class_indices = []
    for record in manifest["files"]:
        frames = _read_iq(manifest_path.parent / record["path"], samples)
        if frames.shape[0] != record["frames"]:
            raise DatasetError(
                f"{record['path']}: {frames.shape[0]} frames, manifest says {record['frames']}"
            )
        blocks.append(frames)
        class_indices.append(np.full(frames.shape[0], int(record["class_index"])))
    data = np.concatenate(blocks).astype(np.float32)
    class_indices = np.concatenate(class_indices)
    if data.shape[0] != int(manifest["frames"]):
        raise DatasetError("manifest frame total does not match the IQ files")

    # unit RMS per frame; captured power carries no class information
    rms = np.sqrt(np.mean(data**2, axis=(1, 2), keepdims=True))
    rms[rms == 0] = 1.0
    data /= rms

    frame_indices = np.arange(data.shape[0])
    labels_path = manifest_path.parent / "labels.csv"
    if labels_path.exists():
        rows = _read_labels(labels_path)
        if len(rows) != data.shape[0]:
            raise DatasetError("labels.csv row count does not match the frames")
        frame_indices = np.array([r[0] for r in rows])
        csv_classes = np.array([r[1] for r in rows])
        if not np.array_equal(csv_classes, class_indices):
            raise DatasetError("labels.csv classes disagree with the manifest layout")

    return LoadedDataset(
        frames=data,
        class_indices=class_indices.astype(np.int64),
        frame_indices=frame_indices.astype(np.int64),
        class_alphas=class_alphas,
        samples_per_frame=samples,
    )


def _read_labels(path):
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        next(reader)  # header
        return [(int(r[0]), int(r[1])) for r in reader]


def split_indices(dataset: LoadedDataset, train_fraction: float, seed: int):
    """Stratified train/test split: within every class, a seeded shuffle and
    an 80/20-style cut. Returns (train_idx, test_idx) into the dataset."""
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in range(dataset.n_classes):
        members = np.where(dataset.class_indices == c)[0]
        rng.shuffle(members)
        cut = int(round(train_fraction * members.size))
        cut = min(max(cut, 1), members.size - 1)
        train.append(members[:cut])
        test.append(members[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
