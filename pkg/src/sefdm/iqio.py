"""Frame file formats.

IQ binaries are little-endian interleaved 32-bit floats (re, im, re, im, ...)
holding contiguous frames; a JSON sidecar manifest carries the layout
(n_subcarriers, alpha_effective, oversampling, frames, samples_per_frame,
labels) and per-file records. Labels travel in a separate CSV.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

MANIFEST_REQUIRED_FIELDS = (
    "n_subcarriers",
    "alpha_effective",
    "oversampling",
    "frames",
    "samples_per_frame",
    "labels",
)

LABELS_HEADER = ("frame_index", "class_index", "alpha", "alpha_effective")


class IqIoError(ValueError):
    """Malformed IQ file, manifest or label file."""


def write_iq(path, frames: np.ndarray) -> None:
    """Write complex frames (n_frames, samples_per_frame) as interleaved
    little-endian float32."""
    frames = np.asarray(frames)
    if frames.ndim == 1:
        frames = frames[None, :]
    interleaved = np.empty((frames.shape[0], 2 * frames.shape[1]), dtype="<f4")
    interleaved[:, 0::2] = frames.real
    interleaved[:, 1::2] = frames.imag
    interleaved.tofile(path)


def read_iq(path, samples_per_frame: int) -> np.ndarray:
    """Read an interleaved float32 IQ file back into complex frames."""
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % (2 * samples_per_frame) != 0:
        raise IqIoError(
            f"{path}: {raw.size} floats do not divide into frames of "
            f"{samples_per_frame} complex samples"
        )
    raw = raw.reshape(-1, 2 * samples_per_frame)
    return (raw[:, 0::2] + 1j * raw[:, 1::2]).astype(np.complex128)


def write_manifest(path, manifest: dict) -> None:
    missing = [k for k in MANIFEST_REQUIRED_FIELDS if k not in manifest]
    if missing:
        raise IqIoError(f"manifest missing required fields: {missing}")
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    manifest = json.loads(Path(path).read_text())
    missing = [k for k in MANIFEST_REQUIRED_FIELDS if k not in manifest]
    if missing:
        raise IqIoError(f"{path}: manifest missing required fields: {missing}")
    return manifest


def write_labels_csv(path, rows) -> None:
    """rows: iterable of (frame_index, class_index, alpha, alpha_effective)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(LABELS_HEADER)
        for row in rows:
            writer.writerow(row)


def read_labels_csv(path):
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader))
        if header != LABELS_HEADER:
            raise IqIoError(f"{path}: unexpected label header {header}")
        return [
            (int(r[0]), int(r[1]), float(r[2]), float(r[3])) for r in reader
        ]
