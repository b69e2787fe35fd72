"""Held-out evaluation: confusion matrix and the predicted-label file the
waveform toolkit's replay path consumes."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import torch

from .data import LoadedDataset

CONFUSION_HEADER = ("true", "pred", "count", "row_pct")
PREDICTIONS_HEADER = ("frame_index", "true_alpha", "pred_alpha")


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (n_classes, n_classes) ints, rows = true class
    class_alphas: tuple

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if (counts < 0).any():
            raise ValueError("confusion counts must be nonnegative")
        self.counts = counts

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def overall_accuracy(self) -> float:
        return float(np.trace(self.counts)) / float(self.counts.sum())

    @property
    def per_class_accuracy(self) -> np.ndarray:
        sums = self.row_sums
        with np.errstate(invalid="ignore"):
            acc = np.diag(self.counts) / np.where(sums == 0, 1, sums)
        return acc

    def class_accuracy(self, alpha: float) -> float:
        idx = self.class_alphas.index(alpha)
        return float(self.per_class_accuracy[idx])


@torch.no_grad()
def evaluate(model, dataset: LoadedDataset, test_indices, batch_size: int = 256):
    """Classify the held-out frames.

    Returns (ConfusionMatrix, prediction rows) where each row is
    (frame_index, true_alpha, pred_alpha) with the original export-time frame
    index, covering every test frame exactly once.
    """
    test_indices = np.asarray(test_indices)
    if np.unique(test_indices).size != test_indices.size:
        raise ValueError("test indices must be unique")
    model.eval()
    if model.n_classes != dataset.n_classes:
        raise ValueError(
            f"model has {model.n_classes} classes, dataset has {dataset.n_classes}"
        )
    x = torch.from_numpy(dataset.frames)
    n_classes = dataset.n_classes
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    rows = []
    for start in range(0, test_indices.size, batch_size):
        idx = test_indices[start : start + batch_size]
        pred = model(x[idx]).argmax(dim=1).numpy()
        true = dataset.class_indices[idx]
        np.add.at(counts, (true, pred), 1)
        for i, t, p in zip(dataset.frame_indices[idx], true, pred):
            rows.append(
                (int(i), dataset.class_alphas[int(t)], dataset.class_alphas[int(p)])
            )
    return ConfusionMatrix(counts=counts, class_alphas=dataset.class_alphas), rows


def write_confusion_csv(cm: ConfusionMatrix, path) -> None:
    """Counts alongside row-normalized percentages, one row per cell."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CONFUSION_HEADER)
        sums = cm.row_sums
        for t, true_alpha in enumerate(cm.class_alphas):
            denom = sums[t] if sums[t] else 1
            for p, pred_alpha in enumerate(cm.class_alphas):
                writer.writerow(
                    [
                        f"{true_alpha:g}",
                        f"{pred_alpha:g}",
                        int(cm.counts[t, p]),
                        f"{100.0 * cm.counts[t, p] / denom:.2f}",
                    ]
                )


def read_confusion_csv(path):
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader))
        if header != CONFUSION_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        cells = [(float(r[0]), float(r[1]), int(r[2])) for r in reader]
    alphas = tuple(dict.fromkeys(c[0] for c in cells))
    n = len(alphas)
    counts = np.zeros((n, n), dtype=np.int64)
    index = {a: i for i, a in enumerate(alphas)}
    for true_alpha, pred_alpha, count in cells:
        counts[index[true_alpha], index[pred_alpha]] = count
    return ConfusionMatrix(counts=counts, class_alphas=alphas)


def write_predictions_csv(rows, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(PREDICTIONS_HEADER)
        for frame_index, true_alpha, pred_alpha in rows:
            writer.writerow([frame_index, f"{true_alpha:g}", f"{pred_alpha:g}"])


def save_confusion_figure(cm: ConfusionMatrix, path, title=None) -> None:
    """Row-percentage heat map with counts annotated."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    sums = np.where(cm.row_sums == 0, 1, cm.row_sums)
    pct = 100.0 * cm.counts / sums[:, None]
    fig, ax = plt.subplots(figsize=(1.2 * cm.counts.shape[0] + 2, 1.0 * cm.counts.shape[0] + 1.5))
    im = ax.imshow(pct, cmap="Blues", vmin=0, vmax=100)
    ticks = [f"{a:g}" for a in cm.class_alphas]
    ax.set_xticks(range(len(ticks)), ticks)
    ax.set_yticks(range(len(ticks)), ticks)
    ax.set_xlabel("predicted class (alpha)")
    ax.set_ylabel("true class (alpha)")
    for t in range(cm.counts.shape[0]):
        for p in range(cm.counts.shape[1]):
            color = "white" if pct[t, p] > 50 else "black"
            ax.text(p, t, str(cm.counts[t, p]), ha="center", va="center", color=color, fontsize=8)
    fig.colorbar(im, ax=ax, label="row %")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
