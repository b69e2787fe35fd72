"""Training loop: stratified split, Adam, early stop on validation plateau.

The exported frames are split 80/20 into train and held-out test sets; a
further slice of the training portion serves as the validation set that
drives early stopping, so the test frames never influence model selection.
Seeded end to end (numpy and torch), deterministic on CPU.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .data import LoadedDataset, load_dataset, split_indices
from .model import IqClassifier, build_model, save_model

VAL_FRACTION = 0.1  # of the training portion, for plateau detection


@dataclass
class TrainConfig:
    manifest_path: str
    out_dir: str
    train_fraction: float = 0.8
    epochs: int = 25
    batch_size: int = 64
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    seed: int = 0
    filters: int = 32
    kernel: int = 8
    patience: int = 5
    min_epochs: int = 8
    min_delta: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass
class TrainResult:
    model_path: Path
    history: list
    best_val_accuracy: float
    test_indices: np.ndarray
    dataset: LoadedDataset
    model: IqClassifier = field(repr=False, default=None)


def _batches(n, batch_size, generator=None):
    order = torch.randperm(n, generator=generator) if generator else torch.arange(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


@torch.no_grad()
def _evaluate_loss(model, x, y, loss_fn, batch_size=256):
    model.eval()
    total_loss = 0.0
    correct = 0
    for idx in _batches(x.shape[0], batch_size):
        logits = model(x[idx])
        total_loss += float(loss_fn(logits, y[idx])) * idx.numel()
        correct += int((logits.argmax(dim=1) == y[idx]).sum())
    return total_loss / x.shape[0], correct / x.shape[0]


def train(cfg: TrainConfig) -> TrainResult:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed)

    dataset = load_dataset(cfg.manifest_path)
    train_idx, test_idx = split_indices(dataset, cfg.train_fraction, cfg.seed)
    rng = np.random.default_rng(cfg.seed + 1)
    shuffled = train_idx.copy()
    rng.shuffle(shuffled)
    n_val = max(1, int(round(VAL_FRACTION * shuffled.size)))
    val_idx, fit_idx = shuffled[:n_val], shuffled[n_val:]

    x = torch.from_numpy(dataset.frames)
    y = torch.from_numpy(dataset.class_indices)
    x_fit, y_fit = x[fit_idx], y[fit_idx]
    x_val, y_val = x[val_idx], y[val_idx]

    model = build_model(
        dataset.n_classes, dataset.samples_per_frame, cfg.filters, cfg.kernel
    )
    optimizer = torch.optim.Adam(
        model.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
    )
    loss_fn = nn.CrossEntropyLoss()
    generator = torch.Generator().manual_seed(cfg.seed + 2)

    history = []
    best_acc = -1.0
    best_state = None
    stale = 0
    for epoch in range(cfg.epochs):
        model.train()
        running = 0.0
        for idx in _batches(x_fit.shape[0], cfg.batch_size, generator):
            optimizer.zero_grad()
            loss = loss_fn(model(x_fit[idx]), y_fit[idx])
            loss.backward()
            optimizer.step()
            running += float(loss.detach()) * idx.numel()
        train_loss = running / x_fit.shape[0]
        val_loss, val_acc = _evaluate_loss(model, x_val, y_val, loss_fn)
        history.append(
            {"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "val_accuracy": val_acc}
        )
        if val_acc > best_acc + cfg.min_delta:
            best_acc = val_acc
            best_state = {k: v.clone() for k, v in model.state_dict().items()}
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience and epoch + 1 >= cfg.min_epochs:
                break
    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()

    model_path = out / "model.pt"
    save_model(
        model,
        model_path,
        extra={
            "class_alphas": list(dataset.class_alphas),
            "train_fraction": cfg.train_fraction,
            "seed": cfg.seed,
            "manifest_path": str(cfg.manifest_path),
        },
    )
    with open(out / "training_curve.csv", "w", newline="") as handle:
        writer = csv.DictWriter(
            handle, fieldnames=("epoch", "train_loss", "val_loss", "val_accuracy")
        )
        writer.writeheader()
        for row in history:
            writer.writerow(row)
    return TrainResult(
        model_path=model_path,
        history=history,
        best_val_accuracy=best_acc,
        test_indices=test_idx,
        dataset=dataset,
        model=model,
    )
