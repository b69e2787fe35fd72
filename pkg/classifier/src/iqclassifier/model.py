"""Seven-layer convolutional classifier over raw I/Q rows.

Blocks 1..6 share one structure (convolution, ReLU, max pooling); block 7
swaps the max pool for an average pool; a single fully connected layer and a
softmax produce the class distribution. The input is the raw 2 x samples
frame, no hand-crafted features.

Filter count and kernel length are free parameters of the architecture; the
defaults (32 filters, kernel 8, pool 2) are sized for single-core CPU
training and are configurable everywhere they appear.
"""

from __future__ import annotations

import torch
from torch import nn

N_BLOCKS = 7


class IqClassifier(nn.Module):
    def __init__(self, n_classes: int, input_length: int, filters: int = 32, kernel: int = 8):
        super().__init__()
        if input_length < 2**N_BLOCKS:
            raise ValueError(
                f"input length {input_length} too short for {N_BLOCKS} pooling stages"
            )
        self.n_classes = n_classes
        self.input_length = input_length
        self.filters = filters
        self.kernel = kernel
        blocks = []
        in_channels = 2
        for b in range(N_BLOCKS):
            pool = nn.AvgPool1d(2) if b == N_BLOCKS - 1 else nn.MaxPool1d(2)
            blocks += [
                nn.Conv1d(in_channels, filters, kernel, padding="same"),
                nn.ReLU(),
                pool,
            ]
            in_channels = filters
        self.features = nn.Sequential(*blocks)
        with torch.no_grad():
            probe = self.features(torch.zeros(1, 2, input_length))
        self.classifier = nn.Linear(probe.numel(), n_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = self.features(x)
        return self.classifier(z.flatten(1))

    @torch.no_grad()
    def predict_proba(self, x: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.forward(x), dim=1)


def build_model(n_classes: int, input_length: int = 2048, filters: int = 32, kernel: int = 8):
    return IqClassifier(n_classes, input_length, filters, kernel)


def save_model(model: IqClassifier, path, extra: dict | None = None) -> None:
    payload = {
        "state_dict": model.state_dict(),
        "n_classes": model.n_classes,
        "input_length": model.input_length,
        "filters": model.filters,
        "kernel": model.kernel,
    }
    if extra:
        payload["extra"] = extra
    torch.save(payload, path)


def load_model(path):
    payload = torch.load(path, map_location="cpu", weights_only=False)
    model = IqClassifier(
        payload["n_classes"], payload["input_length"], payload["filters"], payload["kernel"]
    )
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload.get("extra", {})
