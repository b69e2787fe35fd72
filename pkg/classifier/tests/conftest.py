"""Shared fixtures: synthetic datasets written directly in the exported file
format (interleaved float32 IQ + JSON manifest + label CSV)."""

import json

import numpy as np
import pytest


def write_dataset(root, frames_by_class, alphas, samples_per_frame):
    """Write complex frames (one array per class) in the exported layout."""
    root.mkdir(parents=True, exist_ok=True)
    files = []
    label_rows = []
    total = 0
    for class_index, (alpha, frames) in enumerate(zip(alphas, frames_by_class)):
        interleaved = np.empty((frames.shape[0], 2 * samples_per_frame), dtype="<f4")
        interleaved[:, 0::2] = frames.real
        interleaved[:, 1::2] = frames.imag
        name = f"class{class_index}_alpha{alpha:.2f}.iq"
        interleaved.tofile(root / name)
        files.append(
            {
                "path": name,
                "class_index": class_index,
                "alpha": alpha,
                "alpha_effective": alpha,
                "frames": int(frames.shape[0]),
            }
        )
        for _ in range(frames.shape[0]):
            label_rows.append((total, class_index, alpha, alpha))
            total += 1
    manifest = {
        "n_subcarriers": samples_per_frame // 2,
        "alpha_effective": list(alphas),
        "oversampling": 2,
        "frames": total,
        "samples_per_frame": samples_per_frame,
        "labels": list(alphas),
        "files": files,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))
    lines = ["frame_index,class_index,alpha,alpha_effective"]
    lines += [f"{r[0]},{r[1]},{r[2]},{r[3]}" for r in label_rows]
    (root / "labels.csv").write_text("\n".join(lines) + "\n")
    return root / "manifest.json"


def tone_dataset(root, n_classes=4, frames_per_class=40, samples=256, seed=0):
    """Trivially separable classes: one pure tone per class plus light noise."""
    rng = np.random.default_rng(seed)
    alphas = [1.0 - 0.1 * c for c in range(n_classes)]
    k = np.arange(samples)
    blocks = []
    for c in range(n_classes):
        freq = (c + 1) * samples // (2 * (n_classes + 1))  # strictly sub-Nyquist
        phases = rng.uniform(0, 2 * np.pi, size=frames_per_class)
        tones = np.exp(1j * (2 * np.pi * freq * k[None, :] / samples + phases[:, None]))
        noise = 0.05 * (
            rng.standard_normal((frames_per_class, samples))
            + 1j * rng.standard_normal((frames_per_class, samples))
        )
        blocks.append(tones + noise)
    return write_dataset(root, blocks, alphas, samples)


@pytest.fixture
def tone_manifest(tmp_path):
    return tone_dataset(tmp_path / "tones")
