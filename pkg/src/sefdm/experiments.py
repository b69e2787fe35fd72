"""Monte-Carlo experiment harness.

Reproduces the two defence studies end to end — waveform scaling (grow the
signal until optimal detection is computationally out of reach) and waveform
tuning (pick compression factors so similar that a detector built for the
wrong one hits an error floor) — and exports the labeled IQ datasets the
eavesdropper classifier trains on. Every run is a pure function of its
configuration and master seed: per-frame RNG streams are derived from
(master_seed, point, frame), so results do not depend on execution order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import (
    ChannelProfile,
    NoiseSpec,
    apply_cfo,
    apply_taps,
    awgn,
    awgn_samples,
    correct_cfo,
    default_profile,
    draw_taps,
    genie_equalize,
    rician_multipath,
)
from .complexity import int_log10, sd_upper_bound_ops
from .detectors import (
    CapacityError,
    MAX_ML_SUBCARRIERS,
    MAX_SD_SUBCARRIERS,
    mf_hard_detect,
    ml_detect,
    multisd_detect,
    sphere_detect,
)
from .iqio import write_iq, write_labels_csv, write_manifest
from .waveform import BandPlan, WaveformConfig, qpsk_map, sefdm_modulate

# Built-in compression-factor class sets for the classifier datasets: the
# "diverse" grid keeps the classes visually distinct, the "similar" grid packs
# them close enough to confuse a feature-learning eavesdropper.
ALPHA_SET_DIVERSE = (1.0, 0.9, 0.8, 0.7)
ALPHA_SET_SIMILAR = (1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7)

CURVE_CSV_HEADER = ("esn0_db", "bits", "errors", "ber")

DETECTOR_IDS = ("MF", "ML", "SD", "MultiSD")


class ExperimentError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One BER run: a signal waveform, a detector (possibly built for a
    different compression factor), a channel mode and a stopping rule."""

    waveform: WaveformConfig
    detector_id: str = "SD"
    detector_alpha: float | None = None  # None: matched to the signal
    channel: str = "awgn"  # "awgn" | "fading"
    es_n0_grid_db: tuple = (0.0, 4.0, 8.0, 12.0, 16.0)
    min_bit_errors: int = 100
    max_frames: int = 2000
    master_seed: int = 0
    radius_policy: str = "shrink-on-leaf"
    profile: ChannelProfile | None = None

    def __post_init__(self):
        if self.detector_id not in DETECTOR_IDS:
            raise ExperimentError(f"unknown detector {self.detector_id!r}")
        if self.channel not in ("awgn", "fading"):
            raise ExperimentError(f"unknown channel mode {self.channel!r}")
        if not self.es_n0_grid_db:
            raise ExperimentError("es_n0_grid_db must be nonempty")
        if self.min_bit_errors < 1 or self.max_frames < 1:
            raise ExperimentError("min_bit_errors and max_frames must be >= 1")
        object.__setattr__(self, "es_n0_grid_db", tuple(float(v) for v in self.es_n0_grid_db))

    @property
    def detector_config(self) -> WaveformConfig:
        if self.detector_alpha is None:
            return self.waveform
        return self.waveform.with_alpha(self.detector_alpha)


@dataclass(frozen=True)
class BerPoint:
    es_n0_db: float
    bits_sent: int
    bit_errors: int
    ber: float
    low_confidence: bool
    mean_visited_nodes: float


@dataclass(frozen=True)
class BerCurve:
    label: str
    points: tuple

    def ber_at(self, es_n0_db: float) -> float:
        for p in self.points:
            if p.es_n0_db == es_n0_db:
                return p.ber
        raise KeyError(f"no point at {es_n0_db} dB in curve {self.label!r}")

    def esn0_at_ber(self, target_ber: float) -> float:
        """Es/N0 where the curve crosses target_ber, interpolated linearly in
        (dB, log10 BER); requires a bracketing pair of positive-BER points."""
        pts = [p for p in self.points if p.ber > 0]
        for a, b in zip(pts, pts[1:]):
            if (a.ber - target_ber) * (b.ber - target_ber) <= 0 and a.ber != b.ber:
                la, lb, lt = math.log10(a.ber), math.log10(b.ber), math.log10(target_ber)
                return a.es_n0_db + (lt - la) * (b.es_n0_db - a.es_n0_db) / (lb - la)
        raise ValueError(
            f"curve {self.label!r} does not bracket BER {target_ber}"
        )


def _validate_capacity(cfg: ExperimentConfig) -> None:
    det_cfg = cfg.detector_config
    n = det_cfg.n_subcarriers
    if cfg.detector_id == "ML" and n > MAX_ML_SUBCARRIERS:
        raise CapacityError(f"ML detector refused at N={n} (limit {MAX_ML_SUBCARRIERS})")
    if cfg.detector_id == "SD" and n > MAX_SD_SUBCARRIERS:
        ops = sd_upper_bound_ops(n)
        raise CapacityError(
            f"SD detector refused at N={n} (limit {MAX_SD_SUBCARRIERS}); "
            f"full-expansion cost is 10^{int_log10(ops.multiplications):.1f} multiplications"
        )
    if cfg.detector_id == "MultiSD" and det_cfg.band_plan is None:
        raise ExperimentError("MultiSD requires a waveform config with a band plan")


def _detector(cfg: ExperimentConfig):
    det_cfg = cfg.detector_config
    if cfg.detector_id == "MF":
        return lambda frame: mf_hard_detect(frame, det_cfg)
    if cfg.detector_id == "ML":
        return lambda frame: ml_detect(frame, det_cfg)
    if cfg.detector_id == "SD":
        return lambda frame: sphere_detect(frame, det_cfg, cfg.radius_policy)
    return lambda frame: multisd_detect(frame, det_cfg, cfg.radius_policy)


def _frame_seeds(master_seed, point_index, frame_index):
    base = (int(master_seed), int(point_index), int(frame_index))
    return (
        np.random.SeedSequence(base + (0,)),  # payload bits
        np.random.SeedSequence(base + (1,)),  # fading
        np.random.SeedSequence(base + (2,)),  # noise
    )


def _transmit(cfg: ExperimentConfig, point_index, frame_index, es_n0_db):
    """One frame through the configured channel; returns (bits, rx_frame)."""
    bits_seq, chan_seq, noise_seq = _frame_seeds(cfg.master_seed, point_index, frame_index)
    rng = np.random.default_rng(bits_seq)
    bits = rng.integers(0, 2, size=2 * cfg.waveform.n_subcarriers)
    frame = sefdm_modulate(qpsk_map(bits), cfg.waveform)
    profile = cfg.profile
    if cfg.channel == "fading":
        if profile is None:
            profile = default_profile()
        frame, trace = rician_multipath(frame, profile, chan_seq)
        frame = apply_cfo(frame, profile)
    frame = awgn(frame, NoiseSpec(es_n0_db), noise_seq)
    if cfg.channel == "fading":
        # genie receiver front end: offset removal and spectral equalization
        # from the realized channel, isolating the waveform-level effects
        frame = correct_cfo(frame, profile)
        frame = genie_equalize(frame, trace)
    return bits, frame


def run_ber(cfg: ExperimentConfig, label: str | None = None) -> BerCurve:
    """Monte-Carlo BER sweep: per grid point, frames are generated, impaired
    and detected until min_bit_errors are collected or max_frames is hit
    (points that miss the error quota are flagged low-confidence)."""
    _validate_capacity(cfg)
    detect = _detector(cfg)
    points = []
    for point_index, es_n0_db in enumerate(sorted(cfg.es_n0_grid_db)):
        errors = 0
        bits_sent = 0
        visited = 0
        frames = 0
        while errors < cfg.min_bit_errors and frames < cfg.max_frames:
            bits, frame = _transmit(cfg, point_index, frames, es_n0_db)
            result = detect(frame)
            errors += int(np.count_nonzero(result.bits != bits))
            bits_sent += bits.size
            visited += result.visited_nodes
            frames += 1
        points.append(
            BerPoint(
                es_n0_db=es_n0_db,
                bits_sent=bits_sent,
                bit_errors=errors,
                ber=errors / bits_sent,
                low_confidence=errors < cfg.min_bit_errors,
                mean_visited_nodes=visited / frames,
            )
        )
    if label is None:
        label = f"{cfg.detector_id.lower()}_alpha_{cfg.detector_config.alpha_target:g}"
    return BerCurve(label=label, points=tuple(points))


def write_curve_csv(curve: BerCurve, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CURVE_CSV_HEADER)
        for p in sorted(curve.points, key=lambda p: p.es_n0_db):
            writer.writerow([f"{p.es_n0_db:g}", p.bits_sent, p.bit_errors, f"{p.ber:.9e}"])


def curve_report(curve: BerCurve) -> dict:
    return {
        "label": curve.label,
        "points": [
            {
                "esn0_db": p.es_n0_db,
                "bits": p.bits_sent,
                "errors": p.bit_errors,
                "ber": p.ber,
                "low_confidence": p.low_confidence,
                "mean_visited_nodes": p.mean_visited_nodes,
            }
            for p in curve.points
        ],
    }


# ---------------------------------------------------------------------------
# Waveform tuning defence
# ---------------------------------------------------------------------------

def run_tuning_defence(target_alpha: float, detector_alphas, cfg: ExperimentConfig):
    """Fix the signal at target_alpha and sweep detectors built for each
    candidate compression factor (block sphere decoding), plus the plain
    orthogonal-grid matched filter an uninformed eavesdropper would run.

    Returns a report dict with one BER curve per detector; the matched
    detector is expected to be the argmin-BER curve at moderate and high
    Es/N0 while every mismatched detector exhibits an error floor.
    """
    signal_cfg = cfg.waveform.with_alpha(target_alpha)
    curves = []
    for alpha in detector_alphas:
        run_cfg = replace(
            cfg, waveform=signal_cfg, detector_id="MultiSD", detector_alpha=float(alpha)
        )
        curves.append(run_ber(run_cfg, label=f"multisd_alpha_{alpha:g}"))
    mf_cfg = replace(cfg, waveform=signal_cfg, detector_id="MF", detector_alpha=1.0)
    curves.append(run_ber(mf_cfg, label="mf_alpha_1"))

    matched_label = f"multisd_alpha_{target_alpha:g}"
    matched_is_argmin = {}
    matched = next((c for c in curves if c.label == matched_label), None)
    if matched is not None:
        for p in matched.points:
            others = [c.ber_at(p.es_n0_db) for c in curves if c is not matched]
            matched_is_argmin[p.es_n0_db] = p.ber <= min(others)
    return {
        "target_alpha": float(target_alpha),
        "detector_alphas": [float(a) for a in detector_alphas],
        "curves": curves,
        "matched_label": matched_label,
        "matched_is_argmin": matched_is_argmin,
    }


# ---------------------------------------------------------------------------
# Waveform scaling defence
# ---------------------------------------------------------------------------

def run_scaling_defence(
    cfg: ExperimentConfig,
    n_small: int = 12,
    n_large: int = 256,
    alphas=(1.0, 0.8),
    large_band_plan: BandPlan | None = None,
    op_budget: int = 10**12,
    large_es_n0_grid_db: tuple | None = None,
    large_max_frames: int | None = None,
):
    """Two-panel scaling study.

    Small panel: at n_small subcarriers both the optimal tree-search receiver
    and the matched filter are run for each alpha. Large panel: at n_large the
    full tree search is refused (its operation bound is compared against
    op_budget and reported), the matched filter shows the interference floor,
    and block sphere decoding over a guarded multi-band layout carries the
    legitimate user.
    """
    if large_band_plan is None:
        large_band_plan = BandPlan(n_large // 8, 8, 1)
    rho = cfg.waveform.oversampling
    small = []
    for alpha in alphas:
        wf = WaveformConfig.create(n_small, alpha, rho)
        for detector in ("SD", "MF"):
            run_cfg = replace(cfg, waveform=wf, detector_id=detector, detector_alpha=None)
            small.append(run_ber(run_cfg, label=f"n{n_small}_{detector.lower()}_alpha_{alpha:g}"))

    ops = sd_upper_bound_ops(n_large)
    sd_over_budget = ops.multiplications > op_budget

    large = []
    compressed = min(alphas)
    large_overrides = {}
    if large_es_n0_grid_db is not None:
        large_overrides["es_n0_grid_db"] = tuple(large_es_n0_grid_db)
    if large_max_frames is not None:
        large_overrides["max_frames"] = large_max_frames
    for alpha, detector in [(1.0, "MF"), (compressed, "MF"), (compressed, "MultiSD")]:
        wf = WaveformConfig.create(n_large, alpha, rho, band_plan=large_band_plan)
        run_cfg = replace(
            cfg, waveform=wf, detector_id=detector, detector_alpha=None, **large_overrides
        )
        large.append(run_ber(run_cfg, label=f"n{n_large}_{detector.lower()}_alpha_{alpha:g}"))

    return {
        "n_small": n_small,
        "n_large": n_large,
        "alphas": [float(a) for a in alphas],
        "small_curves": small,
        "large_curves": large,
        "sd_ops_large_multiplications": str(ops.multiplications),
        "sd_ops_large_log10": int_log10(ops.multiplications),
        "op_budget": op_budget,
        "sd_refused_at_n_large": sd_over_budget,
    }


# ---------------------------------------------------------------------------
# Dataset export
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetManifest:
    """Layout of one labeled IQ dataset for classifier training."""

    class_alphas: tuple
    frames_per_class: int = 2000
    es_n0_db: float = 20.0
    channel: str = "fading"
    n_subcarriers: int = 256
    oversampling: int = 8
    band_plan: BandPlan = field(default_factory=lambda: BandPlan(32, 8, 1))
    master_seed: int = 0

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.class_alphas)
        if len(set(alphas)) != len(alphas) or not alphas:
            raise ExperimentError("class_alphas must be nonempty and unique")
        object.__setattr__(self, "class_alphas", alphas)
        if self.frames_per_class < 1:
            raise ExperimentError("frames_per_class must be >= 1")
        if self.channel not in ("awgn", "fading"):
            raise ExperimentError(f"unknown channel mode {self.channel!r}")


def _captured_frame(cfg, profile, manifest, class_index, frame_index):
    """One eavesdropper capture: a window over the running transmission.

    A passive receiver is synchronized to nothing, so the capture models the
    three uncertainties of over-the-air interception: the window straddles
    two consecutive symbols at a random offset, the oscillator offset is an
    independent draw within the hardware's ppm class (a fixed offset would
    hand the classifier deterministic band edges no real capture has), and
    the fading is an independent quasi-static realization."""
    bits_seq, chan_seq, noise_seq = _frame_seeds(
        manifest.master_seed, class_index, frame_index
    )
    capture_rng = np.random.default_rng(
        np.random.SeedSequence(
            (int(manifest.master_seed), class_index, frame_index, 3)
        )
    )
    rng = np.random.default_rng(bits_seq)
    n_samp = cfg.samples_per_frame
    stream = np.empty(2 * n_samp, dtype=np.complex128)
    for half in range(2):
        bits = rng.integers(0, 2, size=2 * cfg.n_subcarriers)
        stream[half * n_samp : (half + 1) * n_samp] = sefdm_modulate(
            qpsk_map(bits), cfg
        ).samples
    if manifest.channel == "fading":
        trace = draw_taps(profile, stream.size, chan_seq)
        stream = apply_taps(stream, trace)
        ppm = capture_rng.uniform(-profile.cfo_ppm, profile.cfo_ppm)
        f_off = ppm * 1e-6 * profile.rf_center_hz
        k = np.arange(stream.size)
        stream = stream * np.exp(2j * np.pi * f_off * k / profile.sample_rate_hz)
    symbol_energy = float(np.mean(np.abs(stream) ** 2)) * cfg.oversampling
    stream = awgn_samples(stream, symbol_energy, manifest.es_n0_db, noise_seq)
    start = int(capture_rng.integers(0, n_samp))
    return stream[start : start + n_samp]


def export_dataset(manifest: DatasetManifest, out_dir, profile: ChannelProfile | None = None):
    """Generate frames_per_class captured frames per compression-factor class
    through the impairment chain and write the IQ binaries, the JSON manifest
    and the label CSV. Fully reproducible from the master seed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if profile is None and manifest.channel == "fading":
        profile = default_profile()

    file_records = []
    label_rows = []
    alpha_effectives = []
    frame_index = 0
    for class_index, alpha in enumerate(manifest.class_alphas):
        cfg = WaveformConfig.create(
            manifest.n_subcarriers, alpha, manifest.oversampling, manifest.band_plan
        )
        alpha_effectives.append(cfg.alpha_effective)
        block = np.empty(
            (manifest.frames_per_class, cfg.samples_per_frame), dtype=np.complex128
        )
        for f in range(manifest.frames_per_class):
            block[f] = _captured_frame(cfg, profile, manifest, class_index, f)
            label_rows.append((frame_index, class_index, alpha, cfg.alpha_effective))
            frame_index += 1
        filename = f"class{class_index}_alpha{alpha:.2f}.iq"
        write_iq(out / filename, block)
        file_records.append(
            {
                "path": filename,
                "class_index": class_index,
                "alpha": alpha,
                "alpha_effective": cfg.alpha_effective,
                "frames": manifest.frames_per_class,
            }
        )

    samples_per_frame = manifest.n_subcarriers * manifest.oversampling
    manifest_dict = {
        "n_subcarriers": manifest.n_subcarriers,
        "alpha_effective": alpha_effectives,
        "oversampling": manifest.oversampling,
        "frames": frame_index,
        "samples_per_frame": samples_per_frame,
        "labels": list(manifest.class_alphas),
        "frames_per_class": manifest.frames_per_class,
        "es_n0_db": manifest.es_n0_db,
        "channel": manifest.channel,
        "master_seed": manifest.master_seed,
        "band_plan": {
            "n_bands": manifest.band_plan.n_bands,
            "band_size": manifest.band_plan.band_size,
            "guard_subcarriers": manifest.band_plan.guard_subcarriers,
        },
        "files": file_records,
    }
    write_manifest(out / "manifest.json", manifest_dict)
    write_labels_csv(out / "labels.csv", label_rows)
    return manifest_dict


# ---------------------------------------------------------------------------
# Predicted-label replay (defence impact of misclassification)
# ---------------------------------------------------------------------------

def read_predictions_csv(path):
    """Predicted-label file: frame_index,true_alpha,pred_alpha."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader))
        if header != ("frame_index", "true_alpha", "pred_alpha"):
            raise ExperimentError(f"{path}: unexpected prediction header {header}")
        return [(int(r[0]), float(r[1]), float(r[2])) for r in reader]


def replay_predictions(predictions, cfg: ExperimentConfig, es_n0_db: float = 20.0):
    """Replay classifier decisions through the detector-mismatch path.

    Each (true_alpha, pred_alpha) pair becomes a block-sphere-decoding run
    with the signal at the true compression factor and the detector built for
    the predicted one; pair BERs are averaged weighted by how often the
    classifier produced that pair.
    """
    pair_counts = {}
    for _, true_alpha, pred_alpha in predictions:
        key = (float(true_alpha), float(pred_alpha))
        pair_counts[key] = pair_counts.get(key, 0) + 1
    if not pair_counts:
        raise ExperimentError("no predictions to replay")

    pairs = []
    weighted = 0.0
    total = 0
    for (true_alpha, pred_alpha), count in sorted(pair_counts.items()):
        run_cfg = replace(
            cfg,
            waveform=cfg.waveform.with_alpha(true_alpha),
            detector_id="MultiSD",
            detector_alpha=pred_alpha,
            es_n0_grid_db=(es_n0_db,),
        )
        curve = run_ber(run_cfg, label=f"replay_{true_alpha:g}_{pred_alpha:g}")
        ber = curve.points[0].ber
        pairs.append(
            {
                "true_alpha": true_alpha,
                "pred_alpha": pred_alpha,
                "count": count,
                "ber": ber,
            }
        )
        weighted += count * ber
        total += count
    return {
        "es_n0_db": es_n0_db,
        "aggregate_ber": weighted / total,
        "pairs": pairs,
    }
