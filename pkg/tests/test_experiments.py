"""Experiment-harness tests: closed-form BER oracle, reproducibility down to
file bytes, defence-study structure, and dataset export."""

import json
import math

import numpy as np
import pytest
from scipy.special import erfc

from sefdm.detectors import CapacityError
from sefdm.experiments import (
    ALPHA_SET_DIVERSE,
    ALPHA_SET_SIMILAR,
    BerCurve,
    BerPoint,
    DatasetManifest,
    ExperimentConfig,
    ExperimentError,
    curve_report,
    export_dataset,
    read_predictions_csv,
    replay_predictions,
    run_ber,
    run_scaling_defence,
    run_tuning_defence,
    write_curve_csv,
)
from sefdm.iqio import read_iq, read_labels_csv, read_manifest
from sefdm.waveform import BandPlan, WaveformConfig


def qpsk_awgn_ber(es_n0_db):
    """Closed-form QPSK bit error rate in AWGN (Es = 2 Eb)."""
    eb_n0 = 10.0 ** (es_n0_db / 10.0) / 2.0
    return 0.5 * erfc(math.sqrt(eb_n0))


BAND16 = BandPlan(2, 8, 1)


def small_multiband_cfg(**overrides):
    wf = WaveformConfig.create(16, 0.8, 8, band_plan=BAND16)
    defaults = dict(
        waveform=wf,
        detector_id="MultiSD",
        es_n0_grid_db=(10.0, 20.0),
        min_bit_errors=50,
        max_frames=100,
        master_seed=11,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


# ---------------------------------------------------------------------------
# run_ber
# ---------------------------------------------------------------------------

def test_ber_matches_closed_form_at_eb_n0_10db():
    # the matched-filter OFDM link is an analytic reference point: at
    # Eb/N0 = 10 dB (Es/N0 = 13.01 dB) theory gives 3.87e-6
    es_n0_db = 10.0 + 10.0 * math.log10(2.0)
    cfg = ExperimentConfig(
        waveform=WaveformConfig.create(256, 1.0, 8),
        detector_id="MF",
        es_n0_grid_db=(es_n0_db,),
        min_bit_errors=100,
        max_frames=80_000,
        master_seed=12,
    )
    point = run_ber(cfg).points[0]
    theory = qpsk_awgn_ber(es_n0_db)
    assert theory == pytest.approx(3.87e-6, rel=0.01)
    assert not point.low_confidence
    assert point.ber == pytest.approx(theory, rel=0.5)


def test_ber_zero_noise_matched_run_is_exact():
    cfg = small_multiband_cfg(es_n0_grid_db=(math.inf,), max_frames=20, min_bit_errors=1)
    point = run_ber(cfg).points[0]
    assert point.ber == 0.0
    assert point.bits_sent == 20 * 32
    assert point.low_confidence  # never reached the error quota


def test_ber_curve_is_seed_reproducible(tmp_path):
    cfg = small_multiband_cfg()
    a = run_ber(cfg)
    b = run_ber(cfg)
    assert a == b
    path_a, path_b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_curve_csv(a, path_a)
    write_curve_csv(b, path_b)
    assert path_a.read_bytes() == path_b.read_bytes()
    header = path_a.read_text().splitlines()[0]
    assert header == "esn0_db,bits,errors,ber"


def test_ber_different_seed_differs():
    cfg = small_multiband_cfg(es_n0_grid_db=(6.0,))
    other = small_multiband_cfg(es_n0_grid_db=(6.0,), master_seed=99)
    assert run_ber(cfg) != run_ber(other)


def test_ber_capacity_error_carries_context():
    cfg = ExperimentConfig(
        waveform=WaveformConfig.create(256, 0.8, 8),
        detector_id="SD",
        es_n0_grid_db=(10.0,),
    )
    with pytest.raises(CapacityError, match="multiplications"):
        run_ber(cfg)


def test_ber_fading_channel_runs_with_genie_receiver():
    cfg = ExperimentConfig(
        waveform=WaveformConfig.create(32, 1.0, 8),
        detector_id="MF",
        channel="fading",
        es_n0_grid_db=(25.0,),
        min_bit_errors=20,
        max_frames=200,
        master_seed=13,
    )
    point = run_ber(cfg).points[0]
    assert point.ber < 0.1  # equalized link works, residual fade errors only


def test_experiment_config_validation():
    wf = WaveformConfig.create(16, 0.8, 8)
    with pytest.raises(ExperimentError):
        ExperimentConfig(waveform=wf, detector_id="GENIE")
    with pytest.raises(ExperimentError):
        ExperimentConfig(waveform=wf, channel="underwater")
    with pytest.raises(ExperimentError):
        ExperimentConfig(waveform=wf, es_n0_grid_db=())


def test_curve_interpolation_and_report():
    points = (
        BerPoint(8.0, 1000, 100, 1e-2, False, 10.0),
        BerPoint(12.0, 10000, 10, 1e-4, False, 5.0),
    )
    curve = BerCurve("demo", points)
    assert curve.esn0_at_ber(1e-3) == pytest.approx(10.0)
    assert curve.ber_at(8.0) == 1e-2
    report = curve_report(curve)
    assert report["label"] == "demo"
    assert report["points"][0]["low_confidence"] is False


# ---------------------------------------------------------------------------
# Tuning defence
# ---------------------------------------------------------------------------

def test_tuning_defence_matched_detector_wins():
    cfg = small_multiband_cfg(es_n0_grid_db=(10.0, 20.0, 30.0), max_frames=60)
    report = run_tuning_defence(0.8, [0.9, 0.8, 0.7], cfg)
    labels = [c.label for c in report["curves"]]
    assert labels == [
        "multisd_alpha_0.9",
        "multisd_alpha_0.8",
        "multisd_alpha_0.7",
        "mf_alpha_1",
    ]
    assert all(report["matched_is_argmin"][e] for e in (10.0, 20.0, 30.0))
    for curve in report["curves"]:
        if curve.label == "multisd_alpha_0.8":
            continue
        # mismatched detectors are floor-limited well above the matched one
        assert curve.ber_at(20.0) >= 1e-2
        assert curve.ber_at(30.0) >= 1e-2


# ---------------------------------------------------------------------------
# Scaling defence
# ---------------------------------------------------------------------------

def test_scaling_defence_report_structure():
    cfg = ExperimentConfig(
        waveform=WaveformConfig.create(8, 0.8, 8),
        es_n0_grid_db=(4.0, 8.0),
        min_bit_errors=20,
        max_frames=60,
        master_seed=14,
    )
    report = run_scaling_defence(
        cfg, n_small=8, n_large=32, alphas=(1.0, 0.8), large_band_plan=BandPlan(4, 8, 1)
    )
    small_labels = {c.label for c in report["small_curves"]}
    assert small_labels == {
        "n8_sd_alpha_1",
        "n8_mf_alpha_1",
        "n8_sd_alpha_0.8",
        "n8_mf_alpha_0.8",
    }
    large_labels = {c.label for c in report["large_curves"]}
    assert large_labels == {
        "n32_mf_alpha_1",
        "n32_mf_alpha_0.8",
        "n32_multisd_alpha_0.8",
    }
    # the full tree search is reported as over budget, never executed
    assert report["sd_refused_at_n_large"]
    assert int(report["sd_ops_large_multiplications"]) > report["op_budget"]
    assert report["sd_ops_large_log10"] > 12.0


# ---------------------------------------------------------------------------
# Dataset export
# ---------------------------------------------------------------------------

def test_builtin_class_sets_give_published_frame_totals():
    assert len(ALPHA_SET_DIVERSE) * 2000 == 8000
    assert len(ALPHA_SET_SIMILAR) * 2000 == 14000
    manifest = DatasetManifest(class_alphas=ALPHA_SET_DIVERSE)
    assert manifest.frames_per_class == 2000
    assert manifest.es_n0_db == 20.0
    assert manifest.channel == "fading"


def test_export_dataset_files_and_roundtrip(tmp_path):
    manifest = DatasetManifest(
        class_alphas=(1.0, 0.8),
        frames_per_class=3,
        n_subcarriers=16,
        oversampling=2,
        band_plan=BandPlan(2, 8, 1),
        master_seed=15,
    )
    out = tmp_path / "ds"
    written = export_dataset(manifest, out)
    assert written["frames"] == 6
    assert (out / "manifest.json").exists()
    loaded = read_manifest(out / "manifest.json")
    assert loaded["samples_per_frame"] == 32
    assert loaded["labels"] == [1.0, 0.8]
    labels = read_labels_csv(out / "labels.csv")
    assert [r[0] for r in labels] == list(range(6))
    assert [r[1] for r in labels] == [0, 0, 0, 1, 1, 1]
    for record in loaded["files"]:
        frames = read_iq(out / record["path"], loaded["samples_per_frame"])
        assert frames.shape == (3, 32)
        assert np.all(np.isfinite(frames))


def test_export_dataset_byte_identical_rerun(tmp_path):
    manifest = DatasetManifest(
        class_alphas=(0.9, 0.7),
        frames_per_class=2,
        n_subcarriers=16,
        oversampling=2,
        band_plan=BandPlan(2, 8, 1),
        master_seed=16,
    )
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    export_dataset(manifest, out1)
    export_dataset(manifest, out2)
    for name in ["manifest.json", "labels.csv", "class0_alpha0.90.iq", "class1_alpha0.70.iq"]:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_dataset_manifest_validation():
    with pytest.raises(ExperimentError):
        DatasetManifest(class_alphas=(0.8, 0.8))
    with pytest.raises(ExperimentError):
        DatasetManifest(class_alphas=(0.8,), frames_per_class=0)


# ---------------------------------------------------------------------------
# Prediction replay
# ---------------------------------------------------------------------------

def test_replay_predictions_penalizes_misclassification(tmp_path):
    base = small_multiband_cfg(min_bit_errors=30, max_frames=40)
    correct = [(i, 0.8, 0.8) for i in range(10)]
    wrong = [(i, 0.8, 0.7) for i in range(10)]
    ber_correct = replay_predictions(correct, base, es_n0_db=20.0)["aggregate_ber"]
    ber_wrong = replay_predictions(wrong, base, es_n0_db=20.0)["aggregate_ber"]
    assert ber_correct < 1e-2
    assert ber_wrong > 1e-1

    path = tmp_path / "pred.csv"
    path.write_text(
        "frame_index,true_alpha,pred_alpha\n0,0.8,0.8\n1,0.8,0.7\n2,0.8,0.7\n"
    )
    rows = read_predictions_csv(path)
    assert rows == [(0, 0.8, 0.8), (1, 0.8, 0.7), (2, 0.8, 0.7)]
    report = replay_predictions(rows, base, es_n0_db=20.0)
    assert len(report["pairs"]) == 2
    assert report["pairs"][0]["count"] + report["pairs"][1]["count"] == 3


def test_replay_requires_predictions():
    with pytest.raises(ExperimentError):
        replay_predictions([], small_multiband_cfg())
