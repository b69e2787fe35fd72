"""Waveform-layer tests: frozen hand values, direct-summation oracles and
structural invariants of the generation path."""

import math

import numpy as np
import pytest

from sefdm.waveform import (
    BandPlan,
    IqFrame,
    WaveformConfig,
    WaveformError,
    carrier_matrix,
    correlation_operator,
    ici_mean_interference,
    ici_power_decompose,
    multiband_modulate,
    occupied_bandwidth,
    psd_estimate,
    qpsk_demap_hard,
    qpsk_map,
    sefdm_modulate,
    subcarrier_positions,
)

RT2 = math.sqrt(2.0)


def direct_frame(symbols, cfg):
    """Independent O(N*K) oracle: evaluate the generation sum term by term."""
    pos = subcarrier_positions(cfg)
    n_samp = cfg.samples_per_frame
    out = np.zeros(n_samp, dtype=complex)
    for k in range(n_samp):
        acc = 0.0 + 0.0j
        for n, p in enumerate(pos):
            acc += symbols[n] * np.exp(2j * np.pi * p * k / n_samp)
        out[k] = acc / math.sqrt(cfg.ifft_len)
    return out


def random_qpsk(rng, n):
    return qpsk_map(rng.integers(0, 2, size=2 * n))


# ---------------------------------------------------------------------------
# QPSK mapping
# ---------------------------------------------------------------------------

def test_qpsk_map_fixed_points():
    assert qpsk_map([0, 0])[0] == pytest.approx((1 + 1j) / RT2)
    assert qpsk_map([1, 1])[0] == pytest.approx((-1 - 1j) / RT2)
    np.testing.assert_allclose(
        qpsk_map([0, 1, 1, 0]), [(1 - 1j) / RT2, (-1 + 1j) / RT2], atol=1e-15
    )


def test_qpsk_map_rejects_odd_bit_count():
    with pytest.raises(WaveformError):
        qpsk_map([0, 1, 0])


def test_qpsk_unit_average_energy():
    rng = np.random.default_rng(0)
    s = random_qpsk(rng, 512)
    assert np.mean(np.abs(s) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_qpsk_demap_slicing_and_roundtrip():
    # real < 0 -> first bit 1; imag > 0 -> second bit 0
    np.testing.assert_array_equal(qpsk_demap_hard([-0.9 + 0.1j]), [1, 0])
    for bits in ([0, 0], [0, 1], [1, 0], [1, 1]):
        np.testing.assert_array_equal(qpsk_demap_hard(qpsk_map(bits)), bits)
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, size=400)
    np.testing.assert_array_equal(qpsk_demap_hard(qpsk_map(bits)), bits)


def test_qpsk_demap_zero_slices_to_bit_zero():
    np.testing.assert_array_equal(qpsk_demap_hard([0.0 + 0.0j]), [0, 0])


# ---------------------------------------------------------------------------
# Configuration invariants
# ---------------------------------------------------------------------------

def test_alpha_quantization_bound():
    for n, rho in [(4, 8), (12, 8), (256, 8), (7, 3)]:
        for alpha in [1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7]:
            cfg = WaveformConfig.create(n, alpha, rho)
            assert abs(n * rho / alpha - cfg.ifft_len) <= 0.5
            assert 0.0 < cfg.alpha_effective <= 1.0
            assert cfg.samples_per_frame == n * rho
            assert (cfg.alpha_effective == 1.0) == (cfg.ifft_len == n * rho)


def test_alpha_validation():
    with pytest.raises(WaveformError):
        WaveformConfig.create(8, 0.0)
    with pytest.raises(WaveformError):
        WaveformConfig.create(8, 1.2)


def test_band_plan_must_cover_all_subcarriers():
    with pytest.raises(WaveformError):
        WaveformConfig.create(8, 0.8, 2, band_plan=BandPlan(3, 3, 1))


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def test_modulate_two_carrier_hand_value():
    cfg = WaveformConfig.create(2, 1.0, oversampling=1)
    frame = sefdm_modulate(np.array([1.0, 1.0]), cfg)
    np.testing.assert_allclose(frame.samples, [RT2, 0.0], atol=1e-12)


def test_modulate_one_hot_truncated_carrier():
    # alpha = 0.5, N = 4, rho = 1 -> transform length 8; a one-hot symbol on
    # subcarrier 3 must reproduce that carrier's first 4 samples.
    cfg = WaveformConfig.create(4, 0.5, oversampling=1)
    assert cfg.ifft_len == 8
    s = np.zeros(4, dtype=complex)
    s[3] = 1.0
    frame = sefdm_modulate(s, cfg)
    k = np.arange(4)
    expected = np.exp(2j * np.pi * 3 * k / 8) / math.sqrt(8)
    np.testing.assert_allclose(frame.samples, expected, atol=1e-12)


def test_modulate_matches_direct_summation_oracle():
    rng = np.random.default_rng(2)
    for n, rho, alpha in [(2, 1, 1.0), (4, 1, 0.5), (8, 4, 0.8), (12, 8, 0.7)]:
        cfg = WaveformConfig.create(n, alpha, rho)
        s = random_qpsk(rng, n)
        np.testing.assert_allclose(
            sefdm_modulate(s, cfg).samples, direct_frame(s, cfg), atol=1e-10
        )


def test_modulate_alpha_one_equals_ofdm_reference():
    rng = np.random.default_rng(3)
    cfg = WaveformConfig.create(16, 1.0, 4)
    for _ in range(20):
        s = random_qpsk(rng, 16)
        k = np.arange(cfg.samples_per_frame)
        n = np.arange(16)
        ofdm = (
            np.exp(2j * np.pi * np.outer(k, n) / cfg.samples_per_frame) @ s
        ) / math.sqrt(cfg.samples_per_frame)
        np.testing.assert_allclose(sefdm_modulate(s, cfg).samples, ofdm, atol=1e-12)


def test_modulate_rejects_length_mismatch():
    cfg = WaveformConfig.create(8, 0.9)
    with pytest.raises(WaveformError):
        sefdm_modulate(np.ones(7, dtype=complex), cfg)


def test_modulate_deterministic():
    cfg = WaveformConfig.create(12, 0.8)
    s = random_qpsk(np.random.default_rng(4), 12)
    a = sefdm_modulate(s, cfg).samples
    b = sefdm_modulate(s, cfg).samples
    assert a.tobytes() == b.tobytes()


def test_parseval_at_alpha_one():
    rng = np.random.default_rng(5)
    cfg = WaveformConfig.create(32, 1.0, 8)
    for _ in range(10):
        s = random_qpsk(rng, 32)
        frame = sefdm_modulate(s, cfg)
        assert np.sum(np.abs(frame.samples) ** 2) == pytest.approx(
            np.sum(np.abs(s) ** 2), abs=1e-10
        )


def test_frame_validation():
    with pytest.raises(WaveformError):
        IqFrame(np.array([np.nan + 0j]), 1.0, 1, 1)
    with pytest.raises(WaveformError):
        IqFrame(np.zeros(3, dtype=complex), 1.0, 2, 2)


# ---------------------------------------------------------------------------
# Correlation operator
# ---------------------------------------------------------------------------

def direct_correlation(cfg):
    """Direct-summation oracle for the correlation operator."""
    pos = subcarrier_positions(cfg)
    n_samp = cfg.samples_per_frame
    k = np.arange(n_samp)
    c = np.empty((pos.size, pos.size), dtype=complex)
    for m in range(pos.size):
        for n in range(pos.size):
            c[m, n] = np.sum(np.exp(2j * np.pi * (pos[n] - pos[m]) * k / n_samp))
    return c / n_samp


def test_correlation_identity_at_alpha_one():
    cfg = WaveformConfig.create(16, 1.0, 4)
    np.testing.assert_allclose(
        correlation_operator(cfg), np.eye(16), atol=1e-12
    )


def test_correlation_hand_value():
    cfg = WaveformConfig.create(2, 0.5, oversampling=1)
    assert cfg.ifft_len == 4
    c = correlation_operator(cfg)
    assert c[0, 1] == pytest.approx(0.5 + 0.5j, abs=1e-12)
    assert c[1, 0] == pytest.approx(0.5 - 0.5j, abs=1e-12)


def test_correlation_closed_form_matches_direct_sum():
    for n, rho, alpha, plan in [
        (8, 2, 0.8, None),
        (12, 1, 0.7, None),
        (8, 2, 0.75, BandPlan(2, 4, 1)),
    ]:
        cfg = WaveformConfig.create(n, alpha, rho, band_plan=plan)
        np.testing.assert_allclose(
            correlation_operator(cfg), direct_correlation(cfg), atol=1e-12
        )


def test_correlation_structure():
    for alpha in [1.0, 0.9, 0.8, 0.7]:
        cfg = WaveformConfig.create(12, alpha, 4)
        c = correlation_operator(cfg)
        np.testing.assert_allclose(c, c.conj().T, atol=1e-14)
        np.testing.assert_allclose(np.diag(c), np.ones(12), atol=1e-14)
        eigvals = np.linalg.eigvalsh(c)
        assert eigvals.min() >= -1e-10
        if alpha < 1.0:
            assert np.abs(c - np.eye(12)).max() > 1e-3


# ---------------------------------------------------------------------------
# Interference decomposition
# ---------------------------------------------------------------------------

def test_ici_hand_values():
    cfg = WaveformConfig.create(2, 0.5, oversampling=1)
    s = np.array([1.0, 1.0], dtype=complex)
    _, interference = ici_power_decompose(s, cfg, 1)
    assert interference == pytest.approx(0.0, abs=1e-12)
    _, interference = ici_power_decompose(s, cfg, 0)
    assert interference == pytest.approx(1.0, abs=1e-12)


def test_ici_signal_term_is_unit_for_unit_energy():
    rng = np.random.default_rng(6)
    for alpha in [1.0, 0.8, 0.7]:
        cfg = WaveformConfig.create(8, alpha, 2)
        s = random_qpsk(rng, 8)
        signal, _ = ici_power_decompose(s, cfg, 3)
        assert signal == pytest.approx(1.0, abs=1e-12)


def test_ici_sum_reproduces_sample_power():
    # signal + interference must equal |X_k|^2 * ifft_len / N for the
    # actually generated frame, at every sample index.
    rng = np.random.default_rng(7)
    for n, alpha in [(4, 0.7), (4, 0.85), (12, 0.8), (12, 1.0)]:
        cfg = WaveformConfig.create(n, alpha, 2)
        s = random_qpsk(rng, n)
        frame = sefdm_modulate(s, cfg)
        scale = cfg.ifft_len / n
        for k in range(cfg.samples_per_frame):
            signal, interference = ici_power_decompose(s, cfg, k)
            direct = scale * abs(frame.samples[k]) ** 2
            assert signal + interference.real == pytest.approx(direct, abs=1e-10)
            assert abs(interference.imag) < 1e-12


def test_ici_mean_interference_vanishes_at_alpha_one():
    rng = np.random.default_rng(8)
    cfg = WaveformConfig.create(16, 1.0, 2)
    for _ in range(50):
        s = random_qpsk(rng, 16)
        assert abs(ici_mean_interference(s, cfg)) < 1e-12


def test_ici_mean_interference_nonzero_below_one():
    rng = np.random.default_rng(9)
    cfg = WaveformConfig.create(16, 0.8, 2)
    values = [abs(ici_mean_interference(random_qpsk(rng, 16), cfg)) for _ in range(20)]
    assert max(values) > 1e-3


def test_ici_index_out_of_range():
    cfg = WaveformConfig.create(4, 0.8, 2)
    with pytest.raises(WaveformError):
        ici_power_decompose(np.ones(4, dtype=complex), cfg, cfg.samples_per_frame)


# ---------------------------------------------------------------------------
# Multi-band layout
# ---------------------------------------------------------------------------

def test_multiband_positions_follow_layout_rule():
    # two bands of two subcarriers, one orthogonal guard slot, alpha = 0.5:
    # band stride = band_size*alpha + guard = 2, in-band step = alpha
    cfg = WaveformConfig.create(4, 0.5, 1, band_plan=BandPlan(2, 2, 1))
    np.testing.assert_allclose(subcarrier_positions(cfg), [0.0, 0.5, 2.0, 2.5])


def test_multiband_degenerate_plan_equals_single_band():
    rng = np.random.default_rng(10)
    plan = BandPlan(1, 8, 0)
    cfg_plan = WaveformConfig.create(8, 0.8, 2, band_plan=plan)
    cfg_flat = WaveformConfig.create(8, 0.8, 2)
    s = random_qpsk(rng, 8)
    np.testing.assert_allclose(
        multiband_modulate(s, cfg_plan).samples,
        sefdm_modulate(s, cfg_flat).samples,
        atol=1e-12,
    )


def test_multiband_alpha_one_matches_ofdm_bin_layout():
    rng = np.random.default_rng(11)
    cfg = WaveformConfig.create(8, 1.0, 2, band_plan=BandPlan(2, 4, 1))
    s = random_qpsk(rng, 8)
    frame = multiband_modulate(s, cfg)
    # occupied integer bins: band 0 -> 0..3, band 1 -> 5..8
    bins = np.array([0, 1, 2, 3, 5, 6, 7, 8])
    k = np.arange(cfg.samples_per_frame)
    ofdm = (
        np.exp(2j * np.pi * np.outer(k, bins) / cfg.samples_per_frame) @ s
    ) / math.sqrt(cfg.ifft_len)
    np.testing.assert_allclose(frame.samples, ofdm, atol=1e-12)


def test_multiband_requires_plan():
    cfg = WaveformConfig.create(8, 0.8, 2)
    with pytest.raises(WaveformError):
        multiband_modulate(np.ones(8, dtype=complex), cfg)


def test_multiband_guard_suppresses_cross_band_coupling():
    cfg = WaveformConfig.create(16, 0.8, 2, band_plan=BandPlan(4, 4, 1))
    c = np.abs(correlation_operator(cfg))
    plan = cfg.band_plan
    intra_max = 0.0
    cross_max = 0.0
    for i in range(16):
        for j in range(16):
            if i == j:
                continue
            same_band = i // plan.band_size == j // plan.band_size
            if same_band:
                intra_max = max(intra_max, c[i, j])
            else:
                cross_max = max(cross_max, c[i, j])
    assert cross_max < intra_max


def test_multiband_matches_direct_summation_oracle():
    rng = np.random.default_rng(12)
    cfg = WaveformConfig.create(8, 0.8, 2, band_plan=BandPlan(2, 4, 1))
    s = random_qpsk(rng, 8)
    np.testing.assert_allclose(
        multiband_modulate(s, cfg).samples, direct_frame(s, cfg), atol=1e-10
    )


# ---------------------------------------------------------------------------
# Spectrum estimation
# ---------------------------------------------------------------------------

def test_psd_pure_tone_peaks_at_zero_db():
    nfft = 256
    k = np.arange(nfft)
    tone = np.exp(2j * np.pi * 37 * k / nfft)
    freq, power = psd_estimate([tone], nfft)
    peak = np.argmax(power)
    assert power[peak] == pytest.approx(0.0, abs=1e-9)
    assert freq[peak] == pytest.approx(37 / nfft)


def test_psd_white_noise_is_flat():
    rng = np.random.default_rng(13)
    nfft = 128
    frames = [
        (rng.standard_normal(nfft) + 1j * rng.standard_normal(nfft)) / RT2
        for _ in range(200)
    ]
    _, power = psd_estimate(frames, nfft)
    assert power.max() - power.min() < 3.0


def test_psd_bandwidth_scales_with_alpha():
    rng = np.random.default_rng(14)
    widths = {}
    for alpha in [1.0, 0.8]:
        cfg = WaveformConfig.create(64, alpha, 8)
        frames = [sefdm_modulate(random_qpsk(rng, 64), cfg) for _ in range(150)]
        # 4x zero padding: the -20 dB crossings fall between the frame's own
        # FFT bins (which sit on the skirt nulls at alpha = 1)
        freq, power = psd_estimate(frames, 2048)
        widths[alpha] = occupied_bandwidth(freq, power, threshold_db=-20.0)
    ratio = widths[0.8] / widths[1.0]
    assert ratio == pytest.approx(0.8, rel=0.10)


def test_psd_rejects_empty_input():
    with pytest.raises(WaveformError):
        psd_estimate([], 64)
