"""Multicarrier baseband waveforms with sub-orthogonal subcarrier packing.

This module defines the waveform configuration (subcarrier count, bandwidth
compression factor alpha, oversampling, optional multi-band layout) and the
signal-domain primitives built on it:

- QPSK bit mapping / hard demapping,
- frame generation through a truncated oversized inverse DFT (single band)
  or exact per-subcarrier synthesis (multi-band / fractional bins),
- the subcarrier correlation operator that captures the intercarrier
  interference created by compressing the subcarrier spacing,
- a per-sample power decomposition into signal and self-interference terms,
- an averaged-periodogram spectrum estimator.

alpha = 1 reproduces plain orthogonal OFDM; alpha < 1 packs the subcarriers
closer than the orthogonal spacing, which is the security mechanism the rest
of the toolkit studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

_SQRT2 = math.sqrt(2.0)


class WaveformError(ValueError):
    """Invalid waveform configuration or input."""


@dataclass(frozen=True)
class BandPlan:
    """Multi-band subcarrier layout: n_bands blocks of band_size subcarriers
    separated by guard_subcarriers empty orthogonal slots."""

    n_bands: int
    band_size: int
    guard_subcarriers: int = 1

    def __post_init__(self):
        if self.n_bands < 1 or self.band_size < 1:
            raise WaveformError("band plan needs n_bands >= 1 and band_size >= 1")
        if self.guard_subcarriers < 0:
            raise WaveformError("guard_subcarriers must be >= 0")


@dataclass(frozen=True)
class WaveformConfig:
    """Identity of one signal class.

    Attributes:
        n_subcarriers: number of data subcarriers N.
        alpha_target: requested bandwidth compression factor in (0, 1].
        oversampling: samples per subcarrier period rho; a frame always holds
            N * rho samples regardless of alpha.
        ifft_len: generation transform length M = round(N * rho / alpha_target).
        alpha_effective: realized compression factor N * rho / M (the value
            recorded in all metadata).
        band_plan: optional multi-band layout; when present,
            n_bands * band_size must equal n_subcarriers.
    """

    n_subcarriers: int
    alpha_target: float
    oversampling: int
    ifft_len: int
    alpha_effective: float
    band_plan: BandPlan | None = None

    @classmethod
    def create(cls, n_subcarriers, alpha, oversampling=8, band_plan=None):
        """Build a config for a requested alpha, quantizing it onto the
        available transform-length grid."""
        if n_subcarriers < 1:
            raise WaveformError("n_subcarriers must be positive")
        if oversampling < 1:
            raise WaveformError("oversampling must be positive")
        if not 0.0 < alpha <= 1.0:
            raise WaveformError(f"alpha must lie in (0, 1], got {alpha}")
        n_samples = n_subcarriers * oversampling
        ifft_len = round(n_samples / alpha)
        if band_plan is not None and band_plan.n_bands * band_plan.band_size != n_subcarriers:
            raise WaveformError(
                f"band plan covers {band_plan.n_bands * band_plan.band_size} "
                f"subcarriers, config has {n_subcarriers}"
            )
        return cls(
            n_subcarriers=int(n_subcarriers),
            alpha_target=float(alpha),
            oversampling=int(oversampling),
            ifft_len=int(ifft_len),
            alpha_effective=n_samples / ifft_len,
            band_plan=band_plan,
        )

    @property
    def samples_per_frame(self) -> int:
        return self.n_subcarriers * self.oversampling

    def with_alpha(self, alpha) -> "WaveformConfig":
        """Same layout, different compression factor (detector-mismatch runs)."""
        return WaveformConfig.create(
            self.n_subcarriers, alpha, self.oversampling, self.band_plan
        )


@dataclass(frozen=True)
class IqFrame:
    """One multicarrier symbol of complex baseband samples plus metadata."""

    samples: np.ndarray
    alpha_effective: float
    n_subcarriers: int
    oversampling: int
    es_n0_db: float | None = None
    class_label: int | None = None
    rng_seed: int | None = None

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.complex128)
        if not np.all(np.isfinite(samples.view(np.float64))):
            raise WaveformError("frame samples must be finite")
        if samples.ndim != 1 or samples.size != self.n_subcarriers * self.oversampling:
            raise WaveformError(
                f"expected {self.n_subcarriers * self.oversampling} samples, "
                f"got shape {samples.shape}"
            )
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def replace_samples(self, samples) -> "IqFrame":
        return IqFrame(
            samples=samples,
            alpha_effective=self.alpha_effective,
            n_subcarriers=self.n_subcarriers,
            oversampling=self.oversampling,
            es_n0_db=self.es_n0_db,
            class_label=self.class_label,
            rng_seed=self.rng_seed,
        )


# ---------------------------------------------------------------------------
# QPSK mapping
# ---------------------------------------------------------------------------

def qpsk_map(bits) -> np.ndarray:
    """Gray-map a bit vector onto unit-energy QPSK symbols.

    Bits are consumed pairwise; the first bit of each pair selects the sign of
    the real part, the second the sign of the imaginary part:
    (b_re, b_im) -> ((1 - 2 b_re) + 1j (1 - 2 b_im)) / sqrt(2).
    """
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size % 2 != 0:
        raise WaveformError(f"bit count must be even, got {bits.size}")
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise WaveformError("bits must be 0/1")
    b = bits.astype(np.float64).reshape(-1, 2)
    return ((1.0 - 2.0 * b[:, 0]) + 1j * (1.0 - 2.0 * b[:, 1])) / _SQRT2


def qpsk_demap_hard(symbols) -> np.ndarray:
    """Sign-slice symbols back to bits; exact inverse of :func:`qpsk_map` on
    noiseless constellation points. Zero real/imaginary parts slice to bit 0."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    bits = np.empty((symbols.size, 2), dtype=np.int8)
    bits[:, 0] = symbols.real < 0
    bits[:, 1] = symbols.imag < 0
    return bits.reshape(-1)


# ---------------------------------------------------------------------------
# Subcarrier geometry and generation
# ---------------------------------------------------------------------------

def subcarrier_positions(cfg: WaveformConfig) -> np.ndarray:
    """Subcarrier center positions in units of the orthogonal spacing.

    Single band: subcarrier n sits at n * alpha_effective. Multi-band: band b
    is offset by b * (band_size * alpha_effective + guard_subcarriers), i.e.
    each band is internally compressed while bands are separated by an integer
    number of orthogonal guard slots.
    """
    a = cfg.alpha_effective
    if cfg.band_plan is None:
        return np.arange(cfg.n_subcarriers) * a
    plan = cfg.band_plan
    band_stride = plan.band_size * a + plan.guard_subcarriers
    band = np.arange(plan.band_size) * a
    return (np.arange(plan.n_bands)[:, None] * band_stride + band[None, :]).reshape(-1)


@lru_cache(maxsize=32)
def carrier_matrix(cfg: WaveformConfig) -> np.ndarray:
    """(N*rho) x N matrix whose column i holds the retained samples of
    subcarrier i, amplitude 1/sqrt(ifft_len). Frame = carrier_matrix @ symbols."""
    k = np.arange(cfg.samples_per_frame)
    pos = subcarrier_positions(cfg)
    phi = np.exp(2j * np.pi * np.outer(k, pos) / cfg.samples_per_frame)
    phi /= math.sqrt(cfg.ifft_len)
    phi.setflags(write=False)
    return phi


def sefdm_modulate(symbols, cfg: WaveformConfig) -> IqFrame:
    """Generate one baseband frame from N constellation symbols.

    Single-band configs use the oversized-inverse-FFT route: the symbol vector
    is zero-padded to ifft_len, transformed with 1/sqrt(ifft_len) scaling and
    the first N*rho output samples are retained (the discarded tail is what
    creates the intercarrier interference for alpha < 1). Multi-band configs
    synthesize the fractional-bin carriers directly; both routes agree to
    numerical precision where they overlap.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.shape != (cfg.n_subcarriers,):
        raise WaveformError(
            f"expected {cfg.n_subcarriers} symbols, got shape {symbols.shape}"
        )
    if cfg.band_plan is None:
        spectrum = np.zeros(cfg.ifft_len, dtype=np.complex128)
        spectrum[: cfg.n_subcarriers] = symbols
        full = np.fft.ifft(spectrum, norm="ortho")
        samples = full[: cfg.samples_per_frame]
    else:
        samples = carrier_matrix(cfg) @ symbols
    return IqFrame(
        samples=samples,
        alpha_effective=cfg.alpha_effective,
        n_subcarriers=cfg.n_subcarriers,
        oversampling=cfg.oversampling,
    )


def multiband_modulate(symbols, cfg: WaveformConfig) -> IqFrame:
    """Frame generation over the multi-band layout; requires a band plan."""
    if cfg.band_plan is None:
        raise WaveformError("multiband_modulate requires a band plan")
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.shape != (cfg.n_subcarriers,):
        raise WaveformError(
            f"expected {cfg.n_subcarriers} symbols, got shape {symbols.shape}"
        )
    return IqFrame(
        samples=carrier_matrix(cfg) @ symbols,
        alpha_effective=cfg.alpha_effective,
        n_subcarriers=cfg.n_subcarriers,
        oversampling=cfg.oversampling,
    )


# ---------------------------------------------------------------------------
# Interference structure
# ---------------------------------------------------------------------------

def correlation_operator(cfg: WaveformConfig) -> np.ndarray:
    """N x N Hermitian matrix of normalized inner products between the
    retained (truncated) subcarrier waveforms.

    C[m, n] = (1/K) * sum_k exp(2j pi (p_n - p_m) k / K) over the K = N*rho
    retained samples, with p the positions from :func:`subcarrier_positions`.
    Unit diagonal; identity exactly when alpha_effective = 1 (single band).
    Evaluated in closed form as a geometric series.
    """
    pos = subcarrier_positions(cfg)
    n_samp = cfg.samples_per_frame
    delta = (pos[None, :] - pos[:, None]) / n_samp
    q = np.exp(2j * np.pi * delta)
    num = 1.0 - np.exp(2j * np.pi * delta * n_samp)
    den = 1.0 - q
    c = np.empty_like(q)
    near_one = np.abs(den) < 1e-12
    np.divide(num, den, out=c, where=~near_one)
    c[near_one] = n_samp
    c /= n_samp
    # enforce exact Hermitian symmetry against rounding
    c = 0.5 * (c + c.conj().T)
    np.fill_diagonal(c, 1.0)
    return c


def ici_power_decompose(symbols, cfg: WaveformConfig, k: int):
    """Split the instantaneous power of sample k into the per-subcarrier
    signal term and the cross-subcarrier interference term.

    Returns (signal_power, interference_term) with
    signal = (1/N) sum_n |s_n|^2 and interference the m != n double sum
    (1/N) sum_n sum_{m!=n} s_n conj(s_m) exp(2j pi (p_n - p_m) k / K).
    Their sum times N/ifft_len equals |frame sample k|^2 of the generated
    frame; the interference term vanishes only in frame average at alpha = 1.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.shape != (cfg.n_subcarriers,):
        raise WaveformError("symbol count mismatch")
    if not 0 <= k < cfg.samples_per_frame:
        raise WaveformError(f"sample index {k} outside frame of {cfg.samples_per_frame}")
    n = cfg.n_subcarriers
    pos = subcarrier_positions(cfg)
    phases = np.exp(2j * np.pi * pos * k / cfg.samples_per_frame)
    weighted = symbols * phases
    # |sum_n w_n|^2 = sum_{m=n} |s_n|^2 + sum_{m!=n} s_n conj(s_m) e^{...}
    full = abs(np.sum(weighted)) ** 2
    energy = float(np.sum(np.abs(symbols) ** 2))
    signal = energy / n
    interference = complex(full - energy) / n
    return signal, interference


def ici_mean_interference(symbols, cfg: WaveformConfig) -> complex:
    """Interference term averaged over all samples of the frame.

    Equals (1/N) s^H (C - I) s with C the correlation operator; exactly zero
    for every symbol vector when alpha_effective = 1 (single band), nonzero
    in general for alpha < 1.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    c = correlation_operator(cfg)
    off = c - np.eye(cfg.n_subcarriers)
    return complex(symbols.conj() @ off.T @ symbols) / cfg.n_subcarriers


# ---------------------------------------------------------------------------
# Spectrum estimation
# ---------------------------------------------------------------------------

def psd_estimate(frames, nfft: int):
    """Averaged-periodogram spectrum over a set of frames.

    Each frame is split into non-overlapping nfft-sample segments (zero padded
    if shorter), the squared FFT magnitudes are averaged over all segments and
    frames, and the result is normalized to a 0 dB peak.

    Returns (freq_norm, power_db): frequencies in cycles/sample on
    [-0.5, 0.5) and power in dB.
    """
    if not frames:
        raise WaveformError("psd_estimate needs at least one frame")
    if nfft < 2:
        raise WaveformError("nfft must be >= 2")
    acc = np.zeros(nfft)
    count = 0
    for frame in frames:
        x = frame.samples if isinstance(frame, IqFrame) else np.asarray(frame)
        x = np.asarray(x, dtype=np.complex128)
        n_seg = max(1, x.size // nfft)
        for i in range(n_seg):
            seg = x[i * nfft : (i + 1) * nfft]
            spec = np.fft.fft(seg, n=nfft)
            acc += np.abs(spec) ** 2
            count += 1
    acc /= count
    peak = acc.max()
    if peak <= 0.0:
        raise WaveformError("all-zero input, spectrum undefined")
    power_db = 10.0 * np.log10(np.maximum(acc, peak * 1e-30) / peak)
    freq_norm = (np.arange(nfft) - nfft // 2) / nfft
    return freq_norm, np.fft.fftshift(power_db)


def occupied_bandwidth(freq_norm, power_db, threshold_db=-20.0) -> float:
    """Width of the band where the spectrum stays above `threshold_db`
    relative to the peak (outermost crossing points)."""
    above = np.where(power_db >= threshold_db)[0]
    if above.size == 0:
        return 0.0
    return float(freq_norm[above[-1]] - freq_norm[above[0]])
