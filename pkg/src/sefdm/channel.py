"""Channel and hardware impairments with fully seeded randomness.

Implements the impairment chain used throughout the experiments: additive
white Gaussian noise at a prescribed Es/N0, a three-tap Rician/Rayleigh
tapped-delay-line channel with sum-of-sinusoids Doppler fading, and a
ppm-specified carrier frequency offset. All stochastic operations are pure
functions of (input, profile, seed); a shipped default profile reproduces the
reference wireless scenario (200 kHz sampling, 900 MHz carrier, three paths).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .waveform import IqFrame

JAKES_SINUSOIDS = 32


class ChannelError(ValueError):
    """Invalid channel profile or input."""


@dataclass(frozen=True)
class NoiseSpec:
    """Symbol-energy to noise-density ratio in dB; math.inf disables noise."""

    es_n0_db: float

    def __post_init__(self):
        if math.isnan(self.es_n0_db):
            raise ChannelError("es_n0_db must not be NaN")


@dataclass(frozen=True)
class ChannelProfile:
    """Multipath / hardware impairment parameters.

    Delays are physical seconds (nondecreasing, first tap at 0), powers are dB
    relative to the first tap (first entry 0 dB). k_factor applies to tap 0
    only; the remaining taps are Rayleigh.
    """

    path_delays_s: tuple
    path_powers_db: tuple
    k_factor: float
    max_doppler_hz: float
    cfo_ppm: float
    rf_center_hz: float
    sample_rate_hz: float

    def __post_init__(self):
        delays = tuple(float(d) for d in self.path_delays_s)
        powers = tuple(float(p) for p in self.path_powers_db)
        object.__setattr__(self, "path_delays_s", delays)
        object.__setattr__(self, "path_powers_db", powers)
        if len(delays) != len(powers) or not delays:
            raise ChannelError("delays and powers must be same nonempty length")
        if delays[0] != 0.0 or any(b < a for a, b in zip(delays, delays[1:])):
            raise ChannelError("delays must be nondecreasing and start at 0")
        if powers[0] != 0.0:
            raise ChannelError("first path power must be the 0 dB reference")
        if self.k_factor < 0 or self.max_doppler_hz < 0:
            raise ChannelError("k_factor and max_doppler_hz must be >= 0")
        if self.rf_center_hz <= 0 or self.sample_rate_hz <= 0:
            raise ChannelError("rf_center_hz and sample_rate_hz must be positive")

    @property
    def cfo_hz(self) -> float:
        return self.cfo_ppm * 1e-6 * self.rf_center_hz

    def delays_samples(self) -> np.ndarray:
        """Tap positions in samples, rounded half-up."""
        return np.floor(
            np.asarray(self.path_delays_s) * self.sample_rate_hz + 0.5
        ).astype(int)

    # JSON uses the physical parameter names (and units) of the reference
    # scenario table, e.g. "RF center frequency (MHz)".
    _JSON_KEYS = {
        "Path delay (s)": ("path_delays_s", 1.0),
        "Path relative power (dB)": ("path_powers_db", 1.0),
        "K-factor": ("k_factor", 1.0),
        "Maximum Doppler frequency (Hz)": ("max_doppler_hz", 1.0),
        "Frequency offset (PPM)": ("cfo_ppm", 1.0),
        "RF center frequency (MHz)": ("rf_center_hz", 1e6),
        "Sampling frequency (kHz)": ("sample_rate_hz", 1e3),
    }

    @classmethod
    def from_json(cls, text: str) -> "ChannelProfile":
        raw = json.loads(text)
        kwargs = {}
        for key, (attr, scale) in cls._JSON_KEYS.items():
            if key not in raw:
                raise ChannelError(f"profile JSON missing key {key!r}")
            value = raw[key]
            if isinstance(value, list):
                kwargs[attr] = tuple(float(v) * scale for v in value)
            else:
                kwargs[attr] = float(value) * scale
        return cls(**kwargs)

    def to_json(self) -> str:
        out = {}
        for key, (attr, scale) in self._JSON_KEYS.items():
            value = getattr(self, attr)
            if isinstance(value, tuple):
                out[key] = [v / scale for v in value]
            else:
                out[key] = value / scale
        return json.dumps(out, indent=2)


def default_profile() -> ChannelProfile:
    """The shipped default wireless profile."""
    text = resources.files("sefdm.data").joinpath("default_channel.json").read_text()
    return ChannelProfile.from_json(text)


@dataclass(frozen=True)
class TapTrace:
    """Realized channel: per-tap complex gains across one frame."""

    delays_samples: np.ndarray
    gains: np.ndarray  # shape (n_taps, n_samples)


# ---------------------------------------------------------------------------
# AWGN
# ---------------------------------------------------------------------------

def measured_symbol_energy(frame: IqFrame) -> float:
    """Average energy per constellation symbol: mean sample energy times the
    oversampling factor (a frame carries N symbols over N*rho samples)."""
    return float(np.mean(np.abs(frame.samples) ** 2)) * frame.oversampling


def awgn_samples(samples: np.ndarray, symbol_energy: float, es_n0_db: float, rng_seed):
    """Add circular complex Gaussian noise to raw samples at the Es/N0
    implied by the given per-symbol energy."""
    if math.isinf(es_n0_db) and es_n0_db > 0:
        return samples.copy()
    rng = np.random.default_rng(rng_seed)
    sigma2 = symbol_energy / 10.0 ** (es_n0_db / 10.0)
    noise = math.sqrt(sigma2 / 2.0) * (
        rng.standard_normal(samples.size) + 1j * rng.standard_normal(samples.size)
    )
    return samples + noise


def awgn(frame: IqFrame, spec: NoiseSpec, rng_seed) -> IqFrame:
    """Add circular complex Gaussian noise at the requested Es/N0.

    The per-sample noise variance is Es / 10^(EsN0/10) with Es the measured
    per-symbol energy of this frame, so Es/N0 is referenced to the average
    transmitted constellation symbol. Infinite Es/N0 returns the input
    unchanged. Deterministic given the seed.
    """
    if math.isinf(spec.es_n0_db) and spec.es_n0_db > 0:
        return frame
    es = measured_symbol_energy(frame)
    out = frame.replace_samples(
        awgn_samples(frame.samples, es, spec.es_n0_db, rng_seed)
    )
    return IqFrame(
        samples=out.samples,
        alpha_effective=frame.alpha_effective,
        n_subcarriers=frame.n_subcarriers,
        oversampling=frame.oversampling,
        es_n0_db=spec.es_n0_db,
        class_label=frame.class_label,
        rng_seed=frame.rng_seed,
    )


# ---------------------------------------------------------------------------
# Fading
# ---------------------------------------------------------------------------

def jakes_gains(rng, max_doppler_hz, times, n_sinusoids=JAKES_SINUSOIDS):
    """Unit-power scattered fading process by sum of sinusoids.

    Each sinusoid gets a uniformly random arrival angle and phase, giving the
    classic zeroth-order-Bessel autocorrelation J0(2 pi f_d tau) in ensemble
    average and E|h|^2 = 1.
    """
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n_sinusoids)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=n_sinusoids)
    omega = 2.0 * np.pi * max_doppler_hz * np.cos(theta)
    arg = np.outer(np.asarray(times), omega) + phase
    return np.exp(1j * arg).sum(axis=1) / math.sqrt(n_sinusoids)


def draw_taps(profile: ChannelProfile, n_samples: int, rng_seed) -> TapTrace:
    """Realize the tapped-delay-line channel over n_samples.

    Tap 0 is Rician (fixed-phase line-of-sight plus Doppler-faded scatter with
    the profile's K-factor), the remaining taps are Rayleigh with Jakes
    Doppler; average total tap power is normalized to 1."""
    delays = profile.delays_samples()
    if delays[-1] >= n_samples:
        raise ChannelError(
            f"path delay of {delays[-1]} samples exceeds frame of {n_samples}"
        )
    rng = np.random.default_rng(rng_seed)
    powers_lin = 10.0 ** (np.asarray(profile.path_powers_db) / 10.0)
    powers_lin /= powers_lin.sum()
    times = np.arange(n_samples) / profile.sample_rate_hz

    gains = np.empty((delays.size, n_samples), dtype=np.complex128)
    k = profile.k_factor
    if math.isinf(k):
        los_amp, scatter_amp = 1.0, 0.0
    else:
        los_amp = math.sqrt(k / (k + 1.0))
        scatter_amp = math.sqrt(1.0 / (k + 1.0))
    scatter = jakes_gains(rng, profile.max_doppler_hz, times)
    gains[0] = math.sqrt(powers_lin[0]) * (los_amp + scatter_amp * scatter)
    for tap in range(1, delays.size):
        gains[tap] = math.sqrt(powers_lin[tap]) * jakes_gains(
            rng, profile.max_doppler_hz, times
        )
    return TapTrace(delays_samples=delays, gains=gains)


def apply_taps(samples: np.ndarray, trace: TapTrace) -> np.ndarray:
    """Causal tapped-delay-line convolution with per-sample tap gains."""
    out = np.zeros(samples.size, dtype=np.complex128)
    for tap, d in enumerate(trace.delays_samples):
        if d == 0:
            out += trace.gains[tap] * samples
        else:
            out[d:] += trace.gains[tap, d:] * samples[:-d]
    return out


def rician_multipath(frame: IqFrame, profile: ChannelProfile, rng_seed):
    """Tapped-delay-line fading channel over one frame; returns the output
    frame and the realized tap trace for genie equalization."""
    trace = draw_taps(profile, frame.samples.size, rng_seed)
    out = apply_taps(frame.samples, trace)
    return frame.replace_samples(out), trace


def genie_equalize(frame: IqFrame, trace: TapTrace) -> IqFrame:
    """Divide the frame spectrum by the realized channel frequency response
    (frame-averaged tap gains); the quasi-static genie-CSI reference
    equalizer for legitimate-user experiments."""
    n = frame.samples.size
    mean_gains = trace.gains.mean(axis=1)
    q = np.arange(n)
    response = np.zeros(n, dtype=np.complex128)
    for gain, d in zip(mean_gains, trace.delays_samples):
        response += gain * np.exp(-2j * np.pi * q * d / n)
    # keep deep nulls finite; genie zero-forcing elsewhere
    small = np.abs(response) < 1e-9
    response[small] = 1e-9
    equalized = np.fft.ifft(np.fft.fft(frame.samples) / response)
    return frame.replace_samples(equalized)


# ---------------------------------------------------------------------------
# Carrier frequency offset
# ---------------------------------------------------------------------------

def apply_cfo(frame: IqFrame, profile: ChannelProfile) -> IqFrame:
    """Rotate sample k by exp(2j pi f_off k / fs) with f_off derived from the
    ppm offset and RF center frequency."""
    if profile.cfo_ppm == 0.0:
        return frame
    k = np.arange(frame.samples.size)
    ramp = np.exp(2j * np.pi * profile.cfo_hz * k / profile.sample_rate_hz)
    return frame.replace_samples(frame.samples * ramp)


def correct_cfo(frame: IqFrame, profile: ChannelProfile) -> IqFrame:
    """Inverse of :func:`apply_cfo` (genie frequency-offset removal)."""
    if profile.cfo_ppm == 0.0:
        return frame
    k = np.arange(frame.samples.size)
    ramp = np.exp(-2j * np.pi * profile.cfo_hz * k / profile.sample_rate_hz)
    return frame.replace_samples(frame.samples * ramp)
