"""Non-orthogonal multicarrier (SEFDM) physical-layer security toolkit."""

from .channel import (
    ChannelError,
    ChannelProfile,
    NoiseSpec,
    TapTrace,
    apply_cfo,
    awgn,
    correct_cfo,
    default_profile,
    genie_equalize,
    jakes_gains,
    rician_multipath,
)
from .complexity import (
    ComplexityError,
    OpCount,
    candidate_count,
    complexity_sweep,
    fft_ops,
    multisd_upper_bound_ops,
    sd_upper_bound_ops,
)
from .detectors import (
    CapacityError,
    DetectionResult,
    matched_filter_demod,
    mf_hard_detect,
    ml_detect,
    multisd_detect,
    sphere_detect,
)
from .experiments import (
    ALPHA_SET_DIVERSE,
    ALPHA_SET_SIMILAR,
    BerCurve,
    BerPoint,
    DatasetManifest,
    ExperimentConfig,
    ExperimentError,
    export_dataset,
    replay_predictions,
    run_ber,
    run_scaling_defence,
    run_tuning_defence,
)
from .waveform import (
    BandPlan,
    IqFrame,
    WaveformConfig,
    WaveformError,
    correlation_operator,
    ici_mean_interference,
    ici_power_decompose,
    multiband_modulate,
    psd_estimate,
    qpsk_demap_hard,
    qpsk_map,
    sefdm_modulate,
    subcarrier_positions,
)

__version__ = "0.1.0"
