"""Command-line interface.

One binary with subcommands covering the full pipeline:

    gen         generate frames, write IQ binary + manifest
    psd         averaged spectrum of generated frames -> CSV (+ figure)
    ber         one BER experiment -> curve CSVs + JSON report (+ figure)
    tune        waveform tuning defence -> curves + report (+ figure)
    scale       waveform scaling defence -> curves + report (+ figures)
    complexity  analytic operation counts -> CSV (+ figure)
    dataset     labeled multi-class IQ dataset for classifier training

Common flags: --config <json>, --seed <int>, --out <dir>, --no-figures.
Exit code 0 on success; failures print a machine-readable JSON object to
stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import complexity as cx
from .channel import ChannelProfile, NoiseSpec, awgn, default_profile
from .experiments import (
    ALPHA_SET_DIVERSE,
    ALPHA_SET_SIMILAR,
    DatasetManifest,
    ExperimentConfig,
    curve_report,
    export_dataset,
    run_ber,
    run_scaling_defence,
    run_tuning_defence,
    write_curve_csv,
)
from .iqio import write_iq, write_labels_csv, write_manifest
from .waveform import BandPlan, WaveformConfig, psd_estimate, qpsk_map, sefdm_modulate


def _load_config(path):
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def waveform_from_dict(d: dict) -> WaveformConfig:
    plan = d.get("band_plan")
    band_plan = None
    if plan is not None:
        band_plan = BandPlan(
            n_bands=int(plan["n_bands"]),
            band_size=int(plan["band_size"]),
            guard_subcarriers=int(plan.get("guard_subcarriers", 1)),
        )
    return WaveformConfig.create(
        n_subcarriers=int(d.get("n_subcarriers", 64)),
        alpha=float(d.get("alpha", 0.8)),
        oversampling=int(d.get("oversampling", 8)),
        band_plan=band_plan,
    )


def experiment_from_dict(d: dict, seed=None) -> ExperimentConfig:
    profile = None
    if "channel_profile" in d:
        profile = ChannelProfile.from_json(Path(d["channel_profile"]).read_text())
    detector_alpha = d.get("detector_alpha")
    return ExperimentConfig(
        waveform=waveform_from_dict(d.get("waveform", {})),
        detector_id=d.get("detector", "SD"),
        detector_alpha=None if detector_alpha is None else float(detector_alpha),
        channel=d.get("channel", "awgn"),
        es_n0_grid_db=tuple(d.get("es_n0_grid_db", (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0))),
        min_bit_errors=int(d.get("min_bit_errors", 100)),
        max_frames=int(d.get("max_frames", 20_000)),
        master_seed=int(d.get("master_seed", 0) if seed is None else seed),
        radius_policy=d.get("radius_policy", "shrink-on-leaf"),
        profile=profile,
    )


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _gen_frames(wf: WaveformConfig, n_frames: int, seed: int, es_n0_db=None):
    frames = np.empty((n_frames, wf.samples_per_frame), dtype=np.complex128)
    for f in range(n_frames):
        rng = np.random.default_rng(np.random.SeedSequence((seed, f)))
        bits = rng.integers(0, 2, size=2 * wf.n_subcarriers)
        frame = sefdm_modulate(qpsk_map(bits), wf)
        if es_n0_db is not None:
            frame = awgn(frame, NoiseSpec(es_n0_db), np.random.SeedSequence((seed, f, 1)))
        frames[f] = frame.samples
    return frames


def cmd_gen(args):
    config = _load_config(args.config)
    wf = waveform_from_dict(config.get("waveform", config))
    n_frames = int(config.get("frames", args.frames))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = _gen_frames(wf, n_frames, args.seed, config.get("es_n0_db"))
    write_iq(out / "frames.iq", frames)
    write_manifest(
        out / "manifest.json",
        {
            "n_subcarriers": wf.n_subcarriers,
            "alpha_effective": [wf.alpha_effective],
            "oversampling": wf.oversampling,
            "frames": n_frames,
            "samples_per_frame": wf.samples_per_frame,
            "labels": [wf.alpha_target],
            "files": [{"path": "frames.iq", "alpha": wf.alpha_target, "frames": n_frames}],
            "master_seed": args.seed,
        },
    )
    write_labels_csv(
        out / "labels.csv",
        [(f, 0, wf.alpha_target, wf.alpha_effective) for f in range(n_frames)],
    )
    print(f"wrote {n_frames} frames to {out / 'frames.iq'}")
    return 0


def cmd_psd(args):
    config = _load_config(args.config)
    wf = waveform_from_dict(config.get("waveform", config))
    n_frames = int(config.get("frames", args.frames))
    nfft = int(config.get("nfft", args.nfft))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    samples = _gen_frames(wf, n_frames, args.seed, config.get("es_n0_db"))
    freq, power = psd_estimate(list(samples), nfft)
    with open(out / "spectrum.csv", "w") as handle:
        handle.write("freq_norm,power_db\n")
        for f, p in zip(freq, power):
            handle.write(f"{f:.8f},{p:.4f}\n")
    if not args.no_figures:
        from .plotting import save_spectrum_figure

        save_spectrum_figure(
            freq, power, out / "spectrum.png",
            title=f"N={wf.n_subcarriers}, alpha={wf.alpha_effective:.3f}",
        )
    print(f"wrote {out / 'spectrum.csv'}")
    return 0


def cmd_ber(args):
    config = _load_config(args.config)
    cfg = experiment_from_dict(config, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    curve = run_ber(cfg)
    write_curve_csv(curve, out / f"{curve.label}.csv")
    _write_json(out / "report.json", {"experiment": "ber", "curves": [curve_report(curve)]})
    if not args.no_figures:
        from .plotting import save_ber_figure

        save_ber_figure([curve], out / "ber.png")
    print(f"wrote {out / (curve.label + '.csv')}")
    return 0


def cmd_tune(args):
    config = _load_config(args.config)
    waveform = config.get(
        "waveform",
        {"n_subcarriers": 64, "alpha": 0.8, "oversampling": 8,
         "band_plan": {"n_bands": 8, "band_size": 8, "guard_subcarriers": 1}},
    )
    base = experiment_from_dict(
        {
            "waveform": waveform,
            "detector": "MultiSD",
            "channel": config.get("channel", "awgn"),
            "es_n0_grid_db": config.get("es_n0_grid_db", (10.0, 15.0, 20.0, 25.0, 30.0)),
            "min_bit_errors": config.get("min_bit_errors", 100),
            "max_frames": config.get("max_frames", 300),
            "master_seed": config.get("master_seed", 0),
        },
        args.seed,
    )
    target_alpha = float(config.get("target_alpha", 0.8))
    detector_alphas = config.get("detector_alphas", (0.9, 0.85, 0.8, 0.75, 0.7))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_tuning_defence(target_alpha, detector_alphas, base)
    for curve in report["curves"]:
        write_curve_csv(curve, out / f"{curve.label}.csv")
    _write_json(
        out / "report.json",
        {
            "experiment": "tuning_defence",
            "target_alpha": report["target_alpha"],
            "detector_alphas": report["detector_alphas"],
            "matched_label": report["matched_label"],
            "matched_is_argmin": {str(k): v for k, v in report["matched_is_argmin"].items()},
            "curves": [curve_report(c) for c in report["curves"]],
        },
    )
    if not args.no_figures:
        from .plotting import save_ber_figure

        save_ber_figure(
            report["curves"], out / "tuning.png",
            title=f"signal alpha = {target_alpha:g}",
        )
    print(f"wrote {len(report['curves'])} curves to {out}")
    return 0


def cmd_scale(args):
    config = _load_config(args.config)
    base = experiment_from_dict(
        {
            "waveform": {"n_subcarriers": int(config.get("n_small", 12)),
                         "alpha": 1.0, "oversampling": config.get("oversampling", 8)},
            "detector": "SD",
            "channel": config.get("channel", "awgn"),
            "es_n0_grid_db": config.get("es_n0_grid_db", (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0)),
            "min_bit_errors": config.get("min_bit_errors", 100),
            "max_frames": config.get("max_frames", 20_000),
            "master_seed": config.get("master_seed", 0),
        },
        args.seed,
    )
    n_large = int(config.get("n_large", 256))
    plan_cfg = config.get("large_band_plan", {"n_bands": n_large // 8, "band_size": 8, "guard_subcarriers": 1})
    plan = BandPlan(plan_cfg["n_bands"], plan_cfg["band_size"], plan_cfg.get("guard_subcarriers", 1))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_scaling_defence(
        base,
        n_small=int(config.get("n_small", 12)),
        n_large=n_large,
        alphas=tuple(config.get("alphas", (1.0, 0.8))),
        large_band_plan=plan,
        op_budget=int(config.get("op_budget", 10**12)),
        large_es_n0_grid_db=tuple(config.get("large_es_n0_grid_db", (8.0, 12.0, 16.0, 20.0, 24.0))),
        large_max_frames=int(config.get("large_max_frames", 300)),
    )
    for curve in report["small_curves"] + report["large_curves"]:
        write_curve_csv(curve, out / f"{curve.label}.csv")
    payload = dict(report)
    payload["small_curves"] = [curve_report(c) for c in report["small_curves"]]
    payload["large_curves"] = [curve_report(c) for c in report["large_curves"]]
    payload["experiment"] = "scaling_defence"
    _write_json(out / "report.json", payload)
    if not args.no_figures:
        from .plotting import save_ber_figure

        save_ber_figure(report["small_curves"], out / "scaling_small.png",
                        title=f"N = {report['n_small']}")
        save_ber_figure(report["large_curves"], out / "scaling_large.png",
                        title=f"N = {report['n_large']}")
    print(f"wrote scaling report to {out / 'report.json'}")
    return 0


def cmd_complexity(args):
    if args.n_list:
        n_list = [int(v) for v in args.n_list.split(",")]
    else:
        n_list = list(range(8, 264, 8))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = cx.complexity_sweep(n_list, args.block_size)
    cx.write_sweep_csv(rows, out / "complexity.csv")
    if not args.no_figures:
        from .plotting import save_complexity_figure

        save_complexity_figure(rows, out / "complexity.png",
                               title=f"block size {args.block_size}")
    print(f"wrote {out / 'complexity.csv'}")
    return 0


def cmd_dataset(args):
    config = _load_config(args.config)
    if "class_alphas" in config:
        alphas = tuple(float(a) for a in config["class_alphas"])
    else:
        alphas = ALPHA_SET_DIVERSE if args.alpha_set == "diverse" else ALPHA_SET_SIMILAR
    plan_cfg = config.get("band_plan", {"n_bands": 32, "band_size": 8, "guard_subcarriers": 1})
    manifest = DatasetManifest(
        class_alphas=alphas,
        frames_per_class=int(config.get("frames_per_class", args.frames_per_class)),
        es_n0_db=float(config.get("es_n0_db", 20.0)),
        channel=config.get("channel", "fading"),
        n_subcarriers=int(config.get("n_subcarriers", 256)),
        oversampling=int(config.get("oversampling", 8)),
        band_plan=BandPlan(
            plan_cfg["n_bands"], plan_cfg["band_size"], plan_cfg.get("guard_subcarriers", 1)
        ),
        master_seed=int(config.get("master_seed", 0) if args.seed is None else args.seed),
    )
    profile = None
    if "channel_profile" in config:
        profile = ChannelProfile.from_json(Path(config["channel_profile"]).read_text())
    written = export_dataset(manifest, args.out, profile=profile)
    print(f"wrote {written['frames']} frames ({len(alphas)} classes) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sefdm",
        description="non-orthogonal multicarrier waveform security toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file", default=None)
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("gen", help="generate frames to an IQ file")
    common(p)
    p.add_argument("--frames", type=int, default=100)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("psd", help="averaged spectrum of generated frames")
    common(p)
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--nfft", type=int, default=2048)
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("ber", help="run one BER experiment")
    common(p)
    p.set_defaults(func=cmd_ber)

    p = sub.add_parser("tune", help="waveform tuning defence study")
    common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("scale", help="waveform scaling defence study")
    common(p)
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("complexity", help="analytic detector operation counts")
    common(p)
    p.add_argument("--n-list", default=None, help="comma-separated subcarrier counts")
    p.add_argument("--block-size", type=int, default=8)
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("dataset", help="export a labeled classifier dataset")
    common(p)
    p.add_argument("--alpha-set", choices=("diverse", "similar"), default="diverse")
    p.add_argument("--frames-per-class", type=int, default=2000)
    p.set_defaults(func=cmd_dataset)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except Exception as exc:  # surface a machine-readable failure
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
