"""Command-line experiment runner.

Subcommands: train, sweep, sweep-fixed, complexity, simulate.
Exit codes: 0 success, 1 config error, 2 training divergence, 3 I/O error.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dsp import SampledSignal
from .experiment import (ExperimentConfig, run_experiment,
                         sweep_amplitude_with_fixed_dpd, _write_training_log)
from .learn import (FitConfig, TrainingDivergedError, artifact_from_dict,
                    artifact_to_dict)
from .model import complexity, load_model
from .txsim import (channel_from_dict, load_channel, paper_like_preset,
                    simulate_tx)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_IO = 3

PRESETS = {"paper-like": paper_like_preset}


class ConfigError(ValueError):
    pass


def _load_json(path):
    with open(path) as f:
        return json.load(f)


def build_config(doc, seed=None, preset=None):
    """ExperimentConfig from a JSON config document plus CLI overrides."""
    doc = doc or {}
    sig = doc.get("signal", {})
    fit = FitConfig(**doc.get("fit", {}))
    model = doc.get("model", {})
    sweep = doc.get("sweep", {})

    channel_doc = doc.get("channel", "paper-like")
    if preset is not None:
        channel_doc = preset
    if isinstance(channel_doc, str):
        if channel_doc not in PRESETS:
            raise ConfigError(f"unknown channel preset {channel_doc!r}")
        channel = PRESETS[channel_doc]()
    else:
        channel = channel_from_dict({"channel": channel_doc})

    kwargs = dict(
        order=sig.get("order", 16),
        n_symbols=sig.get("n_symbols", 8192),
        rolloff=sig.get("rolloff", 0.2),
        samples_per_symbol=sig.get("samples_per_symbol", 2),
        span_symbols=sig.get("span_symbols", 16),
        seed=doc.get("seed", 0),
        channel=channel,
        k1=model.get("k1", 15),
        k2=model.get("k2", 15),
        fit=fit)
    if "amplitudes" in sweep:
        kwargs["amplitudes"] = tuple(sweep["amplitudes"])
    if "modes" in sweep:
        kwargs["modes"] = tuple(sweep["modes"])
    cfg = ExperimentConfig(**kwargs)
    if seed is not None:
        cfg.seed = seed
    return cfg, doc


def cmd_train(args):
    doc = _load_json(args.config) if args.config else {}
    cfg, doc = build_config(doc, args.seed, args.preset)
    v = doc.get("train_amplitude", cfg.amplitudes[0])
    from .experiment import Workbench
    bench = Workbench(cfg)
    artifact = bench.train(v, freeze_nonlinear=args.linear_only)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "artifact.json", "w") as f:
        json.dump(artifact_to_dict(artifact), f, indent=2)
    _write_training_log(artifact, out / "training_log.csv")
    print(f"trained at drive {v}: final loss {artifact.final_loss:.6g} "
          f"after {artifact.iterations} iterations")
    return EXIT_OK


def cmd_sweep(args):
    doc = _load_json(args.config) if args.config else {}
    cfg, _ = build_config(doc, args.seed, args.preset)
    report, _ = run_experiment(cfg, out_dir=args.out)
    for row in report.rows:
        print(f"v_in={row['v_in']:<6} mode={row['mode']:<8} "
              f"snr={row['snr_db']:.2f} dB out_rms={row['out_rms']:.4f} "
              f"papr={row['papr_db']:.2f} dB")
    print(f"report written to {Path(args.out) / 'report.csv'}")
    return EXIT_OK


def cmd_sweep_fixed(args):
    doc = _load_json(args.config) if args.config else {}
    cfg, _ = build_config(doc, args.seed, args.preset)
    artifact = artifact_from_dict(_load_json(args.artifact))
    report = sweep_amplitude_with_fixed_dpd(cfg, artifact,
                                            rescale=args.rescale,
                                            out_dir=args.out)
    for row in report.rows:
        print(f"v_in={row['v_in']:<6} snr={row['snr_db']:.2f} dB "
              f"out_rms={row['out_rms']:.4f}")
    return EXIT_OK


def cmd_complexity(args):
    model = load_model(args.model)
    rep = complexity(model)
    print(f"multiplications_per_sample: {rep.multiplications_per_sample}")
    print(f"additions_per_sample: {rep.additions_per_sample}")
    return EXIT_OK


def cmd_simulate(args):
    if args.preset:
        channel = PRESETS[args.preset]()
    elif args.channel:
        channel = load_channel(args.channel)
    else:
        raise ConfigError("simulate needs --channel or --preset")
    if args.seed is not None:
        channel.seed = args.seed
    samples = np.loadtxt(args.input)
    sig = SampledSignal(np.atleast_1d(samples), args.sps)
    out = simulate_tx(channel, sig)
    np.savetxt(args.output, out.samples)
    print(f"wrote {out.samples.size} samples to {args.output}")
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog="whdpd",
                                description="Wiener-Hammerstein DPD experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--preset", choices=sorted(PRESETS),
                        help="channel preset overriding the config")

    sp = sub.add_parser("train", help="fit a DPD artifact against the channel")
    common(sp)
    sp.add_argument("--out", default="out")
    sp.add_argument("--linear-only", action="store_true",
                    help="freeze the nonlinear coefficients at zero")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("sweep", help="amplitude sweep over all DPD modes")
    common(sp)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("sweep-fixed",
                        help="sweep amplitudes with one fixed artifact")
    common(sp)
    sp.add_argument("--artifact", required=True)
    sp.add_argument("--rescale", action="store_true",
                    help="rescale nonlinear coefficients with drive")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_sweep_fixed)

    sp = sub.add_parser("complexity", help="per-sample cost of a model file")
    sp.add_argument("--model", required=True)
    sp.set_defaults(func=cmd_complexity)

    sp = sub.add_parser("simulate", help="channel forward pass on a waveform")
    sp.add_argument("--channel", help="channel JSON file")
    sp.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--sps", type=float, default=2.0,
                    help="samples per symbol metadata for the waveform")
    sp.add_argument("--input", required=True, help="waveform CSV, one sample per line")
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, ValueError, KeyError, TypeError,
            json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
