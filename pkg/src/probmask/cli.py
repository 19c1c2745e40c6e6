"""probmask: synthetic corpus, training, separation and scoring from the shell.

Every subcommand reads and writes files in one working directory (``--out``):

    synth-corpus  -> source_a.wav, source_b.wav
    prepare       -> prepared.npz, mixture.wav, config.txt
    train         -> model.pbm, loss.csv
    separate      -> separated_a.wav, separated_b.wav, metrics.csv (appended)
    sweep         -> sweep.csv
    ibm-baseline  -> ibm_baseline.csv, ibm_a.wav, ibm_b.wav
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from . import mlp, pipeline
from .audio import load_wav, save_wav
from .config import parse_config_text, resolve_config
from .synth import synth_corpus

log = logging.getLogger("probmask")

PREPARED = "prepared.npz"
MODEL = "model.pbm"


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _write_csv(path, header, rows, append=False) -> None:
    new = not (append and os.path.exists(path))
    with open(path, "a" if append else "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new:
            writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def _config(args):
    overrides = {}
    for item in args.set or []:
        overrides.update(parse_config_text(item))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.filter_len is not None:
        overrides["filter_len"] = args.filter_len
    return resolve_config(args.profile, args.config, overrides)


def _path(args, name):
    return os.path.join(args.out, name)


def _load_prepared(args, cfg):
    prepared = pipeline.Prepared.load(args.prepared or _path(args, PREPARED))
    prepared.check_compatible(cfg)
    return prepared


def _load_model(args):
    with open(args.model or _path(args, MODEL), "rb") as fh:
        return mlp.load_model(fh.read())


def cmd_synth_corpus(args, cfg):
    duration = args.duration if args.duration is not None else cfg.train_seconds + cfg.test_seconds
    if duration < cfg.train_seconds + cfg.test_seconds:
        raise ValueError(f"duration {duration} s is shorter than train + test "
                         f"({cfg.train_seconds + cfg.test_seconds} s)")
    a, b = synth_corpus(cfg.seed, duration, args.rate or cfg.sample_rate)
    save_wav(a, _path(args, "source_a.wav"))
    save_wav(b, _path(args, "source_b.wav"))
    log.info("wrote %d samples per source at %d Hz", len(a), a.sample_rate)


def cmd_prepare(args, cfg):
    src_a = args.source_a or _path(args, "source_a.wav")
    src_b = args.source_b or _path(args, "source_b.wav")
    prepared = pipeline.prepare(load_wav(src_a), load_wav(src_b), cfg)
    prepared.save(_path(args, PREPARED))
    save_wav(prepared.mixture, _path(args, "mixture.wav"))
    with open(_path(args, "config.txt"), "w") as fh:
        fh.write(cfg.to_text())
    n_windows = cfg.window.num_windows(prepared.train_mix_mag.shape[1], cfg.stride_train)
    log.info("prepared %d training frames (%d windows), IBM ones fraction %.3f",
             prepared.train_mix_mag.shape[1], n_windows, prepared.train_ibm.data.mean())


def cmd_train(args, cfg):
    prepared = _load_prepared(args, cfg)

    def progress(epoch, loss):
        log.info("epoch %d/%d  loss %.4f", epoch + 1, cfg.epochs, loss)

    model, trace = pipeline.train(prepared, cfg, progress=progress)
    with open(_path(args, MODEL), "wb") as fh:
        fh.write(mlp.save_model(model))
    _write_csv(_path(args, "loss.csv"), ["epoch", "loss"],
               [[str(i + 1), loss] for i, loss in enumerate(trace)])


def cmd_separate(args, cfg):
    if not 0 < args.alpha < 1:
        raise ValueError("--alpha must lie in (0, 1)")
    prepared = _load_prepared(args, cfg)
    est_a, est_b, row = pipeline.separate(_load_model(args), prepared, cfg, args.alpha)
    save_wav(est_a, _path(args, "separated_a.wav"))
    save_wav(est_b, _path(args, "separated_b.wav"))
    _write_csv(_path(args, "metrics.csv"), ["alpha", *pipeline.METRIC_COLUMNS], [[args.alpha, *row]],
               append=True)
    log.info("alpha %.4f: SDR %.2f  SIR %.2f  SAR %.2f dB", args.alpha, *row[:3])


def cmd_sweep(args, cfg):
    prepared = _load_prepared(args, cfg)
    rows = pipeline.sweep(_load_model(args), prepared, cfg)
    _write_csv(_path(args, "sweep.csv"), ["alpha", *pipeline.METRIC_COLUMNS], rows)


def cmd_ibm_baseline(args, cfg):
    prepared = _load_prepared(args, cfg)
    rows, (est_a, est_b) = pipeline.ibm_baseline(prepared, cfg)
    save_wav(est_a, _path(args, "ibm_a.wav"))
    save_wav(est_b, _path(args, "ibm_b.wav"))
    _write_csv(_path(args, "ibm_baseline.csv"), ["estimate", *pipeline.METRIC_COLUMNS],
               [[label, *row] for label, row in rows.items()])
    log.info("IBM: SDR %.2f  SIR %.2f  SAR %.2f dB", *rows["ibm"][:3])


COMMANDS = {
    "synth-corpus": cmd_synth_corpus,
    "prepare": cmd_prepare,
    "train": cmd_train,
    "separate": cmd_separate,
    "sweep": cmd_sweep,
    "ibm-baseline": cmd_ibm_baseline,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--profile", choices=["desk", "paper"], default="desk")
    common.add_argument("--seed", type=int)
    common.add_argument("--filter-len", type=int, dest="filter_len")
    common.add_argument("--out", default=".", help="working directory (default: current)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key; repeatable")
    common.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="probmask", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-corpus", parents=[common], help="generate a synthetic two-talker pair")
    p.add_argument("--duration", type=float, help="seconds (default: train + test)")
    p.add_argument("--rate", type=int, help="sample rate in Hz (default: working rate)")

    p = sub.add_parser("prepare", parents=[common], help="decimate, equalize, mix, cache IBM")
    p.add_argument("source_a", nargs="?", help="WAV for source A (default: OUT/source_a.wav)")
    p.add_argument("source_b", nargs="?", help="WAV for source B (default: OUT/source_b.wav)")

    for name, text in (("train", "train the mask network"),
                       ("separate", "separate the test segment at one alpha"),
                       ("sweep", "separate and score over the alpha grid"),
                       ("ibm-baseline", "score the oracle mask and the raw mixture")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--prepared", help=f"prepared cache (default: OUT/{PREPARED})")
        if name in ("separate", "sweep"):
            p.add_argument("--model", help=f"model file (default: OUT/{MODEL})")
        if name == "separate":
            p.add_argument("--alpha", type=float, default=0.99)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](args, cfg)
    except (OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
