"""``ramandenoise`` command line: gen, train, denoise, eval, bench.

Exit codes: 0 ok, 2 usage, 3 bad data or configuration, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baseline import AirplsConfig, correct
from .bench import ALL_METHODS, NEURAL_METHODS, BenchConfig, run_bench, write_bench
from .cnn.checkpoint import load_checkpoint, save_checkpoint
from .cnn.network import PRESETS, NetworkConfig
from .cnn.training import HYPER_PRESETS, denoise, train
from .core import read_dataset, read_spectrum_csv, write_dataset, write_spectrum_csv
from .errors import InvalidConfig, IoFailure, MissingCheckpoint
from .metrics import evaluate, fmt
from .synthgen import GeneratorConfig, build_dataset
from .wavelets.shrinkage import ShrinkageRule, wavelet_denoise
from .wavelets.transform import EXTENSIONS, WAVELET_NAMES, wavelet

log = logging.getLogger("ramandenoise")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def parse_snr_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop inclusive) or a comma list, in dB."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(start + i * step) for i in range(n))
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR grid {text!r}; use start:stop:step or a,b,c")


def _common(top: bool) -> argparse.ArgumentParser:
    # accepted before or after the subcommand; the subcommand copy must not
    # clobber a value given before it
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(None), help="base seed (default 0)")
    p.add_argument("--out", type=Path, default=d(None), help="output directory")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return p


def _airpls_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("baseline correction")
    g.add_argument("--airpls-lambda", type=float, default=AirplsConfig.lam)
    g.add_argument("--airpls-max-iter", type=int, default=AirplsConfig.max_iter)
    g.add_argument("--no-airpls", action="store_true", help="skip baseline correction")


def _wavelet_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("wavelet shrinkage")
    g.add_argument("--wavelet", default="sym4", choices=WAVELET_NAMES)
    g.add_argument("--extension", default="symmetric", choices=EXTENSIONS)
    g.add_argument("--levels", type=int, default=None)
    g.add_argument("--mode", default="soft", choices=("soft", "hard"))
    g.add_argument("--fdr-q", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    common = _common(top=False)
    parser = argparse.ArgumentParser(prog="ramandenoise", description=__doc__.splitlines()[0],
                                     parents=[_common(top=True)])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate synthetic train/test datasets")
    g.add_argument("--config", type=Path, help="generator config (TOML key = value)")
    g.add_argument("--n-train", type=int, default=500)
    g.add_argument("--n-test", type=int, default=50)
    snr = g.add_mutually_exclusive_group()
    snr.add_argument("--snr", type=float, help="single target SNR in dB")
    snr.add_argument("--snr-grid", type=parse_snr_grid, help="start:stop:step in dB")

    t = sub.add_parser("train", parents=[common], help="train a denoising network")
    t.add_argument("data", type=Path, help="training dataset (.jsonl)")
    t.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    t.add_argument("--topology", choices=("parallel", "serial"), default=None)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--batch-size", type=int, default=None)
    t.add_argument("--ckpt", type=Path, default=None, help="checkpoint path (default OUT/model.rsdn)")
    _airpls_flags(t)

    d = sub.add_parser("denoise", parents=[common], help="denoise one spectrum CSV")
    d.add_argument("input", type=Path)
    d.add_argument("output", type=Path)
    d.add_argument("--method", default="universal", choices=ALL_METHODS)
    d.add_argument("--ckpt", type=Path, default=None)
    _airpls_flags(d)
    _wavelet_flags(d)

    e = sub.add_parser("eval", parents=[common], help="score a denoised spectrum against the clean one")
    e.add_argument("clean", type=Path)
    e.add_argument("denoised", type=Path)

    b = sub.add_parser("bench", parents=[common], help="compare every method on a test dataset")
    b.add_argument("test", type=Path, help="test dataset (.jsonl)")
    b.add_argument("--methods", default=",".join(ALL_METHODS),
                   help="comma-separated subset of " + ",".join(ALL_METHODS))
    b.add_argument("--ckpt", type=Path, default=None, help="checkpoint for method dl")
    b.add_argument("--cnn-ckpt", type=Path, default=None, help="checkpoint for method cnn_serial")
    b.add_argument("--overlay-index", type=int, default=0)
    b.add_argument("--no-figures", action="store_true")
    _airpls_flags(b)
    _wavelet_flags(b)
    return parser


def _airpls(args) -> AirplsConfig | None:
    if args.no_airpls:
        return None
    return AirplsConfig(lam=args.airpls_lambda, max_iter=args.airpls_max_iter)


def _out_dir(args) -> Path:
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen(args) -> int:
    cfg = GeneratorConfig.load(args.config) if args.config else GeneratorConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.snr is not None:
        changes["snr_grid_db"] = (args.snr,)
    elif args.snr_grid is not None:
        changes["snr_grid_db"] = args.snr_grid
    if changes:
        cfg = cfg.replace(**changes)
    train_set, test_set = build_dataset(cfg, args.n_train, args.n_test)
    out = _out_dir(args)
    write_dataset(train_set, out / "train.jsonl")
    write_dataset(test_set, out / "test.jsonl")
    (out / "generator.toml").write_text(cfg.to_text(), encoding="utf-8", newline="\n")
    print(f"train,{len(train_set)}")
    print(f"test,{len(test_set)}")
    print(f"digest,{cfg.digest()}")
    return EXIT_OK


def cmd_train(args) -> int:
    dataset = read_dataset(args.data)
    net_cfg = PRESETS[args.preset]
    if args.topology:
        net_cfg = NetworkConfig(**{**net_cfg.to_dict(), "topology": args.topology})
    if dataset.length and dataset.length != net_cfg.input_len:
        net_cfg = NetworkConfig(**{**net_cfg.to_dict(), "input_len": dataset.length})
    hyper = HYPER_PRESETS[args.preset]
    overrides = {k: v for k, v in (("epochs", args.epochs), ("learning_rate", args.lr),
                                   ("batch_size", args.batch_size), ("seed", args.seed))
                 if v is not None}
    if overrides:
        hyper = type(hyper)(**{**hyper.to_dict(), **overrides})
    log.info("training %s net (%d parameters) for %d epochs",
             net_cfg.topology, net_cfg.parameter_count(), hyper.epochs)
    ckpt, history = train(net_cfg, dataset, hyper, _airpls(args))
    out = _out_dir(args)
    path = args.ckpt or out / "model.rsdn"
    save_checkpoint(ckpt, path)
    loss_path = path.with_suffix(".loss.csv")
    loss_path.write_text("epoch,loss\n" + "".join(f"{i + 1},{fmt(v)}\n" for i, v in enumerate(history)),
                         encoding="utf-8", newline="\n")
    from .plotting import loss_figure

    loss_figure(history, path.with_suffix(".loss.svg"))
    print(f"checkpoint,{path}")
    print(f"final_loss,{fmt(history[-1])}")
    return EXIT_OK


def cmd_denoise(args) -> int:
    if args.method in NEURAL_METHODS and args.ckpt is None:
        raise MissingCheckpoint(f"method {args.method} needs --ckpt")
    spectrum = read_spectrum_csv(args.input)
    airpls = _airpls(args)
    x = correct(spectrum, airpls) if airpls else spectrum
    if args.method in NEURAL_METHODS:
        out = denoise(load_checkpoint(args.ckpt), x)
    else:
        rule = ShrinkageRule(args.method, mode=args.mode, q=args.fdr_q)
        out = wavelet_denoise(x, rule, wavelet(args.wavelet, args.extension), args.levels)
    write_spectrum_csv(out, args.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    r = evaluate(read_spectrum_csv(args.clean), read_spectrum_csv(args.denoised))
    print("snr_db,rmse,mape_pct")
    print(f"{fmt(r.snr_db)},{fmt(r.rmse)},{fmt(r.mape_pct)}")
    return EXIT_OK


def cmd_bench(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    for path in (args.test, args.ckpt, args.cnn_ckpt):
        if path is not None and not path.exists():
            raise IoFailure(f"{path}: no such file")
    if args.extension != "symmetric":
        raise InvalidConfig("bench uses the symmetric extension")
    cfg = BenchConfig(methods=methods, dl_checkpoint=args.ckpt, cnn_checkpoint=args.cnn_ckpt,
                      airpls=_airpls(args), wavelet_name=args.wavelet, levels=args.levels,
                      mode=args.mode, fdr_q=args.fdr_q, overlay_index=args.overlay_index,
                      seed=args.seed or 0)
    result = run_bench(read_dataset(args.test), cfg)
    written = write_bench(result, _out_dir(args), figures=not args.no_figures)
    sys.stdout.write((Path(written[0])).read_text(encoding="utf-8"))
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "denoise": cmd_denoise,
            "eval": cmd_eval, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ArithmeticError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
