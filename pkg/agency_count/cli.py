# agency_count/cli.py
"""
Command line entry point ``agency-count``.

    agency-count generate --n 40 --labeled-ratio 0.25 --layout clustered --out data/
    agency-count train --config run.toml --data data/ --out runs/semi
    agency-count eval --ckpt runs/semi/final.pt --data data/ --split test
    agency-count sweep --param beta --config run.toml --data data/ --out sweeps/beta
    agency-count ablate --config run.toml --data data/ --out ablation/
    agency-count curves --runs runs/semi/epochs.csv runs/base/epochs.csv --out curves/
    agency-count toy --scheme d_full --steps 300 --out toy/
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from agency_count import __version__
from agency_count.core.config import Settings, get_settings
from agency_count.core.errors import AgencyCountError, ErrorResponse
from agency_count.datasets.generator import generate_dataset
from agency_count.datasets.manifest import save_manifest
from agency_count.datasets.models import Layout, SceneDataset, Split
from agency_count.datasets.sources import get_scene_source
from agency_count.evalkit.ablate import ablate
from agency_count.evalkit.curves import emit_curves, load_epoch_logs
from agency_count.evalkit.evaluate import evaluate
from agency_count.evalkit.sweep import SWEEP_KEYS, sweep
from agency_count.evalkit.toy import ToyConfig, ToyScheme, run_toy, write_toy_outputs
from agency_count.training.trainer import labeled_only_baseline, run_training

logger = logging.getLogger(__name__)


def _size(text: str) -> tuple[int, int]:
    height, _, width = text.lower().partition("x")
    return int(height), int(width or height)


def _settings(path: str | None) -> Settings:
    return Settings.from_file(path) if path else get_settings()


def _dataset(args: argparse.Namespace) -> SceneDataset:
    """``--data`` is a manifest; without it a synthetic set is generated."""
    if args.data:
        return get_scene_source(provider="manifest", path=args.data).load()
    return get_scene_source(
        provider="synthetic",
        n=args.n,
        labeled_ratio=args.labeled_ratio,
        layout=args.layout,
        seed=args.seed,
        n_test=args.n_test,
    ).load()


def _add_data_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="dataset manifest (directory or dataset.json)")
    synth = parser.add_argument_group("synthetic data (used when --data is absent)")
    synth.add_argument("--n", type=int, default=40)
    synth.add_argument("--labeled-ratio", type=float, default=0.25)
    synth.add_argument("--layout", choices=[m.value for m in Layout], default="uniform")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--n-test", type=int, default=10)


# -------------------------------------------------
# Sub-commands
# -------------------------------------------------
def cmd_generate(args: argparse.Namespace) -> int:
    dataset = generate_dataset(
        args.n,
        args.labeled_ratio,
        args.layout,
        args.seed,
        n_test=args.n_test,
        size=args.size,
    )
    path = save_manifest(dataset, args.out)
    print(path)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    settings = _settings(args.config)
    dataset = _dataset(args)
    if args.labeled_only:
        result = labeled_only_baseline(dataset, settings, out_dir=args.out)
    else:
        result = run_training(dataset, settings, out_dir=args.out)
    final = result.logs[-1] if result.logs else None
    print(
        json.dumps(
            {
                "run": result.run,
                "epochs": len(result.logs),
                "train_mae": final.train_mae if final else result.initial_mae,
                "train_mse": final.train_mse if final else result.initial_mse,
                "out": str(args.out),
            }
        )
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    dataset = _dataset(args)
    samples = dataset.by_split(Split(args.split))
    result = evaluate(args.ckpt, samples, save_maps=args.save_maps)
    payload = result.to_dict() if args.per_image else {"MAE": result.mae, "MSE": result.mse}
    print(json.dumps(payload))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    settings = _settings(args.config)
    values = [v.strip() for v in args.values.split(",")] if args.values else None
    result = sweep(args.param, values, settings, _dataset(args), out_dir=args.out)
    print(result.table_markdown(), end="")
    return 0 if all(cell.status == "ok" for cell in result.cells) else 2


def cmd_ablate(args: argparse.Namespace) -> int:
    result = ablate(_settings(args.config), _dataset(args), out_dir=args.out)
    print(result.table_markdown(), end="")
    return 0 if all(cell.status == "ok" for cell in result.cells) else 2


def cmd_curves(args: argparse.Namespace) -> int:
    runs = {}
    for entry in args.runs:
        # NAME=PATH, or PATH with the run name taken from the file
        name, sep, path = entry.partition("=")
        if not sep:
            name, path = None, entry
        logs = load_epoch_logs(path, run=name)
        runs[name or (logs[0].run if logs else Path(path).parent.name)] = logs
    paths = emit_curves(runs, args.out)
    print(json.dumps({key: str(value) for key, value in paths.items()}))
    return 0


def cmd_toy(args: argparse.Namespace) -> int:
    schemes = list(ToyScheme) if args.scheme == "all" else [ToyScheme(args.scheme)]
    summary = {}
    for scheme in schemes:
        cfg = ToyConfig(
            scheme=scheme,
            steps=args.steps,
            seed=args.seed,
            dims=args.dims,
            snapshot_every=args.snapshot_every,
        )
        result = run_toy(cfg)
        write_toy_outputs(result, Path(args.out) / scheme.value, plot=not args.no_plot)
        summary[scheme.value] = result.metrics
    print(json.dumps(summary, indent=2))
    return 0


# -------------------------------------------------
# Parser
# -------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agency-count",
        description="Density-agency guided semi-supervised crowd counting.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="render a synthetic dataset manifest")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--labeled-ratio", type=float, required=True)
    gen.add_argument("--layout", choices=[m.value for m in Layout], default="uniform")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n-test", type=int, default=0)
    gen.add_argument("--size", type=_size, default=(128, 128), help="HxW, e.g. 128x128")
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=cmd_generate)

    train = sub.add_parser("train", help="semi-supervised training run")
    train.add_argument("--config", help="TOML file of dotted keys")
    train.add_argument("--out", required=True)
    train.add_argument("--labeled-only", action="store_true")
    _add_data_options(train)
    train.set_defaults(handler=cmd_train)

    ev = sub.add_parser("eval", help="MAE/MSE of a checkpoint on one split")
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--split", choices=[s.value for s in Split], default="test")
    ev.add_argument("--save-maps", help="directory for predicted density PNGs")
    ev.add_argument("--per-image", action="store_true")
    _add_data_options(ev)
    ev.set_defaults(handler=cmd_eval)

    sw = sub.add_parser("sweep", help="one-parameter sensitivity table")
    sw.add_argument("--param", choices=sorted(SWEEP_KEYS), required=True)
    sw.add_argument("--values", help="comma separated; defaults to the preset")
    sw.add_argument("--config", help="TOML file of dotted keys")
    sw.add_argument("--out")
    _add_data_options(sw)
    sw.set_defaults(handler=cmd_sweep)

    ab = sub.add_parser("ablate", help="cumulative component ladder on the test split")
    ab.add_argument("--config", help="TOML file of dotted keys")
    ab.add_argument("--out")
    _add_data_options(ab)
    ab.set_defaults(handler=cmd_ablate)

    cv = sub.add_parser("curves", help="plot training curves from epochs.csv files")
    cv.add_argument("--runs", nargs="+", required=True, help="PATH or NAME=PATH")
    cv.add_argument("--out", required=True)
    cv.set_defaults(handler=cmd_curves)

    toy = sub.add_parser("toy", help="loss-geometry lab on free points")
    toy.add_argument("--scheme", choices=[s.value for s in ToyScheme] + ["all"], default="all")
    toy.add_argument("--steps", type=int, default=300)
    toy.add_argument("--seed", type=int, default=0)
    toy.add_argument("--dims", type=int, default=2)
    toy.add_argument("--snapshot-every", type=int, default=0)
    toy.add_argument("--no-plot", action="store_true")
    toy.add_argument("--out", required=True)
    toy.set_defaults(handler=cmd_toy)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except AgencyCountError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(exc.to_response().model_dump_json(), file=sys.stderr)
        return 1
    except (ValidationError, FileNotFoundError) as exc:
        logger.error("%s: invalid configuration: %s", args.command, exc)
        response = ErrorResponse(error_code="INVALID_CONFIG", message=str(exc))
        print(response.model_dump_json(), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
