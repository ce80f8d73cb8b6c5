#!/usr/bin/env python3
"""
me-kit command line: decode, eval, ablate, synth, traindemo, version.

Exit codes: 0 success, 2 invalid input, 1 anything else.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from loguru import logger
from pydantic import ValidationError

# Add src to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root / "src"))

from core import FORMAT_VERSIONS, __version__  # noqa: E402
from core.errors import ComputationError, InputValidationError, InvalidPenaltyConfig  # noqa: E402
from core.io import read_track, write_intervals  # noqa: E402
from tools.classify import PenaltyConfig  # noqa: E402
from tools.synth import SynthSpec, generate_suite  # noqa: E402
from training.trainer import DESK_PRESET, TrainConfig, train_demo, train_loso  # noqa: E402
from utils.config import RunConfig, configure_logging, load_run_config, read_config_file  # noqa: E402
from workflow.pipeline import evaluate_manifest, label_track, run_ablation  # noqa: E402

EXIT_OK, EXIT_ERROR, EXIT_INVALID = 0, 1, 2


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="RunConfig file (JSON or YAML); flags override it")
    parser.add_argument("--decoder", choices=["siss", "fixed"])
    parser.add_argument("--k", type=int, help="Duration prior in frames (default: round(0.5 s x fps))")
    parser.add_argument("--theta-low", type=float)
    parser.add_argument("--theta-high", type=float)
    parser.add_argument("--patience", type=int)
    parser.add_argument("--min-peak-height", type=float)
    parser.add_argument("--nms-iou", type=float)
    parser.add_argument("--penalty", choices=["none", "inverse_prior", "custom"])
    parser.add_argument("--weights", type=_floats, help="Comma-separated custom penalty weights")
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--averaging", choices=["macro", "micro"])
    parser.add_argument("--threads", type=int)
    parser.add_argument("--print-config", action="store_true", help="Print the effective config and exit")


def build_run_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config)
    penalty_flags = {"mode": args.penalty, "weights": args.weights, "epsilon": args.epsilon}
    penalty = None
    if any(v is not None for v in penalty_flags.values()):
        data = config.penalty.model_dump()
        data.update({k: v for k, v in penalty_flags.items() if v is not None})
        penalty = PenaltyConfig.model_validate(data)
    return config.with_overrides(
        decoder=args.decoder,
        k=args.k,
        theta_low=args.theta_low,
        theta_high=args.theta_high,
        patience=args.patience,
        min_peak_height=args.min_peak_height,
        nms_iou=args.nms_iou,
        penalty=penalty,
        averaging=args.averaging,
        threads=args.threads,
    )


def build_train_config(args: argparse.Namespace) -> TrainConfig:
    base = DESK_PRESET if args.preset == "desk" else TrainConfig()
    data: Dict[str, Any] = base.model_dump()
    if args.train_config:
        data.update(read_config_file(args.train_config))
    overrides = {
        "lr": args.lr,
        "epochs": args.epochs,
        "seed": args.seed,
        "holdout": args.holdout,
        "segment_len": args.segment_len,
        "neg_pos_ratio": args.neg_pos_ratio,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.single_task:
        data["shared"] = False
    if args.soft_targets:
        data["soft_targets"] = True
    return TrainConfig.model_validate(data)


def _print_json(data: Any) -> None:
    print(json.dumps(data, indent=2))


def cmd_decode(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    if args.print_config:
        _print_json(config.model_dump(mode="json"))
        return EXIT_OK
    track = read_track(args.track, fps=args.fps)
    priors = args.priors or [1.0 / track.n_classes] * track.n_classes
    if len(priors) != track.n_classes:
        raise InvalidPenaltyConfig(f"--priors has {len(priors)} values, the track has {track.n_classes} classes")
    intervals = label_track(track, priors, config)
    write_intervals(intervals, args.out, track.video_id)
    print(f"{len(intervals)} intervals -> {args.out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    if args.no_curves:
        config = config.with_overrides(write_curves=False)
    if args.print_config:
        _print_json(config.model_dump(mode="json"))
        return EXIT_OK
    report = evaluate_manifest(args.manifest, config, args.out, predictions_dir=args.predictions)
    overall = report.overall
    print(
        f"f1_spot={overall.f1_spot:.4f} f1_rec={overall.f1_rec:.4f} strs={overall.strs:.4f} "
        f"iou_tp={overall.iou_tp:.4f} iou_all={overall.iou_all:.4f}"
    )
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    if args.print_config:
        _print_json(config.model_dump(mode="json"))
        return EXIT_OK
    ablation = run_ablation(args.manifest, config, args.out)
    print(f"iou_all gain {ablation.iou_all_gain:+.4f}, iou_tp gain {ablation.iou_tp_gain:+.4f}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec.model_validate(read_config_file(args.spec)) if args.spec else SynthSpec()
    if args.print_config:
        _print_json(spec.model_dump(mode="json"))
        return EXIT_OK
    path = generate_suite(spec, args.videos, args.seed, args.out, fps=args.fps, n_subjects=args.subjects)
    print(f"manifest -> {path}")
    return EXIT_OK


def cmd_traindemo(args: argparse.Namespace) -> int:
    config = build_train_config(args)
    run_config = load_run_config(args.config)
    if args.print_config:
        _print_json(config.model_dump(mode="json"))
        return EXIT_OK
    if args.loso:
        loso = train_loso(args.manifest, config, run_config, args.out)
        print(f"LOSO folds={len(loso.folds)} f1_spot={loso.evaluation.overall.f1_spot:.4f} strs={loso.evaluation.overall.strs:.4f}")
        return EXIT_OK
    run = train_demo(args.manifest, config, run_config, args.out)
    first, last = run.log[0], run.log[-1]
    print(f"loss {first.total:.6f} -> {last.total:.6f} over {len(run.log)} epochs")
    if run.evaluation is not None:
        print(f"held-out f1_spot={run.evaluation.overall.f1_spot:.4f} strs={run.evaluation.overall.strs:.4f}")
    return EXIT_OK


def cmd_version(args: argparse.Namespace) -> int:
    print(f"me-kit {__version__}")
    for name, version in FORMAT_VERSIONS.items():
        print(f"  {name}: v{version}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="me-kit", description="Micro-expression spotting and analysis toolkit")
    parser.add_argument("--log-level", help="Overrides ME_KIT_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="Decode one track into labeled intervals")
    p.add_argument("track")
    p.add_argument("--out", required=True, help="Intervals JSON to write")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--priors", type=_floats, help="Comma-separated class priors (default uniform)")
    _add_run_options(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="Decode, classify and score every video of a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="Report directory")
    p.add_argument("--predictions", help="Directory of <video_id>.json interval files to score instead of decoding")
    p.add_argument("--no-curves", action="store_true")
    _add_run_options(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="Fixed-window vs SISS decoding on one manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="Report directory")
    _add_run_options(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="Generate a synthetic suite")
    p.add_argument("--out", required=True)
    p.add_argument("--spec", help="SynthSpec file (JSON or YAML)")
    p.add_argument("--videos", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="Base seed; video i uses seed + i")
    p.add_argument("--subjects", type=int)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--print-config", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("traindemo", help="Train the two-head model on a synthetic suite")
    p.add_argument("manifest")
    p.add_argument("--out", help="Checkpoint/log directory")
    p.add_argument("--preset", choices=["default", "desk"], default="default")
    p.add_argument("--train-config", help="TrainConfig file (JSON or YAML)")
    p.add_argument("--config", help="RunConfig used for held-out decoding")
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--holdout", type=int)
    p.add_argument("--segment-len", type=int)
    p.add_argument("--neg-pos-ratio", type=float)
    p.add_argument("--single-task", action="store_true", help="Two single-task models instead of a shared trunk")
    p.add_argument("--soft-targets", action="store_true")
    p.add_argument("--loso", action="store_true", help="Leave-one-subject-out protocol")
    p.add_argument("--print-config", action="store_true")
    p.set_defaults(func=cmd_traindemo)

    p = sub.add_parser("version", help="Print package and file format versions")
    p.set_defaults(func=cmd_version)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except (InputValidationError, ValidationError) as e:
        logger.error(f"❌ {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ComputationError as e:
        logger.error(f"❌ {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logger.exception(f"❌ Unexpected failure: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
