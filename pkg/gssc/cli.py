"""
Command-line entry point: `gssc <command> ...`

Results go to stdout as JSON, logs go to stderr. Failures print
{"error": ...} and exit 1; usage errors exit 2.
"""

import argparse
import io
import json
import logging
import sys
from typing import Literal, get_args, get_origin

from pydantic import ValidationError

from .config import LOG_FORMAT, LOG_LEVEL
from .tools import (
    gssc_bench,
    gssc_corrupt,
    gssc_eval,
    gssc_generate,
    gssc_sparsify,
    gssc_train,
    study_ablation,
    study_correlation,
    study_evolution,
    study_robustness,
    study_sensitivity,
)
from .utils.errors import GsscError
from .utils.schemas import TrainConfig

logger = logging.getLogger(__name__)


def _ratio(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"ratio must lie in [0, 1], got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    """--config plus one flag per TrainConfig field; flags win over file values"""
    parser.add_argument("--config", help="JSON file with TrainConfig fields")
    group = parser.add_argument_group("training configuration")
    for name, info in TrainConfig.model_fields.items():
        flag = "--" + name.replace("_", "-")
        annotation = info.annotation
        help_text = f"default: {info.default}"
        if annotation is bool:
            group.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction, default=None, help=help_text)
        elif get_origin(annotation) is Literal:
            group.add_argument(flag, dest=name, choices=get_args(annotation), default=None, help=help_text)
        else:
            kind = next((a for a in get_args(annotation) if a is not type(None)), annotation)
            group.add_argument(flag, dest=name, type=kind, default=None, help=help_text)


def _overrides(args: argparse.Namespace) -> dict:
    return {name: getattr(args, name) for name in TrainConfig.model_fields}


def _jobs_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--jobs", type=_positive_int, default=1, help="sub-runs in parallel (results are identical)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gssc", description="Graph structure self-contrasting experiments")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="generate an SBM dataset")
    generate.add_argument("--nodes", type=_positive_int, default=1000)
    generate.add_argument("--classes", type=_positive_int, default=5)
    generate.add_argument("--p-in", type=float, default=0.02)
    generate.add_argument("--p-out", type=float, default=0.002)
    generate.add_argument("--dim", type=_positive_int, default=64)
    generate.add_argument("--feature-noise", type=float, default=1.0)
    generate.add_argument("--train-per-class", type=_positive_int, default=20)
    generate.add_argument("--feature-offset", type=float, default=0.0,
                          help="shift all features along one shared random direction")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--out", required=True)
    generate.set_defaults(handler=lambda a: gssc_generate(
        a.out, a.nodes, a.classes, a.p_in, a.p_out, a.dim, a.feature_noise, a.seed, a.train_per_class, a.feature_offset,
    ))

    corrupt = commands.add_parser("corrupt", help="write a label- or edge-corrupted copy of a dataset")
    corrupt.add_argument("--data", required=True)
    corrupt.add_argument("--out", required=True)
    noise = corrupt.add_mutually_exclusive_group(required=True)
    noise.add_argument("--label-noise", choices=("sym", "asym"))
    noise.add_argument("--edge-noise", action="store_true")
    corrupt.add_argument("--ratio", type=_ratio, required=True)
    corrupt.add_argument("--edge-noise-split", choices=("half", "each"), default="half")
    corrupt.add_argument("--seed", type=int, default=0)
    corrupt.set_defaults(handler=lambda a: gssc_corrupt(
        a.data, a.out, a.ratio, a.label_noise, a.edge_noise, a.seed, a.edge_noise_split,
    ))

    train = commands.add_parser("train", help="train on a dataset directory")
    train.add_argument("--data", required=True)
    train.add_argument("--out", required=True)
    _add_config_flags(train)
    train.set_defaults(handler=lambda a: gssc_train(a.data, a.out, a.config, _overrides(a)))

    evaluate = commands.add_parser("eval", help="accuracy of a checkpoint on a split")
    evaluate.add_argument("--ckpt", required=True)
    evaluate.add_argument("--data", required=True)
    evaluate.add_argument("--split", choices=("train", "val", "test"), default="test")
    evaluate.set_defaults(handler=lambda a: gssc_eval(a.ckpt, a.data, a.split))

    bench = commands.add_parser("bench", help="inference latency of a checkpoint")
    bench.add_argument("--ckpt", required=True)
    bench.add_argument("--data", required=True)
    bench.add_argument("--repeats", type=_positive_int, default=30)
    bench.add_argument("--warmup", type=int, default=3)
    bench.set_defaults(handler=lambda a: gssc_bench(a.ckpt, a.data, a.repeats, a.warmup))

    sparsify = commands.add_parser("sparsify", help="dump one subgraph drawn from a checkpoint's sparsifier")
    sparsify.add_argument("--ckpt", required=True)
    sparsify.add_argument("--data", required=True)
    sparsify.add_argument("--out", required=True, help="a .tsv path or a directory")
    sparsify.add_argument("--seed", type=int, default=0)
    sparsify.set_defaults(handler=lambda a: gssc_sparsify(a.ckpt, a.data, a.out, a.seed))

    study = commands.add_parser("study", help="experiments that emit CSV plot data")
    studies = study.add_subparsers(dest="study", required=True)

    correlation = studies.add_parser("correlation", help="test accuracy against subgraph homophily")
    evolution = studies.add_parser("evolution", help="edge count, homophily and accuracy per epoch")
    ablation = studies.add_parser("ablation", help="full model against its ablations")
    robustness = studies.add_parser("robustness", help="accuracy under label or edge noise")
    sensitivity = studies.add_parser("sensitivity", help="accuracy across values of one hyperparameter")
    for sub in (correlation, evolution, ablation, robustness, sensitivity):
        sub.add_argument("--data", required=True)
        sub.add_argument("--out", required=True, help="CSV output path")
        _add_config_flags(sub)

    correlation.add_argument("--rungs", type=_positive_int, default=8)
    correlation.add_argument("--removal", choices=("class", "uniform"), default="class",
                             help="drop edges by class to sweep homophily, or uniformly at random")
    _jobs_flag(correlation)
    correlation.set_defaults(handler=lambda a: study_correlation(
        a.data, a.out, a.config, _overrides(a), a.rungs, a.jobs, a.removal,
    ))

    evolution.add_argument("--objective", choices=("homophily", "explicit-weight"), default="homophily")
    evolution.set_defaults(handler=lambda a: study_evolution(a.data, a.out, a.objective, a.config, _overrides(a)))

    ablation.add_argument("--seeds", type=_positive_int, default=5)
    _jobs_flag(ablation)
    ablation.set_defaults(handler=lambda a: study_ablation(a.data, a.out, a.config, _overrides(a), a.seeds, a.jobs))

    robustness.add_argument("--kind", choices=("edge", "label-sym", "label-asym"), default="edge")
    robustness.add_argument("--ratios", type=_ratio, nargs="+", default=[0.0, 0.1, 0.2, 0.3])
    robustness.add_argument("--seeds", type=_positive_int, default=5)
    _jobs_flag(robustness)
    robustness.set_defaults(handler=lambda a: study_robustness(
        a.data, a.out, a.kind, a.ratios, a.config, _overrides(a), a.seeds, a.jobs,
    ))

    sensitivity.add_argument("--param", choices=("fusion_alpha", "batch_size", "temperature", "negatives"),
                             default="fusion_alpha")
    sensitivity.add_argument("--values", type=float, nargs="+", required=True)
    sensitivity.add_argument("--seeds", type=_positive_int, default=1)
    _jobs_flag(sensitivity)
    sensitivity.set_defaults(handler=lambda a: study_sensitivity(
        a.data, a.out, a.param, a.values, a.config, _overrides(a), a.seeds, a.jobs,
    ))
    return parser


def main(argv=None) -> int:
    """Main entry point"""
    # Fix Windows UTF-8 encoding issues
    if sys.platform == 'win32':
        for stream in (sys.stdout, sys.stderr):
            if isinstance(stream, io.TextIOWrapper):
                stream.reconfigure(encoding='utf-8', errors='replace')

    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format=LOG_FORMAT,
        stream=sys.stderr,
        encoding='utf-8',
        errors='replace'
    )

    command = args.command if args.command != "study" else f"study {args.study}"
    try:
        result = args.handler(args)
    except (GsscError, ValidationError, ValueError, OSError) as e:
        logger.error(f"Error running {command}: {e}")
        print(json.dumps({"error": str(e)}))
        return 1
    print(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
