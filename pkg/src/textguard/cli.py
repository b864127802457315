"""Command-line entry point: ``textguard <subcommand> [flags]``.

Exit codes: 0 success, 1 internal error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .checkpoint import CheckpointError
from .corpus import CorpusError
from .metrics import percent
from .tokenizer import TokenizerError

logger = logging.getLogger("textguard")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--model", choices=pipeline.MODEL_KINDS, help="model kind")
    p.add_argument("--task", type=str.upper, choices=("A", "B"), help="subtask A (NOT/HOF) or B (NONE/HATE/OFFN/PRFN)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output / run directory")
    p.add_argument("--data", help=f"dataset directory (default: ${pipeline.DATA_ENV})")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="textguard", description="Hate-speech / offensive-content classifiers")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenizer-train", help="train a BPE vocabulary on the training split")
    _common(p)
    p = sub.add_parser("train", help="train one model and score it")
    _common(p)
    p = sub.add_parser("eval", help="score a trained run directory on a TSV file")
    _common(p)
    p.add_argument("--test", help="TSV to evaluate (default: the config's test split)")
    p = sub.add_parser("predict", help="label the posts of a TSV file")
    _common(p)
    p.add_argument("--input", required=True, help="TSV with text_id and text columns")
    p.add_argument("--output", help="predictions TSV (default: <out>/predictions.tsv)")
    p = sub.add_parser("compare", help="train all three model kinds and tabulate them")
    _common(p)
    return parser


def _config(args) -> pipeline.ExperimentConfig:
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise pipeline.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key] = value
    for name in ("model", "task", "seed", "out", "data"):
        if getattr(args, name, None) is not None:
            overrides[name] = getattr(args, name)
    return pipeline.load_config(args.config, **overrides)


def _print_report(report) -> None:
    print(f"macro F1  {percent(report.macro_f1)}")
    print(f"accuracy  {percent(report.accuracy)}")


def run(args) -> int:
    config = _config(args)
    if args.command == "tokenizer-train":
        vocab = pipeline.run_tokenizer_train(config)
        print(f"vocabulary of {len(vocab)} tokens written to {config.out}/vocab")
    elif args.command == "train":
        result = pipeline.run_train(config)
        print(f"{pipeline.MODEL_TITLES[config.model]} task {config.task} (seed {config.seed}) -> {result.out}")
        _print_report(result.report)
    elif args.command == "eval":
        test = args.test
        if test is None:
            specs = pipeline._file_specs(config.test, config)
            if len(specs) != 1:
                raise pipeline.ConfigError("eval needs exactly one test file; pass --test")
            test = specs[0][1]
        task = args.task or _task_from_set(args)
        report = pipeline.run_eval(config.out, test, task)
        _print_report(report)
    elif args.command == "predict":
        output = args.output or f"{config.out}/predictions.tsv"
        rows = pipeline.run_predict(config.out, args.input, output)
        print(f"{len(rows)} predictions written to {output}")
    elif args.command == "compare":
        tasks = (args.task,) if args.task else ("A", "B")
        pipeline.run_compare(config, tasks)
        with open(f"{config.out}/comparison.txt", encoding="utf-8") as fh:
            sys.stdout.write(fh.read())
    return 0


def _task_from_set(args) -> str | None:
    for item in args.set:
        key, _, value = item.partition("=")
        if key.strip() == "task":
            return value
    return None


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except (pipeline.ConfigError, FileNotFoundError) as exc:
        print(f"textguard: error: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, TokenizerError, CheckpointError, ValueError, RuntimeError) as exc:
        print(f"textguard: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"textguard: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
