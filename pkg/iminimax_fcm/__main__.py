import os
import sys
from argparse import ArgumentParser
from pathlib import Path

from dotenv import load_dotenv
from loguru import logger
from pydantic import ValidationError

from iminimax_fcm.core import DataError, InvalidConfigError, NumericalError
from iminimax_fcm.datagen import generate, load_synthetic_spec
from iminimax_fcm.dataio import load_labels, write_multiview
from iminimax_fcm.experiment import emit_table, load_experiment_spec, run_experiment
from iminimax_fcm.metrics import accuracy, f_measure, nmi

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="iminimax-fcm", description="Incremental multi-view fuzzy clustering experiments.")
    parser.add_argument("-l", "--log-level", default=os.getenv("IMFCM_LOG_LEVEL", "INFO"),
                        help="Log level for stderr (DEBUG shows every iteration), defaults to $IMFCM_LOG_LEVEL or INFO")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run an experiment spec file and print the result table")
    run.add_argument("spec", type=Path, help="Experiment spec file (key = value per line)")
    run.add_argument("-a", "--algorithms", help="Comma separated algorithms, e.g. IminimaxFCM1,OFCM")
    run.add_argument("-c", "--chunk-fractions", help="Comma separated chunk fractions, e.g. 0.05,0.25")
    run.add_argument("-t", "--trials", type=int, help="Number of trials per cell")
    run.add_argument("-s", "--base-seed", type=int, help="Seed of trial 0; trial t uses base seed + t")
    run.add_argument("-k", type=int, help="Number of clusters")
    run.add_argument("-m", type=float, help="Fuzzifier, must be greater than 1")
    run.add_argument("-g", "--gamma", type=float, help="View weight exponent in (0, 1)")
    run.add_argument("--epsilon", type=float, help="Stop when the membership moves less than this")
    run.add_argument("--max-iters", type=int, help="Iteration cap per clustering run")
    run.add_argument("--normalize", action="store_true", default=None, help="z-score every feature before clustering")
    run.add_argument("--weighted-phase2", action="store_true", default=None,
                     help="Weight pooled centroids by their cluster mass in the final minimax pass")
    run.add_argument("-w", "--workers", type=int, default=os.getenv("IMFCM_WORKERS"),
                     help="Threads for independent chunks, defaults to $IMFCM_WORKERS or 1")
    run.add_argument("--sample-std", dest="population_std", action="store_false", default=None,
                     help="Report the n-1 sample standard deviation instead of the population one")
    run.add_argument("-f", "--format", default="plain", choices=["plain", "csv", "json"], help="Table format")
    run.add_argument("-o", "--output", type=Path, help="Write the table here instead of stdout")
    run.add_argument("--include-runtime", action="store_true", help="Add mean runtimes (the output is then not reproducible)")

    gen = subparsers.add_parser("generate", help="Write a synthetic dataset described by a spec file")
    gen.add_argument("spec", type=Path, help="Synthetic spec file (key = value per line)")
    gen.add_argument("-o", "--output-dir", type=Path, default=Path("synthetic"), help="Folder for the view and label files")
    gen.add_argument("-s", "--seed", type=int, help="Overrides the spec file seed")

    evaluate = subparsers.add_parser("eval", help="Score a label file against a ground-truth label file")
    evaluate.add_argument("labels", type=Path, help="Produced labels, one per line")
    evaluate.add_argument("truth", type=Path, help="Ground-truth classes, one per line")

    return parser


def _run(args) -> None:
    overrides = {
        "algorithms": args.algorithms,
        "chunk_fractions": args.chunk_fractions,
        "trials": args.trials,
        "base_seed": args.base_seed,
        "k": args.k,
        "m": args.m,
        "gamma": args.gamma,
        "epsilon": args.epsilon,
        "max_iters": args.max_iters,
        "normalize": args.normalize,
        "weighted_phase2": args.weighted_phase2,
        "n_workers": args.workers,
        "population_std": args.population_std,
    }
    spec = load_experiment_spec(args.spec, overrides)
    text = emit_table(run_experiment(spec), args.format, args.include_runtime)
    if args.output:
        args.output.write_text(text, encoding="utf-8")
        logger.info(f"Result table written to {args.output}")
    else:
        sys.stdout.write(text)


def _generate(args) -> None:
    spec = load_synthetic_spec(args.spec, {"seed": args.seed})
    for path in write_multiview(generate(spec), args.output_dir):
        print(path)


def _evaluate(args) -> None:
    labels = load_labels(args.labels)
    truth = load_labels(args.truth)
    if labels.shape != truth.shape:
        raise DataError(f"{args.labels} has {labels.size} labels but {args.truth} has {truth.size}")
    print(f"accuracy  {accuracy(labels, truth):.4f}")
    print(f"nmi       {nmi(labels, truth):.4f}")
    print(f"f_measure {f_measure(labels, truth):.4f}")


def main(argv=None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)

    logger.remove()
    logger.add(sys.stderr, level=args.log_level.upper())

    commands = {"run": _run, "generate": _generate, "eval": _evaluate}
    try:
        commands[args.command](args)
    except (InvalidConfigError, ValidationError) as e:
        logger.error(e)
        return EXIT_CONFIG
    except DataError as e:
        logger.error(e)
        return EXIT_DATA
    except NumericalError as e:
        logger.error(e)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
