"""Command-line surface.

Exit codes: 0 success, 1 usage error, 2 data/schema/config error,
3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .data import (
    CSV_HEADER,
    SplitSpec,
    SurrogateConfig,
    load_csv,
    load_row_table_csv,
    simulate_surrogate,
    stratified_split,
    to_row_table,
    write_csv,
    write_row_table_csv,
)
from .decoders import DECODER_IDS, fit_decoder
from .errors import (
    DomainError,
    GazeAugError,
    NotPositiveDefinite,
    NumericalDivergence,
)
from .generators import (
    GENERATOR_KINDS,
    GanConfig,
    GeneratorSpec,
    fit_generator,
    load_generator,
    save_generator,
)
from .ksmetric import ks_report
from .rng import RngState

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_NUMERICAL_ERRORS = (NotPositiveDefinite, NumericalDivergence, DomainError)


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gazeaug",
                     description="Synthetic-data-augmented eye-movement task decoding.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a surrogate dataset CSV")
    p.add_argument("--config", help="surrogate config JSON (default: built-in separable)")
    p.add_argument("--preset", choices=("default", "overlapping"), default="default",
                   help="built-in preset used when --config is absent")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ingest", help="validate a fixation CSV and summarize it")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--validate", action="store_true",
                   help="accepted for compatibility; validation always runs")

    p = sub.add_parser("fit-gen", help="fit a synthetic-data generator")
    p.add_argument("--kind", choices=GENERATOR_KINDS, required=True)
    p.add_argument("--data", required=True, help="fixation CSV (scanpath format)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--per-task", action="store_true",
                   help="fit one model per task instead of one conditional model")
    p.add_argument("--gan-config", help="GanConfig overrides as a JSON file")

    p = sub.add_parser("sample", help="sample synthetic rows from a fitted generator")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--task", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="row-table CSV")

    p = sub.add_parser("evaluate-ks", help="two-sample KS quality report")
    p.add_argument("--real", required=True, help="scanpath or row-table CSV")
    p.add_argument("--synth", required=True, help="scanpath or row-table CSV")
    p.add_argument("--out", required=True, help="JSON report path")

    p = sub.add_parser("decode", help="train a decoder and report holdout accuracy")
    p.add_argument("--train", required=True, help="scanpath CSV")
    p.add_argument("--aug", help="synthetic scanpath CSV appended to the training split")
    p.add_argument("--decoder", choices=DECODER_IDS, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--decoder-params", help="decoder parameter overrides as JSON text")

    p = sub.add_parser("bench", help="run the full experiment grid")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timestamp", action="store_true",
                   help="append a UTC timestamp to the run directory name")

    p = sub.add_parser("plot", help="re-render the accuracy bars from results.json")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True, help="SVG path")

    return parser


def _load_any_table(path):
    """Accept either the scanpath CSV or the row-table CSV."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header == ",".join(CSV_HEADER):
        return to_row_table(load_csv(path))
    return load_row_table_csv(path)


def _cmd_simulate(args) -> int:
    if args.config:
        config = SurrogateConfig.from_json_file(args.config)
    elif args.preset == "overlapping":
        config = SurrogateConfig.overlapping()
    else:
        config = SurrogateConfig.default()
    dataset = simulate_surrogate(config, RngState(args.seed))
    write_csv(dataset, args.out)
    print(f"wrote {len(dataset)} samples ({dataset.total_fixations()} fixations) to {args.out}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    dataset = load_csv(args.input)
    counts = dataset.counts_per_task()
    print(f"{args.input}: {len(dataset)} samples, {dataset.total_fixations()} fixations")
    for task, count in sorted(counts.items()):
        print(f"  task {int(task)} ({task.name.lower()}): {count} samples")
    lengths = [len(s) for s in dataset.samples]
    print(f"  scanpath length: min {min(lengths)}, max {max(lengths)}")
    return EXIT_OK


def _cmd_fit_gen(args) -> int:
    table = to_row_table(load_csv(args.data))
    config = None
    if args.gan_config:
        with open(args.gan_config, encoding="utf-8") as fh:
            payload = json.load(fh)
        payload["hidden"] = tuple(payload.get("hidden", (128, 128)))
        config = GanConfig(**payload)
    spec = GeneratorSpec(kind=args.kind, config=config, per_task=args.per_task)
    fitted = fit_generator(spec, table, RngState(args.seed))
    save_generator(args.out, fitted)
    print(f"fitted {args.kind} on {table.n_rows} rows -> {args.out}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    fitted = load_generator(args.model)
    rows = fitted.sample(args.n, RngState(args.seed), condition=args.task)
    write_row_table_csv(rows, args.out)
    print(f"wrote {rows.n_rows} rows to {args.out}")
    return EXIT_OK


def _cmd_evaluate_ks(args) -> int:
    real = _load_any_table(args.real)
    synth = _load_any_table(args.synth)
    report = ks_report(real, synth)
    Path(args.out).write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(report.render_text())
    return EXIT_OK


def _cmd_decode(args) -> int:
    dataset = load_csv(args.train)
    train, test = stratified_split(
        dataset, SplitSpec(train_fraction=args.train_fraction, seed=args.seed))
    if args.aug:
        aug = load_csv(args.aug)
        train = bench_mod._merge_datasets(train, aug)
    params = json.loads(args.decoder_params) if args.decoder_params else {}
    fitted = fit_decoder(args.decoder, train, RngState(args.seed), params=params)
    acc = fitted.accuracy(test)
    payload = {
        "decoder": args.decoder,
        "train_samples": len(train),
        "test_samples": len(test),
        "holdout_accuracy": acc,
        "metadata": fitted.metadata or {},
        "seed": args.seed,
    }
    Path(args.out).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                              encoding="utf-8")
    print(f"{args.decoder}: holdout accuracy {acc:.3f} "
          f"({len(train)} train / {len(test)} test)")
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = bench_mod.ExperimentConfig.from_json_file(args.config)
    out_dir = bench_mod.run_directory(args.out_dir, config, timestamp=args.timestamp)
    table, real, scatter = bench_mod.run_experiment(config, workers=args.workers)
    paths = bench_mod.emit_artifacts(table, out_dir, real=real, scatter_synth=scatter)
    print(table.render_markdown())
    for kind, path in sorted(paths.items()):
        print(f"{kind}: {path}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    table = bench_mod.ResultTable.from_json(Path(args.results).read_text(encoding="utf-8"))
    from .figures import emit_svg_bars

    emit_svg_bars(table, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "ingest": _cmd_ingest,
    "fit-gen": _cmd_fit_gen,
    "sample": _cmd_sample,
    "evaluate-ks": _cmd_evaluate_ks,
    "decode": _cmd_decode,
    "bench": _cmd_bench,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _NUMERICAL_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except GazeAugError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
