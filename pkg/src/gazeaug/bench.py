"""Experiment harness: generators x augmentation sizes x decoders x reps.

Per repetition r the master seed splits into seed_r; the dataset is
stratified 80/20, the generator fits on the training rows only, the
requested synthetic scanpaths are assembled balanced across tasks, and
every decoder trains on real-train plus synthetic and is scored on the
holdout (real-only by default; "mixed" also folds a 20% share of the
synthetic samples into the test side, emulating the ambiguous protocol
reading). Every work unit carries a pre-derived stream, so the results
are byte-identical however many workers execute them.

The size-0 baseline (the 320R row analog) is generator-independent and
is reported once per repetition under the generator id "none".
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .data import (
    Dataset,
    SplitSpec,
    SurrogateConfig,
    TaskLabel,
    assemble_scanpaths,
    fit_length_model,
    load_csv,
    simulate_surrogate,
    stratified_split,
    to_row_table,
)
from .decoders import DECODER_IDS, fit_decoder
from .errors import InsufficientRows, InvalidConfig
from .figures import emit_svg_bars, emit_svg_scatter
from .generators import GENERATOR_KINDS, FittedGenerator, GanConfig, GeneratorSpec, fit_generator
from .ksmetric import ks_report
from .rng import RngState

DEFAULT_SIZES = (0, 320, 640, 960, 1600)


@dataclass(frozen=True)
class GeneratorEntry:
    """One generator column of the experiment grid."""

    id: str
    kind: str
    config: GanConfig | None = None
    per_task: bool = False

    def spec(self) -> GeneratorSpec:
        return GeneratorSpec(kind=self.kind, config=self.config, per_task=self.per_task)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_kind: str = "surrogate"          # "surrogate" | "csv"
    surrogate: SurrogateConfig | None = None
    csv_path: str | None = None
    dataset_seed: int = 0
    generators: tuple[GeneratorEntry, ...] = (GeneratorEntry("tuned", "tuned"),)
    sizes: tuple[int, ...] = DEFAULT_SIZES
    decoders: tuple[str, ...] = DECODER_IDS
    repetitions: int = 5
    master_seed: int = 0
    train_fraction: float = 0.8
    test_composition: str = "real-only"      # "real-only" | "mixed"
    decoder_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dataset_kind not in ("surrogate", "csv"):
            raise InvalidConfig(f"unknown dataset kind {self.dataset_kind!r}")
        if self.dataset_kind == "csv" and not self.csv_path:
            raise InvalidConfig("csv dataset needs csv_path")
        if any(s < 0 for s in self.sizes):
            raise InvalidConfig("augmentation sizes must be non-negative")
        if self.repetitions < 1:
            raise InvalidConfig("repetitions must be >= 1")
        if self.test_composition not in ("real-only", "mixed"):
            raise InvalidConfig(f"unknown test composition {self.test_composition!r}")
        for d in self.decoders:
            if d not in DECODER_IDS:
                raise InvalidConfig(f"unknown decoder {d!r}")
        ids = [g.id for g in self.generators]
        if len(set(ids)) != len(ids):
            raise InvalidConfig("generator ids must be unique")
        for g in self.generators:
            if g.kind not in GENERATOR_KINDS:
                raise InvalidConfig(f"unknown generator kind {g.kind!r}")

    # -- JSON round trip ---------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "dataset_kind": self.dataset_kind,
            "dataset_seed": self.dataset_seed,
            "generators": [
                {
                    "id": g.id,
                    "kind": g.kind,
                    "per_task": g.per_task,
                    "config": None if g.config is None else _gan_config_dict(g.config),
                }
                for g in self.generators
            ],
            "sizes": list(self.sizes),
            "decoders": list(self.decoders),
            "repetitions": self.repetitions,
            "master_seed": self.master_seed,
            "train_fraction": self.train_fraction,
            "test_composition": self.test_composition,
            "decoder_params": self.decoder_params,
        }
        if self.dataset_kind == "surrogate":
            out["surrogate"] = (self.surrogate or SurrogateConfig.default()).to_dict()
        else:
            out["csv_path"] = self.csv_path
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        try:
            generators = tuple(
                GeneratorEntry(
                    id=g["id"],
                    kind=g["kind"],
                    per_task=bool(g.get("per_task", False)),
                    config=None if g.get("config") is None else _gan_config_from(g["config"]),
                )
                for g in payload["generators"]
            )
            return cls(
                dataset_kind=payload.get("dataset_kind", "surrogate"),
                surrogate=SurrogateConfig.from_dict(payload["surrogate"])
                if payload.get("surrogate") else None,
                csv_path=payload.get("csv_path"),
                dataset_seed=int(payload.get("dataset_seed", 0)),
                generators=generators,
                sizes=tuple(int(s) for s in payload.get("sizes", DEFAULT_SIZES)),
                decoders=tuple(payload.get("decoders", DECODER_IDS)),
                repetitions=int(payload.get("repetitions", 5)),
                master_seed=int(payload.get("master_seed", 0)),
                train_fraction=float(payload.get("train_fraction", 0.8)),
                test_composition=payload.get("test_composition", "real-only"),
                decoder_params=payload.get("decoder_params", {}),
            )
        except (KeyError, TypeError) as err:
            raise InvalidConfig(f"bad experiment config: {err}") from err

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with Path(path).open(encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]


def _gan_config_dict(cfg: GanConfig) -> dict:
    from dataclasses import asdict

    out = asdict(cfg)
    out["hidden"] = list(out["hidden"])
    return out


def _gan_config_from(payload: dict) -> GanConfig:
    payload = dict(payload)
    payload["hidden"] = tuple(payload.get("hidden", (128, 128)))
    return GanConfig(**payload)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellResult:
    generator_id: str
    size: int
    decoder: str
    accuracies: tuple[float, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))


class ResultTable:
    """Ordered cell results plus the config snapshot and KS reports."""

    def __init__(self, cells, config_snapshot: dict, ks_scores: dict, n_real: int):
        self.cells = tuple(sorted(
            cells, key=lambda c: (c.size > 0, c.generator_id, c.size, c.decoder)))
        self.config_snapshot = config_snapshot
        self.ks_scores = ks_scores  # {generator_id: {"per_rep": [...], "mean": float}}
        self.n_real = n_real

    def __eq__(self, other):
        return (
            isinstance(other, ResultTable)
            and self.cells == other.cells
            and self.config_snapshot == other.config_snapshot
            and self.ks_scores == other.ks_scores
            and self.n_real == other.n_real
        )

    def cell(self, row: tuple[str, int], decoder: str) -> CellResult:
        gid, size = row
        for c in self.cells:
            if (c.generator_id, c.size, c.decoder) == (gid, size, decoder):
                return c
        raise KeyError((row, decoder))

    def row_labels(self) -> list[tuple[str, int]]:
        seen = []
        for c in self.cells:
            key = (c.generator_id, c.size)
            if key not in seen:
                seen.append(key)
        return seen

    def decoder_ids(self) -> list[str]:
        configured = [d for d in self.config_snapshot.get("decoders", [])
                      if any(c.decoder == d for c in self.cells)]
        if configured:
            return configured
        seen = []
        for c in self.cells:
            if c.decoder not in seen:
                seen.append(c.decoder)
        return seen

    def row_title(self, row: tuple[str, int]) -> str:
        gid, size = row
        if size == 0:
            return f"{self.n_real}R"
        return f"{self.n_real}R + {size}S ({gid})"

    # -- emission ------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n_real": self.n_real,
            "config": self.config_snapshot,
            "ks_scores": self.ks_scores,
            "cells": [
                {
                    "generator": c.generator_id,
                    "size": c.size,
                    "decoder": c.decoder,
                    "mean": c.mean,
                    "std": c.std,
                    "accuracies": list(c.accuracies),
                    "metadata": c.metadata,
                }
                for c in self.cells
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ResultTable":
        cells = [
            CellResult(
                generator_id=c["generator"],
                size=int(c["size"]),
                decoder=c["decoder"],
                accuracies=tuple(c["accuracies"]),
                metadata=c.get("metadata", {}),
            )
            for c in payload["cells"]
        ]
        return cls(cells, payload["config"], payload["ks_scores"], int(payload["n_real"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        return cls.from_dict(json.loads(text))

    def render_markdown(self) -> str:
        decoders = self.decoder_ids()
        header = "| data | " + " | ".join(d.upper() for d in decoders) + " |"
        rule = "|" + "---|" * (len(decoders) + 1)
        lines = [header, rule]
        for row in self.row_labels():
            entries = []
            for d in decoders:
                try:
                    c = self.cell(row, d)
                    entries.append(format_mean_std(c.mean, c.std))
                except KeyError:
                    entries.append("-")
            lines.append(f"| {self.row_title(row)} | " + " | ".join(entries) + " |")
        return "\n".join(lines) + "\n"

    def render_csv(self) -> str:
        lines = ["generator,size,decoder,mean,std," + ",".join(
            f"rep{i}" for i in range(len(self.cells[0].accuracies)))]
        for c in self.cells:
            lines.append(
                f"{c.generator_id},{c.size},{c.decoder},{c.mean!r},{c.std!r},"
                + ",".join(repr(a) for a in c.accuracies)
            )
        return "\n".join(lines) + "\n"


def format_mean_std(mean: float, std: float) -> str:
    """Table-1 style percent formatting: 0.281 / 0.0039 -> "28.1 +/- 0.4"."""
    return f"{100 * mean:.1f} ± {100 * std:.1f}"


# ---------------------------------------------------------------------------
# Work units
# ---------------------------------------------------------------------------

def _load_dataset(config: ExperimentConfig) -> Dataset:
    if config.dataset_kind == "csv":
        return load_csv(config.csv_path)
    surrogate = config.surrogate or SurrogateConfig.default()
    return simulate_surrogate(surrogate, RngState(config.dataset_seed))


def _balanced_counts(size: int) -> dict[TaskLabel, int]:
    base, rem = divmod(size, len(TaskLabel))
    return {t: base + (1 if i < rem else 0) for i, t in enumerate(TaskLabel)}


def synthesize_scanpaths(fitted: FittedGenerator, train: Dataset, size: int,
                         rng: RngState) -> Dataset:
    """Sample rows and assemble `size` synthetic scanpaths, balanced
    across tasks (counts differ by at most one)."""
    counts = _balanced_counts(size)
    length_model = fit_length_model(train)
    mean_len = {t: float(np.mean(length_model[t])) for t in length_model}
    factor = 1.25
    for attempt in range(6):
        needed_rows = {
            t: int(np.ceil(counts[t] * mean_len[t] * factor)) + 8
            for t in counts if counts[t] > 0
        }
        rows = fitted.sample_rows_per_task(needed_rows, rng.split(attempt))
        try:
            return assemble_scanpaths(rows, length_model, counts, rng.split_label("assemble"))
        except InsufficientRows:
            factor *= 1.6
    raise InsufficientRows(f"could not cover {size} synthetic scanpaths")


def _evaluate_decoder(decoder: str, train: Dataset, test: Dataset, rng: RngState,
                      params: dict) -> tuple[float, dict]:
    fitted = fit_decoder(decoder, train, rng, params=params)
    meta = dict(fitted.metadata or {})
    meta["n_train"] = len(train)
    meta["n_test"] = len(test)
    return fitted.accuracy(test), meta


def _merge_datasets(a: Dataset, b: Dataset | None) -> Dataset:
    if b is None or len(b) == 0:
        return a
    return Dataset(list(a.samples) + list(b.samples), a.provenance, a.recording_rate)


def _run_unit(payload) -> dict:
    """One (repetition, generator-or-baseline) work unit; pure function."""
    config: ExperimentConfig = payload["config"]
    dataset: Dataset = payload["dataset"]
    rep: int = payload["rep"]
    entry: GeneratorEntry | None = payload["entry"]
    want_scatter: bool = payload["want_scatter"]

    seed_r = RngState(config.master_seed).split(rep)
    split_seed = seed_r.split_label("split").seed
    train, test = stratified_split(
        dataset, SplitSpec(train_fraction=config.train_fraction, seed=split_seed))
    assert not (train.identities() & test.identities())

    out: dict = {"rep": rep, "gid": None if entry is None else entry.id,
                 "cells": [], "ks": None, "scatter": None}
    if entry is None:
        # baseline: real training data only, one row per decoder
        for decoder in config.decoders:
            acc, meta = _evaluate_decoder(
                decoder, train, test,
                seed_r.split_label(f"decoder-none-0-{decoder}"),
                config.decoder_params.get(decoder, {}),
            )
            out["cells"].append(("none", 0, decoder, rep, acc, meta))
        return out

    rows = to_row_table(train)
    fitted = fit_generator(entry.spec(), rows, seed_r.split_label(f"gen-{entry.id}"))

    # synthetic-quality score against the generator's own training rows
    eval_rows = fitted.sample(rows.n_rows, seed_r.split_label(f"ks-{entry.id}"))
    out["ks"] = ks_report(rows, eval_rows).aggregate_score

    for size in config.sizes:
        if size == 0:
            continue
        synth = synthesize_scanpaths(
            fitted, train, size, seed_r.split_label(f"synth-{entry.id}-{size}"))
        assert all(s.participant_id == "synthetic" for s in synth.samples)
        if config.test_composition == "mixed":
            synth_train, synth_test = stratified_split(
                synth, SplitSpec(train_fraction=config.train_fraction,
                                 seed=seed_r.split_label(f"mix-{entry.id}-{size}").seed))
        else:
            synth_train, synth_test = synth, None
        train_aug = _merge_datasets(train, synth_train)
        test_eval = _merge_datasets(test, synth_test) if synth_test else test
        for decoder in config.decoders:
            acc, meta = _evaluate_decoder(
                decoder, train_aug, test_eval,
                seed_r.split_label(f"decoder-{entry.id}-{size}-{decoder}"),
                config.decoder_params.get(decoder, {}),
            )
            out["cells"].append((entry.id, size, decoder, rep, acc, meta))
        if want_scatter and size == max(config.sizes):
            out["scatter"] = synth
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1):
    """Execute the grid; returns (ResultTable, real dataset, scatter synth).

    Deterministic for a fixed config and master seed, independent of
    the worker count.
    """
    dataset = _load_dataset(config)
    counts = dataset.counts_per_task()
    missing = [int(t) for t in TaskLabel if counts[t] == 0]
    if missing:
        raise InvalidConfig(f"benchmark dataset lacks tasks {missing}")

    units = []
    any_synth = max(config.sizes, default=0) > 0
    for rep in range(config.repetitions):
        if 0 in config.sizes:
            units.append({"config": config, "dataset": dataset, "rep": rep,
                          "entry": None, "want_scatter": False})
        if any_synth:
            for gi, entry in enumerate(config.generators):
                units.append({"config": config, "dataset": dataset, "rep": rep,
                              "entry": entry,
                              "want_scatter": rep == 0 and gi == 0})

    if workers <= 1:
        results = [_run_unit(u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_unit, units))

    by_cell: dict[tuple[str, int, str], dict[int, float]] = {}
    meta_by_cell: dict[tuple[str, int, str], dict] = {}
    ks_by_gen: dict[str, dict[int, float]] = {}
    scatter = None
    for res in results:
        for gid, size, decoder, rep, acc, meta in res["cells"]:
            by_cell.setdefault((gid, size, decoder), {})[rep] = acc
            meta_by_cell.setdefault((gid, size, decoder), meta)
        if res["ks"] is not None:
            ks_by_gen.setdefault(res["gid"], {})[res["rep"]] = res["ks"]
        if res["scatter"] is not None:
            scatter = res["scatter"]

    cells = [
        CellResult(generator_id=gid, size=size, decoder=decoder,
                   accuracies=tuple(accs[r] for r in sorted(accs)),
                   metadata=meta_by_cell[(gid, size, decoder)])
        for (gid, size, decoder), accs in by_cell.items()
    ]
    ks_scores = {
        gid: {"per_rep": [reps[r] for r in sorted(reps)],
              "mean": float(np.mean(list(reps.values())))}
        for gid, reps in sorted(ks_by_gen.items())
    }
    table = ResultTable(cells, config.to_dict(), ks_scores, n_real=len(dataset))
    return table, dataset, scatter


def emit_artifacts(table: ResultTable, out_dir, real: Dataset | None = None,
                   scatter_synth: Dataset | None = None) -> dict:
    """Write results.json/csv/md plus figures into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    paths["json"] = out_dir / "results.json"
    paths["json"].write_text(table.to_json(), encoding="utf-8")
    paths["csv"] = out_dir / "results.csv"
    paths["csv"].write_text(table.render_csv(), encoding="utf-8")
    paths["md"] = out_dir / "results.md"
    paths["md"].write_text(table.render_markdown(), encoding="utf-8")
    paths["bars"] = out_dir / "figure_bars.svg"
    emit_svg_bars(table, paths["bars"])
    if real is not None and scatter_synth is not None and len(scatter_synth) > 0:
        paths["scatter"] = out_dir / "figure_scatter.svg"
        emit_svg_scatter(real, scatter_synth, paths["scatter"])
    return paths


def run_directory(base_dir, config: ExperimentConfig, timestamp: bool = False) -> Path:
    """Run directory named by the config hash, optionally timestamped."""
    name = config.content_hash()
    if timestamp:
        name += "-" + datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    return Path(base_dir) / name
