"""Labeled fixation sequences: ingestion, simulation, splitting, featurization.

A scanpath is an ordered fixation sequence recorded while one participant
viewed one image under one task instruction; it is the unit of
classification. Fixations carry four features (x, y, duration, pupil)
stored internally as an (L, 4) float64 array in that channel order.

The real dataset this pipeline targets is private, so the module offers
two sources: a documented CSV format for dropping in real recordings,
and a surrogate simulator whose per-task distributions are explicit
configuration.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import (
    EmptyGroup,
    InsufficientRows,
    InvalidConfig,
    NonFiniteValue,
    SchemaMismatch,
    TooFewSamples,
    UnknownTask,
)
from .rng import RngState

CHANNELS = ("x", "y", "duration", "pupil")

CSV_HEADER = ["participant_id", "image_id", "task", "fix_index", "x", "y", "duration_ms", "pupil"]

ROW_CSV_HEADER = ["x", "y", "duration", "pupil", "task"]


class TaskLabel(IntEnum):
    """The four viewing instructions of the task-decoding problem."""

    DECADE = 1
    MEMORIZE = 2
    PEOPLE = 3
    WEALTH = 4


@dataclass(frozen=True)
class FixationRecord:
    """One fixation: screen position, duration (ms), pupil diameter."""

    x: float
    y: float
    duration: float
    pupil: float

    def __post_init__(self):
        vals = (self.x, self.y, self.duration, self.pupil)
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteValue(f"non-finite fixation fields: {vals}")
        if self.duration <= 0:
            raise NonFiniteValue(f"fixation duration must be > 0, got {self.duration}")
        if self.pupil <= 0:
            raise NonFiniteValue(f"pupil diameter must be > 0, got {self.pupil}")


class ScanpathSample:
    """One labeled scanpath; fixations kept as an (L, 4) float64 array."""

    __slots__ = ("participant_id", "image_id", "task", "fixations")

    def __init__(self, participant_id: str, image_id: str, task: TaskLabel, fixations):
        if isinstance(fixations, np.ndarray):
            arr = np.array(fixations, dtype=np.float64, copy=True)
        else:
            arr = np.array(
                [[f.x, f.y, f.duration, f.pupil] for f in fixations], dtype=np.float64
            ).reshape(-1, 4)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise SchemaMismatch(f"fixation array must be (L, 4), got {arr.shape}")
        if arr.shape[0] == 0:
            raise EmptyGroup(
                f"scanpath ({participant_id}, {image_id}, task {int(task)}) has no fixations"
            )
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("non-finite value in fixation array")
        if np.any(arr[:, 2] <= 0) or np.any(arr[:, 3] <= 0):
            raise NonFiniteValue("durations and pupil diameters must be > 0")
        self.participant_id = str(participant_id)
        self.image_id = str(image_id)
        self.task = TaskLabel(task)
        self.fixations = arr
        self.fixations.setflags(write=False)

    def __len__(self) -> int:
        return self.fixations.shape[0]

    @property
    def identity(self) -> tuple[str, str, int]:
        return (self.participant_id, self.image_id, int(self.task))

    def records(self) -> list[FixationRecord]:
        return [FixationRecord(*row) for row in self.fixations]

    def __eq__(self, other):
        return (
            isinstance(other, ScanpathSample)
            and self.identity == other.identity
            and np.array_equal(self.fixations, other.fixations)
        )

    def __hash__(self):
        return hash((self.identity, self.fixations.tobytes()))

    def __repr__(self):
        return (
            f"ScanpathSample({self.participant_id!r}, {self.image_id!r}, "
            f"task={int(self.task)}, n_fix={len(self)})"
        )


class Dataset:
    """An immutable collection of scanpath samples."""

    __slots__ = ("samples", "provenance", "recording_rate")

    def __init__(self, samples, provenance: str = "ingested", recording_rate: float = 1000.0):
        if provenance not in ("ingested", "surrogate", "synthetic"):
            raise InvalidConfig(f"unknown provenance {provenance!r}")
        self.samples = tuple(samples)
        self.provenance = provenance
        self.recording_rate = float(recording_rate)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and self.provenance == other.provenance
            and self.recording_rate == other.recording_rate
            and self.samples == other.samples
        )

    def counts_per_task(self) -> dict[TaskLabel, int]:
        counts = {t: 0 for t in TaskLabel}
        for s in self.samples:
            counts[s.task] += 1
        return counts

    def identities(self) -> set[tuple[str, str, int]]:
        return {s.identity for s in self.samples}

    def subset(self, indices) -> "Dataset":
        return Dataset(
            [self.samples[i] for i in indices], self.provenance, self.recording_rate
        )

    def total_fixations(self) -> int:
        return sum(len(s) for s in self.samples)


@dataclass(frozen=True)
class SplitSpec:
    """Holdout split parameters; defaults mirror an 80/20 stratified split."""

    train_fraction: float = 0.8
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidConfig(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str  # "continuous" | "discrete"
    categories: tuple = ()  # recorded category set, discrete columns only


class RowTable:
    """Flat per-fixation tabular view consumed by generators and KS."""

    __slots__ = ("schema", "columns")

    def __init__(self, schema, columns):
        self.schema = tuple(schema)
        cols = []
        n = None
        for spec, col in zip(self.schema, columns, strict=True):
            arr = np.array(col, dtype=np.float64, copy=True).ravel()
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise SchemaMismatch("row-table columns differ in length")
            if spec.kind == "discrete":
                bad = set(np.unique(arr)) - set(spec.categories)
                if bad:
                    raise SchemaMismatch(
                        f"column {spec.name!r} holds values outside its category set: {bad}"
                    )
            arr.setflags(write=False)
            cols.append(arr)
        self.columns = tuple(cols)

    @property
    def n_rows(self) -> int:
        return self.columns[0].size if self.columns else 0

    def column(self, key) -> np.ndarray:
        if isinstance(key, str):
            key = self.column_index(key)
        return self.columns[key]

    def column_index(self, name: str) -> int:
        for i, spec in enumerate(self.schema):
            if spec.name == name:
                return i
        raise SchemaMismatch(f"no column named {name!r}")

    def select_rows(self, mask_or_indices) -> "RowTable":
        return RowTable(self.schema, [c[mask_or_indices] for c in self.columns])

    def __eq__(self, other):
        return (
            isinstance(other, RowTable)
            and self.schema == other.schema
            and all(np.array_equal(a, b) for a, b in zip(self.columns, other.columns))
        )


# ---------------------------------------------------------------------------
# CSV ingestion and emission
# ---------------------------------------------------------------------------

def load_csv(path) -> Dataset:
    """Load a fixation CSV into a Dataset.

    The file must carry the documented header
    ``participant_id,image_id,task,fix_index,x,y,duration_ms,pupil``;
    one row per fixation, task in 1..4, fix_index 0-based and contiguous
    within each (participant_id, image_id, task) group.
    """
    path = Path(path)
    groups: dict[tuple[str, str, int], list[tuple[int, float, float, float, float]]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise SchemaMismatch(
                f"{path}: header {header!r} does not match {','.join(CSV_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise SchemaMismatch(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields")
            pid, img = row[0], row[1]
            try:
                task_val = int(row[2])
            except ValueError:
                raise UnknownTask(f"{path}:{lineno}: task {row[2]!r} is not an integer",
                                  line=lineno) from None
            if task_val not in (1, 2, 3, 4):
                raise UnknownTask(f"{path}:{lineno}: task {task_val} outside 1..4", line=lineno)
            try:
                fix_index = int(row[3])
                vals = [float(v) for v in row[4:8]]
            except ValueError:
                raise SchemaMismatch(f"{path}:{lineno}: non-numeric field") from None
            for colname, v in zip(CSV_HEADER[4:], vals):
                if not math.isfinite(v):
                    raise NonFiniteValue(
                        f"{path}:{lineno}: non-finite {colname}", line=lineno, column=colname
                    )
            groups.setdefault((pid, img, task_val), []).append((fix_index, *vals))

    samples = []
    for (pid, img, task_val), rows in groups.items():
        rows.sort(key=lambda r: r[0])
        indices = [r[0] for r in rows]
        if indices != list(range(len(rows))):
            raise SchemaMismatch(
                f"{path}: fix_index not 0-based contiguous in group ({pid}, {img}, {task_val})"
            )
        arr = np.array([r[1:] for r in rows], dtype=np.float64)
        samples.append(ScanpathSample(pid, img, TaskLabel(task_val), arr))
    if not samples:
        raise EmptyGroup(f"{path}: no fixation rows")
    return Dataset(samples, provenance="ingested")


def write_csv(dataset: Dataset, path) -> None:
    """Write a Dataset in the load_csv format (full float precision)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for s in dataset.samples:
            for i, (x, y, dur, pup) in enumerate(s.fixations):
                writer.writerow(
                    [s.participant_id, s.image_id, int(s.task), i,
                     repr(float(x)), repr(float(y)), repr(float(dur)), repr(float(pup))]
                )


def write_row_table_csv(table: RowTable, path) -> None:
    """Write a RowTable as ``x,y,duration,pupil,task`` CSV."""
    path = Path(path)
    names = [spec.name for spec in table.schema]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(table.n_rows):
            row = []
            for spec, col in zip(table.schema, table.columns):
                v = col[i]
                row.append(str(int(v)) if spec.kind == "discrete" else repr(float(v)))
            writer.writerow(row)


def load_row_table_csv(path) -> RowTable:
    """Load a ``x,y,duration,pupil,task`` CSV written by write_row_table_csv."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ROW_CSV_HEADER:
            raise SchemaMismatch(f"{path}: header {header!r} does not match row-table schema")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise EmptyGroup(f"{path}: no rows")
    arr = np.asarray(rows, dtype=np.float64)
    tasks = arr[:, 4]
    if not np.all(np.isin(tasks, (1.0, 2.0, 3.0, 4.0))):
        raise UnknownTask(f"{path}: task column holds values outside 1..4")
    schema = [
        ColumnSpec("x", "continuous"),
        ColumnSpec("y", "continuous"),
        ColumnSpec("duration", "continuous"),
        ColumnSpec("pupil", "continuous"),
        ColumnSpec("task", "discrete", tuple(sorted(set(float(t) for t in tasks)))),
    ]
    return RowTable(schema, [arr[:, i] for i in range(5)])


# ---------------------------------------------------------------------------
# Surrogate simulator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpatialComponent:
    weight: float
    mean_x: float
    mean_y: float
    std_x: float
    std_y: float


@dataclass(frozen=True)
class TaskParams:
    """Sampling distributions for one task's fixations."""

    spatial: tuple[SpatialComponent, ...]
    duration_log_mean: float
    duration_log_std: float
    pupil_mean: float
    pupil_std: float

    def __post_init__(self):
        if not self.spatial:
            raise InvalidConfig("each task needs at least one spatial component")
        wsum = sum(c.weight for c in self.spatial)
        if abs(wsum - 1.0) > 1e-9:
            raise InvalidConfig(f"spatial weights must sum to 1, got {wsum}")
        for c in self.spatial:
            if c.weight <= 0 or c.std_x <= 0 or c.std_y <= 0:
                raise InvalidConfig("spatial weights and stds must be positive")
        if self.duration_log_std <= 0 or self.pupil_std <= 0 or self.pupil_mean <= 0:
            raise InvalidConfig("duration/pupil scales must be positive")


@dataclass(frozen=True)
class SurrogateConfig:
    """Parameters of the surrogate eye-movement simulator.

    The defaults produce the paper-shaped 16 x 20 x 4 = 320-sample
    layout with clearly task-separable distributions; ``overlapping()``
    gives a preset where tasks share most of their spatial mass.
    """

    participants: int = 16
    images: int = 20
    fixation_count_range: tuple[int, int] = (8, 18)
    tasks: dict = field(default_factory=dict)  # TaskLabel -> TaskParams

    def __post_init__(self):
        if self.participants <= 0 or self.images <= 0:
            raise InvalidConfig("participants and images must be positive")
        lo, hi = self.fixation_count_range
        if lo < 1 or hi < lo:
            raise InvalidConfig(f"bad fixation_count_range {self.fixation_count_range}")
        if not self.tasks:
            object.__setattr__(self, "tasks", _default_task_params())
        if set(self.tasks) != set(TaskLabel):
            raise InvalidConfig("tasks must provide parameters for all four labels")

    @classmethod
    def default(cls) -> "SurrogateConfig":
        return cls()

    @classmethod
    def overlapping(cls, participants: int = 16, images: int = 20,
                    fixation_count_range: tuple[int, int] = (6, 14)) -> "SurrogateConfig":
        return cls(participants=participants, images=images,
                   fixation_count_range=fixation_count_range,
                   tasks=_overlapping_task_params())

    def to_dict(self) -> dict:
        return {
            "participants": self.participants,
            "images": self.images,
            "fixation_count_range": list(self.fixation_count_range),
            "tasks": {
                str(int(t)): {
                    "spatial": [
                        {"weight": c.weight, "mean": [c.mean_x, c.mean_y],
                         "std": [c.std_x, c.std_y]}
                        for c in p.spatial
                    ],
                    "duration_log_mean": p.duration_log_mean,
                    "duration_log_std": p.duration_log_std,
                    "pupil_mean": p.pupil_mean,
                    "pupil_std": p.pupil_std,
                }
                for t, p in sorted(self.tasks.items())
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SurrogateConfig":
        try:
            tasks = {}
            for key, spec in payload["tasks"].items():
                comps = tuple(
                    SpatialComponent(c["weight"], c["mean"][0], c["mean"][1],
                                     c["std"][0], c["std"][1])
                    for c in spec["spatial"]
                )
                tasks[TaskLabel(int(key))] = TaskParams(
                    spatial=comps,
                    duration_log_mean=spec["duration_log_mean"],
                    duration_log_std=spec["duration_log_std"],
                    pupil_mean=spec["pupil_mean"],
                    pupil_std=spec["pupil_std"],
                )
            return cls(
                participants=int(payload["participants"]),
                images=int(payload["images"]),
                fixation_count_range=tuple(payload["fixation_count_range"]),
                tasks=tasks,
            )
        except (KeyError, TypeError, ValueError) as err:
            raise InvalidConfig(f"bad surrogate config: {err}") from err

    @classmethod
    def from_json_file(cls, path) -> "SurrogateConfig":
        with Path(path).open(encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _default_task_params() -> dict:
    # Quadrant centers on a 1280 x 1024 screen, plus a shared weak
    # center-bias component so the marginals are genuinely multimodal.
    center = SpatialComponent(0.25, 640.0, 512.0, 150.0, 130.0)
    quads = {
        TaskLabel.DECADE: (320.0, 256.0),
        TaskLabel.MEMORIZE: (960.0, 256.0),
        TaskLabel.PEOPLE: (320.0, 768.0),
        TaskLabel.WEALTH: (960.0, 768.0),
    }
    durations = {
        TaskLabel.DECADE: math.log(180.0),
        TaskLabel.MEMORIZE: math.log(260.0),
        TaskLabel.PEOPLE: math.log(210.0),
        TaskLabel.WEALTH: math.log(240.0),
    }
    pupils = {
        TaskLabel.DECADE: 3.4,
        TaskLabel.MEMORIZE: 3.8,
        TaskLabel.PEOPLE: 3.0,
        TaskLabel.WEALTH: 3.6,
    }
    return {
        t: TaskParams(
            spatial=(SpatialComponent(0.75, mx, my, 90.0, 80.0), center),
            duration_log_mean=durations[t],
            duration_log_std=0.35,
            pupil_mean=pupils[t],
            pupil_std=0.25,
        )
        for t, (mx, my) in quads.items()
    }


def _overlapping_task_params() -> dict:
    # Tasks share a dominant center component; the per-task components
    # sit close together, so decoders land mid-range instead of ceiling.
    shared = SpatialComponent(0.58, 640.0, 512.0, 175.0, 150.0)
    offsets = {
        TaskLabel.DECADE: (545.0, 444.0),
        TaskLabel.MEMORIZE: (735.0, 444.0),
        TaskLabel.PEOPLE: (545.0, 580.0),
        TaskLabel.WEALTH: (735.0, 580.0),
    }
    durations = {
        TaskLabel.DECADE: math.log(200.0),
        TaskLabel.MEMORIZE: math.log(212.0),
        TaskLabel.PEOPLE: math.log(204.0),
        TaskLabel.WEALTH: math.log(208.0),
    }
    pupils = {
        TaskLabel.DECADE: 3.40,
        TaskLabel.MEMORIZE: 3.47,
        TaskLabel.PEOPLE: 3.42,
        TaskLabel.WEALTH: 3.45,
    }
    return {
        t: TaskParams(
            spatial=(SpatialComponent(0.42, mx, my, 160.0, 138.0), shared),
            duration_log_mean=durations[t],
            duration_log_std=0.40,
            pupil_mean=pupils[t],
            pupil_std=0.30,
        )
        for t, (mx, my) in offsets.items()
    }


def simulate_surrogate(config: SurrogateConfig, rng: RngState) -> Dataset:
    """Generate a surrogate dataset of P x I labeled scanpaths.

    Each participant views each image exactly once; the task for cell
    (p, i) rotates as ((p + i) mod 4) + 1 so tasks stay balanced (80
    per task in the default 16 x 20 layout). Every sample owns a child
    stream derived from its cell index, so the output is byte-identical
    for equal (config, seed) regardless of iteration order.
    """
    lo, hi = config.fixation_count_range
    samples = []
    for p in range(config.participants):
        for i in range(config.images):
            task = TaskLabel(((p + i) % 4) + 1)
            gen = rng.split(p * config.images + i).generator()
            params = config.tasks[task]
            n_fix = int(gen.integers(lo, hi + 1))
            weights = np.array([c.weight for c in params.spatial])
            comp_idx = gen.choice(len(params.spatial), size=n_fix, p=weights)
            arr = np.empty((n_fix, 4))
            for j, ci in enumerate(comp_idx):
                c = params.spatial[ci]
                arr[j, 0] = gen.normal(c.mean_x, c.std_x)
                arr[j, 1] = gen.normal(c.mean_y, c.std_y)
            arr[:, 2] = np.exp(gen.normal(params.duration_log_mean,
                                          params.duration_log_std, size=n_fix))
            arr[:, 3] = np.maximum(gen.normal(params.pupil_mean, params.pupil_std,
                                              size=n_fix), 1e-3)
            samples.append(ScanpathSample(f"p{p:02d}", f"img{i:02d}", task, arr))
    return Dataset(samples, provenance="surrogate")


# ---------------------------------------------------------------------------
# Splitting and featurization
# ---------------------------------------------------------------------------

def stratified_split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition a dataset into train and test sets.

    Stratified mode shuffles within each task and keeps per-task train
    counts within one sample of the exact train_fraction proportion,
    with at least one sample on each side.
    """
    gen = RngState(spec.seed).generator()

    def cut(n: int) -> int:
        if n < 2:
            raise TooFewSamples(f"need at least 2 samples per stratum, got {n}")
        return int(np.clip(round(spec.train_fraction * n), 1, n - 1))

    train_idx: list[int] = []
    test_idx: list[int] = []
    if spec.stratified:
        for task in TaskLabel:
            idx = [i for i, s in enumerate(dataset.samples) if s.task == task]
            if not idx:
                continue
            perm = gen.permutation(len(idx))
            k = cut(len(idx))
            train_idx.extend(idx[j] for j in perm[:k])
            test_idx.extend(idx[j] for j in perm[k:])
    else:
        perm = gen.permutation(len(dataset))
        k = cut(len(dataset))
        train_idx = [int(j) for j in perm[:k]]
        test_idx = [int(j) for j in perm[k:]]
    train_idx.sort()
    test_idx.sort()
    return dataset.subset(train_idx), dataset.subset(test_idx)


def to_row_table(dataset: Dataset) -> RowTable:
    """Flatten a dataset to one row per fixation plus the task column."""
    if len(dataset) == 0:
        raise EmptyGroup("cannot build a row table from an empty dataset")
    feats = np.concatenate([s.fixations for s in dataset.samples], axis=0)
    tasks = np.concatenate(
        [np.full(len(s), float(int(s.task))) for s in dataset.samples]
    )
    categories = tuple(sorted(set(tasks.tolist())))
    schema = [
        ColumnSpec("x", "continuous"),
        ColumnSpec("y", "continuous"),
        ColumnSpec("duration", "continuous"),
        ColumnSpec("pupil", "continuous"),
        ColumnSpec("task", "discrete", categories),
    ]
    return RowTable(schema, [feats[:, 0], feats[:, 1], feats[:, 2], feats[:, 3], tasks])


def to_fixed_length(sample: ScanpathSample, T: int, truncate: str = "tail",
                    pad: str = "zero") -> tuple[np.ndarray, np.ndarray]:
    """Shape one scanpath into a (4, T) channel matrix plus validity mask.

    Sequences longer than T lose their tail; shorter ones gain zero
    columns at the tail. The mask marks real fixations with 1.
    """
    if T < 1:
        raise InvalidConfig(f"T must be >= 1, got {T}")
    if truncate != "tail":
        raise InvalidConfig(f"unsupported truncate policy {truncate!r}")
    if pad != "zero":
        raise InvalidConfig(f"unsupported pad policy {pad!r}")
    L = len(sample)
    out = np.zeros((4, T))
    keep = min(L, T)
    out[:, :keep] = sample.fixations[:keep].T
    mask = np.zeros(T)
    mask[:keep] = 1.0
    return out, mask


def featurize_summary(sample: ScanpathSample) -> np.ndarray:
    """20-dim summary vector: per channel (x, y, duration, pupil) the
    statistics (mean, population std, min, max, median), in that order."""
    arr = sample.fixations
    stats = [
        arr.mean(axis=0),
        arr.std(axis=0),
        arr.min(axis=0),
        arr.max(axis=0),
        np.median(arr, axis=0),
    ]
    # channel-major: [x-mean, x-std, x-min, x-max, x-median, y-mean, ...]
    return np.stack(stats, axis=1).reshape(-1)


def summary_matrix(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Stack featurize_summary over a dataset; labels as 0-based ints."""
    X = np.stack([featurize_summary(s) for s in dataset.samples])
    y = np.array([int(s.task) - 1 for s in dataset.samples], dtype=np.int64)
    return X, y


# ---------------------------------------------------------------------------
# Reassembling synthetic rows into scanpaths
# ---------------------------------------------------------------------------

def fit_length_model(dataset: Dataset) -> dict[TaskLabel, np.ndarray]:
    """Empirical scanpath-length distribution per task."""
    model: dict[TaskLabel, list[int]] = {t: [] for t in TaskLabel}
    for s in dataset.samples:
        model[s.task].append(len(s))
    return {t: np.asarray(sorted(v), dtype=np.int64) for t, v in model.items() if v}


def assemble_scanpaths(rows: RowTable, length_model: dict[TaskLabel, np.ndarray],
                       n_per_task, rng: RngState) -> Dataset:
    """Group synthetic rows into labeled scanpaths.

    For each task, sample lengths are drawn from that task's empirical
    length distribution and fixations are dealt from a shuffled pool of
    that task's rows, so no row repeats within (or across) the samples
    of one call. ``n_per_task`` is an int or a {task: count} mapping.

    Raises
    ------
    InsufficientRows
        If a task's row pool is smaller than the total fixations its
        samples request; the caller should synthesize more rows.
    """
    task_col = rows.column("task")
    xs = rows.column("x")
    ys = rows.column("y")
    durs = rows.column("duration")
    pups = rows.column("pupil")
    if isinstance(n_per_task, dict):
        wanted = {TaskLabel(k): int(v) for k, v in n_per_task.items()}
    else:
        wanted = {t: int(n_per_task) for t in TaskLabel}

    samples = []
    for task in TaskLabel:
        count = wanted.get(task, 0)
        if count == 0:
            continue
        if task not in length_model or length_model[task].size == 0:
            raise InsufficientRows(f"length model has no observations for task {int(task)}")
        gen = rng.split(int(task)).generator()
        pool = np.flatnonzero(task_col == float(int(task)))
        lengths = gen.choice(length_model[task], size=count, replace=True)
        need = int(lengths.sum())
        if pool.size < need:
            raise InsufficientRows(
                f"task {int(task)}: pool of {pool.size} rows cannot cover "
                f"{need} requested fixations"
            )
        order = pool[gen.permutation(pool.size)]
        offset = 0
        for i, L in enumerate(lengths):
            take = order[offset : offset + int(L)]
            offset += int(L)
            arr = np.column_stack([xs[take], ys[take], durs[take], pups[take]])
            samples.append(
                ScanpathSample("synthetic", f"t{int(task)}-{i:05d}", task, arr)
            )
    return Dataset(samples, provenance="synthetic")
