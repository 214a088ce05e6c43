"""Synthetic tabular generators and the uniform surface the bench uses.

Three generator families are available: ``gaussian-copula``, ``ctgan``
(CTGAN-lite), ``copula-gan`` (CopulaGAN-lite), plus ``tuned`` which is
CopulaGAN-lite under the larger tuned_preset budget. A GeneratorSpec
plus fit_generator wraps any of them behind one fitted handle that can
sample rows, optionally balanced per task, and round-trip through the
versioned model-file format.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import ColumnSpec, RowTable, TaskLabel
from ..errors import InsufficientRows, InvalidConfig
from ..rng import RngState
from ..serialize import load_model, save_model
from .copula import GaussianCopulaModel, fit_gaussian_copula, sample_gaussian_copula
from .gan import (
    CopulaGanModel,
    CtganModel,
    GanConfig,
    fit_copula_gan,
    fit_ctgan,
    sample_copula_gan,
    sample_ctgan,
    tuned_preset,
)
from .marginals import MarginalModel, ModeNormalizer

__all__ = [
    "GENERATOR_KINDS",
    "GanConfig",
    "GaussianCopulaModel",
    "CtganModel",
    "CopulaGanModel",
    "MarginalModel",
    "ModeNormalizer",
    "GeneratorSpec",
    "FittedGenerator",
    "fit_generator",
    "fit_gaussian_copula",
    "sample_gaussian_copula",
    "fit_ctgan",
    "sample_ctgan",
    "fit_copula_gan",
    "sample_copula_gan",
    "tuned_preset",
    "concat_row_tables",
    "save_generator",
    "load_generator",
]

GENERATOR_KINDS = ("gaussian-copula", "ctgan", "copula-gan", "tuned")


def concat_row_tables(tables: list[RowTable]) -> RowTable:
    if not tables:
        raise InvalidConfig("cannot concatenate zero row tables")
    schema = tables[0].schema
    for t in tables[1:]:
        if t.schema != schema:
            raise InvalidConfig("row tables disagree on schema")
    columns = [np.concatenate([t.columns[i] for t in tables]) for i in range(len(schema))]
    return RowTable(schema, columns)


@dataclass(frozen=True)
class GeneratorSpec:
    """A generator kind plus its training configuration.

    ``per_task`` fits one model per task label on that task's rows
    instead of a single label-conditioned model.
    """

    kind: str
    config: GanConfig | None = None
    per_task: bool = False

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise InvalidConfig(f"unknown generator kind {self.kind!r}")

    def resolved_config(self) -> GanConfig | None:
        if self.kind == "gaussian-copula":
            return None
        if self.config is not None:
            return self.config
        return tuned_preset() if self.kind == "tuned" else GanConfig()


class FittedGenerator:
    """A fitted generator of any kind behind one sampling interface."""

    def __init__(self, spec: GeneratorSpec, models: dict):
        self.spec = spec
        self.models = models  # {None: model} or {task_value(float): model}

    @property
    def schema(self):
        return next(iter(self.models.values())).schema

    def _sample_one(self, model, n: int, rng: RngState, condition):
        if self.spec.kind == "gaussian-copula":
            return sample_gaussian_copula(model, n, rng)
        if self.spec.kind == "ctgan":
            return sample_ctgan(model, n, rng, condition=condition)
        return sample_copula_gan(model, n, rng, condition=condition)

    def sample(self, n: int, rng: RngState, condition=None) -> RowTable:
        """Draw n rows; ``condition`` restricts the task category."""
        if not self.spec.per_task:
            if condition is not None and self.spec.kind == "gaussian-copula":
                # the plain copula draws its discrete columns
                # independently, so conditioning filters its draws
                return self.sample_rows_per_task({condition: n}, rng)
            return self._sample_one(self.models[None], n, rng, condition)
        if condition is not None:
            return self._sample_one(self.models[float(condition)], n, rng, condition)
        # Unconditional draw from per-task models: proportional allocation.
        keys = sorted(self.models)
        counts = _even_allocation(n, len(keys))
        parts = [
            self._sample_one(self.models[k], c, rng.split(i), k)
            for i, (k, c) in enumerate(zip(keys, counts)) if c > 0
        ]
        return concat_row_tables(parts)

    def sample_rows_per_task(self, needed: dict, rng: RngState) -> RowTable:
        """Rows covering ``needed[task] = count`` for each task.

        Conditional generators sample each task directly. The plain
        Gaussian copula draws its task column independently, so pools
        are filled by repeated draws and topped up until satisfied.
        """
        needed = {float(int(t)): int(c) for t, c in needed.items() if int(c) > 0}
        if not needed:
            raise InvalidConfig("no rows requested")
        if self.spec.kind != "gaussian-copula" or self.spec.per_task:
            parts = [
                self.sample(count, rng.split(int(task)), condition=task)
                for task, count in sorted(needed.items())
            ]
            return concat_row_tables(parts)

        model = self.models[None]
        task_idx = next(i for i, s in enumerate(model.schema) if s.name == "task")
        pools: dict[float, list[np.ndarray]] = {t: [] for t in needed}
        filled = {t: 0 for t in needed}
        total = sum(needed.values())
        for attempt in range(12):
            if all(filled[t] >= needed[t] for t in needed):
                break
            draw = sample_gaussian_copula(model, max(2 * total, 256), rng.split(100 + attempt))
            tasks = draw.columns[task_idx]
            for t in needed:
                short = needed[t] - filled[t]
                if short <= 0:
                    continue
                idx = np.flatnonzero(tasks == t)[:short]
                if idx.size:
                    pools[t].append(draw.select_rows(idx))
                    filled[t] += idx.size
        missing = {t: needed[t] - filled[t] for t in needed if filled[t] < needed[t]}
        if missing:
            raise InsufficientRows(f"copula draws never produced enough rows: {missing}")
        parts = [concat_row_tables(pools[t]) for t in sorted(needed)]
        return concat_row_tables(parts)


def _even_allocation(total: int, buckets: int) -> list[int]:
    base, rem = divmod(total, buckets)
    return [base + (1 if i < rem else 0) for i in range(buckets)]


def fit_generator(spec: GeneratorSpec, table: RowTable, rng: RngState) -> FittedGenerator:
    """Fit per the spec; per_task partitions the rows by task first."""
    config = spec.resolved_config()

    def fit_one(sub: RowTable, sub_rng: RngState):
        if spec.kind == "gaussian-copula":
            return fit_gaussian_copula(sub)
        if spec.kind == "ctgan":
            return fit_ctgan(sub, config, sub_rng)
        return fit_copula_gan(sub, config, sub_rng)

    if not spec.per_task:
        return FittedGenerator(spec, {None: fit_one(table, rng)})

    task_col = table.column("task")
    models = {}
    for t in sorted(set(task_col.tolist())):
        sub = table.select_rows(task_col == t)
        models[float(t)] = fit_one(sub, rng.split_label(f"task-{int(t)}"))
    return FittedGenerator(spec, models)


# ---------------------------------------------------------------------------
# Model-file round trips
# ---------------------------------------------------------------------------

def _schema_to_meta(schema) -> list:
    return [{"name": s.name, "kind": s.kind, "categories": list(s.categories)}
            for s in schema]


def _schema_from_meta(meta) -> tuple:
    return tuple(ColumnSpec(s["name"], s["kind"], tuple(s["categories"])) for s in meta)


def _copula_state(model: GaussianCopulaModel, prefix: str):
    meta = {
        "schema": _schema_to_meta(model.schema),
        "latent_names": list(model.latent_names),
        "marginals": {
            name: {"constant": m.constant} for name, m in model.marginals.items()
        },
        "frequencies": sorted(model.frequencies),
    }
    arrays = {f"{prefix}correlation": model.correlation, f"{prefix}factor": model.factor}
    for name, m in model.marginals.items():
        arrays[f"{prefix}marg/{name}/values"] = m.values
        arrays[f"{prefix}marg/{name}/positions"] = m.positions
    for name, (cats, probs) in model.frequencies.items():
        arrays[f"{prefix}freq/{name}/categories"] = cats
        arrays[f"{prefix}freq/{name}/probs"] = probs
    return meta, arrays


def _copula_from_state(meta, arrays, prefix: str) -> GaussianCopulaModel:
    schema = _schema_from_meta(meta["schema"])
    marginals = {
        name: MarginalModel(
            name,
            arrays[f"{prefix}marg/{name}/values"],
            arrays[f"{prefix}marg/{name}/positions"],
            constant=info["constant"],
        )
        for name, info in meta["marginals"].items()
    }
    frequencies = {
        name: (arrays[f"{prefix}freq/{name}/categories"], arrays[f"{prefix}freq/{name}/probs"])
        for name in meta["frequencies"]
    }
    return GaussianCopulaModel(schema, marginals, frequencies,
                               tuple(meta["latent_names"]),
                               arrays[f"{prefix}correlation"], arrays[f"{prefix}factor"])


def _mlp_state(net, prefix: str):
    arrays = {}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"{prefix}w{i}"] = w
        arrays[f"{prefix}b{i}"] = b
    return {"activation": net.activation, "layers": len(net.weights)}, arrays


def _mlp_from_state(meta, arrays, prefix: str):
    from .gan import _Mlp

    weights = [arrays[f"{prefix}w{i}"] for i in range(meta["layers"])]
    biases = [arrays[f"{prefix}b{i}"] for i in range(meta["layers"])]
    sizes = [w.shape[0] for w in weights] + [weights[-1].shape[1]]
    net = _Mlp(sizes, meta["activation"], np.random.default_rng(0))
    for view, w in zip(net.weights, weights):
        view[...] = w
    for view, b in zip(net.biases, biases):
        view[...] = b
    return net


def _ctgan_state(model: CtganModel, prefix: str):
    from dataclasses import asdict

    from .gan import _ContinuousCodec

    cfg = asdict(model.config)
    cfg["hidden"] = list(cfg["hidden"])
    meta = {
        "schema": _schema_to_meta(model.schema),
        "config": cfg,
        "cond_column": model.config.condition_column,
        "codecs": [],
    }
    arrays = {
        f"{prefix}cond_categories": model.cond_categories,
        f"{prefix}cond_frequencies": model.cond_frequencies,
    }
    if model.loss_trace is not None:
        arrays[f"{prefix}loss_trace"] = model.loss_trace
    for codec in model.codecs:
        if isinstance(codec, _ContinuousCodec):
            meta["codecs"].append({"name": codec.name, "kind": "continuous"})
            mix = codec.normalizer.mixture
            arrays[f"{prefix}mode/{codec.name}/weights"] = mix.weights
            arrays[f"{prefix}mode/{codec.name}/means"] = mix.means
            arrays[f"{prefix}mode/{codec.name}/stds"] = mix.stds
        else:
            meta["codecs"].append({"name": codec.name, "kind": "discrete"})
            arrays[f"{prefix}cats/{codec.name}"] = codec.categories
    g_meta, g_arrays = _mlp_state(model.generator, f"{prefix}g/")
    d_meta, d_arrays = _mlp_state(model.discriminator, f"{prefix}d/")
    meta["generator"] = g_meta
    meta["discriminator"] = d_meta
    arrays.update(g_arrays)
    arrays.update(d_arrays)
    return meta, arrays


def _ctgan_from_state(meta, arrays, prefix: str) -> CtganModel:
    from ..numeric import GaussianMixture1D
    from .gan import _ContinuousCodec, _DiscreteCodec

    schema = _schema_from_meta(meta["schema"])
    cfg = dict(meta["config"])
    cfg["hidden"] = tuple(cfg["hidden"])
    config = GanConfig(**cfg)
    codecs = []
    pos = 0
    for entry in meta["codecs"]:
        name = entry["name"]
        if entry["kind"] == "continuous":
            mix = GaussianMixture1D(
                arrays[f"{prefix}mode/{name}/weights"],
                arrays[f"{prefix}mode/{name}/means"],
                arrays[f"{prefix}mode/{name}/stds"],
            )
            codec = _ContinuousCodec(name, ModeNormalizer(name, mix), pos, pos + 1)
        else:
            codec = _DiscreteCodec(name, arrays[f"{prefix}cats/{name}"].copy(), pos)
        codecs.append(codec)
        pos += codec.width
    cond_codec = next(c for c in codecs if c.name == meta["cond_column"])
    trace = arrays.get(f"{prefix}loss_trace")
    return CtganModel(
        schema=schema,
        codecs=codecs,
        config=config,
        generator=_mlp_from_state(meta["generator"], arrays, f"{prefix}g/"),
        discriminator=_mlp_from_state(meta["discriminator"], arrays, f"{prefix}d/"),
        cond_categories=arrays[f"{prefix}cond_categories"].copy(),
        cond_frequencies=arrays[f"{prefix}cond_frequencies"].copy(),
        cond_codec=cond_codec,
        loss_trace=None if trace is None else trace.copy(),
    )


def _copulagan_state(model: CopulaGanModel, prefix: str):
    inner_meta, arrays = _ctgan_state(model.inner, f"{prefix}inner/")
    meta = {
        "inner": inner_meta,
        "marginals": {n: {"constant": m.constant} for n, m in model.marginals.items()},
    }
    for name, m in model.marginals.items():
        arrays[f"{prefix}marg/{name}/values"] = m.values
        arrays[f"{prefix}marg/{name}/positions"] = m.positions
    return meta, arrays


def _copulagan_from_state(meta, arrays, prefix: str) -> CopulaGanModel:
    marginals = {
        name: MarginalModel(
            name,
            arrays[f"{prefix}marg/{name}/values"],
            arrays[f"{prefix}marg/{name}/positions"],
            constant=info["constant"],
        )
        for name, info in meta["marginals"].items()
    }
    return CopulaGanModel(marginals=marginals,
                          inner=_ctgan_from_state(meta["inner"], arrays, f"{prefix}inner/"))


_STATE_FNS = {
    "gaussian-copula": (_copula_state, _copula_from_state),
    "ctgan": (_ctgan_state, _ctgan_from_state),
    "copula-gan": (_copulagan_state, _copulagan_from_state),
    "tuned": (_copulagan_state, _copulagan_from_state),
}


def save_generator(path, fitted: FittedGenerator) -> None:
    to_state, _ = _STATE_FNS[fitted.spec.kind]
    meta = {"per_task": fitted.spec.per_task, "models": {}}
    arrays: dict[str, np.ndarray] = {}
    for key, model in fitted.models.items():
        label = "all" if key is None else f"t{int(key)}"
        sub_meta, sub_arrays = to_state(model, f"{label}/")
        meta["models"][label] = sub_meta
        arrays.update(sub_arrays)
    save_model(path, fitted.spec.kind, meta, arrays)


def load_generator(path) -> FittedGenerator:
    kind, meta, arrays = load_model(path)
    if kind not in _STATE_FNS:
        raise InvalidConfig(f"{path}: unknown generator kind {kind!r}")
    _, from_state = _STATE_FNS[kind]
    models = {}
    for label, sub_meta in meta["models"].items():
        key = None if label == "all" else float(label[1:])
        models[key] = from_state(sub_meta, arrays, f"{label}/")
    spec = GeneratorSpec(kind, per_task=bool(meta["per_task"]))
    return FittedGenerator(spec, models)
