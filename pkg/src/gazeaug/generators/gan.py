"""Conditional tabular GAN (CTGAN-lite) and its copula-transformed hybrid.

Continuous columns are encoded by mode-specific normalization (mixture
mode one-hot plus a tanh-bounded offset) and discrete columns by
one-hots relaxed with Gumbel-softmax during training. Both the
generator and the discriminator are small fully-connected networks that
see the condition one-hot appended to their inputs; minibatches follow
training-by-sampling (a condition category is drawn log-frequency
weighted, then a row of that category). The generator loss is the
non-saturating objective plus a cross-entropy penalty tying its
condition-column output to the requested condition.

CopulaGAN-lite wraps the same machinery: continuous columns are pushed
through empirical CDF and the normal quantile before the inner GAN is
fitted, and samples are pulled back through the inverse transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..data import ColumnSpec, RowTable
from ..errors import InvalidConfig, NumericalDivergence
from ..optim import Adam
from ..rng import RngState
from .marginals import MarginalModel, ModeNormalizer

# network compute dtype; the table interface stays float64
_DT = np.float32


@dataclass(frozen=True)
class GanConfig:
    """Training configuration for CTGAN-lite / CopulaGAN-lite."""

    epochs: int = 60
    batch_size: int = 64
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.9
    noise_dim: int = 32
    hidden: tuple[int, ...] = (128, 128)
    max_modes: int = 10
    gumbel_tau: float = 0.2
    cond_loss_weight: float = 3.0
    condition_column: str = "task"
    dropout: float = 0.5  # discriminator hidden-layer dropout
    # sampling uses an exponential moving average of the generator
    # weights; averaging the last stretch of the adversarial game
    # removes the final-snapshot lottery. None picks the decay so the
    # averaging window covers a fixed fraction of the run.
    ema_decay: float | None = None

    def __post_init__(self):
        if min(self.epochs, self.batch_size, self.noise_dim) < 1:
            raise InvalidConfig("epochs, batch_size and noise_dim must be >= 1")
        if self.lr <= 0 or not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            raise InvalidConfig("bad optimizer parameters")
        if self.gumbel_tau <= 0 or self.max_modes < 1 or self.cond_loss_weight < 0:
            raise InvalidConfig("bad gumbel_tau / max_modes / cond_loss_weight")
        if self.ema_decay is not None and not 0.0 <= self.ema_decay < 1.0:
            raise InvalidConfig("ema_decay must be in [0, 1)")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidConfig("dropout must be in [0, 1)")


def tuned_preset() -> GanConfig:
    """Larger-budget CopulaGAN-lite configuration.

    Stands in for the hosted pre-tuned service: 4x the default epochs,
    wider hidden layers, and a lower learning rate.
    """
    base = GanConfig()
    return replace(base, epochs=4 * base.epochs, hidden=(192, 192), lr=1e-4)


# ---------------------------------------------------------------------------
# Column codecs and the output layout
# ---------------------------------------------------------------------------

@dataclass
class _ContinuousCodec:
    name: str
    normalizer: ModeNormalizer
    alpha_pos: int
    mode_start: int

    @property
    def k(self) -> int:
        return self.normalizer.k

    @property
    def width(self) -> int:
        return 1 + self.k


@dataclass
class _DiscreteCodec:
    name: str
    categories: np.ndarray
    start: int

    @property
    def width(self) -> int:
        return self.categories.size


def _build_codecs(table: RowTable, config: GanConfig, rng: RngState):
    codecs = []
    pos = 0
    for spec in table.schema:
        if spec.kind == "continuous":
            norm = ModeNormalizer.fit(
                spec.name, table.column(spec.name), max_modes=config.max_modes,
                rng=rng.split_label(f"modes-{spec.name}"),
            )
            codecs.append(_ContinuousCodec(spec.name, norm, pos, pos + 1))
        else:
            # sorted so one-hot slots line up with searchsorted lookups
            cats = np.sort(np.asarray(spec.categories, dtype=np.float64))
            codecs.append(_DiscreteCodec(spec.name, cats, pos))
        pos += codecs[-1].width
    return codecs, pos


def _encode_table(table: RowTable, codecs, rng: RngState) -> np.ndarray:
    out = np.zeros((table.n_rows, sum(c.width for c in codecs)))
    for codec in codecs:
        col = table.column(codec.name)
        if isinstance(codec, _ContinuousCodec):
            alpha, modes = codec.normalizer.encode(col, rng.split_label(f"enc-{codec.name}"))
            out[:, codec.alpha_pos] = alpha
            out[np.arange(col.size), codec.mode_start + modes] = 1.0
        else:
            idx = np.searchsorted(codec.categories, col)
            out[np.arange(col.size), codec.start + idx] = 1.0
    return out


# ---------------------------------------------------------------------------
# Small dense networks with hand-written backprop
# ---------------------------------------------------------------------------

class _Mlp:
    """Fully-connected net; hidden activation relu or leaky relu.

    Parameters and gradients are views into single flat buffers so the
    optimizer update is a handful of vectorized operations instead of
    one per tensor. Optional inverted dropout applies to hidden
    activations while a ``train_gen`` is passed to forward.
    """

    def __init__(self, sizes, activation: str, gen: np.random.Generator,
                 dropout: float = 0.0):
        self.activation = activation
        self.dropout = dropout
        total = sum((fi + 1) * fo for fi, fo in zip(sizes[:-1], sizes[1:]))
        self.flat = np.zeros(total, dtype=_DT)
        self.flat_grad = np.zeros(total, dtype=_DT)
        self.weights = []
        self.biases = []
        self._wg = []
        self._bg = []
        off = 0
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = self.flat[off : off + fan_in * fan_out].reshape(fan_in, fan_out)
            wg = self.flat_grad[off : off + fan_in * fan_out].reshape(fan_in, fan_out)
            off += fan_in * fan_out
            b = self.flat[off : off + fan_out]
            bg = self.flat_grad[off : off + fan_out]
            off += fan_out
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            w[...] = gen.uniform(-bound, bound, size=(fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(b)
            self._wg.append(wg)
            self._bg.append(bg)

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def _act(self, z):
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return np.where(z > 0.0, z, 0.2 * z)  # leaky

    def _act_grad(self, z):
        if self.activation == "relu":
            return (z > 0.0).astype(_DT)
        return np.where(z > 0.0, _DT(1.0), _DT(0.2))

    def forward(self, x, train_gen: np.random.Generator | None = None):
        cache = {"inputs": [x], "pre": [], "drop": []}
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            if i < last:
                cache["pre"].append(z)
                h = self._act(z)
                if self.dropout > 0.0 and train_gen is not None:
                    keep = (train_gen.random(h.shape, dtype=h.dtype)
                            >= self.dropout) / _DT(1.0 - self.dropout)
                    h = h * keep
                    cache["drop"].append(keep)
                cache["inputs"].append(h)
            else:
                h = z
        return h, cache

    def backward(self, dout, cache, accumulate: bool = False):
        """Backprop into self.flat_grad; returns the input gradient."""
        if not accumulate:
            self.flat_grad[...] = 0.0
        d = dout
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = cache["inputs"][i]
            self._wg[i] += h_in.T @ d
            self._bg[i] += d.sum(axis=0)
            d = d @ self.weights[i].T
            if i > 0:
                if cache["drop"]:
                    d = d * cache["drop"][i - 1]
                d = d * self._act_grad(cache["pre"][i - 1])
        return d


def _softplus(x):
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# Output activation: tanh for alpha slots, Gumbel-softmax for one-hots
# ---------------------------------------------------------------------------

def _activate_soft(raw, codecs, tau, gen):
    """Training-time activation; returns (activated, cache for backward)."""
    act = np.empty_like(raw)
    cache = []
    for codec in codecs:
        if isinstance(codec, _ContinuousCodec):
            a = np.tanh(raw[:, codec.alpha_pos])
            act[:, codec.alpha_pos] = a
            sl = slice(codec.mode_start, codec.mode_start + codec.k)
        else:
            a = None
            sl = slice(codec.start, codec.start + codec.width)
        u = np.clip(gen.random(raw[:, sl].shape, dtype=raw.dtype), 1e-12, 1.0 - 1e-12)
        gumbel = -np.log(-np.log(u))
        y = _softmax((raw[:, sl] + gumbel) / tau)
        act[:, sl] = y
        cache.append((a, sl, y))
    return act, cache


def _activate_backward(dact, codecs, tau, cache):
    draw = np.empty_like(dact)
    for codec, (a, sl, y) in zip(codecs, cache):
        if isinstance(codec, _ContinuousCodec):
            draw[:, codec.alpha_pos] = dact[:, codec.alpha_pos] * (1.0 - a * a)
        dy = dact[:, sl]
        draw[:, sl] = y * (dy - (dy * y).sum(axis=1, keepdims=True)) / tau
    return draw


def _activate_hard(raw, codecs):
    """Sampling-time decoding: tanh alphas, hard argmax one-hots."""
    columns = {}
    for codec in codecs:
        if isinstance(codec, _ContinuousCodec):
            alpha = np.tanh(raw[:, codec.alpha_pos])
            modes = np.argmax(raw[:, codec.mode_start : codec.mode_start + codec.k], axis=1)
            columns[codec.name] = codec.normalizer.decode(alpha, modes)
        else:
            idx = np.argmax(raw[:, codec.start : codec.start + codec.width], axis=1)
            columns[codec.name] = codec.categories[idx]
    return columns


# ---------------------------------------------------------------------------
# The fitted model and training loop
# ---------------------------------------------------------------------------

@dataclass
class CtganModel:
    schema: tuple
    codecs: list
    config: GanConfig
    generator: _Mlp
    discriminator: _Mlp
    cond_categories: np.ndarray
    cond_frequencies: np.ndarray     # training frequencies, for unconditional sampling
    cond_codec: _DiscreteCodec
    loss_trace: np.ndarray = field(default=None)  # (epochs, 2): D loss, G loss

    @property
    def data_width(self) -> int:
        return sum(c.width for c in self.codecs)


def fit_ctgan(table: RowTable, config: GanConfig, rng: RngState) -> CtganModel:
    """Adversarial fit of the conditional tabular generator."""
    cond_name = config.condition_column
    cond_spec = next((s for s in table.schema if s.name == cond_name), None)
    if cond_spec is None or cond_spec.kind != "discrete":
        raise InvalidConfig(f"condition column {cond_name!r} must exist and be discrete")

    codecs, data_width = _build_codecs(table, config, rng.split_label("codecs"))
    cond_codec = next(c for c in codecs if c.name == cond_name)
    encoded = _encode_table(table, codecs, rng.split_label("encode")).astype(_DT)

    cond_col = table.column(cond_name)
    categories = cond_codec.categories
    n_cond = categories.size
    counts = np.array([(cond_col == c).sum() for c in categories], dtype=np.float64)
    frequencies = counts / counts.sum()
    log_weights = np.log1p(counts)
    log_weights = log_weights / log_weights.sum()

    # Rows grouped by category for training-by-sampling.
    cat_index = np.searchsorted(categories, cond_col)
    order = np.argsort(cat_index, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts.astype(np.int64))])

    gen_net = _Mlp([config.noise_dim + n_cond, *config.hidden, data_width],
                   "relu", rng.split_label("init-g").generator())
    dis_net = _Mlp([data_width + n_cond, *config.hidden, 1],
                   "leaky", rng.split_label("init-d").generator(),
                   dropout=config.dropout)
    opt_g = Adam([gen_net.flat], config.lr, config.beta1, config.beta2)
    opt_d = Adam([dis_net.flat], config.lr, config.beta1, config.beta2)

    gen = rng.split_label("train").generator()
    n = table.n_rows
    batch = config.batch_size
    steps = max(1, n // batch)
    eye = np.eye(n_cond, dtype=_DT)
    cum_log_weights = np.cumsum(log_weights)
    cond_sl = slice(cond_codec.start, cond_codec.start + cond_codec.width)
    trace = np.empty((config.epochs, 2))
    batch_arange = np.arange(batch)
    # bias-corrected EMA of the generator weights (starts at zero so a
    # short run is not anchored to the random initialization); the
    # window spans a tenth of the run so every budget is averaged over
    # the same fraction of its trajectory
    total_steps = config.epochs * steps
    if config.ema_decay is None:
        decay = 1.0 - 1.0 / max(500.0, 0.1 * total_steps)
    else:
        decay = config.ema_decay
    ema = np.zeros_like(gen_net.flat)
    ema_rate = _DT(1.0 - decay)
    ema_steps = 0

    def draw_batch_conditions():
        cats = np.searchsorted(cum_log_weights, gen.random(batch), side="right")
        return cats, eye[cats]

    def real_rows_for(cats):
        u = gen.random(batch)
        offsets = (u * counts[cats]).astype(np.int64)
        return encoded[order[starts[cats] + offsets]]

    for epoch in range(config.epochs):
        d_losses = 0.0
        g_losses = 0.0
        for _ in range(steps):
            # Discriminator step: one pass over [real; fake].
            cats, cond = draw_batch_conditions()
            real = real_rows_for(cats)
            z = gen.standard_normal((batch, config.noise_dim), dtype=_DT)
            raw, _ = gen_net.forward(np.concatenate([z, cond], axis=1))
            fake, _ = _activate_soft(raw, codecs, config.gumbel_tau, gen)

            d_in = np.concatenate(
                [np.concatenate([real, cond], axis=1),
                 np.concatenate([fake, cond], axis=1)], axis=0)
            logits, d_cache = dis_net.forward(d_in, train_gen=gen)
            d_loss = _softplus(-logits[:batch]).mean() + _softplus(logits[batch:]).mean()
            dlogit = np.empty_like(logits)
            dlogit[:batch] = (_sigmoid(logits[:batch]) - 1.0) / batch
            dlogit[batch:] = _sigmoid(logits[batch:]) / batch
            dis_net.backward(dlogit, d_cache)
            opt_d.step([dis_net.flat_grad])

            # Generator step.
            cats, cond = draw_batch_conditions()
            z = gen.standard_normal((batch, config.noise_dim), dtype=_DT)
            raw, g_cache = gen_net.forward(np.concatenate([z, cond], axis=1))
            fake, act_cache = _activate_soft(raw, codecs, config.gumbel_tau, gen)
            fake_logit, d_cache = dis_net.forward(np.concatenate([fake, cond], axis=1),
                                                  train_gen=gen)

            adv_loss = _softplus(-fake_logit).mean()
            d_in_grad = (_sigmoid(fake_logit) - 1.0) / batch
            d_fake_full = dis_net.backward(d_in_grad, d_cache)
            dact = d_fake_full[:, : raw.shape[1]]
            draw_grad = _activate_backward(dact, codecs, config.gumbel_tau, act_cache)

            # Condition-column cross entropy on the raw logits.
            cond_logits = raw[:, cond_sl]
            probs = _softmax(cond_logits)
            ce_loss = -np.log(
                np.clip(probs[batch_arange, cats], 1e-12, None)
            ).mean()
            dce = probs
            dce[batch_arange, cats] -= 1.0
            draw_grad[:, cond_sl] += config.cond_loss_weight * dce / batch

            gen_net.backward(draw_grad, g_cache)
            opt_g.step([gen_net.flat_grad])
            ema += ema_rate * (gen_net.flat - ema)
            ema_steps += 1

            g_loss = adv_loss + config.cond_loss_weight * ce_loss
            d_losses += d_loss
            g_losses += g_loss

        trace[epoch] = (d_losses / steps, g_losses / steps)
        if not np.all(np.isfinite(trace[epoch])):
            raise NumericalDivergence(
                f"non-finite GAN loss at epoch {epoch}", epoch=epoch
            )

    # sampling uses the debiased average of the generator trajectory
    if decay > 0.0 and ema_steps > 0:
        gen_net.flat[...] = ema / _DT(1.0 - decay**ema_steps)
    return CtganModel(
        schema=table.schema,
        codecs=codecs,
        config=config,
        generator=gen_net,
        discriminator=dis_net,
        cond_categories=categories,
        cond_frequencies=frequencies,
        cond_codec=cond_codec,
        loss_trace=trace,
    )


def sample_ctgan(model: CtganModel, n: int, rng: RngState,
                 condition: float | int | None = None) -> RowTable:
    """Sample n rows; with ``condition`` every row uses that category."""
    if n < 1:
        raise InvalidConfig(f"sample size must be >= 1, got {n}")
    gen = rng.generator()
    n_cond = model.cond_categories.size
    if condition is None:
        cats = gen.choice(n_cond, size=n, p=model.cond_frequencies)
    else:
        matches = np.flatnonzero(model.cond_categories == float(condition))
        if matches.size == 0:
            raise InvalidConfig(
                f"unknown condition {condition!r}; categories are "
                f"{model.cond_categories.tolist()}"
            )
        cats = np.full(n, matches[0], dtype=np.int64)
    cond = np.eye(n_cond, dtype=_DT)[cats]
    z = gen.standard_normal((n, model.config.noise_dim), dtype=_DT)
    raw, _ = model.generator.forward(np.concatenate([z, cond], axis=1))
    columns = _activate_hard(raw, model.codecs)
    return RowTable(model.schema, [columns[s.name] for s in model.schema])


# ---------------------------------------------------------------------------
# CopulaGAN-lite
# ---------------------------------------------------------------------------

@dataclass
class CopulaGanModel:
    marginals: dict            # {name: MarginalModel} for continuous columns
    inner: CtganModel

    @property
    def schema(self) -> tuple:
        return self.inner.schema

    @property
    def config(self) -> GanConfig:
        return self.inner.config


def fit_copula_gan(table: RowTable, config: GanConfig, rng: RngState) -> CopulaGanModel:
    """Fit the inner GAN on quantile-transformed continuous columns."""
    marginals = {}
    columns = []
    for spec in table.schema:
        col = table.column(spec.name)
        if spec.kind == "continuous":
            marginal = MarginalModel.fit(spec.name, col)
            marginals[spec.name] = marginal
            columns.append(marginal.to_normal(col))
        else:
            columns.append(col)
    transformed = RowTable(table.schema, columns)
    inner = fit_ctgan(transformed, config, rng.split_label("inner"))
    return CopulaGanModel(marginals=marginals, inner=inner)


def sample_copula_gan(model: CopulaGanModel, n: int, rng: RngState,
                      condition: float | int | None = None) -> RowTable:
    latent = sample_ctgan(model.inner, n, rng, condition=condition)
    columns = []
    for spec in model.schema:
        col = latent.column(spec.name)
        if spec.kind == "continuous":
            columns.append(model.marginals[spec.name].from_normal(col))
        else:
            columns.append(col)
    return RowTable(model.schema, columns)
