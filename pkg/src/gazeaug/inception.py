"""Inception-style 1-D convolutional scanpath classifier.

Six inception modules (bottleneck, parallel convolutions with kernels
9/19/39, a max-pool branch, one batch-norm + ReLU per module), residual
shortcuts after modules 3 and 6, masked global average pooling, and a
linear head to four logits. Everything is float64 numpy with
hand-written backpropagation; the finite-difference oracle in
numeric.finite_diff_grad is the independent check.

Masking discipline: padded positions hold zeros at every layer
boundary. Batch-norm statistics are computed over valid positions only
and every layer's output is re-zeroed at padded positions, so appending
masked padding to a sample never changes its logits.

Internally activations are channels-last (B, T, C), which keeps the
im2col gathers copy-free; the public interface stays (B, C, T) channel
matrices as produced by to_fixed_length.

Deployment unit is a 5-member ensemble of identical architecture with
different initialization seeds, combined by mean softmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidConfig, NumericalDivergence, ShapeMismatch
from .optim import Adam
from .rng import RngState

_BN_EPS = 1e-5
_BN_MOMENTUM = 0.9

KERNEL_SIZES = (9, 19, 39)
N_FILTERS = 32
BOTTLENECK = 32
ENSEMBLE_SIZE = 5


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0:
            raise InvalidConfig("epochs, batch_size and lr must be positive")


# ---------------------------------------------------------------------------
# Layers (channels-last)
# ---------------------------------------------------------------------------

class _Conv1d:
    """Same-padding 1-D convolution; odd kernel sizes only."""

    def __init__(self, name, in_ch, out_ch, kernel, gen, dtype=np.float64):
        if kernel % 2 == 0:
            raise InvalidConfig("kernels must be odd for exact same-padding")
        self.name = name
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.kernel = kernel
        scale = np.sqrt(2.0 / (in_ch * kernel))
        # laid out (kernel * in_ch, out_ch) to match the window gather
        self.w = gen.normal(0.0, scale, size=(kernel * in_ch, out_ch)).astype(dtype)
        self.b = np.zeros(out_ch, dtype=dtype)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)

    def params(self):
        return [(f"{self.name}.w", self.w, self.gw), (f"{self.name}.b", self.b, self.gb)]

    @staticmethod
    def _windows(x, K, P):
        """(B, T, C) -> (B*T, K*C) same-padded im2col, k-major columns."""
        B, T, C = x.shape
        xp = np.zeros((B, T + 2 * P, C), dtype=x.dtype)
        xp[:, P : P + T] = x
        view = sliding_window_view(xp, K, axis=1)  # (B, T, C, K)
        return np.ascontiguousarray(view.transpose(0, 1, 3, 2)).reshape(B * T, K * C)

    @staticmethod
    def _fold_windows(dwin, B, T, C, K, P):
        """Adjoint of _windows: scatter-add window gradients back."""
        v = dwin.reshape(B, T, K, C)
        dxp = np.zeros((B, T + 2 * P, C), dtype=dwin.dtype)
        for k in range(K):
            dxp[:, k : k + T] += v[:, :, k]
        return dxp[:, P : P + T]

    def forward(self, x):
        # x: (B, T, C)
        B, T, C = x.shape
        K, P = self.kernel, self.kernel // 2
        win = x.reshape(B * T, C) if K == 1 else self._windows(x, K, P)
        y = win @ self.w
        y += self.b
        self._win = win
        self._shape = (B, T, C)
        return y.reshape(B, T, self.out_ch)

    def backward(self, dy):
        B, T, C = self._shape
        K, P = self.kernel, self.kernel // 2
        F = self.out_ch
        dy_flat = np.ascontiguousarray(dy).reshape(B * T, F)
        self.gw += self._win.T @ dy_flat
        self.gb += dy_flat.sum(axis=0)
        self._win = None
        if K == 1:
            return (dy_flat @ self.w.T).reshape(B, T, C)
        # dx: correlate dy with the flipped kernels
        dyw = self._windows(dy_flat.reshape(B, T, F), K, P)
        w3 = self.w.reshape(K, C, F)
        wflip = w3[::-1].transpose(0, 2, 1).reshape(K * F, C)
        return (dyw @ wflip).reshape(B, T, C)


class _MaxPool1d:
    """Width-3, stride-1, zero-padded max pool (no parameters).

    Ties route the gradient to the earliest window position (argmax
    convention), via first-match comparison masks in backward.
    """

    WIDTH = 3

    def forward(self, x):
        B, T, C = x.shape
        xp = np.zeros((B, T + 2, C), dtype=x.dtype)
        xp[:, 1 : 1 + T] = x
        y = np.maximum(np.maximum(xp[:, 0:T], xp[:, 1 : T + 1]), xp[:, 2 : T + 2])
        self._xp = xp
        self._y = y
        return y

    def backward(self, dy):
        B, T, C = dy.shape
        xp, y = self._xp, self._y
        dxp = np.zeros_like(xp)
        taken = np.zeros(dy.shape, dtype=bool)
        for k in range(self.WIDTH):
            hit = (xp[:, k : k + T] == y) & ~taken
            dxp[:, k : k + T] += np.where(hit, dy, 0.0)
            taken |= hit
        self._xp = None
        self._y = None
        return dxp[:, 1 : 1 + T]


class _BatchNorm1d:
    """Per-channel batch norm over valid (unmasked) positions.

    Batch statistics during training, frozen running statistics at
    evaluation.
    """

    def __init__(self, name, channels, dtype=np.float64):
        self.name = name
        self.gamma = np.ones(channels, dtype=dtype)
        self.beta = np.zeros(channels, dtype=dtype)
        self.ggamma = np.zeros_like(self.gamma)
        self.gbeta = np.zeros_like(self.beta)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)

    def params(self):
        return [(f"{self.name}.gamma", self.gamma, self.ggamma),
                (f"{self.name}.beta", self.beta, self.gbeta)]

    def forward(self, x, mask3, training):
        # x: (B, T, C); mask3: (B, T, 1)
        count = mask3.sum()
        if training:
            mean = (x * mask3).sum(axis=(0, 1)) / count
            var = (((x - mean) ** 2) * mask3).sum(axis=(0, 1)) / count
            self.running_mean = _BN_MOMENTUM * self.running_mean + (1 - _BN_MOMENTUM) * mean
            self.running_var = _BN_MOMENTUM * self.running_var + (1 - _BN_MOMENTUM) * var
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + _BN_EPS)
        xhat = (x - mean) * inv_std
        y = (self.gamma * xhat + self.beta) * mask3
        if training:
            self._cache = (xhat, inv_std, mask3, count)
        return y

    def backward(self, dy):
        xhat, inv_std, mask3, count = self._cache
        dy = dy * mask3
        self.ggamma += (dy * xhat).sum(axis=(0, 1))
        self.gbeta += dy.sum(axis=(0, 1))
        dxhat = dy * self.gamma
        sum_dxhat = dxhat.sum(axis=(0, 1))
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 1))
        dx = (dxhat - (sum_dxhat + xhat * sum_dxhat_xhat) / count) * inv_std
        dx *= mask3
        self._cache = None
        return dx


class _Linear:
    def __init__(self, name, in_dim, out_dim, gen, dtype=np.float64):
        self.name = name
        bound = np.sqrt(6.0 / (in_dim + out_dim))
        self.w = gen.uniform(-bound, bound, size=(in_dim, out_dim)).astype(dtype)
        self.b = np.zeros(out_dim, dtype=dtype)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)

    def params(self):
        return [(f"{self.name}.w", self.w, self.gw), (f"{self.name}.b", self.b, self.gb)]

    def forward(self, x):
        self._x = x
        return x @ self.w + self.b

    def backward(self, dy):
        self.gw += self._x.T @ dy
        self.gb += dy.sum(axis=0)
        dx = dy @ self.w.T
        self._x = None
        return dx


# ---------------------------------------------------------------------------
# Inception module and network
# ---------------------------------------------------------------------------

class _BranchBank:
    """The parallel branch convolutions as one banded mixing matrix.

    For the short sequences this classifier sees (T well below the
    largest kernel), a same-padded convolution is a linear map from the
    flattened (T, C) input to the flattened (T, F) output whose matrix
    is block-banded Toeplitz in the kernel weights. Stacking the three
    branch maps column-wise turns the whole multi-kernel stage into one
    (B, T*C) @ (T*C, T*F_total) matmul, and the weight gradients come
    back as diagonal sums of the matching dM product. The per-branch
    kernel weights remain the true parameters; the matrix is rebuilt
    from them (through writable strided views) at every forward.
    """

    def __init__(self, convs, dtype):
        self.convs = convs
        self.f_total = sum(c.out_ch for c in convs)
        self.dtype = dtype
        self.bias = np.concatenate([c.b for c in convs])  # rebuilt each forward
        self._cache: dict[tuple[int, int], tuple] = {}

    def _plan(self, T, C):
        key = (T, C)
        if key in self._cache:
            return self._cache[key]
        M = np.zeros((T * C, T * self.f_total), dtype=self.dtype)
        dM = np.empty_like(M)
        m4 = M.reshape(T, C, T, self.f_total)
        d4 = dM.reshape(T, C, T, self.f_total)

        def diag_view(base4, t0, tp0, col, fb, length):
            block = base4[t0:, :, tp0:, col : col + fb]
            s = block.strides
            return np.lib.stride_tricks.as_strided(
                block, shape=(length, block.shape[1], fb), strides=(s[0] + s[2], s[1], s[3])
            )

        writes = []  # (M diagonal view, conv index, kernel row k)
        reads = []   # (dM diagonal view, conv index, kernel row k)
        col = 0
        for ci, conv in enumerate(self.convs):
            K, P, fb = conv.kernel, conv.kernel // 2, conv.out_ch
            for d in range(-min(P, T - 1), min(P, T - 1) + 1):
                t0, tp0 = max(d, 0), max(-d, 0)
                L = T - abs(d)
                writes.append((diag_view(m4, t0, tp0, col, fb, L), ci, d + P))
                reads.append((diag_view(d4, t0, tp0, col, fb, L), ci, d + P))
            col += fb
        self._cache[key] = (M, dM, writes, reads)
        return self._cache[key]

    def forward(self, x):
        B, T, C = x.shape
        M, _, writes, _ = self._plan(T, C)
        w3 = [c.w.reshape(c.kernel, C, c.out_ch) for c in self.convs]
        for view, ci, k in writes:
            view[...] = w3[ci][k]
        self.bias = np.concatenate([c.b for c in self.convs])
        x2 = x.reshape(B, T * C)
        y = (x2 @ M).reshape(B, T, self.f_total)
        y += self.bias
        self._x2 = x2
        self._shape = (B, T, C)
        return y

    def backward(self, dy):
        B, T, C = self._shape
        M, dM, _, reads = self._plan(T, C)
        dflat = np.ascontiguousarray(dy).reshape(B, T * self.f_total)
        np.dot(self._x2.T, dflat, out=dM)
        g3 = [c.gw.reshape(c.kernel, C, c.out_ch) for c in self.convs]
        for view, ci, k in reads:
            g3[ci][k] += view.sum(axis=0)
        db_all = dy.sum(axis=(0, 1))
        col = 0
        for conv in self.convs:
            conv.gb += db_all[col : col + conv.out_ch]
            col += conv.out_ch
        dx = (dflat @ M.T).reshape(B, T, C)
        self._x2 = None
        return dx


class _InceptionModule:
    """Bottleneck, three parallel convolutions, pooled branch, BN+ReLU."""

    def __init__(self, name, in_ch, gen, dtype=np.float64):
        self.bottleneck = _Conv1d(f"{name}.bottleneck", in_ch, BOTTLENECK, 1, gen, dtype)
        self.convs = [
            _Conv1d(f"{name}.conv{k}", BOTTLENECK, N_FILTERS, k, gen, dtype)
            for k in KERNEL_SIZES
        ]
        self.branches = _BranchBank(self.convs, dtype)
        self.pool = _MaxPool1d()
        self.pool_conv = _Conv1d(f"{name}.poolconv", in_ch, N_FILTERS, 1, gen, dtype)
        self.bn = _BatchNorm1d(f"{name}.bn", N_FILTERS * 4, dtype)
        self.out_ch = N_FILTERS * 4

    def params(self):
        out = self.bottleneck.params()
        for c in self.convs:
            out.extend(c.params())
        out.extend(self.pool_conv.params())
        out.extend(self.bn.params())
        return out

    # below this many (batch x time) rows the per-branch im2col path has
    # less fixed overhead than rebuilding the banded matrix
    FUSED_MIN_ROWS = 256

    def forward(self, x, mask3, training):
        b = self.bottleneck.forward(x)
        self._fused = x.shape[0] * x.shape[1] >= self.FUSED_MIN_ROWS
        if self._fused:
            branch_out = self.branches.forward(b)
        else:
            branch_out = np.concatenate([conv.forward(b) for conv in self.convs], axis=2)
        cat = np.concatenate(
            [branch_out, self.pool_conv.forward(self.pool.forward(x))], axis=2)
        y = self.bn.forward(cat, mask3, training)
        self._relu_mask = y > 0.0
        # padded positions stay exactly zero for downstream layers
        return np.maximum(y, 0.0) * mask3

    def backward(self, dy, mask3):
        dcat = self.bn.backward(dy * self._relu_mask * mask3)
        self._relu_mask = None
        width = self.branches.f_total
        if self._fused:
            db = self.branches.backward(dcat[:, :, :width])
        else:
            splits = np.split(dcat[:, :, :width], len(self.convs), axis=2)
            db = self.convs[0].backward(np.ascontiguousarray(splits[0]))
            for conv, grad in zip(self.convs[1:], splits[1:]):
                db += conv.backward(np.ascontiguousarray(grad))
        dx = self.bottleneck.backward(db)
        dpool = np.ascontiguousarray(dcat[:, :, width:])
        dx += self.pool.backward(self.pool_conv.backward(dpool))
        return dx


class _Shortcut:
    """1x1 projection + batch norm feeding a residual addition."""

    def __init__(self, name, in_ch, out_ch, gen, dtype=np.float64):
        self.conv = _Conv1d(f"{name}.proj", in_ch, out_ch, 1, gen, dtype)
        self.bn = _BatchNorm1d(f"{name}.bn", out_ch, dtype)

    def params(self):
        return self.conv.params() + self.bn.params()

    def forward(self, x, mask3, training):
        return self.bn.forward(self.conv.forward(x), mask3, training)

    def backward(self, dy):
        return self.conv.backward(self.bn.backward(dy))


class InceptionNet:
    """The full classifier; modules, shortcuts, masked GAP, linear head."""

    def __init__(self, n_modules: int = 6, in_channels: int = 4, n_classes: int = 4,
                 residual_every: int = 3, seed_rng: RngState = RngState(0),
                 dtype=np.float64):
        if n_modules < 1:
            raise InvalidConfig("need at least one inception module")
        gen = seed_rng.generator()
        self.n_modules = n_modules
        self.residual_every = residual_every
        self.in_channels = in_channels
        self.n_classes = n_classes
        self.dtype = np.dtype(dtype)
        self.modules = []
        ch = in_channels
        for i in range(n_modules):
            self.modules.append(_InceptionModule(f"m{i}", ch, gen, self.dtype))
            ch = self.modules[-1].out_ch
        self.shortcuts = {}
        src_ch = in_channels
        for i in range(n_modules):
            if (i + 1) % residual_every == 0:
                self.shortcuts[i] = _Shortcut(f"s{i}", src_ch, ch, gen, self.dtype)
                src_ch = ch
        self.head = _Linear("head", ch, n_classes, gen, self.dtype)

    def params(self):
        out = []
        for m in self.modules:
            out.extend(m.params())
        for i in sorted(self.shortcuts):
            out.extend(self.shortcuts[i].params())
        out.extend(self.head.params())
        return out

    def zero_grads(self):
        for _, _, g in self.params():
            g[...] = 0.0

    def forward(self, values: np.ndarray, mask: np.ndarray, training: bool = False):
        """Logits (B, n_classes) for a (B, C, T) batch with (B, T) mask."""
        values = np.asarray(values, dtype=self.dtype)
        mask = np.asarray(mask, dtype=self.dtype)
        if values.ndim != 3 or values.shape[1] != self.in_channels:
            raise ShapeMismatch(f"expected (B, {self.in_channels}, T), got {values.shape}")
        if mask.shape != (values.shape[0], values.shape[2]):
            raise ShapeMismatch("mask shape must be (B, T)")
        if np.any(mask.sum(axis=1) < 1):
            raise ShapeMismatch("every row needs at least one valid position")

        mask3 = mask[:, :, None]
        x = np.ascontiguousarray(values.transpose(0, 2, 1)) * mask3
        self._mask3 = mask3
        self._residual_cache = {}
        source = x
        for i, module in enumerate(self.modules):
            x = module.forward(x, mask3, training)
            if i in self.shortcuts:
                s = self.shortcuts[i].forward(source, mask3, training)
                pre = x + s
                x = np.maximum(pre, 0.0) * mask3
                self._residual_cache[i] = pre > 0.0
                source = x
        # masked global average pooling
        lengths = mask.sum(axis=1)
        pooled = x.sum(axis=1) / lengths[:, None]
        self._lengths = lengths
        return self.head.forward(pooled)

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients given d(loss)/d(logits).

        Returns the gradient with respect to the (B, C, T) input values.
        """
        mask3 = self._mask3
        dpooled = self.head.backward(dlogits)
        dx = dpooled[:, None, :] * (mask3 / self._lengths[:, None, None])

        # A shortcut joining after module i took its source from the
        # input of module (i - residual_every + 1); the source gradient
        # is added once the backward walk reaches that block start.
        pending: dict[int, np.ndarray] = {}
        for i in range(self.n_modules - 1, -1, -1):
            if i in self.shortcuts:
                dpre = dx * self._residual_cache[i] * mask3
                pending[i - self.residual_every + 1] = self.shortcuts[i].backward(dpre)
                self._residual_cache[i] = None
                dx = dpre
            dx = self.modules[i].backward(dx, mask3)
            if i in pending:
                dx = dx + pending.pop(i)
        self._mask3 = None
        self._residual_cache = None
        return dx.transpose(0, 2, 1)


def cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy loss and its gradient w.r.t. the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = labels.size
    loss = -logp[np.arange(n), labels].mean()
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# Training and the 5-member ensemble
# ---------------------------------------------------------------------------

def train(net: InceptionNet, values: np.ndarray, mask: np.ndarray, labels: np.ndarray,
          config: TrainConfig, rng: RngState) -> np.ndarray:
    """Train in place; returns the per-epoch mean loss trace.

    Each epoch's shuffle order derives from ``rng`` alone, so equal
    (net seed, data, config, rng) reproduce identical weight bytes.
    """
    values = np.asarray(values, dtype=net.dtype)
    mask = np.asarray(mask, dtype=net.dtype)
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    if n == 0:
        raise InvalidConfig("training data must be non-empty")

    param_list = net.params()
    opt = Adam([p for _, p, _ in param_list], config.lr, config.beta1, config.beta2)
    grads = [g for _, _, g in param_list]
    gen = rng.generator()
    trace = np.empty(config.epochs)
    for epoch in range(config.epochs):
        order = gen.permutation(n)
        total = 0.0
        batches = 0
        for start in range(0, n, config.batch_size):
            take = order[start : start + config.batch_size]
            logits = net.forward(values[take], mask[take], training=True)
            loss, dlogits = cross_entropy(logits, labels[take])
            net.zero_grads()
            net.backward(dlogits)
            opt.step(grads)
            total += loss
            batches += 1
        trace[epoch] = total / batches
        if not np.isfinite(trace[epoch]):
            raise NumericalDivergence(f"non-finite loss at epoch {epoch}", epoch=epoch)
    return trace


@dataclass
class EnsembleModel:
    members: list[InceptionNet]
    config: TrainConfig
    loss_traces: list[np.ndarray]

    def __post_init__(self):
        if len(self.members) != ENSEMBLE_SIZE:
            raise InvalidConfig(f"ensemble must have {ENSEMBLE_SIZE} members")


def fit_ensemble(values: np.ndarray, mask: np.ndarray, labels: np.ndarray,
                 config: TrainConfig, n_modules: int = 6,
                 in_channels: int = 4, n_classes: int = 4,
                 dtype=np.float64) -> EnsembleModel:
    """Five identically-shaped nets with distinct initialization seeds."""
    root = RngState(config.seed)
    members = []
    traces = []
    for i in range(ENSEMBLE_SIZE):
        member_rng = root.split(i)
        net = InceptionNet(n_modules=n_modules, in_channels=in_channels,
                           n_classes=n_classes, seed_rng=member_rng.split_label("init"),
                           dtype=dtype)
        traces.append(train(net, values, mask, labels, config,
                            member_rng.split_label("train")))
        members.append(net)
    return EnsembleModel(members=members, config=config, loss_traces=traces)


def predict_ensemble(model: EnsembleModel, values: np.ndarray,
                     mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean-softmax labels and probabilities; ties go to the lowest class."""
    proba = np.mean(
        [softmax_probs(net.forward(values, mask, training=False)) for net in model.members],
        axis=0,
    )
    return np.argmax(proba, axis=1), proba
