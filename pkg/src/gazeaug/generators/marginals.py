"""Per-column transforms shared by the tabular generators.

MarginalModel carries an empirical CDF over the training values of one
continuous column; forward maps data to (0, 1) via Hazen plotting
positions with linear interpolation, and inverse maps back, clamped to
the observed [min, max]. ModeNormalizer encodes a continuous value as a
(mixture mode, bounded offset) pair so multimodal columns stay in a
range a tanh output can cover.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import DegenerateColumnWarning, DomainError
from ..numeric import GaussianMixture1D, gmm_fit_em, std_normal_cdf, std_normal_quantile
from ..rng import RngState

MODE_SCALE = 4.0  # alpha = (x - mu_m) / (MODE_SCALE * sigma_m)


class MarginalModel:
    """Empirical CDF of one continuous column with interpolation.

    Unique sorted training values v_j receive plotting positions
    p_j = (c_j - 0.5 m_j) / n, where c_j counts samples <= v_j and m_j
    is the multiplicity of v_j, so forward(v_j) and inverse(p_j) are
    exact inverses at the order statistics.
    """

    __slots__ = ("name", "values", "positions", "constant")

    def __init__(self, name: str, values: np.ndarray, positions: np.ndarray,
                 constant: float | None = None):
        self.name = name
        self.values = values
        self.positions = positions
        self.constant = constant

    @classmethod
    def fit(cls, name: str, column) -> "MarginalModel":
        col = np.sort(np.asarray(column, dtype=np.float64).ravel())
        if col.size == 0:
            raise DomainError(f"column {name!r}: cannot fit a marginal on no data")
        uniq, counts = np.unique(col, return_counts=True)
        if uniq.size < 2:
            warnings.warn(
                f"column {name!r} is constant; modelling it as the constant {uniq[0]}",
                DegenerateColumnWarning,
                stacklevel=2,
            )
            return cls(name, uniq, np.array([0.5]), constant=float(uniq[0]))
        n = col.size
        cumulative = np.cumsum(counts)
        positions = (cumulative - 0.5 * counts) / n
        return cls(name, uniq, positions, constant=None)

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def forward(self, x) -> np.ndarray:
        """Map data values to (0, 1); clamps outside the training range."""
        x = np.asarray(x, dtype=np.float64)
        if self.is_constant:
            return np.full(x.shape, 0.5)
        return np.interp(x, self.values, self.positions)

    def inverse(self, u) -> np.ndarray:
        """Map probabilities back to data space, clamped to [min, max]."""
        u = np.asarray(u, dtype=np.float64)
        if self.is_constant:
            return np.full(u.shape, self.constant)
        return np.interp(u, self.positions, self.values)

    def to_normal(self, x) -> np.ndarray:
        """Empirical CDF followed by the standard normal quantile."""
        if self.is_constant:
            return np.zeros(np.asarray(x).shape)
        return std_normal_quantile(self.forward(x))

    def from_normal(self, z) -> np.ndarray:
        """Standard normal CDF followed by the inverse empirical CDF."""
        if self.is_constant:
            return np.full(np.asarray(z).shape, self.constant)
        return self.inverse(std_normal_cdf(z))


class ModeNormalizer:
    """Mode-specific normalization of one continuous column.

    A value x is represented by the index of a mixture mode m (sampled
    from the posterior responsibilities when encoding training data) and
    the offset alpha = (x - mu_m) / (4 sigma_m) clamped to [-1, 1];
    decode returns mu_m + 4 sigma_m alpha.
    """

    __slots__ = ("name", "mixture")

    def __init__(self, name: str, mixture: GaussianMixture1D):
        self.name = name
        self.mixture = mixture

    @classmethod
    def fit(cls, name: str, column, max_modes: int = 10, rng: RngState | None = None,
            prune_weight: float = 0.005) -> "ModeNormalizer":
        col = np.asarray(column, dtype=np.float64).ravel()
        k = int(min(max_modes, np.unique(col).size, col.size))
        k = max(k, 1)
        mix = gmm_fit_em(col, k, rng=rng or RngState(0))
        keep = mix.weights >= prune_weight
        if not np.all(keep) and np.any(keep):
            w = mix.weights[keep]
            mix = GaussianMixture1D(w / w.sum(), mix.means[keep], mix.stds[keep])
        return cls(name, mix)

    @property
    def k(self) -> int:
        return self.mixture.k

    def encode(self, x, rng: RngState) -> tuple[np.ndarray, np.ndarray]:
        """Return (alpha, mode index) per value, modes sampled from the
        posterior responsibilities."""
        x = np.asarray(x, dtype=np.float64).ravel()
        resp = self.mixture.responsibilities(x)
        gen = rng.generator()
        cum = np.cumsum(resp, axis=1)
        u = gen.random(x.size)
        modes = (u[:, None] > cum).sum(axis=1)
        modes = np.minimum(modes, self.k - 1)
        mu = self.mixture.means[modes]
        sigma = self.mixture.stds[modes]
        alpha = np.clip((x - mu) / (MODE_SCALE * sigma), -1.0, 1.0)
        return alpha, modes

    def decode(self, alpha, modes) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=np.float64)
        modes = np.asarray(modes, dtype=np.int64)
        return self.mixture.means[modes] + MODE_SCALE * self.mixture.stds[modes] * alpha
