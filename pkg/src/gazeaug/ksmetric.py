"""Two-sample Kolmogorov-Smirnov statistics and the quality score.

The statistic D is the exact supremum distance between the two empirical
CDFs, computed on the merged sorted support, evaluating the step
functions right after each sample point (right-continuous convention,
which also handles ties). The per-column score is 1 - D and the
aggregate score is the unweighted mean over continuous columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySample, SchemaMismatch


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous step CDF of a finite sample."""

    values: np.ndarray  # sorted ascending
    n: int

    @classmethod
    def from_sample(cls, sample) -> "EmpiricalCdf":
        arr = np.sort(np.asarray(sample, dtype=np.float64).ravel())
        if arr.size == 0:
            raise EmptySample("cannot build an empirical CDF from an empty sample")
        if not np.all(np.isfinite(arr)):
            raise EmptySample("empirical CDF requires finite samples")
        return cls(values=arr, n=arr.size)

    def __call__(self, x) -> np.ndarray:
        """F(x) = fraction of samples <= x."""
        return np.searchsorted(self.values, x, side="right") / self.n


def ks_statistic(a, b) -> float:
    """Exact two-sample KS statistic D = sup |F_a - F_b|.

    Both empirical CDFs are evaluated immediately after every point of
    the merged sample, where the supremum of the absolute difference of
    two right-continuous step functions is attained. Symmetric in its
    arguments and always within [0, 1].
    """
    fa = EmpiricalCdf.from_sample(a)
    fb = EmpiricalCdf.from_sample(b)
    grid = np.concatenate([fa.values, fb.values])
    return float(np.max(np.abs(fa(grid) - fb(grid))))


@dataclass(frozen=True)
class KsReport:
    """Per-continuous-column KS statistics and the aggregate score."""

    columns: tuple[str, ...]
    statistics: tuple[float, ...]
    scores: tuple[float, ...] = field(init=False)
    aggregate_score: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(1.0 - d for d in self.statistics))
        agg = float(np.mean(self.scores)) if self.scores else 1.0
        object.__setattr__(self, "aggregate_score", agg)

    def to_dict(self) -> dict:
        return {
            "columns": {
                name: {"statistic": d, "score": s}
                for name, d, s in zip(self.columns, self.statistics, self.scores)
            },
            "aggregate_score": self.aggregate_score,
        }

    def render_text(self) -> str:
        lines = [f"{'column':<12} {'KS statistic':>12} {'score':>8}"]
        for name, d, s in zip(self.columns, self.statistics, self.scores):
            lines.append(f"{name:<12} {d:>12.4f} {s:>8.4f}")
        lines.append(f"{'aggregate':<12} {'':>12} {self.aggregate_score:>8.4f}")
        return "\n".join(lines)


def ks_report(real, synth) -> KsReport:
    """Column-wise KS comparison of two row tables with matching schemas.

    Discrete columns are excluded; the aggregate is the mean of (1 - D)
    over the continuous columns.
    """
    if real.schema != synth.schema:
        raise SchemaMismatch(
            f"row tables disagree on schema: {real.schema} vs {synth.schema}"
        )
    names, stats = [], []
    for idx, col in enumerate(real.schema):
        if col.kind != "continuous":
            continue
        names.append(col.name)
        stats.append(ks_statistic(real.column(idx), synth.column(idx)))
    return KsReport(columns=tuple(names), statistics=tuple(stats))
