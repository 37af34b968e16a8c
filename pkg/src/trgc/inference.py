"""Significance testing: F-tests, residual-bootstrap percentile intervals, BIC order selection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from scipy import stats

from .errors import InsufficientDataError, RankDeficientError
from .granger import TrgcResult, channel_rss, result_from_arrays, score_arrays
from .var_core import as_array, lag_matrix

#: statistics available to the bootstrap
BOOT_STATISTICS = (
    "F_xy", "F_yx", "F_net", "Ftil_xy", "Ftil_yx", "Ftil_net",
    "D_xy", "D_yx", "D_net", "D_net_full",
)
_CHUNK = 50


@dataclass(frozen=True)
class BootstrapSpec:
    n_boot: int = 500
    alpha: float = 0.05
    statistics: tuple = ("F_net", "Ftil_net", "D_net", "D_net_full")
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n_boot < 100:
            raise ValueError(f"n_boot must be at least 100, got {self.n_boot}")
        unknown = set(self.statistics) - set(BOOT_STATISTICS)
        if unknown:
            raise ValueError(f"unknown statistics: {sorted(unknown)}")
        object.__setattr__(self, "statistics", tuple(self.statistics))


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    estimate: float
    method: str = "percentile"

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def excludes_zero(self) -> bool:
        return self.lower > 0 or self.upper < 0


@dataclass(frozen=True)
class FTestResult:
    statistic: float
    p_value: float
    df_num: int
    df_den: int
    alpha: float

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha


@dataclass(frozen=True)
class BootstrapResult:
    point: TrgcResult
    intervals: Dict[str, ConfidenceInterval]
    samples: Dict[str, np.ndarray] = field(repr=False)
    order: int = 0


# ---------------------------------------------------------------------------
# F-test


def f_test_gc(series, p: int, alpha: float = 0.05) -> Dict[str, FTestResult]:
    """Nested-model F-tests for x -> y and y -> x.

    ``F = ((RSS_r - RSS_f) / p) / (RSS_f / (T_eff - 2p - 1))`` where the extra
    degree of freedom accounts for the removed mean.
    """
    z = as_array(series)
    if z.shape[1] != 2:
        raise ValueError(f"expected a bivariate series, got {z.shape[1]} columns")
    rss_r, rss_f, t_eff = channel_rss(z[np.newaxis], p)
    df_den = t_eff - 2 * p - 1
    out = {}
    # column 1 is the equation of y, i.e. the x -> y test
    for key, ch in (("x->y", 1), ("y->x", 0)):
        out[key] = f_test_from_rss(rss_r[0, ch], rss_f[0, ch], p, df_den, alpha)
    return out


def f_test_from_rss(rss_r: float, rss_f: float, p: int, df_den: int, alpha: float) -> FTestResult:
    if not rss_f > 0:
        raise RankDeficientError("unrestricted model fits perfectly (RSS = 0)")
    if df_den < 1:
        raise InsufficientDataError(f"no residual degrees of freedom left (df={df_den})")
    f_stat = max(float((rss_r - rss_f) / p / (rss_f / df_den)), 0.0)
    p_value = float(stats.f.sf(f_stat, p, df_den))
    return FTestResult(f_stat, p_value, p, df_den, alpha)


# ---------------------------------------------------------------------------
# bootstrap


def two_sided_fit(z: np.ndarray, p: int):
    """Regress ``z_t`` on ``z_{t-p} .. z_{t-1}, z_{t+1} .. z_{t+p}``.

    Returns fitted values and residuals for ``t = p .. T-p-1`` (0-based). The
    regression runs per channel with regressors ordered own-channel first.
    """
    z = np.asarray(z, dtype=float)
    T = z.shape[0]
    n = T - 2 * p
    if n <= 4 * p + 2:
        raise InsufficientDataError(f"T={T} too short for two-sided regression of order {p}")
    mean = z.mean(axis=0)
    zc = z - mean
    fitted = np.empty((n, 2))
    for own in (0, 1):
        cols = []
        for ch in (own, 1 - own):
            cols += [zc[p - k:T - p - k, ch] for k in range(1, p + 1)]
            cols += [zc[p + k:T - p + k, ch] for k in range(1, p + 1)]
        design = np.column_stack(cols)
        target = zc[p:T - p, own]
        beta, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
        if rank < design.shape[1]:
            raise RankDeficientError(f"two-sided design has rank {rank} < {design.shape[1]}")
        fitted[:, own] = design @ beta
    resid = zc[p:T - p] - fitted
    return fitted + mean, resid


def percentile_interval(samples: np.ndarray, alpha: float, estimate: float) -> ConfidenceInterval:
    """Equal-tailed percentile interval.

    The upper bound is computed as the negated lower quantile of the negated
    samples, so negating the samples maps ``(l, u)`` exactly onto ``(-u, -l)``.
    """
    samples = np.asarray(samples, dtype=float)
    lower = float(np.quantile(samples, alpha / 2))
    upper = float(-np.quantile(-samples, alpha / 2))
    return ConfidenceInterval(lower, upper, float(estimate))


def _replicate_indices(seed, n_boot, n):
    children = np.random.SeedSequence(seed).spawn(n_boot)
    return np.stack([np.random.default_rng(c).integers(0, n, size=n) for c in children])


def bootstrap_ci(series, p: int, spec: BootstrapSpec = BootstrapSpec()) -> BootstrapResult:
    """Residual-bootstrap percentile intervals for TRGC statistics.

    Replicates are ``z*_t = zhat_t + e_{s(t)}`` where ``zhat`` and ``e`` come
    from :func:`two_sided_fit` and ``s(t)`` is drawn uniformly, keeping the
    bivariate residual rows intact. Replicate ``b`` draws its indices from the
    ``b``-th child of ``SeedSequence(spec.seed)``, so results do not depend on
    the order or chunking of the evaluation.
    """
    z = as_array(series)
    if z.shape[1] != 2:
        raise ValueError(f"expected a bivariate series, got {z.shape[1]} columns")
    point_arrs = score_arrays(z[np.newaxis], p)
    point = result_from_arrays(point_arrs)
    fitted, resid = two_sided_fit(z, p)
    n = fitted.shape[0]
    idx = _replicate_indices(spec.seed, spec.n_boot, n)

    collected = {k: np.empty(spec.n_boot) for k in spec.statistics}
    for start in range(0, spec.n_boot, _CHUNK):
        sel = idx[start:start + _CHUNK]
        batch = fitted[np.newaxis] + resid[sel]
        arrs = score_arrays(batch, p)
        for k in spec.statistics:
            collected[k][start:start + len(sel)] = arrs[k]

    intervals = {
        k: percentile_interval(collected[k], spec.alpha, point_arrs[k][0]) for k in spec.statistics
    }
    return BootstrapResult(point, intervals, collected, p)


# ---------------------------------------------------------------------------
# order selection


def bic_values(series, p_max: int) -> np.ndarray:
    """BIC for orders ``1 .. p_max``, all on the target window ``t = p_max+1 .. T``.

    ``BIC(p) = log det Sigma_ML(p) + d^2 p log(T_eff) / T_eff`` with the
    maximum-likelihood residual covariance ``RSS / T_eff``.
    """
    z = as_array(series)
    T, d = z.shape
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    t_eff = T - p_max
    if t_eff <= d * p_max + 1:
        raise InsufficientDataError(f"T={T} too short for order search up to {p_max}")
    zc = z - z.mean(axis=0)
    target, regs = lag_matrix(zc, p_max)
    out = np.empty(p_max)
    for p in range(1, p_max + 1):
        x = regs[:, :d * p]
        beta, _, rank, _ = np.linalg.lstsq(x, target, rcond=None)
        if rank < d * p:
            raise RankDeficientError(f"regressors of order {p} have rank {rank}")
        resid = target - x @ beta
        sign, logdet = np.linalg.slogdet(resid.T @ resid / t_eff)
        if sign <= 0:
            raise RankDeficientError(f"degenerate residual covariance at order {p}")
        out[p - 1] = logdet + d * d * p * np.log(t_eff) / t_eff
    return out


def select_order_bic(series, p_max: int = 10) -> int:
    """BIC-optimal lag order in ``1 .. p_max``; ties go to the smaller order."""
    return int(np.argmin(bic_values(series, p_max))) + 1
