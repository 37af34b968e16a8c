"""Granger scores, time-reversed scores, difference scores and decision rules.

Scores compare the residual variance of a univariate AR(p) fit (restricted
model) with that of the same channel's equation in the bivariate VAR(p) fit
(full model):

    F_xy = log(Sigma_y / Sigma_yy),   F_yx = log(Sigma_x / Sigma_xx),
    F_net = F_xy - F_yx.

Backward ("tilde") scores are the same quantities on the index-reversed data,
and the difference scores are ``D = F - Ft``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import InsufficientDataError, MissingInputError, ModelError, RankDeficientError
from .time_reversal import reverse_varp
from .var_core import VarModel, as_array, require_stable

RULES = (
    "standard-gc",
    "net-gc",
    "conj-trgc",
    "diff-trgc",
    "net-and-diff-trgc",
    "diff-trgc-full",
)
DIRECTIONS = ("x->y", "y->x", "both", "none")

#: keys of the score report, in output order
REPORT_KEYS = ("F_xy", "F_yx", "F_net", "Ftil_xy", "Ftil_yx", "D_xy", "D_yx", "D_net", "D_net_full")


@dataclass(frozen=True)
class GrangerScores:
    F_xy: float
    F_yx: float
    F_net: float
    var_x: Optional[float]   # restricted, Sigma_x
    var_y: Optional[float]   # restricted, Sigma_y
    var_xx: float            # full model, Sigma_xx
    var_yy: float            # full model, Sigma_yy

    @property
    def has_negative(self) -> bool:
        """Finite-sample scores may dip below zero; they are never clipped."""
        return self.F_xy < 0 or self.F_yx < 0


@dataclass(frozen=True)
class TrgcResult:
    forward: GrangerScores
    backward: GrangerScores
    D_xy: float
    D_yx: float
    D_net: float
    D_net_full: float
    restricted_exact: bool = True

    @property
    def Ftil_net(self) -> float:
        return self.backward.F_net

    def report(self) -> dict:
        return {
            "F_xy": self.forward.F_xy,
            "F_yx": self.forward.F_yx,
            "F_net": self.forward.F_net,
            "Ftil_xy": self.backward.F_xy,
            "Ftil_yx": self.backward.F_yx,
            "D_xy": self.D_xy,
            "D_yx": self.D_yx,
            "D_net": self.D_net,
            "D_net_full": self.D_net_full,
        }


@dataclass(frozen=True)
class Decision:
    rule: str
    direction: str
    statistics: dict = field(default_factory=dict)

    def detects(self, direction: str) -> bool:
        return self.direction == direction or (self.direction == "both" and direction != "none")


# ---------------------------------------------------------------------------
# residual sums of squares
#
# Each channel's design is laid out as [target, own lags, other lags], so that
# swapping the two channels produces bit-identical arithmetic with the roles
# exchanged. This makes antisymmetric statistics exactly antisymmetric.


def _channel_design(zt, p, own):
    """Transposed design ``(B, 1 + 2p, T - p)`` for channel ``own`` of ``zt`` ``(B, 2, T)``."""
    other = 1 - own
    T = zt.shape[2]
    out = np.empty((zt.shape[0], 2 * p + 1, T - p))
    out[:, 0] = zt[:, own, p:]
    for k in range(1, p + 1):
        out[:, k] = zt[:, own, p - k:T - k]
        out[:, p + k] = zt[:, other, p - k:T - k]
    return out


def _schur_rss(gram, n_regs):
    g = gram[:, 1:n_regs + 1, 0:1]
    sub = gram[:, 1:n_regs + 1, 1:n_regs + 1]
    try:
        sol = np.linalg.solve(sub, g)
    except np.linalg.LinAlgError:
        raise RankDeficientError("singular regressor Gram matrix") from None
    return gram[:, 0, 0] - np.sum(g[..., 0] * sol[..., 0], axis=1)


def channel_rss(z: np.ndarray, p: int):
    """Restricted and full residual sums of squares, batched.

    Parameters
    ----------
    z : ndarray, shape (B, T, 2)
        Batch of bivariate series; each is demeaned here.
    p : int
        Lag order of both the AR and the VAR regressions.

    Returns
    -------
    rss_restricted, rss_full : ndarray, shape (B, 2)
        Column ``c`` refers to the equation of channel ``c``.
    t_eff : int
        Number of regression targets, ``T - p``.
    """
    z = np.ascontiguousarray(z, dtype=float)
    if z.ndim != 3 or z.shape[2] != 2:
        raise ValueError(f"expected a (B, T, 2) batch, got shape {z.shape}")
    T = z.shape[1]
    t_eff = T - p
    if p < 1 or t_eff - 2 * p < 2:
        raise InsufficientDataError(f"T={T} too short for bivariate order {p}")
    z = z - z.mean(axis=1, keepdims=True)
    zt = np.ascontiguousarray(z.transpose(0, 2, 1))
    rss_r = np.empty((z.shape[0], 2))
    rss_f = np.empty((z.shape[0], 2))
    for own in (0, 1):
        design = _channel_design(zt, p, own)
        gram = np.matmul(design, design.transpose(0, 2, 1))
        rss_r[:, own] = _schur_rss(gram, p)
        rss_f[:, own] = _schur_rss(gram, 2 * p)
    return rss_r, rss_f, t_eff


def score_arrays(z: np.ndarray, p: int) -> dict:
    """All forward, backward and difference scores for a batch ``(B, T, 2)``.

    Residual variances use the degrees-of-freedom corrections ``T_eff - p``
    (restricted) and ``T_eff - 2p`` (full).
    """
    z = np.asarray(z, dtype=float)
    out = {}
    for tag, data in (("", z), ("til", z[:, ::-1, :])):
        rss_r, rss_f, t_eff = channel_rss(data, p)
        var_r = rss_r / (t_eff - p)
        var_f = rss_f / (t_eff - 2 * p)
        f_yx = np.log(var_r[:, 0] / var_f[:, 0])
        f_xy = np.log(var_r[:, 1] / var_f[:, 1])
        out[f"F{tag}_xy"] = f_xy
        out[f"F{tag}_yx"] = f_yx
        out[f"F{tag}_net"] = f_xy - f_yx
        out[f"var{tag}_r"] = var_r
        out[f"var{tag}_f"] = var_f
    out["D_xy"] = out["F_xy"] - out["Ftil_xy"]
    out["D_yx"] = out["F_yx"] - out["Ftil_yx"]
    out["D_net"] = out["D_xy"] - out["D_yx"]
    log_f = np.log(out["var_f"])
    log_b = np.log(out["vartil_f"])
    out["D_net_full"] = (log_b[:, 1] - log_b[:, 0]) - (log_f[:, 1] - log_f[:, 0])
    return out


def _bivariate(series):
    z = as_array(series)
    if z.shape[1] != 2:
        raise ValueError(f"expected a bivariate series, got {z.shape[1]} columns")
    return z


def _scores_from(arrs, tag, i=0):
    var_r, var_f = arrs[f"var{tag}_r"][i], arrs[f"var{tag}_f"][i]
    return GrangerScores(
        F_xy=float(arrs[f"F{tag}_xy"][i]),
        F_yx=float(arrs[f"F{tag}_yx"][i]),
        F_net=float(arrs[f"F{tag}_net"][i]),
        var_x=float(var_r[0]),
        var_y=float(var_r[1]),
        var_xx=float(var_f[0]),
        var_yy=float(var_f[1]),
    )


def granger_scores(series, p: int, direction: str = "forward") -> GrangerScores:
    """Granger scores of a bivariate series in the given time direction.

    The backward scores are the forward scores of the index-reversed series.
    Restricted and full fits share the target window ``t = p+1 .. T``.
    """
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    z = _bivariate(series)
    if direction == "backward":
        z = z[::-1]
    rss_r, rss_f, t_eff = channel_rss(z[np.newaxis], p)
    var_r = rss_r[0] / (t_eff - p)
    var_f = rss_f[0] / (t_eff - 2 * p)
    f_yx = float(np.log(var_r[0] / var_f[0]))
    f_xy = float(np.log(var_r[1] / var_f[1]))
    return GrangerScores(f_xy, f_yx, f_xy - f_yx, float(var_r[0]), float(var_r[1]),
                         float(var_f[0]), float(var_f[1]))


def result_from_arrays(arrs: dict, i: int = 0) -> TrgcResult:
    """Assemble a :class:`TrgcResult` from row ``i`` of :func:`score_arrays` output."""
    return TrgcResult(
        forward=_scores_from(arrs, "", i),
        backward=_scores_from(arrs, "til", i),
        D_xy=float(arrs["D_xy"][i]),
        D_yx=float(arrs["D_yx"][i]),
        D_net=float(arrs["D_net"][i]),
        D_net_full=float(arrs["D_net_full"][i]),
    )


def trgc_from_series(series, p: int) -> TrgcResult:
    return result_from_arrays(score_arrays(_bivariate(series)[np.newaxis], p))


# ---------------------------------------------------------------------------
# population (analytic) scores


def innovation_variance(model: VarModel, channel: int, n_freq: int = 4096) -> float:
    """One-step prediction error variance of a single channel from its own past.

    Uses the Kolmogorov-Szego formula ``exp(mean_w log S(w))`` on a uniform
    frequency grid, where ``S`` is the channel's spectral density (normalised
    so that its mean equals the variance). For a stable model the integrand is
    smooth and periodic, so the grid mean converges geometrically.
    """
    require_stable(model)
    d, p = model.dim, model.order
    omega = 2.0 * np.pi * np.arange(n_freq) / n_freq
    phase = np.exp(-1j * np.outer(omega, np.arange(1, p + 1)))
    transfer = np.eye(d) - np.einsum("wk,kij->wij", phase, model.coeffs)
    h = np.linalg.inv(transfer)
    spec = np.einsum("wi,ij,wj->w", h[:, channel, :], model.resid_cov, h[:, channel, :].conj()).real
    if np.min(spec) <= 0:
        raise ModelError(f"channel {channel} has a vanishing spectral density")
    return float(np.exp(np.mean(np.log(spec))))


def _x_is_autoregressive(model):
    return bool(np.all(model.coeffs[:, 0, 1] == 0))


def trgc_analytic(model: VarModel) -> TrgcResult:
    """Population scores of a stable bivariate VAR.

    Difference scores need only the full-model covariances ``Sigma`` and the
    reversed ``Sigma~``. Restricted variances (which enter ``F`` but cancel in
    ``D``) come from :func:`innovation_variance`; they are finite-order exact
    only when x is itself an AR(p) process (no y -> x coefficients), which
    ``restricted_exact`` flags; otherwise they are quadrature values.
    """
    if model.dim != 2:
        raise ModelError(f"bivariate model required, got d={model.dim}")
    sigma = model.resid_cov
    sigma_rev = reverse_varp(model).resid_cov
    var_x = innovation_variance(model, 0)
    var_y = innovation_variance(model, 1)

    def scores(s):
        f_yx = float(np.log(var_x / s[0, 0]))
        f_xy = float(np.log(var_y / s[1, 1]))
        return GrangerScores(f_xy, f_yx, f_xy - f_yx, var_x, var_y, float(s[0, 0]), float(s[1, 1]))

    d_yx = float(np.log(sigma_rev[0, 0]) - np.log(sigma[0, 0]))
    d_xy = float(np.log(sigma_rev[1, 1]) - np.log(sigma[1, 1]))
    d_full = float((np.log(sigma_rev[1, 1]) - np.log(sigma_rev[0, 0]))
                   - (np.log(sigma[1, 1]) - np.log(sigma[0, 0])))
    return TrgcResult(
        forward=scores(sigma),
        backward=scores(sigma_rev),
        D_xy=d_xy,
        D_yx=d_yx,
        D_net=d_xy - d_yx,
        D_net_full=d_full,
        restricted_exact=_x_is_autoregressive(model),
    )


# ---------------------------------------------------------------------------
# decision rules


def _ci_sign(intervals, key):
    if intervals is None or key not in intervals:
        raise MissingInputError(f"confidence interval for {key!r} is required")
    ci = intervals[key]
    if ci.lower > 0:
        return 1
    if ci.upper < 0:
        return -1
    return 0


def _from_sign(sign):
    return {1: "x->y", -1: "y->x", 0: "none"}[sign]


def decide(rule: str, intervals: Optional[Mapping] = None, f_tests: Optional[Mapping] = None) -> Decision:
    """Turn significance information into a directional decision.

    ``intervals`` maps statistic names (``F_net``, ``Ftil_net``, ``D_net``,
    ``D_net_full``) to objects with ``lower``/``upper`` attributes;
    ``f_tests`` maps ``"x->y"``/``"y->x"`` to objects with a boolean
    ``significant`` attribute.
    """
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; choose from {', '.join(RULES)}")

    if rule == "standard-gc":
        if f_tests is None or "x->y" not in f_tests or "y->x" not in f_tests:
            raise MissingInputError("standard-gc needs F-test results for both directions")
        xy, yx = bool(f_tests["x->y"].significant), bool(f_tests["y->x"].significant)
        direction = {(True, True): "both", (True, False): "x->y",
                     (False, True): "y->x", (False, False): "none"}[(xy, yx)]
        return Decision(rule, direction, {"x->y": f_tests["x->y"], "y->x": f_tests["y->x"]})

    if rule in ("net-gc", "diff-trgc", "diff-trgc-full"):
        key = {"net-gc": "F_net", "diff-trgc": "D_net", "diff-trgc-full": "D_net_full"}[rule]
        return Decision(rule, _from_sign(_ci_sign(intervals, key)), {key: intervals[key]})

    if rule == "conj-trgc":
        fwd, bwd = _ci_sign(intervals, "F_net"), _ci_sign(intervals, "Ftil_net")
        sign = fwd if fwd != 0 and bwd == -fwd else 0
        return Decision(rule, _from_sign(sign), {k: intervals[k] for k in ("F_net", "Ftil_net")})

    # net-and-diff-trgc
    net, diff = _ci_sign(intervals, "F_net"), _ci_sign(intervals, "D_net")
    sign = net if net != 0 and diff == net else 0
    return Decision(rule, _from_sign(sign), {k: intervals[k] for k in ("F_net", "D_net")})
