"""VAR(p) processes: representation, stability, Yule-Walker equations, simulation and OLS fits.

Coefficient matrices are stored as an array of shape ``(p, d, d)`` holding
``A_1 .. A_p`` for the recursion

    z_t = A_1 z_{t-1} + ... + A_p z_{t-p} + e_t,   Cov(e_t) = Sigma.

Cross-covariances follow ``C(h) = E[z_t z_{t-h}^T]`` so that ``C(-h) = C(h)^T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    InsufficientDataError,
    ModelError,
    RankDeficientError,
    SingularMatrixError,
    UnstableModelError,
)

#: models with spectral radius above ``1 - STABILITY_EPS`` count as unstable
STABILITY_EPS = 1e-8
#: companion dimension up to which the Lyapunov equation is solved via Kronecker products
KRON_MAX_DIM = 12
#: condition-number ceiling for stacked covariance matrices
MAX_CONDITION = 1e12

_SYM_TOL = 1e-8


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class VarModel:
    """A zero-mean VAR(p) model.

    Parameters
    ----------
    coeffs : array_like, shape (p, d, d) or (d, d)
        Autoregressive matrices ``A_1 .. A_p``. A single ``(d, d)`` matrix is
        read as a VAR(1).
    resid_cov : array_like, shape (d, d)
        Innovation covariance ``Sigma``; must be symmetric positive semidefinite.
    """

    coeffs: np.ndarray
    resid_cov: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim == 2:
            coeffs = coeffs[np.newaxis]
        if coeffs.ndim != 3 or coeffs.shape[0] < 1 or coeffs.shape[1] != coeffs.shape[2]:
            raise ModelError(f"coefficients must have shape (p, d, d), got {coeffs.shape}")
        d = coeffs.shape[1]
        sigma = np.array(self.resid_cov, dtype=float)
        if sigma.ndim == 0 and d == 1:
            sigma = sigma.reshape(1, 1)
        if sigma.shape != (d, d):
            raise ModelError(f"residual covariance must be {d}x{d}, got {sigma.shape}")
        if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(sigma))):
            raise ModelError("model contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(sigma))))
        if np.max(np.abs(sigma - sigma.T)) > _SYM_TOL * scale:
            raise ModelError("residual covariance is not symmetric")
        sigma = _symmetrize(sigma)
        if np.min(np.linalg.eigvalsh(sigma)) < -_SYM_TOL * scale:
            raise ModelError("residual covariance is not positive semidefinite")
        coeffs.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "resid_cov", sigma)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0]

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def to_dict(self) -> dict:
        return {
            "p": self.order,
            "d": self.dim,
            "A": self.coeffs.tolist(),
            "Sigma": self.resid_cov.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "VarModel":
        try:
            model = cls(obj["A"], obj["Sigma"])
        except KeyError as exc:
            raise ModelError(f"model JSON lacks field {exc.args[0]!r}") from None
        if "p" in obj and int(obj["p"]) != model.order:
            raise ModelError(f"declared p={obj['p']} but {model.order} matrices given")
        if "d" in obj and int(obj["d"]) != model.dim:
            raise ModelError(f"declared d={obj['d']} but matrices are {model.dim}x{model.dim}")
        return model


@dataclass(frozen=True)
class ArModel:
    """Univariate AR(p) model ``x_t = sum_k a_k x_{t-k} + xi_t``."""

    coeffs: np.ndarray
    resid_var: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.atleast_1d(np.asarray(self.coeffs, dtype=float)))
        if not self.resid_var > 0:
            raise ModelError(f"residual variance must be positive, got {self.resid_var}")

    @property
    def order(self) -> int:
        return self.coeffs.shape[0]


@dataclass(frozen=True)
class CompanionForm:
    """The dp-dimensional VAR(1) embedding ``Z_t = A Z_{t-1} + E_t``."""

    matrix: np.ndarray
    resid_cov: np.ndarray
    dim: int
    order: int


@dataclass(frozen=True)
class CrossCovSequence:
    """Cross-covariance matrices ``C(0) .. C(h_max)`` of a stationary process."""

    covs: np.ndarray

    def __post_init__(self):
        covs = np.array(self.covs, dtype=float)
        if covs.ndim != 3 or covs.shape[1] != covs.shape[2]:
            raise ModelError(f"covariances must have shape (h+1, d, d), got {covs.shape}")
        covs.setflags(write=False)
        object.__setattr__(self, "covs", covs)

    @property
    def dim(self) -> int:
        return self.covs.shape[1]

    @property
    def max_lag(self) -> int:
        return self.covs.shape[0] - 1

    def lag(self, h: int) -> np.ndarray:
        """``C(h)`` for any integer ``|h| <= max_lag``."""
        if abs(h) > self.max_lag:
            raise IndexError(f"lag {h} outside 0..{self.max_lag}")
        return self.covs[h] if h >= 0 else self.covs[-h].T

    def stacked(self, p: int) -> np.ndarray:
        """Block-Toeplitz ``C_Z(0)`` of the p-stacked process, block (i, j) = C(j - i)."""
        if p - 1 > self.max_lag:
            raise IndexError(f"need lags up to {p - 1}, have {self.max_lag}")
        d = self.dim
        out = np.empty((d * p, d * p))
        for i in range(p):
            for j in range(p):
                out[i * d:(i + 1) * d, j * d:(j + 1) * d] = self.lag(j - i)
        return out

    def transposed(self) -> "CrossCovSequence":
        """Covariances of the time-reversed process."""
        return CrossCovSequence(np.transpose(self.covs, (0, 2, 1)))


@dataclass(frozen=True)
class TimeSeries:
    """A ``T x d`` sample matrix with optional column names and provenance."""

    data: np.ndarray
    names: tuple = ()
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, np.newaxis]
        if data.ndim != 2 or data.shape[0] < 1:
            raise ModelError(f"time series must be a non-empty T x d matrix, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ModelError("time series contains non-finite values")
        names = tuple(self.names) or tuple(_default_names(data.shape[1]))
        if len(names) != data.shape[1]:
            raise ModelError(f"{len(names)} names for {data.shape[1]} columns")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", names)

    @property
    def length(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def reversed(self) -> "TimeSeries":
        return TimeSeries(self.data[::-1], self.names, self.seed, dict(self.meta))

    def __len__(self):
        return self.length


def _default_names(d):
    base = ["x", "y", "g"]
    return base[:d] if d <= 3 else [f"z{i}" for i in range(d)]


def as_array(series) -> np.ndarray:
    """Sample matrix of a :class:`TimeSeries` or array-like, as a 2-d float array."""
    if isinstance(series, TimeSeries):
        return series.data
    data = np.asarray(series, dtype=float)
    return data[:, np.newaxis] if data.ndim == 1 else data


# ---------------------------------------------------------------------------
# companion form and stability


def companion_form(model: VarModel) -> CompanionForm:
    d, p = model.dim, model.order
    n = d * p
    mat = np.zeros((n, n))
    mat[:d, :] = np.hstack(list(model.coeffs))
    if p > 1:
        mat[d:, :-d] = np.eye(n - d)
    sig = np.zeros((n, n))
    sig[:d, :d] = model.resid_cov
    return CompanionForm(mat, sig, d, p)


class Stability(NamedTuple):
    stable: bool
    radius: float


def check_stability(model: VarModel) -> Stability:
    """Stability test via the spectral radius of the companion matrix."""
    radius = float(np.max(np.abs(np.linalg.eigvals(companion_form(model).matrix))))
    return Stability(radius < 1.0 - STABILITY_EPS, radius)


def require_stable(model: VarModel) -> Stability:
    """Raise :class:`UnstableModelError` unless the model is stable."""
    stab = check_stability(model)
    if not stab.stable:
        raise UnstableModelError(f"model is not stable (spectral radius {stab.radius:.6g})")
    return stab


# ---------------------------------------------------------------------------
# Yule-Walker equations


def _solve_lyapunov(a: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Solve ``X = A X A^T + Q``."""
    n = a.shape[0]
    if n <= KRON_MAX_DIM:
        lhs = np.eye(n * n) - np.kron(a, a)
        x = np.linalg.solve(lhs, q.reshape(-1)).reshape(n, n)
    else:
        x = scipy.linalg.solve_discrete_lyapunov(a, q)
    return _symmetrize(x)


def solve_cross_covariances(model: VarModel, h_max: int) -> CrossCovSequence:
    """Population cross-covariances ``C(0) .. C(h_max)`` of a stable VAR model."""
    if h_max < 0:
        raise ValueError("h_max must be non-negative")
    require_stable(model)
    comp = companion_form(model)
    d, p = model.dim, model.order
    cz0 = _solve_lyapunov(comp.matrix, comp.resid_cov)
    n_lags = max(h_max, p - 1) + 1
    covs = np.empty((n_lags, d, d))
    for k in range(p):
        covs[k] = cz0[:d, k * d:(k + 1) * d]
    covs[0] = _symmetrize(covs[0])
    for h in range(p, n_lags):
        acc = np.zeros((d, d))
        for k in range(1, p + 1):
            prev = covs[h - k] if h - k >= 0 else covs[k - h].T
            acc += model.coeffs[k - 1] @ prev
        covs[h] = acc
    return CrossCovSequence(covs[:h_max + 1])


def _checked_condition(mat, what):
    cond = float(np.linalg.cond(mat))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularMatrixError(f"{what} is singular or ill-conditioned", cond)
    return cond


def var_from_covariances(covs: CrossCovSequence, p: int) -> VarModel:
    """Invert the Yule-Walker equations: the unique VAR(p) with the given covariances."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if covs.max_lag < p:
        raise ValueError(f"need covariances up to lag {p}, have {covs.max_lag}")
    cz0 = covs.stacked(p)
    _checked_condition(cz0, "stacked covariance C_Z(0)")
    rhs = np.hstack([covs.lag(h) for h in range(1, p + 1)])
    a_stack = np.linalg.solve(cz0, rhs.T).T
    sigma = covs.lag(0) - a_stack @ cz0 @ a_stack.T
    d = covs.dim
    coeffs = np.stack([a_stack[:, k * d:(k + 1) * d] for k in range(p)])
    return VarModel(coeffs, _symmetrize(sigma))


# ---------------------------------------------------------------------------
# simulation


def _psd_sqrt(sigma):
    w, v = np.linalg.eigh(sigma)
    return v * np.sqrt(np.clip(w, 0.0, None))


def simulate(model: VarModel, T: int, rng: np.random.Generator, burn_in: int = 0) -> TimeSeries:
    """Draw ``T`` samples of a stable VAR with Gaussian innovations.

    The initial ``p`` states are drawn from the stationary distribution, after
    which ``burn_in`` further samples are generated and discarded.
    """
    if T < 1 or burn_in < 0:
        raise ValueError("T must be >= 1 and burn_in >= 0")
    require_stable(model)
    d, p = model.dim, model.order
    cz0 = solve_cross_covariances(model, p - 1).stacked(p)
    start = rng.standard_normal(d * p) @ _psd_sqrt(cz0).T
    total = burn_in + T
    innov = rng.standard_normal((total, d)) @ _psd_sqrt(model.resid_cov).T

    z = np.empty((p + total, d))
    # start holds [z_0, z_{-1}, ..., z_{-p+1}]
    z[:p] = start.reshape(p, d)[::-1]
    a_flat = np.hstack(list(model.coeffs))
    for t in range(p, p + total):
        z[t] = a_flat @ z[t - p:t][::-1].reshape(-1) + innov[t - p]
    return TimeSeries(z[p + burn_in:], seed=None)


# ---------------------------------------------------------------------------
# least-squares fits


def lag_matrix(z: np.ndarray, p: int):
    """Targets ``z_t`` (t = p..T-1) and regressors ``[z_{t-1}, ..., z_{t-p}]``."""
    T = z.shape[0]
    target = z[p:]
    regs = np.hstack([z[p - k:T - k] for k in range(1, p + 1)])
    return target, regs


def _check_direction(direction):
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def fit_var_ols(series, p: int, direction: str = "forward") -> VarModel:
    """Least-squares VAR(p) fit after mean removal.

    ``direction='backward'`` regresses ``z_t`` on ``z_{t+1} .. z_{t+p}``, which
    is the forward fit of the index-reversed series. The residual covariance
    is divided by ``T_eff - d p``.
    """
    _check_direction(direction)
    z = as_array(series)
    if direction == "backward":
        z = z[::-1]
    z = np.ascontiguousarray(z)
    T, d = z.shape
    if p < 1:
        raise ValueError("p must be >= 1")
    if T <= d * p + 1 or T - p - d * p < 1:
        raise InsufficientDataError(f"T={T} too short for a {d}-dimensional VAR({p})")
    z = z - z.mean(axis=0)
    target, regs = lag_matrix(z, p)
    beta, _, rank, _ = np.linalg.lstsq(regs, target, rcond=None)
    if rank < d * p:
        raise RankDeficientError(f"regressor matrix has rank {rank} < {d * p}")
    resid = target - regs @ beta
    dof = target.shape[0] - d * p
    sigma = _symmetrize(resid.T @ resid / dof)
    a_stack = beta.T
    coeffs = np.stack([a_stack[:, k * d:(k + 1) * d] for k in range(p)])
    return VarModel(coeffs, sigma)


def fit_ar_univariate(series, p: int, direction: str = "forward") -> ArModel:
    z = as_array(series)
    if z.shape[1] != 1:
        raise ValueError(f"expected a univariate series, got {z.shape[1]} columns")
    fit = fit_var_ols(z, p, direction)
    return ArModel(fit.coeffs[:, 0, 0].copy(), float(fit.resid_cov[0, 0]))


def spectral_radius(coeffs: Sequence[np.ndarray]) -> float:
    """Companion spectral radius of raw coefficient matrices (no model validation)."""
    coeffs = np.asarray(coeffs, dtype=float)
    p, d, _ = coeffs.shape
    n = d * p
    mat = np.zeros((n, n))
    mat[:d, :] = np.hstack(list(coeffs))
    if p > 1:
        mat[d:, :-d] = np.eye(n - d)
    return float(np.max(np.abs(np.linalg.eigvals(mat))))
