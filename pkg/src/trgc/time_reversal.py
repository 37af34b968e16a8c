"""Analytic VAR representation of the time-reversed process.

For a stable VAR(p) ``z_t`` the reversed series ``z_{-t}`` is again a VAR(p),

    z_t = At_1 z_{t+1} + ... + At_p z_{t+p} + et_t,

whose cross-covariances are the transposes of the original ones. ``reverse_var1``
implements the closed form for p = 1 and ``reverse_varp`` the general
construction through the blocks of the inverse stacked covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ModelError, SingularMatrixError
from .var_core import (
    MAX_CONDITION,
    CrossCovSequence,
    VarModel,
    check_stability,
    solve_cross_covariances,
)


@dataclass(frozen=True)
class PrecisionBlocks:
    """``Q = C_Z(0)^{-1}`` partitioned into ``d x d`` blocks."""

    matrix: np.ndarray
    order: int
    dim: int

    def block(self, l: int, k: int) -> np.ndarray:
        """Block ``Q_{l,k}`` with 1-based indices; index 0 yields zeros."""
        d = self.dim
        if l == 0 or k == 0:
            return np.zeros((d, d))
        return self.matrix[(l - 1) * d:l * d, (k - 1) * d:k * d]


def _condition_guard(mat, what):
    cond = float(np.linalg.cond(mat))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularMatrixError(f"{what} is singular or ill-conditioned", cond)


def precision_blocks(covs: CrossCovSequence, p: int) -> PrecisionBlocks:
    cz0 = covs.stacked(p)
    _condition_guard(cz0, "stacked covariance C_Z(0)")
    q = np.linalg.inv(cz0)
    return PrecisionBlocks(0.5 * (q + q.T), p, covs.dim)


def reverse_var1(model: VarModel) -> VarModel:
    if model.order != 1:
        raise ModelError(f"reverse_var1 needs a VAR(1), got order {model.order}")
    c0 = solve_cross_covariances(model, 0).lag(0)
    _condition_guard(c0, "covariance C(0)")
    a = model.coeffs[0]
    c0_at = c0 @ a.T
    # right-multiplication by C(0)^{-1}, using symmetry of C(0)
    a_rev = np.linalg.solve(c0, c0_at.T).T
    sigma_rev = c0 - a_rev @ a @ c0
    return VarModel(a_rev[np.newaxis], 0.5 * (sigma_rev + sigma_rev.T))


def reverse_varp(model: VarModel) -> VarModel:
    """Time-reversed VAR(p) of a stable model with invertible ``Sigma``."""
    p, d = model.order, model.dim
    sigma = model.resid_cov
    _condition_guard(sigma, "residual covariance")
    covs = solve_cross_covariances(model, p)
    q = precision_blocks(covs, p)

    sigma_inv = np.linalg.inv(sigma)
    a_p = model.coeffs[p - 1]
    lead = q.block(p, p) + a_p.T @ sigma_inv @ a_p
    lead = 0.5 * (lead + lead.T)

    def coeff(j):
        return -np.eye(d) if j == 0 else model.coeffs[j - 1]

    rhs = np.stack([q.block(p, p - j) + a_p.T @ sigma_inv @ coeff(p - j) for j in range(1, p + 1)])
    coeffs_rev = -np.linalg.solve(lead, np.concatenate(list(rhs), axis=1))
    coeffs_rev = np.stack([coeffs_rev[:, k * d:(k + 1) * d] for k in range(p)])
    sigma_rev = np.linalg.inv(lead)

    reversed_model = VarModel(coeffs_rev, 0.5 * (sigma_rev + sigma_rev.T))
    stab = check_stability(reversed_model)
    if not stab.stable:
        raise ConsistencyError(
            f"reversed model came out unstable (spectral radius {stab.radius:.6g})"
        )
    return reversed_model


def mixture_symmetry_check(covs: CrossCovSequence) -> np.ndarray:
    """Largest absolute entry of ``C(h) - C(h)^T`` for every lag ``h``.

    All entries vanish for instantaneous mixtures of independent sources; the
    maximum over lags is the usual summary.
    """
    diff = covs.covs - np.transpose(covs.covs, (0, 2, 1))
    return np.max(np.abs(diff), axis=(1, 2))
