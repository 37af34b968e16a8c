"""Structural VAR and mixture-of-sources models, and their reduction to plain VAR form.

Only the forward conversions are offered. Recovering an SVAR or a mixing
matrix from a VAR is not unique from second-order statistics alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelError, SchemaError, SingularMatrixError
from .var_core import MAX_CONDITION, VarModel


def _invertible(mat, what):
    cond = float(np.linalg.cond(mat))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularMatrixError(f"{what} is singular", cond)


@dataclass(frozen=True)
class SvarModel:
    """``z_t = Gamma_0 z_t + sum_h Gamma_h z_{t-h} + eps_t`` with ``diag(Gamma_0) = 0``."""

    gamma0: np.ndarray
    gammas: np.ndarray
    resid_cov: np.ndarray

    def __post_init__(self):
        g0 = np.array(self.gamma0, dtype=float)
        gs = np.array(self.gammas, dtype=float)
        if gs.ndim == 2:
            gs = gs[np.newaxis]
        d = g0.shape[0]
        if g0.shape != (d, d) or gs.ndim != 3 or gs.shape[1:] != (d, d):
            raise ModelError("Gamma matrices must be square and of matching size")
        if np.any(np.diag(g0) != 0):
            raise ModelError("Gamma_0 must have a zero diagonal")
        object.__setattr__(self, "gamma0", g0)
        object.__setattr__(self, "gammas", gs)
        object.__setattr__(self, "resid_cov", np.array(self.resid_cov, dtype=float))

    @property
    def order(self) -> int:
        return self.gammas.shape[0]

    def to_dict(self) -> dict:
        return {
            "p": self.order,
            "d": self.gamma0.shape[0],
            "Gamma0": self.gamma0.tolist(),
            "A": self.gammas.tolist(),
            "Sigma": self.resid_cov.tolist(),
        }


@dataclass(frozen=True)
class MixtureModel:
    """Observed ``z_t = M s_t`` of latent sources ``s_t`` following a VAR."""

    mixing: np.ndarray
    latent: VarModel

    def __post_init__(self):
        m = np.array(self.mixing, dtype=float)
        if m.shape != (self.latent.dim, self.latent.dim):
            raise ModelError(f"mixing matrix must be {self.latent.dim}x{self.latent.dim}")
        object.__setattr__(self, "mixing", m)

    def to_dict(self) -> dict:
        out = self.latent.to_dict()
        out["M"] = self.mixing.tolist()
        return out


def svar_to_var(svar: SvarModel) -> VarModel:
    """``A_h = (I - Gamma_0)^{-1} Gamma_h``, ``Sigma = (I - Gamma_0)^{-1} S (I - Gamma_0)^{-T}``."""
    d = svar.gamma0.shape[0]
    lhs = np.eye(d) - svar.gamma0
    _invertible(lhs, "I - Gamma_0")
    coeffs = np.stack([np.linalg.solve(lhs, g) for g in svar.gammas])
    half = np.linalg.solve(lhs, svar.resid_cov)
    sigma = np.linalg.solve(lhs, half.T).T
    return VarModel(coeffs, 0.5 * (sigma + sigma.T))


def mixture_to_var(mix: MixtureModel) -> VarModel:
    """``A_h = M B_h M^{-1}``, ``Sigma = M Sigma_s M^T``."""
    m = mix.mixing
    _invertible(m, "mixing matrix M")
    # X M^{-1} computed as solve(M^T, X^T)^T
    coeffs = np.stack([np.linalg.solve(m.T, (m @ b).T).T for b in mix.latent.coeffs])
    sigma = m @ mix.latent.resid_cov @ m.T
    return VarModel(coeffs, 0.5 * (sigma + sigma.T))


def structural_from_dict(obj: dict):
    """Parse SVAR (``Gamma0`` key) or mixture (``M`` key) JSON."""
    try:
        if "Gamma0" in obj:
            model = SvarModel(obj["Gamma0"], obj["A"], obj["Sigma"])
        elif "M" in obj:
            model = MixtureModel(obj["M"], VarModel(obj["A"], obj["Sigma"]))
        else:
            raise SchemaError("structural model JSON needs a 'Gamma0' or an 'M' field")
    except KeyError as exc:
        raise SchemaError(f"structural model JSON lacks field {exc.args[0]!r}") from None
    if "p" in obj:
        order = model.order if isinstance(model, SvarModel) else model.latent.order
        if int(obj["p"]) != order:
            raise SchemaError(f"declared p={obj['p']} but {order} lag matrices given")
    return model


def to_var(model) -> VarModel:
    if isinstance(model, SvarModel):
        return svar_to_var(model)
    if isinstance(model, MixtureModel):
        return mixture_to_var(model)
    raise TypeError(f"cannot convert {type(model).__name__}")
