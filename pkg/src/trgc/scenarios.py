"""Simulation scenarios and the true/false-positive experiment runner.

Every repetition derives its own seeds from ``(config.seed, repetition)``, so
results are identical however the repetitions are scheduled.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, GenerationError, TrgcError
from .granger import RULES, decide
from .inference import BootstrapSpec, bootstrap_ci, f_test_gc, select_order_bic
from .var_core import TimeSeries, VarModel, simulate, spectral_radius

log = logging.getLogger(__name__)

SCENARIOS = (
    "noiseless-unidir",
    "linear-mixing",
    "hidden-cause",
    "additive-noise",
    "long-memory",
    "downsample",
    "aggregate",
)
NOISE_KINDS = ("independent-white", "mixed-white", "mixed-autocorrelated")
_SIGMA_A_DEFAULTS = {"hidden-cause": 0.3, "downsample": 0.3, "aggregate": 0.3}

LONG_MEMORY_MODEL = VarModel([[0.95, 0.0], [1.0, 0.5]], np.eye(2))


@dataclass(frozen=True)
class ScenarioConfig:
    """Generator settings for one experimental condition.

    ``sigma_A`` defaults to 0.2, or 0.3 for the hidden-cause and decimation
    scenarios. ``interaction`` selects coupled (x -> y) latents for the
    additive-noise scenario.
    """

    scenario: str
    T: int = 2000
    p_gen: int = 5
    sigma_A: Optional[float] = None
    gamma: float = 0.0
    noise_kind: Optional[str] = None
    interaction: bool = False
    tau: int = 1
    n_reps: int = 300
    seed: int = 0
    max_radius: float = 0.97
    max_attempts: int = 100_000

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if int(self.tau) != self.tau or self.tau < 1:
            raise ConfigError(f"tau must be a positive integer, got {self.tau}")
        if self.T < 1 or self.p_gen < 1 or self.n_reps < 0:
            raise ConfigError("T and p_gen must be positive and n_reps non-negative")
        if self.sigma_A is not None and self.sigma_A < 0:
            raise ConfigError(f"sigma_A must be non-negative, got {self.sigma_A}")
        if self.scenario == "additive-noise":
            if self.noise_kind is None:
                object.__setattr__(self, "noise_kind", "mixed-autocorrelated")
            elif self.noise_kind not in NOISE_KINDS:
                raise ConfigError(f"unknown noise kind {self.noise_kind!r}")
        elif self.noise_kind is not None:
            raise ConfigError("noise_kind is only valid for the additive-noise scenario")
        if self.tau != 1 and self.scenario not in ("downsample", "aggregate"):
            raise ConfigError("tau is only valid for the downsample and aggregate scenarios")
        if self.gamma != 0 and self.scenario not in ("additive-noise", "long-memory"):
            raise ConfigError("gamma is only valid for the additive-noise and long-memory scenarios")
        if self.interaction and self.scenario != "additive-noise":
            raise ConfigError("interaction is only configurable for the additive-noise scenario")
        object.__setattr__(self, "tau", int(self.tau))

    @property
    def sigma(self) -> float:
        if self.sigma_A is not None:
            return float(self.sigma_A)
        return _SIGMA_A_DEFAULTS.get(self.scenario, 0.2)

    @property
    def ground_truth(self) -> str:
        if self.scenario in ("noiseless-unidir", "downsample", "aggregate"):
            return "x->y"
        if self.scenario == "long-memory":
            return "x->y" if self.gamma < 1 else "none"
        if self.scenario == "additive-noise":
            return "x->y" if self.interaction and self.gamma < 1 else "none"
        return "none"

    @property
    def condition(self) -> str:
        if self.scenario in ("additive-noise", "long-memory"):
            return f"gamma={self.gamma!r}"
        if self.scenario in ("downsample", "aggregate"):
            return f"tau={self.tau}"
        return f"T={self.T}"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sigma_A"] = self.sigma
        return out


# ---------------------------------------------------------------------------
# building blocks


def random_var(rng, d, p, sigma_A, mask=None, max_radius=0.97, max_attempts=100_000) -> VarModel:
    """Random stable VAR(p) with N(0, sigma_A^2) coefficients and diagonal U(0,1) innovations.

    ``mask`` (d x d, 0/1) zeroes entries in every lag. Draws whose companion
    spectral radius reaches ``max_radius`` are rejected.
    """
    mask = np.ones((d, d)) if mask is None else np.asarray(mask, dtype=float)
    for attempt in range(1, max_attempts + 1):
        coeffs = rng.normal(0.0, sigma_A, size=(p, d, d)) * mask
        if spectral_radius(coeffs) < max_radius:
            break
    else:
        raise GenerationError(
            f"no stable draw within {max_attempts} attempts (d={d}, p={p}, sigma_A={sigma_A})"
        )
    return VarModel(coeffs, np.diag(rng.uniform(0.0, 1.0, size=d)))


def unit_det_matrix(rng, d: int = 2) -> np.ndarray:
    """Gaussian random matrix rescaled to ``|det| = 1`` (sign kept)."""
    while True:
        mat = rng.standard_normal((d, d))
        det = np.linalg.det(mat)
        if abs(det) > 1e-6:
            return mat / abs(det) ** (1.0 / d)


_UNIDIR_MASK = np.array([[1.0, 0.0], [1.0, 1.0]])
_DIAG_MASK = np.eye(2)
_HIDDEN_MASK = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 1.0]])


def _burn_in(cfg, tau=1):
    return 10 * cfg.p_gen * tau


def _draw(cfg, rng, d, mask, sigma=None):
    return random_var(rng, d, cfg.p_gen, cfg.sigma if sigma is None else sigma, mask,
                      cfg.max_radius, cfg.max_attempts)


def _independent_pair(cfg, rng, T):
    return simulate(_draw(cfg, rng, 2, _DIAG_MASK), T, rng, _burn_in(cfg)).data


# ---------------------------------------------------------------------------
# generators


def gen_unidirectional(cfg: ScenarioConfig, rng) -> Tuple[TimeSeries, VarModel]:
    """Bivariate VAR with y -> x coefficients zeroed. Ground truth: x -> y."""
    model = _draw(cfg, rng, 2, _UNIDIR_MASK)
    return simulate(model, cfg.T, rng, _burn_in(cfg)), model


def gen_mixing(cfg: ScenarioConfig, rng, mixing=None) -> TimeSeries:
    """Instantaneous mixture of two independent AR sources. Ground truth: none."""
    latent = _independent_pair(cfg, rng, cfg.T)
    mixing = unit_det_matrix(rng) if mixing is None else np.asarray(mixing, dtype=float)
    return TimeSeries(latent @ mixing.T)


def gen_hidden_cause(cfg: ScenarioConfig, rng) -> TimeSeries:
    """Observed (x, y) of a trivariate VAR where a hidden g drives both."""
    model = _draw(cfg, rng, 3, _HIDDEN_MASK)
    full = simulate(model, cfg.T, rng, _burn_in(cfg)).data
    return TimeSeries(full[:, :2])


def make_noise(kind: str, cfg: ScenarioConfig, rng, T: int) -> np.ndarray:
    if kind == "mixed-autocorrelated":
        base = _independent_pair(cfg, rng, T)
    else:
        scale = np.sqrt(rng.uniform(0.0, 1.0, size=2))
        base = rng.standard_normal((T, 2)) * scale
    if kind == "independent-white":
        return base
    return base @ unit_det_matrix(rng).T


def gen_additive_noise(cfg: ScenarioConfig, rng) -> TimeSeries:
    """``z = (1 - gamma) L + gamma N`` for latent pair L and noise N of the configured kind."""
    if cfg.interaction:
        latent = gen_unidirectional(cfg, rng)[0].data
    else:
        latent = _independent_pair(cfg, rng, cfg.T)
    noise = make_noise(cfg.noise_kind, cfg, rng, cfg.T)
    z = (1.0 - cfg.gamma) * latent + cfg.gamma * noise
    return TimeSeries(z)


def gen_long_memory(gamma: float, rng, T: int = 2000) -> TimeSeries:
    """Long-memory VAR(1) with white noise added to x only. Ground truth: x -> y."""
    latent = simulate(LONG_MEMORY_MODEL, T, rng, burn_in=10).data
    eta = rng.standard_normal(T)
    z = latent.copy()
    z[:, 0] = (1.0 - gamma) * latent[:, 0] + gamma * eta
    return TimeSeries(z)


def downsample(series, tau: int) -> TimeSeries:
    """Keep every ``tau``-th sample, starting with the first."""
    data = series.data if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    return TimeSeries(data[::tau])


def aggregate(series, tau: int) -> TimeSeries:
    """Means over consecutive non-overlapping blocks of ``tau`` samples (remainder dropped)."""
    data = series.data if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    if data.ndim == 1:
        data = data[:, np.newaxis]
    n = data.shape[0] // tau
    if n < 1:
        raise ValueError(f"series of length {data.shape[0]} is shorter than tau={tau}")
    return TimeSeries(data[:n * tau].reshape(n, tau, data.shape[1]).mean(axis=1))


def gen_decimated(cfg: ScenarioConfig, rng) -> TimeSeries:
    """Unidirectional VAR observed after downsampling or temporal aggregation by ``tau``."""
    model = _draw(cfg, rng, 2, _UNIDIR_MASK)
    raw = simulate(model, cfg.tau * cfg.T, rng, _burn_in(cfg, cfg.tau))
    return downsample(raw, cfg.tau) if cfg.scenario == "downsample" else aggregate(raw, cfg.tau)


def generate(cfg: ScenarioConfig, rng) -> TimeSeries:
    """One realization of the configured scenario."""
    kind = cfg.scenario
    if kind == "noiseless-unidir":
        return gen_unidirectional(cfg, rng)[0]
    if kind == "linear-mixing":
        return gen_mixing(cfg, rng)
    if kind == "hidden-cause":
        return gen_hidden_cause(cfg, rng)
    if kind == "additive-noise":
        return gen_additive_noise(cfg, rng)
    if kind == "long-memory":
        return gen_long_memory(cfg.gamma, rng, cfg.T)
    return gen_decimated(cfg, rng)


# ---------------------------------------------------------------------------
# experiment runner


@dataclass(frozen=True)
class InferenceConfig:
    order: Union[int, str] = "bic"
    p_max: int = 10
    alpha: float = 0.05
    n_boot: int = 500

    def __post_init__(self):
        if self.order != "bic" and not (isinstance(self.order, int) and self.order >= 1):
            raise ConfigError(f"order must be 'bic' or a positive integer, got {self.order!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n_boot < 100:
            raise ConfigError(f"n_boot must be at least 100, got {self.n_boot}")


def repetition_seeds(seed: int, rep: int) -> Tuple[int, int]:
    """Generator and bootstrap seeds of repetition ``rep``."""
    state = np.random.SeedSequence(seed, spawn_key=(rep,)).generate_state(2)
    return int(state[0]), int(state[1])


def run_repetition(cfg: ScenarioConfig, methods: Sequence[str], inference: InferenceConfig, rep: int) -> dict:
    gen_seed, boot_seed = repetition_seeds(cfg.seed, rep)
    record = {"rep": rep, "seeds": [gen_seed, boot_seed], "order": None, "decisions": {}, "error": None}
    try:
        series = generate(cfg, np.random.default_rng(gen_seed))
        p = select_order_bic(series, inference.p_max) if inference.order == "bic" else inference.order
        record["order"] = p
        f_tests = f_test_gc(series, p, inference.alpha) if "standard-gc" in methods else None
        intervals = None
        if any(m != "standard-gc" for m in methods):
            spec = BootstrapSpec(inference.n_boot, inference.alpha, seed=boot_seed)
            intervals = bootstrap_ci(series, p, spec).intervals
        for m in methods:
            record["decisions"][m] = decide(m, intervals, f_tests).direction
    except (TrgcError, np.linalg.LinAlgError) as exc:
        record["error"] = f"{getattr(exc, 'category', 'linalg')}: {exc}"
        record["decisions"] = {}
    return record


@dataclass
class ExperimentResult:
    scenario: str
    condition: str
    ground_truth: str
    methods: List[str]
    tp: Dict[str, int]
    fp: Dict[str, int]
    n_valid: int
    n_failed: int
    config: dict
    records: List[dict] = field(repr=False, default_factory=list)

    def rate(self, kind: str, method: str) -> float:
        counts = self.tp if kind == "tp" else self.fp
        return counts[method] / self.n_valid if self.n_valid else float("nan")

    def tpr(self, method: str) -> float:
        return self.rate("tp", method)

    def fpr(self, method: str) -> float:
        return self.rate("fp", method)

    def rows(self) -> List[dict]:
        """Tidy rows ``scenario, method, condition, tpr, fpr, n``; empty when nothing ran."""
        if self.n_valid == 0:
            return []
        return [
            {"scenario": self.scenario, "method": m, "condition": self.condition,
             "tpr": self.tpr(m), "fpr": self.fpr(m), "n": self.n_valid}
            for m in self.methods
        ]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "condition": self.condition,
            "ground_truth": self.ground_truth,
            "methods": list(self.methods),
            "tp": dict(self.tp),
            "fp": dict(self.fp),
            "n_valid": self.n_valid,
            "n_failed": self.n_failed,
            "rows": self.rows(),
            "config": self.config,
            "repetitions": self.records,
        }


def _default_workers():
    env = os.environ.get("TRGC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"TRGC_THREADS must be an integer, got {env!r}") from None
    return 1


def tally(cfg: ScenarioConfig, methods: Sequence[str], records: Sequence[dict]) -> ExperimentResult:
    truth = cfg.ground_truth
    tp = {m: 0 for m in methods}
    fp = {m: 0 for m in methods}
    valid = [r for r in records if r["error"] is None]
    for rec in valid:
        for m in methods:
            direction = rec["decisions"][m]
            detected = {"x->y": direction in ("x->y", "both"), "y->x": direction in ("y->x", "both")}
            if truth == "x->y":
                tp[m] += detected["x->y"]
                fp[m] += detected["y->x"]
            else:
                fp[m] += direction != "none"
    return ExperimentResult(cfg.scenario, cfg.condition, truth, list(methods), tp, fp,
                            len(valid), len(records) - len(valid), cfg.to_dict(), list(records))


def run_experiment(
    cfg: ScenarioConfig,
    methods: Sequence[str] = ("standard-gc", "net-gc", "diff-trgc"),
    inference: InferenceConfig = InferenceConfig(),
    workers: Optional[int] = None,
) -> ExperimentResult:
    """Repeat generation, order selection, scoring and testing ``cfg.n_reps`` times.

    Failed repetitions are recorded and excluded from the rate denominators.
    ``workers`` (default: ``$TRGC_THREADS`` or 1) sets the number of worker
    processes; it has no influence on the results.
    """
    methods = list(methods)
    unknown = [m for m in methods if m not in RULES]
    if unknown:
        raise ConfigError(f"unknown methods {unknown}; choose from {', '.join(RULES)}")
    workers = _default_workers() if workers is None else max(1, int(workers))
    reps = range(cfg.n_reps)
    if workers > 1 and cfg.n_reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_repetition, [cfg] * cfg.n_reps, [methods] * cfg.n_reps,
                                    [inference] * cfg.n_reps, reps, chunksize=4))
    else:
        records = [run_repetition(cfg, methods, inference, r) for r in reps]
    for rec in records:
        if rec["error"] is not None:
            log.warning("repetition %d failed: %s", rec["rep"], rec["error"])
    return tally(cfg, methods, records)


def run_grid(
    cfg: ScenarioConfig,
    grid: Optional[Dict[str, Sequence]] = None,
    methods: Sequence[str] = ("standard-gc", "net-gc", "diff-trgc"),
    inference: InferenceConfig = InferenceConfig(),
    workers: Optional[int] = None,
) -> List[ExperimentResult]:
    """One :func:`run_experiment` per point of the Cartesian product of ``grid`` values."""
    if not grid:
        return [run_experiment(cfg, methods, inference, workers)]
    keys = list(grid)
    results = []
    for values in np.array(np.meshgrid(*[np.arange(len(grid[k])) for k in keys], indexing="ij")).reshape(len(keys), -1).T:
        overrides = {k: grid[k][i] for k, i in zip(keys, values)}
        try:
            point = replace(cfg, **overrides)
        except TypeError as exc:
            raise ConfigError(f"bad grid key: {exc}") from None
        results.append(run_experiment(point, methods, inference, workers))
    return results
