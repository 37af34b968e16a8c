"""File formats: series CSV, model JSON, experiment configs and result tables.

Floats are written with ``repr``, the shortest string that parses back to the
same double, so every write/read round trip is lossless.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .errors import ConfigError, MissingInputError, ModelError, SchemaError
from .granger import RULES
from .scenarios import ExperimentResult, InferenceConfig, ScenarioConfig
from .structural import structural_from_dict
from .var_core import TimeSeries, VarModel

RESULT_COLUMNS = ("scenario", "method", "condition", "tpr", "fpr", "n")
DEFAULT_METHODS = ("standard-gc", "net-gc", "diff-trgc")


def _read_text(path) -> str:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"input file not found: {path}")
    return path.read_text(encoding="utf-8")


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# series CSV


def format_series_csv(series: TimeSeries, comment: Optional[str] = None) -> str:
    buf = _io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    buf.write(",".join(("t",) + tuple(series.names)) + "\n")
    for t, row in enumerate(series.data):
        buf.write(",".join([str(t)] + [repr(float(v)) for v in row]) + "\n")
    return buf.getvalue()


def write_series_csv(series: TimeSeries, path, comment: Optional[str] = None) -> None:
    """Write ``t,<names...>`` rows, preceded by ``# comment`` lines if given."""
    _write_text(path, format_series_csv(series, comment))


def parse_series_csv(text: str, columns: Optional[Sequence[str]] = ("x", "y")) -> TimeSeries:
    """Parse series CSV text, selecting ``columns`` (all non-``t`` columns if None)."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise SchemaError("series CSV has no header row")
    rows = list(csv.reader(lines))
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "t":
        raise SchemaError(f"series CSV header must start with 't', got {header[:1]}")
    wanted = [h for h in header[1:]] if columns is None else list(columns)
    for col in wanted:
        if col not in header[1:]:
            raise SchemaError(f"series CSV lacks column {col!r}")
    idx = [header.index(c) for c in wanted]
    try:
        data = np.array([[float(r[i]) for i in idx] for r in rows[1:]], dtype=float)
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"malformed series CSV row: {exc}") from None
    if data.shape[0] == 0:
        raise SchemaError("series CSV has no data rows")
    try:
        return TimeSeries(data, tuple(wanted))
    except ModelError as exc:
        raise SchemaError(str(exc)) from None


def read_series_csv(path, columns: Optional[Sequence[str]] = ("x", "y")) -> TimeSeries:
    return parse_series_csv(_read_text(path), columns)


# ---------------------------------------------------------------------------
# JSON


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    _write_text(path, dumps(obj))


def read_json(path) -> dict:
    text = _read_text(path)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return obj


def read_model(path) -> VarModel:
    return VarModel.from_dict(read_json(path))


def read_structural(path):
    return structural_from_dict(read_json(path))


# ---------------------------------------------------------------------------
# experiment configs
#
# scenario: additive-noise         # required
# seed: 0
# n_reps: 100
# T: 2000
# p_gen: 5
# sigma_A: 0.2
# gamma: 0.75
# noise_kind: mixed-autocorrelated
# interaction: false
# tau: 1
# methods: [standard-gc, net-gc, diff-trgc]
# inference: {order: bic, p_max: 10, alpha: 0.05, n_boot: 500}
# grid: {gamma: [0, 0.25, 0.5]}    # optional, one run per grid point
# workers: 1                       # optional, worker processes

_SCENARIO_KEYS = ("scenario", "T", "p_gen", "sigma_A", "gamma", "noise_kind", "interaction", "tau", "n_reps", "seed")
_INFERENCE_KEYS = ("order", "p_max", "alpha", "n_boot")
_TOP_KEYS = set(_SCENARIO_KEYS) | {"methods", "inference", "grid", "workers"}


@dataclass
class ExperimentPlan:
    """Parsed experiment configuration; ``text`` keeps the file verbatim."""

    scenario: ScenarioConfig
    methods: List[str]
    inference: InferenceConfig
    grid: Dict[str, list] = field(default_factory=dict)
    workers: Optional[int] = None
    text: str = ""


def plan_from_dict(raw: dict, text: str = "") -> ExperimentPlan:
    if not isinstance(raw, dict):
        raise ConfigError("experiment config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "scenario" not in raw:
        raise ConfigError("experiment config needs a 'scenario' key")
    inf_raw = raw.get("inference") or {}
    if not isinstance(inf_raw, dict) or set(inf_raw) - set(_INFERENCE_KEYS):
        raise ConfigError(f"'inference' accepts only {', '.join(_INFERENCE_KEYS)}")
    grid = raw.get("grid") or {}
    if not isinstance(grid, dict):
        raise ConfigError("'grid' must map config keys to lists of values")
    for key, values in grid.items():
        if key not in _SCENARIO_KEYS or key == "scenario":
            raise ConfigError(f"cannot vary {key!r} in a grid")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"grid values for {key!r} must be a non-empty list")
    methods = raw.get("methods", list(DEFAULT_METHODS))
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in RULES]
    if bad or not methods:
        raise ConfigError(f"unknown methods {bad}; choose from {', '.join(RULES)}")
    try:
        scenario = ScenarioConfig(**{k: raw[k] for k in _SCENARIO_KEYS if k in raw})
        inference = InferenceConfig(**inf_raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    workers = raw.get("workers")
    return ExperimentPlan(scenario, list(methods), inference, dict(grid), workers, text)


def read_experiment_config(path, overrides: Optional[dict] = None) -> ExperimentPlan:
    text = _read_text(path)
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: cannot parse config ({exc})") from None
    raw = dict(raw or {})
    overrides = dict(overrides or {})
    inference = overrides.pop("inference", None)
    raw.update(overrides)
    if inference:
        base = raw.get("inference") or {}
        if not isinstance(base, dict):
            raise ConfigError("'inference' must be a mapping")
        raw["inference"] = {**base, **inference}
    return plan_from_dict(raw, text)


# ---------------------------------------------------------------------------
# result tables


def format_results_csv(results: Sequence[ExperimentResult]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for res in results:
        for row in res.rows():
            writer.writerow([row["scenario"], row["method"], row["condition"],
                             repr(row["tpr"]), repr(row["fpr"]), row["n"]])
    return buf.getvalue()


def results_document(results: Sequence[ExperimentResult], plan: ExperimentPlan) -> dict:
    return {
        "config_text": plan.text,
        "methods": plan.methods,
        "inference": {k: getattr(plan.inference, k) for k in _INFERENCE_KEYS},
        "n_failed": sum(r.n_failed for r in results),
        "rows": [row for r in results for row in r.rows()],
        "conditions": [r.to_dict() for r in results],
    }


def write_results(results: Sequence[ExperimentResult], plan: ExperimentPlan, prefix) -> Tuple[Path, Path]:
    """Write ``<prefix>.csv`` and ``<prefix>.json``."""
    prefix = Path(prefix)
    csv_path, json_path = prefix.with_name(prefix.name + ".csv"), prefix.with_name(prefix.name + ".json")
    _write_text(csv_path, format_results_csv(results))
    write_json(results_document(results, plan), json_path)
    return csv_path, json_path
