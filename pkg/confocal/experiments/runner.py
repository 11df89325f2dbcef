"""
Experiment registry, configuration loading and report assembly
"""

import csv
import io
import json
import time
from typing import Any, Dict, Iterable, List, Optional, Tuple, Type

import numpy as np
import structlog
from dotenv import dotenv_values
from pydantic import ValidationError

from confocal import __version__
from confocal.config import settings
from confocal.errors import ConfigError, ConfocalError
from confocal.experiments.base import BaseExperiment
from confocal.experiments.billiards import Chasles2DExperiment, Darboux3DExperiment, DualizeExperiment
from confocal.experiments.geodesics import ClosedGeodesicExperiment, GeodesicExperiment
from confocal.experiments.identities import IvoryExperiment, LameExperiment, SJExperiment
from confocal.experiments.threads import GravesExperiment, StaudeExperiment
from confocal.schemas.experiment import (
    ExperimentConfig,
    ExperimentReport,
    Provenance,
    SampleRecord,
    Statistics,
)

logger = structlog.get_logger()

EXPERIMENTS: Dict[str, Type[BaseExperiment]] = {
    "ivory-check": IvoryExperiment,
    "lame-orthogonality": LameExperiment,
    "graves": GravesExperiment,
    "chasles-2d": Chasles2DExperiment,
    "darboux-3d": Darboux3DExperiment,
    "staude": StaudeExperiment,
    "geodesic": GeodesicExperiment,
    "closed-geodesic": ClosedGeodesicExperiment,
    "sj-check": SJExperiment,
    "dualize": DualizeExperiment,
}

# Keys of a config file that configure the run rather than the experiment
RESERVED_KEYS = ("experiment", "seed", "output")


def get_experiment(name: str) -> Type[BaseExperiment]:
    experiment_class = EXPERIMENTS.get(name)
    if not experiment_class:
        raise ConfigError(
            f"Unknown experiment: {name}",
            errors=[{"loc": ["experiment"], "msg": f"choose one of {sorted(EXPERIMENTS)}", "type": "value_error"}],
        )
    return experiment_class


def decode_value(raw: str) -> Any:
    """JSON literal when the text parses as one, the text itself otherwise"""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def load_config_file(path: str) -> Dict[str, Any]:
    """Flat `key = value` file; values are decoded as JSON literals when possible"""
    values = dotenv_values(path)
    out = {}
    for key, raw in values.items():
        if raw is None:
            raise ConfigError(
                f"missing value for {key}",
                errors=[{"loc": [key], "msg": "expected key = value", "type": "missing"}],
                path=path,
            )
        out[key] = decode_value(raw)
    return out


def parse_overrides(items: Iterable[str]) -> Dict[str, Any]:
    """`key=value` command-line overrides"""
    out = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(
                f"override must look like key=value: {item}",
                errors=[{"loc": [item], "msg": "expected key=value", "type": "value_error"}],
            )
        out[key.strip()] = decode_value(raw.strip())
    return out


def build_config(
    experiment: str,
    config_path: Optional[str] = None,
    overrides: Iterable[str] = (),
    seed: Optional[int] = None,
    tol: Optional[float] = None,
    output: Optional[str] = None,
) -> ExperimentConfig:
    """Merge file values, `--set` overrides and flags; later sources win"""
    values: Dict[str, Any] = {}
    if config_path:
        values.update(load_config_file(config_path))
    values.update(parse_overrides(overrides))

    named = values.pop("experiment", experiment)
    if named != experiment:
        logger.warning("config_experiment_ignored", file_value=named, experiment=experiment)
    run_values = {key: values.pop(key) for key in RESERVED_KEYS[1:] if key in values}
    if seed is not None:
        run_values["seed"] = seed
    if output is not None:
        run_values["output"] = output
    if tol is not None:
        values["tol"] = tol
    try:
        return ExperimentConfig(experiment=experiment, params=values, **run_values)
    except ValidationError as exc:
        raise ConfigError("invalid run configuration", errors=_diagnostics(exc))


def _diagnostics(exc: ValidationError) -> List[Dict[str, Any]]:
    return [
        {"loc": [str(part) for part in err["loc"]], "msg": err["msg"], "type": err["type"]}
        for err in exc.errors(include_url=False)
    ]


def validate_params(config: ExperimentConfig):
    experiment_class = get_experiment(config.experiment)
    try:
        return experiment_class.params_model.model_validate(config.params)
    except ValidationError as exc:
        raise ConfigError(f"invalid parameters for {config.experiment}", errors=_diagnostics(exc))


def summarize(records: List[SampleRecord], tol: float, failed: bool) -> Statistics:
    deviations = np.array([r.deviation for r in records], dtype=float)
    if deviations.size == 0:
        return Statistics(mean=float("nan"), stddev=float("nan"), max_abs_dev=float("nan"), tolerance=tol, **{"pass": False})
    max_abs = float(np.max(np.abs(deviations)))
    return Statistics(
        mean=float(np.mean(deviations)),
        stddev=float(np.std(deviations)),
        max_abs_dev=max_abs,
        tolerance=tol,
        **{"pass": bool(not failed and max_abs < tol)},
    )


def run_experiment(config: ExperimentConfig, timing: bool = False) -> Tuple[ExperimentReport, BaseExperiment]:
    """Run one experiment; errors raised by the numerics land in the report"""
    params = validate_params(config)
    seed = settings.default_seed if config.seed is None else config.seed
    experiment = get_experiment(config.experiment)(params, np.random.default_rng(seed))

    logger.info("experiment_started", experiment=config.experiment, seed=seed)
    started = time.perf_counter()
    error = None
    try:
        experiment.run()
    except ConfocalError as exc:
        logger.error("experiment_failed", experiment=config.experiment, error=exc.to_dict())
        error = exc.to_dict()
    wall_time = time.perf_counter() - started

    statistics = summarize(experiment.records, params.tol, failed=error is not None)
    logger.info(
        "experiment_finished",
        experiment=config.experiment,
        samples=len(experiment.records),
        max_abs_dev=statistics.max_abs_dev,
        passed=statistics.pass_,
        wall_time=wall_time,
    )
    report = ExperimentReport(
        experiment=config.experiment,
        params=params.model_dump(mode="json"),
        samples=experiment.records,
        statistics=statistics,
        provenance=Provenance(version=__version__, seed=seed, wall_time=wall_time if timing else None),
        error=error,
    )
    return report, experiment


def run(config: ExperimentConfig, timing: bool = False) -> ExperimentReport:
    report, _ = run_experiment(config, timing)
    return report


def report_csv(report: ExperimentReport, columns: Iterable[str]) -> str:
    """One row per sample: index, the experiment's value columns, deviation"""
    header = ["index", *columns, "deviation"]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for sample in report.samples:
        row = [sample.index]
        for column in columns:
            value = sample.values.get(column, "")
            row.append(format(value, ".17g") if isinstance(value, float) else value)
        row.append(format(sample.deviation, ".17g"))
        writer.writerow(row)
    return buffer.getvalue()


def report_schema() -> Dict[str, Any]:
    """Published JSON schema of `report_v1`"""
    return ExperimentReport.model_json_schema(by_alias=True)
