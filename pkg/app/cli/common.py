"""
Configuration resolution and report output shared by the subcommands.
"""
import json
import logging
import os
from datetime import datetime, timezone
from typing import Iterable, List, Optional

import pandas as pd
from pydantic import BaseModel

from app.core.config import settings
from app.core.exceptions import ConfigurationError
from app.models.dataset import DataSet
from app.models.solver import SolverOptions
from app.schemas.run_config import RunConfig
from app.services.dataset import load_dataset

logger = logging.getLogger(__name__)


def _read_config_file(path: str) -> dict:
    if not os.path.isfile(path):
        raise ConfigurationError(f"config file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{path}: invalid JSON ({e})")
    if not isinstance(payload, dict):
        raise ConfigurationError(f"{path}: expected a JSON object")
    return {k.replace('-', '_'): v for k, v in payload.items()}


def resolve_config(args) -> RunConfig:
    """Merge flags over the JSON config file over settings defaults."""
    from_file = _read_config_file(args.config) if getattr(args, 'config', None) else {}
    values = {"subcommand": args.command}
    for field in RunConfig.model_fields:
        if field == "subcommand":
            continue
        flag = getattr(args, field, None)
        if flag is not None:
            values[field] = flag
        elif field in from_file:
            values[field] = from_file[field]
    values.setdefault("alpha", settings.DEFAULT_ALPHA)
    values.setdefault("rho", settings.DEFAULT_RHO)
    values.setdefault("threads", settings.THREADS)
    if values.get("seed") is None and settings.CONTOUR_OPT_SEED is not None:
        values["seed"] = settings.CONTOUR_OPT_SEED
    return RunConfig(**values)


def require_seed(config: RunConfig) -> int:
    if config.seed is None:
        raise ConfigurationError(f"'{config.subcommand}' is randomized: pass --seed or set CONTOUR_OPT_SEED")
    return config.seed


def solver_options(config: RunConfig) -> Optional[SolverOptions]:
    overrides = {}
    if config.kkt_tol is not None:
        overrides["kkt_tol"] = config.kkt_tol
    if config.max_iter is not None:
        overrides["max_iter"] = config.max_iter
    return SolverOptions(**overrides) if overrides else None


def load_data(config: RunConfig, required: bool = True) -> Optional[DataSet]:
    if config.data is None:
        if required:
            raise ConfigurationError(f"'{config.subcommand}' needs --data")
        return None
    schema = None
    if config.r1:
        probe = load_dataset(config.data, header=config.header)
        schema = (config.r1, probe.r2 - config.r1)
        if schema[1] < 0:
            raise ConfigurationError(f"--r1={config.r1} exceeds the {probe.r2} columns of {config.data}")
    return load_dataset(config.data, schema=schema, header=config.header)


def timestamp(config: RunConfig) -> Optional[str]:
    return None if config.no_timestamp else datetime.now(timezone.utc).isoformat()


def write_json(config: RunConfig, name: str, report) -> str:
    """Write a report with sorted keys; identical inputs give identical bytes."""
    os.makedirs(config.out, exist_ok=True)
    path = os.path.join(config.out, name)
    payload = report.model_dump(mode="json") if isinstance(report, BaseModel) else report
    with open(path, 'w', encoding='utf-8') as f:
        f.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    logger.info(f"Wrote {path}")
    return path


def write_csv(config: RunConfig, name: str, rows: Iterable, columns: Optional[List[str]] = None) -> str:
    os.makedirs(config.out, exist_ok=True)
    path = os.path.join(config.out, name)
    frame = pd.DataFrame([r.model_dump(mode="json") if isinstance(r, BaseModel) else r for r in rows])
    if columns is not None:
        frame = frame.reindex(columns=columns)
    frame.to_csv(path, index=False, float_format="%.10g")
    logger.info(f"Wrote {path}")
    return path
