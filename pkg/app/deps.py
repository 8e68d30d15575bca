"""Shared plumbing for the subcommands: config merging and object construction."""
import argparse
import logging
import math
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from app.errors import ConfigError
from app.models import GeometryKind, ModelGeometry, SpectralInterval, WeightBasis
from app.schemas import ExperimentConfig
from app.services import geometry, spectra

logger = logging.getLogger(__name__)

# CLI destination -> config field
_FIELD_FOR = {
    "geometry": "geometry",
    "m": "m",
    "weights": "weights",
    "k": "k_list",
    "E": "E",
    "beta": "beta_list",
    "point": "point",
    "P": "interval",
    "w": "w_list",
    "seed": "seed",
    "samples": "samples",
    "bins": "bins",
    "tolerance": "tolerance",
    "out": "out",
    "format": "format",
    "threads": "threads",
}


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value file; command-line flags win over it")
    parser.add_argument("--geometry", choices=[g.value for g in GeometryKind])
    parser.add_argument("--m", type=int, help="complex dimension")
    parser.add_argument("--weights", help="comma separated action weights")
    parser.add_argument("--k", help="tensor powers: list '100,400' or range 'a..b:step'")
    parser.add_argument("--E", type=float, help="level energy")
    parser.add_argument("--P", help="spectral interval such as '[0,0.5)' or '(-inf,1]'")
    parser.add_argument("--beta", help="scaling parameters: list or range")
    parser.add_argument("--point", help="comma separated complex coordinates, e.g. '1+0.5j,0.3'")
    parser.add_argument("--w", help="comma separated complex character arguments")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--bins", type=int)
    parser.add_argument("--tolerance", type=float)
    parser.add_argument("--out", help="output file")
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--no-timestamp", action="store_true", help="omit the wall-clock time from metadata")
    parser.add_argument("--threads", type=int)
    parser.add_argument("-v", "--verbose", action="count", default=0)


def load_config_file(path: str) -> dict:
    """Parse 'key = value' lines; '#' starts a comment."""
    file = Path(path)
    if not file.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(file.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        field = _FIELD_FOR.get(key, key)
        if field not in ExperimentConfig.model_fields:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        values[field] = value
    return values


def merge_config(file_values: dict, args: argparse.Namespace) -> ExperimentConfig:
    values = dict(file_values)
    for dest, field in _FIELD_FOR.items():
        given = getattr(args, dest, None)
        if given is not None:
            values[field] = given
    if getattr(args, "no_timestamp", False):
        values["timestamp"] = False
    try:
        return ExperimentConfig(**values)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "config"
        raise ConfigError(f"invalid {where}: {first.get('msg')}") from exc


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    config = merge_config(file_values, args)
    logger.debug("resolved config %s", config.model_dump(mode="json"))
    return config


def build_geometry(config: ExperimentConfig) -> ModelGeometry:
    return ModelGeometry(kind=config.geometry, m=config.m, weights=tuple(config.weights))


def base_point(config: ExperimentConfig, geom: ModelGeometry) -> np.ndarray:
    """Configured point, or (1, …, 1)."""
    if config.point is None:
        return np.ones(geom.m, dtype=complex)
    return geometry.as_point(geom, config.point)


def interval(config: ExperimentConfig, default: SpectralInterval) -> SpectralInterval:
    return default if config.interval is None else SpectralInterval.parse(config.interval)


def basis_for_points(geom: ModelGeometry, k: int, points, margin: float = 1.05) -> WeightBasis:
    """Basis valid at every point listed; the Bargmann–Fock truncation follows the largest norm."""
    if geom.is_projective:
        return spectra.build_weight_basis(geom, k)
    largest = max(float(np.linalg.norm(p)) for p in points)
    radius = max(1e-3, largest) * margin
    if not math.isfinite(radius):
        raise ConfigError("point norms must be finite")
    return spectra.build_weight_basis(geom, k, radius=radius)
