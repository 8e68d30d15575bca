import csv
import json
import logging
import math
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Sequence

from pydantic import BaseModel

from app.schemas import ExperimentConfig, OutputFormat
from utils.config import OUTPUT_DIR

logger = logging.getLogger(__name__)


def _package_version() -> str:
    try:
        return version("bergman-lab")
    except PackageNotFoundError:
        return "0.0.0+local"


def _clean(value):
    """JSON-safe copy: NaN and infinities become None, complex becomes text."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, complex):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _flatten(row: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in row.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}_"))
        else:
            flat[name] = value
    return flat


def build_metadata(command: str, config: ExperimentConfig, extra: dict | None = None) -> dict:
    meta = {
        "command": command,
        "config": config.model_dump(mode="json"),
        "seed": config.seed,
        "version": _package_version(),
    }
    if config.timestamp:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat()
    if extra:
        meta["extra"] = extra
    return _clean(meta)


def output_path(command: str, config: ExperimentConfig) -> Path:
    if config.out:
        return Path(config.out)
    return Path(OUTPUT_DIR) / f"{command}.{config.format.value}"


def write_rows(command: str, rows: Sequence[BaseModel], config: ExperimentConfig, extra: dict | None = None) -> Path:
    """Write result rows as CSV (plus a .meta.json sidecar) or as one JSON document."""
    path = output_path(command, config)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = build_metadata(command, config, extra)
    records = [_clean(r.model_dump(mode="json")) for r in rows]

    if config.format == OutputFormat.JSON:
        with path.open("w", encoding="utf-8") as f:
            json.dump({"metadata": meta, "rows": records}, f, sort_keys=True, indent=2, ensure_ascii=False)
            f.write("\n")
    else:
        flat = [_flatten(r) for r in records]
        columns = list(flat[0].keys()) if flat else []
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\r\n")
            writer.writeheader()
            for r in flat:
                writer.writerow({k: "" if v is None else v for k, v in r.items()})
        sidecar = path.with_name(path.name + ".meta.json")
        with sidecar.open("w", encoding="utf-8") as f:
            json.dump(meta, f, sort_keys=True, indent=2, ensure_ascii=False)
            f.write("\n")
    logger.info("wrote %d rows to %s", len(records), path)
    return path


def write_document(command: str, document: BaseModel, config: ExperimentConfig) -> Path:
    """Write a single JSON document (the acceptance report) with metadata attached."""
    path = output_path(command, config).with_suffix(".json")
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"metadata": build_metadata(command, config), "report": _clean(document.model_dump(mode="json"))}
    with path.open("w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write("\n")
    return path
