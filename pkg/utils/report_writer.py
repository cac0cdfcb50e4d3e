import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from jsonschema import Draft202012Validator as validator

from utils.logger import get_logger

logger = get_logger(__name__)

REPORT_SCHEMA = Path(__file__).parent.parent / "schemas" / "report-schema.json"
SCHEMA_VERSION = "1.0.0"
TOOL_NAME = "bn-reduction"


def to_builtin(value: Any) -> Any:
    """Convert numpy containers and scalars into JSON-ready builtins"""
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


class ReportWriter:
    """Builds, validates and writes the JSON report envelope"""

    def __init__(self, version: str):
        self.version = version
        self.logger = logger
        with open(REPORT_SCHEMA) as fp:
            self.validator = validator(schema=json.load(fp), format_checker=validator.FORMAT_CHECKER)

    def build(self, command: str, seed: int, inputs: Dict[str, Any], result: Dict[str, Any],
              timestamp: Optional[str] = None) -> Dict[str, Any]:
        report = {
            "schema_version": SCHEMA_VERSION,
            "tool": TOOL_NAME,
            "version": self.version,
            "command": command,
            "seed": int(seed),
            "inputs": to_builtin(inputs),
            "result": to_builtin(result),
            "timestamp": timestamp or datetime.now(timezone.utc).isoformat(),
        }
        self.validator.validate(report)
        return report

    @staticmethod
    def dumps(report: Dict[str, Any]) -> str:
        return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"

    def write(self, report: Dict[str, Any], output: Optional[str] = None) -> str:
        """Write the report to output, or return it for stdout when output is None"""
        text = self.dumps(report)
        if output:
            path = Path(output)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
            self.logger.info(f"Report written to {path}")
        return text

    def validate_file(self, path: str):
        """Validate a written report against the shipped schema"""
        with open(path) as fp:
            self.validator.validate(json.load(fp))


def write_field_csv(frame: pd.DataFrame, path: str, sidecar: Dict[str, Any]) -> Dict[str, str]:
    """
    Write sampled values as CSV with a JSON sidecar next to it.

    Returns:
        dict: paths of the CSV and the sidecar
    """
    try:
        csv_path = Path(path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(csv_path, index=False, float_format="%.17g")
        sidecar_path = csv_path.with_suffix(".meta.json")
        sidecar_path.write_text(json.dumps(to_builtin(sidecar), sort_keys=True, indent=2) + "\n")
        logger.info(f"Wrote {len(frame)} rows to {csv_path}")
        return {"csv": str(csv_path), "sidecar": str(sidecar_path)}
    except Exception as e:
        logger.error(f"Error writing field CSV: {str(e)}")
        raise
