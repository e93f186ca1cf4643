import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from ..core.errors import OutputError

logger = logging.getLogger(__name__)


class OutputKind(Enum):
    TRAJECTORY = "trajectory.jsonl"
    PLOT = "plot.csv"
    SWEEP = "sweep.csv"
    SUMMARY = "summary.json"
    PROBES = "probes.json"


def to_jsonable(value: Any) -> Any:
    """Plain JSON values; non-finite floats become null and numpy types are unwrapped."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


class DataManager:
    """Writes experiment outputs under one directory and remembers what it wrote."""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        self.written: Dict[str, Path] = {}

    def prepare(self) -> Path:
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"cannot create output directory {self.output_dir}: {e.strerror or e}") from e
        return self.output_dir

    def path_for(self, kind: OutputKind, run_name: Optional[str] = None) -> Path:
        name = kind.value if run_name is None else f"{run_name}.{kind.value}"
        return self.output_dir / name

    def _write_text(self, path: Path, text: str) -> Path:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
        except OSError as e:
            logger.error("Error writing %s: %s", path, e)
            raise OutputError(f"cannot write {path}: {e.strerror or e}") from e
        self.written[path.name] = path
        return path

    def save_records(self, run_name: str, records: Iterable[Dict[str, Any]]) -> Path:
        """One JSON object per line; key order is the order the records were built in."""
        lines = [json.dumps(to_jsonable(r), allow_nan=False) for r in records]
        text = "\n".join(lines) + ("\n" if lines else "")
        return self._write_text(self.path_for(OutputKind.TRAJECTORY, run_name), text)

    def save_table(self, kind: OutputKind, run_name: str, data: pd.DataFrame) -> Path:
        path = self.path_for(kind, run_name)
        text = data.to_csv(index=False, float_format="%.17g", lineterminator="\n")
        return self._write_text(path, text)

    def save_json(self, kind: OutputKind, data: Dict[str, Any]) -> Path:
        text = json.dumps(to_jsonable(data), indent=2, allow_nan=False) + "\n"
        return self._write_text(self.path_for(kind), text)

    def written_files(self) -> List[str]:
        return sorted(self.written)
