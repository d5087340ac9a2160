"""
JSON and CSV artifacts with configuration echo and package versions
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import scipy

logger = logging.getLogger(__name__)


def make_json_safe(obj: Any) -> Any:
    """Recursively convert numpy types and containers into plain JSON values; non-finite floats become null"""
    if isinstance(obj, dict):
        return {str(key): make_json_safe(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [make_json_safe(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [make_json_safe(value) for value in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Cannot serialize {type(obj).__name__}")


def format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def versions() -> Dict[str, str]:
    return {"numpy": np.__version__, "scipy": scipy.__version__}


class OutputWriter:
    """Writes artifacts into one output directory"""

    def __init__(self, out_dir: Path, config: Optional[Dict[str, Any]] = None):
        """
        Initialize the writer

        Args:
            out_dir: Directory for all artifacts, created on first write
            config: Resolved configuration echoed into every JSON document
        """
        self.out_dir = Path(out_dir)
        self.config = config or {}
        self.written = []

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        self.written.append(path)
        return path

    def write_json(self, name: str, payload: Dict[str, Any], echo: bool = True) -> Path:
        document = dict(payload)
        if echo:
            document["config"] = self.config
            document["versions"] = versions()
        path = self._path(name)
        with open(path, "w") as f:
            json.dump(make_json_safe(document), f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info("Wrote %s", path)
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        path = self._path(name)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_cell(value) for value in row])
        logger.info("Wrote %s", path)
        return path

    def write_config(self) -> Path:
        return self.write_json("config.json", self.config, echo=False)
