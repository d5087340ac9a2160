"""
Named parameter sets and nonlinearity defaults loaded from the data directory
"""

import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.nonlinearity import Nonlinearity, get_nonlinearity

logger = logging.getLogger(__name__)

DATA_PATH = Path(__file__).resolve().parent.parent / "data"


class PresetLibrary:
    """Read-only access to data/presets.json and data/nonlinearities.json"""

    def __init__(self, data_path: Optional[Path] = None):
        """Initialize the library with data from JSON files"""
        self.data_path = Path(data_path) if data_path is not None else DATA_PATH
        self._load_data()

    def _load_data(self):
        """Load presets and nonlinearity defaults"""
        try:
            with open(self.data_path / "presets.json", "r") as f:
                self.presets = json.load(f)

            with open(self.data_path / "nonlinearities.json", "r") as f:
                self.nonlinearity_defaults = json.load(f)

            logger.info("Loaded %d presets from %s", len(self.presets), self.data_path)

        except FileNotFoundError as e:
            logger.error(f"Failed to load data files: {e}")
            raise RuntimeError("Required data files are missing") from e
        except json.JSONDecodeError as e:
            logger.error(f"Invalid JSON in data files: {e}")
            raise RuntimeError("Data files are corrupted") from e

    def names(self) -> List[str]:
        return sorted(self.presets)

    def get(self, name: str) -> Dict[str, Any]:
        """Return a copy of a preset without its description"""
        if name not in self.presets:
            raise ValueError(f"Unknown preset: {name} (available: {', '.join(self.names())})")
        preset = copy.deepcopy(self.presets[name])
        preset.pop("description", None)
        return preset

    def defaults_for(self, nonlinearity: str) -> Dict[str, float]:
        if nonlinearity not in self.nonlinearity_defaults:
            raise ValueError(f"No defaults for nonlinearity: {nonlinearity}")
        return dict(self.nonlinearity_defaults[nonlinearity])

    def build_nonlinearity(self, name: str, params: Optional[Dict[str, float]] = None) -> Nonlinearity:
        """Registry entry with file defaults overridden by params"""
        merged = self.defaults_for(name)
        merged.update(params or {})
        return get_nonlinearity(name, **merged)
