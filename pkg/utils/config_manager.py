"""
Run configuration: nested defaults, presets, command line overrides and JSON files
"""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from core.errors import ConfigError

logger = logging.getLogger(__name__)

OUTPUT_ENV = "SADDLE_OUTPUT_DIR"

# keys whose default is null; value is the accepted type
NULLABLE = {
    ("problem", "lambda"): float,
    ("problem", "gamma"): float,
    ("problem", "c"): float,
    ("solver", "k_check"): int,
}

CHOICES = {
    ("solver", "algo"): ("lmm", "mpa"),
    ("solver", "metric"): ("h1", "norm1"),
    ("task", "subspace"): ("all", "Wplus"),
    ("task", "functional"): ("all", "energy", "rayleigh", "rayleigh_trunc"),
}


def output_dir(override: Optional[str] = None) -> Path:
    """--out, else $SADDLE_OUTPUT_DIR, else ./output"""
    return Path(override or os.environ.get(OUTPUT_ENV) or "output")


class ConfigManager:
    """Manages the three configuration sections problem, solver and task"""

    def __init__(self, config_file: Optional[Path] = None):
        """Initialize with defaults, then apply an optional JSON file"""
        self.default_config = {
            "problem": {
                "lambda_frac": "0.5",
                "lambda": None,
                "q": 1.5,
                "gamma": None,
                "c": None,
                "nonlinearity": "pure_power",
                "nonlinearity_params": {},
                "n": 200,
                "quad_order": 3,
            },
            "solver": {
                "algo": "lmm",
                "metric": "h1",
                "tol_grad": 1e-6,
                "tol_E": 1e-8,
                "tol_inner": 1e-9,
                "tol_res": 1e-8,
                "max_outer": 500,
                "max_inner": 200,
                "max_iter": 2000,
                "newton_max_iter": 30,
                "newton_basin": 1e-3,
                "multi_start": 1,
                "seed": 0,
                "T_factor": 4.0,
                "T_cap": 1024.0,
                "rho_factor": 0.5,
                "path_points": 33,
                "workers": 1,
                "k_check": None,
            },
            "task": {
                "E": 0.01,
                "E_frac": 0.0,
                "E_list": [],
                "E_count": 8,
                "E_low": 0.001,
                "E_high_frac": 0.8,
                "cold": False,
                "E_start": 0.01,
                "zero_energy_steps": 12,
                "t_min": 0.0,
                "t_max": 100.0,
                "t_points": 201,
                "samples": 1000,
                "gradient_samples": 20,
                "restarts": 4,
                "r": 4.0,
                "subspace": "Wplus",
                "functional": "all",
                "h": 1e-5,
                "eig_count": 10,
            },
        }

        self.config = copy.deepcopy(self.default_config)

        if config_file is not None:
            self.load_config(config_file)

    def load_config(self, path: Path):
        """Merge a JSON file into the current configuration"""
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"Config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file is not valid JSON: {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file must hold an object of sections: {path}")
        self.update(data)
        logger.info("Loaded configuration from %s", path)

    def update(self, overrides: Dict[str, Dict[str, Any]]):
        """Apply section -> {key: value} overrides, checking every key and type"""
        for section, values in overrides.items():
            if section not in self.default_config:
                raise ConfigError(f"Unknown configuration section '{section}'")
            if not isinstance(values, dict):
                raise ConfigError(f"Invalid section format: {section}")
            for key, value in values.items():
                self.set(section, key, value)
        self.validate()

    def _coerce(self, section: str, key: str, value: Any) -> Any:
        if (section, key) in NULLABLE:
            if value is None:
                return None
            expected = NULLABLE[(section, key)]
        else:
            expected = type(self.default_config[section][key])

        if expected is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if expected is int and isinstance(value, int) and not isinstance(value, bool):
            return value
        if expected in (str, bool, list, dict) and isinstance(value, expected):
            return copy.deepcopy(value)
        raise ConfigError(f"'{section}.{key}' expects {expected.__name__}, got {value!r}")

    def validate(self):
        """Cross-field checks on the resolved configuration"""
        problem, solver, task = self.config["problem"], self.config["solver"], self.config["task"]
        for (section, key), allowed in CHOICES.items():
            if self.config[section][key] not in allowed:
                raise ConfigError(f"'{section}.{key}' must be one of {allowed}, got {self.config[section][key]!r}")
        for key, value in solver.items():
            if key.startswith("tol_") and not value > 0:
                raise ConfigError(f"'solver.{key}' must be positive, got {value}")
        if not 1.0 < problem["q"] < 2.0:
            raise ConfigError(f"'problem.q' must lie in (1, 2), got {problem['q']}")
        if problem["gamma"] is not None and not problem["gamma"] > 2.0:
            raise ConfigError(f"'problem.gamma' must exceed 2, got {problem['gamma']}")
        if problem["n"] < 2:
            raise ConfigError(f"'problem.n' must be at least 2, got {problem['n']}")
        if problem["quad_order"] not in (2, 3, 4, 5):
            raise ConfigError(f"'problem.quad_order' must be 2..5, got {problem['quad_order']}")
        for key in ("multi_start", "workers", "path_points", "max_outer", "max_inner"):
            if solver[key] < 1:
                raise ConfigError(f"'solver.{key}' must be at least 1, got {solver[key]}")
        if task["h"] <= 0 or min(task["samples"], task["gradient_samples"], task["restarts"]) < 1:
            raise ConfigError("'task.h', 'task.samples' and 'task.restarts' must be positive")

    def get(self, section: str, key: str) -> Any:
        """Get a configuration value"""
        if section in self.config and key in self.config[section]:
            return self.config[section][key]
        raise KeyError(f"Configuration key '{section}.{key}' not found")

    def set(self, section: str, key: str, value: Any):
        """Set a configuration value after checking its type"""
        if section not in self.default_config or key not in self.default_config[section]:
            raise ConfigError(f"Unknown configuration key '{section}.{key}'")
        self.config[section][key] = self._coerce(section, key, value)

    def section(self, name: str) -> Dict[str, Any]:
        return copy.deepcopy(self.config[name])

    def as_dict(self) -> Dict[str, Dict[str, Any]]:
        return copy.deepcopy(self.config)
