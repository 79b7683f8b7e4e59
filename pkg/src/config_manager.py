"""
Configuration Manager - Handle tolerances, experiment defaults and run preferences
"""

import json
import logging
from dataclasses import dataclass, asdict, fields, replace
from pathlib import Path
from typing import Dict, Any


@dataclass(frozen=True)
class Tolerances:
    """Every numerical tolerance used by the toolkit, in one record."""
    hermiticity: float = 1e-10      # max |A - A^H| entry deviation (relative to max(1, |A|))
    positivity: float = 1e-10       # smallest eigenvalue allowed below zero
    trace: float = 1e-10            # trace realness / normalization
    zero_eigenvalue: float = 1e-10  # |lambda| below this counts as 0 in spectral projectors
    rank_cutoff: float = 1e-10      # relative to the largest eigenvalue
    entropy_cutoff: float = 1e-12   # eigenvalues ignored in -sum p log p
    assertion: float = 1e-9         # projector algebra and contract checks
    inequality: float = 1e-8        # lemma battery slack
    merge_relative: float = 1e-12   # atoms closer than this are one atom

    def with_overrides(self, **overrides) -> "Tolerances":
        """Return a copy with some fields replaced."""
        return replace(self, **overrides)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Tolerances":
        """Build from a (possibly partial) JSON dictionary."""
        known = {f.name for f in fields(cls)}
        return cls(**{k: float(v) for k, v in data.items() if k in known})


DEFAULT_TOLERANCES = Tolerances()

DEFAULT_EXPERIMENT = {
    "thresholds": {"t_low": 0.01, "t_high": 0.99},
    "gamma_grid": {"low": 0.0, "high": 2.0, "step": 0.01},
    "bisection_resolution_bits": 1e-4,
    "hmax_sweep_step_bits": 0.01,
    "oracle": {"solver": "CLARABEL", "max_dim": 9},
    "max_type_classes": 10_000_000,
    "max_dense_dim": 256,
    "verify": {"seed": 42, "trials": 1000},
}

DEFAULT_RUN_PREFERENCES = {
    "logging": {
        "level": "INFO",
        "file_logging": True,
        "console_logging": True,
        "log_directory": "logs"
    },
    "output": {
        "header": True,
        "timestamp": True,
        "float_format": ".6f"
    }
}


class ConfigManager:
    """Manages configuration files and user preferences."""

    def __init__(self, config_dir: str = "config"):
        """Initialize configuration manager."""
        self.config_dir = Path(config_dir)
        self.config_dir.mkdir(parents=True, exist_ok=True)
        self.logger = logging.getLogger(__name__)

        # Configuration file paths
        self.tolerances_file = self.config_dir / "tolerances.json"
        self.experiment_file = self.config_dir / "experiment_defaults.json"
        self.run_preferences_file = self.config_dir / "run_preferences.json"

        self._create_default_configs()

    def _create_default_configs(self):
        """Create default configuration files if they don't exist."""
        if not self.tolerances_file.exists():
            self._save_json(self.tolerances_file, asdict(DEFAULT_TOLERANCES))

        if not self.experiment_file.exists():
            self._save_json(self.experiment_file, DEFAULT_EXPERIMENT)

        if not self.run_preferences_file.exists():
            self._save_json(self.run_preferences_file, DEFAULT_RUN_PREFERENCES)

    def _load_json(self, file_path: Path) -> Dict:
        """Load JSON configuration file."""
        try:
            with open(file_path, 'r') as f:
                return json.load(f)
        except Exception as e:
            self.logger.error(f"Error loading {file_path}: {e}")
            return {}

    def _save_json(self, file_path: Path, data: Dict) -> bool:
        """Save data to JSON configuration file."""
        try:
            with open(file_path, 'w') as f:
                json.dump(data, f, indent=2)
            return True
        except Exception as e:
            self.logger.error(f"Error saving {file_path}: {e}")
            return False

    @staticmethod
    def _merge(defaults: Dict, loaded: Dict) -> Dict:
        """Overlay loaded values on defaults, one nesting level deep."""
        merged = {}
        for key, value in defaults.items():
            if isinstance(value, dict):
                merged[key] = {**value, **loaded.get(key, {})}
            else:
                merged[key] = loaded.get(key, value)
        return merged

    def get_tolerances(self) -> Tolerances:
        """Get the tolerance record."""
        return Tolerances.from_dict(self._load_json(self.tolerances_file))

    def get_experiment_defaults(self) -> Dict:
        """Get experiment defaults (thresholds, grids, oracle and verify settings)."""
        return self._merge(DEFAULT_EXPERIMENT, self._load_json(self.experiment_file))

    def get_thresholds(self) -> tuple:
        """Get the (t_low, t_high) bracket thresholds."""
        thresholds = self.get_experiment_defaults()["thresholds"]
        return thresholds["t_low"], thresholds["t_high"]

    def get_oracle_config(self) -> Dict:
        """Get oracle solver configuration."""
        return self.get_experiment_defaults()["oracle"]

    def get_verify_config(self) -> Dict:
        """Get default seed and trial count for the verification battery."""
        return self.get_experiment_defaults()["verify"]

    def get_logging_config(self) -> Dict:
        """Get logging configuration."""
        prefs = self._merge(DEFAULT_RUN_PREFERENCES, self._load_json(self.run_preferences_file))
        return prefs["logging"]

    def get_output_config(self) -> Dict:
        """Get CSV output configuration."""
        prefs = self._merge(DEFAULT_RUN_PREFERENCES, self._load_json(self.run_preferences_file))
        return prefs["output"]
