"""
src/config/settings.py
Configuration management for the accountant and the simulator
"""

import json
import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "DPLEDGER_OUTPUT_DIR"


class Settings:
    """Manages numeric defaults and output locations"""

    # Default configuration
    DEFAULTS = {
        # Trade-off curve grids
        "grid_size": 4097,  # uniform alpha knots
        "tail_knots": 32,  # extra knots clustered near alpha=0 and alpha=1
        "gaussian_knot_step": 1.0 / 1024,  # quantile spacing for Gaussian curves
        "group_grid_size": 16385,
        "oracle_grid_size": 20001,  # quadrature points of the Neyman-Pearson oracle

        # Accountant
        "pld_resolution": 1e-4,  # privacy-loss grid spacing
        "pld_tail_sigmas": 12.0,
        "default_delta": 1e-5,
        "budget_points": [0.5, 1.0, 2.0, 4.0, 8.0],  # eps values reported by ledgers
        "clt_min_sigma": 0.5,

        # Output settings
        "output_dir": "output",
        "log_file": "logs/dpledger.log",
    }

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize settings

        Args:
            config_path: Path to custom configuration file (JSON)
        """
        load_dotenv()
        self.config_path = config_path or "dpledger.json"
        self.config = json.loads(json.dumps(self.DEFAULTS))

        env_output = os.environ.get(OUTPUT_DIR_ENV)
        if env_output:
            self.config["output_dir"] = env_output

        self._load_config()

    def _load_config(self):
        """Load configuration from file if exists"""
        config_file = Path(self.config_path)

        if config_file.exists():
            try:
                with open(config_file, 'r') as f:
                    user_config = json.load(f)
                unknown = sorted(set(user_config) - set(self.DEFAULTS))
                if unknown:
                    logger.warning(f"Ignoring unknown settings: {unknown}")
                self.config.update({k: v for k, v in user_config.items() if k in self.DEFAULTS})
                logger.info(f"Loaded configuration from {self.config_path}")
            except (OSError, json.JSONDecodeError) as e:
                logger.warning(f"Failed to load config file: {e}. Using defaults.")
        else:
            logger.debug("No config file found. Using default settings.")

    def __getattr__(self, name):
        """Allow dot notation access to config values"""
        config = self.__dict__.get("config", {})
        if name in config:
            return config[name]
        raise AttributeError(f"Setting '{name}' not found")
