"""
Configuration for the weighted interpolation inequality toolkit.

Settings are class attributes sourced from environment variables (prefix ``CKN_``), with
defaults that reproduce the reference desk-scale runs. A ``.env`` file in the working
directory is loaded first if present. The environment-specific class is selected by
``CKN_ENVIRONMENT`` (development or production).

Precedence used by the cli: command-line flags > ``--config`` JSON file > environment > defaults.
"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from src.utils.exceptions import ConfigurationException

load_dotenv(override=False)


def get_env_variable(var_name: str, default: Optional[str] = None, required: bool = False) -> Optional[str]:
    """
    Fetch an environment variable. Raises if a required variable is not set.
    """
    value = os.getenv(var_name, default)
    if required and value is None:
        raise ConfigurationException(f"Required environment variable '{var_name}' is not set.", var_name)
    return value


def _env_float(var_name: str, default: float) -> float:
    raw = get_env_variable(var_name, str(default))
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigurationException(f"Environment variable '{var_name}' must be a number, got {raw!r}.", var_name)


def _env_int(var_name: str, default: int) -> int:
    raw = get_env_variable(var_name, str(default))
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ConfigurationException(f"Environment variable '{var_name}' must be an integer, got {raw!r}.", var_name)


# Base Configuration
class BaseConfig:
    """
    Settings shared across all environments.
    """
    APP_NAME = "ckn-toolkit"
    DEBUG = False
    LOG_LEVEL = get_env_variable("CKN_LOG_LEVEL", "INFO").upper()

    # Radial grid (log-radius tau = ln|x|)
    TAU_MIN = _env_float("CKN_TAU_MIN", -12.0)
    TAU_MAX = _env_float("CKN_TAU_MAX", 12.0)
    GRID_N = _env_int("CKN_GRID_N", 2401)

    # Descent
    MAX_ITERS = _env_int("CKN_MAX_ITERS", 50000)
    STEP0 = _env_float("CKN_STEP0", 1.0)
    ARMIJO_C = _env_float("CKN_ARMIJO_C", 1e-4)
    ARMIJO_SHRINK = _env_float("CKN_ARMIJO_SHRINK", 0.5)
    TOL_ENERGY = _env_float("CKN_TOL_ENERGY", 1e-10)
    TOL_GRAD = _env_float("CKN_TOL_GRAD", 1e-8)
    RESCALE_EVERY = _env_int("CKN_RESCALE_EVERY", 5)
    EPS_REG = _env_float("CKN_EPS_REG", 1e-8)
    SEED = _env_int("CKN_SEED", 0)

    # Verification and sweeps
    VERIFY_SAMPLES = _env_int("CKN_VERIFY_SAMPLES", 500)
    VERIFY_TOL = _env_float("CKN_VERIFY_TOL", 1e-3)
    SWEEP_WORKERS = _env_int("CKN_SWEEP_WORKERS", 4)

    # Relative --out paths resolve against this directory
    OUTPUT_DIR = Path(get_env_variable("CKN_OUTPUT_DIR", "."))

    def solver_defaults(self) -> Dict[str, Any]:
        """
        Keyword arguments for SolverOptions built from this configuration.
        """
        return {
            "max_iters": self.MAX_ITERS,
            "step0": self.STEP0,
            "armijo_c": self.ARMIJO_C,
            "armijo_shrink": self.ARMIJO_SHRINK,
            "tol_energy": self.TOL_ENERGY,
            "tol_grad": self.TOL_GRAD,
            "rescale_every": self.RESCALE_EVERY,
            "seed": self.SEED,
            "eps_reg": self.EPS_REG,
        }

    def grid_defaults(self) -> Dict[str, Any]:
        return {"tau_min": self.TAU_MIN, "tau_max": self.TAU_MAX, "n": self.GRID_N}


# Development Configuration
class DevelopmentConfig(BaseConfig):
    """
    Verbose logging for interactive work.
    """
    DEBUG = True
    LOG_LEVEL = get_env_variable("CKN_LOG_LEVEL", "DEBUG").upper()


# Production Configuration
class ProductionConfig(BaseConfig):
    """
    Batch runs: warnings and errors only.
    """
    LOG_LEVEL = get_env_variable("CKN_LOG_LEVEL", "WARNING").upper()


def get_config() -> BaseConfig:
    """
    Load the configuration class named by ``CKN_ENVIRONMENT`` (default: production).
    """
    environment = (get_env_variable("CKN_ENVIRONMENT", "production") or "").lower()
    if environment == "development":
        return DevelopmentConfig()
    elif environment == "production":
        return ProductionConfig()
    else:
        raise ConfigurationException(f"Invalid CKN_ENVIRONMENT value: {environment}", "CKN_ENVIRONMENT")
