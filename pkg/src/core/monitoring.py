# src/core/monitoring.py

"""
Iteration monitoring for descent runs.

Every solve owns one ConvergenceMonitor; it keeps the energy trace, answers the
stopping questions the solver asks, and logs progress lines with the run's correlation id.

Features:
- Thread-safe trace recording
- Divergence detection (non-finite energy or gradient)
- Energy stall detection over a sliding window
- Periodic structured progress logging
"""

import logging
import math
import threading
from typing import Any, Dict, List, Optional

import numpy as np

from src.utils.exceptions import SolverDivergenceException

DEFAULT_LOG_EVERY = 100
DEFAULT_STALL_WINDOW = 10
DEFAULT_STALL_TOLERANCE = 1e-10

logger = logging.getLogger("ckn_toolkit.monitoring")


class MonitorConfig:
    def __init__(self, log_every: int = DEFAULT_LOG_EVERY,
                 stall_window: int = DEFAULT_STALL_WINDOW,
                 stall_tolerance: float = DEFAULT_STALL_TOLERANCE):
        self.log_every = log_every
        self.stall_window = stall_window
        self.stall_tolerance = stall_tolerance


class ConvergenceMonitor:
    """
    Energy trace plus the bookkeeping behind the solver's stopping rules.
    """

    def __init__(self, config: Optional[MonitorConfig] = None, label: str = "descent"):
        self.config = config or MonitorConfig()
        self.label = label
        self._lock = threading.Lock()
        self._energies: List[float] = []
        self._grad_norms: List[float] = []
        self._steps: List[float] = []
        self._rescales = 0

    def record(self, iteration: int, energy: float, grad_norm: float, step: float) -> None:
        """
        Append one accepted iterate.

        Raises:
            SolverDivergenceException: if the energy or gradient norm is not finite.
        """
        if not (math.isfinite(energy) and math.isfinite(grad_norm)):
            raise SolverDivergenceException(
                f"{self.label}: non-finite energy {energy!r} or gradient norm {grad_norm!r}", iteration
            )
        with self._lock:
            self._energies.append(float(energy))
            self._grad_norms.append(float(grad_norm))
            self._steps.append(float(step))
            count = len(self._energies)

        if self.config.log_every and count % self.config.log_every == 0:
            logger.info(f"{self.label} progress", extra={"context": {
                "iteration": iteration, "energy": energy, "grad_norm": grad_norm, "step": step}})

    def note_rescale(self) -> None:
        with self._lock:
            self._rescales += 1

    def energy_stalled(self) -> bool:
        """
        True when the relative energy change over the last stall_window records is
        below stall_tolerance.
        """
        window = self.config.stall_window
        with self._lock:
            if len(self._energies) <= window:
                return False
            old, new = self._energies[-1 - window], self._energies[-1]
        return abs(old - new) <= self.config.stall_tolerance * max(abs(new), 1e-300)

    def is_monotone(self) -> bool:
        with self._lock:
            trace = np.asarray(self._energies)
        return bool(np.all(np.diff(trace) <= 0.0))

    @property
    def trace(self) -> List[float]:
        with self._lock:
            return list(self._energies)

    @property
    def last_grad_norm(self) -> float:
        with self._lock:
            return self._grad_norms[-1] if self._grad_norms else math.nan

    def summary(self) -> Dict[str, Any]:
        with self._lock:
            return {
                "label": self.label,
                "iterations": max(len(self._energies) - 1, 0),
                "first_energy": self._energies[0] if self._energies else math.nan,
                "last_energy": self._energies[-1] if self._energies else math.nan,
                "last_grad_norm": self._grad_norms[-1] if self._grad_norms else math.nan,
                "rescalings": self._rescales,
            }
