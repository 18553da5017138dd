"""First-order SPSA behind an ask/tell interface.

The caller owns evaluation: ``ask`` returns the simultaneous-perturbation
pair (theta + c_k*delta, theta - c_k*delta); ``tell`` feeds back the two
energies and applies the update. Re-asking before ``tell`` reissues the
identical pair, so a rescheduled evaluation leaves the optimizer untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SpsaProtocolError(RuntimeError):
    """ask/tell called out of order."""


@dataclass(frozen=True)
class SpsaConfig:
    """Gain schedules a_k = a0/(k+1)^alpha and c_k = c0/(k+1)^gamma."""

    a0: float = 0.2
    alpha: float = 0.602
    c0: float = 0.1
    gamma: float = 0.101
    max_iterations: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.a0 <= 0 or self.c0 <= 0:
            raise ValueError("a0 and c0 must be positive")
        if not (0 < self.alpha <= 1) or not (0 < self.gamma <= 1):
            raise ValueError("alpha and gamma must be in (0, 1]")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")

    def learning_rate(self, k: int) -> float:
        return self.a0 / (k + 1) ** self.alpha

    def perturbation_size(self, k: int) -> float:
        return self.c0 / (k + 1) ** self.gamma


class SpsaOptimizer:
    """Single-owner optimizer state; exactly one ask/tell cycle in flight."""

    def __init__(self, theta0, config: SpsaConfig):
        self.config = config
        self.theta = np.array(theta0, dtype=float).copy()
        if self.theta.ndim != 1:
            raise ValueError("theta0 must be a flat parameter vector")
        self.k = 0
        self.history: list[float] = []
        self._rng = np.random.default_rng(config.seed)
        self._pending_delta: np.ndarray | None = None

    @property
    def dimension(self) -> int:
        return self.theta.size

    @property
    def ask_outstanding(self) -> bool:
        return self._pending_delta is not None

    def ask(self) -> tuple[np.ndarray, np.ndarray]:
        """Perturbation pair for iteration k; idempotent until ``tell``."""
        if self._pending_delta is None:
            self._pending_delta = (
                self._rng.integers(0, 2, size=self.theta.size) * 2 - 1
            ).astype(float)
        c_k = self.config.perturbation_size(self.k)
        step = c_k * self._pending_delta
        return self.theta + step, self.theta - step

    def tell(self, e_plus: float, e_minus: float) -> None:
        """Apply the SPSA update from the pair's two energies."""
        if self._pending_delta is None:
            raise SpsaProtocolError("tell() without an outstanding ask()")
        c_k = self.config.perturbation_size(self.k)
        # 1/delta_j == delta_j for Rademacher components
        gradient = (e_plus - e_minus) / (2.0 * c_k) * self._pending_delta
        self.theta = self.theta - self.config.learning_rate(self.k) * gradient
        self.k += 1
        self._pending_delta = None
        self.history.append((e_plus + e_minus) / 2.0)


def random_initial_point(dimension: int, seed: int) -> np.ndarray:
    """Uniform angles in [-pi, pi); the conventional cold start for
    hardware-efficient rotation ansatz parameters."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-np.pi, np.pi, size=dimension)
