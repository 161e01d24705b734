from abc import ABCMeta, ABC, abstractmethod
from typing import List, Optional

import numpy as np
from loguru import logger

from iminimax_fcm.core import NumericalError, RunConfig

# Define a meta class that will automatically call the BaseEngine's __init__ method
# and also the post_init method if it exists.
class BaseInitMeta(ABCMeta):
    def __call__(cls, *args, **kwargs):
        # Create an instance of the class that this meta class is used on.
        instance = super().__call__(*args, **kwargs)

        # Call the __init__ method of BaseEngine to reset the run bookkeeping.
        BaseEngine.__init__(instance)

        # Subclasses name themselves and derive extra state here.
        if hasattr(instance, "post_init"):
            instance.post_init()

        return instance

# Base class for the alternating optimization engines.
class BaseEngine(ABC, metaclass=BaseInitMeta):

    def __init__(self):
        self.engine_name = "unknown"

        # Current K x N membership matrix.
        self.membership: Optional[np.ndarray] = None

        # Number of completed sweeps.
        self.iterations = 0

        # Objective after every sweep and ||U(t+1) - U(t)|| after every sweep.
        self.objective_trace: List[float] = []
        self.shift_trace: List[float] = []

        # Largest |column sum - 1| of the membership after every sweep.
        self.drift_trace: List[float] = []

        # Human readable events (empty-cluster re-seeds, iteration cap reached).
        self.diagnostics: List[str] = []

    # Set by the subclass constructor; BaseEngine.__init__ runs afterwards and leaves it alone.
    config: RunConfig

    @abstractmethod
    def update_centroids(self) -> None:
        """Recomputes the centroids from the current membership."""

    @abstractmethod
    def update_membership(self) -> np.ndarray:
        """
        Computes the membership implied by the current centroids.

        Returns:
            np.ndarray: the new K x N membership, not yet stored on the engine.
        """

    def update_weights(self, membership: np.ndarray) -> None:
        """
        Hook run after the membership update, before convergence is tested.
        Engines without a weight step leave it alone.
        """
        pass

    @abstractmethod
    def objective(self) -> float:
        """Objective value at the current state."""

    def membership_shift(self, new: np.ndarray, old: np.ndarray) -> float:
        diff = new - old
        if self.config.convergence_norm == "max":
            return float(np.abs(diff).max())
        return float(np.linalg.norm(diff))

    def note(self, message: str) -> None:
        logger.warning(f"[{self.engine_name}] {message}")
        self.diagnostics.append(message)

    def run(self, init_membership: np.ndarray) -> np.ndarray:
        """
        Alternates centroid, membership and weight updates until the membership
        moves less than epsilon or max_iters sweeps are done.

        Args:
            init_membership (np.ndarray): K x N starting membership.

        Returns:
            np.ndarray: the final membership.
        """
        self.membership = np.asarray(init_membership, dtype=float)

        for iteration in range(1, self.config.max_iters + 1):
            self.update_centroids()
            new_membership = self.update_membership()
            if not np.all(np.isfinite(new_membership)):
                raise NumericalError(f"{self.engine_name}: non-finite membership at iteration {iteration}")
            self.update_weights(new_membership)

            shift = self.membership_shift(new_membership, self.membership)
            self.membership = new_membership
            self.iterations = iteration
            self.shift_trace.append(shift)
            self.drift_trace.append(float(np.abs(new_membership.sum(axis=0) - 1.0).max()))
            self.objective_trace.append(self.objective())
            logger.debug(f"[{self.engine_name}] iteration {iteration}: shift={shift:.3e} objective={self.objective_trace[-1]:.6g}")

            if shift < self.config.epsilon:
                break
        else:
            self.note(f"stopped at max_iters={self.config.max_iters} before reaching epsilon={self.config.epsilon}")

        return self.membership
