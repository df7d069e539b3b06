# label_propagation.py
#
# Local-and-global-consistency label propagation on the superpixel graph: a feature-free,
# untrained reference classifier that shares the split of the trained models.
# F <- alpha S F + (1 - alpha) Y with S = D^-1/2 W D^-1/2 and alpha = 1 / (1 + mu), iterated to
# a tolerance; lgc_closed_form gives the same fixed point by a linear solve.
#
# Helper modules: Uses numpy.

import logging

import numpy as np

from core.errors import ConfigError, ShapeError
from utils.config import AppConfig

logger = logging.getLogger(__name__)


def lgc_propagate(A, Y, alpha=None, iterations=None, mu=None, tol=None, eps=1e-12):
    """
    Iterate the propagation rule until the largest score change drops below tol, at most
    `iterations` times, and return the n x c score matrix.
    alpha defaults to 1 / (1 + mu), with mu from AppConfig.LGC_MU.
    """
    A = np.asarray(A, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or Y.shape[0] != A.shape[0]:
        raise ShapeError(f"propagation needs a square A and matching Y, got {A.shape} and {Y.shape}")
    if alpha is None:
        mu = AppConfig.LGC_MU if mu is None else mu
        alpha = 1.0 / (1.0 + mu)
    if not 0.0 <= alpha < 1.0:
        raise ConfigError("propagation alpha must lie in [0, 1)")
    iterations = AppConfig.LGC_PROPAGATION_ITERATIONS if iterations is None else int(iterations)
    tol = AppConfig.LGC_PROPAGATION_TOL if tol is None else float(tol)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(A.sum(axis=1), eps))
    S = inv_sqrt[:, None] * A * inv_sqrt[None, :]
    F = Y.copy()
    for step in range(1, iterations + 1):
        updated = alpha * (S @ F) + (1.0 - alpha) * Y
        change = float(np.max(np.abs(updated - F), initial=0.0))
        F = updated
        if change <= tol:
            logger.debug("Propagation converged after %d iterations", step)
            return F
    if iterations:
        logger.warning("Propagation stopped after %d iterations with change %.3g > %.3g", iterations, change, tol)
    return F


def lgc_closed_form(A, Y, alpha, eps=1e-12):
    """Fixed point of the propagation rule: (1 - alpha) (I - alpha S)^-1 Y."""
    A = np.asarray(A, dtype=np.float64)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(A.sum(axis=1), eps))
    S = inv_sqrt[:, None] * A * inv_sqrt[None, :]
    return (1.0 - alpha) * np.linalg.solve(np.eye(len(A)) - alpha * S, np.asarray(Y, dtype=np.float64))


class LgcPropagation:
    """Label propagation classifier; fit() stores the propagated scores."""
    kind = "lgc"

    def __init__(self, mu=None, iterations=None):
        self.mu = AppConfig.LGC_MU if mu is None else float(mu)
        self.iterations = AppConfig.LGC_PROPAGATION_ITERATIONS if iterations is None else int(iterations)
        self.scores = None
        self.params = {}

    def fit(self, A, seeds):
        self.scores = lgc_propagate(A, seeds.Y, mu=self.mu, iterations=self.iterations)
        logger.info("Propagated %d seeds over %d nodes", int(seeds.train_mask.sum()), seeds.n)
        return self
