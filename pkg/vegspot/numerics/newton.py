"""damped Newton iteration with backtracking on the residual max-norm"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from vegspot.errors import NewtonDiverged

logger = logging.getLogger(__name__)


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    history: List[float] = field(default_factory=list)


class DampedNewton:
    TOL = 1e-10  # unit: residual max-norm
    MAX_ITER = 50
    MAX_HALVINGS = 30
    ARMIJO = 1e-4  # sufficient decrease fraction

    def __init__(
        self,
        *,
        tol=TOL,  # stop once max|F| <= tol
        max_iter=MAX_ITER,  # Newton steps before giving up
        max_halvings=MAX_HALVINGS,  # step halvings per line search
        armijo=ARMIJO,
        name="newton",  # label in log messages
    ):
        self.tol = tol
        self.max_iter = max_iter
        self.max_halvings = max_halvings
        self.armijo = armijo
        self.name = name

    def solve(self, residual, linear_solve, x0) -> NewtonResult:
        """
        Solve F(x) = 0.

        Parameters
        ----------
        residual : callable
            x -> F(x).
        linear_solve : callable
            (x, F(x)) -> dx with J(x) dx = F(x).
        x0 : array
            Starting point.

        Returns
        -------
        NewtonResult
        """
        x = np.array(x0, dtype=float)
        f = residual(x)
        norm = float(np.max(np.abs(f)))
        history = [norm]
        for n in range(self.max_iter):
            if not np.isfinite(norm):
                raise NewtonDiverged(f"{self.name}: residual not finite after {n} steps", history)
            if norm <= self.tol:
                logger.debug("%s converged in %d steps, residual %.3e", self.name, n, norm)
                return NewtonResult(x, norm, n, history)

            dx = linear_solve(x, f)
            step = 1.0
            for _ in range(self.max_halvings + 1):
                trial = x - step * dx
                f_trial = residual(trial)
                trial_norm = float(np.max(np.abs(f_trial)))
                if np.isfinite(trial_norm) and trial_norm <= (1.0 - self.armijo * step) * norm:
                    break
                step *= 0.5
            else:
                raise NewtonDiverged(
                    f"{self.name}: line search failed at step {n}, residual {norm:.3e}", history
                )
            x, f, norm = trial, f_trial, trial_norm
            history.append(norm)
            logger.debug("%s step %d damping %.3g residual %.3e", self.name, n + 1, step, norm)

        if norm <= self.tol:
            return NewtonResult(x, norm, self.max_iter, history)
        raise NewtonDiverged(
            f"{self.name}: no convergence after {self.max_iter} steps, residual {norm:.3e}", history
        )
