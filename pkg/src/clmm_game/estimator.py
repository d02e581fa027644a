"""Estimator-style front end to the equilibrium solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_spec
from .solver import SolverOptions, solve_ne


class NashEquilibriumSolver(BaseEstimator):
    """Solve atomic liquidity games with a scikit-learn style interface.

    ``fit`` takes a :class:`~clmm_game.game.GameSpec` in place of a design
    matrix; ``predict`` returns the equilibrium profile (``N x M``).

    Parameters
    ----------
    omega : float or None
        Initial damping of the relaxation step; None uses ``min(0.5, 2/N)``.
    max_iters : int
        Relaxation iteration cap.
    tol : float
        Step tolerance on the profile (sup norm, relative to ``max(1, max K)``).
    tol_kkt : float
        Largest KKT residual accepted as converged.
    random_state : int
        Seed of the random strictly positive starting profile.

    Examples
    --------
    >>> from clmm_game.amm import TickGrid
    >>> from clmm_game.game import GameSpec
    >>> spec = GameSpec(TickGrid((1, 4)), 1.0, 4.0, [1], [0.25], [0], [10, 10])
    >>> NashEquilibriumSolver().fit(spec).predict().round(6).tolist()
    [[1.0], [1.0]]
    """

    def __init__(self, omega=None, max_iters=10_000, tol=1e-10, tol_kkt=1e-8, random_state=0):
        self.omega = omega
        self.max_iters = max_iters
        self.tol = tol
        self.tol_kkt = tol_kkt
        self.random_state = random_state

    def _options(self) -> SolverOptions:
        return SolverOptions(
            omega=self.omega, max_iters=self.max_iters, tol_profile=self.tol,
            tol_kkt=self.tol_kkt, seed=self.random_state,
        )

    def fit(self, X, y=None):
        spec = check_spec(X)
        result = solve_ne(spec, self._options())
        self.spec_ = spec
        self.result_ = result
        self.k_ = result.k
        self.lambda_ = result.lambda_
        self.mu_ = result.mu
        self.residuals_ = result.kkt.as_dict()
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        return self

    def predict(self, X=None) -> np.ndarray:
        """Equilibrium profile of ``X`` (refits) or of the fitted spec."""
        if X is not None:
            return self.fit(X).k_
        if not hasattr(self, "k_"):
            raise AttributeError("call fit before predict")
        return self.k_
