"""Scikit-learn compatible front end for supervised exponent discovery."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from . import analysis, basis
from .basis import ExponentBounds
from .losses import LossWeights
from .optim import InitSpec, TrainSchedule, init_model, train
from .problems import ExactSolution, SupervisedFit
from .sampling import CollocationSet

__all__ = ["PowerLawRegressor"]


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """Fits y = sum_k c_k x^mu_k with trainable exponents on x in (0, 1].

    Parameters mirror the training defaults used across the experiment
    suite.  After ``fit``, the discovered exponents are available as
    ``exponents_`` / ``coefficients_`` and the strongest one as
    ``dominant_exponent_``.
    """

    def __init__(self, n_terms=4, mu_min=0.1, mu_max=3.0, epochs=10_000,
                 eta_mu=0.005, eta_c=0.01, sparsity=0.001, clip_norm=1.0,
                 random_state=0):
        self.n_terms = n_terms
        self.mu_min = mu_min
        self.mu_max = mu_max
        self.epochs = epochs
        self.eta_mu = eta_mu
        self.eta_c = eta_c
        self.sparsity = sparsity
        self.clip_norm = clip_norm
        self.random_state = random_state

    def _validate(self, X, y=None):
        if y is None:
            X = check_array(X, ensure_2d=False, dtype=float)
        else:
            X, y = check_X_y(X, y, ensure_2d=False, dtype=float, y_numeric=True)
        x = X.ravel() if X.ndim > 1 else X
        if X.ndim > 1 and X.shape[1] != 1:
            raise ValueError("expects a single feature column")
        if np.any(x <= 0):
            raise ValueError("x values must be strictly positive")
        return (x, y) if y is not None else x

    def fit(self, X, y):
        x, y = self._validate(X, y)
        problem = SupervisedFit("data", ExactSolution(lambda t: t, (), ()), 0.0)
        pts = CollocationSet(
            residual_x=x,
            bc_x=np.zeros(0),
            bc_kind=np.zeros(0, int),
            bc_value=np.zeros(0),
            residual_data=np.asarray(y, float),
            record={"n": x.size, "source": "user-data"},
        )
        bounds = ExponentBounds(self.mu_min, self.mu_max)
        model = init_model(self.n_terms, bounds, InitSpec(seed=self.random_state))
        schedule = TrainSchedule(epochs=self.epochs, eta_mu=self.eta_mu,
                                 eta_c=self.eta_c, clip_norm=self.clip_norm)
        weights = LossWeights(w_r=1.0, w_b=0.0, w_s=self.sparsity, w_con=0.0)
        trace = train(model, problem, pts, weights, schedule, seed=self.random_state)

        self.model_ = trace.model
        self.trace_ = trace
        self.exponents_ = basis.effective_exponents(trace.model)
        self.coefficients_ = trace.model.coefficients
        self.dominant_exponent_ = analysis.dominant_exponent(trace.model)
        self.active_terms_ = analysis.active_terms(trace.model)
        return self

    def predict(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predict")
        x = self._validate(X)
        return basis.evaluate(self.model_, x)
