"""Scikit-learn style front end.

``PoissonMapRegressor`` wraps the network + trainer behind the familiar
``fit(X, y) / predict(X)`` surface so the propagator composes with
pipelines, grid search and friends. X rows are flattened states, y rows the
states one data step later (see :mod:`poissonmaps.layers` for layouts).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .network import STATE_DIM, Network, NetworkSpec, save_model
from .training import TrainConfig, train


def _validate_states(X, case):
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    dim = STATE_DIM[case]
    if X.shape[1] != dim:
        raise ValueError(f"case {case!r} states have {dim} components, got {X.shape[1]}")
    return X


class PoissonMapRegressor(BaseEstimator, RegressorMixin):
    """One-step propagator for a coupled Lie-Poisson phase space.

    Parameters mirror the network spec and the training protocol; all of
    them are plain constructor arguments so ``get_params``/``set_params``
    work as usual. After ``fit``, ``params_`` holds the flat parameter
    vector and ``report_`` the training record.
    """

    def __init__(
        self,
        case="so3",
        cycles=3,
        dt=0.1,
        activation="tanh",
        epochs=2000,
        lr_initial=1.0,
        lr_final=0.1,
        init_range=None,
        seed=0,
    ):
        self.case = case
        self.cycles = cycles
        self.dt = dt
        self.activation = activation
        self.epochs = epochs
        self.lr_initial = lr_initial
        self.lr_final = lr_final
        self.init_range = init_range
        self.seed = seed

    def _spec(self):
        return NetworkSpec(
            case=self.case, cycles=self.cycles, dt=self.dt, activation=self.activation
        )

    def fit(self, X, y):
        X = _validate_states(X, self.case)
        y = _validate_states(y, self.case)
        if X.shape != y.shape:
            raise ValueError("X and y must have the same shape")
        network = Network(self._spec())
        config = TrainConfig(
            epochs=self.epochs,
            lr_initial=self.lr_initial,
            lr_final=self.lr_final,
            seed=self.seed,
            init_range=self.init_range,
        )
        self.network_ = network
        self.params_, self.report_ = train(network, X, y, config)
        return self

    def _require_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit before using the estimator")

    def predict(self, X):
        self._require_fitted()
        X = _validate_states(X, self.case)
        return self.network_.forward(self.params_, X)

    def rollout(self, state0, n_steps):
        """Iterate the learned step from one initial state; returns a Trajectory."""
        self._require_fitted()
        return self.network_.rollout(self.params_, np.asarray(state0, dtype=float), n_steps)

    def save(self, path):
        self._require_fitted()
        save_model(path, self.network_.spec, self.params_)
