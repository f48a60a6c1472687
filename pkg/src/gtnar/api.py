"""Estimator classes with the scikit-learn interface.

The data are a whole tensor series rather than an ``(X, y)`` pair, so
``fit`` takes the series, the mode networks and an optional covariate panel.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimator import fit, fitted_values, make_design
from .inference import coefficient_inference
from .selection import select


class GTNAR(BaseEstimator):
    """Grouped tensor network autoregression fitted by alternating least squares.

    Parameters
    ----------
    n_groups : int or tuple of int
        Groups per mode; a scalar applies to every mode.
    max_iter : int
    n_trials : int
        Starting partitions per initialization kind.
    n_refine : int, optional
        Iterate only the best ``n_refine`` starts to convergence.
    tol : float
        Relative objective decrease that counts as convergence.
    random_state : int, optional

    Attributes
    ----------
    coef_ : ndarray of shape (k,)
        Stacked estimate ``(theta_1, ..., theta_q, vec(alpha))``.
    params_ : GroupedParameters
    labels_ : list of ndarray
        0-based group label of every node, per mode.
    objective_ : float
        Residual sum of squares at the solution.
    result_ : FitResult
    """

    def __init__(self, n_groups=2, max_iter=100, n_trials=3, n_refine=None, tol=1e-10, random_state=None):
        self.n_groups = n_groups
        self.max_iter = max_iter
        self.n_trials = n_trials
        self.n_refine = n_refine
        self.tol = tol
        self.random_state = random_state

    def fit(self, Y, networks, covariates=None, memberships=None):
        """Fit on ``Y`` of shape ``(T + 1, N_1, ..., N_q)``.

        With ``memberships`` the labels are held fixed (oracle fit).
        """
        design = make_design(Y, networks, covariates)
        if memberships is not None:
            res = fit(design, self.n_groups, init=memberships, fixed=True)
        else:
            res = fit(
                design,
                self.n_groups,
                max_iter=self.max_iter,
                n_trials=self.n_trials,
                seed=self.random_state,
                n_refine=self.n_refine,
                tol=self.tol,
            )
        self._set_result(res, design)
        return self

    def _set_result(self, res, design):
        self.result_ = res
        self.coef_ = res.xi.copy()
        self.params_ = res.params
        self.memberships_ = list(res.memberships)
        self.labels_ = [m.labels.copy() for m in res.memberships]
        self.objective_ = res.q_value
        self.n_iter_ = res.n_iter
        self.networks_ = design.networks
        self.dims_ = design.dims

    def predict(self, Y, covariates=None):
        """One-step-ahead means of ``Y_1..Y_T`` given ``Y_0..Y_{T-1}``."""
        check_is_fitted(self, "coef_")
        design = make_design(Y, self.networks_, covariates)
        return fitted_values(design, self.coef_, self.memberships_)

    def score(self, Y, covariates=None):
        """Coefficient of determination of the one-step predictions."""
        design = make_design(Y, self.networks_, covariates)
        pred = self.predict(design)
        y = design.response
        return 1.0 - float(np.sum((y - pred) ** 2)) / float(np.sum((y - y.mean()) ** 2))

    def inference(self, sigma2=None):
        check_is_fitted(self, "coef_")
        return coefficient_inference(self.result_, sigma2)

    def summary(self) -> str:
        return self.inference().table()


class GTNARSelector(BaseEstimator):
    """Pick the group counts by QIC over ``[1, g_max]`` per mode, then refit.

    Attributes
    ----------
    n_groups_ : tuple of int
    selection_ : SelectionResult
    best_estimator_ : GTNAR
    """

    def __init__(self, g_max=5, kappa=None, C=40.0, max_iter=100, n_trials=3, n_refine=None, random_state=None):
        self.g_max = g_max
        self.kappa = kappa
        self.C = C
        self.max_iter = max_iter
        self.n_trials = n_trials
        self.n_refine = n_refine
        self.random_state = random_state

    def fit(self, Y, networks, covariates=None):
        design = make_design(Y, networks, covariates)
        sel = select(
            design,
            self.g_max,
            kappa=self.kappa,
            C=self.C,
            seed=self.random_state,
            max_iter=self.max_iter,
            n_trials=self.n_trials,
            n_refine=self.n_refine,
        )
        self.selection_ = sel
        self.n_groups_ = sel.chosen
        best = GTNAR(sel.chosen, self.max_iter, self.n_trials, self.n_refine, random_state=self.random_state)
        best._set_result(sel.best_fit, design)
        self.best_estimator_ = best
        return self

    def predict(self, Y, covariates=None):
        check_is_fitted(self, "best_estimator_")
        return self.best_estimator_.predict(Y, covariates)

    def score(self, Y, covariates=None):
        check_is_fitted(self, "best_estimator_")
        return self.best_estimator_.score(Y, covariates)
