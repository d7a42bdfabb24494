"""Scikit-learn style facades over the estimation routines.

These wrappers exist so the fitting steps compose with the usual
pipeline/tuning machinery (``get_params``/``set_params``, ``fit`` returning
``self``, trailing-underscore attributes). The numerical work lives in
:mod:`rfqprice.estimation`; nothing here adds behavior beyond input
validation and bookkeeping.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .estimation import em_fit
from .likelihood import filter_posterior_path, log_likelihood
from .stream import RfqStream


def _as_stream(X) -> RfqStream:
    if isinstance(X, RfqStream):
        return X
    arr = check_array(X, ensure_2d=True, dtype=float)
    if arr.shape[1] != 2:
        raise ValueError("expected an RfqStream or an (n, 2) array of [time, side]")
    return RfqStream(arr[:, 0], arr[:, 1].astype(int))


class MmppEstimator(BaseEstimator):
    """EM estimator of the hidden liquidity chain.

    Parameters follow the estimation routine: number of intensity levels
    ``m``, the ``variant`` ("exchangeable" or "general"), and the EM
    stopping rule. After ``fit``, the fitted model is in ``model_`` and
    the log-likelihood trace in ``loglik_trace_``.
    """

    def __init__(self, m: int = 2, variant: str = "exchangeable", max_iter: int = 500, tol: float = 1e-7):
        self.m = m
        self.variant = variant
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        stream = _as_stream(X)
        result = em_fit(stream, m=self.m, variant=self.variant, max_iter=self.max_iter, tol=self.tol)
        self.model_ = result.model
        self.loglik_trace_ = np.asarray(result.log_likelihoods)
        self.n_iter_ = result.n_iter
        self.converged_ = result.converged
        self.pi0_ = result.pi0
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before using the estimator")

    def predict_proba(self, X, at=None) -> np.ndarray:
        """Filtered posterior over hidden states, given the events in X.

        ``at`` selects query times (default: the event times themselves).
        """
        self._check_fitted()
        stream = _as_stream(X)
        times = stream.times if at is None else np.asarray(at, dtype=float)
        return filter_posterior_path(self.model_, stream, times)

    def score(self, X, y=None) -> float:
        """Average log-likelihood per event under the fitted model."""
        self._check_fitted()
        stream = _as_stream(X)
        return log_likelihood(self.model_, stream) / max(len(stream), 1)


class SCurveEstimator(BaseEstimator):
    """Logistic fill-probability fit with the sklearn calling convention.

    ``X`` holds normalized margins (delta/delta0, one column), ``y`` the
    fill indicator.
    """

    def __init__(self, regularize: bool = False):
        self.regularize = regularize

    def fit(self, X, y):
        from .scurve import fit_scurve

        x = check_array(X, ensure_2d=False, dtype=float)
        if x.ndim == 2:
            if x.shape[1] != 1:
                raise ValueError("expected a single margin column")
            x = x[:, 0]
        self.scurve_ = fit_scurve(x, np.asarray(y), regularize=self.regularize)
        self.alpha_ = self.scurve_.alpha
        self.beta_ = self.scurve_.beta
        return self

    def predict_proba(self, X) -> np.ndarray:
        if not hasattr(self, "scurve_"):
            raise NotFittedError("call fit before using the estimator")
        x = check_array(X, ensure_2d=False, dtype=float)
        if x.ndim == 2:
            x = x[:, 0]
        p = self.scurve_(x)
        return np.column_stack([1.0 - p, p])
