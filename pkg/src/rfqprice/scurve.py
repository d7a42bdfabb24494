"""Logistic fill-probability curve and its maximum-likelihood fit.

The probability that a client trades when quoted a margin delta (in $)
is f(delta) = 1 / (1 + exp(a + b * delta / delta0)), where delta0 is the
reference composite bid-ask spread of the asset at evaluation time. Fits
are performed on margins already normalized by delta0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError, NumericalError

__all__ = ["SCurve", "fit_scurve"]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    out[~pos] = np.exp(x[~pos]) / (1.0 + np.exp(x[~pos]))
    return out


@dataclass(frozen=True)
class SCurve:
    """Fill probability f(delta) = sigmoid(-(alpha + beta * delta/delta0))."""

    alpha: float
    beta: float
    delta0: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise InputError("beta must be positive: fill probability must decrease in margin")
        if not self.delta0 > 0:
            raise InputError("delta0 must be positive")

    def with_delta0(self, delta0: float) -> "SCurve":
        """Same curve shape re-anchored to a different composite spread."""
        return replace(self, delta0=delta0)

    # -- evaluations ---------------------------------------------------------
    def __call__(self, delta) -> np.ndarray:
        return _sigmoid(-(self.alpha + self.beta * np.asarray(delta, dtype=float) / self.delta0))

    def complement(self, delta) -> np.ndarray:
        """1 - f(delta), computed without cancellation."""
        return _sigmoid(self.alpha + self.beta * np.asarray(delta, dtype=float) / self.delta0)

    def derivative(self, delta) -> np.ndarray:
        f = self(delta)
        return -(self.beta / self.delta0) * f * (1.0 - f)

    def second_derivative(self, delta) -> np.ndarray:
        f = self(delta)
        k = self.beta / self.delta0
        return k * k * f * (1.0 - f) * (1.0 - 2.0 * f)

    def inverse(self, prob) -> np.ndarray:
        """Margin at which the fill probability equals ``prob``."""
        p = np.asarray(prob, dtype=float)
        if np.any(p <= 0) or np.any(p >= 1):
            raise InputError("fill probability must lie in (0, 1)")
        return self.delta0 * (np.log((1.0 - p) / p) - self.alpha) / self.beta


def _nll_and_grad(params: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float):
    """Mean negative log-likelihood of fills and its gradient.

    Model: P(fill) = sigmoid(-(a + b x)). Parametrized in (a, b).
    """
    a, b = params
    eta = a + b * x
    # log f = -log(1 + e^eta) for fills; log(1 - f) = eta - log(1 + e^eta)
    log1p = np.logaddexp(0.0, eta)
    nll = np.mean(np.where(y, log1p, log1p - eta)) + 0.5 * l2 * (a * a + b * b)
    p_fill = _sigmoid(-eta)
    # d nll / d eta = -(y - (1 - p_fill))... derive: dlog f/deta = -(1-f); dlog(1-f)/deta = f
    g_eta = np.where(y, 1.0 - p_fill, -p_fill)
    grad = np.array([np.mean(g_eta), np.mean(g_eta * x)]) + l2 * params
    return nll, grad


def fit_scurve(margins, filled, regularize: bool = False) -> SCurve:
    """Maximum-likelihood logistic fit of fill outcomes on normalized margins.

    ``margins`` are delta/delta0 values; ``filled`` the trade indicator.
    Perfect separation makes the MLE diverge: it is detected and reported
    with a pointer to ``regularize=True``, which applies an L2 penalty of
    1e-4 instead.
    """
    x = np.asarray(margins, dtype=float)
    y = np.asarray(filled).astype(bool)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError("margins and filled must be 1-d arrays of equal length")
    if y.all() or not y.any():
        raise InputError("need both filled and unfilled outcomes to identify the curve")
    if np.ptp(x) == 0:
        raise InputError("all margins identical: slope is unidentified")
    if not regularize and x[y].max() < x[~y].min():
        raise InputError(
            "margins perfectly separate fills from misses; the unpenalized fit "
            "diverges — pass regularize=True to apply an L2 penalty"
        )
    l2 = 1e-4 if regularize else 0.0

    params = np.zeros(2)
    # Newton with a simple backtracking safeguard on the mean NLL
    for _ in range(200):
        nll, grad = _nll_and_grad(params, x, y, l2)
        eta = params[0] + params[1] * x
        w = _sigmoid(eta) * _sigmoid(-eta)
        h00 = np.mean(w) + l2
        h01 = np.mean(w * x)
        h11 = np.mean(w * x * x) + l2
        det = h00 * h11 - h01 * h01
        if det <= 1e-300:
            raise NumericalError("singular Hessian in logistic fit")
        step = np.array([h11 * grad[0] - h01 * grad[1], h00 * grad[1] - h01 * grad[0]]) / det
        scale = 1.0
        for _ in range(50):
            trial = params - scale * step
            if _nll_and_grad(trial, x, y, l2)[0] <= nll + 1e-15:
                break
            scale *= 0.5
        params = params - scale * step
        if np.max(np.abs(grad)) < 1e-10:
            break
    else:
        raise NumericalError("logistic fit did not converge")
    alpha, beta = params
    if not np.isfinite(alpha) or not np.isfinite(beta) or abs(alpha) > 1e3 or abs(beta) > 1e3:
        raise InputError(
            "logistic fit diverged (near-separation); pass regularize=True to stabilize"
        )
    if beta <= 0:
        raise InputError("fitted slope is not positive: fills do not decrease in margin")
    return SCurve(alpha=float(alpha), beta=float(beta), delta0=1.0)
