"""Micro-price: expected cumulative flow-imbalance drift per liquidity
state, and the posterior-averaged price adjustment it implies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import expm_action_integral
from .errors import InputError
from .model import MmppModel, StateDistribution
from .states import symmetric_mask

__all__ = ["DriftValueTable", "drift_value_finite", "drift_value_asymptotic", "micro_price"]


def drift_vector(model: MmppModel) -> np.ndarray:
    """Instantaneous expected price-drift direction per flat state:
    ask intensity minus bid intensity (events/day)."""
    return model.rate_ask - model.rate_bid


@dataclass(frozen=True)
class DriftValueTable:
    """Limiting expected integral of the intensity difference, per state.

    ``v[j_b, j_a]`` is the expected cumulative (ask - bid) intensity
    integral starting from joint state (j_b, j_a); zero on symmetric
    states and antisymmetric under the bid/ask swap for exchangeable
    models.
    """

    v: np.ndarray

    @property
    def m(self) -> int:
        return self.v.shape[0]

    def as_vector(self) -> np.ndarray:
        return self.v.ravel()


def drift_value_finite(model: MmppModel, horizon: float) -> np.ndarray:
    """Finite-horizon expected drift integral from each state, flat vector.

    Evaluates the integral over [0, T] of exp(Q s) applied to the drift
    vector through one augmented matrix exponential; the terminal value
    (T = 0) is identically zero.
    """
    if horizon < 0:
        raise InputError("horizon must be nonnegative")
    if horizon == 0:
        return np.zeros(model.n_states)
    return expm_action_integral(model.Q, drift_vector(model), horizon)


def drift_value_asymptotic(model: MmppModel) -> DriftValueTable:
    """Infinite-horizon drift value for an exchangeable model.

    Symmetric states contribute exactly zero, so they are dropped and the
    reduced linear system -Q_ns v_ns = d_ns solved; existence requires
    every asymmetric state to reach some symmetric state at a positive
    rate (which makes the reduced matrix strictly diagonally dominant).
    """
    if not model.exchangeable:
        raise InputError("asymptotic drift value requires an exchangeable model")
    m = model.m_b
    sym = symmetric_mask(m)
    ns = ~sym
    rate_to_sym = model.Q[np.ix_(ns, sym)].sum(axis=1)
    if np.any(rate_to_sym <= 0):
        raise InputError("asymmetric state cannot reach symmetric states: limit may not exist")
    d = drift_vector(model)
    Q_ns = model.Q[np.ix_(ns, ns)]
    v_ns = np.linalg.solve(Q_ns, -d[ns])
    v = np.zeros(model.n_states)
    v[ns] = v_ns
    return DriftValueTable(v.reshape(m, m))


def micro_price(mid: float, kappa: float, v_table: DriftValueTable, pi) -> tuple[float, float]:
    """Posterior mean and standard deviation of the micro-price.

    mean = mid + kappa * E_pi[v]; the standard deviation quantifies only
    the liquidity-state uncertainty for fixed model parameters.
    """
    probs = pi.probs if isinstance(pi, StateDistribution) else StateDistribution(np.asarray(pi, float)).probs
    v = v_table.as_vector()
    if probs.size != v.size:
        raise InputError("state distribution does not match the drift table")
    ev = float(probs @ v)
    var = float(probs @ v**2) - ev**2
    return mid + kappa * ev, abs(kappa) * float(np.sqrt(max(var, 0.0)))
