"""Parameter estimation: EM for the hidden liquidity chain, quantile
initialization, per-asset flow weights, and the price-dynamics
regressions (drift sensitivity kappa, volatility sigma)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalError
from .likelihood import log_likelihood, smoothed_statistics
from .model import MmppModel, StateDistribution, independent_product_generator, stationary_distribution
from .states import apply_state_permutation, side_swap_permutation
from .stream import ASK, BID, RfqStream

#: holding-time mass below this fraction of the span freezes a state's update
_VISIT_FLOOR = 1e-12


@dataclass(frozen=True)
class EmSufficientStats:
    """Smoothed complete-data statistics for one EM iteration.

    ``bid_counts``, ``ask_counts`` and ``holding_times`` are (m_b, m_a)
    matrices over joint states; ``transitions`` is the flat
    (n_states, n_states) expected jump-count matrix with zero diagonal.
    """

    bid_counts: np.ndarray
    ask_counts: np.ndarray
    holding_times: np.ndarray
    transitions: np.ndarray

    @property
    def total_time(self) -> float:
        return float(self.holding_times.sum())


@dataclass
class EmFitResult:
    model: MmppModel
    log_likelihoods: list
    n_iter: int
    converged: bool
    pi0: StateDistribution


def em_expectations(model: MmppModel, stream: RfqStream, pi0=None) -> EmSufficientStats:
    """Conditional expectations of the complete-data statistics.

    Computed from the forward/backward factor products, with the
    per-interval occupation/transition integrals evaluated in closed form
    (see :mod:`rfqprice._linalg`).
    """
    bid, ask, holding, trans = smoothed_statistics(model, stream, pi0)
    shape = (model.m_b, model.m_a)
    return EmSufficientStats(
        bid_counts=bid.reshape(shape),
        ask_counts=ask.reshape(shape),
        holding_times=holding.reshape(shape),
        transitions=trans,
    )


def _finish_rate_matrix(off_diag: np.ndarray) -> np.ndarray:
    Q = off_diag.copy()
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


def _canonicalize(lam_b, lam_a, Q, exchangeable) -> tuple[MmppModel, np.ndarray]:
    """Sort intensity levels ascending; returns the model and the flat
    state permutation (new index -> old index)."""
    order_b = np.argsort(lam_b, kind="stable")
    order_a = np.argsort(lam_a, kind="stable")
    m_a = lam_a.size
    perm = (order_b[:, None] * m_a + order_a[None, :]).ravel()
    model = MmppModel(
        lam_b[order_b], lam_a[order_a], apply_state_permutation(Q, perm), exchangeable=exchangeable
    )
    return model, perm


def _update_general_raw(stats: EmSufficientStats, previous: MmppModel):
    T = stats.holding_times
    span = max(stats.total_time, 1.0)
    lam_b = previous.lambda_b.copy()
    lam_a = previous.lambda_a.copy()
    t_b = T.sum(axis=1)
    t_a = T.sum(axis=0)
    ok_b = t_b > _VISIT_FLOOR * span
    ok_a = t_a > _VISIT_FLOOR * span
    lam_b[ok_b] = stats.bid_counts.sum(axis=1)[ok_b] / t_b[ok_b]
    lam_a[ok_a] = stats.ask_counts.sum(axis=0)[ok_a] / t_a[ok_a]
    if not (ok_b.all() and ok_a.all()):
        warnings.warn("EM update froze intensity levels with no visiting time", RuntimeWarning)

    t_flat = T.ravel()
    ok_q = t_flat > _VISIT_FLOOR * span
    off = previous.Q - np.diag(np.diag(previous.Q))
    off[ok_q] = stats.transitions[ok_q] / t_flat[ok_q, None]
    if not ok_q.all():
        warnings.warn("EM update froze transition rates out of unvisited states", RuntimeWarning)
    return np.maximum(lam_b, 1e-12), np.maximum(lam_a, 1e-12), _finish_rate_matrix(off), False


def _update_exchangeable_raw(stats: EmSufficientStats, previous: MmppModel):
    m = stats.holding_times.shape[0]
    if stats.holding_times.shape != (m, m):
        raise InputError("exchangeable update requires m_b == m_a")
    T = stats.holding_times
    span = max(stats.total_time, 1.0)

    lam = previous.lambda_b.copy()
    num = stats.bid_counts.sum(axis=1) + stats.ask_counts.sum(axis=0)
    den = T.sum(axis=1) + T.sum(axis=0)
    ok = den > _VISIT_FLOOR * span
    lam[ok] = num[ok] / den[ok]
    if not ok.all():
        warnings.warn("EM update froze intensity levels with no visiting time", RuntimeWarning)
    lam = np.maximum(lam, 1e-12)

    perm = side_swap_permutation(m)
    n_pooled = stats.transitions + apply_state_permutation(stats.transitions, perm)
    t_pooled = T.ravel() + T.ravel()[perm]
    ok_q = t_pooled > _VISIT_FLOOR * span
    off = previous.Q - np.diag(np.diag(previous.Q))
    off[ok_q] = n_pooled[ok_q] / t_pooled[ok_q, None]
    if not ok_q.all():
        warnings.warn("EM update froze transition rates out of unvisited states", RuntimeWarning)
    # exact symmetrization guards against floating-point asymmetry
    off = 0.5 * (off + apply_state_permutation(off, perm))
    return lam, lam.copy(), _finish_rate_matrix(off), True


def em_update_general(stats: EmSufficientStats, previous: MmppModel) -> MmppModel:
    """M-step for the unconstrained model: empirical rates under the
    smoothed statistics, re-sorted to canonical ascending-intensity order.
    States with no expected visiting time keep their previous parameters
    (flagged with a warning)."""
    return _canonicalize(*_update_general_raw(stats, previous))[0]


def em_update_exchangeable(stats: EmSufficientStats, previous: MmppModel) -> MmppModel:
    """M-step under the bid/ask symmetry: one shared intensity set, and
    transition statistics pooled with their side-swapped mirror, so the
    output satisfies the exchangeability identity by construction."""
    return _canonicalize(*_update_exchangeable_raw(stats, previous))[0]


def em_fit(
    stream: RfqStream,
    m: int = 2,
    variant: str = "exchangeable",
    max_iter: int = 500,
    tol: float = 1e-7,
    init: MmppModel | None = None,
    pi0=None,
) -> EmFitResult:
    """Fit the hidden-chain parameters by EM.

    Iterates expectation/update steps until the relative log-likelihood
    improvement drops below ``tol`` or ``max_iter`` is reached. The prior
    over the initial state is fixed throughout (default: stationary
    distribution of the initial model), which preserves the exact EM
    monotonicity of the tracked likelihood. States are re-sorted to the
    canonical ascending-intensity order after every update.
    """
    if len(stream) == 0:
        raise InputError("cannot fit an empty stream")
    if variant not in ("general", "exchangeable"):
        raise InputError(f"unknown EM variant {variant!r}")
    update_raw = _update_exchangeable_raw if variant == "exchangeable" else _update_general_raw

    model = init if init is not None else init_from_quantiles(stream, m)
    if variant == "exchangeable" and not model.exchangeable:
        raise InputError("exchangeable fit requires an exchangeable initial model")
    pi = _as_prior(model, pi0)

    trace = [log_likelihood(model, stream, pi)]
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        stats = em_expectations(model, stream, pi)
        model, perm = _canonicalize(*update_raw(stats, model))
        pi = pi[perm]
        ll = log_likelihood(model, stream, pi)
        if not np.isfinite(ll):
            raise NumericalError(
                f"non-finite log-likelihood at EM iteration {n_iter}; iterate: {model.to_dict()}"
            )
        trace.append(ll)
        if ll - trace[-2] < tol * max(1.0, abs(trace[-2])) and n_iter > 1:
            converged = True
            break
    return EmFitResult(
        model=model,
        log_likelihoods=trace,
        n_iter=n_iter,
        converged=converged,
        pi0=StateDistribution(pi),
    )


def _as_prior(model: MmppModel, pi0) -> np.ndarray:
    if pi0 is None:
        return stationary_distribution(model).probs
    if isinstance(pi0, StateDistribution):
        return pi0.probs.copy()
    return StateDistribution(np.asarray(pi0, dtype=float)).probs.copy()


def init_from_quantiles(stream: RfqStream, m: int = 2) -> MmppModel:
    """Initial model from the empirical daily-count distribution.

    Intensity levels are side-averaged percentiles of the events-per-day
    counts (10th/90th for m = 2, evenly spaced between 10 and 90 for
    larger m); the initial rate matrix couples independent per-side
    chains with unit transition rates between every pair of levels.
    """
    n_days = int(np.ceil(stream.span))
    if n_days < 2:
        raise InputError("quantile initialization needs a stream spanning at least 2 days")
    pcts = np.linspace(10.0, 90.0, m) if m > 1 else np.array([50.0])
    counts_b = stream.daily_counts(BID, n_days)
    counts_a = stream.daily_counts(ASK, n_days)
    lam = 0.5 * (np.percentile(counts_b, pcts) + np.percentile(counts_a, pcts))
    # keep levels usable when quiet days put low percentiles at zero
    floor = max(1e-6, 0.05 * max(counts_b.mean(), counts_a.mean()))
    lam = np.maximum(lam, floor)
    if m == 1:
        return MmppModel(lam, lam.copy(), np.zeros((1, 1)), exchangeable=True)
    q_side = np.full((m, m), 1.0)
    np.fill_diagonal(q_side, -(m - 1.0))
    Q = independent_product_generator(q_side, q_side)
    return MmppModel(lam, lam.copy(), Q, exchangeable=True)


def estimate_betas(streams: dict) -> dict:
    """Per-asset flow weights proportional to per-side event counts.

    Returns {asset: (beta_bid, beta_ask)}; each side's weights sum to 1.
    A side with no events at all gets uniform weights (flagged).
    """
    if not streams:
        raise InputError("no streams given")
    assets = list(streams)
    counts = np.array([[streams[a].count(BID), streams[a].count(ASK)] for a in assets], dtype=float)
    if counts.sum() == 0:
        raise InputError("no events on either side")
    betas = np.empty_like(counts)
    for col in (0, 1):
        total = counts[:, col].sum()
        if total == 0:
            warnings.warn(
                f"no {'bid' if col == BID else 'ask'} events; using uniform weights", RuntimeWarning
            )
            betas[:, col] = 1.0 / len(assets)
        else:
            betas[:, col] = counts[:, col] / total
    return {a: (betas[i, 0], betas[i, 1]) for i, a in enumerate(assets)}


@dataclass(frozen=True)
class PriceDynamicsParams:
    """Reference-price dynamics: drift sensitivity and diffusion."""

    kappa: float
    kappa_stdev: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InputError("sigma must be strictly positive")
        if self.kappa_stdev < 0:
            raise InputError("kappa_stdev must be nonnegative")


def estimate_kappa(
    price_times,
    prices,
    posterior_times,
    posteriors,
    drift_values,
    step: float = 0.1,
) -> tuple[float, float]:
    """Drift sensitivity of the reference price to the flow imbalance.

    Ordinary least squares without intercept of price increments on
    increments of the posterior-expected drift value, both resampled on a
    fixed grid (default 0.1 day). Returns (kappa, standard error).
    """
    price_times = np.asarray(price_times, dtype=float)
    prices = np.asarray(prices, dtype=float)
    posterior_times = np.asarray(posterior_times, dtype=float)
    posteriors = np.atleast_2d(np.asarray(posteriors, dtype=float))
    v = np.asarray(drift_values, dtype=float).ravel()
    if posteriors.shape[1] != v.size:
        raise InputError("posterior columns must match the drift-value vector length")
    lo = max(price_times.min(), posterior_times.min())
    hi = min(price_times.max(), posterior_times.max())
    grid = np.arange(lo, hi + step / 2, step)
    if grid.size < 11:
        raise InputError("need at least 10 aligned sampling intervals for the regression")
    s = np.interp(grid, price_times, prices)
    x = np.interp(grid, posterior_times, posteriors @ v)
    ds, dx = np.diff(s), np.diff(x)
    sxx = float(dx @ dx)
    if sxx <= 1e-14 * max(1.0, float(ds @ ds)):
        raise InputError("no imbalance variation in sample")
    kappa = float(dx @ ds) / sxx
    resid = ds - kappa * dx
    dof = max(ds.size - 1, 1)
    stderr = float(np.sqrt((resid @ resid) / dof / sxx))
    return kappa, stderr


def estimate_sigma(price_times, prices) -> float:
    """Realized-volatility estimate sqrt(sum dS^2 / sum dt), in $ day^-1/2."""
    t = np.asarray(price_times, dtype=float)
    s = np.asarray(prices, dtype=float)
    if t.size < 2:
        raise InputError("need at least two price observations")
    span = t[-1] - t[0]
    if span <= 0:
        raise InputError("price series has zero time span")
    ds = np.diff(s)
    return float(np.sqrt(ds @ ds / span))
