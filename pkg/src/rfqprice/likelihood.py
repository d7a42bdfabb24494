"""Sample likelihood, state filtering and smoothed sufficient statistics.

Everything here reduces to products of per-interval factors
exp(G dt) D_side, where G is the no-event sub-generator and D_side the
diagonal intensity matrix of the realized side. The running row vector
is renormalized to unit mass after every factor and the log of the norm
accumulated, which keeps 10^4-event products in range.
"""

from __future__ import annotations

import numpy as np

from ._linalg import SpectralPropagator, expm_block_integral
from .errors import InputError, NumericalError
from .model import MmppModel, StateDistribution, build_generator, stationary_distribution, transition_kernel
from .stream import BID, RfqStream

__all__ = ["log_likelihood", "filter_posterior", "filter_posterior_path"]


def _default_prior(model: MmppModel, pi0) -> np.ndarray:
    if pi0 is None:
        return stationary_distribution(model).probs
    if isinstance(pi0, StateDistribution):
        return pi0.probs
    return StateDistribution(np.asarray(pi0, dtype=float)).probs


def _emissions(model: MmppModel, sides: np.ndarray) -> np.ndarray:
    """Per-event emission rates: row r holds the realized side's intensity vector."""
    rates = np.stack([model.rate_bid, model.rate_ask])
    return rates[sides]


class _ForwardBackward:
    """One pass of normalized forward/backward vectors over a stream."""

    def __init__(self, model: MmppModel, stream: RfqStream, pi0):
        self.model = model
        self.stream = stream
        self.pi0 = _default_prior(model, pi0)
        if self.pi0.size != model.n_states:
            raise InputError("prior length does not match the model state count")
        self.G = build_generator(model)
        self.dts = np.diff(stream.times, prepend=0.0)
        self.emit = _emissions(model, stream.sides)
        try:
            self.spec = SpectralPropagator(self.G)
            self.kernels = self.spec.kernels(self.dts) if len(stream) else np.empty((0,) + self.G.shape)
        except np.linalg.LinAlgError:
            self.spec = None
            self.kernels = (
                _expm_kernels(self.G, self.dts) if len(stream) else np.empty((0,) + self.G.shape)
            )

    def forward(self):
        """Normalized forward rows a_hat and their cumulative log norms."""
        n, m = len(self.stream), self.model.n_states
        a_hat = np.empty((n + 1, m))
        log_norm = np.empty(n + 1)
        a_hat[0] = self.pi0
        log_norm[0] = 0.0
        for r in range(1, n + 1):
            u = (a_hat[r - 1] @ self.kernels[r - 1]) * self.emit[r - 1]
            s = u.sum()
            if not np.isfinite(s) or s <= 0.0:
                raise NumericalError(f"forward pass underflowed at event {r} (t={self.stream.times[r-1]})")
            a_hat[r] = u / s
            log_norm[r] = log_norm[r - 1] + np.log(s)
        return a_hat, log_norm

    def backward(self):
        """Normalized backward columns b_hat (b_hat[r] summarizes events > r)."""
        n, m = len(self.stream), self.model.n_states
        b_hat = np.empty((n + 1, m))
        step_norm = np.empty(n + 1)  # step_norm[r] = |K_r D_r b_r|_1 for r >= 1
        b_hat[n] = np.full(m, 1.0 / m)
        step_norm[0] = np.nan
        for r in range(n, 0, -1):
            w = self.kernels[r - 1] @ (self.emit[r - 1] * b_hat[r])
            s = w.sum()
            if not np.isfinite(s) or s <= 0.0:
                raise NumericalError(f"backward pass underflowed at event {r} (t={self.stream.times[r-1]})")
            b_hat[r - 1] = w / s
            step_norm[r] = s
        return b_hat, step_norm


def _expm_kernels(G: np.ndarray, dts: np.ndarray) -> np.ndarray:
    from scipy.linalg import expm

    return expm(G[None, :, :] * np.asarray(dts, dtype=float)[:, None, None])


def log_likelihood(model: MmppModel, stream: RfqStream, pi0=None, rescale: bool = True) -> float:
    """Log-likelihood of the event sample over the window [0, t_N].

    An empty stream carries no observation window and contributes 0. With
    ``rescale=False`` the raw matrix product is formed instead (only safe
    on short streams; kept for validating the rescaled path).
    """
    if len(stream) == 0:
        return 0.0
    if not rescale:
        pi = _default_prior(model, pi0)
        emit = _emissions(model, stream.sides)
        a = pi.copy()
        for r, dt in enumerate(np.diff(stream.times, prepend=0.0)):
            a = (a @ transition_kernel(model, dt)) * emit[r]
        total = a.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise NumericalError("likelihood product left floating-point range; use rescale=True")
        return float(np.log(total))
    fb = _ForwardBackward(model, stream, pi0)
    _, log_norm = fb.forward()
    return float(log_norm[-1])


def filter_posterior(model: MmppModel, stream: RfqStream, pi0=None, t: float = None) -> StateDistribution:
    """Posterior state distribution at time t given events up to t.

    The prior is propagated through every inter-event kernel, reweighted
    by the realized side's intensities at each event, propagated over the
    remaining gap [t_n, t] and renormalized.
    """
    if t is None:
        t = stream.span
    if t < 0:
        raise InputError("query time must be nonnegative")
    sub = stream.restrict(t)
    fb = _ForwardBackward(model, sub, pi0)
    a_hat, _ = fb.forward()
    tail = transition_kernel(model, t - (sub.times[-1] if len(sub) else 0.0))
    post = a_hat[-1] @ tail
    s = post.sum()
    if not np.isfinite(s) or s <= 0.0:
        raise NumericalError(f"posterior normalization underflowed at t={t}")
    return StateDistribution(post / s)


def filter_posterior_path(model: MmppModel, stream: RfqStream, times, pi0=None) -> np.ndarray:
    """Posterior at each query time, shape (len(times), n_states).

    Query times must be nondecreasing; events strictly after a query time
    do not influence it (filtering, not smoothing).
    """
    times = np.asarray(times, dtype=float)
    if times.size and (np.any(np.diff(times) < 0) or times[0] < 0):
        raise InputError("query times must be nonnegative and nondecreasing")
    fb = _ForwardBackward(model, stream, pi0)
    a_hat, _ = fb.forward()
    ev = stream.times
    out = np.empty((times.size, model.n_states))
    # index of the last event at or before each query time
    idx = np.searchsorted(ev, times, side="right")
    gap_kernel = fb.spec.kernels if fb.spec is not None else lambda d: _expm_kernels(fb.G, d)
    gaps = times - np.where(idx > 0, ev[np.maximum(idx - 1, 0)], 0.0)
    kernels = gap_kernel(gaps)
    for i in range(times.size):
        post = a_hat[idx[i]] @ kernels[i]
        s = post.sum()
        if not np.isfinite(s) or s <= 0.0:
            raise NumericalError(f"posterior normalization underflowed at t={times[i]}")
        out[i] = post / s
    return out


def smoothed_statistics(model: MmppModel, stream: RfqStream, pi0=None):
    """Smoothed event counts, holding times and transition expectations.

    Returns ``(bid_counts, ask_counts, holding_times, transition_counts)``
    as flat-state arrays: the first three of shape (n_states,), the last
    (n_states, n_states) with zero diagonal. These are the conditional
    expectations, given the whole sample, of per-state event counts,
    occupation times and chain jump counts.
    """
    n, m = len(stream), model.n_states
    if n == 0:
        raise InputError("cannot smooth an empty stream")
    fb = _ForwardBackward(model, stream, pi0)
    a_hat, _ = fb.forward()
    b_hat, step_norm = fb.backward()

    # per-event smoothed state distribution (scale factors cancel per event)
    g = a_hat[1:] * b_hat[1:]
    g /= g.sum(axis=1, keepdims=True)
    is_bid = stream.sides == BID
    bid_counts = g[is_bid].sum(axis=0) if is_bid.any() else np.zeros(m)
    ask_counts = g[~is_bid].sum(axis=0) if (~is_bid).any() else np.zeros(m)

    # interval integrals: weights make each interval's diagonal sum to dt_r
    btilde = fb.emit * b_hat[1:]
    ell = np.einsum("rm,rm->r", a_hat[:-1], b_hat[:-1]) * step_norm[1:]
    if np.any(~np.isfinite(ell)) or np.any(ell <= 0.0):
        bad = int(np.flatnonzero(~np.isfinite(ell) | (ell <= 0.0))[0])
        raise NumericalError(f"interval weight underflowed at event {bad + 1}")
    if fb.spec is not None:
        xi = fb.spec.weighted_integral_sum(a_hat[:-1], btilde, fb.dts, 1.0 / ell)
    else:
        xi = np.zeros((m, m))
        for r in range(n):
            _, block = expm_block_integral(fb.G, np.outer(btilde[r], a_hat[r]), fb.dts[r])
            xi += block.T / ell[r]

    holding = np.clip(np.diag(xi).copy(), 0.0, None)
    transitions = model.Q * xi
    np.fill_diagonal(transitions, 0.0)
    transitions = np.clip(transitions, 0.0, None)
    return bid_counts, ask_counts, holding, transitions
