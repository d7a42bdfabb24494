"""Bidimensional Markov-modulated Poisson process model.

The hidden liquidity state is a continuous-time Markov chain on the
product space of bid and ask intensity levels (lexicographic order, see
:mod:`rfqprice.states`); while the chain sits in state (j_b, j_a), bid
RFQs arrive at rate lambda_b[j_b] and ask RFQs at rate lambda_a[j_a],
both in events per day.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm
from scipy.sparse.csgraph import connected_components

from .errors import InputError
from .states import apply_state_permutation, ask_levels, bid_levels, side_swap_permutation

_ROWSUM_TOL = 1e-12
_EXCHANGEABLE_TOL = 1e-12


@dataclass(frozen=True)
class MmppModel:
    """Intensity levels and transition-rate matrix of the hidden chain.

    Parameters
    ----------
    lambda_b, lambda_a : array
        Strictly positive intensity levels in day^-1, sorted ascending
        (equal adjacent levels are allowed for degenerate fits).
    Q : (m_b*m_a, m_b*m_a) array
        Transition-rate matrix of the joint chain in lexicographic state
        order: nonnegative off-diagonal, rows summing to zero.
    exchangeable : bool
        Assert the bid/ask symmetry: shared levels and a rate matrix
        invariant under relabelling (j_b, j_a) -> (j_a, j_b).
    """

    lambda_b: np.ndarray
    lambda_a: np.ndarray
    Q: np.ndarray
    exchangeable: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lambda_b", np.atleast_1d(np.asarray(self.lambda_b, dtype=float)))
        object.__setattr__(self, "lambda_a", np.atleast_1d(np.asarray(self.lambda_a, dtype=float)))
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float))
        self.validate()

    # -- basic shape -------------------------------------------------------
    @property
    def m_b(self) -> int:
        return self.lambda_b.size

    @property
    def m_a(self) -> int:
        return self.lambda_a.size

    @property
    def n_states(self) -> int:
        return self.m_b * self.m_a

    # -- per-flat-state intensity vectors -----------------------------------
    @property
    def rate_bid(self) -> np.ndarray:
        """Bid intensity of every flat state, shape (n_states,)."""
        return self.lambda_b[bid_levels(self.m_b, self.m_a)]

    @property
    def rate_ask(self) -> np.ndarray:
        """Ask intensity of every flat state, shape (n_states,)."""
        return self.lambda_a[ask_levels(self.m_b, self.m_a)]

    def validate(self) -> None:
        """Raise :class:`InputError` if any structural invariant is broken."""
        for name, lam in (("lambda_b", self.lambda_b), ("lambda_a", self.lambda_a)):
            if lam.ndim != 1 or lam.size == 0:
                raise InputError(f"{name} must be a non-empty 1-d vector")
            if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
                raise InputError(f"{name} must be finite and strictly positive")
            if np.any(np.diff(lam) < 0):
                raise InputError(f"{name} must be sorted ascending (canonical order)")
        n = self.n_states
        if self.Q.shape != (n, n):
            raise InputError(
                f"Q has shape {self.Q.shape}, expected ({n}, {n}) for "
                f"m_b={self.m_b}, m_a={self.m_a}"
            )
        if not np.all(np.isfinite(self.Q)):
            raise InputError("Q must be finite")
        off = self.Q - np.diag(np.diag(self.Q))
        if np.any(off < -_ROWSUM_TOL):
            raise InputError("Q off-diagonal entries must be nonnegative")
        rowsums = self.Q.sum(axis=1)
        if np.any(np.abs(rowsums) > _ROWSUM_TOL * max(1.0, np.abs(self.Q).max())):
            raise InputError(f"Q rows must sum to zero (max |sum| = {np.abs(rowsums).max():.3e})")
        if self.exchangeable:
            if self.m_b != self.m_a:
                raise InputError("exchangeable model requires m_b == m_a")
            if not np.allclose(self.lambda_b, self.lambda_a, rtol=0, atol=_EXCHANGEABLE_TOL):
                raise InputError("exchangeable model requires lambda_b == lambda_a")
            perm = side_swap_permutation(self.m_b)
            if not np.allclose(
                self.Q, apply_state_permutation(self.Q, perm), rtol=0, atol=_EXCHANGEABLE_TOL
            ):
                raise InputError("Q is not invariant under the bid/ask state swap")

    # -- transformations -----------------------------------------------------
    def scale_intensities(self, beta_b: float, beta_a: float | None = None) -> "MmppModel":
        """Model for a single asset carrying a share beta of the aggregate flow.

        Multiplies the intensity levels by the per-side weights while
        keeping the hidden chain (Q) unchanged.
        """
        if beta_a is None:
            beta_a = beta_b
        return replace(
            self,
            lambda_b=self.lambda_b * beta_b,
            lambda_a=self.lambda_a * beta_a,
            exchangeable=self.exchangeable and beta_b == beta_a,
        )

    def canonical(self) -> tuple["MmppModel", np.ndarray]:
        """Sort intensity levels ascending; returns (model, flat-state permutation).

        The permutation maps new flat indices to old ones, so that any
        distribution pi over the old states becomes pi[perm].
        """
        order_b = np.argsort(self.lambda_b, kind="stable")
        order_a = np.argsort(self.lambda_a, kind="stable")
        perm = (order_b[:, None] * self.m_a + order_a[None, :]).ravel()
        model = MmppModel(
            lambda_b=self.lambda_b[order_b],
            lambda_a=self.lambda_a[order_a],
            Q=apply_state_permutation(self.Q, perm),
            exchangeable=self.exchangeable,
        )
        return model, perm

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "m_b": self.m_b,
            "m_a": self.m_a,
            "lambda_b": self.lambda_b.tolist(),
            "lambda_a": self.lambda_a.tolist(),
            "Q": self.Q.ravel().tolist(),
            "exchangeable": bool(self.exchangeable),
        }

    def to_json(self, path=None) -> str:
        doc = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(doc + "\n")
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "MmppModel":
        try:
            m_b, m_a = int(doc["m_b"]), int(doc["m_a"])
            Q = np.asarray(doc["Q"], dtype=float).reshape(m_b * m_a, m_b * m_a)
            return cls(
                lambda_b=np.asarray(doc["lambda_b"], dtype=float),
                lambda_a=np.asarray(doc["lambda_a"], dtype=float),
                Q=Q,
                exchangeable=bool(doc.get("exchangeable", False)),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed model document: {exc}") from exc

    @classmethod
    def from_json(cls, source) -> "MmppModel":
        if hasattr(source, "read"):
            doc = json.load(source)
        else:
            with open(source) as fh:
                doc = json.load(fh)
        return cls.from_dict(doc)


@dataclass(frozen=True)
class StateDistribution:
    """Probability vector over the flat joint states."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or np.any(p < -1e-12) or not np.all(np.isfinite(p)):
            raise InputError("state distribution must be a finite nonnegative vector")
        if abs(p.sum() - 1.0) > 1e-10:
            raise InputError(f"state distribution must sum to 1 (got {p.sum():.12f})")
        object.__setattr__(self, "probs", np.clip(p, 0.0, None))

    def __len__(self) -> int:
        return self.probs.size

    def as_matrix(self, m_b: int, m_a: int) -> np.ndarray:
        return self.probs.reshape(m_b, m_a)


def build_generator(model: MmppModel) -> np.ndarray:
    """Sub-generator of the no-event evolution: Q minus the total RFQ rate.

    Row sums equal minus the state's total intensity, so probability mass
    leaks out exactly at the rate RFQs occur.
    """
    return model.Q - np.diag(model.rate_bid + model.rate_ask)


def transition_kernel(model: MmppModel, dt: float) -> np.ndarray:
    """No-event transition kernel exp(G dt) with G = build_generator(model).

    Entry (j, k) is the probability of being in state k after dt days with
    no RFQ on either side, starting from state j.
    """
    if dt < 0:
        raise InputError(f"dt must be nonnegative, got {dt}")
    return expm(build_generator(model) * dt)


def stationary_distribution(model_or_q) -> StateDistribution:
    """Stationary distribution pi with pi' Q = 0.

    If the positive-rate graph of Q is not strongly connected, the chain
    is reducible: a warning is emitted and the distribution is computed on
    a recurrent (closed) class, with zeros elsewhere.
    """
    Q = model_or_q.Q if isinstance(model_or_q, MmppModel) else np.asarray(model_or_q, dtype=float)
    n = Q.shape[0]
    if n == 1:
        return StateDistribution(np.array([1.0]))
    adj = (Q > 0).astype(np.int8)
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    support = np.arange(n)
    if n_comp > 1:
        # pick a closed class: no positive rate leaving the component
        closed = None
        for c in range(n_comp):
            members = np.flatnonzero(labels == c)
            outside = np.flatnonzero(labels != c)
            if outside.size == 0 or not np.any(Q[np.ix_(members, outside)] > 0):
                closed = members
                break
        if closed is None:  # pragma: no cover - a finite chain always has one
            closed = np.flatnonzero(labels == labels[0])
        warnings.warn(
            "rate matrix is reducible; stationary distribution restricted "
            f"to a recurrent class of {closed.size} states",
            RuntimeWarning,
            stacklevel=2,
        )
        support = closed
        Q = Q[np.ix_(support, support)]
    m = support.size
    A = np.vstack([Q.T, np.ones(m)])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    pi_sub, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi_sub = np.clip(pi_sub, 0.0, None)
    pi_sub /= pi_sub.sum()
    pi = np.zeros(n)
    pi[support] = pi_sub
    return StateDistribution(pi)


def independent_product_generator(Q_b: np.ndarray, Q_a: np.ndarray) -> np.ndarray:
    """Joint rate matrix of independent bid/ask chains: Q_b (x) I + I (x) Q_a."""
    Q_b = np.asarray(Q_b, dtype=float)
    Q_a = np.asarray(Q_a, dtype=float)
    return np.kron(Q_b, np.eye(Q_a.shape[0])) + np.kron(np.eye(Q_b.shape[0]), Q_a)
