"""Shared matrix-exponential machinery.

Two routes are provided for the per-interval quantities that the
likelihood/EM recursions and the drift-value integrals need:

* an exact block (Van Loan) construction built on scipy's Pade
  scaling-and-squaring ``expm`` — always correct, used for one-off
  integrals and as a fallback;
* a spectral route that diagonalizes the generator once and evaluates
  kernels and interval integrals for thousands of intervals in a few
  batched einsums — used by the EM inner loop when the eigenbasis is
  well conditioned.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

#: eigenbasis condition number beyond which the spectral route is refused
_MAX_EIG_COND = 1e9


def expm_block_integral(G: np.ndarray, X: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Kernel exp(G dt) and the interval integral of exp(G (dt-s)) X exp(G s).

    Both come out of one exponential of the block matrix [[G, X], [0, G]]:
    the diagonal blocks are the kernel and the top-right block is the
    integral over s in [0, dt].
    """
    n = G.shape[0]
    big = np.zeros((2 * n, 2 * n))
    big[:n, :n] = G
    big[:n, n:] = X
    big[n:, n:] = G
    E = expm(big * dt)
    return E[n:, n:], E[:n, n:]


def expm_action_integral(A: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Integral of exp(A s) b over s in [0, t] via one augmented exponential."""
    n = A.shape[0]
    big = np.zeros((n + 1, n + 1))
    big[:n, :n] = A
    big[:n, n] = np.asarray(b, dtype=float)
    E = expm(big * t)
    return E[:n, n]


class SpectralPropagator:
    """Diagonalized generator with batched kernel/integral evaluation.

    Raises ``np.linalg.LinAlgError`` when the generator is too close to
    defective for the spectral formulas to be trustworthy; callers fall
    back to :func:`expm_block_integral`.
    """

    def __init__(self, G: np.ndarray):
        d, V = np.linalg.eig(G)
        Vinv = np.linalg.inv(V)
        cond = np.linalg.norm(V, 2) * np.linalg.norm(Vinv, 2)
        if not np.isfinite(cond) or cond > _MAX_EIG_COND:
            raise np.linalg.LinAlgError(f"eigenbasis condition {cond:.2e} too large")
        self.G = G
        self.d = d
        self.V = V
        self.Vinv = Vinv

    def kernels(self, dts: np.ndarray) -> np.ndarray:
        """Stack of exp(G dt) for every dt, shape (n, m, m)."""
        E = np.exp(np.multiply.outer(np.asarray(dts, dtype=float), self.d))  # (n, m)
        K = np.einsum("ij,nj,jk->nik", self.V, E, self.Vinv)
        return np.ascontiguousarray(K.real)

    def phi(self, dts: np.ndarray) -> np.ndarray:
        """Eigen-pair weights phi[p,q] = int_0^dt exp(d_p (dt-s)) exp(d_q s) ds.

        Returned per interval, shape (n, m, m); evaluated as
        dt * exp(d_q dt) * exprel((d_p - d_q) dt) to stay accurate for
        near-coincident eigenvalues.
        """
        dts = np.asarray(dts, dtype=float)
        diff = self.d[:, None] - self.d[None, :]  # (m, m)
        x = np.multiply.outer(dts, diff)  # (n, m, m)
        small = np.abs(x) < 1e-8
        xs = np.where(small, 1.0, x)
        exprel = np.where(small, 1.0 + x / 2.0 + x * x / 6.0, np.expm1(xs) / xs)
        base = dts[:, None, None] * np.exp(np.multiply.outer(dts, self.d))[:, None, :]
        return base * exprel

    def weighted_integral_sum(
        self, a: np.ndarray, b: np.ndarray, dts: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        """Sum over intervals of w_r * Xi_r, where
        Xi_r[j, k] = int_0^{dt_r} (a_r exp(G s))_j (exp(G (dt_r - s)) b_r)_k ds.

        ``a`` holds row vectors (n, m), ``b`` column vectors (n, m).
        """
        u = a @ self.V  # (n, m) components of a_r in the eigenbasis
        v = b @ self.Vinv.T  # (n, m) components of Vinv b_r
        S = np.einsum("n,np,nq,npq->pq", weights, v, u, self.phi(dts))
        return (self.V @ S @ self.Vinv).T.real
