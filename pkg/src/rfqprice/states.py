"""Index bookkeeping for the lexicographic product state space.

The joint liquidity state (j_b, j_a) with j_b in {0..m_b-1} and j_a in
{0..m_a-1} maps to the flat index j_b * m_a + j_a, i.e. states are
enumerated (0,0), (0,1), ..., (0,m_a-1), (1,0), ... All reductions that
care about "symmetric" vs "asymmetric" states (m_b == m_a only) go
through this module so the index conventions live in exactly one place.
"""

from __future__ import annotations

import numpy as np


def flat_index(j_b: int, j_a: int, m_a: int) -> int:
    """Flat lexicographic index of the joint state (j_b, j_a), 0-based."""
    return j_b * m_a + j_a


def unflatten(idx: int, m_a: int) -> tuple[int, int]:
    """Inverse of :func:`flat_index`."""
    return divmod(idx, m_a)


def bid_levels(m_b: int, m_a: int) -> np.ndarray:
    """Bid level index j_b for every flat state, shape (m_b * m_a,)."""
    return np.repeat(np.arange(m_b), m_a)


def ask_levels(m_b: int, m_a: int) -> np.ndarray:
    """Ask level index j_a for every flat state, shape (m_b * m_a,)."""
    return np.tile(np.arange(m_a), m_b)


def side_swap_permutation(m: int) -> np.ndarray:
    """Permutation p with p[j_b * m + j_a] = j_a * m + j_b.

    Applying it to a vector relabels every joint state (j_b, j_a) as
    (j_a, j_b); requires a square state space.
    """
    jb = bid_levels(m, m)
    ja = ask_levels(m, m)
    return ja * m + jb


def symmetric_mask(m: int) -> np.ndarray:
    """Boolean mask over flat states marking the diagonal states (j, j)."""
    return bid_levels(m, m) == ask_levels(m, m)


def apply_state_permutation(Q: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Relabel the states of a square matrix: out[i, j] = Q[perm[i], perm[j]]."""
    return Q[np.ix_(perm, perm)]
