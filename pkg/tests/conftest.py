import numpy as np
import pytest

from reference import sector_model


@pytest.fixture(scope="session")
def sector1():
    return sector_model(1)


@pytest.fixture(scope="session")
def sector2():
    return sector_model(2)


@pytest.fixture(scope="session")
def sector4():
    return sector_model(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240214)


def random_small_model(rng, m_b=2, m_a=2, exchangeable=False):
    """Random well-behaved model for property tests."""
    from rfqprice import MmppModel
    from rfqprice.states import apply_state_permutation, side_swap_permutation

    lam_b = np.sort(rng.uniform(1.0, 8.0, size=m_b))
    lam_a = lam_b.copy() if exchangeable else np.sort(rng.uniform(1.0, 8.0, size=m_a))
    n = m_b * m_a
    off = rng.uniform(0.2, 1.5, size=(n, n))
    np.fill_diagonal(off, 0.0)
    if exchangeable:
        perm = side_swap_permutation(m_b)
        off = 0.5 * (off + apply_state_permutation(off, perm))
    Q = off - np.diag(off.sum(axis=1))
    return MmppModel(lam_b, lam_a, Q, exchangeable=exchangeable)


def poisson_stream(rng, rate_b, rate_a, horizon):
    """Plain two-sided Poisson stream (no regime switching)."""
    from rfqprice import RfqStream

    out_t, out_s = [], []
    for side, rate in ((0, rate_b), (1, rate_a)):
        n = rng.poisson(rate * horizon)
        out_t.append(rng.uniform(0, horizon, n))
        out_s.append(np.full(n, side))
    return RfqStream(np.concatenate(out_t), np.concatenate(out_s))
