import numpy as np
import numpy.testing as npt
import pytest

from conftest import poisson_stream, random_small_model
from oracles import hmm_smoother, particle_posterior
from reference import sector_model
from rfqprice import (
    ASK,
    BID,
    MmppModel,
    RfqStream,
    StateDistribution,
    filter_posterior,
    filter_posterior_path,
    log_likelihood,
    stationary_distribution,
    transition_kernel,
)
from rfqprice.states import apply_state_permutation, side_swap_permutation


def single_state_model(lam_b=1.0, lam_a=1.0):
    return MmppModel([lam_b], [lam_a], np.zeros((1, 1)))


def on_grid_stream(rng, rate_b, rate_a, horizon, h):
    """Two-sided Poisson-like stream with event times on the h-grid."""
    slots = np.arange(1, int(round(horizon / h)) + 1)
    take_b = rng.random(slots.size) < rate_b * h
    take_a = rng.random(slots.size) < rate_a * h
    take_a &= ~take_b  # one event per slot keeps both routes comparable
    times = np.concatenate([slots[take_b] * h, slots[take_a] * h])
    sides = np.concatenate([np.zeros(take_b.sum(), int), np.ones(take_a.sum(), int)])
    return RfqStream(times, sides)


class TestLogLikelihood:
    def test_empty_stream_contributes_zero(self):
        stream = RfqStream(np.array([]), np.array([], dtype=int))
        assert log_likelihood(single_state_model(), stream) == 0.0

    def test_single_event_poisson_density(self):
        stream = RfqStream([1.0], [BID])
        ll = log_likelihood(single_state_model(), stream, pi0=[1.0])
        assert ll == pytest.approx(-2.0, abs=1e-12)

    def test_state_relabeling_invariance(self, rng):
        model = random_small_model(rng)
        stream = poisson_stream(rng, 4.0, 5.0, 3.0)
        pi = stationary_distribution(model).probs
        perm = np.array([3, 1, 0, 2])
        permuted = MmppModel.__new__(MmppModel)
        object.__setattr__(permuted, "lambda_b", model.lambda_b)
        object.__setattr__(permuted, "lambda_a", model.lambda_a)
        object.__setattr__(permuted, "Q", apply_state_permutation(model.Q, perm))
        object.__setattr__(permuted, "exchangeable", False)
        # relabeling states only makes sense with intensities relabeled too:
        # emulate by permuting within the likelihood's flat-rate view
        rates_b = model.rate_bid[perm]
        rates_a = model.rate_ask[perm]
        ll = log_likelihood(model, stream, pi)

        # brute-force product with permuted flat quantities
        from rfqprice.model import build_generator
        from scipy.linalg import expm

        G = apply_state_permutation(build_generator(model), perm)
        a = pi[perm]
        total = 0.0
        rates = np.stack([rates_b, rates_a])
        for dt, side in zip(np.diff(stream.times, prepend=0.0), stream.sides):
            a = (a @ expm(G * dt)) * rates[side]
            norm = a.sum()
            total += np.log(norm)
            a /= norm
        assert ll == pytest.approx(total, abs=1e-9)

    def test_rescaled_matches_plain_product(self, rng):
        model = random_small_model(rng)
        stream = poisson_stream(rng, 3.0, 3.0, 2.0)
        pi = stationary_distribution(model).probs
        ll_scaled = log_likelihood(model, stream, pi, rescale=True)
        ll_plain = log_likelihood(model, stream, pi, rescale=False)
        assert ll_scaled == pytest.approx(ll_plain, abs=1e-8)

    def test_fine_hmm_oracle(self, rng):
        h = 1e-5
        model = random_small_model(rng, exchangeable=True)
        for _ in range(3):
            stream = on_grid_stream(rng, 3.0, 4.0, 0.4, h)
            if len(stream) < 2:
                continue
            pi = stationary_distribution(model).probs
            ours = log_likelihood(model, stream, pi)
            oracle = hmm_smoother(model, stream, pi, h)["loglik"]
            assert ours == pytest.approx(oracle, abs=1e-3)


class TestFilterPosterior:
    def test_no_events_at_zero_returns_prior(self, sector1):
        stream = RfqStream(np.array([]), np.array([], dtype=int))
        pi0 = np.array([0.4, 0.3, 0.2, 0.1])
        post = filter_posterior(sector1, stream, pi0, t=0.0)
        npt.assert_allclose(post.probs, pi0, atol=1e-14)

    def test_single_state_always_degenerate(self):
        stream = RfqStream(np.array([]), np.array([], dtype=int))
        post = filter_posterior(single_state_model(), stream, [1.0], t=3.7)
        npt.assert_allclose(post.probs, [1.0])

    def test_event_time_recursion_consistency(self, sector1, rng):
        stream = poisson_stream(rng, 20.0, 30.0, 0.6)
        pi0 = stationary_distribution(sector1).probs
        rates = np.stack([sector1.rate_bid, sector1.rate_ask])
        prior = pi0
        t_prev = 0.0
        for r in range(len(stream)):
            t_r = stream.times[r]
            propagated = prior @ transition_kernel(sector1, t_r - t_prev)
            updated = propagated * rates[stream.sides[r]]
            updated /= updated.sum()
            post = filter_posterior(sector1, stream.restrict(t_r), pi0, t=t_r)
            npt.assert_allclose(post.probs, updated, atol=1e-10)
            prior, t_prev = updated, t_r

    def test_side_swap_permutes_posterior_exactly(self, sector1, rng):
        stream = poisson_stream(rng, 25.0, 12.0, 0.8)
        t = stream.span + 0.05
        pi0 = stationary_distribution(sector1).probs
        perm = side_swap_permutation(2)
        post = filter_posterior(sector1, stream, pi0, t=t).probs
        post_swapped = filter_posterior(sector1, stream.swap_sides(), pi0, t=t).probs
        npt.assert_allclose(post_swapped, post[perm], atol=1e-12)

    def test_path_rows_normalized_and_prefix_stable(self, sector1, rng):
        stream = poisson_stream(rng, 15.0, 15.0, 1.0)
        grid = np.linspace(0.0, 1.0, 11)
        full = filter_posterior_path(sector1, stream, grid)
        npt.assert_allclose(full.sum(axis=1), 1.0, atol=1e-12)
        truncated = filter_posterior_path(sector1, stream.restrict(0.5), grid[grid <= 0.5])
        npt.assert_array_equal(truncated, full[grid <= 0.5])

    def test_monte_carlo_conditioning_oracle(self, sector1, rng):
        # bid-heavy stream consistent with the (high, low) intensity state
        h = 1e-3
        t = 0.5
        stream = on_grid_stream(rng, 73.03, 10.83, t, h)
        post = filter_posterior(sector1, stream, t=t).probs
        mc = particle_posterior(sector1, stream, t, h=h, n_particles=80_000, seed=5)
        npt.assert_allclose(post, mc, atol=0.02)
        # the chain forgets at rate ~60/day, so concentration above 0.9 is
        # only reachable right at a bid event; mass still dominates its
        # stationary level everywhere
        high_bid_prior = stationary_distribution(sector1).probs[2:].sum()
        assert post[2] + post[3] > 1.5 * high_bid_prior
        t_bid = stream.times[stream.sides == BID][-1]
        post_event = filter_posterior(sector1, stream, t=t_bid).probs
        assert post_event[2] + post_event[3] > 0.9
