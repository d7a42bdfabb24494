import numpy as np
import numpy.testing as npt
import pytest

from conftest import random_small_model
from oracles import mc_drift_integral
from rfqprice import (
    InputError,
    MmppModel,
    drift_value_asymptotic,
    drift_value_finite,
    filter_posterior,
    micro_price,
    simulate_chain,
    simulate_rfqs,
    SimScenario,
    stationary_distribution,
)


class TestDriftValueFinite:
    def test_zero_horizon_is_zero(self, sector1):
        npt.assert_array_equal(drift_value_finite(sector1, 0.0), np.zeros(4))

    def test_symmetric_states_vanish_for_all_horizons(self, sector1):
        for T in (0.05, 0.3, 1.0, 4.0):
            v = drift_value_finite(sector1, T)
            assert abs(v[0]) < 1e-10 and abs(v[3]) < 1e-10

    def test_ode_residual_on_check_grid(self, sector2):
        # v_T(t) solves v' + d + Q v = 0 backward from v(T) = 0; at t = 0 with
        # horizon tau the value equals the horizon-tau solve, so the time
        # derivative is checkable by differencing neighboring horizons.
        d = sector2.rate_ask - sector2.rate_bid
        eps = 1e-6
        for tau in (0.1, 0.5, 1.7):
            v_lo = drift_value_finite(sector2, tau - eps)
            v_hi = drift_value_finite(sector2, tau + eps)
            dv_dtau = (v_hi - v_lo) / (2 * eps)
            residual = dv_dtau - (d + sector2.Q @ drift_value_finite(sector2, tau))
            assert np.max(np.abs(residual)) < 1e-8

    def test_monte_carlo_oracle(self, sector1):
        v = drift_value_finite(sector1, 1.0)
        for state in (1, 2):
            mean, sem = mc_drift_integral(sector1, state, 1.0, n_paths=100_000, seed=11 + state)
            assert abs(v[state] - mean) < 3 * sem


class TestDriftValueAsymptotic:
    def test_reference_two_by_two_solve(self, sector1):
        table = drift_value_asymptotic(sector1)
        assert table.v[0, 1] == pytest.approx(62.2 / 73.45, abs=1e-12)
        assert table.v[0, 1] == pytest.approx(0.847, abs=5e-4)

    def test_symmetric_states_zero_and_antisymmetry(self, sector1):
        table = drift_value_asymptotic(sector1)
        assert table.v[0, 0] == 0.0 and table.v[1, 1] == 0.0
        assert table.v[1, 0] == pytest.approx(-table.v[0, 1], abs=1e-12)

    def test_finite_horizon_converges(self, sector1, sector4):
        for model in (sector1, sector4):
            v_inf = drift_value_asymptotic(model).as_vector()
            npt.assert_allclose(drift_value_finite(model, 10.0), v_inf, atol=1e-6)

    def test_requires_exchangeable(self):
        model = MmppModel([1.0, 2.0], [1.5, 2.5], np.zeros((4, 4)) + 0.25 - np.eye(4))
        with pytest.raises(InputError, match="exchangeable"):
            drift_value_asymptotic(model)

    def test_unreachable_symmetric_states_rejected(self):
        # asymmetric states only talk to each other: no limit
        lam = np.array([1.0, 2.0])
        Q = np.array(
            [
                [-2.0, 1.0, 1.0, 0.0],
                [0.0, -1.0, 1.0, 0.0],
                [0.0, 1.0, -1.0, 0.0],
                [0.0, 1.0, 1.0, -2.0],
            ]
        )
        model = MmppModel(lam, lam.copy(), Q, exchangeable=True)
        with pytest.raises(InputError, match="cannot reach symmetric"):
            drift_value_asymptotic(model)


class TestMicroPrice:
    def test_symmetric_distribution_returns_mid(self, sector1):
        table = drift_value_asymptotic(sector1)
        mean, stdev = micro_price(100.0, 2.0, table, [0.5, 0.0, 0.0, 0.5])
        assert mean == pytest.approx(100.0, abs=1e-12)
        assert stdev == pytest.approx(0.0, abs=1e-12)

    def test_balanced_imbalance_cancels(self, sector1):
        table = drift_value_asymptotic(sector1)
        mean, stdev = micro_price(100.0, 2.0, table, [0.0, 0.5, 0.5, 0.0])
        assert mean == pytest.approx(100.0, abs=1e-12)
        assert stdev == pytest.approx(2.0 * abs(table.v[0, 1]), abs=1e-12)

    def test_mean_affine_in_distribution(self, sector1, rng):
        table = drift_value_asymptotic(sector1)
        p1 = rng.dirichlet(np.ones(4))
        p2 = rng.dirichlet(np.ones(4))
        for w in (0.25, 0.5, 0.8):
            mix = w * p1 + (1 - w) * p2
            m_mix = micro_price(50.0, 1.3, table, mix)[0]
            m1 = micro_price(50.0, 1.3, table, p1)[0]
            m2 = micro_price(50.0, 1.3, table, p2)[0]
            assert m_mix == pytest.approx(w * m1 + (1 - w) * m2, abs=1e-10)

    def test_side_swap_negates_adjustment(self, sector1, rng):
        from rfqprice.states import side_swap_permutation

        table = drift_value_asymptotic(sector1)
        pi = rng.dirichlet(np.ones(4))
        perm = side_swap_permutation(2)
        mean = micro_price(0.0, 1.0, table, pi)[0]
        mean_swapped = micro_price(0.0, 1.0, table, pi[perm])[0]
        assert mean_swapped == pytest.approx(-mean, abs=1e-12)

    def test_micro_price_is_martingale_under_model(self, sector1):
        # simulate forward, filter, and average micro-price increments
        kappa = 2.29
        table = drift_value_asymptotic(sector1)
        v = table.as_vector()
        horizon = 0.25
        n_paths = 400
        increments = np.empty(n_paths)
        pi0 = stationary_distribution(sector1).probs
        drift = kappa * (sector1.rate_ask - sector1.rate_bid)
        for k in range(n_paths):
            scen = SimScenario(model=sector1, horizon=horizon, seed=1000 + k, kappa=kappa)
            from rfqprice import component_rng

            path = simulate_chain(sector1, horizon=horizon, rng=component_rng(scen.seed, "chain"))
            stream = simulate_rfqs(scen, path)["asset"]
            # price increment has zero diffusion here; integrate the drift exactly
            s_move = float(np.sum(drift[path.states] * path.durations))
            pi_t = filter_posterior(sector1, stream, pi0, t=horizon).probs
            micro_start = micro_price(0.0, kappa, table, pi0)[0]
            micro_end = s_move + micro_price(0.0, kappa, table, pi_t)[0]
            increments[k] = micro_end - micro_start
        sem = increments.std(ddof=1) / np.sqrt(n_paths)
        assert abs(increments.mean()) < 3 * sem
