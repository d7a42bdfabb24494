"""Synthetic data generation: liquidity-state paths, RFQ streams,
reference-price paths and fill outcomes.

Randomness comes from a counter-based 64-bit generator (Philox) keyed by
(seed, component), so the chain / events / price / fills streams are
independent and adding draws to one component never perturbs another.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .model import MmppModel
from .scurve import SCurve
from .stream import ASK, BID, RfqStream

#: substream identifiers (component name -> Philox key lane)
RNG_STREAMS = {"chain": 0, "events": 1, "price": 2, "fills": 3}


def component_rng(seed: int, component: str) -> np.random.Generator:
    """Deterministic generator for one named simulation component."""
    try:
        lane = RNG_STREAMS[component]
    except KeyError as exc:
        raise InputError(f"unknown rng component {component!r}") from exc
    return np.random.Generator(np.random.Philox(key=(np.uint64(seed) << np.uint64(8)) + np.uint64(lane)))


@dataclass(frozen=True)
class StatePath:
    """Piecewise-constant chain trajectory: state[i] holds on
    [times[i], times[i+1])."""

    times: np.ndarray  # (k+1,) segment boundaries, times[0] = 0, times[-1] = horizon
    states: np.ndarray  # (k,) flat state indices

    def state_at(self, t) -> np.ndarray:
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.states) - 1)
        return self.states[idx]

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.times)


@dataclass(frozen=True)
class SimScenario:
    """Everything a reproducible simulation run needs."""

    model: MmppModel
    horizon: float
    seed: int
    betas: dict | None = None  # {asset: (beta_bid, beta_ask)}; None = single asset
    kappa: float = 0.0
    sigma: float = 0.0
    scurve: SCurve | None = None
    price_step: float = 0.01
    s0: float = 100.0
    start_state: int | None = None  # None = draw from the stationary distribution

    def __post_init__(self):
        if self.horizon <= 0:
            raise InputError("horizon must be positive")
        if self.price_step <= 0:
            raise InputError("price_step must be positive")
        if self.betas is not None:
            w = np.array(list(self.betas.values()), dtype=float)
            if w.ndim != 2 or w.shape[1] != 2 or np.any(w < 0):
                raise InputError("betas must map assets to nonnegative (bid, ask) pairs")
            if not np.allclose(w.sum(axis=0), 1.0, atol=1e-9):
                raise InputError("betas must sum to 1 per side")


def simulate_chain(
    model: MmppModel,
    horizon: float | None = None,
    n_jumps: int | None = None,
    rng: np.random.Generator | None = None,
    start_state: int | None = None,
) -> StatePath:
    """Exact event-driven simulation of the hidden chain.

    Holding times are exponential at the state's total exit rate and the
    jump destination is drawn from the off-diagonal rates. Stop at
    ``horizon`` (in days) or after ``n_jumps`` transitions.
    """
    if (horizon is None) == (n_jumps is None):
        raise InputError("specify exactly one of horizon or n_jumps")
    rng = rng if rng is not None else np.random.default_rng(0)
    Q = model.Q
    exit_rates = -np.diag(Q)
    jump_probs = []
    for j in range(model.n_states):
        if exit_rates[j] > 0:
            jump_probs.append(Q[j] / exit_rates[j])
        else:
            jump_probs.append(None)
    if start_state is None:
        from .model import stationary_distribution

        state = int(rng.choice(model.n_states, p=stationary_distribution(model).probs))
    else:
        state = int(start_state)

    times = [0.0]
    states = [state]
    t = 0.0
    while True:
        if n_jumps is not None and len(states) > n_jumps:
            break
        rate = exit_rates[state]
        if rate <= 0:
            t = horizon if horizon is not None else t
            break
        dt = rng.exponential(1.0 / rate)
        if horizon is not None and t + dt >= horizon:
            t = horizon
            break
        t += dt
        p = jump_probs[state].copy()
        p[state] = 0.0
        p /= p.sum()
        state = int(rng.choice(model.n_states, p=p))
        times.append(t)
        states.append(state)
    end = horizon if horizon is not None else t
    return StatePath(times=np.append(np.array(times), end), states=np.array(states))


def simulate_rfqs(
    scenario: SimScenario, path: StatePath, rng: np.random.Generator | None = None
) -> dict:
    """Piecewise-homogeneous Poisson RFQ sampling along a state path.

    Returns {asset: RfqStream}; with no betas, a single stream under the
    key ``"asset"``. Event counts per segment are Poisson at the
    aggregate side rate; assets are then assigned by the per-side weights
    (the thinning property of Poisson processes).
    """
    rng = rng if rng is not None else component_rng(scenario.seed, "events")
    model = scenario.model
    rates = np.stack([model.rate_bid, model.rate_ask], axis=1)  # (n_states, 2)
    times_all, sides_all = [], []
    for seg in range(len(path.states)):
        t0, t1 = path.times[seg], path.times[seg + 1]
        lam = rates[path.states[seg]]
        for side in (BID, ASK):
            n = rng.poisson(lam[side] * (t1 - t0))
            if n:
                times_all.append(np.sort(rng.uniform(t0, t1, size=n)))
                sides_all.append(np.full(n, side, dtype=np.int8))
    if times_all:
        times = np.concatenate(times_all)
        sides = np.concatenate(sides_all)
    else:
        times = np.array([])
        sides = np.array([], dtype=np.int8)
    order = np.argsort(times, kind="stable")
    times, sides = times[order], sides[order]

    if scenario.betas is None:
        return {"asset": RfqStream(times, sides)}
    assets = list(scenario.betas)
    weights = np.array([scenario.betas[a] for a in assets], dtype=float)  # (d, 2)
    out = {}
    labels = np.empty(times.size, dtype=int)
    for side in (BID, ASK):
        mask = sides == side
        if mask.any():
            labels[mask] = rng.choice(len(assets), size=int(mask.sum()), p=weights[:, side])
    for i, a in enumerate(assets):
        keep = labels == i if times.size else np.zeros(0, dtype=bool)
        out[a] = RfqStream(times[keep], sides[keep])
    return out


def simulate_price(
    scenario: SimScenario, path: StatePath, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Reference-price path with flow-imbalance drift.

    Euler-Maruyama on the union of the regular grid and the state-change
    times, so the drift kappa (lambda_a - lambda_b) integrates exactly
    across regime boundaries. Returns (times, prices).
    """
    rng = rng if rng is not None else component_rng(scenario.seed, "price")
    model = scenario.model
    grid = np.union1d(
        np.arange(0.0, scenario.horizon + scenario.price_step / 2, scenario.price_step),
        path.times,
    )
    grid = grid[(grid >= 0.0) & (grid <= scenario.horizon + 1e-12)]
    drift_by_state = scenario.kappa * (model.rate_ask - model.rate_bid)
    states = path.state_at(grid[:-1])
    dts = np.diff(grid)
    increments = drift_by_state[states] * dts
    if scenario.sigma > 0:
        increments = increments + scenario.sigma * np.sqrt(dts) * rng.standard_normal(dts.size)
    prices = scenario.s0 + np.concatenate([[0.0], np.cumsum(increments)])
    return grid, prices


def simulate_fills(
    scenario: SimScenario,
    quoted_margins,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Bernoulli fill outcomes for quoted margins (in $) under the S-curve."""
    if scenario.scurve is None:
        raise InputError("scenario has no S-curve")
    rng = rng if rng is not None else component_rng(scenario.seed, "fills")
    margins = np.asarray(quoted_margins, dtype=float)
    return rng.random(margins.shape) < scenario.scurve(margins)


def simulate(scenario: SimScenario) -> dict:
    """Full scenario run: chain, per-asset RFQs and the price path.

    Each component draws from its own named substream of the scenario
    seed, so outputs are bitwise reproducible and independent.
    """
    path = simulate_chain(
        scenario.model,
        horizon=scenario.horizon,
        rng=component_rng(scenario.seed, "chain"),
        start_state=scenario.start_state,
    )
    streams = simulate_rfqs(scenario, path, component_rng(scenario.seed, "events"))
    price_times, prices = simulate_price(scenario, path, component_rng(scenario.seed, "price"))
    return {"path": path, "streams": streams, "price_times": price_times, "prices": prices}
