"""Optimal market-maker quotes and the Fair Transfer Price.

The theoretical market maker's value functions satisfy a system of HJB
equations coupled across liquidity states by the chain's rate matrix,
with risk limits supplying the inventory boundary conditions. Two
back-ends compute the long-run (ergodic) quotes at zero inventory:

* a semi-implicit Euler scheme on the full nonlinear system (linear
  chain coupling treated implicitly, optimized-quote terms explicitly);
* backward integration of the quadratic-approximation coefficient ODEs
  (one quadratic value function per state).

The skew between the zero-inventory ask and bid quotes, averaged over
the posterior liquidity distribution, converts mid prices into FTPs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import brentq

from .errors import InputError, NumericalError
from .model import MmppModel, StateDistribution, stationary_distribution
from .scurve import SCurve
from .states import symmetric_mask

__all__ = [
    "MarketMakerConfig",
    "Hamiltonian",
    "hamiltonian",
    "quad_coeffs",
    "ValueGrid",
    "QuadCoeffs",
    "SkewTable",
    "hjb_solve_euler",
    "riccati_solve",
    "ergodic_skew",
    "calibrate_gamma",
    "ftp",
]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarketMakerConfig:
    """Inputs of the market-making control problem.

    ``z`` is the transaction size in notional units; ``q_bar`` the
    inventory risk limit (an integer multiple of z); ``kappa``/``sigma``
    the reference-price dynamics; the S-curves map quoted margins to fill
    probabilities. ``horizon``/``time_step`` control finite-horizon
    solves (ergodic extraction chooses its own horizon).
    """

    gamma: float
    kappa: float
    sigma: float
    scurve_bid: SCurve
    scurve_ask: SCurve
    z: float = 1.0
    q_bar: float | None = None
    horizon: float = 1.0
    time_step: float = 1e-3

    def __post_init__(self):
        if self.q_bar is None:
            object.__setattr__(self, "q_bar", 10.0 * self.z)
        if not (self.gamma > 0 and self.z > 0 and self.time_step > 0 and self.horizon > 0):
            raise InputError("gamma, z, horizon and time_step must be positive")
        if self.sigma <= 0:
            raise InputError("sigma must be positive")
        ratio = self.q_bar / self.z
        if self.q_bar < self.z or abs(ratio - round(ratio)) > 1e-9:
            raise InputError("q_bar must be a positive integer multiple of z")

    @property
    def n_levels(self) -> int:
        """Number of inventory levels on one side of zero."""
        return int(round(self.q_bar / self.z))

    def q_grid(self) -> np.ndarray:
        n = self.n_levels
        return self.z * np.arange(-n, n + 1, dtype=float)


# ---------------------------------------------------------------------------
# Hamiltonian of the quote optimization
# ---------------------------------------------------------------------------


class Hamiltonian:
    """H(p) = sup_delta f(delta) (delta - p) for one side's fill curve.

    The first-order condition f'(d)(d - p) + f(d) = 0 rewrites as
    k (1 - f(d)) (d - p) = 1 with k = beta/delta0, whose left side is
    strictly increasing in d: the maximizer is unique and bracketed by
    [p + 1/k, p + 1/(k (1 - f(lower)))].
    """

    def __init__(self, scurve: SCurve):
        self.scurve = scurve
        self.k = scurve.beta / scurve.delta0

    def delta_star(self, p) -> np.ndarray:
        """Optimal quote margin, via safeguarded Newton (bisection fallback)."""
        sc, k = self.scurve, self.k
        p = np.asarray(p, dtype=float)
        scalar = p.ndim == 0
        p = np.atleast_1d(p)
        lo = p + 1.0 / k
        d = lo + 0.4 * sc.delta0
        converged = False
        for _ in range(100):
            fc = sc.complement(d)
            g = k * fc * (d - p) - 1.0
            if np.max(np.abs(g)) < 1e-12:
                converged = True
                break
            f = 1.0 - fc
            gp = k * (fc + k * f * fc * (d - p))
            step = np.clip(g / gp, -20.0 * sc.delta0, 20.0 * sc.delta0)
            d = np.maximum(d - step, lo)
        if not converged:
            d = self._bisect(p, lo)
        return float(d[0]) if scalar else d

    def _bisect(self, p: np.ndarray, lo: np.ndarray) -> np.ndarray:
        sc, k = self.scurve, self.k

        def g(d, pi):
            return k * sc.complement(d) * (d - pi) - 1.0

        out = np.empty_like(p)
        for i, pi in enumerate(p):
            a = lo[i]
            ga = g(a, pi)
            if ga >= 0.0:  # complement saturated at 1: the root sits at the bound
                out[i] = a
                continue
            step = 1.0 / k
            b = a + step
            for _ in range(200):
                if g(b, pi) >= 0.0:
                    break
                step *= 2.0
                b += step
            else:
                raise NumericalError(f"no bracket for the quote optimizer at p={pi}")
            out[i] = brentq(lambda d: g(d, pi), a, b, xtol=1e-13, rtol=8.9e-16)
        return out

    def value(self, p) -> np.ndarray:
        d = self.delta_star(p)
        return self.scurve(d) * (d - np.asarray(p, dtype=float))

    def derivative(self, p) -> np.ndarray:
        """H'(p) = -f(delta*(p)) by the envelope theorem."""
        return -self.scurve(self.delta_star(p))

    def second_derivative(self, p) -> np.ndarray:
        d = self.delta_star(p)
        fp = self.scurve.derivative(d)
        fpp = self.scurve.second_derivative(d)
        dstar_prime = fp / (fpp * (d - np.asarray(p, dtype=float)) + 2.0 * fp)
        return -fp * dstar_prime


def hamiltonian(scurve: SCurve, p: float) -> tuple[float, float, float]:
    """(H(p), H'(p), delta*(p)) for one margin-value point."""
    ham = Hamiltonian(scurve)
    d = float(ham.delta_star(p))
    f = float(scurve(d))
    return f * (d - p), -f, d


def quad_coeffs(scurve: SCurve) -> tuple[float, float, float]:
    """Taylor coefficients (H(0), H'(0), H''(0)) of one side's Hamiltonian."""
    ham = Hamiltonian(scurve)
    return float(ham.value(0.0)), float(ham.derivative(0.0)), float(ham.second_derivative(0.0))


class _HamiltonianTable:
    """Interpolated H(p) for the Euler inner loop.

    Dense nodes cover the curved core; geometric tails reach out to the
    requested range (H is asymptotically linear on the left and decays
    to zero on the right, so sparse tails lose nothing). Points outside
    the table are evaluated exactly.
    """

    def __init__(self, ham: Hamiltonian, p_max: float, n_core: int = 3001):
        d0 = ham.scurve.delta0
        core = 15.0 * d0
        nodes = [np.linspace(-min(core, p_max), min(core, p_max), n_core)]
        if p_max > core:
            tail = np.geomspace(core, p_max, 200)[1:]
            nodes = [-tail[::-1], nodes[0], tail]
        self.grid = np.concatenate(nodes) if len(nodes) > 1 else nodes[0]
        self.values = ham.value(self.grid)
        self.ham = ham

    def __call__(self, p: np.ndarray) -> np.ndarray:
        out = np.interp(p, self.grid, self.values)
        outside = (p < self.grid[0]) | (p > self.grid[-1])
        if np.any(outside):
            out[outside] = self.ham.value(p[outside])
        return out


# ---------------------------------------------------------------------------
# Euler back-end
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValueGrid:
    """Finite-horizon value functions on (time, inventory, state)."""

    times: np.ndarray  # (n_t,), ascending, times[-1] = horizon
    q_levels: np.ndarray  # (n_q,)
    theta: np.ndarray  # (n_t, n_q, n_states)
    config: MarketMakerConfig


@dataclass(frozen=True)
class SkewTable:
    """Ergodic zero-inventory quote skew per state, in $."""

    skew: np.ndarray  # (m_b, m_a)

    def as_vector(self) -> np.ndarray:
        return self.skew.ravel()


class _EulerStepper:
    """One semi-implicit backward step of the risk-limited HJB system."""

    def __init__(self, model: MmppModel, config: MarketMakerConfig, p_max: float):
        self.model = model
        self.config = config
        self.q = config.q_grid()
        dt, z = config.time_step, config.z
        lam_b, lam_a = model.rate_bid, model.rate_ask
        self.source = (
            config.kappa * (lam_a - lam_b)[None, :] * self.q[:, None]
            - 0.5 * config.gamma * config.sigma**2 * (self.q**2)[:, None]
        )
        self.ham_b = Hamiltonian(config.scurve_bid)
        self.ham_a = Hamiltonian(config.scurve_ask)
        self.table_b = _HamiltonianTable(self.ham_b, p_max)
        self.table_a = _HamiltonianTable(self.ham_a, p_max)
        self.coef_b = dt * z * lam_b
        self.coef_a = dt * z * lam_a
        self.lu = lu_factor(np.eye(model.n_states) - dt * model.Q)
        self.dt = dt
        self.z = z

    def step(self, theta: np.ndarray) -> np.ndarray:
        z = self.z
        p_b = (theta[:-1] - theta[1:]) / z  # buying allowed while q + z <= q_bar
        p_a = (theta[1:] - theta[:-1]) / z  # selling allowed while q - z >= -q_bar
        rhs = theta + self.dt * self.source
        rhs[:-1] += self.coef_b[None, :] * self.table_b(p_b)
        rhs[1:] += self.coef_a[None, :] * self.table_a(p_a)
        return lu_solve(self.lu, rhs.T).T

    def quotes_at_zero(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Exact optimal (bid, ask) margins at q = 0, per state."""
        i0 = self.config.n_levels
        p_b = (theta[i0] - theta[i0 + 1]) / self.z
        p_a = (theta[i0] - theta[i0 - 1]) / self.z
        return self.ham_b.delta_star(p_b), self.ham_a.delta_star(p_a)


def _estimate_p_range(model: MmppModel, config: MarketMakerConfig) -> float:
    """Generous bound on the value-difference arguments the sweep will see."""
    z = config.z
    d0 = max(config.scurve_bid.delta0, config.scurve_ask.delta0)
    a2 = max(quad_coeffs(config.scurve_bid)[2], quad_coeffs(config.scurve_ask)[2])
    lam_sum = model.rate_bid + model.rate_ask
    za_ss = math.sqrt(config.gamma * z * config.sigma**2 / max(4.0 * a2 * lam_sum.min(), 1e-12))
    drift = config.kappa * (model.rate_ask - model.rate_bid)
    damp = 4.0 * lam_sum * a2 * za_ss
    b_ss = np.linalg.solve(model.Q - np.diag(damp + 1e-9), -drift) if model.n_states > 1 else drift * 0.0
    n = config.n_levels
    return float(3.0 * (2 * n + 1) * za_ss + 4.0 * np.abs(b_ss).max() + 20.0 * d0)


def hjb_solve_euler(model: MmppModel, config: MarketMakerConfig) -> ValueGrid:
    """Backward semi-implicit Euler solve over [0, horizon].

    The rate-matrix coupling is implicit (one LU-backed linear solve of
    the state dimension per inventory level and step); the optimized
    quote terms use the previous time slice. The full grid is stored.
    """
    n_steps = int(round(config.horizon / config.time_step))
    if n_steps < 1:
        raise InputError("horizon must cover at least one time step")
    n_q = 2 * config.n_levels + 1
    if (n_steps + 1) * n_q * model.n_states > 2e8:
        raise InputError("value grid too large to store; reduce horizon or enlarge time_step")
    stepper = _EulerStepper(model, config, _estimate_p_range(model, config))
    theta = np.zeros((n_steps + 1, n_q, model.n_states))
    scale0 = None
    for k in range(n_steps - 1, -1, -1):
        theta[k] = stepper.step(theta[k + 1])
        if not np.all(np.isfinite(theta[k])):
            raise NumericalError(
                "value iteration left floating-point range; reduce time_step"
            )
        growth = np.abs(theta[k]).max()
        if scale0 is None and growth > 0:
            scale0 = growth
        elif scale0 is not None and growth > 1e12 * scale0:
            raise NumericalError("value iteration is unstable; reduce time_step")
    times = config.time_step * np.arange(n_steps + 1)
    times[-1] = config.horizon
    return ValueGrid(times=times, q_levels=config.q_grid(), theta=theta, config=config)


def euler_residual(model: MmppModel, grid: ValueGrid) -> float:
    """Max absolute residual of the discrete scheme across all nodes."""
    cfg = grid.config
    stepper = _EulerStepper(model, cfg, _estimate_p_range(model, cfg))
    worst = 0.0
    dt, z = cfg.time_step, cfg.z
    for k in range(len(grid.times) - 1):
        new, old = grid.theta[k], grid.theta[k + 1]
        r = (old - new) / dt + stepper.source + new @ model.Q.T
        r[:-1] += (stepper.coef_b / dt)[None, :] * stepper.table_b((old[:-1] - old[1:]) / z)
        r[1:] += (stepper.coef_a / dt)[None, :] * stepper.table_a((old[1:] - old[:-1]) / z)
        worst = max(worst, float(np.abs(r).max()))
    return worst


# ---------------------------------------------------------------------------
# quadratic-approximation back-end
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadCoeffs:
    """Per-state coefficients of theta(t, q) ~= -q^2 A - q B - C."""

    times: np.ndarray  # (n_t,) ascending, times[-1] = horizon
    A: np.ndarray  # (n_t, n_states)
    B: np.ndarray
    C: np.ndarray
    alphas_bid: tuple[float, float, float]
    alphas_ask: tuple[float, float, float]
    config: MarketMakerConfig

    def theta(self, k: int, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)[..., None]
        return -(q**2) * self.A[k] - q * self.B[k] - self.C[k]


def _riccati_rhs(model: MmppModel, config: MarketMakerConfig, ab, aa):
    lam_b, lam_a = model.rate_bid, model.rate_ask
    z, kappa = config.z, config.kappa
    gs2 = 0.5 * config.gamma * config.sigma**2
    Q = model.Q
    a0b, a1b, a2b = ab
    a0a, a1a, a2a = aa
    c_sum21 = 2.0 * (lam_b * a2b + lam_a * a2a) * z
    c_dif11 = 2.0 * (lam_b * a1b - lam_a * a1a) * z
    c_dif22 = 2.0 * (lam_b * a2b - lam_a * a2a) * z**2
    drift = kappa * (lam_a - lam_b)
    c_sum01 = (lam_b * a0b + lam_a * a0a) * z
    c_sum12 = (lam_b * a1b + lam_a * a1a) * z**2
    c_sum23 = 0.5 * (lam_b * a2b + lam_a * a2a) * z**3
    m = model.n_states

    def rhs_t(_t, y):
        A, B, C = y[:m], y[m : 2 * m], y[2 * m :]
        dA = c_sum21 * A**2 - gs2 - Q @ A
        dB = c_dif11 * A + c_dif22 * A**2 + drift + c_sum21 * A * B - Q @ B
        dC = (
            c_sum01
            + c_sum12 * A
            + 0.5 * c_dif11 * B
            + c_sum23 * A**2
            + 0.25 * c_sum21 * B**2
            + 0.5 * c_dif22 * A * B
            - Q @ C
        )
        return np.concatenate([dA, dB, dC])

    return rhs_t


def riccati_solve(
    model: MmppModel, config: MarketMakerConfig, alphas: tuple | None = None
) -> QuadCoeffs:
    """Backward integration of the coupled quadratic-coefficient ODEs.

    ``alphas`` optionally supplies ((a0,a1,a2) bid, (a0,a1,a2) ask);
    by default they are the Taylor coefficients of each side's
    Hamiltonian at p = 0. Integration uses an adaptive 4th/5th-order
    scheme at 1e-9 tolerance, from the zero terminal condition.
    """
    ab = alphas[0] if alphas is not None else quad_coeffs(config.scurve_bid)
    aa = alphas[1] if alphas is not None else quad_coeffs(config.scurve_ask)
    rhs_t = _riccati_rhs(model, config, ab, aa)
    m = model.n_states

    def rhs_tau(tau, y):
        if np.abs(y[:m]).max() > 1e12:
            raise NumericalError("Riccati divergence; reduce gamma or horizon")
        return -rhs_t(tau, y)

    n_keep = max(int(round(config.horizon / config.time_step)), 64)
    taus = np.linspace(0.0, config.horizon, min(n_keep, 4096) + 1)
    sol = solve_ivp(
        rhs_tau, (0.0, config.horizon), np.zeros(3 * m), t_eval=taus, rtol=1e-9, atol=1e-12
    )
    if not sol.success:
        raise NumericalError(f"Riccati integration failed: {sol.message}")
    # tau is time-to-go; flip to calendar time
    y = sol.y[:, ::-1]
    times = config.horizon - sol.t[::-1]
    return QuadCoeffs(
        times=times,
        A=y[:m].T.copy(),
        B=y[m : 2 * m].T.copy(),
        C=y[2 * m :].T.copy(),
        alphas_bid=tuple(ab),
        alphas_ask=tuple(aa),
        config=config,
    )


def _quad_quotes_at_zero(config: MarketMakerConfig, A: np.ndarray, B: np.ndarray):
    z = config.z
    ham_b = Hamiltonian(config.scurve_bid)
    ham_a = Hamiltonian(config.scurve_ask)
    return ham_b.delta_star(z * A + B), ham_a.delta_star(z * A - B)


# ---------------------------------------------------------------------------
# ergodic quotes, calibration, FTP
# ---------------------------------------------------------------------------


def _checkpoints(tau0: float, t_max: float):
    tau = tau0
    while tau < t_max:
        yield tau
        tau *= 2.0
    yield t_max


def _ergodic_quotes(
    model: MmppModel,
    config: MarketMakerConfig,
    method: str = "euler",
    tol: float = 1e-6,
    t_max: float = 100.0,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Zero-inventory (bid, ask) margins per state at the ergodic limit.

    A single backward sweep serves every horizon (the coefficients are
    time-independent, so the value at time-to-go tau equals a horizon-tau
    solve at t = 0); quotes are recorded at doubling checkpoints and the
    sweep stops once a doubling changes them by less than ``tol``.
    """
    prev = None
    if method == "euler":
        stepper = _EulerStepper(model, config, _estimate_p_range(model, config))
        theta = np.zeros((2 * config.n_levels + 1, model.n_states))
        dt = config.time_step
        tau = 0.0
        for target in _checkpoints(0.25, t_max):
            for _ in range(int(round((target - tau) / dt))):
                theta = stepper.step(theta)
            if not np.all(np.isfinite(theta)):
                raise NumericalError("value iteration left floating-point range; reduce time_step")
            tau = target
            db, da = stepper.quotes_at_zero(theta)
            if prev is not None and max(np.abs(db - prev[0]).max(), np.abs(da - prev[1]).max()) < tol:
                return db, da, tau
            prev = (db, da)
    elif method == "quad":
        ab = quad_coeffs(config.scurve_bid)
        aa = quad_coeffs(config.scurve_ask)
        rhs_t = _riccati_rhs(model, config, ab, aa)
        m = model.n_states

        def rhs_tau(tau, y):
            if np.abs(y[:m]).max() > 1e12:
                raise NumericalError("Riccati divergence; reduce gamma or horizon")
            return -rhs_t(tau, y)

        y = np.zeros(3 * m)
        tau = 0.0
        for target in _checkpoints(0.25, t_max):
            sol = solve_ivp(rhs_tau, (tau, target), y, rtol=1e-10, atol=1e-13)
            if not sol.success:
                raise NumericalError(f"Riccati integration failed: {sol.message}")
            y = sol.y[:, -1]
            tau = target
            db, da = _quad_quotes_at_zero(config, y[:m], y[m : 2 * m])
            if prev is not None and max(np.abs(db - prev[0]).max(), np.abs(da - prev[1]).max()) < tol:
                return db, da, tau
            prev = (db, da)
    else:
        raise InputError(f"unknown back-end {method!r}")
    raise NumericalError(f"quotes not stationary after {t_max} days (method={method})")


def ergodic_skew(
    model: MmppModel,
    config: MarketMakerConfig,
    method: str = "euler",
    source: ValueGrid | QuadCoeffs | None = None,
    tol: float = 1e-6,
    t_max: float = 100.0,
) -> SkewTable:
    """Time-independent quote skew per state: ask margin minus bid margin
    at zero inventory, in the long-horizon limit.

    With ``source`` given, the skew is read off the precomputed solution
    at t = 0 and the built-in stationarity test compares it against the
    half-horizon slice; otherwise a dedicated sweep runs with doubling
    checkpoints until quotes move by less than ``tol``.
    """
    if source is None:
        db, da = _ergodic_quotes(model, config, method=method, tol=tol, t_max=t_max)[:2]
    elif isinstance(source, ValueGrid):
        stepper = _EulerStepper(model, source.config, _estimate_p_range(model, source.config))
        db, da = stepper.quotes_at_zero(source.theta[0])
        half = np.searchsorted(source.times, source.times[-1] / 2.0)
        db2, da2 = stepper.quotes_at_zero(source.theta[half])
        if max(np.abs(db - db2).max(), np.abs(da - da2).max()) >= tol:
            raise NumericalError("skew not stationary over the stored horizon; extend it")
    elif isinstance(source, QuadCoeffs):
        cfg = source.config
        db, da = _quad_quotes_at_zero(cfg, source.A[0], source.B[0])
        half = np.searchsorted(source.times, source.times[-1] / 2.0)
        db2, da2 = _quad_quotes_at_zero(cfg, source.A[half], source.B[half])
        if max(np.abs(db - db2).max(), np.abs(da - da2).max()) >= tol:
            raise NumericalError("skew not stationary over the stored horizon; extend it")
    else:
        raise InputError("source must be a ValueGrid, QuadCoeffs or None")
    return SkewTable((da - db).reshape(model.m_b, model.m_a))


def ergodic_spread(
    model: MmppModel,
    config: MarketMakerConfig,
    method: str = "euler",
    tol: float = 1e-6,
    t_max: float = 100.0,
) -> float:
    """Stationary-weighted total quoted spread at q = 0 over symmetric states."""
    db, da = _ergodic_quotes(model, config, method=method, tol=tol, t_max=t_max)[:2]
    total = da + db
    weights = stationary_distribution(model).probs
    if model.m_b == model.m_a:
        sym = symmetric_mask(model.m_b)
        w = weights[sym]
        return float(w @ total[sym] / w.sum())
    return float(weights @ total)


def calibrate_gamma(
    model: MmppModel,
    config: MarketMakerConfig,
    target_spread: float,
    method: str = "euler",
    log10_bracket: tuple[float, float] = (-12.0, -3.0),
    spread_tol: float = 1e-4,
    t_max: float = 100.0,
) -> float:
    """Risk aversion matching the observed composite spread.

    Bisection on log10(gamma) until the theoretical market maker's
    ergodic zero-inventory total spread (stationary-weighted over
    symmetric states) equals ``target_spread`` within ``spread_tol``.
    The sweep tolerance is tied to the spread tolerance, which keeps the
    search cheap; the returned gamma is meant to be fed back into a full
    1e-6 ergodic extraction.
    """
    if target_spread <= 0:
        raise InputError("target_spread must be positive")
    sweep_tol = max(spread_tol / 4.0, 1e-5)

    def spread_of(lg: float) -> float:
        cfg = replace(config, gamma=10.0**lg)
        return ergodic_spread(model, cfg, method=method, tol=sweep_tol, t_max=t_max)

    lo, hi = log10_bracket
    s_lo, s_hi = spread_of(lo), spread_of(hi)
    if not (s_lo <= target_spread <= s_hi):
        raise InputError(
            f"target spread {target_spread:.6g} outside the achievable range "
            f"[{s_lo:.6g}, {s_hi:.6g}] over gamma in [1e{lo:g}, 1e{hi:g}]"
        )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        s = spread_of(mid)
        if abs(s - target_spread) < spread_tol:
            return 10.0**mid
        if s < target_spread:
            lo = mid
        else:
            hi = mid
    raise NumericalError("gamma calibration did not reach the spread tolerance")


def ftp(mid: float, skew_table: SkewTable, pi) -> tuple[float, float]:
    """Posterior mean and standard deviation of the Fair Transfer Price.

    mean = mid + E_pi[skew] / 2; the standard deviation reflects only the
    liquidity-state uncertainty.
    """
    probs = pi.probs if isinstance(pi, StateDistribution) else StateDistribution(np.asarray(pi, float)).probs
    s = skew_table.as_vector()
    if probs.size != s.size:
        raise InputError("state distribution does not match the skew table")
    ev = float(probs @ s)
    var = float(probs @ s**2) - ev**2
    return mid + 0.5 * ev, 0.5 * float(np.sqrt(max(var, 0.0)))
