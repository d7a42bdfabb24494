"""Liquidity-state estimation for RFQ markets and the price notions it
supports: the flow-imbalance micro-price and the Fair Transfer Price of
an optimal market maker."""

from .errors import InputError, NumericalError, RfqPriceError
from .estimation import (
    EmFitResult,
    EmSufficientStats,
    PriceDynamicsParams,
    em_expectations,
    em_fit,
    em_update_exchangeable,
    em_update_general,
    estimate_betas,
    estimate_kappa,
    estimate_sigma,
    init_from_quantiles,
)
from .estimators import MmppEstimator, SCurveEstimator
from .ftp import (
    Hamiltonian,
    MarketMakerConfig,
    QuadCoeffs,
    SkewTable,
    ValueGrid,
    calibrate_gamma,
    ergodic_skew,
    ftp,
    hamiltonian,
    hjb_solve_euler,
    quad_coeffs,
    riccati_solve,
)
from .likelihood import filter_posterior, filter_posterior_path, log_likelihood
from .microprice import DriftValueTable, drift_value_asymptotic, drift_value_finite, micro_price
from .model import (
    MmppModel,
    StateDistribution,
    build_generator,
    stationary_distribution,
    transition_kernel,
)
from .scurve import SCurve, fit_scurve
from .simulate import (
    SimScenario,
    StatePath,
    component_rng,
    simulate,
    simulate_chain,
    simulate_fills,
    simulate_price,
    simulate_rfqs,
)
from .stream import ASK, BID, RfqStream, merge_streams, split_by_asset

__version__ = "0.1.0"
