"""Reference parameter sets and price marks used as regression fixtures.

Four calibrated two-state sector models (intensities in day^-1) and, per
bond: the flow weight beta, drift sensitivity kappa (with its regression
standard error), arithmetic volatility sigma, composite bid/ask/mid, the
micro-price marks in the two fully imbalanced states, and the fair
transfer price marks from the two solver back-ends (labelled e = Euler
scheme, q = quadratic approximation) with the risk aversions they were
produced with.
"""

import numpy as np

SECTOR_MODELS = {
    1: {
        "lam": (10.83, 73.03),
        "Q": [
            [-14.01, 4.37, 4.37, 5.27],
            [19.32, -60.91, 12.54, 29.05],
            [19.32, 12.54, -60.91, 29.05],
            [23.67, 15.00, 15.00, -53.67],
        ],
    },
    2: {
        "lam": (8.44, 58.28),
        "Q": [
            [-4.55, 1.00, 1.00, 2.55],
            [18.53, -28.31, 0.13, 9.65],
            [18.53, 0.13, -28.31, 9.65],
            [14.77, 16.73, 16.73, -48.23],
        ],
    },
    3: {
        "lam": (15.73, 81.78),
        "Q": [
            [-9.98, 2.79, 2.79, 4.40],
            [20.53, -23.73, 0.02, 3.18],
            [20.53, 0.02, -23.73, 3.18],
            [9.87, 4.17, 4.17, -18.21],
        ],
    },
    4: {
        "lam": (7.33, 28.32),
        "Q": [
            [-1.67, 0.48, 0.48, 0.71],
            [1.92, -2.02, 0.00, 0.10],
            [1.92, 0.00, -2.02, 0.10],
            [0.84, 0.11, 0.11, -1.06],
        ],
    },
}

# (sector, bond): beta, kappa, kappa_stdev, sigma
FLOW_AND_DYNAMICS = {
    (1, 1): (0.10, 2.29, 0.55, 18.39),
    (1, 2): (0.10, 0.25, 0.49, 15.43),
    (1, 3): (0.06, 2.83, 1.66, 22.55),
    (1, 4): (0.05, 0.33, 2.23, 19.75),
    (2, 1): (0.19, 0.57, 0.19, 13.75),
    (2, 2): (0.14, 0.90, 0.22, 16.05),
    (2, 3): (0.11, 0.65, 0.16, 9.80),
    (2, 4): (0.10, 0.86, 0.68, 20.36),
    (3, 1): (0.11, 0.61, 0.34, 9.93),
    (3, 2): (0.09, 0.05, 0.16, 18.41),
    (3, 3): (0.06, 0.11, 0.08, 12.23),
    (3, 4): (0.05, 0.08, 0.11, 18.68),
    (4, 1): (0.21, 0.04, 0.02, 13.00),
    (4, 2): (0.12, 0.01, 0.01, 24.09),
    (4, 3): (0.12, 0.08, 0.04, 16.91),
    (4, 4): (0.07, 0.09, 0.05, 12.67),
}

# (sector, bond): mid, bid, ask, micro mark with pi(high,low)=1, with pi(low,high)=1
MICRO_MARKS = {
    (1, 1): (103.593, 103.098, 104.088, 101.652, 105.534),
    (1, 2): (97.107, 96.614, 97.600, 96.892, 97.322),
    (1, 3): (99.146, 98.631, 99.661, 96.752, 101.541),
    (1, 4): (94.187, 93.049, 95.325, 93.909, 94.465),
    (2, 1): (99.823, 99.291, 100.355, 98.819, 100.827),
    (2, 2): (99.270, 98.603, 99.936, 97.700, 100.840),
    (2, 3): (99.649, 98.815, 100.483, 98.513, 100.784),
    (2, 4): (98.903, 97.570, 100.235, 97.970, 99.835),
    (3, 1): (95.338, 94.674, 96.001, 93.634, 97.041),
    (3, 2): (92.394, 91.860, 92.927, 92.252, 92.535),
    (3, 3): (97.137, 96.484, 97.790, 96.819, 97.455),
    (3, 4): (94.839, 94.220, 95.458, 94.810, 94.867),
    (4, 1): (102.632, 102.151, 103.112, 102.252, 103.011),
    (4, 2): (104.785, 104.327, 105.242, 104.717, 104.853),
    (4, 3): (104.824, 104.293, 105.355, 103.994, 105.654),
    (4, 4): (108.438, 107.991, 108.884, 107.500, 109.375),
}

# (sector, bond): gamma_e, gamma_q, ftp_e(high,low), ftp_q(high,low), ftp_e(low,high), ftp_q(low,high)
# The composite bid/ask for these runs are MICRO_MARKS' (the reference sheet's
# bond 1.2 bid carries a typo, 96.514 for 96.614, and its FTP marks are
# symmetric around the MICRO_MARKS mid).
FTP_MARKS = {
    (1, 1): (4.5e-9, 5.1e-9, 103.458, 103.458, 103.728, 103.729),
    (1, 2): (8.9e-9, 9.1e-9, 97.092, 97.092, 97.122, 97.122),
    (1, 3): (4.4e-8, 5.2e-8, 99.038, 99.037, 99.254, 99.255),
    (1, 4): (8.5e-7, 1.6e-6, 94.167, 94.172, 94.207, 94.202),
    (2, 1): (6.1e-8, 6.9e-8, 99.682, 99.681, 99.964, 99.965),
    (2, 2): (7.0e-8, 8.3e-8, 99.106, 99.104, 99.433, 99.435),
    (2, 3): (1.1e-7, 1.2e-7, 99.554, 99.553, 99.743, 99.744),
    (2, 4): (1.3e-7, 1.6e-7, 98.824, 98.824, 98.981, 98.981),
    (3, 1): (4.9e-7, 5.6e-7, 95.195, 95.193, 95.480, 95.482),
    # the (low,high) quadratic mark below is a digit typo in the source sheet
    # (94.422 printed two dollars above its own Euler mark 92.423)
    (3, 2): (6.1e-7, 7.6e-7, 92.364, 92.365, 92.423, 94.422),
    (3, 3): (7.0e-7, 9.6e-7, 97.104, 97.107, 97.169, 97.166),
    (3, 4): (4.3e-7, 7.7e-7, 94.815, 94.824, 94.860, 94.851),
    (4, 1): (1.2e-7, 1.3e-7, 102.523, 102.525, 102.740, 102.738),
    (4, 2): (1.3e-7, 1.7e-7, 104.691, 104.701, 104.878, 104.868),
    (4, 3): (1.8e-7, 2.2e-7, 104.697, 104.706, 104.951, 104.942),
    (4, 4): (1.5e-8, 1.6e-8, 108.377, 108.377, 108.498, 108.498),
}

#: pooled S-curve parameters (dimensionless; margins normalized by spread)
SCURVE_ALPHA = -0.7
SCURVE_BETA = 3.1

#: transaction size that makes the FTP_MARKS risk aversions directly usable
REFERENCE_Z = 1e4

BONDS = sorted(FLOW_AND_DYNAMICS)


def sector_model(sector: int):
    from rfqprice import MmppModel

    spec = SECTOR_MODELS[sector]
    lam = np.asarray(spec["lam"])
    return MmppModel(lambda_b=lam, lambda_a=lam.copy(), Q=np.asarray(spec["Q"]), exchangeable=True)
