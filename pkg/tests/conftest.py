import numpy as np
import pytest

from sparsetopo.correlation import CovarianceModel, estimate_covariances
from sparsetopo.timeseries import TimeSeriesSet, center


def make_set(rows, ids=None):
    rows = np.asarray(rows, dtype=float)
    ids = ids or [f"x{i}" for i in range(rows.shape[0])]
    return center(TimeSeriesSet(ids, rows))


def white_noise(n, T, seed, std=1.0):
    return std * np.random.default_rng(seed).standard_normal((n, T))


def model_of(rows, L_max):
    return estimate_covariances(make_set(rows), L_max)


def direct_cov(x, y, tau):
    """Biased cross-covariance by an explicit double loop."""
    T = len(x)
    total = 0.0
    for t in range(T):
        s = t + tau
        if 0 <= s < T:
            total += x[t] * y[s]
    return total / T


def lagged_regression_residual(X, j, inputs, L):
    """Residual of x_j on zero-padded lagged copies of the inputs, by lstsq.

    Zero padding outside the record makes the Gram matrix equal T times the
    biased covariance estimate, so this matches the lag-domain solver
    without sharing any of its code.
    """
    X = np.asarray(X, dtype=float)
    X = X - X.mean(axis=1, keepdims=True)
    T = X.shape[1]
    pad = np.zeros((X.shape[0], T + 4 * L))
    pad[:, 2 * L : 2 * L + T] = X
    ts = np.arange(-L, T + L)  # every t where some lagged input is nonzero

    def at(row, t):
        return pad[row, t + 2 * L]

    y = at(j, ts)
    if not inputs:
        return float(y @ y / T)
    cols = [at(i, ts - lag) for i in inputs for lag in range(-L, L + 1)]
    D = np.column_stack(cols)
    w, *_ = np.linalg.lstsq(D, y, rcond=None)
    r = y - D @ w
    return float(r @ r / T)


def exact_model(R_pos, T=10**9):
    """CovarianceModel from a dict {(i, j, tau): value} of nonnegative-lag entries."""
    n = 1 + max(max(i, j) for i, j, _ in R_pos)
    L = max(tau for _, _, tau in R_pos)
    R = np.zeros((n, n, 2 * L + 1))
    for (i, j, tau), v in R_pos.items():
        R[i, j, L + tau] = v
        if tau > 0:
            R[j, i, L - tau] = v
        else:
            R[j, i, L] = v
    return CovarianceModel(R, T)


def chain_rows(n, T, seed, gain=0.8, delay=1, noise=0.5):
    """x_0 white; x_k(t) = gain * x_{k-1}(t - delay) + noise * e_k(t)."""
    rng = np.random.default_rng(seed)
    X = np.zeros((n, T))
    X[0] = rng.standard_normal(T)
    for k in range(1, n):
        X[k] = noise * rng.standard_normal(T)
        X[k, delay:] += gain * X[k - 1, :-delay]
    return X


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
