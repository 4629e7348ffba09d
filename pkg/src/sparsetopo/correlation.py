"""Second-order statistics: cross-covariances, inner product, spectra."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError
from .timeseries import TimeSeriesSet


class CovarianceModel:
    """Sample cross-covariances ``R[i, j, tau] = (1/T) sum_t x_i(t) x_j(t + tau)``.

    Stored as an ``(n, n, 2*L_max + 1)`` array indexed by ``tau + L_max``.
    The negative-lag half is always rebuilt from the non-negative half, so
    ``R(i, j, tau) == R(j, i, -tau)`` holds exactly.
    """

    def __init__(self, R: np.ndarray, T: int, node_ids: list[str] | None = None):
        R = np.asarray(R, dtype=float)
        if R.ndim != 3 or R.shape[0] != R.shape[1] or R.shape[2] % 2 != 1:
            raise DimensionError(f"R must have shape (n, n, 2L+1), got {R.shape}")
        n = R.shape[0]
        L = R.shape[2] // 2
        R = R.copy()
        # mirror positive lags onto negative ones; lag 0 is symmetrised
        R[:, :, L] = 0.5 * (R[:, :, L] + R[:, :, L].T)
        for tau in range(1, L + 1):
            R[:, :, L - tau] = R[:, :, L + tau].T
        if np.any(np.diag(R[:, :, L]) < 0):
            raise ConfigurationError("negative variance on the diagonal of R(0)")
        R.setflags(write=False)
        self._R = R
        self.n = n
        self.L_max = L
        self.T = int(T)
        self.node_ids = list(node_ids) if node_ids is not None else [f"x{i}" for i in range(n)]
        if len(self.node_ids) != n:
            raise DimensionError(f"{len(self.node_ids)} node ids for {n} nodes")

    @property
    def array(self) -> np.ndarray:
        return self._R

    def R(self, i: int, j: int, tau: int) -> float:
        if abs(tau) > self.L_max:
            raise ConfigurationError(f"lag {tau} exceeds L_max={self.L_max}")
        return float(self._R[i, j, tau + self.L_max])

    def lags(self, i: int, j: int, L: int) -> np.ndarray:
        """``R(i, j, tau)`` for ``tau = -L..L``."""
        if L > self.L_max:
            raise ConfigurationError(f"lag window {L} exceeds L_max={self.L_max}")
        return self._R[i, j, self.L_max - L : self.L_max + L + 1]

    def variance(self, i: int) -> float:
        return float(self._R[i, i, self.L_max])

    def block_toeplitz(self, nodes: list[int], L: int) -> np.ndarray:
        """Covariance of the stacked lagged vector ``[x_i(t - l)]`` over ``l = -L..L``.

        Entry ``((a, l), (b, k))`` is ``E[x_a(t-l) x_b(t-k)] = R(a, b, l - k)``.
        Needs ``2L <= L_max``.
        """
        if 2 * L > self.L_max:
            raise ConfigurationError(f"half-width {L} needs L_max >= {2 * L}, have {self.L_max}")
        w = 2 * L + 1
        d = np.arange(w)[:, None] - np.arange(w)[None, :]
        G = np.empty((len(nodes) * w, len(nodes) * w))
        for p, a in enumerate(nodes):
            for q, b in enumerate(nodes):
                G[p * w : (p + 1) * w, q * w : (q + 1) * w] = self._R[a, b, self.L_max + d]
        return G

    def to_json(self) -> dict:
        L = self.L_max
        entries = [
            {"i": i, "j": j, "tau": tau, "value": float(self._R[i, j, L + tau])}
            for i in range(self.n)
            for j in range(self.n)
            for tau in range(-L, L + 1)
        ]
        return {"n": self.n, "L_max": L, "T": self.T, "node_ids": self.node_ids, "entries": entries}

    @classmethod
    def from_json(cls, obj: dict) -> "CovarianceModel":
        n, L = obj["n"], obj["L_max"]
        R = np.zeros((n, n, 2 * L + 1))
        for e in obj["entries"]:
            R[e["i"], e["j"], e["tau"] + L] = e["value"]
        return cls(R, obj["T"], obj.get("node_ids"))


def estimate_covariances(ts: TimeSeriesSet, L_max: int = 20) -> CovarianceModel:
    if not ts.mean_removed:
        raise ConfigurationError("time series must be mean-removed (use assemble)")
    if L_max < 0 or L_max >= ts.T / 4:
        raise ConfigurationError(f"L_max={L_max} must satisfy 0 <= L_max < T/4 = {ts.T / 4}")
    X = ts.data
    T = ts.T
    R = np.zeros((ts.n, ts.n, 2 * L_max + 1))
    for tau in range(L_max + 1):
        R[:, :, L_max + tau] = X[:, : T - tau] @ X[:, tau:].T / T
    return CovarianceModel(R, T, ts.node_ids)


def inner_product(model: CovarianceModel, i: int, j: int) -> float:
    for k in (i, j):
        if not 0 <= k < model.n:
            raise IndexError(f"node index {k} out of range for n={model.n}")
    return model.R(i, j, 0)


def taper(kind: str, L: int) -> np.ndarray:
    tau = np.arange(-L, L + 1)
    if kind == "bartlett":
        return 1.0 - np.abs(tau) / (L + 1)
    if kind == "hann":
        return 0.5 * (1.0 + np.cos(np.pi * tau / (L + 1)))
    if kind in ("rectangular", "boxcar"):
        return np.ones(2 * L + 1)
    raise ConfigurationError(f"unknown taper {kind!r}")


def frequency_grid(K: int) -> np.ndarray:
    return -np.pi + 2 * np.pi * np.arange(K) / K


@dataclass(frozen=True)
class SpectrumEstimate:
    grid: np.ndarray
    S: np.ndarray  # (n, n, K) complex

    @property
    def n(self) -> int:
        return self.S.shape[0]


def estimate_spectra(model: CovarianceModel, K: int = 128, window: str = "bartlett") -> SpectrumEstimate:
    """Blackman-Tukey estimate ``S(i, j, w) = sum_tau w(tau) R(i, j, tau) exp(-1j w tau)``."""
    L = model.L_max
    if K < 2 * L + 1:
        raise ConfigurationError(f"K={K} must be at least 2*L_max+1={2 * L + 1}")
    grid = frequency_grid(K)
    tau = np.arange(-L, L + 1)
    kernel = taper(window, L)[:, None] * np.exp(-1j * np.outer(tau, grid))
    S = np.tensordot(model.array, kernel, axes=([2], [0]))
    # make auto-spectra exactly real
    idx = np.arange(model.n)
    S[idx, idx, :] = S[idx, idx, :].real
    return SpectrumEstimate(grid, S)


def theoretical_spectra(spec, grid: np.ndarray) -> np.ndarray:
    """Closed-loop spectra ``conj(G) diag(sigma^2) G^T`` with ``G = (I - H(e^{iw}))^{-1}``.

    ``spec`` is a :class:`~sparsetopo.netsim.NetworkSpec`.
    """
    n = spec.n
    noise = np.diag(np.asarray(spec.noise_std, dtype=float) ** 2)
    out = np.empty((n, n, len(grid)), dtype=complex)
    for k, w in enumerate(grid):
        H = np.zeros((n, n), dtype=complex)
        for (i, j), h in spec.edges.items():
            H[j, i] = np.sum(np.asarray(h) * np.exp(-1j * w * np.arange(len(h))))
        G = np.linalg.inv(np.eye(n) - H)
        out[:, :, k] = np.conj(G) @ noise @ G.T
    return out


@dataclass(frozen=True)
class SpectralCheckReport:
    max_deviation: float
    pair: tuple[int, int]
    frequency: float


def filtered_spectra_check(spec, estimate: SpectrumEstimate) -> SpectralCheckReport:
    if spec.n != estimate.n:
        raise DimensionError(f"spec has {spec.n} nodes, estimate has {estimate.n}")
    dev = np.abs(estimate.S - theoretical_spectra(spec, estimate.grid))
    i, j, k = np.unravel_index(int(np.argmax(dev)), dev.shape)
    return SpectralCheckReport(float(dev[i, j, k]), (int(i), int(j)), float(estimate.grid[k]))
