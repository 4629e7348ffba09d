"""Two-sided FIR Wiener projection of one node onto a set of inputs.

The predictor is ``x_j(t) ~ sum_i sum_{l=-L..L} w_i[l] x_i(t - l)``, so a
positive lag ``l`` means the input leads the target by ``l`` samples.  The
taps solve the lag-domain normal equations ``(Gamma + ridge I) w = gamma``
built from a :class:`CovarianceModel`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .correlation import CovarianceModel
from .errors import ConfigurationError, SingularityError

DEFAULT_HALF_WIDTH = 10
RIDGE_FACTOR = 1e-8


@dataclass(frozen=True)
class ProjectionRequest:
    target: int
    inputs: tuple[int, ...] = ()
    half_width: int = DEFAULT_HALF_WIDTH
    ridge: float | None = None  # None: RIDGE_FACTOR * trace(Gamma) / dim(Gamma)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(int(i) for i in self.inputs))
        if len(set(self.inputs)) != len(self.inputs):
            raise ConfigurationError(f"duplicate inputs {self.inputs}")
        if self.target in self.inputs:
            raise ConfigurationError(f"target {self.target} listed among its own inputs")
        if self.half_width < 0:
            raise ConfigurationError("half_width must be >= 0")
        if self.ridge is not None and not self.ridge >= 0:
            raise ConfigurationError("ridge must be >= 0")


@dataclass(frozen=True)
class WienerSolution:
    request: ProjectionRequest
    taps: np.ndarray  # (len(inputs), 2L+1), column l + L holds lag l
    residual_variance: float
    ridge: float = 0.0
    gamma: np.ndarray = field(default=None, repr=False, compare=False)
    Gamma: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def inputs(self) -> tuple[int, ...]:
        return self.request.inputs

    def channel_norms(self) -> np.ndarray:
        return np.sum(self.taps**2, axis=1)

    def channel_norm(self, i: int) -> float:
        return float(np.sum(self.taps[self.inputs.index(i)] ** 2))

    def tap(self, i: int, lag: int) -> float:
        L = self.request.half_width
        return float(self.taps[self.inputs.index(i), lag + L])

    def to_json(self) -> dict:
        return {
            "target": self.request.target,
            "inputs": list(self.inputs),
            "L": self.request.half_width,
            "taps": self.taps.tolist(),
            "residual_variance": self.residual_variance,
        }


def _check_nodes(model: CovarianceModel, req: ProjectionRequest) -> None:
    for k in (req.target, *req.inputs):
        if not 0 <= k < model.n:
            raise ConfigurationError(f"node index {k} out of range for n={model.n}")
    if 2 * req.half_width > model.L_max:
        raise ConfigurationError(
            f"half-width L={req.half_width} needs covariances up to lag {2 * req.half_width}, "
            f"model has L_max={model.L_max}"
        )


def cross_vector(model: CovarianceModel, target: int, inputs, L: int) -> np.ndarray:
    """``gamma[(i, l)] = E[x_i(t - l) x_target(t)] = R(i, target, l)``."""
    if not len(inputs):
        return np.zeros(0)
    return np.concatenate([model.lags(i, target, L) for i in inputs])


def default_ridge(Gamma: np.ndarray) -> float:
    if Gamma.size == 0:
        return 0.0
    return RIDGE_FACTOR * float(np.trace(Gamma)) / Gamma.shape[0]


def solve_normal_equations(
    model: CovarianceModel,
    target: int,
    inputs,
    L: int,
    diag_penalty: np.ndarray | float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Solve ``(Gamma + diag(penalty)) w = gamma``; return ``(w, gamma, Gamma, residual)``.

    The residual is ``R(j, j, 0) - gamma^T w`` clamped at zero.
    """
    var = model.variance(target)
    if not len(inputs):
        return np.zeros(0), np.zeros(0), np.zeros((0, 0)), var
    Gamma = model.block_toeplitz(list(inputs), L)
    gamma = cross_vector(model, target, inputs, L)
    A = Gamma + np.diag(np.broadcast_to(diag_penalty, gamma.shape))
    try:
        c, low = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
        w = scipy.linalg.cho_solve((c, low), gamma, check_finite=False)
    except np.linalg.LinAlgError:
        # semidefinite Gamma: fall back to LU, which still detects exact singularity
        try:
            w = scipy.linalg.solve(A, gamma, assume_a="sym", check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise SingularityError(
                f"normal equations for target {target} are singular; use ridge > 0"
            ) from exc
    if not np.all(np.isfinite(w)):
        raise SingularityError(f"normal equations for target {target} are singular; use ridge > 0")
    resid = max(var - float(gamma @ w), 0.0)
    return w, gamma, Gamma, resid


def project(model: CovarianceModel, req: ProjectionRequest) -> WienerSolution:
    _check_nodes(model, req)
    L = req.half_width
    w_len = 2 * L + 1
    if not req.inputs:
        return WienerSolution(req, np.zeros((0, w_len)), model.variance(req.target), 0.0,
                              np.zeros(0), np.zeros((0, 0)))
    Gamma = model.block_toeplitz(list(req.inputs), L)
    ridge = default_ridge(Gamma) if req.ridge is None else float(req.ridge)
    if ridge == 0.0:
        # exact singularity check; Cholesky alone would miss it on some platforms
        cond = np.linalg.cond(Gamma)
        if not np.isfinite(cond) or cond > 1e15:
            raise SingularityError(
                f"Gamma for target {req.target} is singular (cond={cond:.3g}); use ridge > 0"
            )
    w, gamma, Gamma, resid = solve_normal_equations(model, req.target, req.inputs, L, ridge)
    return WienerSolution(req, w.reshape(len(req.inputs), w_len), resid, ridge, gamma, Gamma)


def orthogonality_defect(model: CovarianceModel, sol: WienerSolution) -> float:
    """Largest lag-domain correlation between the residual and a lagged input.

    ``max |gamma - Gamma w|``; zero for an exact unregularised solution and
    ``ridge * max|w|`` when a ridge was used.
    """
    if not sol.inputs:
        return 0.0
    Gamma = sol.Gamma
    gamma = sol.gamma
    if Gamma is None or gamma is None:
        Gamma = model.block_toeplitz(list(sol.inputs), sol.request.half_width)
        gamma = cross_vector(model, sol.request.target, sol.inputs, sol.request.half_width)
    return float(np.max(np.abs(gamma - Gamma @ sol.taps.ravel())))


def gamma_scale(sol: WienerSolution) -> float:
    """Scale of the normal-equation matrix, ``max |Gamma|``."""
    if sol.Gamma is None or sol.Gamma.size == 0:
        return 0.0
    return float(np.max(np.abs(sol.Gamma)))
