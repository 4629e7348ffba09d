"""Per-node selection of at most ``m`` inputs minimising the Wiener residual.

Three solvers share one objective: the exhaustive search (exact, for small
problems), Cycling OLS (greedy slot-wise coordinate descent) and Reweighted
Least Squares (iterated per-channel Tikhonov penalties followed by a hard
top-``m`` selection).  ``auto_degree_identify`` grows ``m`` while each new
link still cuts the residual by a fixed fraction.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .correlation import CovarianceModel
from .errors import BudgetError, ConfigurationError, SparsetopoError
from .graphio import Edge, Topology
from .wiener import (
    DEFAULT_HALF_WIDTH,
    ProjectionRequest,
    WienerSolution,
    default_ridge,
    project,
    solve_normal_equations,
)

AUTO = "auto"
Method = Literal["exhaustive", "cols", "rwls"]

IMPROVEMENT_TOL = 1e-9
DEFAULT_BUDGET = 10**6


@dataclass(frozen=True)
class SparsifierConfig:
    m: int | str = 2
    half_width: int = DEFAULT_HALF_WIDTH
    ridge: float | None = None
    rwls_iterations: int = 10
    rwls_epsilon: float | None = None  # None: 1e-6 * R(j, j, 0)
    rwls_lambda: float | None = None  # None: 0.1 * R(j, j, 0)
    rwls_initial_weights: float | tuple[float, ...] = 0.0
    auto_threshold: float = 0.20
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.m != AUTO and (not isinstance(self.m, (int, np.integer)) or self.m < 0):
            raise ConfigurationError(f"m must be a nonnegative integer or {AUTO!r}, got {self.m!r}")
        if self.half_width < 0:
            raise ConfigurationError("half_width must be >= 0")
        if self.ridge is not None and self.ridge < 0:
            raise ConfigurationError("ridge must be >= 0")
        if self.rwls_iterations < 1:
            raise ConfigurationError("rwls_iterations must be >= 1")
        if self.rwls_epsilon is not None and not self.rwls_epsilon > 0:
            raise ConfigurationError("rwls_epsilon must be > 0")
        if self.rwls_lambda is not None and not self.rwls_lambda > 0:
            raise ConfigurationError("rwls_lambda must be > 0")
        if not 0 < self.auto_threshold < 1:
            raise ConfigurationError("auto_threshold must lie in (0, 1)")
        if self.budget < 1:
            raise ConfigurationError("budget must be >= 1")

    @property
    def is_auto(self) -> bool:
        return self.m == AUTO

    def with_m(self, m) -> "SparsifierConfig":
        return SparsifierConfig(**{**self.__dict__, "m": m})


@dataclass
class SelectionResult:
    target: int
    selected: list[int]
    solution: WienerSolution
    method: str
    trace: list[dict] = field(default_factory=list)
    hit_pass_cap: bool = False

    @property
    def residual(self) -> float:
        return self.solution.residual_variance

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "selected": list(self.selected),
            "method": self.method,
            "residual_variance": self.residual,
            "solution": self.solution.to_json(),
            "trace": self.trace,
        }


class _Projector:
    """Caches residuals of ``target`` over input sets, with one ridge for all sets.

    A ridge that does not depend on the input set keeps the residual
    monotone under set inclusion, which the greedy comparisons rely on.
    """

    def __init__(self, model: CovarianceModel, target: int, config: SparsifierConfig):
        if not 0 <= target < model.n:
            raise ConfigurationError(f"target {target} out of range for n={model.n}")
        if 2 * config.half_width > model.L_max:
            raise ConfigurationError(
                f"half-width L={config.half_width} needs L_max >= {2 * config.half_width}, "
                f"model has L_max={model.L_max}"
            )
        self.model = model
        self.target = target
        self.L = config.half_width
        self.candidates = [i for i in range(model.n) if i != target]
        if config.ridge is None:
            self.ridge = default_ridge(model.block_toeplitz(self.candidates, 0)) if self.candidates else 0.0
        else:
            self.ridge = float(config.ridge)
        self._cache: dict[tuple[int, ...], float] = {}

    def residual(self, inputs) -> float:
        key = tuple(sorted(inputs))
        if key not in self._cache:
            self._cache[key] = solve_normal_equations(
                self.model, self.target, key, self.L, self.ridge
            )[3]
        return self._cache[key]

    def solution(self, inputs) -> WienerSolution:
        return project(self.model, ProjectionRequest(self.target, tuple(inputs), self.L, self.ridge))


def _fixed_m(config: SparsifierConfig, n: int) -> int:
    if config.is_auto:
        raise ConfigurationError("this solver needs a fixed m; use auto_degree_identify for AUTO")
    return min(int(config.m), n - 1)


def exhaustive_identify(model: CovarianceModel, j: int, config: SparsifierConfig) -> SelectionResult:
    proj = _Projector(model, j, config)
    m = _fixed_m(config, model.n)
    count = math.comb(len(proj.candidates), m)
    if count > config.budget:
        raise BudgetError(
            f"exhaustive search over C({len(proj.candidates)}, {m}) = {count} subsets exceeds "
            f"budget {config.budget}; use cols or rwls, or raise the budget"
        )
    best, best_res = (), math.inf
    trace = []
    # combinations() yields in lexicographic order, so strict '<' keeps the smallest tie
    for count, subset in enumerate(itertools.combinations(proj.candidates, m), start=1):
        res = proj.residual(subset)
        if res < best_res:
            best, best_res = subset, res
            trace.append({"evaluated": count, "inputs": list(subset), "residual": res})
    selected = list(best)
    return SelectionResult(j, selected, proj.solution(selected), "exhaustive", trace)


def cols_identify(model: CovarianceModel, j: int, config: SparsifierConfig) -> SelectionResult:
    """Cycling OLS.

    ``m`` slots start empty.  Each pass re-optimises one slot (cycling over
    the slots) against every unused candidate; a replacement is accepted
    only if it lowers the residual by more than ``IMPROVEMENT_TOL``.  The
    search stops once a full cycle of slots brings no change.
    """
    proj = _Projector(model, j, config)
    m = _fixed_m(config, model.n)
    slots: list[int | None] = [None] * m
    trace: list[dict] = []
    if m == 0:
        return SelectionResult(j, [], proj.solution([]), "cols", trace)

    pass_cap = model.n * m * 10
    current = proj.residual([])
    c, k, passes = 0, 0, 0
    while c <= m:
        if passes >= pass_cap:
            break
        passes += 1
        others = [s for q, s in enumerate(slots) if q != k and s is not None]
        best_i, best_res = None, math.inf
        for i in proj.candidates:
            if i in others or i == slots[k]:
                continue
            res = proj.residual(others + [i])
            if res < best_res:
                best_i, best_res = i, res
        changed = best_i is not None and best_res < current - IMPROVEMENT_TOL
        trace.append({
            "pass": passes,
            "slot": k,
            "previous": slots[k],
            "proposed": best_i,
            "residual_before": current,
            "residual_proposed": best_res if best_i is not None else None,
            "changed": bool(changed),
        })
        if changed:
            slots[k] = best_i
            current = best_res
            c = 1
        else:
            c += 1
        trace[-1]["slots"] = list(slots)
        trace[-1]["residual_after"] = current
        k = (k + 1) % m

    selected = sorted(s for s in slots if s is not None)
    result = SelectionResult(j, selected, proj.solution(selected), "cols", trace)
    result.hit_pass_cap = c <= m
    return result


def solve_weighted_projection(
    model: CovarianceModel,
    j: int,
    weights,
    config: SparsifierConfig,
    lam: float | None = None,
    ridge: float | None = None,
) -> WienerSolution:
    """Projection on every other node with penalty ``lam * weight_k`` on channel ``k``.

    ``weights`` has one entry per candidate (nodes ``!= j`` in index order).
    An infinite weight removes the channel; its taps are returned as zeros.
    """
    proj = _Projector(model, j, config)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(proj.candidates),):
        raise ConfigurationError(f"need {len(proj.candidates)} weights, got shape {weights.shape}")
    if np.any(np.isnan(weights)) or np.any(weights < 0):
        raise ConfigurationError("weights must be nonnegative")
    finite = np.isfinite(weights)
    if not np.any(finite):
        raise ConfigurationError("all channel weights are infinite")
    lam = 0.1 * model.variance(j) if lam is None else float(lam)
    ridge = proj.ridge if ridge is None else float(ridge)
    L = config.half_width
    w_len = 2 * L + 1
    active = [c for c, f in zip(proj.candidates, finite) if f]
    penalty = ridge + lam * np.repeat(weights[finite], w_len)
    w, gamma, Gamma, resid = solve_normal_equations(model, j, active, L, penalty)
    taps = np.zeros((len(proj.candidates), w_len))
    taps[finite] = w.reshape(len(active), w_len)
    req = ProjectionRequest(j, tuple(proj.candidates), L, ridge)
    return WienerSolution(req, taps, resid, ridge)


def _top_m(norms: np.ndarray, candidates: list[int], m: int) -> list[int]:
    # stable sort on -norm: equal norms keep index order
    order = np.argsort(-norms, kind="stable")[:m]
    return sorted(candidates[o] for o in order)


def rwls_identify(model: CovarianceModel, j: int, config: SparsifierConfig) -> SelectionResult:
    """Reweighted least squares with inverse-norm weights and a final top-``m`` cut."""
    proj = _Projector(model, j, config)
    m = _fixed_m(config, model.n)
    var = model.variance(j)
    eps = config.rwls_epsilon if config.rwls_epsilon is not None else 1e-6 * var
    lam = config.rwls_lambda if config.rwls_lambda is not None else 0.1 * var
    ncand = len(proj.candidates)
    weights = np.broadcast_to(np.asarray(config.rwls_initial_weights, dtype=float), (ncand,)).copy()
    trace = []
    norms = np.zeros(ncand)
    for it in range(config.rwls_iterations):
        sol = solve_weighted_projection(model, j, weights, config, lam=lam, ridge=proj.ridge)
        norms = sol.channel_norms()
        trace.append({
            "iteration": it + 1,
            "weights": weights.tolist(),
            "channel_norms": norms.tolist(),
            "residual": sol.residual_variance,
        })
        weights = 1.0 / (norms + eps)
        weights /= weights.mean()
    selected = _top_m(norms, proj.candidates, m) if ncand else []
    return SelectionResult(j, selected, proj.solution(selected), "rwls", trace)


_SOLVERS = {
    "exhaustive": exhaustive_identify,
    "cols": cols_identify,
    "rwls": rwls_identify,
}


def auto_degree_identify(
    model: CovarianceModel, j: int, config: SparsifierConfig, inner: Method = "cols"
) -> SelectionResult:
    """Grow the degree while each step cuts the residual by ``auto_threshold``."""
    if not config.is_auto:
        raise ConfigurationError("auto_degree_identify requires m='auto'")
    solver = _SOLVERS[inner]
    proj = _Projector(model, j, config)
    accepted = SelectionResult(j, [], proj.solution([]), inner)
    prev = accepted.residual
    steps = []
    for m in range(1, model.n):
        res = solver(model, j, config.with_m(m))
        ok = res.residual <= (1.0 - config.auto_threshold) * prev
        steps.append({"m": m, "selected": res.selected, "residual": res.residual,
                      "previous": prev, "accepted": bool(ok)})
        if not ok:
            break
        accepted, prev = res, res.residual
    accepted.trace = steps
    return accepted


def identify_node(model: CovarianceModel, j: int, config: SparsifierConfig, method: Method) -> SelectionResult:
    if method not in _SOLVERS:
        raise ConfigurationError(f"unknown method {method!r}")
    if config.is_auto:
        return auto_degree_identify(model, j, config, method)
    return _SOLVERS[method](model, j, config)


def identify_all(
    model: CovarianceModel,
    config: SparsifierConfig,
    method: Method = "cols",
    workers: int = 1,
) -> tuple[Topology, list[SelectionResult]]:
    """Run the per-node identifier on every node and assemble the topology."""
    if method not in _SOLVERS:
        raise ConfigurationError(f"unknown method {method!r}")

    def run(j):
        try:
            return identify_node(model, j, config, method)
        except SparsetopoError as exc:
            raise type(exc)(f"node {j} ({model.node_ids[j]}): {exc}") from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(model.n)))
    else:
        results = [run(j) for j in range(model.n)]

    edges = []
    for res in results:
        sol = res.solution
        for i in res.selected:
            edges.append(Edge(i, res.target, sol.channel_norm(i)))
    topo = Topology(
        model.n,
        list(model.node_ids),
        edges,
        [r.residual for r in results],
    )
    return topo, results
