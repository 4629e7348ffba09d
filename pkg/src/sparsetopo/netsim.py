"""Random ground-truth networks of FIR-coupled processes and their simulation.

Each node follows ``x_j(t) = e_j(t) + sum_{i -> j} sum_{k>=1} h_ij[k] x_i(t - k)``
with independent Gaussian ``e_j``.  Every edge filter has ``h[0] = 0``, so the
recursion is explicit in time.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, InstabilityError
from .graphio import Edge, Topology
from .timeseries import TimeSeriesSet

DIVERGENCE_LIMIT = 1e12
SNR_PASSES = 5
SNR_TOLERANCE = 0.01


@dataclass
class NetworkSpec:
    n: int
    edges: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    noise_std: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        self.noise_std = (
            np.ones(self.n) if self.noise_std is None else np.asarray(self.noise_std, dtype=float)
        )
        if self.noise_std.shape != (self.n,) or not np.all(self.noise_std > 0):
            raise ConfigurationError("noise_std must hold n positive values")
        edges = {}
        for (i, j), h in self.edges.items():
            i, j = int(i), int(j)
            h = np.asarray(h, dtype=float)
            if i == j:
                raise ConfigurationError(f"self-edge on node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ConfigurationError(f"edge {i}->{j} out of range")
            if h.ndim != 1 or h.size < 2 or h[0] != 0.0:
                raise ConfigurationError(f"edge {i}->{j}: taps must be 1-D with h[0] = 0")
            edges[(i, j)] = h
        self.edges = dict(sorted(edges.items()))

    @property
    def order(self) -> int:
        return max((h.size - 1 for h in self.edges.values()), default=0)

    def in_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for _, j in self.edges:
            deg[j] += 1
        return deg

    def lag_matrices(self) -> np.ndarray:
        """``A[k][j, i] = h_ij[k]`` for ``k = 0..order``."""
        A = np.zeros((self.order + 1, self.n, self.n))
        for (i, j), h in self.edges.items():
            A[: h.size, j, i] = h
        return A

    def node_ids(self) -> list[str]:
        return [f"x{i}" for i in range(self.n)]

    def topology(self) -> Topology:
        edges = [Edge(i, j, float(np.sum(h**2))) for (i, j), h in self.edges.items()]
        return Topology(self.n, self.node_ids(), edges)

    def with_noise(self, noise_std) -> "NetworkSpec":
        return NetworkSpec(self.n, dict(self.edges), np.array(noise_std, dtype=float), self.seed)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "noise_std": [float(s) for s in self.noise_std],
            "edges": [
                {"from": i, "to": j, "taps": [float(v) for v in h]} for (i, j), h in self.edges.items()
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NetworkSpec":
        edges = {(e["from"], e["to"]): e["taps"] for e in obj["edges"]}
        return cls(obj["n"], edges, obj["noise_std"], obj.get("seed", 0))


def save_spec(spec: NetworkSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec.to_json(), indent=2) + "\n")


def load_spec(path: str | Path) -> NetworkSpec:
    return NetworkSpec.from_json(json.loads(Path(path).read_text()))


def random_spec(
    n: int,
    order: int = 5,
    seed: int = 0,
    *,
    in_degree: int | None = None,
    max_in_degree: int | None = None,
    edge_density: float | None = None,
    n_edges: int | None = None,
    acyclic: bool = True,
    tap_range: float = 1.0,
) -> NetworkSpec:
    """Draw a random network.

    At most one of ``in_degree`` (every node gets that many parents, or all
    admissible ones if fewer exist), ``max_in_degree`` (each node draws its
    in-degree uniformly from ``1..max_in_degree``, capped the same way),
    ``edge_density`` (each admissible pair independently) or ``n_edges``
    (uniformly chosen pairs) sets the graph; the default is ``in_degree=2``.
    With ``acyclic`` the admissible pairs follow a random node ordering.
    Taps ``h[1..order]`` are uniform on ``[-tap_range, tap_range]`` and each
    filter is rescaled to ``sum |h| = 0.5 / max_in_degree``.
    """
    if n < 2:
        raise ConfigurationError("n must be >= 2")
    if order < 1:
        raise ConfigurationError("order must be >= 1")
    rules = [r is not None for r in (in_degree, max_in_degree, edge_density, n_edges)]
    if sum(rules) > 1:
        raise ConfigurationError("give at most one of in_degree, max_in_degree, edge_density, n_edges")
    if not any(rules):
        in_degree = 2
    rng = np.random.default_rng(seed)
    rank = rng.permutation(n)  # rank[i] = position of node i in the causal order

    def admissible(i, j):
        return i != j and (not acyclic or rank[i] < rank[j])

    pairs = [(i, j) for j in range(n) for i in range(n) if admissible(i, j)]
    chosen: list[tuple[int, int]] = []
    if in_degree is not None or max_in_degree is not None:
        bound = in_degree if in_degree is not None else max_in_degree
        if bound < 0 or bound >= n:
            raise ConfigurationError(f"in-degree must lie in [0, n-1], got {bound}")
        for j in range(n):
            parents = [i for i in range(n) if admissible(i, j)]
            want = bound if in_degree is not None else int(rng.integers(1, bound + 1)) if bound else 0
            k = min(want, len(parents))
            if k:
                chosen += [(int(i), j) for i in sorted(rng.choice(parents, size=k, replace=False))]
    elif edge_density is not None:
        if not 0 <= edge_density <= 1:
            raise ConfigurationError("edge_density must lie in [0, 1]")
        keep = rng.random(len(pairs)) < edge_density
        chosen = [p for p, kp in zip(pairs, keep) if kp]
    else:
        if n_edges < 0 or n_edges > len(pairs):
            raise ConfigurationError(f"n_edges must lie in [0, {len(pairs)}]")
        idx = np.sort(rng.choice(len(pairs), size=n_edges, replace=False))
        chosen = [pairs[k] for k in idx]

    deg = np.zeros(n, dtype=int)
    for _, j in chosen:
        deg[j] += 1
    gain = 0.5 / max(int(deg.max()), 1)
    edges = {}
    for i, j in sorted(chosen):
        taps = rng.uniform(-tap_range, tap_range, size=order)
        taps *= gain / np.sum(np.abs(taps))
        edges[(i, j)] = np.concatenate([[0.0], taps])
    return NetworkSpec(n, edges, np.ones(n), int(seed))


def _recursion(A: np.ndarray, drive: np.ndarray) -> np.ndarray:
    """Run ``x[..., t] = drive[..., t] + sum_k A[k] @ x[..., t-k]`` from zero history.

    ``drive`` has shape ``(..., n, T)``; leading axes are independent runs.
    """
    order = A.shape[0] - 1
    x = np.zeros_like(drive)
    lagged = [A[k].T for k in range(1, order + 1)]
    for t in range(drive.shape[-1]):
        acc = drive[..., t].copy()
        for k in range(1, min(order, t) + 1):
            acc += x[..., t - k] @ lagged[k - 1]
        x[..., t] = acc
        if not np.all(np.abs(acc) < DIVERGENCE_LIMIT):
            node = int(np.argmax(np.max(np.abs(acc.reshape(-1, acc.shape[-1])), axis=0)))
            raise InstabilityError(f"simulation diverged at step {t} on node {node}")
    return x


class SimulationResult(NamedTuple):
    data: TimeSeriesSet
    achieved_snr: np.ndarray
    spec: NetworkSpec  # noise_std after SNR matching
    noise: np.ndarray  # e_j(t) realised after burn-in


def _snr(x: np.ndarray, e: np.ndarray, has_parent: np.ndarray) -> np.ndarray:
    signal = x - e
    snr = np.var(signal, axis=1) / np.var(e, axis=1)
    return np.where(has_parent, snr, 0.0)


def simulate(
    spec: NetworkSpec,
    T: int,
    snr_target: float | None = None,
    burn_in: int = 500,
) -> SimulationResult:
    """Simulate ``T`` samples after ``burn_in`` discarded ones.

    With ``snr_target`` the per-node noise levels of nodes with parents are
    rescaled so that ``var(x_j - e_j) / var(e_j)`` approaches the target.
    The rescaling exploits linearity: unit responses to each node's noise
    stream are simulated once and recombined for each fixed-point pass.
    Achieved SNR is always measured on the final simulation; nodes without
    parents report 0.
    """
    if T < 1:
        raise ConfigurationError("T must be >= 1")
    if burn_in < 0:
        raise ConfigurationError("burn_in must be >= 0")
    if snr_target is not None and not snr_target > 0:
        raise ConfigurationError("snr_target must be > 0")
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((n, burn_in + T))
    A = spec.lag_matrices()
    has_parent = spec.in_degrees() > 0
    noise_std = spec.noise_std.copy()

    if snr_target is not None and has_parent.any():
        # responses[s] = network response to node s's unit-scaled noise stream alone
        drive = np.zeros((n, n, burn_in + T))
        drive[np.arange(n), np.arange(n)] = z
        responses = _recursion(A, drive)[..., burn_in:]
        for s in range(n):
            responses[s, s] -= z[s, burn_in:]  # keep the network part only
        for _ in range(SNR_PASSES):
            signal = np.tensordot(noise_std, responses, axes=1)
            # Gauss-Seidel sweep in causal order
            order = np.argsort(_depths(spec))
            for j in order:
                if not has_parent[j]:
                    continue
                signal = np.tensordot(noise_std, responses, axes=1)
                sig_var = np.var(signal[j])
                if sig_var > 0:
                    noise_std[j] = np.sqrt(sig_var / (snr_target * np.var(z[j, burn_in:])))
            signal = np.tensordot(noise_std, responses, axes=1)
            e_var = noise_std**2 * np.var(z[:, burn_in:], axis=1)
            snr = np.var(signal, axis=1) / e_var
            if np.all(np.abs(snr[has_parent] / snr_target - 1) < SNR_TOLERANCE):
                break

    e = noise_std[:, None] * z
    x = _recursion(A, e)[:, burn_in:]
    e = e[:, burn_in:]
    out_spec = spec.with_noise(noise_std)
    data = TimeSeriesSet(spec.node_ids(), x, mean_removed=False)
    return SimulationResult(data, _snr(x, e, has_parent), out_spec, e)


def _depths(spec: NetworkSpec) -> np.ndarray:
    """Longest-path depth of each node; nodes on cycles get depth n."""
    depth = np.zeros(spec.n, dtype=int)
    for _ in range(spec.n):
        changed = False
        for i, j in spec.edges:
            if depth[j] < depth[i] + 1 and depth[i] + 1 <= spec.n:
                depth[j] = depth[i] + 1
                changed = True
        if not changed:
            break
    return depth

