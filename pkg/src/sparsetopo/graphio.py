"""Directed topologies: thresholding, scoring against ground truth, export."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .errors import ConfigurationError, DimensionError


class Edge(NamedTuple):
    source: int
    target: int
    weight: float


@dataclass
class Topology:
    n: int
    node_ids: list[str]
    edges: list[Edge] = field(default_factory=list)
    residuals: list[float] | None = None

    def __post_init__(self):
        if len(self.node_ids) != self.n:
            raise DimensionError(f"{len(self.node_ids)} node ids for n={self.n}")
        clean = []
        for e in self.edges:
            e = Edge(int(e[0]), int(e[1]), float(e[2]))
            if not (0 <= e.source < self.n and 0 <= e.target < self.n):
                raise ConfigurationError(f"edge {e.source}->{e.target} out of range")
            if e.source == e.target:
                raise ConfigurationError(f"self-edge on node {e.source}")
            if not e.weight >= 0:
                raise ConfigurationError(f"negative weight on edge {e.source}->{e.target}")
            clean.append(e)
        self.edges = sorted(clean, key=lambda e: (e.source, e.target))
        pairs = [(e.source, e.target) for e in self.edges]
        if len(set(pairs)) != len(pairs):
            raise ConfigurationError("duplicate edges")

    def edge_set(self) -> set[tuple[int, int]]:
        return {(e.source, e.target) for e in self.edges}

    def in_degrees(self) -> list[int]:
        deg = [0] * self.n
        for e in self.edges:
            deg[e.target] += 1
        return deg

    def parents(self, j: int) -> list[int]:
        return [e.source for e in self.edges if e.target == j]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "node_ids": list(self.node_ids),
            "edges": [{"from": e.source, "to": e.target, "weight": e.weight} for e in self.edges],
            "residuals": None if self.residuals is None else [float(r) for r in self.residuals],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Topology":
        edges = [Edge(e["from"], e["to"], e.get("weight", 1.0)) for e in obj["edges"]]
        return cls(obj["n"], list(obj["node_ids"]), edges, obj.get("residuals"))


def save_topology(topology: Topology, path: str | Path) -> None:
    Path(path).write_text(json.dumps(topology.to_json(), indent=2, sort_keys=True) + "\n")


def load_topology(path: str | Path) -> Topology:
    return Topology.from_json(json.loads(Path(path).read_text()))


def threshold_edges(topology: Topology, delta_rel: float) -> Topology:
    """Drop edges whose weight is below ``delta_rel`` times the largest weight."""
    if not 0 <= delta_rel < 1:
        raise ConfigurationError("delta_rel must lie in [0, 1)")
    if not topology.edges:
        return Topology(topology.n, list(topology.node_ids), [], topology.residuals)
    cut = delta_rel * max(e.weight for e in topology.edges)
    kept = [e for e in topology.edges if e.weight >= cut]
    return Topology(topology.n, list(topology.node_ids), kept, topology.residuals)


@dataclass(frozen=True)
class ComparisonReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def compare(truth: Topology, estimated: Topology) -> ComparisonReport:
    """Score directed edges exactly; empty prediction has precision 1, empty truth recall 1."""
    if truth.n != estimated.n or list(truth.node_ids) != list(estimated.node_ids):
        raise DimensionError("truth and estimate have different node sets")
    t, e = truth.edge_set(), estimated.edge_set()
    tp, fp, fn = len(t & e), len(e - t), len(t - e)
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ComparisonReport(tp, fp, fn, precision, recall, f1)


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(topology: Topology) -> str:
    lines = ["digraph topology {"]
    for name in topology.node_ids:
        lines.append(f"  {_dot_id(name)};")
    for e in topology.edges:
        a, b = topology.node_ids[e.source], topology.node_ids[e.target]
        lines.append(f'  {_dot_id(a)} -> {_dot_id(b)} [label="{e.weight:.6g}", weight="{e.weight:.6g}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dot(topology: Topology, path: str | Path) -> None:
    Path(path).write_text(to_dot(topology))
