"""Candidate layer pool from the Hamiltonian's interaction graph.

Qubits are nodes; the weight of edge ``(a, b)`` is the summed ``|coefficient|``
of every term acting on both. Two-qubit layers come from two rounds of
maximum-weight matching: the second round runs on the graph with the first
matching's edges removed, giving a brickwall-like pair of layers.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import networkx as nx

from .circuit import GateKind, Layer, pair_layer, resolve_gate_set, transversal_layer
from .pauli import Hamiltonian

__all__ = [
    "InteractionGraph",
    "LayerPool",
    "interaction_graph",
    "max_weight_matching",
    "matching_weight",
    "two_layer_pairs",
    "build_layer_pool",
]

Edge = tuple[int, int]

# relative slack when comparing matching weights
_WEIGHT_RTOL = 1e-9
# per-edge bonus (relative to the lightest edge) that favours larger matchings
CARDINALITY_BONUS = 1e-3


@dataclass(frozen=True)
class InteractionGraph:
    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        for a, b, w in self.edges:
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if not (0 <= a < self.n_nodes and 0 <= b < self.n_nodes):
                raise ValueError(f"edge ({a}, {b}) outside {self.n_nodes} nodes")
            if w <= 0:
                raise ValueError(f"edge ({a}, {b}) has non-positive weight {w}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    def weights(self) -> dict[Edge, float]:
        return {(min(a, b), max(a, b)): w for a, b, w in self.edges}

    def without(self, pairs) -> InteractionGraph:
        drop = {(min(a, b), max(a, b)) for a, b in pairs}
        return InteractionGraph(self.n_nodes, tuple(e for e in self.edges if (min(e[0], e[1]), max(e[0], e[1])) not in drop))


def interaction_graph(h: Hamiltonian) -> InteractionGraph:
    if len(h.terms) == 0:
        raise ValueError("Hamiltonian has no terms")
    acc: dict[Edge, float] = {}
    for coef, p in h.terms:
        for a, b in combinations(p.support, 2):
            acc[(a, b)] = acc.get((a, b), 0.0) + abs(coef)
    return InteractionGraph(h.n_qubits, tuple((a, b, w) for (a, b), w in sorted(acc.items())))


def matching_weight(weights: dict[Edge, float], pairs) -> float:
    return sum(weights[(min(a, b), max(a, b))] for a, b in pairs)


def _optimum(weights: dict[Edge, float], nodes_out: set[int]) -> float:
    g = nx.Graph()
    for (a, b), w in weights.items():
        if a not in nodes_out and b not in nodes_out:
            g.add_edge(a, b, weight=w)
    if g.number_of_edges() == 0:
        return 0.0
    m = nx.max_weight_matching(g, weight="weight")
    return sum(g[a][b]["weight"] for a, b in m)


def max_weight_matching(g: InteractionGraph, cardinality_bonus: bool = True) -> list[Edge]:
    """Maximum-weight matching, lexicographically smallest among optima.

    With ``cardinality_bonus`` every edge weight gets ``+ min_weight * 1e-3``
    so that, between matchings of equal weight, larger ones win.
    """
    weights = g.weights()
    if not weights:
        return []
    if cardinality_bonus:
        bonus = min(weights.values()) * CARDINALITY_BONUS
        weights = {e: w + bonus for e, w in weights.items()}
    tol = _WEIGHT_RTOL * max(1.0, sum(weights.values()))
    target = _optimum(weights, set())
    chosen: list[Edge] = []
    used: set[int] = set()
    got = 0.0
    # Greedy in edge order: keep an edge iff some optimal matching extends the current choice with it.
    remaining = dict(weights)
    for e in sorted(weights):
        a, b = e
        if a in used or b in used:
            continue
        w = remaining.pop(e)
        best_with = got + w + _optimum(remaining, used | {a, b})
        if best_with >= target - tol:
            chosen.append(e)
            used |= {a, b}
            got += w
    return chosen


def two_layer_pairs(g: InteractionGraph) -> tuple[list[Edge], list[Edge]]:
    first = max_weight_matching(g)
    second = max_weight_matching(g.without(first))
    return first, second


@dataclass(frozen=True)
class LayerPool:
    templates: tuple[Layer, ...]

    def __post_init__(self):
        labels = [t.label for t in self.templates]
        if len(set(labels)) != len(labels):
            raise ValueError("layer labels must be unique")

    def __len__(self) -> int:
        return len(self.templates)

    def __iter__(self):
        return iter(self.templates)

    def labels(self) -> list[str]:
        return [t.label for t in self.templates]

    def get(self, label: str) -> Layer:
        for t in self.templates:
            if t.label == label:
                return t
        raise KeyError(label)


def build_layer_pool(gate_set, g: InteractionGraph) -> LayerPool:
    """One transversal template per single-qubit kind, two matched templates per two-qubit kind.

    ``gate_set`` is a name from :data:`rfqas.circuit.GATE_SETS` or a sequence
    of :class:`GateKind`. Raises ``ValueError`` when fewer than two templates
    result, since there is nothing to choose between.
    """
    kinds = resolve_gate_set(gate_set) if isinstance(gate_set, str) else tuple(GateKind(k) for k in gate_set)
    if not kinds:
        raise ValueError("gate set is empty")
    pairs1, pairs2 = two_layer_pairs(g)
    templates = [transversal_layer(k, g.n_nodes) for k in kinds if k.arity == 1]
    for k in kinds:
        if k.arity != 2:
            continue
        for i, pairs in enumerate((pairs1, pairs2), start=1):
            if pairs:
                templates.append(pair_layer(k, pairs, f"{k.value}-{i}"))
    if len(templates) < 2:
        raise ValueError(
            f"gate set {[k.value for k in kinds]} yields {len(templates)} layer template(s) on an "
            f"interaction graph with {len(g.edges)} edge(s); at least two are needed"
        )
    return LayerPool(tuple(templates))
