"""Parameterized circuit model: gates, labelled layers and parameter indexing.

Circuits are immutable. Every parameterized gate owns exactly one parameter;
indices run ``0..M-1`` in gate order and are re-compacted after removals.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliString

__all__ = [
    "GateKind",
    "Gate",
    "Layer",
    "Circuit",
    "RotationOp",
    "CliffordOp",
    "GATE_SETS",
    "CircuitFormatError",
    "append_layer",
    "remove_gate",
    "clifford_instance",
    "gate_count",
    "transversal_layer",
    "pair_layer",
    "random_circuit",
    "circuit_to_json",
    "circuit_from_json",
    "load_circuit",
    "save_circuit",
]


class GateKind(str, enum.Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    RXX = "rxx"
    RYY = "ryy"
    RZZ = "rzz"
    CZ = "cz"

    @property
    def arity(self) -> int:
        return 1 if self in (GateKind.RX, GateKind.RY, GateKind.RZ) else 2

    @property
    def parameterized(self) -> bool:
        return self is not GateKind.CZ

    @property
    def axis(self) -> str | None:
        return None if self is GateKind.CZ else self.value[-1].upper()


GATE_SETS: dict[str, tuple[GateKind, ...]] = {
    "rxyz2xyz": (GateKind.RX, GateKind.RY, GateKind.RZ,
                 GateKind.RXX, GateKind.RYY, GateKind.RZZ, GateKind.CZ),
    "rxyz": (GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.CZ),
    "zz_ry": (GateKind.RZZ, GateKind.RY),
}
GATE_SET_ALIASES = {"RXYZ2XYZ": "rxyz2xyz", "RXYZ": "rxyz", "ZZ+RY": "zz_ry", "zz+ry": "zz_ry"}


def resolve_gate_set(name: str) -> tuple[GateKind, ...]:
    key = GATE_SET_ALIASES.get(name, name)
    try:
        return GATE_SETS[key]
    except KeyError:
        raise ValueError(f"unknown gate set {name!r}; choose from {sorted(GATE_SETS)}") from None


class CircuitFormatError(ValueError):
    def __init__(self, message: str, path: str = "$"):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    param: int | None = None

    def __post_init__(self):
        if len(self.qubits) != self.kind.arity:
            raise ValueError(f"{self.kind.value} acts on {self.kind.arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubits in {self.qubits}")
        if not self.kind.parameterized and self.param is not None:
            raise ValueError("cz carries no parameter")

    def generator(self, n_qubits: int) -> PauliString:
        """Pauli ``P`` such that the gate is ``exp(-i theta P / 2)``."""
        if not self.kind.parameterized:
            raise ValueError("cz is not a Pauli rotation")
        return PauliString.single(n_qubits, {q: self.kind.axis for q in self.qubits})


@dataclass(frozen=True)
class Layer:
    label: str
    gates: tuple[Gate, ...]

    def __post_init__(self):
        seen: set[int] = set()
        for g in self.gates:
            if seen.intersection(g.qubits):
                raise ValueError(f"layer {self.label!r} has overlapping gate supports")
            seen.update(g.qubits)

    @property
    def n_params(self) -> int:
        return sum(g.kind.parameterized for g in self.gates)


def transversal_layer(kind: GateKind, n_qubits: int, label: str | None = None) -> Layer:
    if kind.arity != 1:
        raise ValueError(f"{kind.value} is not a single-qubit kind")
    return Layer(label or kind.value, tuple(Gate(kind, (q,)) for q in range(n_qubits)))


def pair_layer(kind: GateKind, pairs: Iterable[tuple[int, int]], label: str) -> Layer:
    if kind.arity != 2:
        raise ValueError(f"{kind.value} is not a two-qubit kind")
    return Layer(label, tuple(Gate(kind, tuple(p)) for p in pairs))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    layers: tuple[Layer, ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        params = []
        for layer in self.layers:
            for g in layer.gates:
                if any(not 0 <= q < self.n_qubits for q in g.qubits):
                    raise ValueError(f"gate {g} outside circuit width {self.n_qubits}")
                if g.kind.parameterized:
                    if g.param is None:
                        raise ValueError(f"gate {g} is missing its parameter index")
                    params.append(g.param)
        if sorted(params) != list(range(len(params))):
            raise ValueError("parameter indices must be 0..M-1, each used once")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def param_count(self) -> int:
        return sum(layer.n_params for layer in self.layers)

    @property
    def gate_count(self) -> int:
        return sum(len(layer.gates) for layer in self.layers)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(layer.label for layer in self.layers)

    def gates(self) -> list[Gate]:
        return [g for layer in self.layers for g in layer.gates]


def gate_count(c: Circuit) -> int:
    return c.gate_count


def append_layer(c: Circuit, template: Layer) -> Circuit:
    """Return ``c`` with ``template`` appended and fresh parameter indices."""
    nxt = c.param_count
    gates = []
    for g in template.gates:
        if any(not 0 <= q < c.n_qubits for q in g.qubits):
            raise ValueError(f"template gate {g} outside circuit width {c.n_qubits}")
        if g.kind.parameterized:
            gates.append(replace(g, param=nxt))
            nxt += 1
        else:
            gates.append(replace(g, param=None))
    return Circuit(c.n_qubits, c.layers + (Layer(template.label, tuple(gates)),))


def remove_gate(c: Circuit, position: int) -> Circuit:
    """Drop the gate at flat ``position`` (layer order, then gate order)."""
    flat = c.gates()
    if not 0 <= position < len(flat):
        raise IndexError(f"gate position {position} out of range (circuit has {len(flat)} gates)")
    if flat[position].kind.parameterized and c.param_count == 1:
        raise ValueError("cannot remove the last parameterized gate")
    layers = []
    pos = 0
    nxt = 0
    for layer in c.layers:
        gates = []
        for g in layer.gates:
            if pos != position:
                if g.kind.parameterized:
                    g = replace(g, param=nxt)
                    nxt += 1
                gates.append(g)
            pos += 1
        if gates:
            layers.append(Layer(layer.label, tuple(gates)))
    return Circuit(c.n_qubits, tuple(layers))


def random_circuit(rng: np.random.Generator, n_qubits: int, max_params: int, gate_set="rxyz2xyz") -> Circuit:
    """Random circuit with ``1..max_params`` parameters drawn from ``gate_set``.

    Layers are partial: each holds one to ``n_qubits`` gates on random
    disjoint supports. Two-qubit kinds are skipped when ``n_qubits == 1``.
    """
    if max_params < 1:
        raise ValueError("max_params must be >= 1")
    kinds = [k for k in resolve_gate_set(gate_set) if k.arity <= n_qubits]
    if not any(k.parameterized for k in kinds):
        raise ValueError(f"gate set {gate_set!r} has no usable parameterized kind on {n_qubits} qubit(s)")
    target = int(rng.integers(1, max_params + 1))
    c = Circuit(n_qubits)
    while c.param_count < target:
        kind = kinds[int(rng.integers(len(kinds)))]
        order = [int(q) for q in rng.permutation(n_qubits)]
        slots = [tuple(order[i:i + kind.arity]) for i in range(0, n_qubits - kind.arity + 1, kind.arity)]
        room = target - c.param_count if kind.parameterized else len(slots)
        k = int(rng.integers(1, min(len(slots), room) + 1))
        c = append_layer(c, Layer(kind.value, tuple(Gate(kind, q) for q in slots[:k])))
    return c


@dataclass(frozen=True)
class RotationOp:
    generator: PauliString
    k: int


@dataclass(frozen=True)
class CliffordOp:
    gate: str
    qubits: tuple[int, ...]


def clifford_instance(c: Circuit, assignment: Sequence[int]) -> list[RotationOp | CliffordOp]:
    """Stabilizer operations for ``c`` with parameter ``i`` at ``assignment[i] * pi/2``."""
    values = np.asarray(assignment)
    if values.shape != (c.param_count,):
        raise ValueError(f"assignment has length {values.size}, circuit has {c.param_count} parameters")
    if values.size and (values.min() < 0 or values.max() > 3):
        raise ValueError("assignment values must lie in 0..3")
    ops: list[RotationOp | CliffordOp] = []
    for g in c.gates():
        if g.kind.parameterized:
            ops.append(RotationOp(g.generator(c.n_qubits), int(values[g.param])))
        else:
            ops.append(CliffordOp("CZ", g.qubits))
    return ops


# --- JSON -------------------------------------------------------------------

def circuit_to_dict(c: Circuit) -> dict:
    layers = []
    for layer in c.layers:
        gates = []
        for g in layer.gates:
            d = {"kind": g.kind.value, "qubits": list(g.qubits)}
            if g.param is not None:
                d["param"] = g.param
            gates.append(d)
        layers.append({"label": layer.label, "gates": gates})
    return {"n_qubits": c.n_qubits, "layers": layers}


def circuit_to_json(c: Circuit, indent: int | None = None) -> str:
    return json.dumps(circuit_to_dict(c), indent=indent)


def _expect(cond: bool, message: str, path: str) -> None:
    if not cond:
        raise CircuitFormatError(message, path)


def circuit_from_dict(data) -> Circuit:
    _expect(isinstance(data, dict), "expected an object", "$")
    n = data.get("n_qubits")
    _expect(isinstance(n, int) and not isinstance(n, bool) and n >= 1,
            "n_qubits must be a positive integer", "$.n_qubits")
    raw_layers = data.get("layers")
    _expect(isinstance(raw_layers, list), "layers must be a list", "$.layers")
    layers = []
    for i, rl in enumerate(raw_layers):
        lp = f"$.layers[{i}]"
        _expect(isinstance(rl, dict), "expected an object", lp)
        _expect(isinstance(rl.get("label"), str), "label must be a string", lp + ".label")
        _expect(isinstance(rl.get("gates"), list), "gates must be a list", lp + ".gates")
        gates = []
        for j, rg in enumerate(rl["gates"]):
            gp = f"{lp}.gates[{j}]"
            _expect(isinstance(rg, dict), "expected an object", gp)
            try:
                kind = GateKind(rg.get("kind"))
            except ValueError:
                raise CircuitFormatError(f"unknown gate kind {rg.get('kind')!r}", gp + ".kind") from None
            qubits = rg.get("qubits")
            _expect(isinstance(qubits, list) and all(isinstance(q, int) for q in qubits),
                    "qubits must be a list of integers", gp + ".qubits")
            param = rg.get("param")
            if kind.parameterized:
                _expect(isinstance(param, int), "param must be an integer", gp + ".param")
            else:
                _expect(param is None, "cz must not carry a param", gp + ".param")
            try:
                gates.append(Gate(kind, tuple(qubits), param))
            except ValueError as exc:
                raise CircuitFormatError(str(exc), gp) from None
        try:
            layers.append(Layer(rl["label"], tuple(gates)))
        except ValueError as exc:
            raise CircuitFormatError(str(exc), lp) from None
    try:
        return Circuit(n, tuple(layers))
    except ValueError as exc:
        raise CircuitFormatError(str(exc), "$") from None


def circuit_from_json(text: str) -> Circuit:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return circuit_from_dict(data)


def load_circuit(path: str | os.PathLike) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return circuit_from_json(fh.read())


def save_circuit(c: Circuit, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(circuit_to_json(c, indent=2))
        fh.write("\n")
