"""Reference implementations used only by the tests.

Everything here is written from dense Kronecker products and brute force,
independently of the package's bitmask and tableau code.
"""

from __future__ import annotations

from functools import reduce
from itertools import combinations

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(label: str) -> np.ndarray:
    # qubit 0 is the least significant bit of the basis index, so it is the last kron factor
    return reduce(np.kron, [PAULI[s] for s in reversed(label)])


def op_on(n: int, symbols: dict[int, str]) -> np.ndarray:
    return pauli_matrix("".join(symbols.get(q, "I") for q in range(n)))


def rotation(n: int, symbols: dict[int, str], theta: float) -> np.ndarray:
    return np.cos(theta / 2) * np.eye(1 << n) - 1j * np.sin(theta / 2) * op_on(n, symbols)


def clifford_matrix(n: int, gate: str, qubits) -> np.ndarray:
    eye = np.eye(1 << n, dtype=complex)
    if gate == "H":
        (q,) = qubits
        return (op_on(n, {q: "X"}) + op_on(n, {q: "Z"})) / np.sqrt(2)
    if gate == "S":
        (q,) = qubits
        z = op_on(n, {q: "Z"})
        return (eye + z) / 2 + 1j * (eye - z) / 2
    if gate == "CZ":
        a, b = qubits
        return (eye + op_on(n, {a: "Z"}) + op_on(n, {b: "Z"}) - op_on(n, {a: "Z", b: "Z"})) / 2
    if gate == "CNOT":
        c, t = qubits
        zc = op_on(n, {c: "Z"})
        return (eye + zc) / 2 + (eye - zc) / 2 @ op_on(n, {t: "X"})
    raise ValueError(gate)


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1
    return psi


def expval(psi: np.ndarray, mat: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, mat @ psi)))


def hamiltonian_matrix(terms: list[tuple[float, str]]) -> np.ndarray:
    return sum(c * pauli_matrix(s) for c, s in terms)


def circuit_state(circuit, theta) -> np.ndarray:
    """Dense simulation of a :class:`rfqas.circuit.Circuit` from its gate list."""
    n = circuit.n_qubits
    psi = zero_state(n)
    for g in circuit.gates():
        if g.kind.value == "cz":
            psi = clifford_matrix(n, "CZ", g.qubits) @ psi
        else:
            axis = g.kind.value[-1].upper()
            psi = rotation(n, {q: axis for q in g.qubits}, theta[g.param]) @ psi
    return psi


def circuit_energy(circuit, h_terms: list[tuple[float, str]], theta) -> float:
    return expval(circuit_state(circuit, theta), hamiltonian_matrix(h_terms))


def ham_terms(h) -> list[tuple[float, str]]:
    return [(c, p.label()) for c, p in h.terms]


def all_matchings(n: int, edges: dict[tuple[int, int], float]):
    """Every matching of the graph, as a list of edges."""
    keys = sorted(edges)

    def rec(i, used, chosen):
        if i == len(keys):
            yield list(chosen)
            return
        yield from rec(i + 1, used, chosen)
        a, b = keys[i]
        if a not in used and b not in used:
            chosen.append(keys[i])
            yield from rec(i + 1, used | {a, b}, chosen)
            chosen.pop()

    yield from rec(0, frozenset(), [])


def brute_force_matching_weight(n: int, edges: dict[tuple[int, int], float]) -> float:
    return max(sum(edges[e] for e in m) for m in all_matchings(n, edges))


def stabilizer_group(gens: list[np.ndarray]) -> list[np.ndarray]:
    """All 2**n products of the generator matrices (signs included)."""
    group = []
    for r in range(len(gens) + 1):
        for sub in combinations(range(len(gens)), r):
            m = np.eye(gens[0].shape[0], dtype=complex)
            for i in sub:
                m = m @ gens[i]
            group.append(m)
    return group
