"""Reference stabilizer tableau.

Each row is a Hermitian Pauli string stored as ``(x, z, sign)`` with integer
bitmasks, so the width is unbounded. This class is the readable engine used
for single queries and as the oracle for the batched kernels in
:mod:`rfqas.kernels`.
"""

from __future__ import annotations

from .pauli import PauliString, product_phase

__all__ = ["StabilizerTableau", "new_zero_state", "CLIFFORD_GATES"]

CLIFFORD_GATES = ("H", "S", "CNOT", "CZ")


def _anticommutes(x1: int, z1: int, x2: int, z2: int) -> bool:
    return ((x1 & z2) ^ (z1 & x2)).bit_count() & 1 == 1


class StabilizerTableau:
    """Stabilizer and destabilizer generators of an ``n``-qubit stabilizer state.

    Row ``i`` of ``stab`` and ``destab`` is a list ``[x, z, sign]`` with
    ``sign`` in ``{0, 1}`` meaning ``(-1)**sign``.
    """

    def __init__(self, n_qubits: int):
        if n_qubits < 1:
            raise ValueError("a tableau needs at least one qubit")
        self.n_qubits = n_qubits
        self.stab = [[0, 1 << q, 0] for q in range(n_qubits)]
        self.destab = [[1 << q, 0, 0] for q in range(n_qubits)]

    def copy(self) -> StabilizerTableau:
        t = StabilizerTableau.__new__(StabilizerTableau)
        t.n_qubits = self.n_qubits
        t.stab = [row[:] for row in self.stab]
        t.destab = [row[:] for row in self.destab]
        return t

    def stabilizers(self) -> list[PauliString]:
        return [PauliString(self.n_qubits, x, z, 2 * s) for x, z, s in self.stab]

    def destabilizers(self) -> list[PauliString]:
        return [PauliString(self.n_qubits, x, z, 2 * s) for x, z, s in self.destab]

    def _check_pauli(self, p: PauliString) -> None:
        if p.n_qubits != self.n_qubits:
            raise ValueError(f"Pauli width {p.n_qubits} does not match tableau width {self.n_qubits}")
        if p.phase != 0:
            raise ValueError("generator must be phase-free")

    def apply_pauli_rotation(self, generator: PauliString, k: int) -> None:
        """Conjugate by ``exp(-i (k pi/2) P / 2)``, dropping the global phase."""
        self._check_pauli(generator)
        if generator.is_identity():
            raise ValueError("identity generator only contributes a global phase")
        k &= 3
        if k == 0:
            return
        px, pz = generator.x, generator.z
        shift = 3 if k == 1 else 1  # (-i) or (+i) in front of P Q
        for row in self.stab + self.destab:
            x, z, s = row
            if not _anticommutes(px, pz, x, z):
                continue
            if k == 2:
                row[2] = s ^ 1
                continue
            e = (product_phase(px, pz, x, z) + shift + 2 * s) & 3
            # e is even: the product of two anticommuting Hermitian strings is i * Hermitian
            row[0] = x ^ px
            row[1] = z ^ pz
            row[2] = e >> 1

    def _rotate(self, symbols: dict[int, str], k: int) -> None:
        self.apply_pauli_rotation(PauliString.single(self.n_qubits, symbols), k)

    def apply_clifford(self, gate: str, qubits) -> None:
        """Apply ``H``, ``S``, ``CNOT`` (control, target) or ``CZ``.

        Gates are expanded into pi/2 Pauli rotations equal to the gate up to
        a global phase; each identity is checked against dense matrices in
        the test suite.
        """
        qubits = tuple(int(q) for q in (qubits if hasattr(qubits, "__iter__") else (qubits,)))
        arity = 1 if gate in ("H", "S") else 2 if gate in ("CNOT", "CZ") else None
        if arity is None:
            raise ValueError(f"unknown Clifford gate {gate!r}; expected one of {CLIFFORD_GATES}")
        if len(qubits) != arity:
            raise ValueError(f"{gate} acts on {arity} qubit(s), got {qubits}")
        if any(not 0 <= q < self.n_qubits for q in qubits):
            raise ValueError(f"qubit index out of range in {qubits}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit indices {qubits}")
        if gate == "S":
            self._rotate({qubits[0]: "Z"}, 1)
        elif gate == "H":
            # H ~ R_x(pi) R_y(pi/2)
            self._rotate({qubits[0]: "Y"}, 1)
            self._rotate({qubits[0]: "X"}, 2)
        elif gate == "CZ":
            self._cz(*qubits)
        else:
            c, t = qubits
            self.apply_clifford("H", t)
            self._cz(c, t)
            self.apply_clifford("H", t)

    def _cz(self, a: int, b: int) -> None:
        # CZ ~ R_z(pi/2) x R_z(pi/2) . R_zz(-pi/2)
        self._rotate({a: "Z"}, 1)
        self._rotate({b: "Z"}, 1)
        self._rotate({a: "Z", b: "Z"}, 3)

    def expectation(self, p: PauliString) -> int:
        """``<psi|P|psi>`` for a phase-free Pauli string: one of -1, 0, +1."""
        self._check_pauli(p)
        x, z = p.x, p.z
        for sx, sz, _ in self.stab:
            if _anticommutes(x, z, sx, sz):
                return 0
        # P = +/- product of the stabilizers whose destabilizer anticommutes with P
        ax = az = ph = 0
        for (dx, dz, _), (sx, sz, ss) in zip(self.destab, self.stab):
            if _anticommutes(x, z, dx, dz):
                ph += product_phase(ax, az, sx, sz) + 2 * ss
                ax ^= sx
                az ^= sz
        assert ax == x and az == z
        return 1 if ph & 3 == 0 else -1

    def is_consistent(self) -> bool:
        """Check the symplectic pairing between stabilizers and destabilizers."""
        n = self.n_qubits
        for i in range(n):
            xi, zi, _ = self.stab[i]
            for j in range(n):
                xj, zj, _ = self.stab[j]
                if _anticommutes(xi, zi, xj, zj):
                    return False
                dx, dz, _ = self.destab[j]
                if _anticommutes(xi, zi, dx, dz) != (i == j):
                    return False
        return True


def new_zero_state(n: int) -> StabilizerTableau:
    return StabilizerTableau(n)
