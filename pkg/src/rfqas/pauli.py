"""Pauli strings, Hamiltonians and the benchmark model generators.

A Pauli string on ``n`` qubits is stored as two integer bitmasks. Bit ``q`` of
``x`` and ``z`` encodes the factor on qubit ``q``::

    (x, z) = (0, 0) -> I,  (1, 0) -> X,  (1, 1) -> Y,  (0, 1) -> Z

Qubit 0 is the leftmost symbol of a text label such as ``"XZI"``. The global
phase is ``i**phase`` with ``phase`` in ``{0, 1, 2, 3}``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = [
    "PauliString",
    "Hamiltonian",
    "PauliParseError",
    "HamiltonianFormatError",
    "pauli_from_text",
    "multiply",
    "commutes",
    "product_phase",
    "build_hamiltonian",
    "read_hamiltonian",
    "write_hamiltonian",
    "HAMILTONIAN_KINDS",
    "random_hamiltonian",
]

_SYMBOL_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_SYMBOL = {v: k for k, v in _SYMBOL_BITS.items()}
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}

# Coefficients below this magnitude are dropped when a Hamiltonian is built.
DROP_TOL = 1e-12


class PauliParseError(ValueError):
    """Raised for text that is not a Pauli label."""

    def __init__(self, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"invalid Pauli symbol {text[position]!r} at index {position} in {text!r}")


class HamiltonianFormatError(ValueError):
    """Raised for malformed Hamiltonian files."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _popcount(v: int) -> int:
    return v.bit_count()


def product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent ``e`` (mod 4) such that ``P1 P2 = i**e P3`` for Hermitian P1, P2.

    Uses ``P = i**|x&z| X**x Z**z``, so the only reordering cost is moving
    ``Z**z1`` past ``X**x2``.
    """
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    e = _popcount(x1 & z1) + _popcount(x2 & z2) + 2 * _popcount(z1 & x2) - _popcount(x3 & z3)
    return e & 3


@dataclass(frozen=True, order=True)
class PauliString:
    n_qubits: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("mask has bits outside the qubit range")
        object.__setattr__(self, "phase", self.phase & 3)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits, 0, 0)

    @classmethod
    def single(cls, n_qubits: int, symbols: dict[int, str]) -> PauliString:
        """Build a string from ``{qubit: symbol}``; unspecified qubits are I."""
        x = z = 0
        for q, s in symbols.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range for width {n_qubits}")
            bx, bz = _SYMBOL_BITS[s]
            x |= bx << q
            z |= bz << q
        return cls(n_qubits, x, z)

    @property
    def x_bits(self) -> str:
        return "".join(str((self.x >> q) & 1) for q in range(self.n_qubits))

    @property
    def z_bits(self) -> str:
        return "".join(str((self.z >> q) & 1) for q in range(self.n_qubits))

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x | self.z
        return tuple(q for q in range(self.n_qubits) if (m >> q) & 1)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def without_phase(self) -> PauliString:
        return PauliString(self.n_qubits, self.x, self.z)

    def label(self) -> str:
        return "".join(
            _BITS_SYMBOL[((self.x >> q) & 1, (self.z >> q) & 1)] for q in range(self.n_qubits)
        )

    def __str__(self) -> str:
        return _PHASE_TEXT[self.phase] + self.label()

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)


def pauli_from_text(s: str, phase: int = 0) -> PauliString:
    if not s:
        raise ValueError("empty Pauli label")
    x = z = 0
    for q, ch in enumerate(s):
        bits = _SYMBOL_BITS.get(ch)
        if bits is None:
            raise PauliParseError(s, q)
        x |= bits[0] << q
        z |= bits[1] << q
    return PauliString(len(s), x, z, phase)


def _check_width(p: PauliString, q: PauliString) -> None:
    if p.n_qubits != q.n_qubits:
        raise ValueError(f"width mismatch: {p.n_qubits} vs {q.n_qubits}")


def multiply(p: PauliString, q: PauliString) -> PauliString:
    _check_width(p, q)
    e = product_phase(p.x, p.z, q.x, q.z)
    return PauliString(p.n_qubits, p.x ^ q.x, p.z ^ q.z, p.phase + q.phase + e)


def commutes(p: PauliString, q: PauliString) -> bool:
    _check_width(p, q)
    return _popcount((p.x & q.z) ^ (p.z & q.x)) % 2 == 0


@dataclass(frozen=True)
class Hamiltonian:
    """Real-weighted sum of phase-free Pauli strings in canonical order.

    Construct through :meth:`from_terms`, which merges duplicates, drops
    near-zero coefficients and sorts terms by ``(x, z)``.
    """

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...]
    l1_norm: float = field(compare=False)

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[tuple[float, PauliString]]) -> Hamiltonian:
        # fsum per key keeps the merged value independent of term order
        acc: dict[tuple[int, int], list[float]] = {}
        for coef, p in terms:
            if p.n_qubits != n_qubits:
                raise ValueError(f"term {p} has width {p.n_qubits}, expected {n_qubits}")
            c = float(coef)
            if p.phase == 2:
                c = -c
            elif p.phase != 0:
                raise ValueError(f"term {p} has an imaginary phase")
            acc.setdefault((p.x, p.z), []).append(c)
        merged = ((key, math.fsum(cs)) for key, cs in sorted(acc.items()))
        kept = tuple(
            (c, PauliString(n_qubits, x, z))
            for (x, z), c in merged
            if abs(c) > DROP_TOL
        )
        return cls(n_qubits, kept, math.fsum(abs(c) for c, _ in kept))

    @classmethod
    def from_labels(cls, pairs: Iterable[tuple[float, str]]) -> Hamiltonian:
        parsed = [(c, pauli_from_text(s)) for c, s in pairs]
        if not parsed:
            raise ValueError("no terms")
        return cls.from_terms(parsed[0][1].n_qubits, parsed)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    def scaled(self, factor: float) -> Hamiltonian:
        return Hamiltonian.from_terms(self.n_qubits, ((factor * c, p) for c, p in self.terms))

    def to_dense(self) -> np.ndarray:
        """Dense matrix in the basis where bit ``q`` of the index is qubit ``q``."""
        dim = 1 << self.n_qubits
        mat = np.zeros((dim, dim), dtype=complex)
        idx = np.arange(dim)
        for c, p in self.terms:
            cols = idx
            rows = idx ^ p.x
            mat[rows, cols] += c * pauli_column_phases(p, idx)
        return mat

    def __str__(self) -> str:
        return "\n".join(f"{c:+.12g} {p.label()}" for c, p in self.terms)


def pauli_column_phases(p: PauliString, basis: np.ndarray) -> np.ndarray:
    """Phase of ``P|b>`` for each basis index ``b``; the image is ``|b ^ x>``."""
    parity = np.bitwise_count(basis & p.z) & 1
    return (1j ** ((p.x & p.z).bit_count() + p.phase)) * (1 - 2 * parity.astype(float))


# --- benchmark models -------------------------------------------------------

HAMILTONIAN_KINDS = ("cluster", "heisenberg", "ising", "scrambled")


def _cluster(n: int) -> list[tuple[float, PauliString]]:
    terms = [(-1.0, PauliString.single(n, {0: "X", 1: "Z"}))]
    for j in range(1, n - 1):
        terms.append((-1.0, PauliString.single(n, {j - 1: "Z", j: "X", j + 1: "Z"})))
    terms.append((-1.0, PauliString.single(n, {n - 2: "Z", n - 1: "X"})))
    return terms


def _heisenberg(n: int) -> list[tuple[float, PauliString]]:
    terms = []
    for j in range(n - 1):
        for s in "XYZ":
            terms.append((-1.0, PauliString.single(n, {j: s, j + 1: s})))
    terms += [(-1.0, PauliString.single(n, {j: "Z"})) for j in range(n)]
    return terms


def _ising(n: int) -> list[tuple[float, PauliString]]:
    terms = [(-1.0, PauliString.single(n, {j: "Z", j + 1: "Z"})) for j in range(n - 1)]
    terms += [(-1.0, PauliString.single(n, {j: "X"})) for j in range(n)]
    return terms


def brickwall_pairs(n: int, depth: int) -> list[tuple[int, int]]:
    """Two-qubit block positions of a depth-``depth`` brickwall, in gate order."""
    pairs = []
    for _ in range(depth):
        pairs += [(j, j + 1) for j in range(0, n - 1, 2)]
        pairs += [(j, j + 1) for j in range(1, n - 1, 2)]
    return pairs


# Rotation generators of one two-qubit block, in application order:
# local ZYZ Euler rotations, the XX/YY/ZZ core, local ZYZ again.
_BLOCK_PATTERN = (
    ("Z", None), ("Y", None), ("Z", None),
    (None, "Z"), (None, "Y"), (None, "Z"),
    ("X", "X"), ("Y", "Y"), ("Z", "Z"),
    ("Z", None), ("Y", None), ("Z", None),
    (None, "Z"), (None, "Y"), (None, "Z"),
)


def scrambling_rotations(n: int, depth: int, seed: int) -> list[tuple[PauliString, float]]:
    """Pauli rotations ``exp(-i theta P / 2)`` of the random brickwall, in gate order."""
    rng = np.random.default_rng(seed)
    rotations = []
    for a, b in brickwall_pairs(n, depth):
        angles = rng.uniform(0.0, 2.0 * np.pi, size=len(_BLOCK_PATTERN))
        for (sa, sb), theta in zip(_BLOCK_PATTERN, angles):
            symbols = {}
            if sa:
                symbols[a] = sa
            if sb:
                symbols[b] = sb
            rotations.append((PauliString.single(n, symbols), float(theta)))
    return rotations


def conjugate_by_rotation(
    terms: dict[tuple[int, int], float], gen: PauliString, theta: float
) -> dict[tuple[int, int], float]:
    """Return ``R^dag H R`` for ``R = exp(-i theta P / 2)`` as a new term dict.

    Commuting terms pass through; an anticommuting ``Q`` becomes
    ``cos(theta) Q + i sin(theta) P Q``.
    """
    c, s = math.cos(theta), math.sin(theta)
    out: dict[tuple[int, int], float] = {}
    px, pz = gen.x, gen.z
    for (x, z), coef in terms.items():
        if _popcount((px & z) ^ (pz & x)) % 2 == 0:
            out[(x, z)] = out.get((x, z), 0.0) + coef
            continue
        e = product_phase(px, pz, x, z)
        # i * i**e is real because e is odd for anticommuting strings
        sign = 1.0 if (e + 1) & 3 == 0 else -1.0
        out[(x, z)] = out.get((x, z), 0.0) + coef * c
        key = (x ^ px, z ^ pz)
        out[key] = out.get(key, 0.0) + coef * s * sign
    return {k: v for k, v in out.items() if abs(v) > DROP_TOL}


def _scrambled(n: int, seed: int, depth: int) -> list[tuple[float, PauliString]]:
    terms: dict[tuple[int, int], float] = {(0, 1 << j): -1.0 for j in range(n)}
    # H_r = V^dag H_Z V with V = G_m ... G_1: peel from the last-applied gate.
    for gen, theta in reversed(scrambling_rotations(n, depth, seed)):
        terms = conjugate_by_rotation(terms, gen, theta)
    return [(c, PauliString(n, x, z)) for (x, z), c in terms.items()]


def build_hamiltonian(
    kind: str, n: int, seed: int | None = None, depth: int | None = None
) -> Hamiltonian:
    if n < 2:
        raise ValueError(f"need at least 2 qubits, got {n}")
    if kind == "scrambled":
        if seed is None:
            raise ValueError("scrambled Hamiltonian requires a seed")
        terms = _scrambled(n, seed, 1 if depth is None else depth)
    elif seed is not None or depth is not None:
        raise ValueError(f"seed/depth only apply to scrambled Hamiltonians, not {kind!r}")
    elif kind == "cluster":
        terms = _cluster(n)
    elif kind == "heisenberg":
        terms = _heisenberg(n)
    elif kind == "ising":
        terms = _ising(n)
    else:
        raise ValueError(f"unknown Hamiltonian kind {kind!r}; choose from {HAMILTONIAN_KINDS}")
    return Hamiltonian.from_terms(n, terms)


def random_hamiltonian(rng: np.random.Generator, n: int, n_terms: int) -> Hamiltonian:
    """``n_terms`` random non-identity strings with standard-normal weights (before merging)."""
    terms = []
    while len(terms) < n_terms:
        x, z = int(rng.integers(1 << n)), int(rng.integers(1 << n))
        if x or z:
            terms.append((float(rng.normal()), PauliString(n, x, z)))
    return Hamiltonian.from_terms(n, terms)


# --- text IO ----------------------------------------------------------------

def parse_hamiltonian(text: str) -> Hamiltonian:
    pairs: list[tuple[float, PauliString]] = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise HamiltonianFormatError(f"expected '<coefficient> <pauli>', got {raw!r}", lineno)
        try:
            coef = float(fields[0].replace("−", "-"))
        except ValueError:
            raise HamiltonianFormatError(f"bad coefficient {fields[0]!r}", lineno) from None
        if not math.isfinite(coef):
            raise HamiltonianFormatError(f"non-finite coefficient {fields[0]!r}", lineno)
        try:
            p = pauli_from_text(fields[1])
        except PauliParseError as exc:
            raise HamiltonianFormatError(str(exc), lineno) from None
        if width is None:
            width = p.n_qubits
        elif p.n_qubits != width:
            raise HamiltonianFormatError(
                f"Pauli string length {p.n_qubits} differs from {width}", lineno
            )
        pairs.append((coef, p))
    if width is None:
        raise HamiltonianFormatError("no terms found")
    return Hamiltonian.from_terms(width, pairs)


def read_hamiltonian(path: str | os.PathLike) -> Hamiltonian:
    with open(path, encoding="utf-8") as fh:
        return parse_hamiltonian(fh.read())


def format_hamiltonian(h: Hamiltonian) -> str:
    return "".join(f"{c!r} {p.label()}\n" for c, p in h.terms)


def write_hamiltonian(h: Hamiltonian, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_hamiltonian(h))
