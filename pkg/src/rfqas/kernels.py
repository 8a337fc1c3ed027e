"""Batched Clifford-sampling backend.

The compiled extension ``rfqas._ckernels`` is used when it imports; otherwise
the numpy implementation in ``rfqas._kernels_py`` takes over. Set
``RFQAS_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels_py
from .circuit import Circuit
from .pauli import Hamiltonian, PauliString

try:
    if os.environ.get("RFQAS_PURE_PYTHON"):
        raise ImportError("fallback forced by RFQAS_PURE_PYTHON")
    from . import _ckernels
except ImportError:
    _ckernels = None

BACKEND = "cython" if _ckernels is not None else "numpy"
_IMPLS = {"numpy": _kernels_py.clifford_energies}
if _ckernels is not None:
    _IMPLS["cython"] = _ckernels.clifford_energies


def available_backends() -> tuple[str, ...]:
    return tuple(_IMPLS)


def _words(n: int) -> int:
    return (n + 63) // 64


def _split(mask: int, W: int) -> list[int]:
    return [(mask >> (64 * w)) & 0xFFFFFFFFFFFFFFFF for w in range(W)]


@dataclass(frozen=True)
class Program:
    """A circuit lowered to Pauli rotations at multiples of pi/2.

    ``param[o] >= 0`` means op ``o`` takes its quarter-turn count from the
    assignment; otherwise ``k[o]`` is fixed (CZ expansion).
    """

    n_qubits: int
    n_params: int
    x: np.ndarray
    z: np.ndarray
    param: np.ndarray
    k: np.ndarray


def compile_circuit(c: Circuit) -> Program:
    n = c.n_qubits
    W = _words(n)
    xs, zs, ps, ks = [], [], [], []

    def add(p: PauliString, param: int, k: int) -> None:
        xs.append(_split(p.x, W))
        zs.append(_split(p.z, W))
        ps.append(param)
        ks.append(k)

    for g in c.gates():
        if g.kind.parameterized:
            add(g.generator(n), g.param, 0)
        else:
            a, b = g.qubits
            # CZ ~ R_z(pi/2) x R_z(pi/2) . R_zz(-pi/2)
            add(PauliString.single(n, {a: "Z"}), -1, 1)
            add(PauliString.single(n, {b: "Z"}), -1, 1)
            add(PauliString.single(n, {a: "Z", b: "Z"}), -1, 3)
    shape = (len(xs), W)
    return Program(
        n_qubits=n,
        n_params=c.param_count,
        x=np.array(xs, dtype=np.uint64).reshape(shape),
        z=np.array(zs, dtype=np.uint64).reshape(shape),
        param=np.array(ps, dtype=np.int64),
        k=np.array(ks, dtype=np.int8),
    )


@dataclass(frozen=True)
class Observable:
    n_qubits: int
    x: np.ndarray
    z: np.ndarray
    coef: np.ndarray


def compile_hamiltonian(h: Hamiltonian) -> Observable:
    W = _words(h.n_qubits)
    shape = (len(h.terms), W)
    return Observable(
        n_qubits=h.n_qubits,
        x=np.array([_split(p.x, W) for _, p in h.terms], dtype=np.uint64).reshape(shape),
        z=np.array([_split(p.z, W) for _, p in h.terms], dtype=np.uint64).reshape(shape),
        coef=np.ascontiguousarray(h.coefficients, dtype=np.float64),
    )


def clifford_energies(
    program: Program,
    observable: Observable,
    assignments: np.ndarray,
    backend: str | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Energy at each Clifford assignment row (values in 0..3).

    Sample ``i`` of the output depends only on row ``i`` of ``assignments``,
    so the split across ``workers`` never changes the result.
    """
    if program.n_qubits != observable.n_qubits:
        raise ValueError("circuit and Hamiltonian widths differ")
    impl = _IMPLS[backend or BACKEND]
    assign = np.ascontiguousarray(assignments, dtype=np.int8)
    if assign.ndim != 2 or assign.shape[1] != program.n_params:
        raise ValueError(f"assignments must have shape (S, {program.n_params})")
    args = (program.x, program.z, program.param, program.k)
    tail = (observable.x, observable.z, observable.coef, program.n_qubits)
    S = assign.shape[0]
    if workers <= 1 or S < 2 * workers:
        return impl(*args, assign, *tail)
    bounds = np.linspace(0, S, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda lo_hi: impl(*args, assign[lo_hi[0]:lo_hi[1]], *tail),
                              zip(bounds[:-1], bounds[1:])))
    return np.concatenate(parts)
