"""Relative landscape fluctuation estimated by Clifford sampling.

For a circuit with ``M`` parameters and Hamiltonian ``H = sum_j c_j h_j``::

    sigma  = sqrt(Var[L]) / sum_j |c_j|
    sigma0 = 1 / sqrt(2 M)
    rf     = sigma / sigma0

``L`` is linear in the cosine and sine of every angle, so its second moments
over uniform angles equal those over the quarter turns ``{0, pi/2, pi, 3pi/2}``;
the variance can therefore be sampled with a stabilizer simulator. Two
independent oracles live here as well: exhaustive enumeration of all ``4**M``
quarter-turn assignments, and continuous Monte Carlo on dense statevectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, vqe
from .circuit import Circuit
from .pauli import Hamiltonian

__all__ = [
    "FluctuationEstimate",
    "estimate_rf",
    "exact_rf_enumeration",
    "continuous_rf_montecarlo",
    "sample_assignments",
    "ENUMERATION_LIMIT",
]

ENUMERATION_LIMIT = 10**6
N_BOOTSTRAP = 200


@dataclass(frozen=True)
class FluctuationEstimate:
    sigma: float
    sigma0: float
    rf: float
    n_samples: int
    stderr_rf: float
    seed: object

    def to_dict(self) -> dict:
        seed = list(self.seed) if isinstance(self.seed, tuple) else self.seed
        return {"sigma": self.sigma, "sigma0": self.sigma0, "rf": self.rf,
                "stderr": self.stderr_rf, "n_samples": self.n_samples, "seed": seed}


def _seed_sequence(seed) -> np.random.SeedSequence:
    entropy = list(seed) if isinstance(seed, (tuple, list)) else seed
    return np.random.SeedSequence(entropy)


def sample_assignments(seed, n_samples: int, n_params: int) -> np.ndarray:
    """Uniform quarter-turn assignments, shape ``(n_samples, n_params)``.

    Entry ``(i, j)`` is the two-bit field at stream offset ``i * M + j`` of a
    Philox generator keyed by ``seed``, so every sample is a fixed function of
    ``(seed, i)``.
    """
    total = n_samples * n_params
    if total == 0:
        return np.zeros((n_samples, n_params), dtype=np.int8)
    key = _seed_sequence(seed).generate_state(2, np.uint64)
    words = np.random.Philox(key=key).random_raw(-(-total // 32))
    off = np.arange(total, dtype=np.uint64)
    vals = (words[off >> np.uint64(5)] >> (np.uint64(2) * (off & np.uint64(31)))) & np.uint64(3)
    return vals.astype(np.int8).reshape(n_samples, n_params)


def _rf_from_energies(e: np.ndarray, l1: float, M: int, ddof: int) -> tuple[float, float, float]:
    var = 0.0 if np.ptp(e) == 0 else float(np.var(e, ddof=ddof))
    sigma0 = 1.0 / math.sqrt(2 * M)
    sigma = math.sqrt(var) / l1
    return sigma, sigma0, sigma / sigma0


def _bootstrap_stderr(e: np.ndarray, l1: float, M: int, seed, n_boot: int = N_BOOTSTRAP) -> float:
    if np.ptp(e) == 0:
        return 0.0
    rng = np.random.default_rng(_seed_sequence(seed).spawn(1)[0])
    idx = rng.integers(0, e.size, size=(n_boot, e.size))
    boot = np.sqrt(np.var(e[idx], axis=1, ddof=1)) / l1 * math.sqrt(2 * M)
    return float(np.std(boot, ddof=1))


def _check_inputs(c: Circuit, h: Hamiltonian) -> None:
    if c.param_count < 1:
        raise ValueError("relative fluctuation needs at least one parameter (sigma0 = 1/sqrt(2M))")
    if len(h.terms) == 0:
        raise ValueError("Hamiltonian has no terms")
    if c.n_qubits != h.n_qubits:
        raise ValueError(f"circuit width {c.n_qubits} != Hamiltonian width {h.n_qubits}")


def estimate_rf(
    c: Circuit,
    h: Hamiltonian,
    n_samples: int = 1000,
    seed=0,
    workers: int = 1,
    backend: str | None = None,
) -> FluctuationEstimate:
    _check_inputs(c, h)
    if n_samples < 2:
        raise ValueError("need at least 2 samples for a variance")
    M = c.param_count
    assign = sample_assignments(seed, n_samples, M)
    e = kernels.clifford_energies(
        kernels.compile_circuit(c), kernels.compile_hamiltonian(h), assign,
        backend=backend, workers=workers,
    )
    sigma, sigma0, rf = _rf_from_energies(e, h.l1_norm, M, ddof=1)
    return FluctuationEstimate(sigma, sigma0, rf, n_samples, _bootstrap_stderr(e, h.l1_norm, M, seed), seed)


def _all_assignments(M: int, lo: int, hi: int) -> np.ndarray:
    idx = np.arange(lo, hi, dtype=np.int64)
    digits = (idx[:, None] >> (2 * np.arange(M, dtype=np.int64))) & 3
    return digits.astype(np.int8)


def exact_energies(c: Circuit, h: Hamiltonian, limit: int = ENUMERATION_LIMIT) -> np.ndarray:
    """Energy at every quarter-turn assignment, in base-4 counting order."""
    _check_inputs(c, h)
    M = c.param_count
    total = 4**M
    if total > limit:
        raise ValueError(
            f"exhaustive enumeration needs 4**{M} = {total} circuit evaluations; limit is {limit}"
        )
    program = kernels.compile_circuit(c)
    obs = kernels.compile_hamiltonian(h)
    step = 1 << 16
    return np.concatenate([
        kernels.clifford_energies(program, obs, _all_assignments(M, lo, min(total, lo + step)))
        for lo in range(0, total, step)
    ])


def exact_rf_enumeration(c: Circuit, h: Hamiltonian, limit: int = ENUMERATION_LIMIT) -> float:
    """Exact relative fluctuation (population variance over all ``4**M`` points)."""
    e = exact_energies(c, h, limit)
    return _rf_from_energies(e, h.l1_norm, c.param_count, ddof=0)[2]


def continuous_rf_montecarlo(
    c: Circuit, h: Hamiltonian, n_samples: int = 10_000, seed=0
) -> tuple[float, float]:
    """Relative fluctuation from uniform angles in ``[0, 2 pi)`` and dense simulation.

    Returns ``(rf, bootstrap standard error)``.
    """
    _check_inputs(c, h)
    if c.n_qubits > vqe.MAX_DENSE_QUBITS:
        raise ValueError(f"dense Monte Carlo is limited to {vqe.MAX_DENSE_QUBITS} qubits")
    if n_samples < 100:
        raise ValueError("continuous Monte Carlo needs at least 100 samples")
    M = c.param_count
    rng = np.random.default_rng(_seed_sequence(seed))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(n_samples, M))
    step = max(1, (1 << 18) >> c.n_qubits)
    e = np.concatenate([
        vqe.energies(vqe.simulate_batch(c, theta[lo:lo + step]), h)
        for lo in range(0, n_samples, step)
    ])
    rf = _rf_from_energies(e, h.l1_norm, M, ddof=1)[2]
    return rf, _bootstrap_stderr(e, h.l1_norm, M, seed)
