"""Dense statevector verification backend: simulation, gradients, Adam training.

Basis index bit ``q`` is qubit ``q``. All rotations are ``exp(-i theta P / 2)``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .circuit import Circuit
from .pauli import Hamiltonian, PauliString, pauli_column_phases

__all__ = [
    "MAX_DENSE_QUBITS",
    "TrainConfig",
    "TrainResult",
    "simulate",
    "simulate_batch",
    "energy",
    "energies",
    "gradient",
    "adjoint_gradient",
    "train",
    "exact_ground_energy",
    "hamiltonian_matrix",
]

MAX_DENSE_QUBITS = 12


def _check_width(n: int) -> None:
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense simulation is limited to {MAX_DENSE_QUBITS} qubits, got {n}")


@lru_cache(maxsize=4096)
def _pauli_action(n: int, x: int, z: int) -> tuple[np.ndarray, np.ndarray]:
    """Gather index and phase so that ``(P psi)[c] = phase[c] * psi[perm[c]]``."""
    idx = np.arange(1 << n)
    perm = idx ^ x
    phase = pauli_column_phases(PauliString(n, x, z), perm)
    return perm, phase


@lru_cache(maxsize=1024)
def _cz_diag(n: int, a: int, b: int) -> np.ndarray:
    idx = np.arange(1 << n)
    both = ((idx >> a) & 1) & ((idx >> b) & 1)
    return 1.0 - 2.0 * both


def _ops(c: Circuit):
    """(perm, phase, param) for rotations and (diag, None, -1) for CZ, in order."""
    n = c.n_qubits
    out = []
    for g in c.gates():
        if g.kind.parameterized:
            p = g.generator(n)
            perm, phase = _pauli_action(n, p.x, p.z)
            out.append((perm, phase, g.param))
        else:
            out.append((_cz_diag(n, *g.qubits), None, -1))
    return out


def _rotate(psi: np.ndarray, perm, phase, theta: np.ndarray, sign: float = 1.0) -> np.ndarray:
    half = 0.5 * theta[:, None]
    return np.cos(half) * psi - (sign * 1j) * np.sin(half) * (phase * psi[:, perm])


def _as_batch(c: Circuit, params) -> np.ndarray:
    theta = np.atleast_2d(np.asarray(params, dtype=float))
    if theta.shape[1] != c.param_count:
        raise ValueError(f"expected {c.param_count} parameters, got {theta.shape[1]}")
    return theta


def simulate_batch(c: Circuit, params) -> np.ndarray:
    """States for each row of ``params``; shape ``(B, 2**n)``."""
    _check_width(c.n_qubits)
    theta = _as_batch(c, params)
    psi = np.zeros((theta.shape[0], 1 << c.n_qubits), dtype=complex)
    psi[:, 0] = 1.0
    for a, phase, p in _ops(c):
        if p < 0:
            psi = psi * a
        else:
            psi = _rotate(psi, a, phase, theta[:, p])
    return psi


def simulate(c: Circuit, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (c.param_count,):
        raise ValueError(f"expected {c.param_count} parameters, got shape {params.shape}")
    return simulate_batch(c, params[None, :])[0]


@lru_cache(maxsize=64)
def _matrix_cached(h: Hamiltonian) -> sp.csr_matrix:
    n = h.n_qubits
    dim = 1 << n
    idx = np.arange(dim)
    rows, cols, data = [], [], []
    for coef, p in h.terms:
        rows.append(idx ^ p.x)
        cols.append(idx)
        data.append(coef * pauli_column_phases(p, idx))
    return sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()


def hamiltonian_matrix(h: Hamiltonian) -> sp.csr_matrix:
    _check_width(h.n_qubits)
    return _matrix_cached(h)


def _apply_h(h: Hamiltonian, psi: np.ndarray) -> np.ndarray:
    return np.asarray((hamiltonian_matrix(h) @ psi.T).T)


def energies(states: np.ndarray, h: Hamiltonian) -> np.ndarray:
    states = np.atleast_2d(states)
    if states.shape[1] != 1 << h.n_qubits:
        raise ValueError(f"state dimension {states.shape[1]} does not match {h.n_qubits} qubits")
    val = np.einsum("bi,bi->b", states.conj(), _apply_h(h, states))
    if np.any(np.abs(val.imag) > 1e-10 * max(1.0, h.l1_norm)):
        raise ArithmeticError("energy has a non-negligible imaginary part")
    return val.real


def energy(state: np.ndarray, h: Hamiltonian) -> float:
    state = np.asarray(state)
    if state.ndim != 1:
        raise ValueError("energy expects a single state vector")
    return float(energies(state[None, :], h)[0])


def gradient(c: Circuit, params, h: Hamiltonian) -> np.ndarray:
    """Parameter-shift gradient: ``(L(t + pi/2) - L(t - pi/2)) / 2`` per parameter."""
    theta = np.asarray(params, dtype=float)
    M = c.param_count
    if theta.shape != (M,):
        raise ValueError(f"expected {M} parameters, got shape {theta.shape}")
    shifts = np.repeat(theta[None, :], 2 * M, axis=0)
    shifts[np.arange(M), np.arange(M)] += np.pi / 2
    shifts[M + np.arange(M), np.arange(M)] -= np.pi / 2
    e = energies(simulate_batch(c, shifts), h)
    return 0.5 * (e[:M] - e[M:])


def adjoint_gradient(c: Circuit, params, h: Hamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """Energies and gradients for a batch of parameter rows by reverse-mode sweep.

    Uses ``dL/dtheta_k = Im <lam_k| P_k |psi_k>``, where ``psi_k`` is the state
    after gate ``k`` and ``lam_k`` the back-propagated ``H psi``.
    """
    _check_width(c.n_qubits)
    theta = _as_batch(c, params)
    ops = _ops(c)
    psi = np.zeros((theta.shape[0], 1 << c.n_qubits), dtype=complex)
    psi[:, 0] = 1.0
    for a, phase, p in ops:
        psi = psi * a if p < 0 else _rotate(psi, a, phase, theta[:, p])
    lam = _apply_h(h, psi)
    e = np.einsum("bi,bi->b", psi.conj(), lam).real
    grad = np.zeros_like(theta)
    for a, phase, p in reversed(ops):
        if p < 0:
            psi = psi * a
            lam = lam * a
            continue
        grad[:, p] = np.einsum("bi,bi->b", lam.conj(), phase * psi[:, a]).imag
        psi = _rotate(psi, a, phase, theta[:, p], sign=-1.0)
        lam = _rotate(lam, a, phase, theta[:, p], sign=-1.0)
    return e, grad


def exact_ground_energy(h: Hamiltonian) -> float:
    _check_width(h.n_qubits)
    if h.n_qubits <= 10:
        return float(np.linalg.eigvalsh(h.to_dense())[0])
    mat = hamiltonian_matrix(h)
    vals, vecs = spla.eigsh(mat, k=1, which="SA", tol=1e-12)
    v = vecs[:, 0]
    if np.linalg.norm(mat @ v - vals[0] * v) > 1e-9 * max(1.0, h.l1_norm):
        raise ArithmeticError("ground-state solver did not converge")
    return float(vals[0])


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    max_iters: int = 500
    n_restarts: int = 100
    tol: float = 1e-6
    patience: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    workers: int = 1
    timeout_secs: float | None = None

    def __post_init__(self):
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


@dataclass
class TrainResult:
    best_energy: float
    mean_energy: float
    e0: float
    e_ratio: float
    mean_e_ratio: float
    final_energies: list[float]
    iterations: list[int]
    timed_out: bool = False
    curves: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "best_energy": self.best_energy,
            "mean_energy": self.mean_energy,
            "e0": self.e0,
            "e_ratio": self.e_ratio,
            "mean_e_ratio": self.mean_e_ratio,
            "final_energies": self.final_energies,
            "iterations": self.iterations,
            "timed_out": self.timed_out,
        }

    def curve_rows(self):
        """``(restart, iteration, energy)`` rows; iteration 0 is the initial point."""
        for r, row in enumerate(self.curves):
            for it, val in enumerate(row):
                if not math.isnan(val):
                    yield r, it, float(val)


def initial_parameters(M: int, n_restarts: int, seed: int) -> np.ndarray:
    """Uniform ``[0, 2 pi)`` starts; restart ``r`` draws from stream ``(seed, r)``."""
    return np.stack([
        np.random.default_rng([seed, r]).uniform(0.0, 2.0 * np.pi, size=M)
        for r in range(n_restarts)
    ]) if M else np.zeros((n_restarts, 0))


def _adam_block(c, h, theta, cfg, deadline):
    R, M = theta.shape
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    curves = np.full((R, cfg.max_iters + 1), np.nan)
    active = np.ones(R, dtype=bool)
    stall = np.zeros(R, dtype=int)
    iters = np.zeros(R, dtype=int)
    prev = np.full(R, np.nan)
    timed_out = False
    for t in range(1, cfg.max_iters + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        if deadline is not None and time.monotonic() > deadline:
            timed_out = True
            break
        e, g = adjoint_gradient(c, theta[idx], h)
        curves[idx, t - 1] = e
        close = np.abs(e - prev[idx]) < cfg.tol
        stall[idx] = np.where(close, stall[idx] + 1, 0)
        prev[idx] = e
        done = stall[idx] >= cfg.patience
        active[idx[done]] = False
        step = idx[~done]
        g = g[~done]
        m[step] = cfg.beta1 * m[step] + (1 - cfg.beta1) * g
        v[step] = cfg.beta2 * v[step] + (1 - cfg.beta2) * g * g
        # per-restart step count drives bias correction
        tt = (iters[step] + 1)[:, None]
        mhat = m[step] / (1 - cfg.beta1 ** tt)
        vhat = v[step] / (1 - cfg.beta2 ** tt)
        theta[step] -= cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.eps)
        iters[step] += 1
    final = energies(simulate_batch(c, theta), h)
    rows = np.arange(R)
    curves[rows, iters] = final
    return final, iters, curves, timed_out


def train(c: Circuit, h: Hamiltonian, cfg: TrainConfig | None = None, e0: float | None = None) -> TrainResult:
    """Independent Adam runs from uniform random starts; best and mean reported."""
    cfg = cfg or TrainConfig()
    if c.n_qubits != h.n_qubits:
        raise ValueError("circuit and Hamiltonian widths differ")
    _check_width(c.n_qubits)
    if e0 is None:
        e0 = exact_ground_energy(h)
    if abs(e0) < 1e-12:
        raise ValueError("ground energy is zero; E/E0 is undefined")
    deadline = None if cfg.timeout_secs is None else time.monotonic() + cfg.timeout_secs
    theta = initial_parameters(c.param_count, cfg.n_restarts, cfg.seed)
    chunks = np.array_split(np.arange(cfg.n_restarts), max(1, min(cfg.workers, cfg.n_restarts)))
    if len(chunks) == 1:
        results = [_adam_block(c, h, theta, cfg, deadline)]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(lambda ix: _adam_block(c, h, theta[ix].copy(), cfg, deadline), chunks))
    final = np.concatenate([r[0] for r in results])
    iters = np.concatenate([r[1] for r in results])
    curves = np.concatenate([r[2] for r in results])
    best = float(final.min())
    mean = float(final.mean())
    return TrainResult(
        best_energy=best,
        mean_energy=mean,
        e0=float(e0),
        e_ratio=best / e0,
        mean_e_ratio=mean / e0,
        final_energies=[float(v) for v in final],
        iterations=[int(i) for i in iters],
        timed_out=any(r[3] for r in results),
        curves=curves,
    )
