"""Two-level circuit search driven by the relative fluctuation.

Level one grows the circuit a layer at a time, picking the pool template with
the best decayed score. Level two greedily deletes the gate whose removal
gives the highest relative fluctuation.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

from .circuit import Circuit, Layer, append_layer, remove_gate
from .fluctuation import estimate_rf
from .layergen import LayerPool
from .pauli import Hamiltonian

__all__ = [
    "SearchConfig",
    "SearchError",
    "SearchTimeout",
    "CandidateScore",
    "SearchStep",
    "SearchTrace",
    "EliminationRound",
    "EliminationTrace",
    "decay_factor",
    "penalized_score",
    "score_candidate",
    "layerwise_search",
    "eliminate_redundancy",
]

# seed-stream tags
_TAG_SEARCH = 0
_TAG_ELIMINATE = 1
_TAG_BASELINE = 2

# scores within this relative distance count as tied (earliest wins)
_TIE_RTOL = 1e-9


class SearchError(RuntimeError):
    pass


class SearchTimeout(TimeoutError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass
class SearchConfig:
    delta: float = 0.8
    window: int = 5
    epsilon: float = 0.3
    l_min: int = 4
    l_max: int = 40
    n_samples: int = 1000
    seed: int = 0
    elimination_ratio: float = 0.2
    elimination_rounds: int | None = None
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 1 <= self.l_min <= self.l_max:
            raise ValueError("need 1 <= l_min <= l_max")
        if not 0 <= self.elimination_ratio < 1:
            raise ValueError("elimination_ratio must lie in [0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")


def decay_factor(c: Circuit, label: str, delta: float = 0.8, window: int = 5) -> float:
    """``delta ** d`` where ``d`` counts ``label`` among the last ``window`` layers of ``c``."""
    recent = c.labels[-window:] if window else ()
    return delta ** sum(1 for lab in recent if lab == label)


def penalized_score(rf: float, alpha: float) -> float:
    """Score that peaks at ``rf = 1``: ``max(0, min(rf, 2 - rf)) * alpha``."""
    return max(0.0, min(rf, 2.0 - rf)) * alpha


@dataclass
class CandidateScore:
    label: str
    rf: float | None
    stderr: float | None
    alpha: float
    score_raw: float | None
    score: float | None

    @property
    def eligible(self) -> bool:
        return self.score is not None


def score_candidate(c: Circuit, template: Layer, h: Hamiltonian, cfg: SearchConfig, seed=None) -> CandidateScore:
    cand = append_layer(c, template)
    if cand.param_count == 0:
        raise ValueError(f"circuit with {template.label!r} has no parameters; relative fluctuation undefined")
    est = estimate_rf(cand, h, cfg.n_samples, seed=cfg.seed if seed is None else seed, workers=cfg.workers)
    alpha = decay_factor(c, template.label, cfg.delta, cfg.window)
    return CandidateScore(template.label, est.rf, est.stderr_rf, alpha,
                          est.rf * alpha, penalized_score(est.rf, alpha))


def _argmax(values: list[float | None]) -> int | None:
    best = None
    for i, v in enumerate(values):
        if v is None:
            continue
        if best is None or v > values[best] + _TIE_RTOL * max(1.0, abs(values[best])):
            best = i
    return best


@dataclass
class SearchStep:
    step: int
    candidates: list[CandidateScore]
    chosen: str
    gate_count: int
    param_count: int

    @property
    def chosen_score(self) -> CandidateScore:
        return next(cs for cs in self.candidates if cs.label == self.chosen)


@dataclass
class SearchTrace:
    steps: list[SearchStep] = field(default_factory=list)

    def chosen_labels(self) -> list[str]:
        return [s.chosen for s in self.steps]

    def to_dict(self) -> dict:
        return {"steps": [
            {"step": s.step, "chosen": s.chosen, "gate_count": s.gate_count,
             "param_count": s.param_count, "candidates": [asdict(cs) for cs in s.candidates]}
            for s in self.steps
        ]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["step", "label", "rf", "stderr", "alpha", "score_raw", "score", "chosen"])
        for s in self.steps:
            for cs in s.candidates:
                w.writerow([s.step, cs.label, _fmt(cs.rf), _fmt(cs.stderr), cs.alpha,
                            _fmt(cs.score_raw), _fmt(cs.score), int(cs.label == s.chosen)])
        return buf.getvalue()

    def replay(self, pool: LayerPool, initial: Circuit) -> Circuit:
        c = initial
        for s in self.steps:
            c = append_layer(c, pool.get(s.chosen))
        return c


def _fmt(v):
    return "" if v is None else repr(v)


def _check_deadline(deadline: float | None, what: str, partial=None) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise SearchTimeout(f"time budget exhausted during {what}", partial)


def layerwise_search(
    h: Hamiltonian,
    pool: LayerPool,
    cfg: SearchConfig | None = None,
    initial: Circuit | None = None,
    deadline: float | None = None,
) -> tuple[Circuit, SearchTrace]:
    """Grow a circuit layer by layer from ``initial`` (empty by default).

    Templates that would leave the circuit without parameters are recorded
    as ineligible for that step. The loop stops after ``l_max`` layers or
    once the chosen score exceeds ``1 - epsilon`` at depth ``>= l_min``.
    """
    cfg = cfg or SearchConfig()
    if len(pool) == 0:
        raise SearchError("layer pool is empty")
    c = initial if initial is not None else Circuit(h.n_qubits)
    if c.n_qubits != h.n_qubits:
        raise ValueError("initial circuit and Hamiltonian widths differ")
    trace = SearchTrace()
    step = 0
    while c.depth < cfg.l_max:
        scores = []
        for idx, template in enumerate(pool):
            _check_deadline(deadline, "layer-wise search", (c, trace))
            if c.param_count + template.n_params == 0:
                alpha = decay_factor(c, template.label, cfg.delta, cfg.window)
                scores.append(CandidateScore(template.label, None, None, alpha, None, None))
                continue
            scores.append(score_candidate(c, template, h, cfg, seed=(cfg.seed, _TAG_SEARCH, step, idx)))
        best = _argmax([cs.score for cs in scores])
        if best is None:
            raise SearchError(f"no appendable template at step {step}")
        c = append_layer(c, pool.templates[best])
        trace.steps.append(SearchStep(step, scores, pool.templates[best].label, c.gate_count, c.param_count))
        if scores[best].score > 1.0 - cfg.epsilon and c.depth >= cfg.l_min:
            break
        step += 1
    return c, trace


@dataclass
class EliminationRound:
    round: int
    rf_before: float
    stderr_before: float
    candidates: list[tuple[int, str, float]]
    removed: int | None
    removed_gate: str | None
    rf_after: float | None


@dataclass
class EliminationTrace:
    budget: int
    rounds: list[EliminationRound] = field(default_factory=list)

    def removed_positions(self) -> list[int]:
        return [r.removed for r in self.rounds if r.removed is not None]

    def to_dict(self) -> dict:
        return {"budget": self.budget, "rounds": [
            {"round": r.round, "rf_before": r.rf_before, "stderr_before": r.stderr_before,
             "removed": r.removed, "removed_gate": r.removed_gate, "rf_after": r.rf_after,
             "candidates": [{"position": p, "gate": g, "rf": v} for p, g, v in r.candidates]}
            for r in self.rounds
        ]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["round", "position", "gate", "rf", "removed"])
        for r in self.rounds:
            for p, g, v in r.candidates:
                w.writerow([r.round, p, g, repr(v), int(p == r.removed)])
        return buf.getvalue()


def _describe(c: Circuit, position: int) -> str:
    g = c.gates()[position]
    return f"{g.kind.value}{list(g.qubits)}"


def elimination_budget(c: Circuit, cfg: SearchConfig) -> int:
    budget = math.ceil(round(cfg.elimination_ratio * c.gate_count, 9))
    if cfg.elimination_rounds is not None:
        budget = min(budget, cfg.elimination_rounds)
    return budget


def eliminate_redundancy(
    c: Circuit, h: Hamiltonian, cfg: SearchConfig | None = None, deadline: float | None = None
) -> tuple[Circuit, EliminationTrace]:
    """Remove up to ``ceil(ratio * gate_count)`` gates, one argmax per round.

    A round removes the gate whose deletion leaves the highest relative
    fluctuation, provided that value is at least the current one minus its
    bootstrap standard error; otherwise elimination stops.
    """
    cfg = cfg or SearchConfig()
    trace = EliminationTrace(elimination_budget(c, cfg))
    if trace.budget == 0 or c.param_count < 1:
        return c, trace
    current = estimate_rf(c, h, cfg.n_samples, seed=(cfg.seed, _TAG_BASELINE), workers=cfg.workers)
    for rnd in range(trace.budget):
        cands = []
        ests = []
        for pos, g in enumerate(c.gates()):
            if g.kind.parameterized and c.param_count == 1:
                continue
            _check_deadline(deadline, "redundancy elimination", (c, trace))
            est = estimate_rf(remove_gate(c, pos), h, cfg.n_samples,
                              seed=(cfg.seed, _TAG_ELIMINATE, rnd, pos), workers=cfg.workers)
            cands.append((pos, _describe(c, pos), est.rf))
            ests.append(est)
        best = _argmax([v for _, _, v in cands])
        record = EliminationRound(rnd, current.rf, current.stderr_rf, cands, None, None, None)
        trace.rounds.append(record)
        if best is None or cands[best][2] < current.rf - current.stderr_rf:
            break
        pos = cands[best][0]
        record.removed, record.removed_gate, record.rf_after = pos, cands[best][1], cands[best][2]
        c = remove_gate(c, pos)
        current = ests[best]
    return c, trace
