import csv
import io
import json
import math
import time

import pytest

from rfqas.circuit import Circuit, Gate, GateKind, Layer, append_layer, pair_layer, remove_gate, transversal_layer
from rfqas.fluctuation import exact_rf_enumeration
from rfqas.layergen import LayerPool, build_layer_pool, interaction_graph
from rfqas.pauli import Hamiltonian, build_hamiltonian
from rfqas.search import (
    SearchConfig,
    SearchError,
    SearchTimeout,
    decay_factor,
    elimination_budget,
    eliminate_redundancy,
    layerwise_search,
    penalized_score,
    score_candidate,
)

RY = transversal_layer(GateKind.RY, 2)


def labelled(labels, n=2):
    c = Circuit(n)
    for lab in labels:
        c = append_layer(c, transversal_layer(GateKind.RY, n, lab))
    return c


class TestScores:
    def test_decay_absent(self):
        assert decay_factor(labelled(["a", "b", "c", "d", "e", "f"]), "z") == 1.0

    def test_decay_twice_in_window(self):
        assert decay_factor(labelled(["x", "a", "b", "x", "c"]), "x") == pytest.approx(0.64, abs=1e-15)

    def test_decay_only_counts_window(self):
        assert decay_factor(labelled(["x", "a", "b", "c", "d", "e"]), "x") == 1.0

    def test_decay_empty(self):
        assert decay_factor(Circuit(2), "ry") == 1.0

    def test_penalized(self):
        assert penalized_score(0.7, 1.0) == 0.7
        assert penalized_score(1.3, 0.5) == pytest.approx(0.35)
        assert penalized_score(2.5, 1.0) == 0.0

    def test_first_step_alpha_one(self):
        h = Hamiltonian.from_labels([(-1.0, "ZI"), (-1.0, "IZ")])
        cs = score_candidate(Circuit(2), RY, h, SearchConfig())
        assert cs.alpha == 1.0 and cs.score_raw == cs.rf

    def test_repeated_three_times(self):
        h = Hamiltonian.from_labels([(-1.0, "ZI"), (-1.0, "IZ")])
        c = labelled(["ry", "ry", "ry"])
        cs = score_candidate(c, RY, h, SearchConfig())
        assert cs.alpha == pytest.approx(0.512, abs=1e-15)
        assert cs.score_raw == pytest.approx(cs.rf * 0.512)

    def test_cz_first_layer_is_an_error(self):
        h = Hamiltonian.from_labels([(-1.0, "ZZ")])
        with pytest.raises(ValueError):
            score_candidate(Circuit(2), pair_layer(GateKind.CZ, [(0, 1)], "cz-1"), h, SearchConfig())


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(delta=0), dict(delta=1.5), dict(window=0), dict(epsilon=0),
                                    dict(l_min=5, l_max=4), dict(elimination_ratio=1.0), dict(n_samples=1),
                                    dict(seed=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SearchConfig(**kw)


class TestLayerwise:
    def test_single_template_trajectory(self):
        h = Hamiltonian.from_labels([(-1.0, "ZI"), (-1.0, "IZ")])
        pool = LayerPool((RY,))
        c, trace = layerwise_search(h, pool, SearchConfig(l_min=3, l_max=3))
        assert c.labels == ("ry", "ry", "ry")
        assert [s.candidates[0].alpha for s in trace.steps] == pytest.approx([1.0, 0.8, 0.64], abs=1e-15)

    def test_one_layer_is_pool_argmax(self):
        h = build_hamiltonian("ising", 4)
        pool = build_layer_pool("rxyz2xyz", interaction_graph(h))
        cfg = SearchConfig(l_min=1, l_max=1)
        c, trace = layerwise_search(h, pool, cfg)
        assert c.depth == 1
        scores = [cs.score for cs in trace.steps[0].candidates]
        eligible = [s for s in scores if s is not None]
        assert trace.steps[0].chosen == pool.templates[scores.index(max(eligible))].label

    def test_parameterless_candidates_marked_ineligible(self):
        h = build_hamiltonian("ising", 4)
        pool = build_layer_pool("rxyz", interaction_graph(h))
        _, trace = layerwise_search(h, pool, SearchConfig(l_min=1, l_max=1))
        cz = [cs for cs in trace.steps[0].candidates if cs.label.startswith("cz")]
        assert cz and all(cs.score is None and not cs.eligible for cs in cz)

    def test_trace_complete_and_replayable(self):
        h = build_hamiltonian("cluster", 4)
        pool = build_layer_pool("rxyz2xyz", interaction_graph(h))
        cfg = SearchConfig(l_max=6, n_samples=300)
        c, trace = layerwise_search(h, pool, cfg)
        assert c.depth <= cfg.l_max
        assert all(len(s.candidates) == len(pool) for s in trace.steps)
        assert trace.replay(pool, Circuit(4)) == c
        for s in trace.steps:
            best = max(cs.score for cs in s.candidates if cs.score is not None)
            assert s.chosen_score.score == best

    def test_stops_at_threshold(self):
        h = build_hamiltonian("cluster", 4)
        pool = build_layer_pool("rxyz2xyz", interaction_graph(h))
        cfg = SearchConfig(n_samples=300)
        c, trace = layerwise_search(h, pool, cfg)
        last = trace.steps[-1].chosen_score.score
        assert c.depth == cfg.l_max or (last > 1 - cfg.epsilon and c.depth >= cfg.l_min)
        # no earlier step past l_min satisfied the stop rule
        for s in trace.steps[cfg.l_min - 1:-1]:
            assert s.chosen_score.score <= 1 - cfg.epsilon

    def test_deterministic_and_worker_independent(self):
        h = build_hamiltonian("ising", 4)
        pool = build_layer_pool("rxyz2xyz", interaction_graph(h))
        a = layerwise_search(h, pool, SearchConfig(l_max=5, n_samples=200))
        b = layerwise_search(h, pool, SearchConfig(l_max=5, n_samples=200, workers=3))
        assert a[0] == b[0] and a[1].to_json() == b[1].to_json()

    def test_scale_invariance(self):
        h = build_hamiltonian("ising", 4)
        pool = build_layer_pool("rxyz2xyz", interaction_graph(h))
        cfg = SearchConfig(l_max=5, n_samples=200)
        a = layerwise_search(h, pool, cfg)[1].chosen_labels()
        assert layerwise_search(h.scaled(10.0), pool, cfg)[1].chosen_labels() == a

    def test_trace_serialization(self):
        h = build_hamiltonian("ising", 3)
        pool = build_layer_pool("zz_ry", interaction_graph(h))
        _, trace = layerwise_search(h, pool, SearchConfig(l_max=2, l_min=1, n_samples=100))
        d = json.loads(trace.to_json())
        assert len(d["steps"]) == len(trace.steps)
        rows = list(csv.DictReader(io.StringIO(trace.to_csv())))
        assert len(rows) == len(pool) * len(trace.steps)
        assert sum(int(r["chosen"]) for r in rows) == len(trace.steps)

    def test_empty_pool(self):
        with pytest.raises(SearchError):
            layerwise_search(build_hamiltonian("ising", 2), LayerPool(()))

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            layerwise_search(build_hamiltonian("ising", 2), LayerPool((RY,)), initial=Circuit(3))

    def test_timeout_carries_partial(self):
        h = build_hamiltonian("ising", 3)
        pool = build_layer_pool("zz_ry", interaction_graph(h))
        with pytest.raises(SearchTimeout) as info:
            layerwise_search(h, pool, deadline=time.monotonic() - 1)
        assert info.value.partial is not None


def rz_first_circuit():
    c = Circuit(2, (Layer("rz", (Gate(GateKind.RZ, (0,), 0),)),))
    c = append_layer(c, transversal_layer(GateKind.RY, 2))
    return append_layer(c, pair_layer(GateKind.RZZ, [(0, 1)], "rzz-1"))


RZ_HAM = Hamiltonian.from_labels([(-1.0, "XX"), (-0.5, "IX"), (-0.7, "YZ")])


class TestElimination:
    def test_dead_rz_removal_scales_rf_down(self):
        # a parameter that only adds a phase leaves sigma alone but enters sigma0 = 1/sqrt(2M)
        c = rz_first_circuit()
        M = c.param_count
        base = exact_rf_enumeration(c, RZ_HAM)
        after = [exact_rf_enumeration(remove_gate(c, p), RZ_HAM) for p in range(c.gate_count)]
        assert after[0] == pytest.approx(base * math.sqrt((M - 1) / M), rel=1e-12)
        assert after[0] < base
        assert max(range(len(after)), key=after.__getitem__) == 0

    def test_dead_rz_is_best_candidate_but_rejected(self):
        c = rz_first_circuit()
        out, trace = eliminate_redundancy(c, RZ_HAM, SearchConfig(elimination_ratio=0.25, n_samples=4000))
        (rnd,) = trace.rounds
        best = max(rnd.candidates, key=lambda t: t[2])
        assert best[0] == 0 and best[1] == "rz[0]"
        assert best[2] < rnd.rf_before - rnd.stderr_before
        assert rnd.removed is None and out == c

    def test_ratio_zero_is_identity(self):
        c = rz_first_circuit()
        out, trace = eliminate_redundancy(c, RZ_HAM, SearchConfig(elimination_ratio=0.0))
        assert out is c and trace.rounds == []

    def test_budget(self):
        c = labelled(["a", "b", "c", "d", "e"])  # 10 gates
        assert elimination_budget(c, SearchConfig(elimination_ratio=0.2)) == 2
        assert elimination_budget(c, SearchConfig(elimination_ratio=0.25)) == 3
        assert elimination_budget(c, SearchConfig(elimination_ratio=0.25, elimination_rounds=1)) == 1

    def test_gate_count_bound_and_last_parameter_kept(self):
        h = Hamiltonian.from_labels([(-1.0, "ZZ")])
        c = append_layer(Circuit(2), pair_layer(GateKind.CZ, [(0, 1)], "cz-1"))
        c = append_layer(c, Layer("ry", (Gate(GateKind.RY, (0,)),)))
        cfg = SearchConfig(elimination_ratio=0.9, n_samples=200)
        out, trace = eliminate_redundancy(c, h, cfg)
        assert out.param_count == 1
        assert out.gate_count >= (1 - cfg.elimination_ratio) * c.gate_count - 1
        # the only parameterized gate is never offered for removal
        assert all(g != "ry[0]" for r in trace.rounds for _, g, _ in r.candidates)

    def test_scale_invariance(self):
        c = rz_first_circuit()
        cfg = SearchConfig(elimination_ratio=0.5, n_samples=500)
        a = eliminate_redundancy(c, RZ_HAM, cfg)[1].removed_positions()
        assert eliminate_redundancy(c, RZ_HAM.scaled(10.0), cfg)[1].removed_positions() == a

    def test_csv(self):
        _, trace = eliminate_redundancy(rz_first_circuit(), RZ_HAM, SearchConfig(elimination_ratio=0.25))
        rows = list(csv.DictReader(io.StringIO(trace.to_csv())))
        assert rows and set(rows[0]) == {"round", "position", "gate", "rf", "removed"}
        assert json.loads(json.dumps(trace.to_dict()))["budget"] == trace.budget

    def test_timeout(self):
        with pytest.raises(SearchTimeout):
            eliminate_redundancy(rz_first_circuit(), RZ_HAM, deadline=time.monotonic() - 1)
