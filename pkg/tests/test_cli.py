import csv
import json
import subprocess
import sys

import pytest

from rfqas.circuit import Circuit, GateKind, append_layer, circuit_from_dict, save_circuit, transversal_layer
from rfqas.cli import build_parser, main, oracle_trials
from rfqas.pauli import Hamiltonian, write_hamiltonian


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_usage(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main([str(a) for a in argv])
    return info.value.code, capsys.readouterr().err


@pytest.fixture
def toy(tmp_path):
    """RY and RZ single-qubit circuits with H = -Z on disk."""
    write_hamiltonian(Hamiltonian.from_labels([(-1.0, "Z")]), tmp_path / "h.txt")
    for kind in (GateKind.RY, GateKind.RZ):
        save_circuit(append_layer(Circuit(1), transversal_layer(kind, 1)), tmp_path / f"{kind.value}.json")
    return tmp_path


class TestHamiltonianCommand:
    def test_ising_6(self, capsys):
        code, out, _ = run(["hamiltonian", "--kind", "ising", "--n", 6], capsys)
        assert code == 0 and len(out.splitlines()) == 11

    def test_cluster_3_to_file(self, tmp_path, capsys):
        code, _, _ = run(["hamiltonian", "--kind", "cluster", "--n", 3, "--out", tmp_path / "c.txt"], capsys)
        assert code == 0 and len((tmp_path / "c.txt").read_text().splitlines()) == 3

    def test_scrambled_needs_seed(self, capsys):
        code, err = run_usage(["hamiltonian", "--kind", "scrambled", "--n", 6], capsys)
        assert code == 2 and "--ham-seed" in err

    def test_scrambled_with_seed(self, capsys):
        code, out, _ = run(["hamiltonian", "--kind", "scrambled", "--n", 6, "--ham-seed", 0], capsys)
        assert code == 0 and 300 <= len(out.splitlines()) <= 800

    def test_needs_source(self, capsys):
        assert run_usage(["hamiltonian"], capsys)[0] == 2


class TestScoreCommand:
    def test_ry(self, toy, capsys):
        code, out, _ = run(["score", "--circuit", toy / "ry.json", "--ham", toy / "h.txt"], capsys)
        d = json.loads(out)
        assert code == 0 and abs(d["rf"] - 1.0) <= 3 * d["stderr"]

    def test_rz(self, toy, capsys):
        code, out, _ = run(["score", "--circuit", toy / "rz.json", "--ham", toy / "h.txt"], capsys)
        assert code == 0 and json.loads(out)["rf"] == 0.0

    def test_missing_file(self, toy, capsys):
        code, _, err = run(["score", "--circuit", toy / "nope.json", "--ham", toy / "h.txt"], capsys)
        assert code == 2 and "nope.json" in err

    def test_malformed_inputs(self, toy, capsys):
        (toy / "bad.txt").write_text("abc ZZ\n")
        code, _, err = run(["score", "--circuit", toy / "ry.json", "--ham", toy / "bad.txt"], capsys)
        assert code == 2 and "line 1" in err
        (toy / "bad.json").write_text('{"n_qubits": 1, "layers": [{"label": "x", "gates": [{"kind": "q"}]}]}')
        code, _, err = run(["score", "--circuit", toy / "bad.json", "--ham", toy / "h.txt"], capsys)
        assert code == 2 and "$.layers[0].gates[0].kind" in err

    def test_seed_env_override(self, toy, capsys, monkeypatch):
        base = ["score", "--circuit", toy / "ry.json", "--ham", toy / "h.txt", "--samples", 50]
        explicit = json.loads(run(base + ["--seed", 5], capsys)[1])
        monkeypatch.setenv("RFQAS_SEED", "5")
        from_env = json.loads(run(base, capsys)[1])
        assert explicit == from_env and from_env["seed"] == 5
        monkeypatch.setenv("RFQAS_SEED", "x")
        assert run_usage(base, capsys)[0] == 2


class TestStages:
    def test_layers_templates_are_circuits(self, capsys):
        code, out, _ = run(["layers", "--kind", "ising", "--n", 4, "--gate-set", "zz_ry"], capsys)
        d = json.loads(out)
        assert code == 0 and d["pairs1"] == [[0, 1], [2, 3]] and d["pairs2"] == [[1, 2]]
        assert [circuit_from_dict(t).labels[0] for t in d["templates"]] == ["ry", "rzz-1", "rzz-2"]

    def test_search_eliminate_train(self, tmp_path, capsys):
        run(["hamiltonian", "--kind", "ising", "--n", 4, "--out", tmp_path / "h.txt"], capsys)
        code, _, _ = run(["search", "--ham", tmp_path / "h.txt", "--out", tmp_path / "s.json",
                          "--trace-json", tmp_path / "t.json", "--trace-csv", tmp_path / "t.csv",
                          "--samples", 200], capsys)
        assert code == 0 and json.loads((tmp_path / "t.json").read_text())["steps"]
        code, _, _ = run(["eliminate", "--circuit", tmp_path / "s.json", "--ham", tmp_path / "h.txt",
                          "--out", tmp_path / "e.json", "--trace-csv", tmp_path / "e.csv", "--samples", 200], capsys)
        assert code == 0 and (tmp_path / "e.json").exists()
        code, out, _ = run(["train", "--circuit", tmp_path / "e.json", "--ham", tmp_path / "h.txt",
                            "--restarts", 3, "--max-iters", 30, "--curves", tmp_path / "cu.csv"], capsys)
        assert code == 0 and 0 < json.loads(out)["e_ratio"] <= 1 + 1e-9
        with open(tmp_path / "cu.csv") as fh:
            assert next(csv.reader(fh)) == ["restart", "iteration", "energy"]


class TestPipeline:
    def test_cluster_defaults(self, tmp_path, capsys):
        code, _, _ = run(["pipeline", "--kind", "cluster", "--n", 6, "--out-dir", tmp_path], capsys)
        r = json.loads((tmp_path / "report.json").read_text())
        assert code == 0 and r["status"] == "ok" and r["schema_version"] == 1
        assert r["train"]["e_ratio"] >= 0.99 and r["gate_count"] <= 30
        assert set(r["timings"]) == {"layergen", "search", "eliminate", "train"}
        assert r["config"]["search"]["seed"] == 0
        for name in ("circuit.json", "searched_circuit.json", "search_trace.csv", "search_trace.json",
                     "elimination_trace.csv", "curves.csv"):
            assert (tmp_path / name).exists()

    def test_replay_is_byte_identical(self, tmp_path, capsys):
        args = ["pipeline", "--kind", "ising", "--n", 4, "--skip-train", "--samples", 300, "--seed", 3]
        run(args + ["--out-dir", tmp_path / "a"], capsys)
        seed = json.loads((tmp_path / "a" / "report.json").read_text())["config"]["search"]["seed"]
        run(args[:-1] + [seed, "--out-dir", tmp_path / "b"], capsys)
        assert (tmp_path / "a" / "circuit.json").read_bytes() == (tmp_path / "b" / "circuit.json").read_bytes()

    def test_skip_train(self, tmp_path, capsys):
        code, _, _ = run(["pipeline", "--kind", "ising", "--n", 3, "--skip-train", "--out-dir", tmp_path], capsys)
        r = json.loads((tmp_path / "report.json").read_text())
        assert code == 0 and r["train"] is None and not (tmp_path / "curves.csv").exists()

    def test_layergen_error_surfaces(self, tmp_path, capsys):
        write_hamiltonian(Hamiltonian.from_labels([(-1.0, "ZI"), (-1.0, "IZ")]), tmp_path / "h.txt")
        code, _, err = run(["pipeline", "--ham", tmp_path / "h.txt", "--gate-set", "zz_ry",
                            "--out-dir", tmp_path / "o"], capsys)
        r = json.loads((tmp_path / "o" / "report.json").read_text())
        assert code == 1 and r["status"] == "error" and r["phase"] == "layergen"
        assert "at least two" in err

    def test_timeout_marks_report(self, tmp_path, capsys):
        code, _, _ = run(["pipeline", "--kind", "ising", "--n", 4, "--timeout-secs", 1e-6, "--out-dir", tmp_path], capsys)
        r = json.loads((tmp_path / "report.json").read_text())
        assert code == 1 and r["status"] == "O.O.T."


class TestOracleCheck:
    def test_defaults_pass(self, capsys):
        code, out, _ = run(["oracle-check"], capsys)
        d = json.loads(out)
        assert code == 0 and d["n_trials"] == 50 and d["failures"] == 0

    def test_zero_trials(self, capsys):
        assert run_usage(["oracle-check", "--n-trials", 0], capsys)[0] == 2

    def test_seed_sweep(self):
        results = [t for s in range(100) for t in oracle_trials(1, s, 10_000)]
        assert sum(not t["pass"] for t in results) <= 1


class TestParser:
    def test_help_lists_every_flag(self):
        parser = build_parser()
        sub = next(a for a in parser._actions if a.dest == "command")
        for name, p in sub.choices.items():
            text = p.format_help()
            for action in p._actions:
                for flag in action.option_strings:
                    assert flag in text, (name, flag)
                if action.option_strings and action.dest != "help":
                    assert action.help, (name, action.dest)

    def test_unknown_flag(self, capsys):
        assert run_usage(["score", "--bogus"], capsys)[0] == 2

    def test_module_entry(self):
        out = subprocess.run([sys.executable, "-m", "rfqas", "--version"], capture_output=True, text=True)
        assert out.returncode == 0 and out.stdout.startswith("rfqas ")
