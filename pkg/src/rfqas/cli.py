"""Command-line entry point: ``rfqas <subcommand> ...``.

Exit codes: 0 success, 1 runtime failure (including an exhausted time
budget), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import (CircuitFormatError, Circuit, GATE_SETS, append_layer, circuit_to_dict,
                      load_circuit, random_circuit, save_circuit)
from .fluctuation import continuous_rf_montecarlo, estimate_rf, exact_rf_enumeration
from .layergen import build_layer_pool, interaction_graph, two_layer_pairs
from .pauli import (HAMILTONIAN_KINDS, Hamiltonian, HamiltonianFormatError, build_hamiltonian,
                    format_hamiltonian, random_hamiltonian, read_hamiltonian)
from .search import (SearchConfig, SearchError, SearchTimeout, eliminate_redundancy,
                     layerwise_search)
from .vqe import TrainConfig, train

SCHEMA_VERSION = 1
SEED_ENV = "RFQAS_SEED"


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj, out: str | None = None) -> None:
    _write(json.dumps(obj, indent=2) + "\n", out)


# --- shared option groups ---------------------------------------------------

def _add_ham_source(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("Hamiltonian (file or built-in model)")
    g.add_argument("--ham", metavar="PATH", help="Hamiltonian text file")
    g.add_argument("--kind", choices=HAMILTONIAN_KINDS, help="built-in model")
    g.add_argument("--n", type=int, help="qubit count for --kind")
    g.add_argument("--ham-seed", type=int, help="seed for --kind scrambled")
    g.add_argument("--depth", type=int, help="brickwall depth for --kind scrambled (default 1)")


def _ham_from_args(args) -> tuple[Hamiltonian, dict]:
    if args.ham:
        if args.kind:
            raise UsageError("give either --ham or --kind, not both")
        h = read_hamiltonian(args.ham)
        return h, {"source": str(args.ham)}
    if not args.kind or args.n is None:
        raise UsageError("need --ham PATH or --kind with --n")
    if args.kind == "scrambled" and args.ham_seed is None:
        raise UsageError("--kind scrambled requires --ham-seed")
    try:
        h = build_hamiltonian(args.kind, args.n, seed=args.ham_seed,
                              depth=args.depth if args.kind == "scrambled" else None)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return h, {"source": "builtin", "kind": args.kind, "n": args.n,
               "seed": args.ham_seed, "depth": args.depth}


def _add_search_opts(p: argparse.ArgumentParser) -> None:
    d = SearchConfig()
    g = p.add_argument_group("search")
    g.add_argument("--samples", type=int, default=d.n_samples, help="Clifford samples per estimate")
    g.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    g.add_argument("--delta", type=float, default=d.delta, help="decay base")
    g.add_argument("--window", type=int, default=d.window, help="decay window in layers")
    g.add_argument("--epsilon", type=float, default=d.epsilon, help="stopping slack")
    g.add_argument("--l-min", type=int, default=d.l_min, help="minimum layer count")
    g.add_argument("--l-max", type=int, default=d.l_max, help="maximum layer count")
    g.add_argument("--ratio", type=float, default=d.elimination_ratio,
                   help="fraction of gates to eliminate")
    g.add_argument("--rounds", type=int, default=None, help="cap on elimination rounds")
    g.add_argument("--workers", type=int, default=1, help="parallel workers")


def _search_cfg(args) -> SearchConfig:
    try:
        return SearchConfig(
            delta=args.delta, window=args.window, epsilon=args.epsilon, l_min=args.l_min,
            l_max=args.l_max, n_samples=args.samples, seed=args.seed,
            elimination_ratio=args.ratio, elimination_rounds=args.rounds, workers=args.workers,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_train_opts(p: argparse.ArgumentParser) -> None:
    d = TrainConfig()
    g = p.add_argument_group("training")
    g.add_argument("--restarts", type=int, default=d.n_restarts, help="independent Adam runs")
    g.add_argument("--max-iters", type=int, default=d.max_iters, help="Adam iterations per run")
    g.add_argument("--lr", type=float, default=d.learning_rate, help="Adam learning rate")
    g.add_argument("--tol", type=float, default=d.tol, help="plateau tolerance on |dL|")
    g.add_argument("--curves", metavar="CSV", help="write training curves here")


def _train_cfg(args, seed: int, timeout: float | None = None) -> TrainConfig:
    try:
        return TrainConfig(learning_rate=args.lr, max_iters=args.max_iters, n_restarts=args.restarts,
                           tol=args.tol, seed=seed, workers=getattr(args, "workers", 1),
                           timeout_secs=timeout)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_curves(result, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("restart,iteration,energy\n")
        for r, it, e in result.curve_rows():
            fh.write(f"{r},{it},{e!r}\n")


# --- subcommands ------------------------------------------------------------

def cmd_hamiltonian(args) -> int:
    h, _ = _ham_from_args(args)
    _write(format_hamiltonian(h), args.out)
    return 0


def cmd_layers(args) -> int:
    h, _ = _ham_from_args(args)
    g = interaction_graph(h)
    pairs1, pairs2 = two_layer_pairs(g)
    pool = build_layer_pool(args.gate_set, g)
    _dump({
        "gate_set": args.gate_set,
        "edges": [[a, b, w] for a, b, w in g.edges],
        "pairs1": [list(p) for p in pairs1],
        "pairs2": [list(p) for p in pairs2],
        "templates": [circuit_to_dict(append_layer(Circuit(h.n_qubits), t)) for t in pool],
    }, args.out)
    return 0


def cmd_score(args) -> int:
    c = load_circuit(args.circuit)
    h = read_hamiltonian(args.ham)
    est = estimate_rf(c, h, args.samples, seed=args.seed, workers=args.workers)
    _dump(est.to_dict(), args.out)
    return 0


def _deadline(args) -> float | None:
    return None if args.timeout_secs is None or args.timeout_secs <= 0 else time.monotonic() + args.timeout_secs


def cmd_search(args) -> int:
    h, _ = _ham_from_args(args)
    cfg = _search_cfg(args)
    pool = build_layer_pool(args.gate_set, interaction_graph(h))
    c, trace = layerwise_search(h, pool, cfg, deadline=_deadline(args))
    if args.trace_json:
        Path(args.trace_json).write_text(trace.to_json(), encoding="utf-8")
    if args.trace_csv:
        Path(args.trace_csv).write_text(trace.to_csv(), encoding="utf-8")
    _save_or_print(c, args.out)
    return 0


def _save_or_print(c: Circuit, out: str | None) -> None:
    if out:
        save_circuit(c, out)
    else:
        _dump(circuit_to_dict(c))


def cmd_eliminate(args) -> int:
    c = load_circuit(args.circuit)
    h = read_hamiltonian(args.ham)
    cfg = _search_cfg(args)
    c2, trace = eliminate_redundancy(c, h, cfg, deadline=_deadline(args))
    if args.trace_csv:
        Path(args.trace_csv).write_text(trace.to_csv(), encoding="utf-8")
    _save_or_print(c2, args.out)
    return 0


def cmd_train(args) -> int:
    c = load_circuit(args.circuit)
    h = read_hamiltonian(args.ham)
    result = train(c, h, _train_cfg(args, args.seed, args.timeout_secs))
    if args.curves:
        _write_curves(result, args.curves)
    _dump(result.to_dict(), args.out)
    return 1 if result.timed_out else 0


def _config_echo(args, cfg: SearchConfig) -> dict:
    return {
        "gate_set": args.gate_set,
        "search": {k: getattr(cfg, k) for k in cfg.__dataclass_fields__},
        "train": None if args.skip_train else {
            "restarts": args.restarts, "max_iters": args.max_iters, "lr": args.lr, "tol": args.tol,
        },
        "timeout_secs": args.timeout_secs,
    }


def cmd_pipeline(args) -> int:
    h, desc = _ham_from_args(args)
    cfg = _search_cfg(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    desc.update(n_qubits=h.n_qubits, n_terms=len(h.terms), l1_norm=h.l1_norm)
    report = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "status": "running",
        "phase": "layergen",
        "hamiltonian": desc,
        "config": _config_echo(args, cfg),
        "timings": {},
    }
    deadline = _deadline(args)
    t0 = time.monotonic()

    def lap(name: str) -> None:
        nonlocal t0
        now = time.monotonic()
        report["timings"][name] = now - t0
        t0 = now

    def finish(code: int) -> int:
        (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        if args.print_report:
            _dump(report)
        return code

    try:
        g = interaction_graph(h)
        pairs1, pairs2 = two_layer_pairs(g)
        pool = build_layer_pool(args.gate_set, g)
        report["layer_pool"] = {"labels": pool.labels(), "pairs1": pairs1, "pairs2": pairs2}
        lap("layergen")

        report["phase"] = "search"
        searched, strace = layerwise_search(h, pool, cfg, deadline=deadline)
        (out / "search_trace.json").write_text(strace.to_json(), encoding="utf-8")
        (out / "search_trace.csv").write_text(strace.to_csv(), encoding="utf-8")
        save_circuit(searched, out / "searched_circuit.json")
        report["search"] = {
            "chosen": strace.chosen_labels(),
            "rf_history": [s.chosen_score.rf for s in strace.steps],
            "score_history": [s.chosen_score.score for s in strace.steps],
            "gate_count": searched.gate_count,
            "param_count": searched.param_count,
        }
        lap("search")

        report["phase"] = "eliminate"
        final, etrace = eliminate_redundancy(searched, h, cfg, deadline=deadline)
        (out / "elimination_trace.csv").write_text(etrace.to_csv(), encoding="utf-8")
        save_circuit(final, out / "circuit.json")
        report["elimination"] = etrace.to_dict()
        report["circuit"] = circuit_to_dict(final)
        report["gate_count"] = final.gate_count
        report["param_count"] = final.param_count
        lap("eliminate")

        report["train"] = None
        if not args.skip_train:
            report["phase"] = "train"
            remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
            result = train(final, h, _train_cfg(args, cfg.seed, remaining))
            _write_curves(result, out / "curves.csv")
            report["train"] = result.to_dict()
            lap("train")
            if result.timed_out:
                report["status"] = "O.O.T."
                return finish(1)
        report["phase"] = "done"
        report["status"] = "ok"
        return finish(0)
    except SearchTimeout as exc:
        report["status"] = "O.O.T."
        report["error"] = str(exc)
        return finish(1)
    except (ValueError, SearchError, ArithmeticError) as exc:
        report["status"] = "error"
        report["error"] = f"{type(exc).__name__}: {exc}"
        finish(1)
        print(f"rfqas: {report['phase']} failed: {exc}", file=sys.stderr)
        return 1


def oracle_trials(n_trials: int, seed: int, samples: int, max_qubits: int = 4, max_params: int = 6):
    """Compare exhaustive quarter-turn enumeration with continuous Monte Carlo.

    Yields one dict per trial with both estimates and the 3-sigma verdict.
    """
    rng = np.random.default_rng([seed, 0x0AC1E])
    for t in range(n_trials):
        n = int(rng.integers(1, max_qubits + 1))
        gate_set = sorted(GATE_SETS)[int(rng.integers(len(GATE_SETS)))]
        c = random_circuit(rng, n, max_params, gate_set)
        h = random_hamiltonian(rng, n, int(rng.integers(1, 7)))
        exact = exact_rf_enumeration(c, h)
        mc, err = continuous_rf_montecarlo(c, h, samples, seed=(seed, t))
        # absolute floor covers the zero-variance case, where rounding dominates
        ok = abs(exact - mc) <= 3.0 * err + 1e-9
        yield {"trial": t, "n_qubits": n, "gate_set": gate_set, "params": c.param_count,
               "gates": c.gate_count, "exact_rf": exact, "mc_rf": mc, "stderr": err, "pass": bool(ok)}


def cmd_oracle_check(args) -> int:
    if args.n_trials < 1:
        raise UsageError("--n-trials must be >= 1")
    trials = list(oracle_trials(args.n_trials, args.seed, args.samples))
    failures = sum(not t["pass"] for t in trials)
    allowed = math.floor(args.max_fail_rate * len(trials))
    summary = {"n_trials": len(trials), "failures": failures, "allowed_failures": allowed,
               "pass": failures <= allowed, "trials": trials}
    _dump(summary, args.out)
    return 0 if summary["pass"] else 1


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfqas", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hamiltonian", help="write a benchmark Hamiltonian")
    _add_ham_source(p)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_hamiltonian)

    p = sub.add_parser("layers", help="dump the candidate layer pool")
    _add_ham_source(p)
    p.add_argument("--gate-set", default="rxyz2xyz", choices=sorted(GATE_SETS), help="layer template family")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_layers)

    p = sub.add_parser("score", help="estimate the relative fluctuation of a circuit")
    p.add_argument("--circuit", required=True, help="circuit JSON")
    p.add_argument("--ham", required=True, help="Hamiltonian text file")
    p.add_argument("--samples", type=int, default=1000, help="Clifford samples")
    p.add_argument("--seed", type=int, default=None, help=f"seed (default ${SEED_ENV} or 0)")
    p.add_argument("--workers", type=int, default=1, help="parallel workers")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("search", help="layer-wise search")
    _add_ham_source(p)
    p.add_argument("--gate-set", default="rxyz2xyz", choices=sorted(GATE_SETS), help="layer template family")
    _add_search_opts(p)
    p.add_argument("--timeout-secs", type=float, default=3000.0, help="wall-clock budget")
    p.add_argument("--out", help="circuit JSON output (default stdout)")
    p.add_argument("--trace-json", help="write the search trace as JSON")
    p.add_argument("--trace-csv", help="write the search trace as CSV")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eliminate", help="redundant-gate elimination")
    p.add_argument("--circuit", required=True, help="circuit JSON")
    p.add_argument("--ham", required=True, help="Hamiltonian text file")
    _add_search_opts(p)
    p.add_argument("--timeout-secs", type=float, default=3000.0, help="wall-clock budget")
    p.add_argument("--out", help="circuit JSON output (default stdout)")
    p.add_argument("--trace-csv", help="write the elimination trace as CSV")
    p.set_defaults(func=cmd_eliminate)

    p = sub.add_parser("train", help="train a circuit with Adam")
    p.add_argument("--circuit", required=True, help="circuit JSON")
    p.add_argument("--ham", required=True, help="Hamiltonian text file")
    _add_train_opts(p)
    p.add_argument("--seed", type=int, default=None, help=f"seed (default ${SEED_ENV} or 0)")
    p.add_argument("--workers", type=int, default=1, help="parallel workers")
    p.add_argument("--timeout-secs", type=float, default=3000.0, help="wall-clock budget")
    p.add_argument("--out", help="result JSON output (default stdout)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("pipeline", help="layergen, search, elimination and training")
    _add_ham_source(p)
    p.add_argument("--gate-set", default="rxyz2xyz", choices=sorted(GATE_SETS), help="layer template family")
    _add_search_opts(p)
    _add_train_opts(p)
    p.add_argument("--skip-train", action="store_true", help="stop after elimination")
    p.add_argument("--timeout-secs", type=float, default=3000.0, help="wall-clock budget")
    p.add_argument("--out-dir", required=True, help="directory for report and artifacts")
    p.add_argument("--print-report", action="store_true", help="also print the report")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("oracle-check", help="discrete vs continuous fluctuation check")
    p.add_argument("--n-trials", type=int, default=50, help="random circuits to test")
    p.add_argument("--seed", type=int, default=None, help=f"seed (default ${SEED_ENV} or 0)")
    p.add_argument("--samples", type=int, default=10_000, help="Monte Carlo samples per circuit")
    p.add_argument("--max-fail-rate", type=float, default=0.02, help="tolerated failure fraction")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except FileNotFoundError as exc:
        print(f"rfqas: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except (HamiltonianFormatError, CircuitFormatError) as exc:
        print(f"rfqas: invalid input: {exc}", file=sys.stderr)
        return 2
    except (ValueError, SearchError, ArithmeticError) as exc:
        print(f"rfqas: {exc}", file=sys.stderr)
        return 1
    except SearchTimeout as exc:
        print(f"rfqas: O.O.T.: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
