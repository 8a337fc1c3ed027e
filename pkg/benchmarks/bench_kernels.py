"""Compare the compiled and numpy Clifford-sampling backends.

    python3 benchmarks/bench_kernels.py [--samples 1000] [--repeat 3]

Prints one row per (circuit size, backend) with the best wall time and the
speedup over numpy. Both backends must return identical energies.
"""

import argparse
import time

import numpy as np

from rfqas import kernels
from rfqas.circuit import Circuit, GateKind, Layer, append_layer, pair_layer, transversal_layer
from rfqas.fluctuation import sample_assignments
from rfqas.pauli import build_hamiltonian

CASES = [(6, 40), (12, 120), (20, 200), (40, 400), (70, 600)]


def brickwork(n: int, n_gates: int) -> Circuit:
    odd = [(q, q + 1) for q in range(0, n - 1, 2)]
    even = [(q, q + 1) for q in range(1, n - 1, 2)]
    cycle = [transversal_layer(GateKind.RY, n), pair_layer(GateKind.CZ, odd, "cz-1"),
             transversal_layer(GateKind.RX, n), pair_layer(GateKind.RZZ, even, "rzz-2")]
    c, i = Circuit(n), 0
    while c.gate_count < n_gates:
        layer = cycle[i % len(cycle)]
        c = append_layer(c, Layer(layer.label, layer.gates[:n_gates - c.gate_count]))
        i += 1
    return c


def best_time(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=1000, help="assignments per run")
    ap.add_argument("--repeat", type=int, default=3, help="timing repetitions, best is reported")
    args = ap.parse_args()

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only numpy timings are shown")
    print(f"{'qubits':>6} {'gates':>6} {'backend':>8} {'seconds':>9} {'speedup':>8}")
    for n, g in CASES:
        c = brickwork(n, g)
        prog = kernels.compile_circuit(c)
        ham = kernels.compile_hamiltonian(build_hamiltonian("ising", n))
        assign = sample_assignments(0, args.samples, c.param_count)
        results, times = {}, {}
        for b in backends:
            results[b] = kernels.clifford_energies(prog, ham, assign, backend=b)
            times[b] = best_time(lambda: kernels.clifford_energies(prog, ham, assign, backend=b), args.repeat)
        ref = results["numpy"]
        for b in backends:
            if not np.array_equal(results[b], ref):
                raise SystemExit(f"backend {b} disagrees with numpy at n={n}")
            print(f"{n:>6} {g:>6} {b:>8} {times[b]:>9.4f} {times['numpy'] / times[b]:>7.1f}x")


if __name__ == "__main__":
    main()
