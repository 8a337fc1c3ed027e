"""Training-free quantum architecture search driven by landscape fluctuations."""

__version__ = "0.1.0"

from .circuit import Circuit, Gate, GateKind, Layer, load_circuit, save_circuit
from .fluctuation import FluctuationEstimate, estimate_rf, exact_rf_enumeration
from .kernels import BACKEND
from .layergen import LayerPool, build_layer_pool, interaction_graph
from .pauli import Hamiltonian, PauliString, build_hamiltonian, read_hamiltonian, write_hamiltonian
from .search import SearchConfig, eliminate_redundancy, layerwise_search
from .stabilizer import StabilizerTableau
from .vqe import TrainConfig, TrainResult, train

__all__ = [
    "__version__", "BACKEND",
    "Circuit", "Gate", "GateKind", "Layer", "load_circuit", "save_circuit",
    "FluctuationEstimate", "estimate_rf", "exact_rf_enumeration",
    "LayerPool", "build_layer_pool", "interaction_graph",
    "Hamiltonian", "PauliString", "build_hamiltonian", "read_hamiltonian", "write_hamiltonian",
    "SearchConfig", "eliminate_redundancy", "layerwise_search",
    "StabilizerTableau",
    "TrainConfig", "TrainResult", "train",
]
