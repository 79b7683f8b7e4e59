"""
Create sample operator files for development and testing
"""

import sys
from pathlib import Path

import numpy as np

# Add src directory to path for imports
sys.path.append(str(Path(__file__).parent / "src"))

from operator_core import BipartiteState, HermitianOperator, QuantumState
from state_factory import bell_state, generate_random_state, save_operator_file


def create_test_operator_files(target_dir: str = "test_data"):
    """Write a handful of states in the operator JSON format."""
    target = Path(target_dir)
    target.mkdir(parents=True, exist_ok=True)

    written = []

    # Diagonal qubit used throughout the examples
    written.append(save_operator_file(QuantumState(HermitianOperator.diag([0.75, 0.25])),
                                      target / "qubit_075.json"))

    # Maximally entangled pair, declared bipartite
    written.append(save_operator_file(bell_state(), target / "bell.json"))

    # Complex-valued single qubit: |+i><+i| mixed with white noise
    plus_i = np.array([1, 1j]) / np.sqrt(2)
    noisy = 0.8 * np.outer(plus_i, plus_i.conj()) + 0.1 * np.eye(2)
    written.append(save_operator_file(QuantumState.from_matrix(noisy), target / "noisy_plus_i.json"))

    # Seeded random 2 x 2 bipartite state
    random_ab = generate_random_state(7, 4, "bipartite", (2, 2))
    written.append(save_operator_file(random_ab, target / "random_2x2_seed7.json"))

    # Product state rho_A (x) maximally mixed B
    product = np.kron(np.diag([0.9, 0.1]), np.eye(2) / 2)
    written.append(save_operator_file(BipartiteState.from_matrix(product, 2, 2), target / "product_2x2.json"))

    print(f"✅ Created {len(written)} operator files in {target}/")
    for path in written:
        print(f"  {path.name}")
    return written


if __name__ == "__main__":
    create_test_operator_files()
