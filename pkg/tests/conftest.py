from pathlib import Path

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
HAMILTONIAN_DIR = REPO_ROOT / "hamiltonians"

TOY_TEXT = "XX 1.4\nZI 0.05\nZX 0.02"


@pytest.fixture(scope="session")
def toy_hamiltonian():
    from driftvqe.pauli import parse_hamiltonian

    return parse_hamiltonian(TOY_TEXT)


@pytest.fixture(scope="session")
def heh_like():
    from driftvqe.pauli import load_hamiltonian

    return load_hamiltonian(HAMILTONIAN_DIR / "heh_like_4q.ham")


# --- independent dense-matrix oracle (own kron code, site 0 = low bit) ------

_P = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_pauli(label: str) -> np.ndarray:
    m = np.eye(1, dtype=complex)
    for ch in reversed(label):
        m = np.kron(m, _P[ch])
    return m


def dense_hamiltonian(pairs) -> np.ndarray:
    dim = 2 ** len(pairs[0][0])
    m = np.zeros((dim, dim), dtype=complex)
    for label, coeff in pairs:
        m += coeff * dense_pauli(label)
    return m


def embed_single(u: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Full-register matrix for a single-qubit operator (low-bit convention)."""
    m = np.eye(1, dtype=complex)
    for q in reversed(range(n)):
        m = np.kron(m, u if q == qubit else np.eye(2, dtype=complex))
    return m


def embed_cx(control: int, target: int, n: int) -> np.ndarray:
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    x = _P["X"]
    return embed_single(p0, control, n) + embed_single(p1, control, n) @ embed_single(
        x, target, n
    )
