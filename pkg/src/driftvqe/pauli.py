"""Pauli-string algebra: weighted Pauli-term Hamiltonians, dominant/minor
subsetting, and small dense spectral oracles.

A Hamiltonian is a real-weighted sum of tensor products over {I, X, Y, Z}.
Site 0 of a Pauli string acts on qubit 0; measured bitstrings use the same
site order (character ``i`` of a bitstring is qubit ``i``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PAULI_CHARS = "IXYZ"

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Dense-matrix oracles become infeasible past this width.
MAX_DENSE_QUBITS = 12


class HamiltonianError(ValueError):
    """Structural problem with Hamiltonian input."""


class HamiltonianParseError(HamiltonianError):
    """Malformed Hamiltonian file content; carries the offending line number."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class CapacityError(HamiltonianError):
    """System too large for a dense-matrix operation."""


class EmptySampleError(ValueError):
    """Expectation requested from an empty count map."""


@dataclass(frozen=True)
class PauliString:
    """Tensor product over {I, X, Y, Z}; one character per qubit site."""

    label: str

    def __post_init__(self):
        if len(self.label) < 1:
            raise HamiltonianError("Pauli string must have at least one site")
        bad = set(self.label) - set(PAULI_CHARS)
        if bad:
            raise HamiltonianError(
                f"invalid Pauli site symbol(s) {sorted(bad)} in {self.label!r}"
            )

    def __len__(self) -> int:
        return len(self.label)

    def __str__(self) -> str:
        return self.label

    @property
    def is_identity(self) -> bool:
        return set(self.label) == {"I"}

    def support(self) -> tuple[int, ...]:
        """Indices of non-identity sites."""
        return tuple(i for i, c in enumerate(self.label) if c != "I")

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix with site 0 as the least-significant bit.

        Basis index b encodes qubit q's value in bit q, so the Kronecker
        product runs from the last site down to site 0.
        """
        if len(self.label) > MAX_DENSE_QUBITS:
            raise CapacityError(
                f"{len(self.label)} qubits exceeds dense limit of {MAX_DENSE_QUBITS}"
            )
        m = np.array([[1.0 + 0j]])
        for c in reversed(self.label):
            m = np.kron(m, PAULI_MATRICES[c])
        return m


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli string of a Hamiltonian."""

    string: PauliString
    coefficient: float

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise HamiltonianError(
                f"coefficient for {self.string} is not finite: {self.coefficient}"
            )


@dataclass(frozen=True)
class Hamiltonian:
    """Deduplicated, ordered list of Pauli terms on a fixed qubit register."""

    terms: tuple[PauliTerm, ...]
    qubit_count: int

    def __post_init__(self):
        for t in self.terms:
            if len(t.string) != self.qubit_count:
                raise HamiltonianError(
                    f"term {t.string} has {len(t.string)} sites, expected "
                    f"{self.qubit_count}"
                )
        labels = [t.string.label for t in self.terms]
        if len(set(labels)) != len(labels):
            raise HamiltonianError("duplicate Pauli strings (merge before constructing)")

    def __len__(self) -> int:
        return len(self.terms)

    @classmethod
    def from_pairs(cls, pairs: list[tuple[str, float]]) -> "Hamiltonian":
        """Build from (label, coefficient) pairs, merging duplicate labels."""
        if not pairs:
            raise HamiltonianError("Hamiltonian needs at least one term")
        merged: dict[str, float] = {}
        order: list[str] = []
        width = len(pairs[0][0])
        for label, coeff in pairs:
            if len(label) != width:
                raise HamiltonianError(
                    f"term {label!r} has {len(label)} sites, expected {width}"
                )
            if label not in merged:
                merged[label] = 0.0
                order.append(label)
            merged[label] += float(coeff)
        terms = tuple(PauliTerm(PauliString(lbl), merged[lbl]) for lbl in order)
        return cls(terms=terms, qubit_count=width)

    def identity_coefficient(self) -> float:
        return sum(t.coefficient for t in self.terms if t.string.is_identity)

    def non_identity_terms(self) -> tuple[PauliTerm, ...]:
        return tuple(t for t in self.terms if not t.string.is_identity)

    def to_matrix(self) -> np.ndarray:
        if self.qubit_count > MAX_DENSE_QUBITS:
            raise CapacityError(
                f"{self.qubit_count} qubits exceeds dense limit of {MAX_DENSE_QUBITS}"
            )
        dim = 2**self.qubit_count
        m = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            m += t.coefficient * t.string.to_matrix()
        return m


@dataclass(frozen=True)
class SubsetPartition:
    """Split of a Hamiltonian's non-identity terms into a dominant ("prime")
    prefix and the remaining "minor" terms, by cumulative |coefficient| mass.

    The prime subset is the shortest descending-|coefficient| prefix whose
    absolute-coefficient sum reaches ``threshold`` times the total over all
    non-identity terms. Identity terms need no circuit and are carried as a
    classical offset.
    """

    prime: tuple[PauliTerm, ...]
    minor: tuple[PauliTerm, ...]
    identity_offset: float
    threshold: float

    @property
    def prime_share(self) -> float:
        """Fraction of total |coefficient| mass captured by the prime subset."""
        total = sum(abs(t.coefficient) for t in self.prime) + sum(
            abs(t.coefficient) for t in self.minor
        )
        if total == 0.0:
            return 1.0
        return sum(abs(t.coefficient) for t in self.prime) / total

    def all_terms(self) -> tuple[PauliTerm, ...]:
        return self.prime + self.minor


def parse_hamiltonian(text: str) -> Hamiltonian:
    """Parse the plain-text Hamiltonian format.

    One term per line: ``<PauliString> <coefficient>``, whitespace-separated,
    decimal or scientific coefficients, ``#`` comment lines and blank lines
    ignored. Duplicate strings merge additively; the qubit count is the
    shared string length.
    """
    pairs: list[tuple[str, float]] = []
    width: int | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise HamiltonianParseError(
                lineno, f"expected '<PauliString> <coefficient>', got {raw!r}"
            )
        label, coeff_text = parts
        if set(label) - set(PAULI_CHARS):
            raise HamiltonianParseError(lineno, f"invalid Pauli string {label!r}")
        try:
            coeff = float(coeff_text)
        except ValueError:
            raise HamiltonianParseError(
                lineno, f"invalid coefficient {coeff_text!r}"
            ) from None
        if not np.isfinite(coeff):
            raise HamiltonianParseError(lineno, f"non-finite coefficient {coeff_text!r}")
        if width is None:
            width = len(label)
        elif len(label) != width:
            raise HamiltonianError(
                f"line {lineno}: term {label!r} has {len(label)} sites, "
                f"previous terms have {width}"
            )
        pairs.append((label, coeff))
    if not pairs:
        raise HamiltonianError("no terms found")
    return Hamiltonian.from_pairs(pairs)


def load_hamiltonian(path) -> Hamiltonian:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_hamiltonian(fh.read())


def partition_prime_minor(h: Hamiltonian, th_p: float) -> SubsetPartition:
    """Partition ``h`` into prime and minor subsets at threshold ``th_p``.

    Non-identity terms are sorted by descending |coefficient| (ties broken by
    lexicographic string order for cross-platform determinism); the shortest
    nonempty prefix whose |coefficient| sum reaches ``th_p`` times the total
    becomes the prime subset.
    """
    if not (0.0 < th_p <= 1.0):
        raise ValueError(f"th_p must be in (0, 1], got {th_p}")
    active = h.non_identity_terms()
    if not active:
        raise HamiltonianError(
            "degenerate Hamiltonian: only identity terms, nothing to partition"
        )
    ordered = sorted(active, key=lambda t: (-abs(t.coefficient), t.string.label))
    total = sum(abs(t.coefficient) for t in ordered)
    goal = th_p * total
    prime: list[PauliTerm] = []
    running = 0.0
    for t in ordered:
        prime.append(t)
        running += abs(t.coefficient)
        if running >= goal:
            break
    return SubsetPartition(
        prime=tuple(prime),
        minor=tuple(ordered[len(prime):]),
        identity_offset=h.identity_coefficient(),
        threshold=th_p,
    )


def ground_state_energy(h: Hamiltonian) -> float:
    """Minimum eigenvalue of the dense Hamiltonian matrix."""
    return float(np.linalg.eigvalsh(h.to_matrix())[0])


@lru_cache(maxsize=512)
def _parity_signs(label: str) -> np.ndarray:
    """Eigenvalue (+1/-1) of the Z-parity over non-identity sites of ``label``
    for every basis index, with qubit q stored in bit q."""
    n = len(label)
    mask = 0
    for site, c in enumerate(label):
        if c != "I":
            mask |= 1 << site
    idx = np.arange(2**n)
    masked = idx & mask
    # popcount parity per basis state
    bits = ((masked[:, None] >> np.arange(n)[None, :]) & 1).sum(axis=1)
    return np.where(bits % 2 == 0, 1.0, -1.0)


def expectation_from_counts(counts: dict[str, int], p: PauliString) -> float:
    """Parity-weighted mean of measured bitstrings for one Pauli observable.

    Counts must be Z-basis samples taken after the basis rotation for ``p``;
    character ``i`` of each bitstring is qubit ``i``'s measured bit. Sites
    where ``p`` is identity do not contribute to the parity.
    """
    if not counts:
        raise EmptySampleError("empty count map")
    support = p.support()
    total = 0
    acc = 0
    for bitstring, count in counts.items():
        if len(bitstring) != len(p):
            raise ValueError(
                f"bitstring {bitstring!r} has {len(bitstring)} bits, "
                f"observable has {len(p)} sites"
            )
        ones = sum(1 for site in support if bitstring[site] == "1")
        sign = 1 if ones % 2 == 0 else -1
        acc += sign * count
        total += count
    if total == 0:
        raise EmptySampleError("zero total count")
    return acc / total
