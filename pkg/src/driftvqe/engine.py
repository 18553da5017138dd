"""Exact statevector simulation of parameterized ansatz circuits.

Amplitude index convention: basis index ``b`` stores qubit ``q``'s value in
bit ``q`` (site 0 of a Pauli label = qubit 0 = least-significant bit), and
sampled bitstrings put qubit ``i`` at character ``i``, matching
:func:`driftvqe.pauli.expectation_from_counts`.

Expectation values come in two modes: EXACT (analytic ``<psi|P|psi>``,
``shots=None``) and shot sampling (append the basis rotation for each
non-identity site, sample the rotated state with a seeded generator, and
average measured parities). Global phase is never observable through either.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import (
    CapacityError,
    MAX_DENSE_QUBITS,
    PauliString,
    PauliTerm,
    expectation_from_counts,
)

GATE_ARITY = {"ry": 1, "rz": 1, "h": 1, "sdg": 1, "cx": 2}


class CircuitError(ValueError):
    """Invalid circuit structure or binding."""


@dataclass(frozen=True)
class Gate:
    """One gate: fixed-angle, or bound to a parameter slot (rotations only)."""

    kind: str
    qubits: tuple[int, ...]
    param_slot: int | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != GATE_ARITY[self.kind]:
            raise CircuitError(
                f"{self.kind} takes {GATE_ARITY[self.kind]} qubit(s), got {self.qubits}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{self.kind} targets must be distinct: {self.qubits}")
        if self.param_slot is not None and self.angle is not None:
            raise CircuitError("gate cannot have both a parameter slot and a bound angle")


@dataclass(frozen=True)
class Circuit:
    qubit_count: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        if self.qubit_count < 1:
            raise CircuitError("circuit needs at least one qubit")
        slots = []
        for g in self.gates:
            for q in g.qubits:
                if not (0 <= q < self.qubit_count):
                    raise CircuitError(
                        f"gate {g.kind} targets qubit {q}, register has "
                        f"{self.qubit_count}"
                    )
            if g.param_slot is not None:
                slots.append(g.param_slot)
        if slots and sorted(slots) != list(range(len(slots))):
            raise CircuitError(f"parameter slots not contiguous from 0: {sorted(slots)}")
        object.__setattr__(self, "_parameter_count", len(slots))

    @property
    def parameter_count(self) -> int:
        return self._parameter_count


@dataclass(frozen=True)
class AnsatzSpec:
    """Hardware-efficient ansatz family: rotation layers + linear CX chains.

    ``RA``: one Y rotation per qubit per layer; ``SU2``: a Y and a Z rotation
    per qubit per layer. ``reps`` entangling blocks, plus a final rotation
    layer.
    """

    kind: str
    qubit_count: int
    reps: int

    def __post_init__(self):
        if self.kind not in ("RA", "SU2"):
            raise CircuitError(f"ansatz kind must be 'RA' or 'SU2', got {self.kind!r}")
        if self.qubit_count < 1:
            raise CircuitError("ansatz needs at least one qubit")
        if self.reps < 1:
            raise CircuitError("ansatz needs reps >= 1")

    @property
    def parameter_count(self) -> int:
        per_layer = self.qubit_count * (1 if self.kind == "RA" else 2)
        return per_layer * (self.reps + 1)


def build_ansatz(spec: AnsatzSpec) -> Circuit:
    """Construct the ansatz circuit; parameter slots are assigned in gate order."""
    gates: list[Gate] = []
    slot = 0

    def rotation_layer():
        nonlocal slot
        for q in range(spec.qubit_count):
            gates.append(Gate("ry", (q,), param_slot=slot))
            slot += 1
        if spec.kind == "SU2":
            for q in range(spec.qubit_count):
                gates.append(Gate("rz", (q,), param_slot=slot))
                slot += 1

    for _ in range(spec.reps):
        rotation_layer()
        for q in range(spec.qubit_count - 1):
            gates.append(Gate("cx", (q, q + 1)))
    rotation_layer()
    return Circuit(qubit_count=spec.qubit_count, gates=tuple(gates))


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex
    )


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
# CX in the |control target> pair basis (control = first axis).
_CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def _gate_matrix(g: Gate, params: np.ndarray) -> np.ndarray:
    if g.kind == "ry":
        return _ry(params[g.param_slot] if g.param_slot is not None else g.angle)
    if g.kind == "rz":
        return _rz(params[g.param_slot] if g.param_slot is not None else g.angle)
    if g.kind == "h":
        return _H
    if g.kind == "sdg":
        return _SDG
    if g.kind == "cx":
        return _CX
    raise CircuitError(f"unknown gate kind {g.kind!r}")


def _apply_single(state: np.ndarray, n: int, q: int, u: np.ndarray) -> np.ndarray:
    t = state.reshape([2] * n)
    ax = n - 1 - q
    t = np.tensordot(u, t, axes=([1], [ax]))
    return np.moveaxis(t, 0, ax).reshape(-1)


def _apply_pair(
    state: np.ndarray, n: int, qa: int, qb: int, u: np.ndarray
) -> np.ndarray:
    t = state.reshape([2] * n)
    ax_a, ax_b = n - 1 - qa, n - 1 - qb
    t = np.tensordot(u.reshape(2, 2, 2, 2), t, axes=([2, 3], [ax_a, ax_b]))
    return np.moveaxis(t, [0, 1], [ax_a, ax_b]).reshape(-1)


def zero_state(qubit_count: int) -> np.ndarray:
    state = np.zeros(2**qubit_count, dtype=complex)
    state[0] = 1.0
    return state


def simulate(circuit: Circuit, params) -> np.ndarray:
    """Statevector from applying the circuit's gates in order to |0...0>."""
    if circuit.qubit_count > MAX_DENSE_QUBITS:
        raise CapacityError(
            f"{circuit.qubit_count} qubits exceeds statevector limit of "
            f"{MAX_DENSE_QUBITS}"
        )
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.parameter_count,):
        raise CircuitError(
            f"circuit has {circuit.parameter_count} parameter(s), got "
            f"{params.shape}"
        )
    state = zero_state(circuit.qubit_count)
    n = circuit.qubit_count
    for g in circuit.gates:
        u = _gate_matrix(g, params)
        if len(g.qubits) == 1:
            state = _apply_single(state, n, g.qubits[0], u)
        else:
            state = _apply_pair(state, n, g.qubits[0], g.qubits[1], u)
    return state


def apply_pauli(state: np.ndarray, n: int, p: PauliString) -> np.ndarray:
    """P|psi> by applying each non-identity site's 2x2 Pauli in place."""
    from .pauli import PAULI_MATRICES

    out = state
    for site, c in enumerate(p.label):
        if c != "I":
            out = _apply_single(out, n, site, PAULI_MATRICES[c])
    return out


def exact_expectation(state: np.ndarray, p: PauliString) -> float:
    """Analytic <psi|P|psi>; always real for Hermitian P."""
    n = int(np.log2(state.size))
    return float(np.real(np.vdot(state, apply_pauli(state, n, p))))


def rotate_to_z_basis(state: np.ndarray, p: PauliString) -> np.ndarray:
    """Append the measurement-basis change: H on X sites, Sdg then H on Y sites."""
    n = int(np.log2(state.size))
    out = state
    for site, c in enumerate(p.label):
        if c == "X":
            out = _apply_single(out, n, site, _H)
        elif c == "Y":
            out = _apply_single(out, n, site, _SDG)
            out = _apply_single(out, n, site, _H)
    return out


def index_to_bitstring(index: int, qubit_count: int) -> str:
    return "".join("1" if (index >> q) & 1 else "0" for q in range(qubit_count))


def sample_counts(state: np.ndarray, shots: int, rng: np.random.Generator) -> dict[str, int]:
    """Draw ``shots`` Z-basis samples from ``state``; keys are bitstrings with
    qubit i at character i."""
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    n = int(np.log2(state.size))
    probs = np.abs(state) ** 2
    probs = probs / probs.sum()
    draws = rng.multinomial(shots, probs)
    return {
        index_to_bitstring(i, n): int(c) for i, c in enumerate(draws) if c > 0
    }


def derive_seed(*parts: int) -> int:
    """Deterministic integer hash of seed components (stable across runs and
    platforms); used to give every sampled circuit its own stream."""
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])


def expectation_from_state(
    state: np.ndarray,
    p: PauliString,
    shots: int | None = None,
    rng_seed: int | None = None,
) -> float:
    """Expectation of ``p`` on a prepared state: EXACT when ``shots`` is None,
    otherwise rotate, sample, and average parities."""
    if shots is None:
        return exact_expectation(state, p)
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    rng = np.random.default_rng(rng_seed)
    rotated = rotate_to_z_basis(state, p)
    counts = sample_counts(rotated, shots, rng)
    return expectation_from_counts(counts, p)


def observable_expectation(
    circuit: Circuit,
    params,
    p: PauliString,
    shots: int | None = None,
    rng_seed: int | None = None,
) -> float:
    if len(p) != circuit.qubit_count:
        raise CircuitError(
            f"observable has {len(p)} sites, circuit has {circuit.qubit_count} qubits"
        )
    state = simulate(circuit, params)
    return expectation_from_state(state, p, shots=shots, rng_seed=rng_seed)


def hamiltonian_energy(
    circuit: Circuit,
    params,
    terms: list[PauliTerm] | tuple[PauliTerm, ...],
    shots: int | None = None,
    rng_seed: int | None = None,
    offset: float = 0.0,
) -> float:
    """Weighted sum of term expectations plus a caller-supplied constant offset.

    Each term samples from its own sub-seed derived from ``rng_seed`` and the
    term's position, so editing one term never perturbs the others' samples.
    """
    if not terms:
        return offset
    state = simulate(circuit, params)
    energy = offset
    base = 0 if rng_seed is None else rng_seed
    for idx, term in enumerate(terms):
        sub = None if shots is None else derive_seed(base, idx)
        energy += term.coefficient * expectation_from_state(
            state, term.string, shots=shots, rng_seed=sub
        )
    return energy
