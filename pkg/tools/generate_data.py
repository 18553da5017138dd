"""Regenerate the synthetic reference Hamiltonians under hamiltonians/.

All files are synthetic test fixtures: coefficient profiles are shaped to
hit specific observable counts and dominant-subset sizes at an 0.8
cumulative threshold, and the dihydrogen-style family follows a smooth
Morse-like curve. None of them claim chemistry accuracy.

Run from the repo root:  python tools/generate_data.py
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from driftvqe.pauli import ground_state_energy, parse_hamiltonian  # noqa: E402

OUT = ROOT / "hamiltonians"

TOY = """\
# synthetic 2-qubit toy with one dominant observable
# at TH 0.8 the dominant subset is {XX} with share 1.4/1.47
XX 1.4
ZI 0.05
ZX 0.02
"""

HEH_LIKE = """\
# synthetic 4-qubit test Hamiltonian shaped like a small-ion case:
# 4 measured observables, 1 dominant at an 0.8 cumulative threshold
IIII -1.15
ZIII -1.40
ZZII 0.16
XXII -0.10
IZZI 0.06
"""


def _random_label(rng: np.random.Generator, qubits: int, used: set[str]) -> str:
    while True:
        weight = int(rng.integers(1, min(4, qubits) + 1))
        sites = rng.choice(qubits, size=weight, replace=False)
        label = ["I"] * qubits
        for s in sites:
            label[s] = "XYZ"[int(rng.integers(0, 3))]
        text = "".join(label)
        if text not in used:
            used.add(text)
            return text


def profile_hamiltonian(
    qubits: int,
    prime_coeffs: list[float],
    minor_count: int,
    minor_lo: float,
    minor_hi: float,
    identity: float,
    seed: int,
    header: str,
) -> str:
    rng = np.random.default_rng(seed)
    used: set[str] = {"I" * qubits}
    lines = [header, f"{'I' * qubits} {identity}"]
    minors = np.linspace(minor_hi, minor_lo, minor_count)
    for c in list(prime_coeffs) + list(minors):
        sign = -1.0 if rng.random() < 0.5 else 1.0
        label = _random_label(rng, qubits, used)
        lines.append(f"{label} {sign * c:.6f}")
    return "\n".join(lines) + "\n"


def h2_style_coefficients(d: float) -> dict[str, float]:
    """Smooth synthetic dissociation-style curves over bond length d.

    The identity offset is chosen so the total ground energy follows a
    Morse-shaped target (minimum near 0.735, dissociation plateau), while
    the measured observables keep bond-length-dependent weights.
    """
    zi = 0.35 * np.exp(-0.8 * (d - 0.4))
    zz = 0.012
    xx = 0.09 + 0.10 * np.tanh(d - 0.3)
    matrix = np.diag([2 * zi + zz, -zz, -zz, -2 * zi + zz]).astype(float)
    matrix[0, 3] = matrix[3, 0] = xx
    matrix[1, 2] = matrix[2, 1] = xx
    lam = float(np.linalg.eigvalsh(matrix)[0])
    target = -1.12 + 0.35 * (1.0 - np.exp(-1.3 * (d - 0.735))) ** 2
    return {
        "II": target - lam,
        "ZI": zi,
        "IZ": zi,
        "ZZ": zz,
        "XX": xx,
    }


BOND_LENGTHS = [0.4, 0.6, 0.735, 0.8, 1.0, 1.2, 1.4, 1.6, 1.9, 2.2]


def main() -> None:
    OUT.mkdir(exist_ok=True)
    (OUT / "toy_xx_dominant.ham").write_text(TOY)
    (OUT / "heh_like_4q.ham").write_text(HEH_LIKE)

    lih_like = profile_hamiltonian(
        qubits=6,
        prime_coeffs=[0.75, 0.65, 0.55, 0.45],
        minor_count=9,
        minor_lo=0.02,
        minor_hi=0.08,
        identity=-2.1,
        seed=61,
        header=(
            "# synthetic 6-qubit test Hamiltonian: 13 measured observables,\n"
            "# 4 dominant at an 0.8 cumulative threshold"
        ),
    )
    (OUT / "lih_like_6q.ham").write_text(lih_like)

    hf_like = profile_hamiltonian(
        qubits=8,
        prime_coeffs=[0.94, 0.88, 0.82, 0.76, 0.70, 0.64, 0.58, 0.52],
        minor_count=68,
        minor_lo=0.0035,
        minor_hi=0.032,
        identity=-3.8,
        seed=83,
        header=(
            "# synthetic 8-qubit test Hamiltonian: 76 measured observables,\n"
            "# 8 dominant at an 0.8 cumulative threshold"
        ),
    )
    (OUT / "hf_like_8q.ham").write_text(hf_like)

    family = OUT / "h2_family"
    family.mkdir(exist_ok=True)
    for d in BOND_LENGTHS:
        coeffs = h2_style_coefficients(d)
        lines = [
            "# synthetic 2-qubit dihydrogen-style file (smooth test family,",
            f"# not chemistry-accurate); bond length {d:.3f}",
        ]
        for label, value in coeffs.items():
            lines.append(f"{label} {value:.8f}")
        (family / f"h2_d{d:.3f}.ham").write_text("\n".join(lines) + "\n")

    # sanity echo
    from driftvqe.pauli import partition_prime_minor

    for name in ["toy_xx_dominant", "heh_like_4q", "lih_like_6q", "hf_like_8q"]:
        text = (OUT / f"{name}.ham").read_text()
        h = parse_hamiltonian(text)
        part = partition_prime_minor(h, 0.8)
        print(
            f"{name}: qubits={h.qubit_count} observables={len(h.non_identity_terms())} "
            f"prime={len(part.prime)} minor={len(part.minor)} share={part.prime_share:.3f} "
            f"ground={ground_state_energy(h):.4f}"
        )
    for d in BOND_LENGTHS:
        h = parse_hamiltonian((family / f"h2_d{d:.3f}.ham").read_text())
        print(f"h2 d={d:.3f}: ground={ground_state_energy(h):+.5f}")


if __name__ == "__main__":
    main()
