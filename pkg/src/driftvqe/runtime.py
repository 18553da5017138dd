"""Controller loop: staged job execution, drift detection, iteration skipping.

One *job* evaluates a single SPSA perturbation pair. Stage S1 measures the
dominant ("prime") subset for the current pair and re-executes every stored
reference pair's prime subset under the current job's drift. The detector
compares reference reruns against their recorded energies; the job is
accepted only when the machine-observed gradient and the detrended gradient
point the same way. On acceptance, stage S2 measures the remaining ("minor")
subset and the optimizer advances. Rescheduled jobs are discarded whole; a
cap of ``sigma`` consecutive reschedules refreshes the reference energies to
the shifted landscape so the run cannot stall under persistent drift.

Per-iteration energy bookkeeping: E_i is the mean of the pair's two subset
energies, and reference records store both parameter vectors so reruns
reproduce the full pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from enum import Enum
from math import fsum

import numpy as np

from .drift import DriftTrace, apply_drift
from .engine import (
    AnsatzSpec,
    Circuit,
    build_ansatz,
    derive_seed,
    expectation_from_state,
    simulate,
)
from .pauli import (
    Hamiltonian,
    PauliTerm,
    ground_state_energy,
    partition_prime_minor,
)
from .spsa import SpsaConfig, SpsaOptimizer, random_initial_point

# substream tags for the run-level seed
_SEED_INIT = 11
_SEED_SAMPLING = 13
_SEED_JITTER = 17

# accepted energies averaged for the run's headline final-energy statistic
SMOOTHING_WINDOW = 5


class Decision(str, Enum):
    ACCEPT = "accept"
    RESCHEDULE = "reschedule"


class ControllerKind(str, Enum):
    BASELINE = "baseline"  # plain loop: no references, no detection
    SINGLE_REF = "single_ref"  # one full-Hamiltonian reference
    MULTI_REF = "multi_ref"  # K prime-subset references


class ControllerProtocolError(RuntimeError):
    """Stage or optimizer called out of order."""


class TraceExhaustedError(RuntimeError):
    """The run needed more jobs than the drift trace covers."""


@dataclass(frozen=True)
class ControllerConfig:
    kind: ControllerKind
    k: int = 1
    th_p: float = 0.8
    sigma: int = 3
    shots: int | None = None  # None = EXACT expectations
    weights: tuple[float, ...] | None = None
    accept_tolerance: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ControllerKind(self.kind))
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not (0.0 < self.th_p <= 1.0):
            raise ValueError(f"th_p must be in (0, 1], got {self.th_p}")
        if self.sigma < 1:
            raise ValueError(f"sigma must be >= 1, got {self.sigma}")
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be positive or None, got {self.shots}")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != self.k:
                raise ValueError(f"weights length {len(w)} != k {self.k}")
            if any(x <= 0 for x in w):
                raise ValueError("weights must be positive")
            total = fsum(w)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"weights must sum to 1, got {total}")
            object.__setattr__(self, "weights", w)
        if self.accept_tolerance is not None and self.accept_tolerance < 0:
            raise ValueError("accept_tolerance must be >= 0")

    @property
    def window_capacity(self) -> int:
        if self.kind == ControllerKind.BASELINE:
            return 0
        if self.kind == ControllerKind.SINGLE_REF:
            return 1
        return self.k

    @property
    def effective_th_p(self) -> float:
        """Detection controllers without subsetting treat every term as prime."""
        if self.kind == ControllerKind.MULTI_REF:
            return self.th_p
        return 1.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "k": self.k,
            "th_p": self.th_p,
            "sigma": self.sigma,
            "shots": self.shots,
            "weights": list(self.weights) if self.weights else None,
            "accept_tolerance": self.accept_tolerance,
        }


@dataclass(frozen=True)
class DetectionResult:
    """Detector quantities for one job.

    ``drift_estimate`` is the weighted discrepancy between reference reruns
    and their recorded energies; ``detrended_energy`` removes it from the
    current prime energy. The two gradients compare current energy against
    the weighted reference mean, with and without detrending; the job is
    accepted only on strict sign agreement (their product > 0), optionally
    relaxed by a magnitude tolerance.
    """

    drift_estimate: float  # D
    detrended_energy: float  # Ef
    detrended_gradient: float  # Gf
    machine_gradient: float  # G
    decision: Decision

    def to_dict(self) -> dict:
        return {
            "D": self.drift_estimate,
            "Ef": self.detrended_energy,
            "Gf": self.detrended_gradient,
            "G": self.machine_gradient,
            "decision": self.decision.value,
        }


def _accepts(g: float, gf: float, tolerance: float | None) -> bool:
    if g * gf > 0.0:
        return True
    if tolerance is not None and abs(gf - g) <= tolerance * abs(g):
        return True
    return False


def multi_reference_detect(
    recorded: list[float] | tuple[float, ...],
    reruns: list[float] | tuple[float, ...],
    current: float,
    weights: list[float] | tuple[float, ...],
    accept_tolerance: float | None = None,
) -> DetectionResult:
    """Weighted multi-reference drift detection.

    ``recorded``/``reruns``/``weights`` are aligned most-recent-first;
    weights must be normalized. Raises on an empty window - warm-up jobs
    skip detection entirely rather than fabricating a result.
    """
    if len(recorded) == 0:
        raise ControllerProtocolError("detection requires at least one reference")
    if not (len(recorded) == len(reruns) == len(weights)):
        raise ValueError(
            f"mismatched lengths: recorded {len(recorded)}, reruns "
            f"{len(reruns)}, weights {len(weights)}"
        )
    total_w = fsum(weights)
    if abs(total_w - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {total_w}")
    drift = fsum(w * (rr - rec) for w, rr, rec in zip(weights, reruns, recorded))
    detrended = current - drift
    ref_mean = fsum(w * rec for w, rec in zip(weights, recorded))
    gf = detrended - ref_mean
    g = current - ref_mean
    decision = Decision.ACCEPT if _accepts(g, gf, accept_tolerance) else Decision.RESCHEDULE
    return DetectionResult(
        drift_estimate=drift,
        detrended_energy=detrended,
        detrended_gradient=gf,
        machine_gradient=g,
        decision=decision,
    )


def single_reference_detect(
    recorded: float,
    rerun: float,
    current: float,
    accept_tolerance: float | None = None,
) -> DetectionResult:
    """Single-reference detection against the adjacent previous iteration."""
    drift = rerun - recorded
    detrended = current - drift
    gf = detrended - recorded
    g = current - recorded
    decision = Decision.ACCEPT if _accepts(g, gf, accept_tolerance) else Decision.RESCHEDULE
    return DetectionResult(
        drift_estimate=drift,
        detrended_energy=detrended,
        detrended_gradient=gf,
        machine_gradient=g,
        decision=decision,
    )


@dataclass
class ReferenceRecord:
    iteration_index: int
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    recorded_prime_energy: float  # pair-mean prime energy at recording time


class ReferenceWindow:
    """Ring buffer of the most recent accepted iterations, newest first.

    Recorded energies change through exactly two paths: ``push`` on an
    accepted iteration and ``refresh_energies`` at max-out.
    """

    def __init__(self, capacity: int, weights: tuple[float, ...] | None = None):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.capacity = capacity
        self._custom_weights = weights
        self._records: list[ReferenceRecord] = []

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[ReferenceRecord]:
        return list(self._records)

    def push(self, record: ReferenceRecord) -> None:
        if self.capacity == 0:
            return
        self._records.insert(0, record)
        del self._records[self.capacity :]

    def refresh_energies(self, reruns: list[float] | tuple[float, ...]) -> None:
        if len(reruns) != len(self._records):
            raise ValueError(
                f"{len(reruns)} rerun energies for {len(self._records)} records"
            )
        for record, rerun in zip(self._records, reruns):
            record.recorded_prime_energy = rerun

    def weights(self) -> tuple[float, ...]:
        """Normalized weights for the current window size (uniform unless
        configured); a partial window renormalizes the leading entries."""
        m = len(self._records)
        if m == 0:
            return ()
        if self._custom_weights is None:
            return (1.0 / m,) * m
        head = self._custom_weights[:m]
        total = fsum(head)
        return tuple(w / total for w in head)

    def recorded_energies(self) -> tuple[float, ...]:
        return tuple(r.recorded_prime_energy for r in self._records)


@dataclass
class JobRecord:
    """Everything observed and decided in one job, enough to recompute the
    detector's quantities independently."""

    job: int
    iteration: int
    decision: str
    warm_up: bool
    offset: float
    e_prime_pair: tuple[float, float]
    e_prime: float
    ref_recorded: tuple[float, ...]
    ref_reruns: tuple[float, ...]
    weights: tuple[float, ...]
    detection: DetectionResult | None
    e_minor_pair: tuple[float, float] | None
    energy_pair: tuple[float, float] | None
    energy: float | None
    s1_circuits: int
    s2_circuits: int
    refreshed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["detection"] = self.detection.to_dict() if self.detection else None
        return d


@dataclass
class RunSummary:
    accepted_iterations: int
    skip_count: int
    total_jobs: int
    s1_circuits: int
    s2_circuits: int
    total_circuits: int
    first_accepted_energy: float | None
    final_energy: float | None
    final_energy_smoothed: float | None
    ground_energy: float | None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunRecord:
    controller: str
    jobs: list[JobRecord]
    energies: list[float]  # accepted energy per iteration, in order
    summary: RunSummary
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "controller": self.controller,
            "meta": self.meta,
            "summary": self.summary.to_dict(),
            "energies": self.energies,
            "jobs": [j.to_dict() for j in self.jobs],
        }


def save_run_record(record: RunRecord, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record.to_dict(), fh, indent=1)
        fh.write("\n")


def load_run_record_dict(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


class _SubsetEvaluator:
    """Measures subset energies for parameter vectors under a job's drift.

    Every term owns an id that is stable for the whole run, so its sampling
    stream depends only on (run seed, job, evaluation slot, perturbation,
    term id) and never on which subset it is evaluated with.
    """

    def __init__(
        self,
        circuit: Circuit,
        trace: DriftTrace | None,
        shots: int | None,
        run_seed: int,
    ):
        self.circuit = circuit
        self.trace = trace
        self.shots = shots
        self.run_seed = run_seed
        self.energy_scale = trace.config.energy_scale if trace else 1.0
        self.per_circuit_std = trace.config.per_circuit_std if trace else 0.0
        self._state_cache: dict[bytes, np.ndarray] = {}
        self.circuits_executed = 0

    def _state_for(self, theta: np.ndarray) -> np.ndarray:
        key = np.asarray(theta, dtype=float).tobytes()
        state = self._state_cache.get(key)
        if state is None:
            state = simulate(self.circuit, theta)
            if len(self._state_cache) > 64:
                self._state_cache.clear()
            self._state_cache[key] = state
        return state

    def subset_energy(
        self,
        terms: tuple[tuple[int, PauliTerm], ...],
        theta: np.ndarray,
        job: int,
        eval_slot: int,
        perturbation: int,
    ) -> float:
        """Coefficient-weighted sum of drifted term expectations (no identity
        offset). ``eval_slot`` 0 is the current pair; slot n+1 is reference n."""
        if not terms:
            return 0.0
        state = self._state_for(theta)
        total = 0.0
        for term_id, term in terms:
            sub_seed = derive_seed(self.run_seed, job, eval_slot, perturbation, term_id)
            value = expectation_from_state(
                state, term.string, shots=self.shots, rng_seed=sub_seed
            )
            if self.trace is not None:
                value = apply_drift(value, self.trace, job, self.energy_scale)
                if self.per_circuit_std > 0.0:
                    jitter_rng = np.random.default_rng(
                        derive_seed(
                            self.run_seed,
                            _SEED_JITTER,
                            job,
                            eval_slot,
                            perturbation,
                            term_id,
                        )
                    )
                    value += jitter_rng.normal(0.0, self.per_circuit_std) * self.energy_scale
            total += term.coefficient * value
            self.circuits_executed += 1
        return total


def _indexed(terms: tuple[PauliTerm, ...], start: int) -> tuple[tuple[int, PauliTerm], ...]:
    return tuple((start + i, t) for i, t in enumerate(terms))


@dataclass
class Stage1Result:
    """Prime-subset energies measured in one job's first stage."""

    job: int
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    e_prime_pair: tuple[float, float]
    e_prime: float  # pair mean, the job's E(P)
    ref_recorded: tuple[float, ...]
    ref_reruns: tuple[float, ...]
    weights: tuple[float, ...]
    circuits: int


class ControllerSession:
    """Mutable state of one controller run; strictly sequential across jobs.

    ``step()`` performs one full job. The stage methods are exposed so the
    protocol itself is testable: stage 2 refuses to run for a job that was
    not accepted.
    """

    def __init__(
        self,
        hamiltonian: Hamiltonian,
        ansatz: AnsatzSpec,
        controller: ControllerConfig,
        spsa: SpsaConfig,
        trace: DriftTrace | None = None,
        seed: int = 0,
    ):
        if ansatz.qubit_count != hamiltonian.qubit_count:
            raise ValueError(
                f"ansatz is on {ansatz.qubit_count} qubits, Hamiltonian on "
                f"{hamiltonian.qubit_count}"
            )
        self.hamiltonian = hamiltonian
        self.ansatz = ansatz
        self.controller = controller
        self.spsa = spsa
        self.trace = trace
        self.seed = seed

        self.partition = partition_prime_minor(hamiltonian, controller.effective_th_p)
        self.prime = _indexed(self.partition.prime, 0)
        self.minor = _indexed(self.partition.minor, len(self.partition.prime))
        self.identity_offset = self.partition.identity_offset

        self.circuit = build_ansatz(ansatz)
        theta0 = random_initial_point(
            self.circuit.parameter_count, derive_seed(seed, _SEED_INIT)
        )
        self.optimizer = SpsaOptimizer(theta0, spsa)
        self.window = ReferenceWindow(controller.window_capacity, controller.weights)
        self.evaluator = _SubsetEvaluator(
            self.circuit, trace, controller.shots, derive_seed(seed, _SEED_SAMPLING)
        )

        self.job = 0
        self.consecutive_skips = 0
        self.skip_count = 0
        self.jobs: list[JobRecord] = []
        self.energies: list[float] = []
        self._last_decision: Decision | None = None

    @property
    def iteration(self) -> int:
        return len(self.energies)

    def run_stage1(self) -> Stage1Result:
        """Measure the prime subset for the current pair and rerun every
        reference pair's prime subset under this job's drift."""
        if self.trace is not None and self.job >= self.trace.horizon:
            raise TraceExhaustedError(
                f"drift trace covers {self.trace.horizon} jobs; job {self.job} "
                f"requested with {self.iteration} iterations accepted"
            )
        theta_plus, theta_minus = self.optimizer.ask()
        ep_plus = self.evaluator.subset_energy(self.prime, theta_plus, self.job, 0, 0)
        ep_minus = self.evaluator.subset_energy(self.prime, theta_minus, self.job, 0, 1)
        reruns = []
        for n, record in enumerate(self.window.records):
            er_plus = self.evaluator.subset_energy(
                self.prime, record.theta_plus, self.job, n + 1, 0
            )
            er_minus = self.evaluator.subset_energy(
                self.prime, record.theta_minus, self.job, n + 1, 1
            )
            reruns.append((er_plus + er_minus) / 2.0)
        return Stage1Result(
            job=self.job,
            theta_plus=theta_plus,
            theta_minus=theta_minus,
            e_prime_pair=(ep_plus, ep_minus),
            e_prime=(ep_plus + ep_minus) / 2.0,
            ref_recorded=self.window.recorded_energies(),
            ref_reruns=tuple(reruns),
            weights=self.window.weights(),
            circuits=(len(self.window) + 1) * len(self.prime) * 2,
        )

    def detect(self, stage1: Stage1Result) -> DetectionResult | None:
        """Decide the job. Returns None (auto-accept) for the baseline
        controller and for the warm-up job with an empty window."""
        if self.controller.kind == ControllerKind.BASELINE or len(stage1.ref_recorded) == 0:
            return None
        if self.controller.kind == ControllerKind.SINGLE_REF:
            return single_reference_detect(
                stage1.ref_recorded[0],
                stage1.ref_reruns[0],
                stage1.e_prime,
                self.controller.accept_tolerance,
            )
        return multi_reference_detect(
            stage1.ref_recorded,
            stage1.ref_reruns,
            stage1.e_prime,
            stage1.weights,
            self.controller.accept_tolerance,
        )

    def run_stage2(self, stage1: Stage1Result) -> tuple[float, float]:
        """Measure the minor subset for an accepted job's pair."""
        if self._last_decision != Decision.ACCEPT:
            raise ControllerProtocolError("stage 2 requested for a job that was not accepted")
        em_plus = self.evaluator.subset_energy(
            self.minor, stage1.theta_plus, stage1.job, 0, 0
        )
        em_minus = self.evaluator.subset_energy(
            self.minor, stage1.theta_minus, stage1.job, 0, 1
        )
        return em_plus, em_minus

    def step(self) -> JobRecord:
        """One full job: stage 1, decision, and either stage 2 + optimizer
        advance or a reschedule (with max-out refresh when due)."""
        stage1 = self.run_stage1()
        detection = self.detect(stage1)
        warm_up = (
            detection is None and self.controller.kind != ControllerKind.BASELINE
        )
        decision = detection.decision if detection is not None else Decision.ACCEPT
        self._last_decision = decision

        e_minor_pair = None
        energy_pair = None
        energy = None
        s2 = 0
        refreshed = False
        iteration = self.iteration

        if decision == Decision.ACCEPT:
            em_plus, em_minus = self.run_stage2(stage1)
            s2 = len(self.minor) * 2
            total_plus = stage1.e_prime_pair[0] + em_plus + self.identity_offset
            total_minus = stage1.e_prime_pair[1] + em_minus + self.identity_offset
            self.optimizer.tell(total_plus, total_minus)
            energy = (total_plus + total_minus) / 2.0
            e_minor_pair = (em_plus, em_minus)
            energy_pair = (total_plus, total_minus)
            self.energies.append(energy)
            self.window.push(
                ReferenceRecord(
                    iteration_index=iteration,
                    theta_plus=stage1.theta_plus,
                    theta_minus=stage1.theta_minus,
                    recorded_prime_energy=stage1.e_prime,
                )
            )
            self.consecutive_skips = 0
        else:
            self.skip_count += 1
            self.consecutive_skips += 1
            if self.consecutive_skips == self.controller.sigma:
                # max-out: rebase detection on the shifted landscape; the
                # iteration itself is still not accepted and S2 never runs
                self.window.refresh_energies(stage1.ref_reruns)
                self.consecutive_skips = 0
                refreshed = True

        record = JobRecord(
            job=stage1.job,
            iteration=iteration,
            decision=decision.value,
            warm_up=warm_up,
            offset=self.trace.offsets[stage1.job] if self.trace is not None else 0.0,
            e_prime_pair=stage1.e_prime_pair,
            e_prime=stage1.e_prime,
            ref_recorded=stage1.ref_recorded,
            ref_reruns=stage1.ref_reruns,
            weights=stage1.weights,
            detection=detection,
            e_minor_pair=e_minor_pair,
            energy_pair=energy_pair,
            energy=energy,
            s1_circuits=stage1.circuits,
            s2_circuits=s2,
            refreshed=refreshed,
        )
        self.jobs.append(record)
        self.job += 1
        self._last_decision = None
        return record

    def s1_circuits_total(self) -> int:
        return sum(j.s1_circuits for j in self.jobs)

    def s2_circuits_total(self) -> int:
        return sum(j.s2_circuits for j in self.jobs)


def run_experiment(
    hamiltonian: Hamiltonian,
    ansatz: AnsatzSpec,
    controller: ControllerConfig,
    spsa: SpsaConfig,
    budget: int,
    trace: DriftTrace | None = None,
    seed: int = 0,
    max_jobs: int | None = None,
    compute_ground_energy: bool = True,
) -> RunRecord:
    """Run one controller until ``budget`` iterations are accepted.

    Skipped jobs consume drift-trace entries but not budget. Raises
    :class:`TraceExhaustedError` if the trace runs out of jobs first.
    """
    if budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    if max_jobs is None:
        max_jobs = budget * 64 + 64
    session = ControllerSession(hamiltonian, ansatz, controller, spsa, trace, seed)

    while session.iteration < budget:
        if session.job >= max_jobs:
            raise ControllerProtocolError(
                f"exceeded max_jobs={max_jobs} with only {session.iteration} of "
                f"{budget} iterations accepted"
            )
        session.step()

    ground = None
    if compute_ground_energy:
        ground = ground_state_energy(hamiltonian)

    energies = session.energies
    tail = energies[-SMOOTHING_WINDOW:]
    summary = RunSummary(
        accepted_iterations=len(energies),
        skip_count=session.skip_count,
        total_jobs=session.job,
        s1_circuits=session.s1_circuits_total(),
        s2_circuits=session.s2_circuits_total(),
        total_circuits=session.s1_circuits_total() + session.s2_circuits_total(),
        first_accepted_energy=energies[0] if energies else None,
        final_energy=energies[-1] if energies else None,
        final_energy_smoothed=float(np.mean(tail)) if tail else None,
        ground_energy=ground,
    )
    meta = {
        "controller": controller.to_dict(),
        "ansatz": {
            "kind": ansatz.kind,
            "qubit_count": ansatz.qubit_count,
            "reps": ansatz.reps,
        },
        "spsa": {
            "a0": spsa.a0,
            "alpha": spsa.alpha,
            "c0": spsa.c0,
            "gamma": spsa.gamma,
            "seed": spsa.seed,
        },
        "budget": budget,
        "seed": seed,
        "qubit_count": hamiltonian.qubit_count,
        "term_count": len(hamiltonian),
        "prime_size": len(session.prime),
        "minor_size": len(session.minor),
        "identity_offset": session.identity_offset,
        "trace_seed": trace.seed if trace is not None else None,
        "trace_horizon": trace.horizon if trace is not None else None,
        "energy_scale": session.evaluator.energy_scale,
    }
    return RunRecord(
        controller=controller.kind.value,
        jobs=session.jobs,
        energies=energies,
        summary=summary,
        meta=meta,
    )


def progress_quality(record: RunRecord) -> float | None:
    """Normalized progress from the first accepted energy toward the ground
    energy; 1 means the run closed the whole gap. Needs the ground oracle."""
    s = record.summary
    if (
        s.first_accepted_energy is None
        or s.final_energy_smoothed is None
        or s.ground_energy is None
    ):
        return None
    gap = s.first_accepted_energy - s.ground_energy
    if gap == 0.0:
        return None
    return (s.first_accepted_energy - s.final_energy_smoothed) / gap
