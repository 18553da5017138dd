"""Synthetic per-job noise-drift traces: generation, persistence, replay.

A trace assigns every job an additive offset, expressed as a fraction of a
configured energy scale. Offsets are the sum of mild per-job jitter and
episodic disturbances of four shapes:

* ``STEP``   - constant offset for the episode's duration
* ``SPIKE``  - full magnitude at onset, linearly decaying to zero
* ``RAMP``   - linearly building to full magnitude by the episode's last job
* ``RANDOM_WALK`` - seeded cumulative Gaussian wander within the episode

Episodes can be scripted explicitly or sampled from per-shape rates; either
way a trace is a pure function of its config, so replay never needs the
original process. Inside one job the same offset applies to every circuit,
which is what lets the detection math cancel drift exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .engine import derive_seed

SHAPES = ("STEP", "SPIKE", "RAMP", "RANDOM_WALK")

# substream tags so adding one noise source never shifts another's draws
_BASELINE_STREAM = 1
_SHAPE_STREAM_BASE = 100


class TraceFormatError(ValueError):
    """Trace file missing, truncated, or structurally wrong."""


@dataclass(frozen=True)
class DriftEpisode:
    start_job: int
    duration_jobs: int
    magnitude: float
    shape: str

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if self.duration_jobs < 1:
            raise ValueError(f"duration_jobs must be >= 1, got {self.duration_jobs}")
        if not np.isfinite(self.magnitude):
            raise ValueError(f"magnitude must be finite, got {self.magnitude}")

    def _identity_seed(self, trace_seed: int) -> int:
        mag_bits = int(np.float64(self.magnitude).view(np.uint64))
        return derive_seed(
            trace_seed,
            self.start_job,
            self.duration_jobs,
            mag_bits,
            SHAPES.index(self.shape),
        )

    def contribution(self, horizon: int, trace_seed: int) -> np.ndarray:
        """Offset contribution of this episode over the full horizon.

        Keyed by the episode's own fields (not its position in a list) so
        that traces superpose: the sum of two single-episode traces equals
        the two-episode trace.
        """
        out = np.zeros(horizon)
        start = self.start_job
        length = min(self.duration_jobs, max(0, horizon - start))
        if start >= horizon or length <= 0:
            return out
        k = np.arange(length)
        if self.shape == "STEP":
            vals = np.full(length, self.magnitude)
        elif self.shape == "SPIKE":
            vals = self.magnitude * (1.0 - k / self.duration_jobs)
        elif self.shape == "RAMP":
            vals = self.magnitude * (k + 1) / self.duration_jobs
        else:  # RANDOM_WALK
            rng = np.random.default_rng(self._identity_seed(trace_seed))
            vals = np.cumsum(rng.normal(0.0, abs(self.magnitude), self.duration_jobs))[
                :length
            ]
        out[start : start + length] = vals
        return out


@dataclass(frozen=True)
class EpisodeRate:
    """Random-episode generator settings for one shape."""

    rate_per_job: float = 0.0
    magnitude_range: tuple[float, float] = (0.05, 0.2)
    duration_range: tuple[int, int] = (1, 10)
    signed: bool = True

    def __post_init__(self):
        if self.rate_per_job < 0:
            raise ValueError(f"rate_per_job must be >= 0, got {self.rate_per_job}")
        if self.magnitude_range[0] > self.magnitude_range[1]:
            raise ValueError(f"magnitude_range out of order: {self.magnitude_range}")
        if not (1 <= self.duration_range[0] <= self.duration_range[1]):
            raise ValueError(f"duration_range invalid: {self.duration_range}")


@dataclass(frozen=True)
class NoiseConfig:
    horizon_jobs: int
    seed: int = 0
    baseline_std: float = 0.0
    energy_scale: float = 1.0
    rates: dict = field(default_factory=dict)  # shape name -> EpisodeRate
    episodes: tuple[DriftEpisode, ...] = ()  # scripted episodes
    per_circuit_std: float = 0.0  # optional per-circuit jitter, off by default

    def __post_init__(self):
        if self.horizon_jobs < 1:
            raise ValueError(f"horizon_jobs must be >= 1, got {self.horizon_jobs}")
        if self.baseline_std < 0:
            raise ValueError(f"baseline_std must be >= 0, got {self.baseline_std}")
        if self.energy_scale <= 0:
            raise ValueError(f"energy_scale must be > 0, got {self.energy_scale}")
        if self.per_circuit_std < 0:
            raise ValueError(f"per_circuit_std must be >= 0, got {self.per_circuit_std}")
        for shape in self.rates:
            if shape not in SHAPES:
                raise ValueError(f"unknown shape {shape!r} in rates")

    def to_dict(self) -> dict:
        return {
            "horizon_jobs": self.horizon_jobs,
            "seed": self.seed,
            "baseline_std": self.baseline_std,
            "energy_scale": self.energy_scale,
            "per_circuit_std": self.per_circuit_std,
            "rates": {
                shape: {
                    "rate_per_job": r.rate_per_job,
                    "magnitude_range": list(r.magnitude_range),
                    "duration_range": list(r.duration_range),
                    "signed": r.signed,
                }
                for shape, r in self.rates.items()
            },
            "episodes": [
                {
                    "start_job": e.start_job,
                    "duration_jobs": e.duration_jobs,
                    "magnitude": e.magnitude,
                    "shape": e.shape,
                }
                for e in self.episodes
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseConfig":
        try:
            rates = {
                shape: EpisodeRate(
                    rate_per_job=r["rate_per_job"],
                    magnitude_range=tuple(r["magnitude_range"]),
                    duration_range=tuple(r["duration_range"]),
                    signed=r.get("signed", True),
                )
                for shape, r in d.get("rates", {}).items()
            }
            episodes = tuple(
                DriftEpisode(
                    start_job=e["start_job"],
                    duration_jobs=e["duration_jobs"],
                    magnitude=e["magnitude"],
                    shape=e["shape"],
                )
                for e in d.get("episodes", [])
            )
            return cls(
                horizon_jobs=d["horizon_jobs"],
                seed=d.get("seed", 0),
                baseline_std=d.get("baseline_std", 0.0),
                energy_scale=d.get("energy_scale", 1.0),
                per_circuit_std=d.get("per_circuit_std", 0.0),
                rates=rates,
                episodes=episodes,
            )
        except (KeyError, TypeError) as exc:
            raise TraceFormatError(f"bad noise config: {exc}") from exc


@dataclass(frozen=True)
class DriftTrace:
    offsets: tuple[float, ...]
    config: NoiseConfig
    episodes: tuple[DriftEpisode, ...]  # scripted + sampled, in effect

    def __post_init__(self):
        if len(self.offsets) != self.config.horizon_jobs:
            raise TraceFormatError(
                f"offsets length {len(self.offsets)} != horizon "
                f"{self.config.horizon_jobs}"
            )

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def baseline_std(self) -> float:
        return self.config.baseline_std

    @property
    def horizon(self) -> int:
        return self.config.horizon_jobs


def _sample_episodes(cfg: NoiseConfig) -> list[DriftEpisode]:
    sampled: list[DriftEpisode] = []
    for shape_index, shape in enumerate(SHAPES):
        rate = cfg.rates.get(shape)
        if rate is None or rate.rate_per_job == 0.0:
            continue
        rng = np.random.default_rng(
            derive_seed(cfg.seed, _SHAPE_STREAM_BASE + shape_index)
        )
        starts = np.nonzero(rng.random(cfg.horizon_jobs) < rate.rate_per_job)[0]
        for start in starts:
            magnitude = rng.uniform(*rate.magnitude_range)
            if rate.signed and rng.random() < 0.5:
                magnitude = -magnitude
            duration = int(
                rng.integers(rate.duration_range[0], rate.duration_range[1] + 1)
            )
            sampled.append(
                DriftEpisode(
                    start_job=int(start),
                    duration_jobs=duration,
                    magnitude=float(magnitude),
                    shape=shape,
                )
            )
    return sampled


def generate_trace(cfg: NoiseConfig) -> DriftTrace:
    """Materialize a trace; a pure function of the config."""
    offsets = np.zeros(cfg.horizon_jobs)
    if cfg.baseline_std > 0:
        rng = np.random.default_rng(derive_seed(cfg.seed, _BASELINE_STREAM))
        offsets += rng.normal(0.0, cfg.baseline_std, cfg.horizon_jobs)
    episodes = list(cfg.episodes) + _sample_episodes(cfg)
    for ep in episodes:
        offsets += ep.contribution(cfg.horizon_jobs, cfg.seed)
    return DriftTrace(
        offsets=tuple(float(v) for v in offsets),
        config=cfg,
        episodes=tuple(episodes),
    )


def zero_trace(horizon_jobs: int, energy_scale: float = 1.0) -> DriftTrace:
    """Drift-free trace: every offset exactly zero."""
    return generate_trace(
        NoiseConfig(horizon_jobs=horizon_jobs, energy_scale=energy_scale)
    )


def apply_drift(
    ideal: float, trace: DriftTrace, job: int, energy_scale: float
) -> float:
    """Shift one circuit's ideal expectation by the job's offset.

    Every circuit executed in the same job receives the same shift.
    """
    if not (0 <= job < len(trace.offsets)):
        raise IndexError(
            f"job {job} outside trace horizon of {len(trace.offsets)} jobs"
        )
    return ideal + trace.offsets[job] * energy_scale


def save_trace(trace: DriftTrace, path) -> None:
    payload = {
        "seed": trace.seed,
        "config": trace.config.to_dict(),
        "episodes": [
            {
                "start_job": e.start_job,
                "duration_jobs": e.duration_jobs,
                "magnitude": e.magnitude,
                "shape": e.shape,
            }
            for e in trace.episodes
        ],
        "offsets": list(trace.offsets),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_trace(path) -> DriftTrace:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"{path}: not valid trace JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise TraceFormatError(f"{path}: trace file must hold a JSON object")
    for key in ("config", "offsets"):
        if key not in payload:
            raise TraceFormatError(f"{path}: missing {key!r}")
    cfg = NoiseConfig.from_dict(payload["config"])
    try:
        episodes = tuple(
            DriftEpisode(
                start_job=e["start_job"],
                duration_jobs=e["duration_jobs"],
                magnitude=e["magnitude"],
                shape=e["shape"],
            )
            for e in payload.get("episodes", [])
        )
        offsets = tuple(float(v) for v in payload["offsets"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceFormatError(f"{path}: malformed trace ({exc})") from exc
    return DriftTrace(offsets=offsets, config=cfg, episodes=episodes)
