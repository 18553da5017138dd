"""Experiment configuration files (TOML or JSON) and their validation.

Relative paths inside a config resolve against the config file's directory.
Validation failures raise :class:`ConfigError` naming the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .drift import NoiseConfig, TraceFormatError
from .runtime import ControllerConfig
from .spsa import SpsaConfig


SWEEP_AXES = ("th_p", "k", "hamiltonian")


class ConfigError(ValueError):
    """Bad experiment configuration; message carries the field path."""


@dataclass
class ExperimentConfig:
    hamiltonian_paths: list[Path]
    ansatz_kind: str
    ansatz_reps: int
    controllers: list[tuple[str, ControllerConfig]]
    spsa: SpsaConfig
    budget: int
    seed: int
    noise: NoiseConfig | None = None
    trace_path: Path | None = None
    out_dir: Path | None = None
    sweep_axis: str | None = None
    sweep_values: list = field(default_factory=list)

    @property
    def hamiltonian_path(self) -> Path:
        return self.hamiltonian_paths[0]


def _read_document(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    else:
        try:
            doc = tomllib.loads(text.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return doc


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing required field {where}.{key}")
    return table[key]


def _controller_from_table(table: dict, where: str) -> ControllerConfig:
    kind = _require(table, "kind", where)
    shots = table.get("shots")
    if table.get("exact"):
        shots = None
    weights = table.get("weights")
    try:
        return ControllerConfig(
            kind=kind,
            k=int(table.get("k", 1)),
            th_p=float(table.get("th_p", 0.8)),
            sigma=int(table.get("sigma", 3)),
            shots=None if shots is None else int(shots),
            weights=tuple(weights) if weights else None,
            accept_tolerance=table.get("accept_tolerance"),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def noise_config_from_table(table: dict, where: str = "noise") -> NoiseConfig:
    try:
        return NoiseConfig.from_dict(table)
    except (TraceFormatError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    doc = _read_document(path)
    base = path.parent

    exp = doc.get("experiment", {})
    if not isinstance(exp, dict):
        raise ConfigError("experiment: must be a table")

    sweep = doc.get("sweep")
    sweep_axis = None
    sweep_values: list = []
    ham_field = exp.get("hamiltonian")
    if sweep is not None:
        sweep_axis = _require(sweep, "axis", "sweep")
        if sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep.axis must be one of {SWEEP_AXES}, got {sweep_axis!r}")
        if sweep_axis == "hamiltonian":
            files = _require(sweep, "files", "sweep")
            if not isinstance(files, list) or not files:
                raise ConfigError("sweep.files must be a non-empty list of paths")
            sweep_values = list(files)
        else:
            values = _require(sweep, "values", "sweep")
            if not isinstance(values, list) or not values:
                raise ConfigError("sweep.values must be a non-empty list")
            sweep_values = list(values)

    if sweep_axis == "hamiltonian":
        ham_paths = [base / f for f in sweep_values]
    else:
        if ham_field is None:
            raise ConfigError("missing required field experiment.hamiltonian")
        ham_paths = [base / ham_field]
    for p in ham_paths:
        if not p.exists():
            raise ConfigError(f"hamiltonian file not found: {p}")

    budget = exp.get("budget")
    if budget is None:
        raise ConfigError("missing required field experiment.budget")
    budget = int(budget)
    if budget < 0:
        raise ConfigError(f"experiment.budget must be >= 0, got {budget}")
    seed = int(exp.get("seed", 0))
    out_dir = exp.get("out")
    out_path = (base / out_dir) if out_dir else None

    ans = doc.get("ansatz", {})
    kind = ans.get("kind", "RA")
    if kind not in ("RA", "SU2"):
        raise ConfigError(f"ansatz.kind must be 'RA' or 'SU2', got {kind!r}")
    reps = int(ans.get("reps", 2))
    if reps < 1:
        raise ConfigError(f"ansatz.reps must be >= 1, got {reps}")

    opt = doc.get("optimizer", {})
    try:
        spsa = SpsaConfig(
            a0=float(opt.get("a0", 0.2)),
            alpha=float(opt.get("alpha", 0.602)),
            c0=float(opt.get("c0", 0.1)),
            gamma=float(opt.get("gamma", 0.101)),
            max_iterations=budget,
            seed=int(opt["seed"]) if "seed" in opt else seed + 1,
        )
    except ValueError as exc:
        raise ConfigError(f"optimizer: {exc}") from exc

    controllers: list[tuple[str, ControllerConfig]] = []
    if "controllers" in doc:
        entries = doc["controllers"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError("controllers: must be a non-empty array of tables")
        trace_overrides = {e.get("trace") for e in entries if isinstance(e, dict)}
        if len(trace_overrides - {None}) > 0:
            raise ConfigError(
                "controllers[*].trace: per-controller traces are not comparable; "
                "give one shared [noise] section"
            )
        for i, entry in enumerate(entries):
            where = f"controllers[{i}]"
            if not isinstance(entry, dict):
                raise ConfigError(f"{where}: must be a table")
            cfg = _controller_from_table(entry, where)
            name = entry.get("name", cfg.kind.value)
            controllers.append((str(name), cfg))
        names = [n for n, _ in controllers]
        if len(set(names)) != len(names):
            raise ConfigError("controllers: names must be unique")
    elif "controller" in doc:
        cfg = _controller_from_table(doc["controller"], "controller")
        controllers.append((doc["controller"].get("name", cfg.kind.value), cfg))
    else:
        raise ConfigError("missing [controller] (or [[controllers]]) section")

    noise_cfg = None
    trace_path = None
    if "noise" in doc:
        ntab = doc["noise"]
        if not isinstance(ntab, dict):
            raise ConfigError("noise: must be a table")
        if "trace" in ntab:
            trace_path = base / ntab["trace"]
            if not trace_path.exists():
                raise ConfigError(f"noise.trace file not found: {trace_path}")
        else:
            noise_cfg = noise_config_from_table(ntab)

    return ExperimentConfig(
        hamiltonian_paths=ham_paths,
        ansatz_kind=kind,
        ansatz_reps=reps,
        controllers=controllers,
        spsa=spsa,
        budget=budget,
        seed=seed,
        noise=noise_cfg,
        trace_path=trace_path,
        out_dir=out_path,
        sweep_axis=sweep_axis,
        sweep_values=sweep_values,
    )


def load_noise_document(path) -> NoiseConfig:
    """Noise config file for trace generation: either a bare noise table or a
    document with a [noise] section."""
    path = Path(path)
    doc = _read_document(path)
    table = doc.get("noise", doc)
    if "trace" in table:
        raise ConfigError("noise: trace generation config cannot point at a trace")
    return noise_config_from_table(table)
