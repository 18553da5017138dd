"""Command-line front end: run, compare, sweep, gen-noise, report."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import click

from .config import ConfigError, ExperimentConfig, load_config, load_noise_document
from .drift import DriftTrace, generate_trace, load_trace, save_trace
from .engine import AnsatzSpec
from .pauli import Hamiltonian, load_hamiltonian
from .report import (
    build_comparison,
    build_sweep_report,
    generate_report,
    write_jobs_csv,
    write_sweep_csv,
)
from .runtime import ControllerConfig, RunRecord, run_experiment, save_run_record


def _apply_cli_overrides(
    cfg: ExperimentConfig,
    seed: int | None,
    out: str | None,
    exact: bool,
    shots: int | None,
) -> ExperimentConfig:
    if exact and shots is not None:
        raise click.UsageError("--exact and --shots are mutually exclusive")
    if seed is not None:
        cfg = dataclasses.replace(
            cfg, seed=seed, spsa=dataclasses.replace(cfg.spsa, seed=seed + 1)
        )
    if out is not None:
        cfg = dataclasses.replace(cfg, out_dir=Path(out))
    if exact or shots is not None:
        new_shots = None if exact else shots
        cfg = dataclasses.replace(
            cfg,
            controllers=[
                (name, dataclasses.replace(c, shots=new_shots))
                for name, c in cfg.controllers
            ],
        )
    return cfg


def _require_out(cfg: ExperimentConfig) -> Path:
    if cfg.out_dir is None:
        raise click.UsageError("no output directory: set experiment.out or pass --out")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir


def _resolve_trace(cfg: ExperimentConfig) -> DriftTrace | None:
    if cfg.trace_path is not None:
        return load_trace(cfg.trace_path)
    if cfg.noise is not None:
        return generate_trace(cfg.noise)
    return None


def _execute(
    name: str,
    hamiltonian: Hamiltonian,
    cfg: ExperimentConfig,
    controller: ControllerConfig,
    trace: DriftTrace | None,
    out_dir: Path,
    hamiltonian_path: Path,
) -> RunRecord:
    ansatz = AnsatzSpec(
        kind=cfg.ansatz_kind,
        qubit_count=hamiltonian.qubit_count,
        reps=cfg.ansatz_reps,
    )
    try:
        record = run_experiment(
            hamiltonian=hamiltonian,
            ansatz=ansatz,
            controller=controller,
            spsa=cfg.spsa,
            budget=cfg.budget,
            trace=trace,
            seed=cfg.seed,
        )
    except Exception as exc:
        raise click.ClickException(f"run {name!r} failed: {exc}") from exc
    record.meta["name"] = name
    record.meta["hamiltonian"] = str(hamiltonian_path)
    record.meta["trace_path"] = str(cfg.trace_path) if cfg.trace_path else None
    out_dir.mkdir(parents=True, exist_ok=True)
    save_run_record(record, out_dir / "run_record.json")
    write_jobs_csv(record.to_dict(), out_dir / "jobs.csv")
    s = record.summary
    click.echo(
        f"{name}: final={s.final_energy:.6f} smoothed={s.final_energy_smoothed:.6f} "
        f"ground={s.ground_energy:.6f} accepted={s.accepted_iterations} "
        f"skips={s.skip_count} circuits={s.total_circuits}"
    )
    return record


config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(), help="Experiment config (TOML or JSON)."
)
seed_option = click.option("--seed", type=int, default=None, help="Override experiment seed.")
out_option = click.option("--out", type=click.Path(), default=None, help="Output directory.")
exact_option = click.option("--exact", is_flag=True, help="Force analytic expectations.")
shots_option = click.option("--shots", type=int, default=None, help="Override shots per circuit.")


@click.group()
def main():
    """Drift-aware VQE experiments: staged execution, detection, skipping."""


def _load_cfg(config_path, seed, out, exact, shots) -> ExperimentConfig:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    return _apply_cli_overrides(cfg, seed, out, exact, shots)


@main.command()
@config_option
@seed_option
@out_option
@exact_option
@shots_option
def run(config_path, seed, out, exact, shots):
    """Execute one controller; write run_record.json and jobs.csv."""
    cfg = _load_cfg(config_path, seed, out, exact, shots)
    if len(cfg.controllers) != 1:
        raise click.UsageError("run expects exactly one [controller]; use compare for several")
    out_dir = _require_out(cfg)
    hamiltonian = load_hamiltonian(cfg.hamiltonian_path)
    trace = _resolve_trace(cfg)
    name, controller = cfg.controllers[0]
    _execute(name, hamiltonian, cfg, controller, trace, out_dir, cfg.hamiltonian_path)


@main.command()
@config_option
@seed_option
@out_option
@exact_option
@shots_option
def compare(config_path, seed, out, exact, shots):
    """Run several controllers on one shared trace and seed; write comparison.json."""
    cfg = _load_cfg(config_path, seed, out, exact, shots)
    if len(cfg.controllers) < 2:
        raise click.UsageError("compare needs at least two [[controllers]] entries")
    out_dir = _require_out(cfg)
    hamiltonian = load_hamiltonian(cfg.hamiltonian_path)
    trace = _resolve_trace(cfg)
    records: dict[str, RunRecord] = {}
    for name, controller in cfg.controllers:
        records[name] = _execute(
            name, hamiltonian, cfg, controller, trace, out_dir / name, cfg.hamiltonian_path
        )
    comparison = build_comparison({n: r.to_dict() for n, r in records.items()})
    path = out_dir / "comparison.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(comparison, fh, indent=1)
        fh.write("\n")
    for pair, factor in comparison["improvement_factors"].items():
        if factor is not None:
            click.echo(f"progress-quality factor {pair}: {factor:.4f}")
    click.echo(f"comparison written to {path}")


@main.command()
@config_option
@seed_option
@out_option
@exact_option
@shots_option
def sweep(config_path, seed, out, exact, shots):
    """Run the configured controller across a parameter axis; write sweep.json/csv."""
    cfg = _load_cfg(config_path, seed, out, exact, shots)
    if cfg.sweep_axis is None:
        raise click.UsageError("config has no [sweep] section")
    if len(cfg.controllers) != 1:
        raise click.UsageError("sweep expects exactly one [controller]")
    out_dir = _require_out(cfg)
    base_name, base_controller = cfg.controllers[0]
    trace = _resolve_trace(cfg)
    points: list[tuple[object, dict]] = []
    for index, value in enumerate(cfg.sweep_values):
        if cfg.sweep_axis == "hamiltonian":
            ham_path = cfg.hamiltonian_paths[index]
            hamiltonian = load_hamiltonian(ham_path)
            controller = base_controller
            label: object = ham_path.name
        else:
            ham_path = cfg.hamiltonian_path
            hamiltonian = load_hamiltonian(ham_path)
            label = value
            if cfg.sweep_axis == "th_p":
                controller = dataclasses.replace(base_controller, th_p=float(value))
            else:
                controller = dataclasses.replace(base_controller, k=int(value))
        name = f"{base_name}_{cfg.sweep_axis}_{label}"
        record = _execute(
            name, hamiltonian, cfg, controller, trace, out_dir / f"point_{index}", ham_path
        )
        points.append((label, record.to_dict()))
    sweep_doc = build_sweep_report(cfg.sweep_axis, points)
    json_path = out_dir / "sweep.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(sweep_doc, fh, indent=1)
        fh.write("\n")
    write_sweep_csv(sweep_doc, out_dir / "sweep.csv")
    click.echo(f"sweep written to {json_path}")


@main.command("gen-noise")
@click.option("--config", "config_path", required=True, type=click.Path(), help="Noise config (TOML or JSON).")
@click.option("--out", type=click.Path(), required=True, help="Output directory for trace.json.")
def gen_noise(config_path, out):
    """Generate a drift trace from a noise config and persist it."""
    try:
        noise_cfg = load_noise_document(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    trace = generate_trace(noise_cfg)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "trace.json"
    save_trace(trace, path)
    click.echo(
        f"trace written to {path} (horizon={trace.horizon}, "
        f"episodes={len(trace.episodes)})"
    )


@main.command()
@click.argument("records", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), required=True, help="Report output directory.")
def report(records, out):
    """Render figures and summary CSVs from emitted record/report files."""
    try:
        written = generate_report([Path(r) for r in records], Path(out))
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    for path in written:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
