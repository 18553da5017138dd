"""Delimited outputs and rendered figures, built purely from emitted files.

Everything here consumes the JSON dict form of run records, comparison
reports, and sweep reports, so any report can be regenerated from the files
on disk without rerunning experiments.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

JOB_CSV_HEADER = [
    "job",
    "iteration",
    "controller",
    "energy",
    "D",
    "Ef",
    "Gf",
    "G",
    "decision",
    "s1_circuits",
    "s2_circuits",
    "offset",
]

SUMMARY_CSV_HEADER = [
    "name",
    "controller",
    "final_energy",
    "final_energy_smoothed",
    "ground_energy",
    "progress_quality",
    "accepted_iterations",
    "skip_count",
    "total_jobs",
    "s1_circuits",
    "s2_circuits",
    "total_circuits",
]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def job_csv_rows(record: dict) -> list[list[str]]:
    controller = record["controller"]
    rows = []
    for entry in record["jobs"]:
        det = entry.get("detection") or {}
        rows.append(
            [
                _cell(entry["job"]),
                _cell(entry["iteration"]),
                controller,
                _cell(entry.get("energy")),
                _cell(det.get("D")),
                _cell(det.get("Ef")),
                _cell(det.get("Gf")),
                _cell(det.get("G")),
                entry["decision"],
                _cell(entry["s1_circuits"]),
                _cell(entry["s2_circuits"]),
                _cell(entry.get("offset")),
            ]
        )
    return rows


def write_jobs_csv(record: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(JOB_CSV_HEADER)
        writer.writerows(job_csv_rows(record))


def progress_quality_from_summary(summary: dict) -> float | None:
    """(first accepted - final) / (first accepted - ground); None if the
    ground oracle is missing or the starting gap is zero."""
    first = summary.get("first_accepted_energy")
    final = summary.get("final_energy_smoothed")
    ground = summary.get("ground_energy")
    if first is None or final is None or ground is None:
        return None
    gap = first - ground
    if gap == 0.0:
        return None
    return (first - final) / gap


class ComparisonError(ValueError):
    """Runs are not comparable (different problem, seed, or trace)."""


_SHARED_META_KEYS = (
    "qubit_count",
    "term_count",
    "ansatz",
    "seed",
    "budget",
    "trace_seed",
    "trace_horizon",
)


def build_comparison(records: dict[str, dict]) -> dict:
    """Cross-controller report over runs that share problem, seed, and trace.

    Improvement factors are progress-quality ratios against the first-listed
    run (Q_name / Q_reference).
    """
    if len(records) < 2:
        raise ComparisonError("comparison needs at least two runs")
    names = list(records)
    reference_meta = records[names[0]]["meta"]
    for name in names[1:]:
        meta = records[name]["meta"]
        for key in _SHARED_META_KEYS:
            if meta.get(key) != reference_meta.get(key):
                raise ComparisonError(
                    f"run {name!r} differs from {names[0]!r} in {key}: "
                    f"{meta.get(key)!r} vs {reference_meta.get(key)!r}"
                )
    controllers = {}
    qualities = {}
    for name, record in records.items():
        summary = record["summary"]
        q = progress_quality_from_summary(summary)
        qualities[name] = q
        controllers[name] = {
            "controller": record["controller"],
            "final_energy": summary["final_energy"],
            "final_energy_smoothed": summary["final_energy_smoothed"],
            "ground_energy": summary["ground_energy"],
            "progress_quality": q,
            "accepted_iterations": summary["accepted_iterations"],
            "skip_count": summary["skip_count"],
            "total_jobs": summary["total_jobs"],
            "s1_circuits": summary["s1_circuits"],
            "s2_circuits": summary["s2_circuits"],
            "total_circuits": summary["total_circuits"],
            "energies": record["energies"],
        }
    reference = names[0]
    factors = {}
    for name in names:
        qa, qb = qualities[name], qualities[reference]
        factors[f"{name}_over_{reference}"] = (
            qa / qb if qa is not None and qb not in (None, 0.0) else None
        )
    return {
        "kind": "comparison",
        "reference": reference,
        "shared": {k: reference_meta.get(k) for k in _SHARED_META_KEYS},
        "controllers": controllers,
        "improvement_factors": factors,
    }


def build_sweep_report(axis: str, points: list[tuple[object, dict]]) -> dict:
    """Per-axis-value summaries; each point carries its own ground oracle."""
    rows = []
    for value, record in points:
        summary = record["summary"]
        rows.append(
            {
                "value": value,
                "controller": record["controller"],
                "final_energy": summary["final_energy"],
                "final_energy_smoothed": summary["final_energy_smoothed"],
                "ground_energy": summary["ground_energy"],
                "progress_quality": progress_quality_from_summary(summary),
                "accepted_iterations": summary["accepted_iterations"],
                "skip_count": summary["skip_count"],
                "total_jobs": summary["total_jobs"],
                "s1_circuits": summary["s1_circuits"],
                "s2_circuits": summary["s2_circuits"],
                "total_circuits": summary["total_circuits"],
                "prime_size": record["meta"]["prime_size"],
                "minor_size": record["meta"]["minor_size"],
            }
        )
    return {"kind": "sweep", "axis": axis, "points": rows}


def write_summary_csv(named_records: dict[str, dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_CSV_HEADER)
        for name, record in named_records.items():
            s = record["summary"]
            writer.writerow(
                [
                    name,
                    record["controller"],
                    _cell(s["final_energy"]),
                    _cell(s["final_energy_smoothed"]),
                    _cell(s["ground_energy"]),
                    _cell(progress_quality_from_summary(s)),
                    _cell(s["accepted_iterations"]),
                    _cell(s["skip_count"]),
                    _cell(s["total_jobs"]),
                    _cell(s["s1_circuits"]),
                    _cell(s["s2_circuits"]),
                    _cell(s["total_circuits"]),
                ]
            )


def write_sweep_csv(sweep: dict, path) -> None:
    fields = [
        "value",
        "controller",
        "final_energy",
        "final_energy_smoothed",
        "ground_energy",
        "progress_quality",
        "accepted_iterations",
        "skip_count",
        "total_jobs",
        "s1_circuits",
        "s2_circuits",
        "total_circuits",
        "prime_size",
        "minor_size",
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in sweep["points"]:
            writer.writerow([_cell(row[f]) for f in fields])


# --- figures ---------------------------------------------------------------


def render_energy_trace(named_records: dict[str, dict], path) -> None:
    """Accepted energy per iteration for each run, with the ground oracle."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ground = None
    for name, record in named_records.items():
        energies = record["energies"]
        ax.plot(range(len(energies)), energies, linewidth=1.2, label=name)
        ground = record["summary"].get("ground_energy") or ground
    if ground is not None:
        ax.axhline(ground, color="black", linestyle="--", linewidth=1, label="ground (oracle)")
    ax.set_xlabel("accepted iteration")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_job_timeline(named_records: dict[str, dict], path) -> None:
    """Per-job drift offsets with rescheduled jobs marked."""
    fig, axes = plt.subplots(
        len(named_records), 1, figsize=(8, 2.2 * len(named_records)), squeeze=False
    )
    for ax, (name, record) in zip(axes[:, 0], named_records.items()):
        jobs = [e["job"] for e in record["jobs"]]
        offsets = [e["offset"] for e in record["jobs"]]
        skips = [e["job"] for e in record["jobs"] if e["decision"] == "reschedule"]
        ax.plot(jobs, offsets, linewidth=1.0, color="tab:blue", label="offset")
        for j in skips:
            ax.axvline(j, color="tab:red", alpha=0.25, linewidth=0.8)
        ax.set_ylabel("offset")
        ax.set_title(f"{name}: {len(skips)} rescheduled job(s)", fontsize=9)
        ax.grid(alpha=0.3)
    axes[-1, 0].set_xlabel("job")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_circuit_costs(named_records: dict[str, dict], path) -> None:
    names = list(named_records)
    s1 = [named_records[n]["summary"]["s1_circuits"] for n in names]
    s2 = [named_records[n]["summary"]["s2_circuits"] for n in names]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(names, s1, label="detection stage")
    ax.bar(names, s2, bottom=s1, label="completion stage")
    ax.set_ylabel("circuits executed")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_sweep(sweep: dict, path) -> None:
    values = [row["value"] for row in sweep["points"]]
    finals = [row["final_energy_smoothed"] for row in sweep["points"]]
    grounds = [row["ground_energy"] for row in sweep["points"]]
    circuits = [row["total_circuits"] for row in sweep["points"]]
    x = range(len(values))
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5.5), sharex=True)
    ax1.plot(x, finals, "o-", label="final energy")
    if all(g is not None for g in grounds):
        ax1.plot(x, grounds, "s--", color="black", label="ground (oracle)")
    ax1.set_ylabel("energy")
    ax1.legend(fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.bar(x, circuits, color="tab:gray")
    ax2.set_ylabel("total circuits")
    ax2.set_xlabel(sweep["axis"])
    ax2.set_xticks(list(x))
    ax2.set_xticklabels([str(v) for v in values], rotation=30, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def classify_report_input(payload: dict) -> str:
    if "jobs" in payload and "summary" in payload:
        return "run"
    if payload.get("kind") == "comparison":
        return "comparison"
    if payload.get("kind") == "sweep":
        return "sweep"
    raise ValueError("unrecognized report input (expected run record, comparison, or sweep)")


def generate_report(input_paths: list[Path], out_dir: Path) -> list[Path]:
    """Render figures and a summary CSV from previously emitted files.

    Returns the list of files written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    run_records: dict[str, dict] = {}
    for p in input_paths:
        p = Path(p)
        with open(p, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        kind = classify_report_input(payload)
        if kind == "run":
            name = p.stem if p.stem != "run_record" else p.parent.name
            base = name
            suffix = 2
            while name in run_records:
                name = f"{base}_{suffix}"
                suffix += 1
            run_records[name] = payload
        elif kind == "comparison":
            sub = out_dir / f"{p.stem}_controllers.csv"
            _write_comparison_csv(payload, sub)
            written.append(sub)
        else:
            fig = out_dir / f"{p.stem}.png"
            render_sweep(payload, fig)
            written.append(fig)
            csv_path = out_dir / f"{p.stem}.csv"
            write_sweep_csv(payload, csv_path)
            written.append(csv_path)
    if run_records:
        summary_csv = out_dir / "report.csv"
        write_summary_csv(run_records, summary_csv)
        written.append(summary_csv)
        trace_png = out_dir / "energy_trace.png"
        render_energy_trace(run_records, trace_png)
        written.append(trace_png)
        jobs_png = out_dir / "job_timeline.png"
        render_job_timeline(run_records, jobs_png)
        written.append(jobs_png)
        circuits_png = out_dir / "circuit_costs.png"
        render_circuit_costs(run_records, circuits_png)
        written.append(circuits_png)
    return written


def _write_comparison_csv(comparison: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "name",
                "controller",
                "final_energy",
                "final_energy_smoothed",
                "ground_energy",
                "progress_quality",
                "skip_count",
                "total_circuits",
            ]
        )
        for name, c in comparison["controllers"].items():
            writer.writerow(
                [
                    name,
                    c["controller"],
                    _cell(c["final_energy"]),
                    _cell(c["final_energy_smoothed"]),
                    _cell(c["ground_energy"]),
                    _cell(c["progress_quality"]),
                    _cell(c["skip_count"]),
                    _cell(c["total_circuits"]),
                ]
            )
