import csv
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from driftvqe.cli import main
from driftvqe.config import ConfigError, load_config, load_noise_document

from conftest import HAMILTONIAN_DIR

TOY = HAMILTONIAN_DIR / "toy_xx_dominant.ham"
HEH = HAMILTONIAN_DIR / "heh_like_4q.ham"
LIH = HAMILTONIAN_DIR / "lih_like_6q.ham"
H2DIR = HAMILTONIAN_DIR / "h2_family"


def run_cli(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def toy_run_config(tmp_path: Path, out="out", budget=40, extra="") -> Path:
    return write(
        tmp_path / "run.toml",
        f"""
[experiment]
hamiltonian = "{TOY}"
budget = {budget}
seed = 7
out = "{out}"

[ansatz]
kind = "RA"
reps = 2

[controller]
kind = "baseline"
exact = true
{extra}
""",
    )


class TestRun:
    def test_writes_record_and_csv(self, tmp_path):
        cfg = toy_run_config(tmp_path)
        result = run_cli("run", "--config", cfg)
        assert result.exit_code == 0, result.output
        out = tmp_path / "out"
        record = json.loads((out / "run_record.json").read_text())
        assert record["summary"]["accepted_iterations"] == 40
        rows = list(csv.reader((out / "jobs.csv").open()))
        assert rows[0] == [
            "job", "iteration", "controller", "energy", "D", "Ef", "Gf", "G",
            "decision", "s1_circuits", "s2_circuits", "offset",
        ]
        assert len(rows) == 41

    def test_noise_free_run_reaches_oracle_neighborhood(self, tmp_path):
        cfg = toy_run_config(tmp_path, budget=400)
        result = run_cli("run", "--config", cfg)
        assert result.exit_code == 0, result.output
        record = json.loads((tmp_path / "out" / "run_record.json").read_text())
        final = record["summary"]["final_energy"]
        ground = record["summary"]["ground_energy"]
        assert abs(final - ground) <= 0.02 * abs(ground)

    def test_byte_identical_reruns(self, tmp_path):
        cfg_a = toy_run_config(tmp_path, out="a", extra="")
        result = run_cli("run", "--config", cfg_a)
        assert result.exit_code == 0, result.output
        cfg_b = write(tmp_path / "run_b.toml", cfg_a.read_text().replace('"a"', '"b"'))
        result = run_cli("run", "--config", cfg_b)
        assert result.exit_code == 0, result.output
        assert (tmp_path / "a" / "jobs.csv").read_bytes() == (
            tmp_path / "b" / "jobs.csv"
        ).read_bytes()

    def test_missing_hamiltonian_names_path(self, tmp_path):
        cfg = write(
            tmp_path / "bad.toml",
            """
[experiment]
hamiltonian = "nowhere/missing.ham"
budget = 5

[controller]
kind = "baseline"
""",
        )
        result = run_cli("run", "--config", cfg)
        assert result.exit_code != 0
        assert "missing.ham" in result.output

    def test_shots_and_exact_flags_conflict(self, tmp_path):
        cfg = toy_run_config(tmp_path)
        result = run_cli("run", "--config", cfg, "--exact", "--shots", "64")
        assert result.exit_code != 0

    def test_seed_override_changes_results(self, tmp_path):
        cfg = toy_run_config(tmp_path, out="a")
        run_cli("run", "--config", cfg)
        cfg2 = toy_run_config(tmp_path, out="b")
        result = run_cli("run", "--config", cfg2, "--seed", "123")
        assert result.exit_code == 0
        rec_a = json.loads((tmp_path / "a" / "run_record.json").read_text())
        rec_b = json.loads((tmp_path / "b" / "run_record.json").read_text())
        assert rec_a["energies"] != rec_b["energies"]


def compare_config(tmp_path: Path, controllers: str, noise: str = "") -> Path:
    return write(
        tmp_path / "compare.toml",
        f"""
[experiment]
hamiltonian = "{HEH}"
budget = 30
seed = 11
out = "cmp"

[ansatz]
kind = "RA"
reps = 2

{controllers}

{noise}
""",
    )


NOISE_SECTION = """
[noise]
horizon_jobs = 1200
seed = 5
energy_scale = 2.8

[noise.rates.STEP]
rate_per_job = 0.01
magnitude_range = [0.08, 0.2]
duration_range = [4, 12]
"""


class TestCompare:
    def test_self_comparison_factor_is_one(self, tmp_path):
        cfg = compare_config(
            tmp_path,
            """
[[controllers]]
name = "base_a"
kind = "baseline"
exact = true

[[controllers]]
name = "base_b"
kind = "baseline"
exact = true
""",
        )
        result = run_cli("compare", "--config", cfg)
        assert result.exit_code == 0, result.output
        comparison = json.loads((tmp_path / "cmp" / "comparison.json").read_text())
        assert comparison["improvement_factors"]["base_b_over_base_a"] == 1.0

    def test_three_controllers_shared_trace(self, tmp_path):
        cfg = compare_config(
            tmp_path,
            """
[[controllers]]
kind = "baseline"
shots = 1024

[[controllers]]
kind = "single_ref"
shots = 1024

[[controllers]]
kind = "multi_ref"
k = 2
th_p = 0.8
shots = 1024
""",
            NOISE_SECTION,
        )
        result = run_cli("compare", "--config", cfg)
        assert result.exit_code == 0, result.output
        comparison = json.loads((tmp_path / "cmp" / "comparison.json").read_text())
        assert set(comparison["controllers"]) == {"baseline", "single_ref", "multi_ref"}
        for name in comparison["controllers"]:
            jobs_csv = tmp_path / "cmp" / name / "jobs.csv"
            assert jobs_csv.exists()

    def test_per_controller_trace_refused(self, tmp_path):
        cfg = compare_config(
            tmp_path,
            """
[[controllers]]
kind = "baseline"
trace = "a.json"

[[controllers]]
kind = "multi_ref"
trace = "b.json"
""",
        )
        result = run_cli("compare", "--config", cfg)
        assert result.exit_code != 0
        assert "trace" in result.output

    def test_single_controller_rejected(self, tmp_path):
        cfg = compare_config(
            tmp_path,
            """
[[controllers]]
kind = "baseline"
""",
        )
        result = run_cli("compare", "--config", cfg)
        assert result.exit_code != 0


class TestSweep:
    def test_th_p_axis_prime_sizes_non_decreasing(self, tmp_path):
        cfg = write(
            tmp_path / "sweep.toml",
            f"""
[experiment]
hamiltonian = "{LIH}"
budget = 10
seed = 3
out = "sw"

[ansatz]
kind = "RA"
reps = 1

[controller]
kind = "multi_ref"
k = 2
exact = true

[sweep]
axis = "th_p"
values = [0.5, 0.7, 0.8, 0.9]
""",
        )
        result = run_cli("sweep", "--config", cfg)
        assert result.exit_code == 0, result.output
        doc = json.loads((tmp_path / "sw" / "sweep.json").read_text())
        primes = [p["prime_size"] for p in doc["points"]]
        assert primes == sorted(primes)
        assert len(primes) == 4

    def test_k_axis_s1_cost_linear(self, tmp_path):
        cfg = write(
            tmp_path / "sweep.toml",
            f"""
[experiment]
hamiltonian = "{HEH}"
budget = 30
seed = 3
out = "sw"

[ansatz]
kind = "RA"
reps = 2

[controller]
kind = "multi_ref"
th_p = 0.8
exact = true

[sweep]
axis = "k"
values = [1, 2, 3, 4]
""",
        )
        result = run_cli("sweep", "--config", cfg)
        assert result.exit_code == 0, result.output
        doc = json.loads((tmp_path / "sw" / "sweep.json").read_text())
        # steady-state per-job stage-1 cost grows linearly in K:
        # (K+1) * prime * 2 with prime = 1
        for k_value, point in zip([1, 2, 3, 4], doc["points"]):
            record = json.loads(
                (tmp_path / "sw" / f"point_{k_value - 1}" / "run_record.json").read_text()
            )
            steady = [
                j["s1_circuits"] for j in record["jobs"] if len(j["ref_recorded"]) == k_value
            ]
            assert steady, "no steady-state jobs found"
            assert set(steady) == {(k_value + 1) * 2}

    def test_bond_length_axis_rows_with_oracles(self, tmp_path):
        files = "\n".join(f'    "{p}",' for p in sorted(H2DIR.glob("*.ham")))
        cfg = write(
            tmp_path / "sweep.toml",
            f"""
[experiment]
budget = 5
seed = 3
out = "sw"

[ansatz]
kind = "RA"
reps = 1

[controller]
kind = "multi_ref"
k = 2
th_p = 0.8
exact = true

[sweep]
axis = "hamiltonian"
files = [
{files}
]
""",
        )
        result = run_cli("sweep", "--config", cfg)
        assert result.exit_code == 0, result.output
        doc = json.loads((tmp_path / "sw" / "sweep.json").read_text())
        assert len(doc["points"]) == 10
        grounds = [p["ground_energy"] for p in doc["points"]]
        assert all(g is not None for g in grounds)
        assert len(set(grounds)) == 10


class TestGenNoise:
    def test_zero_rate_trace_is_all_zeros(self, tmp_path):
        cfg = write(
            tmp_path / "noise.toml",
            """
[noise]
horizon_jobs = 350
seed = 42
""",
        )
        result = run_cli("gen-noise", "--config", cfg, "--out", tmp_path / "n")
        assert result.exit_code == 0, result.output
        trace = json.loads((tmp_path / "n" / "trace.json").read_text())
        assert trace["offsets"] == [0.0] * 350

    def test_fixed_seed_identical_bytes(self, tmp_path):
        cfg = write(
            tmp_path / "noise.toml",
            """
[noise]
horizon_jobs = 100
seed = 9
baseline_std = 0.01

[noise.rates.SPIKE]
rate_per_job = 0.05
magnitude_range = [0.1, 0.3]
duration_range = [1, 3]
""",
        )
        run_cli("gen-noise", "--config", cfg, "--out", tmp_path / "n1")
        run_cli("gen-noise", "--config", cfg, "--out", tmp_path / "n2")
        assert (tmp_path / "n1" / "trace.json").read_bytes() == (
            tmp_path / "n2" / "trace.json"
        ).read_bytes()

    def test_horizon_echo(self, tmp_path):
        cfg = write(tmp_path / "noise.toml", "[noise]\nhorizon_jobs = 350\n")
        run_cli("gen-noise", "--config", cfg, "--out", tmp_path / "n")
        trace = json.loads((tmp_path / "n" / "trace.json").read_text())
        assert len(trace["offsets"]) == 350
        assert trace["config"]["horizon_jobs"] == 350


class TestReport:
    def test_report_from_run_record(self, tmp_path):
        cfg = toy_run_config(tmp_path, budget=30)
        run_cli("run", "--config", cfg)
        record_path = tmp_path / "out" / "run_record.json"
        result = run_cli("report", record_path, "--out", tmp_path / "rep")
        assert result.exit_code == 0, result.output
        for name in ("report.csv", "energy_trace.png", "job_timeline.png", "circuit_costs.png"):
            assert (tmp_path / "rep" / name).exists()

    def test_report_values_recomputable_from_record(self, tmp_path):
        cfg = toy_run_config(tmp_path, budget=30)
        run_cli("run", "--config", cfg)
        record_path = tmp_path / "out" / "run_record.json"
        run_cli("report", record_path, "--out", tmp_path / "rep")
        record = json.loads(record_path.read_text())
        rows = list(csv.DictReader((tmp_path / "rep" / "report.csv").open()))
        assert len(rows) == 1
        row = rows[0]
        s = record["summary"]
        assert float(row["final_energy"]) == s["final_energy"]
        assert int(row["total_circuits"]) == s["total_circuits"]
        first, final, ground = (
            s["first_accepted_energy"],
            s["final_energy_smoothed"],
            s["ground_energy"],
        )
        q = (first - final) / (first - ground)
        assert float(row["progress_quality"]) == pytest.approx(q, rel=1e-12)

    def test_report_from_sweep(self, tmp_path):
        cfg = write(
            tmp_path / "sweep.toml",
            f"""
[experiment]
hamiltonian = "{HEH}"
budget = 8
seed = 3
out = "sw"

[ansatz]
kind = "RA"
reps = 1

[controller]
kind = "multi_ref"
exact = true

[sweep]
axis = "k"
values = [1, 2]
""",
        )
        run_cli("sweep", "--config", cfg)
        result = run_cli("report", tmp_path / "sw" / "sweep.json", "--out", tmp_path / "rep")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "rep" / "sweep.png").exists()
        assert (tmp_path / "rep" / "sweep.csv").exists()


class TestConfigValidation:
    def test_field_paths_in_errors(self, tmp_path):
        cfg = write(
            tmp_path / "c.toml",
            f"""
[experiment]
hamiltonian = "{TOY}"
budget = 5

[controller]
kind = "multi_ref"
k = 0
""",
        )
        with pytest.raises(ConfigError, match="controller"):
            load_config(cfg)

    def test_missing_budget(self, tmp_path):
        cfg = write(
            tmp_path / "c.toml",
            f"""
[experiment]
hamiltonian = "{TOY}"

[controller]
kind = "baseline"
""",
        )
        with pytest.raises(ConfigError, match="experiment.budget"):
            load_config(cfg)

    def test_json_config_supported(self, tmp_path):
        doc = {
            "experiment": {"hamiltonian": str(TOY), "budget": 5, "seed": 1, "out": "o"},
            "ansatz": {"kind": "RA", "reps": 1},
            "controller": {"kind": "baseline", "exact": True},
        }
        cfg = write(tmp_path / "c.json", json.dumps(doc))
        loaded = load_config(cfg)
        assert loaded.budget == 5
        assert loaded.controllers[0][1].shots is None

    def test_noise_doc_requires_generatable_config(self, tmp_path):
        cfg = write(tmp_path / "n.toml", '[noise]\ntrace = "t.json"\n')
        with pytest.raises(ConfigError, match="trace"):
            load_noise_document(cfg)

    def test_unknown_sweep_axis(self, tmp_path):
        cfg = write(
            tmp_path / "c.toml",
            f"""
[experiment]
hamiltonian = "{TOY}"
budget = 5

[controller]
kind = "baseline"

[sweep]
axis = "reps"
values = [1, 2]
""",
        )
        with pytest.raises(ConfigError, match="sweep.axis"):
            load_config(cfg)


class TestComparisonSemantics:
    def test_scripted_trace_strict_quality_dominance_exact(self, tmp_path):
        # an energy-raising drift episode overlaps the baseline's final
        # window; the detection controller skips it and keeps a clean tail
        cfg = write(
            tmp_path / "cmp.toml",
            f"""
[experiment]
hamiltonian = "{HEH}"
budget = 60
seed = 8
out = "cmp"

[ansatz]
kind = "RA"
reps = 2

[optimizer]
a0 = 1.0
c0 = 0.1
seed = 9

[[controllers]]
name = "baseline"
kind = "baseline"
exact = true

[[controllers]]
name = "multi_ref"
kind = "multi_ref"
k = 2
th_p = 0.8
sigma = 40
exact = true

[noise]
horizon_jobs = 400
seed = 2
energy_scale = 2.8

[[noise.episodes]]
start_job = 25
duration_jobs = 6
magnitude = 0.2
shape = "STEP"

[[noise.episodes]]
start_job = 55
duration_jobs = 25
magnitude = -0.3
shape = "STEP"
""",
        )
        result = run_cli("compare", "--config", cfg)
        assert result.exit_code == 0, result.output
        comparison = json.loads((tmp_path / "cmp" / "comparison.json").read_text())
        q_base = comparison["controllers"]["baseline"]["progress_quality"]
        q_multi = comparison["controllers"]["multi_ref"]["progress_quality"]
        assert q_multi > q_base
        assert comparison["controllers"]["multi_ref"]["skip_count"] > 0

    def test_mismatched_runs_refused(self):
        from driftvqe.report import ComparisonError, build_comparison

        a = {
            "controller": "baseline",
            "meta": {"qubit_count": 2, "term_count": 3, "ansatz": {}, "seed": 1,
                     "budget": 5, "trace_seed": None, "trace_horizon": None},
            "summary": {}, "energies": [], "jobs": [],
        }
        b = json.loads(json.dumps(a))
        b["meta"]["seed"] = 2
        with pytest.raises(ComparisonError, match="seed"):
            build_comparison({"a": a, "b": b})

    def test_comparison_needs_two_runs(self):
        from driftvqe.report import ComparisonError, build_comparison

        with pytest.raises(ComparisonError):
            build_comparison({"only": {"meta": {}, "summary": {}, "controller": "x",
                                       "energies": [], "jobs": []}})
