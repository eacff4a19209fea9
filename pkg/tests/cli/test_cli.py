"""
Tests for CLI commands.
"""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from rdphase.cli.main import cli, run

SMALL = ["--set", "grid.points=16", "--set", "solver.t_end=0.1"]


def read_meta(out="out"):
    return json.loads((Path(out) / "meta.json").read_text())


class TestCLIErrors:
    """Test suite for exit codes of failing invocations."""

    def test_missing_config_file(self, tmp_path):
        """A missing configuration file is a configuration error (exit 2)."""
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ["simulate", "--config", "nope.cfg"])

            assert result.exit_code == 2
            assert "config file 'nope.cfg' not found" in result.output

    def test_unknown_key(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ["simulate", "--set", "grid.size=3"])

            assert result.exit_code == 2
            assert "invalid configuration" in result.output

    def test_bad_scale_choice(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(cli, ["appendix", "--scale", "huge"])

            assert result.exit_code == 2

    def test_run_returns_exit_code(self, tmp_path, monkeypatch):
        """`run` hands back the exit code instead of exiting the process."""
        monkeypatch.chdir(tmp_path)
        assert run(["simulate", "--config", "nope.cfg"]) == 2
        assert run(["simulate", *SMALL, "--replicas", "1"]) == 0

    def test_version(self):
        result = CliRunner().invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "rdphase" in result.output


class TestCLISimulate:
    """Test suite for the 'simulate' command."""

    def test_writes_outputs(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            args = ["simulate", *SMALL, "--replicas", "2", "--check"]
            result = runner.invoke(cli, args)

            assert result.exit_code == 0, result.output
            for name in ("observables.csv", "snapshots.csv", "config.echo"):
                assert (Path("out") / name).exists()
            header = ",".join(["replica", "t"] + [f"x_{i}" for i in range(16)])
            assert Path("out/snapshots.csv").read_text() == header + "\n"
            meta = read_meta()
            assert meta["replicas"] == 2
            assert meta["checks"]["failed"] == []

    def test_same_seed_same_observables(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            for out in ("a", "b"):
                result = runner.invoke(
                    cli, ["simulate", *SMALL, "--seed", "11", "--out", out]
                )
                assert result.exit_code == 0, result.output

            first = Path("a/observables.csv").read_text()
            assert first == Path("b/observables.csv").read_text()
            echo = Path("a/config.echo").read_text()
            assert echo == Path("b/config.echo").read_text()

    def test_config_file_and_echo(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            config = "# small run\ngrid.points = 8\nsolver.t_end = 0.05\n"
            Path("kpp.cfg").write_text(config)
            result = runner.invoke(cli, ["simulate", "--config", "kpp.cfg"])

            assert result.exit_code == 0, result.output
            echo = Path("out/config.echo").read_text()
            assert "grid.points = 8\n" in echo
            assert "solver.t_end = 0.05\n" in echo


class TestCLIExperiments:
    """Test suite for the experiment commands on small settings."""

    def test_kernel_check(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli, ["kernel", "--set", "kernel.times=0.05,0.5", "--check"]
            )

            assert result.exit_code == 0, result.output
            lines = Path("out/kernel_errors.csv").read_text().splitlines()
            assert lines[0] == "t,separation,image_sum,fourier,abs_error"
            assert len(lines) == 1 + 2 * 40

    def test_chain_ideal(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli,
                [
                    "chain",
                    "--mode",
                    "ideal",
                    "--set",
                    "chain.steps=5000",
                    "--replicas",
                    "2",
                ],
            )

            assert result.exit_code == 0, result.output
            meta = read_meta()
            assert meta["chain"]["M"] == -2
            assert meta["chain"]["mode"] == "ideal"
            assert meta["chain"]["moves"] == 10_000
            header = Path("out/chain.csv").read_text().splitlines()[0]
            assert header == "replica,n,X_n,ell_n,outcome"

    def test_couple(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli,
                [
                    "couple",
                    "--set",
                    "grid.points=8",
                    "--set",
                    "coupling.kind=independent",
                    "--set",
                    "coupling.deltas=0.2,0.0",
                    "--set",
                    "coupling.t_max=0.5",
                    "--replicas",
                    "2",
                ],
            )

            assert result.exit_code == 0, result.output
            lines = Path("out/coupling_success.csv").read_text().splitlines()
            assert len(lines) == 3
            assert lines[2].startswith("0,2,2,1,")
            assert len(Path("out/coupling.csv").read_text().splitlines()) == 5

    def test_short_measure(self, tmp_path):
        """Too few snapshots for a summary leave measure_summary.csv header-only."""
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli,
                [
                    "measure",
                    "--set",
                    "grid.points=8",
                    "--set",
                    "measure.burn_in=1",
                    "--set",
                    "measure.thinning=0.5",
                    "--set",
                    "measure.total=2",
                ],
            )

            assert result.exit_code == 0, result.output
            assert len(Path("out/measure_samples.csv").read_text().splitlines()) == 6
            summary = Path("out/measure_summary.csv").read_text().splitlines()
            assert summary[0].startswith("functional,count,mean,stderr,q0.05")
            assert len(summary) == 1
            assert read_meta()["snapshots"] == 5

    def test_sweep_resume(self, tmp_path):
        """A resumed sweep keeps the stored points and recomputes nothing."""
        runner = CliRunner()
        args = [
            "sweep",
            "--set",
            "grid.points=8",
            "--set",
            "sweep.lambdas=0,0.5",
            "--set",
            "sweep.t_end=11",
            "--set",
            "sweep.window_start=1",
            "--replicas",
            "1",
        ]
        with runner.isolated_filesystem(temp_dir=tmp_path):
            first = runner.invoke(cli, args)
            assert first.exit_code == 0, first.output
            table = Path("out/phase.csv").read_text()
            assert len(table.splitlines()) == 3

            second = runner.invoke(cli, args + ["--resume"])
            assert second.exit_code == 0, second.output
            assert read_meta()["resumed_points"] == 2
            assert Path("out/phase.csv").read_text() == table

    def test_sweep_check_passes_for_noiseless_point(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli,
                [
                    "sweep",
                    "--set",
                    "grid.points=8",
                    "--set",
                    "sweep.lambdas=0",
                    "--set",
                    "sweep.t_end=11",
                    "--set",
                    "sweep.window_start=1",
                    "--replicas",
                    "1",
                    "--check",
                ],
            )

            assert result.exit_code == 0, result.output
            row = Path("out/phase.csv").read_text().splitlines()[1]
            assert ",persistent," in row


class TestCLIDeterminism:
    """Test suite for output independence from the worker count."""

    RUNS = {
        "simulate": (
            ["simulate", *SMALL, "--replicas", "8"],
            ["observables.csv", "snapshots.csv"],
        ),
        "couple": (
            [
                "couple",
                "--set",
                "grid.points=8",
                "--set",
                "coupling.t_max=0.5",
                "--set",
                "coupling.deltas=0.4,0.1",
                "--replicas",
                "8",
            ],
            ["coupling.csv", "coupling_success.csv"],
        ),
        "sweep": (
            [
                "sweep",
                "--set",
                "grid.points=8",
                "--set",
                "sweep.lambdas=0.2,1",
                "--set",
                "sweep.t_end=11",
                "--set",
                "sweep.window_start=1",
                "--replicas",
                "8",
            ],
            ["phase.csv"],
        ),
    }

    @pytest.mark.parametrize("command", sorted(RUNS))
    def test_outputs_identical_across_workers(self, command, tmp_path):
        args, files = self.RUNS[command]
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            outputs = {}
            for workers in (1, 4, 8):
                out = f"out_{workers}"
                result = runner.invoke(
                    cli, args + ["--seed", "11", "--workers", str(workers), "--out", out]
                )
                assert result.exit_code == 0, result.output
                outputs[workers] = [(Path(out) / name).read_bytes() for name in files]

            assert outputs[4] == outputs[1]
            assert outputs[8] == outputs[1]
            assert all(outputs[1])


class TestCLIAcceptanceChecks:
    """Test suite for the optional acceptance checks on small settings."""

    def test_sawtooth_hitting_clock(self, tmp_path):
        """With p_up = 1 every move reaches the top level, so αₙ = n."""
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli,
                [
                    "chain",
                    "--mode",
                    "ideal",
                    "--set",
                    "chain.p_up=1",
                    "--set",
                    "chain.steps=100",
                    "--replicas",
                    "1",
                ],
            )

            assert result.exit_code == 0, result.output
            meta = read_meta()
            assert meta["chain"]["alpha_rate"] == 1.0
            assert meta["chain"]["hits"] == 100

    def test_noiseless_stages_last_two(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli,
                [
                    "chain",
                    "--mode",
                    "embedded",
                    "--set",
                    "grid.points=8",
                    "--set",
                    "model.lambda=0",
                    "--set",
                    "chain.stages=2",
                    "--set",
                    "chain.level=0.0625",
                    "--replicas",
                    "1",
                    "--check",
                ],
            )

            assert result.exit_code == 0, result.output
            checks = {r["name"]: r["passed"] for r in read_meta()["checks"]["results"]}
            assert checks["upward drift"]
            assert checks["noiseless stage duration"]

    def test_couple_marginal_law_table(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli,
                [
                    "couple",
                    "--set",
                    "grid.points=8",
                    "--set",
                    "coupling.kind=pm",
                    "--set",
                    "coupling.t_max=0.5",
                    "--set",
                    "coupling.deltas=0.4",
                    "--set",
                    "coupling.marginal_replicas=4",
                    "--replicas",
                    "2",
                ],
            )

            assert result.exit_code == 0, result.output
            lines = Path("out/marginal_law.csv").read_text().splitlines()
            assert lines[0] == "time,observable,coupled,reference,z_score"
            assert len(lines) == 7
            meta = read_meta()
            assert meta["marginal_law"]["replicas"] == 4
            assert "marginal law" in [r["name"] for r in meta["checks"]["results"]]

    def test_measure_agreement_of_equal_noiseless_starts(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(
                cli,
                [
                    "measure",
                    "--set",
                    "grid.points=8",
                    "--set",
                    "model.lambda=0",
                    "--set",
                    "init.profile=cosine",
                    "--set",
                    "init.level=0.3",
                    "--set",
                    "init.amplitude=0.2",
                    "--set",
                    "measure.burn_in=1",
                    "--set",
                    "measure.total=1",
                    "--set",
                    "measure.thinning=0.5",
                    "--set",
                    "measure.agreement_replicas=2",
                    "--check",
                ],
            )

            assert result.exit_code == 0, result.output
            lines = Path("out/agreement.csv").read_text().splitlines()
            assert lines[0] == "functional,mean_a,mean_b,mean_difference,stderr,z_score"
            assert [line.split(",")[0] for line in lines[1:]] == ["L", "U", "mean"]
            assert all(float(line.split(",")[3]) == 0.0 for line in lines[1:])
            assert read_meta()["agreement"]["replicas"] == 2
