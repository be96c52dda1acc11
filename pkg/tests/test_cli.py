import json

import pytest

from fairforge import cli, config
from fairforge.io.bundles import read_suite
from fairforge.io.checkpoint import load_checkpoint
from fairforge.prior.scm import PriorConfig


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def _stderr_json(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture
def suite_dir(tmp_path, capsys):
    out = tmp_path / "bench"
    status = cli.run(["--seed", "2", "bench", "generate", "--groups", "Biased,FairObservable",
                      "--per-group", "1", "--out", str(out)])
    assert status == 0
    return out


class TestGenerate:
    """Data-producing subcommands."""

    def test_bench_generate(self, suite_dir, capsys):
        payload = _stdout_json(capsys)
        assert payload["bundles"] == 2
        assert [b.bundle_id for b in read_suite(suite_dir)] == ["Biased-000", "FairObservable-000"]

    def test_prior_sample(self, small_prior, tmp_path, capsys):
        config_path = tmp_path / "prior.json"
        config_path.write_text(json.dumps(small_prior.to_dict()))
        out = tmp_path / "samples"
        status = cli.run(["prior", "sample", "--config", str(config_path), "--count", "2",
                          "--keep-noise", "--out", str(out)])
        assert status == 0
        assert _stdout_json(capsys)["samples"] == 2
        assert sorted(p.name for p in out.iterdir()) == ["sample_0000", "sample_0001"]

    def test_train(self, tiny_config, small_prior, tmp_path, capsys):
        model_path, prior_path = tmp_path / "model.json", tmp_path / "prior.json"
        model_path.write_text(json.dumps(tiny_config.to_dict()))
        prior_path.write_text(json.dumps(small_prior.to_dict()))
        out = tmp_path / "ckpt"
        status = cli.run(["train", "--model-config", str(model_path), "--prior-config",
                          str(prior_path), "--steps", "1", "--no-progress", "--out", str(out)])
        assert status == 0
        assert _stdout_json(capsys)["steps_completed"] == 1
        assert load_checkpoint(out / "model.ckpt").provenance.steps_completed == 1

    def test_train_defaults_to_the_varied_prior(self, tiny_config, tmp_path, capsys):
        model_path = tmp_path / "model.json"
        model_path.write_text(json.dumps(tiny_config.to_dict()))
        out = tmp_path / "ckpt"
        status = cli.run(["--seed", "4", "train", "--model-config", str(model_path),
                          "--steps", "1", "--no-progress", "--out", str(out)])
        assert status == 0
        expected = PriorConfig.varied(tiny_config.max_features, seed=4).digest()
        assert load_checkpoint(out / "model.ckpt").provenance.prior_digest == expected


class TestEvaluate:
    """Benchmark subcommands."""

    def test_evaluate_without_a_model(self, suite_dir, tmp_path, capsys):
        report = tmp_path / "out" / "report.json"
        status = cli.run(["evaluate", "--bundle", str(suite_dir), "--methods", "constant,random",
                          "--out", str(report)])
        assert status == 0
        payload = _stdout_json(capsys)
        assert set(payload["pareto_share"]) == {"constant", "random"}
        rows = json.loads(report.read_text())
        assert len(rows) == 4
        plot_dir = report.parent / "plot_data"
        assert (plot_dir / "tradeoff_ate.csv").exists()
        assert (plot_dir / "ranks.csv").exists()
        assert (report.parent / "report_summary.json").exists()

    def test_sweep(self, suite_dir, tmp_path, capsys):
        status = cli.run(["sweep", "--axis", "sigma", "--bundle", str(suite_dir),
                          "--methods", "constant", "--out", str(tmp_path / "sweeps")])
        assert status == 0
        assert (tmp_path / "sweeps" / "sweep_sigma.json").exists()
        assert (tmp_path / "sweeps" / "plot_data" / "ablation_sigma.csv").exists()


class TestFailures:
    """Exit codes and error payloads."""

    def test_missing_checkpoint(self, suite_dir, capsys):
        capsys.readouterr()
        status = cli.run(["evaluate", "--bundle", str(suite_dir), "--methods", "fairpfn"])
        assert status == 2
        assert _stderr_json(capsys)["error"] == "configuration_error"

    def test_unknown_group(self, tmp_path, capsys):
        status = cli.run(["bench", "generate", "--groups", "Unbiased", "--out", str(tmp_path)])
        assert status == 2
        assert _stderr_json(capsys)["error"] == "configuration_error"

    def test_bad_environment(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("FORGE_SEED", "abc")
        status = cli.run(["bench", "generate", "--per-group", "1", "--out", str(tmp_path)])
        assert status == 2
        assert "FORGE_SEED" in _stderr_json(capsys)["message"]

    def test_bad_log_level(self, tmp_path, capsys):
        status = cli.run(["--log-level", "chatty", "bench", "generate", "--out", str(tmp_path)])
        assert status == 2

    def test_unexpected_failure(self, tmp_path, monkeypatch, capsys):
        def broken(*args, **kwargs):
            raise RuntimeError("disk on fire")

        monkeypatch.setattr(cli, "generate_suite", broken)
        status = cli.run(["bench", "generate", "--out", str(tmp_path)])
        assert status == 1
        assert _stderr_json(capsys) == {"error": "internal_error", "message": "disk on fire"}

    def test_usage_errors_exit_through_argparse(self):
        with pytest.raises(SystemExit) as excinfo:
            cli.run(["sweep", "--axis", "depth"])
        assert excinfo.value.code == 2

    def test_accept_needs_a_checkpoint(self, tmp_path, capsys):
        status = cli.run(["accept", "--out", str(tmp_path)])
        assert status == 2
        assert _stderr_json(capsys)["error"] == "configuration_error"


class TestParser:
    """Flag parsing."""

    def test_suite_size_flags(self):
        parser = cli.build_parser()
        assert parser.parse_args(["bench", "generate"]).per_group == config.SMOKE_PER_GROUP
        assert parser.parse_args(["bench", "generate", "--full"]).per_group == \
            config.FULL_PER_GROUP
        assert parser.parse_args(["bench", "generate", "--per-group", "3"]).per_group == 3

    def test_full_and_per_group_are_exclusive(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["bench", "generate", "--full", "--per-group", "3"])

    def test_accept_defaults(self):
        args = cli.build_parser().parse_args(["accept", "--ckpt", "model.ckpt"])
        assert args.reversion_bundles == config.ACCEPTANCE_REVERSION_BUNDLES
        assert args.per_group is None
