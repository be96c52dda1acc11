import json
import struct

import numpy as np
import pandas as pd
import pytest

from fairforge import config
from fairforge.algorithms.evaluation import score_predictions
from fairforge.core.tabular import PredictionSet
from fairforge.errors import ConfigurationError, FormatError, SchemaError, TruncatedFileError
from fairforge.io.bundles import (
    read_bundle,
    read_prior_sample,
    read_suite,
    write_bundle,
    write_prior_sample,
    write_suite,
)
from fairforge.io.checkpoint import load_checkpoint, save_checkpoint
from fairforge.io.folds import kfold
from fairforge.io.manifest import DatasetManifest, load_manifest, manifest_digest, read_manifest
from fairforge.io.reports import (
    REPORT_FIELDS,
    emit_report,
    export_predictions,
    import_predictions,
    read_report,
)
from fairforge.model.transformer import ModelCheckpoint, OptimizerState, TrainingProvenance
from fairforge.prior.case_studies import CaseGroup, generate_suite
from fairforge.prior.scm import counterfactual_world


@pytest.fixture
def saved_checkpoint(tiny_checkpoint, tmp_path):
    params = tiny_checkpoint.params
    state = OptimizerState.zeros(params)
    state = OptimizerState(step=3, m={k: v + 0.1 for k, v in state.m.items()}, v=state.v,
                           skipped=1)
    checkpoint = ModelCheckpoint(params=params, config=tiny_checkpoint.config,
                                 provenance=TrainingProvenance(steps_completed=3, final_loss=0.41,
                                                               initial_loss=0.69),
                                 optimizer=state)
    return checkpoint, save_checkpoint(checkpoint, tmp_path / "ckpt" / "model.ckpt")


class TestCheckpoint:
    """The binary checkpoint container."""

    def test_round_trip_is_exact(self, saved_checkpoint):
        checkpoint, path = saved_checkpoint
        loaded = load_checkpoint(path)
        assert loaded.config == checkpoint.config
        assert loaded.provenance == checkpoint.provenance
        for name, value in checkpoint.params.items():
            np.testing.assert_array_equal(loaded.params[name], value)
        assert loaded.optimizer.step == 3
        assert loaded.optimizer.skipped == 1
        np.testing.assert_array_equal(loaded.optimizer.m["head.bias"],
                                      checkpoint.optimizer.m["head.bias"])

    def test_wrong_magic(self, saved_checkpoint):
        _, path = saved_checkpoint
        data = bytearray(path.read_bytes())
        data[0:6] = b"NOTCKP"
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            load_checkpoint(path)

    def test_unknown_version(self, saved_checkpoint):
        _, path = saved_checkpoint
        data = bytearray(path.read_bytes())
        struct.pack_into("<I", data, 6, 99)
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            load_checkpoint(path)

    @pytest.mark.parametrize("keep", [10, 200, -8])
    def test_truncated(self, saved_checkpoint, keep):
        _, path = saved_checkpoint
        path.write_bytes(path.read_bytes()[:keep])
        with pytest.raises(TruncatedFileError):
            load_checkpoint(path)

    def test_corrupted_header(self, saved_checkpoint):
        _, path = saved_checkpoint
        data = bytearray(path.read_bytes())
        data[18:22] = b"\xff\xfe{{"
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            load_checkpoint(path)


def _law_frame(n=40, seed=0):
    rng = np.random.default_rng(seed)
    race = np.array(["Black", "White"] * (n // 2))
    return pd.DataFrame({
        "UGPA": np.round(rng.uniform(2.0, 4.0, n), 2),
        "LSAT": rng.integers(20, 48, n),
        "Race": race,
        "Sex": np.tile([1, 2, 2, 1], n // 4),
        "Region": np.array(["GL", "NE", "SO", "NE"] * (n // 4)),
        "FYA": np.round(rng.normal(size=n), 3),
    })


def _manifest_payload(**changes):
    payload = {
        "name": "law_school",
        "path": "law.csv",
        "columns": {"UGPA": "numeric", "LSAT": "numeric", "Race": "binary", "Sex": "binary",
                    "Region": "categorical", "FYA": "numeric"},
        "protected": "Race",
        "protected_positive": "Black",
        "target": "FYA",
        "target_threshold": "mean",
    }
    payload.update(changes)
    return payload


@pytest.fixture
def law_dir(tmp_path):
    frame = _law_frame()
    frame.to_csv(tmp_path / "law.csv", index=False)
    twins = frame.drop(columns=["FYA"]).copy()
    twins["Race"] = np.where(frame["Race"] == "Black", "White", "Black")
    twins.to_csv(tmp_path / "law_cf.csv", index=False)
    rng = np.random.default_rng(1)
    pd.DataFrame({"eps_G": rng.normal(size=len(frame)),
                  "eps_L": rng.normal(size=len(frame))}).to_csv(tmp_path / "law_noise.csv",
                                                                index=False)
    return tmp_path


def _write_manifest(directory, **changes):
    path = directory / "law.json"
    path.write_text(json.dumps(_manifest_payload(**changes)), encoding="utf-8")
    return path


class TestManifest:
    """Real-world dataset ingestion."""

    def test_encoding(self, law_dir):
        loaded = load_manifest(_write_manifest(law_dir))
        data = loaded.dataset
        frame = _law_frame()
        assert data.column_names == ("UGPA", "LSAT", "Race", "Sex",
                                     "Region=GL", "Region=NE", "Region=SO")
        assert data.protected_name == "Race"
        np.testing.assert_array_equal(data.A, (frame["Race"] == "Black").astype(int))
        np.testing.assert_array_equal(data.y, (frame["FYA"] >= frame["FYA"].mean()).astype(int))
        np.testing.assert_array_equal(data.X[:, 2], (frame["Sex"] == 2).astype(float))
        np.testing.assert_array_equal(data.X[:, 3:].sum(axis=1), np.ones(len(frame)))
        assert loaded.counterfactual is None
        assert loaded.fair_noise is None
        assert loaded.encoding["target_threshold"] == pytest.approx(frame["FYA"].mean())

    def test_companion_files(self, law_dir):
        path = _write_manifest(law_dir, counterfactual_path="law_cf.csv",
                               fair_noise_path="law_noise.csv")
        loaded = load_manifest(path)
        np.testing.assert_array_equal(loaded.counterfactual.A, 1 - loaded.dataset.A)
        np.testing.assert_array_equal(loaded.counterfactual.X[:, 0], loaded.dataset.X[:, 0])
        assert loaded.counterfactual.y is None
        assert sorted(loaded.fair_noise) == ["eps_G", "eps_L"]

    def test_counterfactual_must_flip_protected(self, law_dir):
        _law_frame().drop(columns=["FYA"]).to_csv(law_dir / "law_cf.csv", index=False)
        with pytest.raises(SchemaError):
            load_manifest(_write_manifest(law_dir, counterfactual_path="law_cf.csv"))

    def test_missing_values(self, law_dir):
        frame = _law_frame()
        frame.loc[3, "UGPA"] = np.nan
        frame.to_csv(law_dir / "law.csv", index=False)
        with pytest.raises(SchemaError):
            load_manifest(_write_manifest(law_dir))

    def test_missing_column(self, law_dir):
        _law_frame().drop(columns=["LSAT"]).to_csv(law_dir / "law.csv", index=False)
        with pytest.raises(SchemaError):
            load_manifest(_write_manifest(law_dir))

    def test_missing_file(self, law_dir):
        with pytest.raises(SchemaError):
            load_manifest(_write_manifest(law_dir, path="absent.csv"))

    def test_column_list_form(self, law_dir):
        columns = [{"name": k, "type": v} for k, v in _manifest_payload()["columns"].items()]
        manifest = read_manifest(_write_manifest(law_dir, columns=columns))
        assert manifest.columns[0] == ("UGPA", "numeric")
        assert manifest.path == law_dir / "law.csv"
        assert manifest.dataset_name == "law_school"

    @pytest.mark.parametrize("changes, error", [
        ({"protected": "FYA"}, SchemaError),
        ({"protected": "Region"}, SchemaError),
        ({"target": "GPA"}, SchemaError),
        ({"folds": 1}, ConfigurationError),
        ({"target_threshold": "mode"}, ConfigurationError),
        ({"columns": {"Race": "text", "FYA": "numeric"}}, SchemaError),
    ])
    def test_invalid_manifest(self, law_dir, changes, error):
        with pytest.raises(error):
            read_manifest(_write_manifest(law_dir, **changes))

    def test_digest_tracks_files(self, law_dir):
        path = _write_manifest(law_dir)
        before = manifest_digest(read_manifest(path))
        assert manifest_digest(read_manifest(path)) == before
        frame = _law_frame()
        frame.loc[0, "FYA"] = 9.0
        frame.to_csv(law_dir / "law.csv", index=False)
        assert manifest_digest(read_manifest(path)) != before

    def test_dict_round_trip(self, law_dir):
        manifest = read_manifest(_write_manifest(law_dir))
        assert DatasetManifest.from_dict(manifest.to_dict()) == manifest


class TestKFold:
    """Cross-validation splits."""

    def test_five_folds_of_twenty(self):
        folds = kfold(100, k=5, seed=0)
        assert [len(f.validation) for f in folds] == [20] * 5
        rows = np.concatenate([f.validation for f in folds])
        assert sorted(rows.tolist()) == list(range(100))
        for fold in folds:
            assert not set(fold.train) & set(fold.validation)
            assert len(fold.train) == 80

    def test_seeded(self):
        a, b = kfold(50, seed=3), kfold(50, seed=3)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.validation, y.validation)
        assert any(not np.array_equal(x.validation, y.validation)
                   for x, y in zip(a, kfold(50, seed=4)))

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            kfold(10, k=1)
        with pytest.raises(ConfigurationError):
            kfold(3, k=5)


def _reports():
    first = PredictionSet(probs=[1 / 3, 0.9, 0.2, 0.6], A=[0, 1, 0, 1], labels=[0, 1, 0, 1],
                          probs_cf=[0.5, 0.1, 0.2, 0.6])
    second = PredictionSet(probs=[0.4, 0.7], A=[0, 1], labels=[1, 0])
    return [
        score_predictions(first, "d0", "fairpfn", group="Biased",
                          extras={"base_ate": 0.25, "auc_fair": float("nan")}),
        score_predictions(second, "d1", "unfair", group="Law", fold=2),
    ]


class TestReports:
    """JSON and CSV report emission."""

    def test_empty_report(self, tmp_path):
        written = emit_report([], tmp_path / "report.json")
        assert written == [tmp_path / "report.json"]
        assert json.loads((tmp_path / "report.json").read_text()) == []

    def test_json_and_csv(self, tmp_path):
        reports = _reports()
        written = emit_report(reports, tmp_path / "out" / "report.json",
                              tables={"tradeoff": pd.DataFrame({"method": ["a"], "x": [0.5]})},
                              summary={"pareto": {"fairpfn": 1.0}})
        payload = read_report(tmp_path / "out" / "report.json")
        assert [row["method"] for row in payload] == ["fairpfn", "unfair"]
        assert payload[0]["extra_auc_fair"] is None
        assert payload[1]["ate"] is None
        assert set(REPORT_FIELDS) <= set(payload[1])
        plot_dir = tmp_path / "out" / config.REPORT_DIRNAME
        metrics = pd.read_csv(plot_dir / "metrics.csv", float_precision="round_trip")
        assert metrics.loc[0, "ae_max"] == reports[0].ae_summary.max
        assert metrics.loc[0, "ate"] == reports[0].ate
        histograms = pd.read_csv(plot_dir / "ae_histograms.csv")
        assert len(histograms) == config.AE_HISTOGRAM_BINS
        assert histograms["count"].sum() == 4
        assert (plot_dir / "tradeoff.csv").exists()
        summary = json.loads((tmp_path / "out" / "report_summary.json").read_text())
        assert summary == {"pareto": {"fairpfn": 1.0}}
        assert len(written) == 5

    def test_not_a_report(self, tmp_path):
        (tmp_path / "bad.json").write_text("{\"method\": 1}")
        with pytest.raises(FormatError):
            read_report(tmp_path / "bad.json")


class TestImportedPredictions:
    """External predictions matched by row id."""

    def test_round_trip(self, tmp_path):
        predictions = PredictionSet(probs=[0.1, 0.8, 0.35], A=[0, 1, 1], probs_cf=[0.2, 0.7, 0.3],
                                    row_ids=np.array([4, 9, 12]))
        path = export_predictions(predictions, tmp_path / "preds.csv")
        loaded = import_predictions(path, A=[1, 0], labels=None, row_ids=[12, 4])
        np.testing.assert_array_equal(loaded.probs, [0.35, 0.1])
        np.testing.assert_array_equal(loaded.probs_cf, [0.3, 0.2])

    def test_absent_rows(self, tmp_path):
        pd.DataFrame({"row_id": [0, 1], "prob": [0.2, 0.4]}).to_csv(tmp_path / "p.csv",
                                                                     index=False)
        with pytest.raises(SchemaError):
            import_predictions(tmp_path / "p.csv", A=[0, 1], labels=None, row_ids=[1, 5])

    def test_duplicate_ids(self, tmp_path):
        pd.DataFrame({"row_id": [0, 0], "prob": [0.2, 0.4]}).to_csv(tmp_path / "p.csv",
                                                                     index=False)
        with pytest.raises(SchemaError):
            import_predictions(tmp_path / "p.csv", A=[0], labels=None, row_ids=[0])


class TestBundles:
    """On-disk bundles and prior samples."""

    def test_bundle_round_trip(self, bundle_factory, tmp_path):
        bundle = bundle_factory(group=CaseGroup.MULTIPLE_A)
        loaded = read_bundle(write_bundle(bundle, tmp_path / "b"))
        np.testing.assert_array_equal(loaded.observational.X, bundle.observational.X)
        np.testing.assert_array_equal(loaded.counterfactual.y, bundle.counterfactual.y)
        np.testing.assert_array_equal(loaded.y_fair, bundle.y_fair)
        assert loaded.observational.column_names == bundle.observational.column_names
        assert loaded.base_ate == bundle.base_ate
        assert loaded.config == bundle.config
        assert loaded.group is CaseGroup.MULTIPLE_A
        for name, values in bundle.fair_variables.items():
            np.testing.assert_array_equal(loaded.fair_variables[name], values)

    def test_suite_round_trip(self, tmp_path):
        suite = generate_suite(1, seed=4, n_range=(100, 150))
        loaded = read_suite(write_suite(suite, tmp_path / "suite"))
        assert [b.bundle_id for b in loaded] == [b.bundle_id for b in suite]
        assert len(read_suite(tmp_path / "suite" / suite[0].bundle_id)) == 1

    def test_missing_suite(self, tmp_path):
        with pytest.raises(SchemaError):
            read_suite(tmp_path)

    def test_prior_sample_round_trip(self, prior_samples, tmp_path):
        sample = prior_samples[0]
        loaded = read_prior_sample(write_prior_sample(sample, tmp_path / "s"))
        np.testing.assert_array_equal(loaded.dataset.X, sample.dataset.X)
        np.testing.assert_array_equal(loaded.noise_draws.noise, sample.noise_draws.noise)
        assert loaded.seed == sample.seed
        np.testing.assert_array_equal(counterfactual_world(loaded).dataset.y,
                                      counterfactual_world(sample).dataset.y)
