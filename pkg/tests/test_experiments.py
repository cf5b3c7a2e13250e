"""
Tests for experiment configs, figure pipelines and CSV/manifest output.
"""

import json
import math
from unittest.mock import patch

import pytest

from config_manager import RuntimeConfig
from aic_tomography.errors import ConfigInvalid, TomographyError
from aic_tomography.experiments import (
    CSV_COLUMNS,
    _child_seed,
    compute_rows,
    format_cell,
    manifest_path_for,
    run_experiment,
)
from aic_tomography.inference import cross_model_protocol
from aic_tomography.measurement import split_dataset
from aic_tomography.models import EXPERIMENT_IDS, ExperimentConfig, RunManifest


class TestExperimentConfig:
    """Validation of sweep configs."""

    def test_defaults(self):
        config = ExperimentConfig.parse({"experiment": "fig3"})
        assert config.excitations == 2
        assert config.alpha == 0.2
        assert config.Ns == [1000]
        assert config.phi_step == pytest.approx(math.pi / 180)

    def test_single_excitation_default(self):
        assert ExperimentConfig.parse({"experiment": "fig1a"}).excitations == 1
        assert ExperimentConfig.parse({"experiment": "fig1a", "excitations": 2}).excitations == 2

    @pytest.mark.parametrize(
        "overrides, field",
        [
            ({"Ns": [0]}, "Ns"),
            ({"Ns": [101]}, "Ns"),
            ({"Ns": []}, "Ns"),
            ({"seeds": []}, "seeds"),
            ({"phis": []}, "phis"),
            ({"alpha": 1.5}, "alpha"),
            ({"excitations": 3}, "excitations"),
            ({"grid_step": 0.1}, "grid_step"),
            ({"n_bins": 0}, "n_bins"),
        ],
    )
    def test_invalid_fields(self, overrides, field):
        with pytest.raises(ConfigInvalid) as excinfo:
            ExperimentConfig.parse({"experiment": "fig3", **overrides})
        assert field in excinfo.value.field_errors

    def test_unknown_experiment(self):
        with pytest.raises(ConfigInvalid) as excinfo:
            ExperimentConfig.parse({"experiment": "fig9"})
        assert "experiment" in excinfo.value.field_errors

    def test_from_file_with_overrides(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"experiment": "fig3", "Ns": [100], "seeds": [1, 2]}), encoding="utf-8")
        config = ExperimentConfig.from_file(path, {"Ns": [200, 400], "seeds": None})
        assert config.Ns == [200, 400]
        assert config.seeds == [1, 2]

    def test_from_missing_file(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            ExperimentConfig.from_file(tmp_path / "absent.json")

    def test_from_malformed_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigInvalid):
            ExperimentConfig.from_file(path)

    def test_every_experiment_has_columns(self):
        assert set(CSV_COLUMNS) == set(EXPERIMENT_IDS)


class TestManifest:
    """Run-manifest hashing."""

    def test_hash_ignores_outputs(self):
        config = ExperimentConfig.parse({"experiment": "fig4"})
        a = RunManifest(config=config, versions={"numpy": "1"}, seeds=[0], outputs=["a.csv"])
        b = RunManifest(config=config, versions={"numpy": "1"}, seeds=[0], outputs=["b.csv"])
        assert a.sha256() == b.sha256()
        assert len(a.sha256()) == 64

    def test_hash_tracks_config(self):
        a = RunManifest(config=ExperimentConfig.parse({"experiment": "fig3", "seeds": [0]}))
        b = RunManifest(config=ExperimentConfig.parse({"experiment": "fig3", "seeds": [1]}))
        assert a.sha256() != b.sha256()

    def test_manifest_path(self, tmp_path):
        assert manifest_path_for(tmp_path / "fig3.csv") == tmp_path / "fig3.manifest.json"


class TestFormatting:
    """CSV cell formatting."""

    def test_cells(self):
        assert format_cell(5) == "5"
        assert format_cell(True) == "1"
        assert format_cell(1 / 3) == "0.333333333333"
        assert format_cell(0.0) == "0"


class TestPipelines:
    """Row shapes of the individual experiments."""

    def test_witness_curve_rows(self):
        config = ExperimentConfig.parse({"experiment": "fig4", "phis": [0.0, math.pi]})
        rows = compute_rows(config)
        assert [row[:2] for row in rows] == [(0.0, 0.0), (0.0, 0.2), (math.pi, 0.0), (math.pi, 0.2)]
        assert rows[0][2] == pytest.approx(math.sqrt(3) - 2.5, abs=1e-12)
        assert rows[1][2] == pytest.approx(math.sqrt(3) - 0.1 - 1.6, abs=1e-12)
        assert compute_rows(config) == rows

    def test_tomography_rows(self):
        config = ExperimentConfig.parse({"experiment": "fig1a", "Ns": [100], "seeds": [1, 0]})
        rows = compute_rows(config, max_workers=2)
        assert [row[:3] for row in rows] == [(0.0, 100, 0), (0.0, 100, 1)]
        assert all(len(row) == len(CSV_COLUMNS["fig1a"]) for row in rows)

    def test_excitation_rows_cover_both_targets(self):
        config = ExperimentConfig.parse({"experiment": "fig2", "Ns": [100], "phis": [0.0, 1.0]})
        rows = compute_rows(config)
        assert {row[0] for row in rows} == {1, 2}
        assert [row[:2] for row in rows] == [(1, 0.0), (1, 1.0), (2, 0.0), (2, 1.0)]
        assert all(len(row) == len(CSV_COLUMNS["fig2"]) for row in rows)

    def test_excitation_rows_ignore_config_excitations(self):
        config = ExperimentConfig.parse({"experiment": "fig2", "Ns": [100], "excitations": 1})
        assert [row[0] for row in compute_rows(config)] == [1, 2]

    def test_witness_split_uses_its_own_stream(self):
        config = ExperimentConfig.parse({
            "experiment": "fig8", "Ns": [200], "seeds": [3], "grid_step": 0.05, "posterior_grid_step": 0.05,
        })
        with patch("aic_tomography.experiments.split_dataset", wraps=split_dataset) as spy:
            compute_rows(config)
        seed = spy.call_args.args[2]
        assert seed == _child_seed(3, 2)
        assert seed != 3

    def test_tomography_split_uses_its_own_stream(self):
        config = ExperimentConfig.parse({"experiment": "fig1b", "Ns": [100], "seeds": [3]})
        with patch("aic_tomography.experiments.cross_model_protocol", wraps=cross_model_protocol) as spy:
            compute_rows(config)
        assert spy.call_args.args[3] == _child_seed(3, 2)

    def test_physicality_rows(self):
        config = ExperimentConfig.parse({"experiment": "fig6", "Ns": [100], "grid_step": 0.05})
        rows = compute_rows(config)
        assert len(rows) == 21 * 21
        assert {row[-1] for row in rows} <= {0, 1}
        assert all(row[:3] == (0.0, 100, 0) for row in rows)

    @pytest.mark.parametrize("experiment", ["fig5", "fig7", "fig8"])
    def test_witness_rows(self, experiment):
        config = ExperimentConfig.parse({
            "experiment": experiment, "Ns": [200], "grid_step": 0.05, "posterior_grid_step": 0.05,
        })
        (row,) = compute_rows(config)
        assert len(row) == len(CSV_COLUMNS[experiment])
        assert all(math.isfinite(value) for value in row)

    def test_cell_failure_propagates(self):
        config = ExperimentConfig.parse({"experiment": "fig3", "Ns": [100]})
        with patch("aic_tomography.experiments.rank_models", side_effect=TomographyError("boom")):
            with pytest.raises(TomographyError):
                compute_rows(config)


class TestRunExperiment:
    """CSV and manifest files."""

    @staticmethod
    def _config(tmp_path, **extra):
        data = {
            "experiment": "fig1a",
            "Ns": [100],
            "seeds": [0, 1],
            "output": str(tmp_path / "fig1a.csv"),
            "max_workers": 2,
        }
        data.update(extra)
        return ExperimentConfig.parse(data)

    def test_writes_csv_and_manifest(self, tmp_path):
        manifest = run_experiment(self._config(tmp_path))
        lines = (tmp_path / "fig1a.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == f"# manifest_sha256={manifest.sha256()}"
        assert lines[1] == "phi,N,seed,neg_delta_aic"
        assert len(lines) == 4

        stored = json.loads((tmp_path / "fig1a.manifest.json").read_text(encoding="utf-8"))
        assert stored["manifest_sha256"] == manifest.sha256()
        assert stored["seeds"] == [0, 1]
        assert "numpy" in stored["versions"]

    def test_reruns_are_byte_identical(self, tmp_path):
        config = self._config(tmp_path)
        run_experiment(config)
        first = (tmp_path / "fig1a.csv").read_bytes()
        run_experiment(config)
        assert (tmp_path / "fig1a.csv").read_bytes() == first

    def test_rows_do_not_depend_on_worker_count(self, tmp_path):
        config = self._config(tmp_path)
        assert compute_rows(config, max_workers=1) == compute_rows(config, max_workers=3)

    def test_failed_run_keeps_existing_output(self, tmp_path):
        existing = tmp_path / "fig1a.csv"
        existing.write_text("previous\n", encoding="utf-8")
        with patch("aic_tomography.experiments.compute_rows", side_effect=TomographyError("boom")):
            with pytest.raises(TomographyError):
                run_experiment(self._config(tmp_path))
        assert existing.read_text(encoding="utf-8") == "previous\n"

    def test_failed_manifest_removes_csv(self, tmp_path):
        unwritable = tmp_path / "missing" / "fig1a.manifest.json"
        with patch("aic_tomography.experiments.manifest_path_for", return_value=unwritable):
            with pytest.raises(OSError):
                run_experiment(self._config(tmp_path))
        assert not (tmp_path / "fig1a.csv").exists()

    def test_default_output_uses_runtime_directory(self, tmp_path):
        runtime = RuntimeConfig(max_workers=1, debug=False, output_dir=str(tmp_path / "tables"))
        config = ExperimentConfig.parse({"experiment": "fig4", "phis": [0.0]})
        with patch("aic_tomography.experiments.get_runtime_config", return_value=runtime):
            manifest = run_experiment(config)
        assert manifest.outputs[0] == str(tmp_path / "tables" / "fig4.csv")
        assert (tmp_path / "tables" / "fig4.manifest.json").exists()
