import builtins
import json
import os

import numpy as np
import pytest

from zsda.adaptation import learn_subspace
from zsda.data import DomainDataset, save_domains
from zsda.errors import MissingLabels, UnknownTargetId
from zsda.grassmann import bc_distance
from zsda.pipeline import (
    default_dim,
    evaluate_all_targets,
    evaluate_target,
    summarize,
    within_domain_accuracy,
    zsda_predict,
)
from zsda.synth import SynthConfig, generate_domains, generate_synthetic


@pytest.fixture
def file_log(monkeypatch):
    """Record every path passed to builtins.open, in order."""
    opened = []
    real_open = builtins.open

    def spy(file, *args, **kwargs):
        opened.append(os.path.abspath(os.fspath(file)) if isinstance(file, (str, os.PathLike)) else file)
        return real_open(file, *args, **kwargs)

    monkeypatch.setattr(builtins, "open", spy)
    return opened


def target_paths(manifest, did):
    e = manifest.entry(did)
    return {os.path.abspath(p) for p in (e.features_path, e.labels_path, e.split_path)}


class TestZsdaPredict:
    def test_single_domain(self, tmp_path, rng):
        x = rng.standard_normal((30, 6))
        m = save_domains([DomainDataset(x, [1.0, 2.0], "only")], tmp_path)
        p, _ = zsda_predict(m, [7.0, 7.0], 2)
        assert bc_distance(p, learn_subspace(x, 2)) < 1e-12

    def test_nearest_neighbour_limit(self, synth_manifest):
        p, _ = zsda_predict(synth_manifest, [15.0, 2.0], 3, spec=1e-3)
        truth = learn_subspace(synth_manifest.read("d8").train_features(), 3)
        assert bc_distance(p, truth) < 1e-6

    def test_never_reads_target_when_absent(self, synth_manifest, file_log):
        rest = synth_manifest.without("d5")
        zsda_predict(rest, [10.0, 2.0], 3)
        assert not target_paths(synth_manifest, "d5") & set(file_log)

    @pytest.mark.parametrize("seed", range(5))
    def test_center_prediction_beats_most_sources(self, tmp_path, seed):
        m = generate_synthetic(SynthConfig(seed=seed), tmp_path)
        truth = learn_subspace(m.read("d5").train_features(), 8)
        rest = m.without("d5")
        pred, _ = zsda_predict(rest, [10.0, 2.0], 8)
        d_pred = bc_distance(pred, truth)
        d_src = [bc_distance(learn_subspace(rest.read(i).train_features(), 8), truth) for i in rest.ids]
        assert sum(d_pred < d for d in d_src) >= 6


class TestEvaluateTarget:
    def test_report_structure(self, synth_manifest):
        r = evaluate_target(synth_manifest, "d5", k=3, da="gfk")
        data = json.loads(r.to_json())
        assert list(data) == ["target_id", "rows", "avg_no_da", "avg_zsda_da", "config"]
        assert [row["source_id"] for row in data["rows"]] == [f"d{i}" for i in (1, 2, 3, 4, 6, 7, 8, 9)]
        assert data["config"]["k"] == 3 and data["config"]["da"] == "gfk" and data["config"]["seed"] == 3
        assert data["avg_no_da"] == pytest.approx(np.mean([row["accuracy_no_da"] for row in data["rows"]]), abs=1e-12)
        assert data["avg_zsda_da"] == pytest.approx(np.mean([row["accuracy_zsda_da"] for row in data["rows"]]), abs=1e-12)

    def test_accuracy_grid(self, synth_manifest):
        # 24 test rows in the target, so every accuracy is a multiple of 1/24
        for da in ("sa", "gfk"):
            r = evaluate_target(synth_manifest, "d1", k=3, da=da)
            for row in r.rows:
                for acc in (row.accuracy_no_da, row.accuracy_zsda_da):
                    assert 0.0 <= acc <= 1.0
                    assert acc * 24 == pytest.approx(round(acc * 24), abs=1e-9)

    def test_control_arm(self, synth_manifest):
        r = evaluate_target(synth_manifest, "d5", k=3, da="none")
        assert all(row.accuracy_zsda_da is None for row in r.rows)
        data = json.loads(r.to_json())
        assert "avg_zsda_da" not in data
        assert all(set(row) == {"source_id", "accuracy_no_da"} for row in data["rows"])

    def test_duplicate_domain(self, tmp_path):
        ds = generate_domains(SynthConfig(seed=1))[4]
        twin = DomainDataset(ds.features, ds.descriptor + 1e-6, "twin", ds.labels, ds.train_mask)
        m = save_domains([ds, twin], tmp_path)
        r = evaluate_target(m, "twin", k=8, da="sa")
        within = within_domain_accuracy(m, ds.id)
        assert r.rows[0].accuracy_no_da == within
        assert r.rows[0].accuracy_zsda_da == pytest.approx(within, abs=0.1)

    def test_zero_shot_read_order(self, synth_manifest, file_log):
        phases = []
        evaluate_target(synth_manifest, "d5", k=3, da="gfk", audit=lambda ph, p: phases.append((ph, p)))
        target = target_paths(synth_manifest, "d5")
        first = min(i for i, p in enumerate(file_log) if p in target)
        # the target is read last, and only after every source
        assert all(p in target for p in file_log[first:])
        assert len(file_log) - first == 3
        hooked = [ph for ph, p in phases if os.path.abspath(p) in target]
        assert hooked == ["score"] * 3
        assert all(ph == "train" for ph, p in phases if os.path.abspath(p) not in target)

    def test_unknown_target(self, synth_manifest):
        with pytest.raises(UnknownTargetId):
            evaluate_target(synth_manifest, "nope")

    def test_missing_labels(self, tmp_path, rng):
        a = DomainDataset(rng.standard_normal((10, 4)), [0.0], "a", np.arange(10) % 2)
        b = DomainDataset(rng.standard_normal((10, 4)), [1.0], "b")
        m = save_domains([a, b], tmp_path)
        with pytest.raises(MissingLabels):
            evaluate_target(m, "b", k=1)
        with pytest.raises(MissingLabels):
            evaluate_target(m, "a", k=1)

    def test_default_dim(self, synth_manifest):
        sources = [synth_manifest.read(i) for i in synth_manifest.ids]
        assert default_dim(sources) == 16 // 8
        assert evaluate_target(synth_manifest, "d2", da="sa").config["k"] == 2


class TestEvaluateAll:
    def test_two_domains(self, tmp_path):
        doms = generate_domains(SynthConfig(grid_levels=([5.0, 15.0], [2.0]), num_classes=3, ambient_dim=12, seed=4))
        m = save_domains(doms, tmp_path)
        reports = evaluate_all_targets(m, k=2, da="gfk")
        assert [r.target_id for r in reports] == ["d1", "d2"]
        assert all(len(r.rows) == 1 for r in reports)
        for r in reports:
            assert r.avg_no_da == r.rows[0].accuracy_no_da

    def test_parallel_matches_serial(self, synth_manifest):
        serial = evaluate_all_targets(synth_manifest, k=2, da="sa")
        parallel = evaluate_all_targets(synth_manifest, k=2, da="sa", workers=4)
        assert [r.to_json() for r in serial] == [r.to_json() for r in parallel]

    def test_summary(self, synth_manifest):
        reports = evaluate_all_targets(synth_manifest, k=2, da="gfk")
        s = summarize(reports)
        assert s["avg_no_da"] == pytest.approx(np.mean([r.avg_no_da for r in reports]))
        assert 0 <= s["targets_improved"] <= 9
