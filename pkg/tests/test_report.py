import json

import jsonschema
import pytest

from voxbalance.pipeline import PipelineConfig, run_pipeline
from voxbalance.pitch import GenderBands
from voxbalance.report import build_report, dump_json, merge_reports, validate_report
from voxbalance.synth import make_eval_pairs, make_synthetic_corpus

STATS = {"stratum_by": ["gender"], "total": 3, "counts": {"male": 2, "female": 1},
         "proportions": {"male": 2 / 3, "female": 1 / 3}}


def test_build_report_is_self_describing():
    report = build_report("inspect", {"manifest": "m.tsv"}, corpus_before=STATS)
    assert report["schema_version"] == "1.0"
    assert report["tool"]["name"] == "voxbalance"
    assert report["config"] == {"inspect": {"manifest": "m.tsv"}}


def test_invalid_reports_rejected():
    with pytest.raises(jsonschema.ValidationError):
        build_report("inspect", {}, corpus_before={**STATS, "total": 0})
    with pytest.raises(jsonschema.ValidationError):
        build_report("inspect", {}, corpus_before={**STATS, "total": 4})
    with pytest.raises(jsonschema.ValidationError):
        validate_report({**build_report("inspect", {}), "timestamp": "now"})
    with pytest.raises(ValueError):
        build_report("inspect", {}, histogram={})


def test_merge_keeps_every_section():
    a = build_report("inspect", {"by": "gender"}, corpus_before=STATS)
    b = build_report("classify", {"bands": "x"}, classifier={
        "total": 62, "correct": 34, "accuracy": 34 / 62, "confusion": {"female": {"female": 34}}})
    merged = merge_reports([a, b])
    assert merged["commands"] == ["inspect", "classify"]
    assert set(merged) >= {"corpus_before", "classifier"}
    assert set(merged["config"]) == {"inspect", "classify"}


def test_dump_json_is_canonical():
    assert dump_json({"b": 1, "a": [1.5]}) == '{\n  "a": [\n    1.5\n  ],\n  "b": 1\n}\n'


def test_band_spec_roundtrip():
    bands = GenderBands((80.5, 150.0), (170.0, 260.0))
    assert GenderBands.parse(bands.to_spec()) == bands


def test_pipeline_writes_valid_audit(tmp_path):
    manifest = make_synthetic_corpus(tmp_path / "c", {"male": 4, "female": 2, "unlabeled": 1},
                                     seed=2, duration=0.4)
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text(make_eval_pairs({"male": 0.0, "female": 0.5}, 10, seed=1))
    cfg = PipelineConfig(manifest, manifest.parent, tmp_path / "audit", seed=5, pairs=pairs)
    report = run_pipeline(cfg)
    assert report["commands"] == ["inspect", "classify", "balance", "evaluate"]
    assert report["corpus_after"]["counts"] == {"female": 4, "male": 4, "unlabeled": 1}
    assert report["classifier"]["accuracy"] == 1.0
    assert report["group_metrics"]["strata"]["male"]["wer"] == 0.0
    on_disk = json.loads((tmp_path / "audit/audit_report.json").read_text())
    assert validate_report(on_disk) == report
