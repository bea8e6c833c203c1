"""Audit report assembly and its JSON schema."""

from __future__ import annotations

import json

import jsonschema

from . import __version__

SCHEMA_VERSION = "1.0"

_STATS = {
    "type": "object",
    "required": ["stratum_by", "total", "counts", "proportions"],
    "properties": {
        "stratum_by": {"type": "array", "items": {"type": "string"}},
        "total": {"type": "integer", "minimum": 1},
        "counts": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
        "proportions": {"type": "object",
                        "additionalProperties": {"type": "number", "minimum": 0, "maximum": 1}},
    },
}

_CLASSIFIER = {
    "type": "object",
    "required": ["total", "correct", "accuracy", "confusion"],
    "properties": {
        "total": {"type": "integer", "minimum": 1},
        "correct": {"type": "integer", "minimum": 0},
        "accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "confusion": {"type": "object", "additionalProperties": {
            "type": "object", "additionalProperties": {"type": "integer", "minimum": 0}}},
    },
}

_STRATUM_METRICS = {
    "type": "object",
    "required": ["utterances", "words", "word_edits", "chars", "char_edits", "wer", "cer"],
    "properties": {
        "utterances": {"type": "integer", "minimum": 1},
        "wer": {"type": "number", "minimum": 0},
        "cer": {"type": "number", "minimum": 0},
    },
}

_GROUP_METRICS = {
    "type": "object",
    "required": ["strata", "bias_gap", "cer_gap"],
    "properties": {
        "strata": {"type": "object", "minProperties": 1, "additionalProperties": _STRATUM_METRICS},
        "bias_gap": {"type": "number", "minimum": 0},
        "cer_gap": {"type": "number", "minimum": 0},
    },
}

AUDIT_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "voxbalance audit report",
    "type": "object",
    "required": ["schema_version", "tool", "config"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": {"type": "object", "required": ["name", "version"]},
        "commands": {"type": "array", "items": {"type": "string"}},
        "config": {"type": "object"},
        "corpus_before": _STATS,
        "corpus_after": _STATS,
        "classifier": _CLASSIFIER,
        "group_metrics": _GROUP_METRICS,
        "balance": {"type": "object", "required": ["strategy", "seed", "target_counts", "duplications"]},
    },
}

SECTIONS = ("corpus_before", "corpus_after", "classifier", "group_metrics", "balance")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def validate_report(report: dict) -> dict:
    jsonschema.validate(report, AUDIT_REPORT_SCHEMA)
    for key in ("corpus_before", "corpus_after"):
        if key in report:
            stats = report[key]
            if sum(stats["counts"].values()) != stats["total"]:
                raise jsonschema.ValidationError(f"{key}: counts do not sum to total")
            if abs(sum(stats["proportions"].values()) - 1.0) > 1e-9:
                raise jsonschema.ValidationError(f"{key}: proportions do not sum to 1")
    return report


def build_report(command: str, config: dict, **sections) -> dict:
    """A validated report holding the given sections (a fragment of the full audit)."""
    unknown = set(sections) - set(SECTIONS)
    if unknown:
        raise ValueError(f"unknown report sections {sorted(unknown)}")
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "voxbalance", "version": __version__},
        "commands": [command],
        "config": {command: config},
    }
    report.update({k: v for k, v in sections.items() if v is not None})
    return validate_report(report)


def merge_reports(fragments) -> dict:
    """Combine per-command fragments into one audit report; later fragments win on overlap."""
    merged = {"schema_version": SCHEMA_VERSION,
              "tool": {"name": "voxbalance", "version": __version__},
              "commands": [], "config": {}}
    for frag in fragments:
        validate_report(frag)
        merged["commands"].extend(frag.get("commands", []))
        merged["config"].update(frag["config"])
        for key in SECTIONS:
            if key in frag:
                merged[key] = frag[key]
    return validate_report(merged)
