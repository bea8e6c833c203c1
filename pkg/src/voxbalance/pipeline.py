"""Batch audit pipeline: inspect, classify, balance and evaluate in one run.

Each stage runs the matching CLI subcommand into its own directory under
``output_dir``; the per-stage report fragments are merged into
``output_dir/audit_report.json``.
"""

from __future__ import annotations

import contextlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .cli import build_parser, resolve_args
from .pitch import GenderBands, PitchConfig
from .report import dump_json, merge_reports

STAGES = ("inspect", "classify", "balance", "evaluate")
AUDIT_REPORT = "audit_report.json"


@dataclass(frozen=True)
class PipelineConfig:
    manifest: Path
    audio_root: Path
    output_dir: Path
    seed: int
    strategy: str = "upsample"
    pitch: PitchConfig = field(default_factory=PitchConfig)
    bands: GenderBands = field(default_factory=GenderBands)
    pairs: Path | None = None  # reference/hypothesis/stratum TSV; evaluate is skipped without it
    jobs: int = 1

    def stage_argv(self, stage: str) -> list[str]:
        out = str(Path(self.output_dir) / stage)
        if stage == "inspect":
            return ["inspect", "--manifest", str(self.manifest), "--out", out]
        if stage == "classify":
            return ["classify", "--manifest", str(self.manifest), "--audio-root", str(self.audio_root),
                    "--out", out, "--bands", self.bands.to_spec(),
                    "--f0-min", repr(self.pitch.f0_min), "--f0-max", repr(self.pitch.f0_max),
                    "--frame-ms", repr(self.pitch.frame_ms), "--hop-ms", repr(self.pitch.hop_ms),
                    "--jobs", str(self.jobs)]
        if stage == "balance":
            return ["balance", "--manifest", str(self.manifest), "--audio-root", str(self.audio_root),
                    "--out", out, "--seed", str(self.seed), "--strategy", self.strategy,
                    "--jobs", str(self.jobs)]
        if stage == "evaluate":
            return ["evaluate", "--pairs", str(self.pairs), "--out", out, "--jobs", str(self.jobs)]
        raise ValueError(f"unknown stage {stage!r}")


def run_pipeline(cfg: PipelineConfig, quiet: bool = True) -> dict:
    """Run every stage (errors propagate as :class:`~voxbalance.errors.VoxError`)
    and return the merged audit report."""
    parser = build_parser()
    fragments = []
    for stage in STAGES:
        if stage == "evaluate" and cfg.pairs is None:
            continue
        args = resolve_args(parser.parse_args(cfg.stage_argv(stage)))
        with contextlib.redirect_stdout(io.StringIO()) if quiet else contextlib.nullcontext():
            args.func(args)
        path = Path(cfg.output_dir) / stage / f"report_{stage}.json"
        fragments.append(json.loads(path.read_text(encoding="utf-8")))
    report = merge_reports(fragments)
    (Path(cfg.output_dir) / AUDIT_REPORT).write_text(dump_json(report), encoding="utf-8")
    return report
