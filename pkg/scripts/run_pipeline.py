"""Run inspect, classify, balance and evaluate, then merge the audit report.

    python3 scripts/run_pipeline.py --manifest corpus/manifest.tsv --audio-root corpus \
        --out audit --seed 7 [--pairs corpus/pairs.tsv] [--strategy downsample] [--jobs 4]
"""

import argparse
import sys
from pathlib import Path

from voxbalance.errors import VoxError
from voxbalance.pipeline import AUDIT_REPORT, PipelineConfig, run_pipeline
from voxbalance.pitch import GenderBands


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--manifest", required=True)
    p.add_argument("--audio-root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--pairs")
    p.add_argument("--strategy", default="upsample")
    p.add_argument("--bands", default="male=85:155,female=165:255")
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args(argv)
    cfg = PipelineConfig(Path(args.manifest), Path(args.audio_root), Path(args.out), args.seed,
                         args.strategy, bands=GenderBands.parse(args.bands),
                         pairs=Path(args.pairs) if args.pairs else None, jobs=args.jobs)
    try:
        run_pipeline(cfg)
    except VoxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    print(Path(args.out) / AUDIT_REPORT)
    return 0


if __name__ == "__main__":
    sys.exit(main())
