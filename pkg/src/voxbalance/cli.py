"""Command-line entry point: ``voxbalance inspect|classify|augment|balance|evaluate``.

Exit codes: 0 success, 1 internal error, 2 input/schema/IO error,
3 infeasible or degenerate request. Every flag may also be given in a JSON
config file (``--config``), keyed by the flag name without dashes; flags on
the command line win. Environment variables are never consulted.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .audio_io import ENCODINGS, PCM16, load_wav, save_wav
from .augment import AugmentSpec
from .balance import BalanceStrategy, execute_balance, plan_balance
from .corpus import FEMALE, GENDER, GENDER_ACCENT, MALE, corpus_stats, read_manifest
from .errors import InputError, InvalidConfig, VoxError
from .metrics import group_metrics, parse_pairs, reduce_scores, score_pair
from .pitch import BandLabel, GenderBands, PitchConfig, classify_clip, evaluate_classifier
from .report import build_report, dump_json

log = logging.getLogger("voxbalance")

DEFAULTS = {
    "audio_root": None,
    "out": None,
    "seed": None,
    "strategy": "upsample",
    "by": "gender",
    "include_unlabeled": False,
    "jobs": 1,
    "strict": False,
    "bands": "male=85:155,female=165:255",
    "f0_min": 60.0,
    "f0_max": 400.0,
    "frame_ms": 40.0,
    "hop_ms": 10.0,
    "strip_punctuation": False,
    "encoding": PCM16,
}
_BY = {"gender": GENDER, "gender_accent": GENDER_ACCENT}


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise InvalidConfig(f"--{name.replace('_', '-')} is required")


def _out_dir(args) -> Path | None:
    return Path(args.out) if args.out else None


def _pitch_config(args) -> PitchConfig:
    return PitchConfig(f0_min=float(args.f0_min), f0_max=float(args.f0_max),
                       frame_ms=float(args.frame_ms), hop_ms=float(args.hop_ms))


# -- inspect -----------------------------------------------------------------

def cmd_inspect(args) -> int:
    _require(args, "manifest")
    entries = read_manifest(args.manifest)
    stats = corpus_stats(entries, _BY[args.by])
    text = dump_json(stats.to_dict())
    sys.stdout.write(text)
    out = _out_dir(args)
    if out:
        _write(out / "stats.json", text)
        report = build_report("inspect", {"manifest": Path(args.manifest).name, "by": args.by},
                              corpus_before=stats.to_dict())
        _write(out / "report_inspect.json", dump_json(report))
    return 0


# -- classify ----------------------------------------------------------------

def _classify_one(task):
    path, pitch_cfg, bands = task
    try:
        label, median = classify_clip(load_wav(path), pitch_cfg, bands)
        return median, label.value, ""
    except (OSError, VoxError) as exc:
        return None, "", str(exc).replace(",", ";").replace("\n", " ")


def cmd_classify(args) -> int:
    _require(args, "manifest", "audio_root", "out")
    entries = read_manifest(args.manifest)
    cfg, bands = _pitch_config(args), GenderBands.parse(args.bands)
    tasks = [(str(Path(args.audio_root) / e.clip_path), cfg, bands) for e in entries]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_classify_one, tasks, chunksize=max(1, len(tasks) // (4 * args.jobs))))
    else:
        results = [_classify_one(t) for t in tasks]

    rows = ["path,median_f0_hz,label,true_gender,error"]
    labelled = []
    n_errors = 0
    for entry, (median, label, err) in zip(entries, results):
        if err:
            n_errors += 1
            log.warning("%s: %s", entry.clip_path, err)
            if args.strict:
                raise InputError(f"{entry.clip_path}: {err}")
        f0 = "" if median is None else f"{median:.3f}"
        rows.append(f"{entry.clip_path},{f0},{label},{entry.gender},{err}")
        if not err and entry.gender in (MALE, FEMALE):
            labelled.append((entry.gender, BandLabel(label)))

    out = Path(args.out)
    _write(out / "classification.csv", "\n".join(rows) + "\n")
    config = {"manifest": Path(args.manifest).name, "bands": bands.to_dict(),
              "f0_min": cfg.f0_min, "f0_max": cfg.f0_max,
              "frame_ms": cfg.frame_ms, "hop_ms": cfg.hop_ms}
    if labelled:
        accuracy = evaluate_classifier(labelled).to_dict()
        _write(out / "accuracy.json", dump_json(accuracy))
        report = build_report("classify", config, classifier=accuracy)
        sys.stdout.write(dump_json(accuracy))
    else:
        report = build_report("classify", config)
    _write(out / "report_classify.json", dump_json(report))
    if n_errors:
        log.warning("%d of %d clips could not be classified", n_errors, len(entries))
    return 0


# -- augment -----------------------------------------------------------------

def cmd_augment(args) -> int:
    _require(args, "input", "output")
    if args.spec:
        spec = AugmentSpec.from_json(args.spec)
    else:
        _require(args, "op", "seed")
        params = {}
        for item in args.param or []:
            key, _, value = item.partition("=")
            try:
                params[key.strip()] = float(value)
            except ValueError as exc:
                raise InvalidConfig(f"bad --param {item!r}") from exc
        spec = AugmentSpec(args.op, params, int(args.seed))
    clip = spec.apply(load_wav(args.input))
    save_wav(args.output, clip, args.encoding)
    sys.stdout.write(dump_json({"output": Path(args.output).name, "augment_spec": spec.to_dict(),
                                "duration": clip.duration}))
    return 0


# -- balance -----------------------------------------------------------------

def cmd_balance(args) -> int:
    _require(args, "manifest", "audio_root", "out", "seed")
    try:
        seed = int(args.seed)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"--seed must be an integer, got {args.seed!r}") from exc
    strategy = BalanceStrategy.parse(args.strategy, bool(args.include_unlabeled), _BY[args.by])
    entries = read_manifest(args.manifest, args.audio_root, jobs=args.jobs)
    before = corpus_stats(entries, strategy.by)
    plan = plan_balance(entries, strategy, seed, before)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    balanced = execute_balance(plan, entries, args.audio_root, out, jobs=args.jobs, encoding=args.encoding)
    after = corpus_stats(balanced, strategy.by)

    _write(out / "plan.json", plan.to_json())
    _write(out / "stats_before.json", dump_json(before.to_dict()))
    _write(out / "stats_after.json", dump_json(after.to_dict()))
    summary = {"strategy": strategy.to_dict(), "seed": plan.seed,
               "target_counts": plan.target_counts(), "duplications": plan.n_duplications}
    report = build_report("balance", {"manifest": Path(args.manifest).name, "seed": plan.seed,
                                      "strategy": strategy.to_dict()},
                          corpus_before=before.to_dict(), corpus_after=after.to_dict(), balance=summary)
    _write(out / "report_balance.json", dump_json(report))
    sys.stdout.write(dump_json(after.to_dict()))
    return 0


# -- evaluate ----------------------------------------------------------------

def _score(task):
    pair, strip = task
    return score_pair(pair, strip)


def cmd_evaluate(args) -> int:
    _require(args, "pairs")
    pairs = parse_pairs(Path(args.pairs).read_text(encoding="utf-8"))
    strata = args.strata.split(",") if args.strata else None
    strip = bool(args.strip_punctuation)
    if args.jobs > 1 and len(pairs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            scores = list(pool.map(_score, [(p, strip) for p in pairs],
                                   chunksize=max(1, len(pairs) // (4 * args.jobs))))
        metrics = reduce_scores(scores, strata)
    else:
        metrics = group_metrics(pairs, strata, strip)
    text = dump_json(metrics.to_dict())
    sys.stdout.write(text)
    out = _out_dir(args)
    if out:
        _write(out / "group_metrics.json", text)
        _write(out / "group_metrics.csv", metrics.to_csv())
        report = build_report("evaluate", {"pairs": Path(args.pairs).name, "strip_punctuation": strip},
                              group_metrics=metrics.to_dict())
        _write(out / "report_evaluate.json", dump_json(report))
    return 0


# -- argument handling -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voxbalance", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"voxbalance {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *flags):
        p.add_argument("--config", help="JSON file with flag values")
        p.add_argument("-v", "--verbose", action="store_true", default=None)
        for flag in flags:
            if flag in ("strict", "include-unlabeled", "strip-punctuation"):
                p.add_argument(f"--{flag}", action="store_true", default=None)
            elif flag in ("jobs",):
                p.add_argument(f"--{flag}", type=int)
            elif flag in ("f0-min", "f0-max", "frame-ms", "hop-ms"):
                p.add_argument(f"--{flag}", type=float)
            elif flag == "by":
                p.add_argument("--by", choices=sorted(_BY))
            elif flag == "encoding":
                p.add_argument("--encoding", choices=ENCODINGS)
            else:
                p.add_argument(f"--{flag}")
        return p

    common(sub.add_parser("inspect", help="print corpus stratum statistics"),
           "manifest", "audio-root", "out", "by").set_defaults(func=cmd_inspect)
    common(sub.add_parser("classify", help="pitch-band gender classification"),
           "manifest", "audio-root", "out", "bands", "f0-min", "f0-max", "frame-ms", "hop-ms", "jobs",
           "strict").set_defaults(func=cmd_classify)
    p = common(sub.add_parser("augment", help="apply one augmentation to a WAV file"),
               "input", "output", "spec", "op", "seed", "encoding")
    p.add_argument("--param", action="append", help="op parameter as key=value (repeatable)")
    p.set_defaults(func=cmd_augment)
    common(sub.add_parser("balance", help="balance a corpus by stratum"),
           "manifest", "audio-root", "out", "seed", "strategy", "by", "include-unlabeled",
           "jobs", "encoding").set_defaults(func=cmd_balance)
    common(sub.add_parser("evaluate", help="per-stratum WER/CER from a pairs TSV"),
           "pairs", "out", "strata", "strip-punctuation", "jobs").set_defaults(func=cmd_evaluate)
    return parser


def resolve_args(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from ``--config`` and then from :data:`DEFAULTS`."""
    config = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise InvalidConfig("config file must hold a JSON object")
        config = {k.replace("-", "_"): v for k, v in config.items()}
    for key, value in vars(args).items():
        if value is None:
            setattr(args, key, config.get(key, DEFAULTS.get(key)))
    if getattr(args, "jobs", 1) < 1:
        raise InvalidConfig("--jobs must be >= 1")
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = resolve_args(args)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s", stream=sys.stderr)
        return args.func(args)
    except VoxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: io-error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
