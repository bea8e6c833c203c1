"""Write a deterministic synthetic corpus (harmonic voices + manifest.tsv).

    python3 scripts/make_synthetic_corpus.py OUT_DIR --male 460 --female 160 --unlabeled 380
"""

import argparse

from voxbalance.synth import make_eval_pairs, make_synthetic_corpus


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out_dir")
    p.add_argument("--male", type=int, default=46)
    p.add_argument("--female", type=int, default=16)
    p.add_argument("--unlabeled", type=int, default=38)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=1.0, help="seconds per clip")
    p.add_argument("--rate", type=int, default=16000)
    p.add_argument("--pairs", type=int, default=20,
                   help="also write pairs.tsv with this many utterances per stratum (0 to skip)")
    args = p.parse_args(argv)
    counts = {k: v for k, v in (("male", args.male), ("female", args.female),
                                ("unlabeled", args.unlabeled)) if v > 0}
    manifest = make_synthetic_corpus(args.out_dir, counts, args.seed, args.duration, args.rate)
    print(manifest)
    if args.pairs:
        pairs = manifest.parent / "pairs.tsv"
        pairs.write_text(make_eval_pairs({"male": 0.1, "female": 0.25}, args.pairs, args.seed),
                         encoding="utf-8")
        print(pairs)


if __name__ == "__main__":
    main()
