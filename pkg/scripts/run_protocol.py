"""Synthesize a dataset, extract features and print one summary row per classifier.

    python scripts/run_protocol.py --out /tmp/hg --starts 20
"""

import argparse
import time
from pathlib import Path

from handgeom import experiment, features, pipeline, synth

CLASSIFIERS = (
    "nn-mse",
    "nn-mad",
    "mlp-opc:30",
    "mlp-peruser:5",
    "mlp-ecoc:BCH(15,7)",
    "mlp-ecoc:BCH(31,6)",
    "mlp-ecoc:random:15:500",
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--persons", type=int, default=22)
    ap.add_argument("--jitter", type=float, default=1.0)
    ap.add_argument("--starts", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--classifiers", nargs="+", default=list(CLASSIFIERS))
    args = ap.parse_args()

    img_dir = args.out / "images"
    csv_path = args.out / "features.csv"
    if not csv_path.exists():
        synth.make_dataset(args.persons, 10, args.seed, args.jitter, out_dir=img_dir)
        table, rejects = pipeline.extract_directory(img_dir)
        features.write_feature_csv(table, csv_path)
        print(f"extracted {len(table.X)} vectors, {len(rejects)} rejected")
    table = features.read_feature_csv(csv_path)

    for name in args.classifiers:
        t0 = time.perf_counter()
        cfg = experiment.ExperimentConfig(classifier=name, epochs=args.epochs, starts=args.starts)
        res = experiment.run_experiment(table, cfg)
        line = experiment.stats_row(name, res)
        if res.committee is not None:
            line += f"\tcommittee ident%={100 * res.committee.identification:.2f}"
        print(f"{line}\t{time.perf_counter() - t0:.1f}s", flush=True)


if __name__ == "__main__":
    main()
