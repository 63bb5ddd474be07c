"""Command-line entry point: synth, extract, train, eval, det.

Data errors exit 1 and print ``error=<Name> message=<text>`` on stderr;
argument errors exit 2 (argparse).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import classify, evaluation, experiment, features, imaging, pipeline, synth
from .errors import HandGeomError


def _classifier(value: str) -> str:
    try:
        experiment.parse_classifier(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return value


def _unit_interval(value: str) -> float:
    v = float(value)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"{value} is not in (0, 1)")
    return v


def _pipeline_cfg(args) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig(threshold=args.threshold_bin, sigma=args.sigma_log, invert=args.invert)


def _experiment_cfg(args) -> experiment.ExperimentConfig:
    return experiment.ExperimentConfig(
        classifier=args.classifier, epochs=args.epochs, gamma=args.gamma, starts=args.starts, seed=args.seed,
        p_true=args.ptrue, metric=args.metric, hidden=args.hidden, clamp=not args.no_clamp,
        train_acq=tuple(args.train), test_acq=tuple(args.test))


def cmd_synth(args) -> int:
    ds = synth.make_dataset(args.persons, args.acquisitions, args.seed, args.jitter, out_dir=args.out,
                            cfg=_pipeline_cfg(args))
    print(f"wrote {len(ds.images)} images to {args.out} (retried slots: {len(ds.retries)})")
    return 0


def cmd_extract(args) -> int:
    table, rejects = pipeline.extract_directory(args.dataset, _pipeline_cfg(args))
    for name, err, msg in rejects:
        print(f"rejected file={name} error={err} message={msg}")
    if not len(table.X):
        raise HandGeomError(f"no usable captures in {args.dataset}")
    features.write_feature_csv(table, args.out)
    print(f"extracted {len(table.X)} feature vectors, rejected {len(rejects)}; wrote {args.out}")
    return 0


def _fit_best(split: experiment.Split, cfg: experiment.ExperimentConfig) -> classify.GalleryModel:
    spec, base = cfg.spec, cfg.train_config()
    if spec.family == "nn":
        return experiment.fit_gallery(split, spec, base)
    fits = [experiment.fit_gallery(split, spec, replace(base, seed=base.seed + s)) for s in range(cfg.starts)]
    return min(fits, key=lambda g: g.info["objective"])


def cmd_train(args) -> int:
    cfg = _experiment_cfg(args)
    split = experiment.make_split(features.read_feature_csv(args.dataset), cfg)
    g = _fit_best(split, cfg)
    info = dict(g.info, classifier=cfg.classifier, person_ids=[int(p) for p in split.person_ids])
    g = replace(g, info=info)
    g.save(args.out)
    print(f"trained {cfg.classifier} on {len(split.X_train)} vectors; wrote {args.out}")
    return 0


def _model_tensor(g: classify.GalleryModel, table: features.FeatureTable, test_acq) -> evaluation.SimilarityTensor:
    te = table.selected().subset(test_acq)
    ids = g.info.get("person_ids") or sorted(set(int(p) for p in te.persons))
    pidx = {p: i for i, p in enumerate(ids)}
    unknown = sorted(set(int(p) for p in te.persons) - set(pidx))
    if unknown:
        raise HandGeomError(f"test persons {unknown} are not enrolled in the model")
    sim = classify.scores(g, te.X)
    return evaluation.build_tensor(sim, [pidx[int(p)] for p in te.persons], te.acquisitions)


def _report(t: evaluation.SimilarityTensor, p_true: float) -> tuple[float, float, float]:
    gen, imp = evaluation.split_scores(t)
    d, thr = evaluation.min_dcf(gen, imp, p_true=p_true)
    rate = evaluation.identification_rate(t)
    print(f"identification={rate:.6f} trials={gen.size + imp.size} genuine={gen.size} impostor={imp.size}")
    print(evaluation.dcf_report(d, thr, p_true=p_true))
    return rate, d, thr


def _tensor_for(args) -> evaluation.SimilarityTensor:
    if getattr(args, "scores", None) and not args.dataset:
        return evaluation.read_score_dump(args.scores)
    if not args.dataset:
        raise HandGeomError("--dataset (feature CSV) or --scores is required")
    table = features.read_feature_csv(args.dataset)
    if args.model:
        return _model_tensor(classify.GalleryModel.load(args.model), table, args.test)
    return experiment.run_experiment(table, _experiment_cfg(args)).tensor


def cmd_eval(args) -> int:
    if args.model or not args.dataset:
        t = _tensor_for(args)
        _report(t, args.ptrue)
    else:
        res = experiment.run_experiment(features.read_feature_csv(args.dataset), _experiment_cfg(args))
        t = res.tensor
        _report(t, args.ptrue)
        if len(res.runs) > 1:
            print(experiment.stats_row(args.classifier, res))
            if res.committee is not None:
                c = res.committee
                print(f"committee identification={c.identification:.6f} min_dcf={c.min_dcf:.6g}")
    if args.scores and args.dataset:
        evaluation.write_score_dump(t, args.scores)
    return 0


def cmd_det(args) -> int:
    t = _tensor_for(args)
    gen, imp = evaluation.split_scores(t)
    det = evaluation.det_curve(gen, imp)
    evaluation.write_det_csv(det, args.out)
    d, thr = evaluation.min_dcf(gen, imp, p_true=args.ptrue)
    print(evaluation.dcf_report(d, thr, p_true=args.ptrue))
    print(f"wrote {len(det.thresholds)} DET points to {args.out}")
    return 0


def _add_pipeline_flags(p) -> None:
    p.add_argument("--threshold-bin", type=_unit_interval, default=imaging.DEFAULT_THRESHOLD)
    p.add_argument("--sigma-log", type=float, default=imaging.DEFAULT_SIGMA)
    p.add_argument("--invert", action="store_true", help="hand is darker than the background")


def _add_model_flags(p) -> None:
    p.add_argument("--classifier", type=_classifier, default="nn-mad",
                   help="nn-mse | nn-mad | mlp-opc:H | mlp-peruser:H | mlp-ecoc:BCH(n,k)[:metric] "
                        "| mlp-ecoc:random:bits:iters[:metric]")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--gamma", type=float, default=None, help="performance ratio; default 1.0, or 0.9 at 50+ epochs")
    p.add_argument("--starts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ptrue", type=_unit_interval, default=0.5)
    p.add_argument("--metric", choices=("mse", "mad"), default="mse")
    p.add_argument("--hidden", type=int, default=40, help="hidden units for ECOC networks")
    p.add_argument("--no-clamp", action="store_true")
    p.add_argument("--train", type=int, nargs="+", default=[1, 2, 3, 4, 5], metavar="ACQ")
    p.add_argument("--test", type=int, nargs="+", default=[6, 7, 8, 9, 10], metavar="ACQ")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="handgeom", description="Hand-geometry recognition toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic image dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--persons", type=int, default=22)
    p.add_argument("--acquisitions", type=int, default=10)
    p.add_argument("--jitter", type=float, default=1.0)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="images -> feature CSV")
    p.add_argument("--dataset", required=True, help="directory of pNN_aNN.pgm/.bmp images")
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit a gallery model on the training acquisitions")
    p.add_argument("--dataset", required=True, help="feature CSV")
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="identification rate and min DCF on the test acquisitions")
    p.add_argument("--dataset", help="feature CSV")
    p.add_argument("--model", help="trained model file (skips training)")
    p.add_argument("--scores", help="score dump: written when --dataset is given, read otherwise")
    _add_model_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("det", help="write the DET curve as CSV")
    p.add_argument("--dataset", help="feature CSV")
    p.add_argument("--model")
    p.add_argument("--scores", help="read similarities from a score dump instead")
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_det)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HandGeomError as exc:
        print(f"error={exc.name} message={exc}", file=sys.stderr)
    except (ValueError, OSError) as exc:
        print(f"error={type(exc).__name__} message={exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
