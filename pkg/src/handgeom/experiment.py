"""Train/test protocol shared by the CLI, the scripts and the acceptance suite."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import classify, codes, evaluation, features, mlp

_BCH = re.compile(r"^mlp-ecoc:bch\((\d+),(\d+)\)(?::(mse|mad))?$", re.I)
_RAND = re.compile(r"^mlp-ecoc:random:(\d+):(\d+)(?::(mse|mad))?$", re.I)
_HID = re.compile(r"^mlp-(opc|peruser):(\d+)$", re.I)


@dataclass(frozen=True)
class ClassifierSpec:
    family: str                 # nn | opc | peruser | ecoc
    metric: str = "mse"
    hidden: int = 30
    code: tuple = ()            # ("bch", n, k) or ("random", bits, iterations)

    def codebook(self, classes: int, seed: int = 0) -> codes.Codebook | None:
        if self.family == "opc":
            return codes.one_per_class(classes)
        if self.family == "ecoc":
            if self.code[0] == "bch":
                return codes.ecoc_from_bch(codes.bch_new(self.code[1], self.code[2]), classes)
            book, _, _ = codes.random_ecoc(classes, self.code[1], self.code[2], seed=seed)
            return book
        return None


def parse_classifier(spec: str, metric: str = "mse", hidden: int = 40) -> ClassifierSpec:
    """nn-mse | nn-mad | mlp-opc:H | mlp-peruser:H | mlp-ecoc:BCH(n,k):metric | mlp-ecoc:random:bits:iters"""
    s = spec.strip().replace(" ", "")
    low = s.lower()
    if low in ("nn-mse", "nn-mad"):
        return ClassifierSpec("nn", low[3:])
    m = _HID.match(s)
    if m:
        return ClassifierSpec(m.group(1).lower(), metric, int(m.group(2)))
    m = _BCH.match(s)
    if m:
        return ClassifierSpec("ecoc", (m.group(3) or metric).lower(), hidden, ("bch", int(m.group(1)), int(m.group(2))))
    m = _RAND.match(s)
    if m:
        return ClassifierSpec("ecoc", (m.group(3) or metric).lower(), hidden, ("random", int(m.group(1)), int(m.group(2))))
    raise ValueError(f"cannot parse classifier spec {spec!r}")


def default_gamma(epochs: int) -> float:
    """Regularized objective (gamma 0.9) for the 50-epoch setting, plain MSE otherwise."""
    return 0.9 if epochs >= 50 else 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    classifier: str = "nn-mad"
    train_acq: tuple[int, ...] = (1, 2, 3, 4, 5)
    test_acq: tuple[int, ...] = (6, 7, 8, 9, 10)
    epochs: int = 10
    gamma: float | None = None
    starts: int = 1
    seed: int = 0
    p_true: float = 0.5
    metric: str = "mse"
    hidden: int = 40
    clamp: bool = True

    def __post_init__(self):
        if set(self.train_acq) & set(self.test_acq):
            raise ValueError("train and test acquisitions overlap")
        parse_classifier(self.classifier, self.metric, self.hidden)

    @property
    def spec(self) -> ClassifierSpec:
        return parse_classifier(self.classifier, self.metric, self.hidden)

    def train_config(self) -> mlp.TrainConfig:
        g = default_gamma(self.epochs) if self.gamma is None else self.gamma
        return mlp.TrainConfig(epochs=self.epochs, gamma=g, seed=self.seed)


@dataclass
class Split:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    acq_test: np.ndarray
    scaling: features.ScalingParams
    person_ids: np.ndarray


def make_split(table: features.FeatureTable, cfg: ExperimentConfig) -> Split:
    t = table.selected()
    ids = np.unique(t.persons)
    pidx = {p: i for i, p in enumerate(ids)}
    tr = t.subset(cfg.train_acq)
    te = t.subset(cfg.test_acq)
    if not len(tr.X) or not len(te.X):
        raise ValueError("train or test split is empty")
    scaling = features.fit_scaling(list(tr.X), clamp=cfg.clamp)
    lab = lambda arr: np.array([pidx[p] for p in arr])  # noqa: E731
    return Split(features.scale_array(tr.X, scaling), lab(tr.persons), features.scale_array(te.X, scaling),
                 lab(te.persons), te.acquisitions, scaling, ids)


@dataclass
class RunMetrics:
    identification: float
    min_dcf: float
    threshold: float
    objective: float = float("nan")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[RunMetrics]
    best: classify.GalleryModel
    best_index: int
    tensor: evaluation.SimilarityTensor
    committee: RunMetrics | None = None
    split: Split | None = field(default=None, repr=False)

    def identification_stats(self) -> dict:
        return evaluation.run_statistics([r.identification for r in self.runs])

    def dcf_stats(self) -> dict:
        return evaluation.run_statistics([r.min_dcf for r in self.runs])


def evaluate_gallery(g: classify.GalleryModel, split: Split, p_true: float = 0.5):
    sim = classify.scores(g, split.X_test, prescaled=True)
    tensor = evaluation.build_tensor(sim, split.y_test, split.acq_test)
    gen, imp = evaluation.split_scores(tensor)
    d, thr = evaluation.min_dcf(gen, imp, p_true=p_true)
    return RunMetrics(evaluation.identification_rate(tensor), d, thr, float(g.info.get("objective", np.nan))), tensor


def fit_gallery(split: Split, spec: ClassifierSpec, tcfg: mlp.TrainConfig) -> classify.GalleryModel:
    persons = split.person_ids.size
    if spec.family == "nn":
        return classify.fit_nn(split.X_train, split.y_train, split.scaling, spec.metric)
    if spec.family == "peruser":
        g, _ = classify.fit_mlp_per_user(split.X_train, split.y_train, split.scaling, tcfg, spec.hidden)
        return g
    book = spec.codebook(persons, seed=tcfg.seed)
    g, _ = classify.fit_mlp_monolithic(split.X_train, split.y_train, split.scaling, book, tcfg, spec.hidden,
                                       spec.metric)
    return g


def run_experiment(table: features.FeatureTable, cfg: ExperimentConfig) -> ExperimentResult:
    """Fit on the train acquisitions, score the test ones, repeat over `starts` seeds for MLPs."""
    split = make_split(table, cfg)
    spec = cfg.spec
    base = cfg.train_config()
    if spec.family == "nn":
        g = fit_gallery(split, spec, base)
        m, tensor = evaluate_gallery(g, split, cfg.p_true)
        return ExperimentResult(cfg, [m], g, 0, tensor, split=split)

    galleries, runs, tensors = [], [], []
    for s in range(cfg.starts):
        g = fit_gallery(split, spec, replace(base, seed=base.seed + s))
        m, t = evaluate_gallery(g, split, cfg.p_true)
        galleries.append(g)
        runs.append(m)
        tensors.append(t)
    best = int(np.argmin([r.objective for r in runs]))
    comm = None
    if spec.family != "peruser" and cfg.starts > 1:
        members = [mm for g in galleries for mm in g.models]
        cg = classify.with_models(galleries[0], members)
        comm, _ = evaluate_gallery(cg, split, cfg.p_true)
    return ExperimentResult(cfg, runs, galleries[best], best, tensors[best], comm, split)


def stats_row(label: str, res: ExperimentResult) -> str:
    """One summary line: identification mean/std/max and min-DCF mean/std/min, in percent."""
    a, b = res.identification_stats(), res.dcf_stats()
    return (f"{label}\tident% mean={100 * a['mean']:.2f} std={100 * a['std']:.2f} max={100 * a['max']:.2f}"
            f"\tminDCF% mean={100 * b['mean']:.2f} std={100 * b['std']:.2f} min={100 * b['min']:.2f}"
            f"\t(n={a['n']}, p_true={res.config.p_true:g})")
