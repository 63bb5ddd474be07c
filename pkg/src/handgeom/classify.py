"""Gallery models that turn a scaled probe into one similarity per enrolled person.

Higher similarity always means "more alike": nearest-neighbour distances are
negated so a single evaluation harness handles every classifier.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import codes, mlp
from .errors import DimensionMismatch, EmptyGallery, KindMismatch, UnknownClaim
from .features import ScalingParams, scale_array
from .imaging import _atomic_write


class GalleryKind(str, enum.Enum):
    NN = "nn"
    MLP_MONOLITHIC = "mlp_monolithic"
    MLP_PER_USER = "mlp_per_user"


def nn_distance(x, y, metric: str = "mse") -> float:
    """Sum of squared (mse) or absolute (mad) differences."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    d = x - y
    if metric == "mse":
        return float(np.sum(d * d))
    if metric == "mad":
        return float(np.sum(np.abs(d)))
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True, eq=False)
class GalleryModel:
    kind: GalleryKind
    scaling: ScalingParams
    metric: str = "mse"
    templates: np.ndarray | None = None      # (persons, per_person, dims), already scaled
    models: tuple[mlp.MlpModel, ...] = ()
    codebook: codes.Codebook | None = None
    info: dict = field(default_factory=dict)

    @property
    def persons(self) -> int:
        if self.kind is GalleryKind.NN:
            return 0 if self.templates is None else self.templates.shape[0]
        if self.kind is GalleryKind.MLP_PER_USER:
            return len(self.models)
        return self.codebook.classes

    def to_json(self) -> dict:
        d = {"kind": self.kind.value, "metric": self.metric, "scaling": self.scaling.to_json(), "info": self.info}
        if self.templates is not None:
            d["templates"] = self.templates.tolist()
        if self.models:
            d["models"] = [m.to_json() for m in self.models]
        if self.codebook is not None:
            d["codebook"] = self.codebook.to_text()
            d["codebook_source"] = self.codebook.source
        return d

    @classmethod
    def from_json(cls, d: dict) -> "GalleryModel":
        book = None
        if "codebook" in d:
            book = codes.Codebook.from_text(d["codebook"], d.get("codebook_source", ""))
        templates = np.array(d["templates"], dtype=np.float64) if "templates" in d else None
        return cls(GalleryKind(d["kind"]), ScalingParams.from_json(d["scaling"]), d.get("metric", "mse"),
                   templates, tuple(mlp.MlpModel.from_json(m) for m in d.get("models", [])), book,
                   d.get("info", {}))

    def save(self, path) -> None:
        _atomic_write(Path(path), json.dumps(self.to_json(), sort_keys=True).encode("ascii"))

    @classmethod
    def load(cls, path) -> "GalleryModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def _group(X: np.ndarray, labels: np.ndarray) -> np.ndarray:
    persons = np.unique(labels)
    if not np.array_equal(persons, np.arange(persons.size)):
        raise ValueError("labels must be 0..persons-1")
    counts = np.bincount(labels)
    if (counts != counts[0]).any():
        raise ValueError("every person needs the same number of training vectors")
    order = np.argsort(labels, kind="stable")
    return X[order].reshape(persons.size, counts[0], X.shape[1])


def fit_nn(X_scaled, labels, scaling: ScalingParams, metric: str = "mse") -> GalleryModel:
    """Store every scaled training vector as a template of its person."""
    X = np.asarray(X_scaled, dtype=np.float64)
    if not X.size:
        raise EmptyGallery("no templates")
    return GalleryModel(GalleryKind.NN, scaling, metric, templates=_group(X, np.asarray(labels)))


def fit_mlp_monolithic(X_scaled, labels, scaling: ScalingParams, book: codes.Codebook, cfg: mlp.TrainConfig,
                       hidden: int, metric: str = "mse") -> tuple[GalleryModel, mlp.TrainResult]:
    T = mlp.build_targets(labels, book)
    res = mlp.train_lm(X_scaled, T, cfg, hidden=hidden, codebook_ref=book.ref())
    g = GalleryModel(GalleryKind.MLP_MONOLITHIC, scaling, metric, models=(res.model,), codebook=book,
                     info={"objective": res.objective, "seed": cfg.seed})
    return g, res


def fit_mlp_per_user(X_scaled, labels, scaling: ScalingParams, cfg: mlp.TrainConfig,
                     hidden: int) -> tuple[GalleryModel, list[mlp.TrainResult]]:
    """One single-output network per person: +1 for the person, -1 for everyone else."""
    labels = np.asarray(labels)
    persons = int(labels.max()) + 1
    results = []
    for p in range(persons):
        T = np.where(labels == p, 1.0, -1.0)[:, None]
        results.append(mlp.train_lm(X_scaled, T, replace(cfg, seed=cfg.seed * 1000 + p), hidden=hidden, codebook_ref=f"per_user:{p}"))
    g = GalleryModel(GalleryKind.MLP_PER_USER, scaling, models=tuple(r.model for r in results),
                     info={"objective": float(np.mean([r.objective for r in results])), "seed": cfg.seed})
    return g, results


def with_models(g: GalleryModel, models) -> GalleryModel:
    """Same gallery, different (e.g. committee) member list."""
    return GalleryModel(g.kind, g.scaling, g.metric, g.templates, tuple(models), g.codebook, dict(g.info))


def score_nn(g: GalleryModel, probes) -> np.ndarray:
    """Negated distance to each person's nearest template; shape (..., persons)."""
    if g.kind is not GalleryKind.NN:
        raise KindMismatch(f"score_nn on a {g.kind.value} gallery")
    if g.templates is None or not g.templates.size:
        raise EmptyGallery("gallery has no templates")
    P = np.asarray(probes, dtype=np.float64)
    if P.shape[-1] != g.templates.shape[-1]:
        raise DimensionMismatch(f"probe has {P.shape[-1]} dims, templates {g.templates.shape[-1]}")
    d = P[..., None, None, :] - g.templates
    dist = (d * d).sum(axis=-1) if g.metric == "mse" else np.abs(d).sum(axis=-1)
    return -dist.min(axis=-1)


def score_mlp(g: GalleryModel, probes) -> np.ndarray:
    P = np.asarray(probes, dtype=np.float64)
    if g.kind is GalleryKind.MLP_PER_USER:
        return np.concatenate([mlp.forward(m, P) for m in g.models], axis=-1)
    if g.kind is not GalleryKind.MLP_MONOLITHIC:
        raise KindMismatch(f"score_mlp on a {g.kind.value} gallery")
    out = mlp.committee(g.models, P)
    if g.codebook.kind is codes.CodebookKind.ONE_PER_CLASS:
        return out
    return 1.0 - codes.decode_distances(out, g.codebook, g.metric)


def scores(g: GalleryModel, probes, prescaled: bool = False) -> np.ndarray:
    """Similarity of every probe to every person; probes are raw features unless prescaled."""
    P = np.asarray(probes, dtype=np.float64)
    if not prescaled:
        P = scale_array(P, g.scaling)
    return score_nn(g, P) if g.kind is GalleryKind.NN else score_mlp(g, P)


def identify(g: GalleryModel, probe, prescaled: bool = False) -> int:
    return int(np.argmax(scores(g, probe, prescaled)))


def verify(g: GalleryModel, probe, claimed: int, threshold: float, prescaled: bool = False) -> tuple[bool, float]:
    if not (0 <= claimed < g.persons):
        raise UnknownClaim(f"person {claimed} is not enrolled")
    s = float(scores(g, probe, prescaled)[claimed])
    return s >= threshold, s
