"""Identification rate, DET curves and minimum detection cost."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyScores, IncompleteTensor
from .imaging import _atomic_write


@dataclass(frozen=True, eq=False)
class SimilarityTensor:
    """s[i, j, k]: similarity of test trial k of person i against the model of person j."""

    s: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=np.float64)
        if s.ndim != 3 or s.shape[0] != s.shape[1]:
            raise ValueError(f"tensor must be N x N x trials, got {s.shape}")
        if not np.isfinite(s).all():
            raise ValueError("tensor entries must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @property
    def persons(self) -> int:
        return self.s.shape[0]

    @property
    def trials(self) -> int:
        return self.s.shape[2]


def build_tensor(sim: np.ndarray, probe_persons, probe_acqs) -> SimilarityTensor:
    """Arrange per-probe similarity rows (0-based persons) into the N x N x trials tensor."""
    sim = np.asarray(sim, dtype=np.float64)
    persons = np.asarray(probe_persons)
    acqs = np.asarray(probe_acqs)
    n = sim.shape[1]
    per = [np.flatnonzero(persons == i) for i in range(n)]
    trials = {len(p) for p in per}
    if len(trials) != 1 or 0 in trials:
        raise IncompleteTensor(f"unequal or missing test trials per person: {sorted(len(p) for p in per)}")
    out = np.empty((n, n, trials.pop()))
    for i, idx in enumerate(per):
        idx = idx[np.argsort(acqs[idx], kind="stable")]
        out[i] = sim[idx].T
    return SimilarityTensor(out)


def identification_rate(t: SimilarityTensor) -> float:
    """Fraction of trials whose own-model similarity beats every other model strictly."""
    s = t.s
    n = t.persons
    diag = s[np.arange(n), np.arange(n), :]               # (N, trials)
    others = s.copy()
    others[np.arange(n), np.arange(n), :] = -np.inf
    success = diag > others.max(axis=1)
    return float(success.sum()) / success.size


def split_scores(t: SimilarityTensor) -> tuple[np.ndarray, np.ndarray]:
    """Genuine (diagonal) and impostor (off-diagonal) scores."""
    n = t.persons
    eye = np.eye(n, dtype=bool)
    return t.s[eye].ravel(), t.s[~eye].ravel()


@dataclass(frozen=True, eq=False)
class DetCurve:
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray

    def rows(self):
        return zip(self.thresholds, self.far, self.frr)


def det_curve(genuine, impostor) -> DetCurve:
    """FAR/FRR at every observed score plus -inf/+inf; accept iff score >= threshold."""
    g = np.sort(np.asarray(genuine, dtype=np.float64).ravel())
    im = np.sort(np.asarray(impostor, dtype=np.float64).ravel())
    if not g.size or not im.size:
        raise EmptyScores("need at least one genuine and one impostor score")
    thr = np.concatenate([[-np.inf], np.unique(np.concatenate([g, im])), [np.inf]])
    # counts first so rates are exact fractions
    far = (im.size - np.searchsorted(im, thr, side="left")) / im.size
    frr = np.searchsorted(g, thr, side="left") / g.size
    if (np.diff(far) > 0).any() or (np.diff(frr) < 0).any():
        raise AssertionError("DET curve is not monotone")
    return DetCurve(thr, far, frr)


def dcf(far, frr, c_miss: float = 1.0, c_fa: float = 1.0, p_true: float = 0.5):
    return c_miss * np.asarray(frr) * p_true + c_fa * np.asarray(far) * (1.0 - p_true)


def min_dcf(genuine, impostor, c_miss: float = 1.0, c_fa: float = 1.0, p_true: float = 0.5) -> tuple[float, float]:
    """Minimum detection cost over the DET thresholds; ties go to the lowest threshold."""
    if not (0.0 < p_true < 1.0):
        raise ValueError("p_true must lie in (0, 1)")
    det = det_curve(genuine, impostor)
    cost = dcf(det.far, det.frr, c_miss, c_fa, p_true)
    i = int(np.argmin(cost))
    return float(cost[i]), float(det.thresholds[i])


def run_statistics(values) -> dict:
    """mean, sample std (n-1) and both extremes of a metric over repeated runs."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if not v.size:
        raise ValueError("need at least one value")
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return {"mean": float(v.mean()), "std": sd, "max": float(v.max()), "min": float(v.min()), "n": int(v.size)}


# -- file formats -------------------------------------------------------------

def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def write_det_csv(det: DetCurve, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "far", "frr"])
    for t, a, r in det.rows():
        w.writerow([_fmt(t), _fmt(a), _fmt(r)])
    _atomic_write(Path(path), buf.getvalue().encode("ascii"))


def dcf_report(value: float, threshold: float, c_miss: float = 1.0, c_fa: float = 1.0, p_true: float = 0.5) -> str:
    return f"min_dcf={value:.6g} at threshold={threshold:.6g} (c_miss={c_miss:g},c_fa={c_fa:g},p_true={p_true:g})"


def write_score_dump(t: SimilarityTensor, path, person_ids=None, acq_ids=None) -> None:
    """Flattened tensor as probe_person,probe_acq,model_person,similarity (ids 1-based by default)."""
    n, _, k = t.s.shape
    pid = list(person_ids) if person_ids is not None else list(range(1, n + 1))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["probe_person", "probe_acq", "model_person", "similarity"])
    for i in range(n):
        acqs = acq_ids[i] if acq_ids is not None else range(1, k + 1)
        for kk, a in enumerate(acqs):
            for j in range(n):
                w.writerow([pid[i], a, pid[j], repr(float(t.s[i, j, kk]))])
    _atomic_write(Path(path), buf.getvalue().encode("ascii"))


def read_score_dump(path) -> SimilarityTensor:
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        rows = [(int(d["probe_person"]), int(d["probe_acq"]), int(d["model_person"]), float(d["similarity"]))
                for d in r]
    if not rows:
        raise EmptyScores(f"{path}: no scores")
    persons = sorted({r[0] for r in rows} | {r[2] for r in rows})
    pidx = {p: i for i, p in enumerate(persons)}
    acqs = {p: sorted({r[1] for r in rows if r[0] == p}) for p in persons}
    trials = {len(a) for a in acqs.values()}
    if len(trials) != 1:
        raise IncompleteTensor("persons have different numbers of trials")
    s = np.full((len(persons), len(persons), trials.pop()), np.nan)
    for pp, a, mp, v in rows:
        s[pidx[pp], pidx[mp], acqs[pp].index(a)] = v
    if np.isnan(s).any():
        raise IncompleteTensor("score dump does not cover every probe/model pair")
    return SimilarityTensor(s)
