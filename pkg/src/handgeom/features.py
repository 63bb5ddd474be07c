"""Geometric hand measurements, feature selection and [-1, 1] scaling."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import contour
from .errors import EmptyTrainingSet, SchemaMismatch, WrongSchema
from .imaging import _atomic_write

FULL13 = "FULL13"
SELECTED9 = "SELECTED9"
FEATURE_NAMES = (
    "thumb_length", "first_length", "middle_length", "ring_length", "little_length",
    "wrist_length", "thumb_base_width", "first_width", "middle_width", "ring_width",
    "little_width", "perimeter", "surface",
)
# 1-based feature numbers kept after deleting 1, 6, 7 and 13
SELECTED_FEATURES = (2, 3, 4, 5, 8, 9, 10, 11, 12)
_SELECT_IDX = np.array(SELECTED_FEATURES) - 1
_SIZES = {FULL13: 13, SELECTED9: 9}


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    schema: str = FULL13
    scaled: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).ravel()
        if self.schema not in _SIZES:
            raise WrongSchema(f"unknown schema {self.schema!r}")
        if v.size != _SIZES[self.schema]:
            raise WrongSchema(f"{self.schema} needs {_SIZES[self.schema]} values, got {v.size}")
        if not np.isfinite(v).all():
            raise ValueError("feature values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (self.schema == other.schema and self.scaled == other.scaled
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class ScalingParams:
    lo: np.ndarray
    hi: np.ndarray
    clamp: bool = True

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != hi.shape or (hi < lo).any():
            raise ValueError("scaling needs max >= min in every dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def to_json(self) -> dict:
        return {"min": self.lo.tolist(), "max": self.hi.tolist(), "clamp": self.clamp}

    @classmethod
    def from_json(cls, d: dict) -> "ScalingParams":
        return cls(np.array(d["min"], dtype=np.float64), np.array(d["max"], dtype=np.float64),
                   bool(d.get("clamp", True)))


def _mirror_point(pts: np.ndarray, tip: int, stop: int, dist: float, step: int) -> np.ndarray:
    """Walk from `tip` towards `stop` until the distance to the tip reaches `dist`."""
    n = len(pts)
    t = pts[tip].astype(np.float64)
    prev = t
    i = tip
    while i != stop:
        i = (i + step) % n
        q = pts[i].astype(np.float64)
        dq = np.hypot(*(q - t))
        if dq >= dist:
            dp = np.hypot(*(prev - t))
            f = (dist - dp) / (dq - dp) if dq > dp else 1.0
            return prev + f * (q - prev)
        prev = q
    return pts[stop].astype(np.float64)


def chord_width(pts: np.ndarray, centre: np.ndarray, direction: np.ndarray) -> float:
    """Length of the chord along `direction` through `centre`, clipped to the polygon."""
    p = pts.astype(np.float64)
    q = np.roll(p, -1, axis=0)
    e = q - p
    u = direction / np.hypot(*direction)
    denom = u[0] * e[:, 1] - u[1] * e[:, 0]
    ok = np.abs(denom) > 1e-12
    w = p - centre
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / denom
        s = (w[:, 0] * u[1] - w[:, 1] * u[0]) / denom
    hit = ok & (s >= 0.0) & (s < 1.0)
    t = t[hit]
    pos, neg = t[t > 0], t[t < 0]
    if not pos.size or not neg.size:
        return 0.0
    return float(pos.min() - neg.max())


def measure_points(pts: np.ndarray, lm: contour.Landmarks, perim: float, area: float) -> np.ndarray:
    """The 13 measurements for a closed polygon with known landmark indices."""
    P = pts.astype(np.float64)
    tips = [P[i] for i in lm.tips]
    val = [P[i] for i in lm.valleys]
    w_thumb, w_little = P[lm.wrist[0]], P[lm.wrist[1]]

    bases = []
    d0 = np.hypot(*(tips[0] - val[0]))
    bases.append((_mirror_point(pts, lm.tips[0], lm.wrist[0], d0, -1), val[0]))
    for k in range(1, 4):
        bases.append((val[k - 1], val[k]))
    d4 = np.hypot(*(tips[4] - val[3]))
    bases.append((val[3], _mirror_point(pts, lm.tips[4], lm.wrist[1], d4, +1)))

    lengths, widths = [], []
    for k in range(5):
        mid = 0.5 * (bases[k][0] + bases[k][1])
        axis = tips[k] - mid
        lengths.append(float(np.hypot(*axis)))
        if k:
            centre = 0.5 * (mid + tips[k])
            widths.append(chord_width(pts, centre, np.array([-axis[1], axis[0]])))
    wrist = float(np.hypot(*(w_thumb - w_little)))
    thumb_base = float(np.hypot(*(val[0] - w_thumb)))
    return np.array(lengths + [wrist, thumb_base] + widths + [perim, area], dtype=np.float64)


def measure(chain: contour.ChainCode, lm: contour.Landmarks) -> FeatureVector:
    vals = measure_points(chain.points(), lm, contour.perimeter(chain), contour.enclosed_area(chain))
    return FeatureVector(vals, FULL13)


def select(fv: FeatureVector) -> FeatureVector:
    if fv.schema != FULL13:
        raise WrongSchema(f"select expects {FULL13}, got {fv.schema}")
    return FeatureVector(fv.values[_SELECT_IDX], SELECTED9, fv.scaled)


def fit_scaling(train, clamp: bool = True) -> ScalingParams:
    rows = [fv.values if isinstance(fv, FeatureVector) else np.asarray(fv, dtype=np.float64) for fv in train]
    if not rows:
        raise EmptyTrainingSet("cannot fit scaling on an empty training set")
    X = np.vstack(rows)
    return ScalingParams(X.min(axis=0), X.max(axis=0), clamp)


def scale_array(X: np.ndarray, params: ScalingParams) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != params.lo.size:
        raise SchemaMismatch(f"{X.shape[-1]} features but scaling has {params.lo.size}")
    span = params.hi - params.lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, 2.0 * (X - params.lo) / safe - 1.0, 0.0)
    if params.clamp:
        out = np.clip(out, -1.0, 1.0)
    return out


def scale(fv: FeatureVector, params: ScalingParams) -> FeatureVector:
    if fv.values.size != params.lo.size:
        raise SchemaMismatch(f"{fv.schema} vector does not match {params.lo.size}-d scaling")
    return FeatureVector(scale_array(fv.values, params), fv.schema, scaled=True)


# -- feature store ----------------------------------------------------------

@dataclass
class FeatureTable:
    """Rows of (person, acquisition, values); persons and acquisitions are 1-based."""

    persons: np.ndarray
    acquisitions: np.ndarray
    X: np.ndarray

    @property
    def schema(self) -> str:
        return FULL13 if self.X.shape[1] == 13 else SELECTED9

    def selected(self) -> "FeatureTable":
        if self.schema == SELECTED9:
            return self
        return FeatureTable(self.persons, self.acquisitions, self.X[:, _SELECT_IDX])

    def subset(self, acquisitions) -> "FeatureTable":
        keep = np.isin(self.acquisitions, list(acquisitions))
        return FeatureTable(self.persons[keep], self.acquisitions[keep], self.X[keep])


def write_feature_csv(table: FeatureTable, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["person", "acquisition"] + [f"f{i + 1}" for i in range(table.X.shape[1])])
    for p, a, row in zip(table.persons, table.acquisitions, table.X):
        w.writerow([int(p), int(a)] + [repr(float(v)) for v in row])
    _atomic_write(Path(path), buf.getvalue().encode("ascii"))


def read_feature_csv(path) -> FeatureTable:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[:2] != ["person", "acquisition"] or len(header) - 2 not in (9, 13):
            raise WrongSchema(f"{path}: unexpected header {header}")
        rows = [row for row in r if row]
    if not rows:
        raise EmptyTrainingSet(f"{path}: no feature rows")
    persons = np.array([int(row[0]) for row in rows])
    acqs = np.array([int(row[1]) for row in rows])
    X = np.array([[float(v) for v in row[2:]] for row in rows], dtype=np.float64)
    return FeatureTable(persons, acqs, X)
