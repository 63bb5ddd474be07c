"""Parametric synthetic hands with closed-form ground truth.

A hand is a forearm rectangle entering from the top border, a rounded-rectangle
palm and five capsule fingers hanging from the palm's lower edge, pointing
towards +y. The thumb sits on the +x side so that it comes first on a
clockwise trace starting at the wrist.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon, box
from shapely.geometry.polygon import orient

from . import contour, features, imaging
from .errors import GenerationExhausted, HandGeomError, InvalidParams
from .pipeline import PipelineConfig, extract

CANVAS = (850, 945)  # width, height: 216 x 240 mm at 100 dpi
BACKGROUND = 0.02
FOREGROUND = 0.85
PIXEL_NOISE = 0.01
CORNER = 20.0
LENGTH_RANGE = (50.0, 160.0)
WIDTH_RANGE = (14.0, 40.0)
MIN_GAP = 12.0

# per-finger draw ranges (thumb, first, middle, ring, little), inside the ranges above
_LENGTHS = ((55, 90), (85, 130), (100, 160), (90, 140), (60, 110))
_WIDTHS = ((28, 40), (20, 32), (20, 32), (19, 30), (15, 26))
_TILTS = ((18, 30), (2, 6), (-2, 2), (-6, -2), (-14, -8))


@dataclass(frozen=True)
class HandParams:
    """Person-level hand geometry in pixels; ``bases`` are x offsets from the palm's left edge.

    Finger tuples are ordered thumb, first, middle, ring, little. Tilts are in
    degrees, positive towards +x (the thumb side).
    """

    lengths: tuple[float, ...]
    widths: tuple[float, ...]
    bases: tuple[float, ...]
    tilts: tuple[float, ...]
    palm_width: float
    palm_height: float
    wrist_width: float
    forearm: float = 130.0
    jitter: float = 1.0

    def validate(self) -> None:
        for name in ("lengths", "widths", "bases", "tilts"):
            if len(getattr(self, name)) != 5:
                raise InvalidParams(f"{name} needs 5 entries")
        lo, hi = LENGTH_RANGE
        if any(not (lo <= v <= hi) for v in self.lengths):
            raise InvalidParams(f"finger lengths must lie in {LENGTH_RANGE}")
        lo, hi = WIDTH_RANGE
        if any(not (lo <= v <= hi) for v in self.widths):
            raise InvalidParams(f"finger widths must lie in {WIDTH_RANGE}")
        if any(abs(t) >= 60 for t in self.tilts):
            raise InvalidParams("finger tilt must stay below 60 degrees")
        if not (0 < self.wrist_width <= self.palm_width) or self.palm_height <= 2 * CORNER:
            raise InvalidParams("palm/wrist dimensions are inconsistent")
        if self.jitter < 0:
            raise InvalidParams("jitter must be non-negative")
        if not fingers_separated(self):
            raise InvalidParams("fingers overlap")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    tips: np.ndarray      # (5, 2) x, y
    valleys: np.ndarray   # (4, 2)
    wrist: np.ndarray     # (2, 2) thumb side, little side
    features: np.ndarray  # FULL13


@dataclass(frozen=True)
class _Finger:
    start: np.ndarray
    end: np.ndarray
    radius: float
    tilt: float
    base: np.ndarray


def _direction(tilt_deg: float) -> np.ndarray:
    t = math.radians(tilt_deg)
    return np.array([math.sin(t), math.cos(t)])


def _layout(p: HandParams, cx: float):
    left = cx - p.palm_width / 2.0
    top = p.forearm
    bottom = top + p.palm_height
    fingers = []
    # bases are measured from the left edge; the thumb is the rightmost finger
    for k in range(5):
        d = _direction(p.tilts[k])
        r = p.widths[k] / 2.0
        b = np.array([left + p.bases[k], bottom])
        fingers.append(_Finger(b - (r + 2.0) * d, b + (p.lengths[k] - r) * d, r, p.tilts[k], b))
    return left, top, bottom, fingers


def _cross_half(f: _Finger) -> float:
    return f.radius / math.cos(math.radians(f.tilt))


def _seg_dist(a0, a1, b0, b1) -> float:
    return LineString([a0, a1]).distance(LineString([b0, b1]))


def fingers_separated(p: HandParams, min_gap: float = MIN_GAP) -> bool:
    """Bases at least `min_gap` apart at the palm edge and capsules never closer than that."""
    left, _, _, fingers = _layout(p, 0.0)
    order = sorted(range(5), key=lambda k: p.bases[k])
    if order != [4, 3, 2, 1, 0]:
        return False
    for a, b in zip(order, order[1:]):
        fa, fb = fingers[a], fingers[b]
        gap = (fb.base[0] - _cross_half(fb)) - (fa.base[0] + _cross_half(fa))
        if gap < min_gap:
            return False
        if _seg_dist(fa.base, fa.end, fb.base, fb.end) < fa.radius + fb.radius + min_gap * 0.5:
            return False
    if fingers[4].base[0] - _cross_half(fingers[4]) < left + CORNER + 2:
        return False
    if fingers[0].base[0] + _cross_half(fingers[0]) > left + p.palm_width - CORNER - 2:
        return False
    return True


def sample_person(seed, jitter: float = 1.0, max_retries: int = 100) -> HandParams:
    """Draw a person's hand geometry; deterministic per seed."""
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        lengths = tuple(float(rng.uniform(*r)) for r in _LENGTHS)
        widths = tuple(float(rng.uniform(*r)) for r in _WIDTHS)
        tilts = tuple(float(rng.uniform(*r)) for r in _TILTS)
        gaps = rng.uniform(MIN_GAP + 4, MIN_GAP + 14, size=4)
        margins = rng.uniform(CORNER + 6, CORNER + 16, size=2)
        ch = [w / 2.0 / math.cos(math.radians(t)) for w, t in zip(widths, tilts)]
        # walk left to right: little, ring, middle, first, thumb
        x = margins[0]
        bases = [0.0] * 5
        for i, k in enumerate([4, 3, 2, 1, 0]):
            x += ch[k]
            bases[k] = float(x)
            x += ch[k] + (gaps[i] if i < 4 else 0.0)
        palm_width = x + margins[1]
        palm_height = float(rng.uniform(230, 300))
        wrist = float(rng.uniform(0.6, 0.8) * palm_width)
        forearm = float(rng.uniform(110, 160))
        p = HandParams(lengths, widths, tuple(bases), tilts, float(palm_width), palm_height,
                       wrist, forearm, jitter)
        if fingers_separated(p):
            return p
    raise GenerationExhausted("could not draw non-overlapping fingers")


def acquisition_params(p: HandParams, rng: np.random.Generator) -> tuple[HandParams, float]:
    """Per-acquisition jittered geometry and horizontal placement."""
    s = p.jitter
    if s == 0:
        return p, CANVAS[0] / 2.0
    for _ in range(100):
        q = replace(
            p,
            lengths=tuple(float(np.clip(v + rng.normal(0, s), *LENGTH_RANGE)) for v in p.lengths),
            widths=tuple(float(np.clip(v + rng.normal(0, s / 2), *WIDTH_RANGE)) for v in p.widths),
            bases=tuple(float(v + rng.normal(0, s / 2)) for v in p.bases),
            tilts=tuple(float(v + rng.normal(0, s)) for v in p.tilts),
            wrist_width=float(p.wrist_width + rng.normal(0, s)),
            forearm=float(p.forearm + rng.normal(0, 2 * s)),
        )
        if fingers_separated(q):
            return q, CANVAS[0] / 2.0 + float(rng.normal(0, 5 * s))
    return p, CANVAS[0] / 2.0


def hand_polygon(p: HandParams, cx: float, extra=()) -> Polygon:
    left, top, bottom, fingers = _layout(p, cx)
    parts = [
        box(left + CORNER, top + CORNER, left + p.palm_width - CORNER, bottom - CORNER).buffer(CORNER, quad_segs=32),
        box(cx - p.wrist_width / 2, -50.0, cx + p.wrist_width / 2, top + CORNER),
    ]
    parts += [LineString([f.start, f.end]).buffer(f.radius, quad_segs=32) for f in fingers]
    parts += list(extra)
    shape = shapely.union_all(parts).intersection(box(-1e4, 0.0, 1e4, 1e4))
    return orient(shape, sign=1.0)


def _seg_distance_grid(X, Y, a, b):
    ab = b - a
    t = ((X - a[0]) * ab[0] + (Y - a[1]) * ab[1]) / float(ab @ ab)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(X - (a[0] + t * ab[0]), Y - (a[1] + t * ab[1]))


def rasterize(p: HandParams, cx: float, shape=(CANVAS[1], CANVAS[0]), extra=()) -> np.ndarray:
    """Boolean mask of pixel centres inside the hand."""
    h, w = shape
    Y, X = np.mgrid[0:h, 0:w].astype(np.float64)
    left, top, bottom, fingers = _layout(p, cx)
    right = left + p.palm_width
    qx = np.maximum(np.maximum(left + CORNER - X, X - (right - CORNER)), 0.0)
    qy = np.maximum(np.maximum(top + CORNER - Y, Y - (bottom - CORNER)), 0.0)
    mask = np.hypot(qx, qy) <= CORNER
    mask |= (np.abs(X - cx) <= p.wrist_width / 2) & (Y <= top + CORNER)
    for f in fingers:
        mask |= _seg_distance_grid(X, Y, f.start, f.end) <= f.radius
    for geom in extra:
        minx, miny, maxx, maxy = geom.bounds
        ys = slice(max(int(miny), 0), min(int(maxy) + 2, h))
        xs = slice(max(int(minx), 0), min(int(maxx) + 2, w))
        mask[ys, xs] |= shapely.contains_xy(geom, X[ys, xs], Y[ys, xs])
    return mask


def _nearest(coords: np.ndarray, pt) -> int:
    return int(np.argmin(np.hypot(coords[:, 0] - pt[0], coords[:, 1] - pt[1])))


def ground_truth(p: HandParams, cx: float) -> GroundTruth:
    """Analytic landmarks and the 13 measurements on the exact outline."""
    left, top, bottom, fingers = _layout(p, cx)
    tips = np.array([f.end + np.array([0.0, f.radius]) for f in fingers])
    valleys = []
    for k in range(4):
        thumbward, littleward = fingers[k], fingers[k + 1]
        a = thumbward.base[0] - _cross_half(thumbward)
        b = littleward.base[0] + _cross_half(littleward)
        valleys.append(((a + b) / 2.0, bottom))
    valleys = np.array(valleys)
    wrist = np.array([[cx + p.wrist_width / 2, 0.0], [cx - p.wrist_width / 2, 0.0]])

    poly = hand_polygon(p, cx)
    coords = np.asarray(shapely.segmentize(poly, 0.5).exterior.coords)[:-1]
    start = _nearest(coords, wrist[1])
    coords = np.roll(coords, -start, axis=0)
    lm = contour.Landmarks(
        tuple(_nearest(coords, t) for t in tips),
        tuple(_nearest(coords, v) for v in valleys),
        (_nearest(coords, wrist[0]), _nearest(coords, wrist[1])),
    )
    feats = features.measure_points(coords, lm, poly.exterior.length, poly.area)
    return GroundTruth(tips, valleys, wrist, feats)


def _defect_geometry(p: HandParams, cx: float, defect: str, rng: np.random.Generator):
    left, top, bottom, fingers = _layout(p, cx)
    if defect == "merged":
        k = int(rng.integers(0, 4))
        a, b = fingers[k], fingers[k + 1]
        hull = shapely.union_all([
            LineString([a.base, a.end]).buffer(a.radius, quad_segs=16),
            LineString([b.base, b.end]).buffer(b.radius, quad_segs=16),
        ]).convex_hull
        return [hull], None
    if defect == "cut":
        tip_y = [f.end[1] + f.radius for f in fingers]
        k = int(np.argmax(tip_y))
        height = int(tip_y[k] - rng.uniform(10.0, 0.5 * p.lengths[k]))
        return [], max(height, int(bottom) + 12)
    raise InvalidParams(f"unknown defect {defect!r}")


def render(p: HandParams, acquisition_seed, defect: str | None = None) -> tuple[imaging.GrayImage, GroundTruth | None]:
    """Rasterize one acquisition; ``defect`` in {None, 'merged', 'cut'}."""
    p.validate()
    rng = np.random.default_rng(acquisition_seed)
    q, cx = acquisition_params(p, rng)
    extra, height = ([], None) if defect is None else _defect_geometry(q, cx, defect, rng)
    mask = rasterize(q, cx, extra=extra)
    if height is not None:
        mask = mask[:height]
    img = np.where(mask, FOREGROUND, BACKGROUND) + rng.normal(0.0, PIXEL_NOISE, size=mask.shape)
    gt = ground_truth(q, cx) if defect is None else None
    return imaging.GrayImage(np.clip(img, 0.0, 1.0)), gt


@dataclass
class Dataset:
    persons: int
    acquisitions: int
    params: list[HandParams]
    images: dict[tuple[int, int], imaging.GrayImage] = field(repr=False)
    truth: dict[tuple[int, int], GroundTruth] = field(repr=False)
    retries: dict[tuple[int, int], int] = field(default_factory=dict)

    def filename(self, person: int, acq: int) -> str:
        return image_name(person, acq)


def image_name(person: int, acq: int) -> str:
    return f"p{person:02d}_a{acq:02d}.pgm"


def make_dataset(persons: int = 22, acquisitions: int = 10, master_seed: int = 42, jitter: float = 1.0,
                 out_dir=None, cfg: PipelineConfig = PipelineConfig(), max_retries: int = 100) -> Dataset:
    """Generate persons x acquisitions images; keys and file names are 1-based."""
    if persons < 2 or acquisitions < 2:
        raise InvalidParams("need at least 2 persons and 2 acquisitions")
    params = [sample_person([master_seed, 0, p], jitter=jitter) for p in range(1, persons + 1)]
    images, truth, retries = {}, {}, {}
    for pi, hp in enumerate(params, start=1):
        for a in range(1, acquisitions + 1):
            for attempt in range(max_retries):
                img, gt = render(hp, [master_seed, 1, pi, a, attempt])
                try:
                    extract(img, cfg)
                except HandGeomError:
                    continue
                break
            else:
                raise GenerationExhausted(f"person {pi} acquisition {a}: {max_retries} rejected renders")
            images[pi, a], truth[pi, a] = img, gt
            if attempt:
                retries[pi, a] = attempt
    ds = Dataset(persons, acquisitions, params, images, truth, retries)
    if out_dir is not None:
        write_dataset(ds, out_dir)
    return ds


def truth_header() -> list[str]:
    cols = ["person", "acq"]
    cols += [f"tip{i}{c}" for i in range(1, 6) for c in "xy"]
    cols += [f"valley{i}{c}" for i in range(1, 5) for c in "xy"]
    cols += [f"f{i}" for i in range(1, 14)]
    return cols


def write_dataset(ds: Dataset, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(truth_header())
    for (pi, a), img in sorted(ds.images.items()):
        imaging.save_pgm(img, out / image_name(pi, a))
        gt = ds.truth[pi, a]
        row = [pi, a] + [repr(float(v)) for v in gt.tips.ravel()]
        row += [repr(float(v)) for v in gt.valleys.ravel()]
        row += [repr(float(v)) for v in gt.features]
        w.writerow(row)
    imaging._atomic_write(out / "ground_truth.csv", buf.getvalue().encode("ascii"))


def defective_cases(count: int = 50, master_seed: int = 7) -> list[tuple[str, imaging.GrayImage]]:
    """Alternating merged-finger and cut-finger captures for rejection tests."""
    cases = []
    for i in range(count):
        kind = "merged" if i % 2 == 0 else "cut"
        hp = sample_person([master_seed, 2, i])
        img, _ = render(hp, [master_seed, 3, i], defect=kind)
        cases.append((kind, img))
    return cases

