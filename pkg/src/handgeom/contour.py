"""Chain-code boundary tracing and hand landmark detection.

Coordinates are ``(x, y)`` with ``y`` the row index. Direction ``k`` points at
angle ``k * 45`` degrees measured from +x towards +y::

    5 6 7
    4 . 0
    3 2 1

so on screen (y pointing down) a clockwise trace of a square emits 0, 2, 4, 6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ComponentTooSmall, DefectiveAcquisition, EmptyForeground
from .imaging import BinaryImage, _atomic_write

STEPS = np.array([(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)], dtype=np.int64)
_CODE_OF = {(int(dx), int(dy)): k for k, (dx, dy) in enumerate(STEPS)}

# Moore scan order, clockwise on screen starting west.
_MOORE = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)]
_MOORE_IDX = {d: i for i, d in enumerate(_MOORE)}

MIN_COMPONENT = 64
SMOOTH_WINDOW = 9
MIN_PROMINENCE = 10.0
N_TIPS = 5
N_VALLEYS = 4


@dataclass(frozen=True, eq=False)
class ChainCode:
    """Closed boundary as a start pixel plus 3-bit direction codes.

    ``frame`` optionally records the ``(width, height)`` of the source image so
    landmark detection can tell when a finger runs into the border.
    """

    start: tuple[int, int]
    codes: np.ndarray
    frame: tuple[int, int] | None = None

    def __post_init__(self):
        codes = np.array(self.codes, dtype=np.int8).ravel()
        if codes.size and (codes.min() < 0 or codes.max() > 7):
            raise ValueError("chain codes must lie in 0..7")
        if codes.size and STEPS[codes].sum(axis=0).any():
            raise ValueError("chain code does not close")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "start", (int(self.start[0]), int(self.start[1])))

    def __len__(self) -> int:
        return int(self.codes.size)

    def __eq__(self, other):
        if not isinstance(other, ChainCode):
            return NotImplemented
        return self.start == other.start and np.array_equal(self.codes, other.codes)

    def points(self) -> np.ndarray:
        """Boundary pixel coordinates, one per code; point i precedes step i."""
        if not self.codes.size:
            return np.array([self.start], dtype=np.int64)
        disp = np.cumsum(STEPS[self.codes], axis=0)
        pts = np.vstack([[0, 0], disp[:-1]]) + np.asarray(self.start)
        return pts.astype(np.int64)

    def to_text(self) -> str:
        return f"{self.start[0]} {self.start[1]}\n{''.join(str(int(c)) for c in self.codes)}\n"

    @classmethod
    def from_text(cls, text: str) -> "ChainCode":
        lines = text.splitlines()
        x, y = (int(v) for v in lines[0].split())
        digits = lines[1].strip() if len(lines) > 1 else ""
        return cls((x, y), np.array([int(c) for c in digits], dtype=np.int8))

    def save(self, path) -> None:
        _atomic_write(Path(path), self.to_text().encode("ascii"))

    @classmethod
    def load(cls, path) -> "ChainCode":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class Landmarks:
    """Contour indices of fingertips (thumb..little), valleys and wrist ends.

    ``wrist`` is ``(thumb_side, little_side)``. Contour order runs
    wrist[0], tip0, valley0, tip1, ..., valley3, tip4, wrist[1].
    """

    tips: tuple[int, ...]
    valleys: tuple[int, ...]
    wrist: tuple[int, int]


def largest_component(bits: np.ndarray) -> np.ndarray:
    """Mask of the largest 8-connected foreground component."""
    labels, n = ndimage.label(bits, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        raise EmptyForeground("no foreground pixels")
    if n == 1:
        return labels == 1
    sizes = np.bincount(labels.ravel())[1:]
    slices = ndimage.find_objects(labels)
    best = None
    for lab in range(1, n + 1):
        sl = slices[lab - 1]
        bbox = (sl[0].stop - sl[0].start) * (sl[1].stop - sl[1].start)
        key = (sizes[lab - 1], bbox, -sl[0].start)
        if best is None or key > best[0]:
            best = (key, lab)
    return labels == best[1]


def _moore_trace(mask: np.ndarray) -> tuple[tuple[int, int], list[int]]:
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    top = ys.min()
    sx = int(xs[ys == top].min())
    start = (sx, int(top))

    def fg(x, y):
        return 0 <= x < w and 0 <= y < h and mask[y, x]

    def next_move(p, back):
        # scan clockwise starting just after the background neighbour `back`
        for i in range(1, 9):
            d = _MOORE[(back + i) % 8]
            if fg(p[0] + d[0], p[1] + d[1]):
                prev = _MOORE[(back + i - 1) % 8]
                return d, prev
        return None, None

    codes: list[int] = []
    p = start
    back = 0  # west of the topmost-leftmost pixel is background
    first, prev = next_move(p, back)
    if first is None:
        return start, codes
    move = first
    while True:
        q = (p[0] + move[0], p[1] + move[1])
        codes.append(_CODE_OF[move])
        b = (p[0] + prev[0] - q[0], p[1] + prev[1] - q[1])
        p, back = q, _MOORE_IDX[b]
        move, prev = next_move(p, back)
        if p == start and move == first:
            break
    return start, codes


def trace_contour(bin_img: BinaryImage | np.ndarray, min_pixels: int = MIN_COMPONENT) -> ChainCode:
    """Moore-neighbour trace of the largest component, clockwise on screen."""
    bits = bin_img.bits if isinstance(bin_img, BinaryImage) else np.asarray(bin_img, dtype=bool)
    comp = largest_component(bits)
    if comp.sum() < min_pixels:
        raise ComponentTooSmall(f"largest component has {int(comp.sum())} < {min_pixels} pixels")
    start, codes = _moore_trace(comp)
    return ChainCode(start, np.array(codes, dtype=np.int8), frame=(bits.shape[1], bits.shape[0]))


def perimeter(chain: ChainCode) -> float:
    codes = chain.codes
    odd = int(np.count_nonzero(codes % 2))
    return float(codes.size - odd) + odd * math.sqrt(2.0)


def polygon_area(pts: np.ndarray) -> float:
    x = pts[:, 0].astype(np.float64)
    y = pts[:, 1].astype(np.float64)
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def enclosed_area(chain: ChainCode) -> float:
    """Shoelace area of the polygon through the boundary pixel centres."""
    if len(chain) < 3:
        return 0.0
    return polygon_area(chain.points())


def _runs(values: np.ndarray) -> list[tuple[int, int, int]]:
    """(value, start, stop) for each maximal run of equal values."""
    if not values.size:
        return []
    change = np.flatnonzero(np.diff(values)) + 1
    starts = np.concatenate([[0], change])
    stops = np.concatenate([change, [values.size]])
    return [(int(values[s]), int(s), int(e)) for s, e in zip(starts, stops)]


def _prune(ext: list[tuple[int, float, str]], min_prominence: float) -> list[tuple[int, float, str]]:
    """Drop neighbouring extremum pairs closer than min_prominence in y.

    The first and last entries are the fixed wrist ends.
    """
    ext = list(ext)
    while len(ext) > 2:
        gaps = [abs(ext[i + 1][1] - ext[i][1]) for i in range(len(ext) - 1)]
        i = int(np.argmin(gaps))
        if gaps[i] >= min_prominence:
            break
        if i == 0:
            del ext[1:3]
        elif i == len(ext) - 2:
            del ext[-3:-1]
        else:
            del ext[i:i + 2]
    return ext


def find_landmarks(chain: ChainCode, window: int = SMOOTH_WINDOW,
                   min_prominence: float = MIN_PROMINENCE) -> Landmarks:
    """Locate 5 fingertips, 4 valleys and the wrist ends on a hand contour.

    Fingers are assumed to point towards increasing y with the wrist at the
    lowest y, and the thumb first on the clockwise trace after the wrist.
    """
    pts = chain.points()
    n = len(chain)
    if n < 2 * window:
        raise DefectiveAcquisition("contour too short for a hand")
    y = pts[:, 1]

    # wrist: longest cyclic run of points at minimum y
    at_min = (y == y.min()).astype(np.int8)
    shift = int(np.argmin(at_min)) if not at_min.all() else 0
    rolled = np.roll(at_min, -shift)
    best = max((r for r in _runs(rolled) if r[0] == 1), key=lambda r: r[2] - r[1])
    little_side = (best[1] + shift) % n
    thumb_side = (best[2] - 1 + shift) % n
    path_len = (little_side - thumb_side) % n

    # smoothed vertical component of each step
    vy = STEPS[chain.codes, 1].astype(np.float64)
    half = window // 2
    padded = np.concatenate([vy[-half:], vy, vy[:half]]) if half else vy
    smooth = np.convolve(padded, np.ones(window) / window, mode="valid")
    sign = np.sign(np.where(np.abs(smooth) < 1e-12, 0.0, smooth)).astype(np.int8)
    steps = (thumb_side + np.arange(path_len)) % n
    path_sign = sign[steps]

    ext: list[tuple[int, float, str]] = [(0, float(y[thumb_side]), "min")]
    nonzero = [r for r in _runs(path_sign) if r[0] != 0]
    for a, b in zip(nonzero, nonzero[1:]):
        if a[0] == b[0]:
            continue
        # extremum point sits midway through the flat stretch between runs
        mid = (a[2] + b[1]) // 2
        kind = "max" if a[0] > 0 else "min"
        ext.append((mid, float(y[steps[mid]]), kind))
    ext.append((path_len, float(y[little_side]), "min"))
    ext = _prune(ext, min_prominence)

    tips = [e[0] for e in ext if e[2] == "max"]
    valleys = [e[0] for e in ext[1:-1] if e[2] == "min"]
    if len(tips) != N_TIPS or len(valleys) != N_VALLEYS:
        raise DefectiveAcquisition(f"found {len(tips)} fingertips and {len(valleys)} valleys")
    to_idx = lambda off: int((thumb_side + off) % n)  # noqa: E731
    lm = Landmarks(tuple(to_idx(t) for t in tips), tuple(to_idx(v) for v in valleys),
                   (int(thumb_side), int(little_side)))
    if chain.frame is not None:
        w, h = chain.frame
        for k, t in enumerate(lm.tips):
            tx, ty = pts[t]
            if ty >= h - 1 or tx <= 0 or tx >= w - 1:
                raise DefectiveAcquisition(f"finger {k + 1} is cut by the image border")
    check_order(lm, n)
    return lm


def check_order(lm: Landmarks, n: int) -> None:
    """Assert tips and valleys interleave in contour order after the wrist."""
    seq = [lm.wrist[0]]
    for k in range(N_TIPS):
        seq.append(lm.tips[k])
        if k < N_VALLEYS:
            seq.append(lm.valleys[k])
    offs = [(s - lm.wrist[0]) % n for s in seq]
    end = (lm.wrist[1] - lm.wrist[0]) % n or n
    offs.append(end)
    if any(b <= a for a, b in zip(offs, offs[1:])):
        raise DefectiveAcquisition("landmarks do not alternate along the contour")
