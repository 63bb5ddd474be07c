"""Image-to-features chain: filter, binarize, trace, landmark, measure."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import contour, features, imaging
from .errors import HandGeomError


@dataclass(frozen=True)
class PipelineConfig:
    radius: int = imaging.DEFAULT_RADIUS
    threshold: float = imaging.DEFAULT_THRESHOLD
    sigma: float = imaging.DEFAULT_SIGMA
    invert: bool = False
    with_edges: bool = False


@dataclass(frozen=True, eq=False)
class Extraction:
    mask: imaging.BinaryImage
    chain: contour.ChainCode
    landmarks: contour.Landmarks
    features: features.FeatureVector
    edges: imaging.EdgeMap | None = None


def extract(img: imaging.GrayImage, cfg: PipelineConfig = PipelineConfig()) -> Extraction:
    """Run the full preprocessing chain; raises DefectiveAcquisition on bad captures."""
    mask = imaging.preprocess(img, cfg.radius, cfg.threshold, invert=cfg.invert)
    edges = imaging.detect_edges(mask, cfg.sigma) if cfg.with_edges else None
    chain = contour.trace_contour(mask)
    lm = contour.find_landmarks(chain)
    fv = features.measure(chain, lm)
    return Extraction(mask, chain, lm, fv, edges)


_NAME = re.compile(r"^p(\d+)_a(\d+)\.(pgm|bmp)$", re.I)


def parse_image_name(name: str) -> tuple[int, int] | None:
    m = _NAME.match(name)
    return (int(m.group(1)), int(m.group(2))) if m else None


def extract_directory(path, cfg: PipelineConfig = PipelineConfig()):
    """Features for every p<person>_a<acq> image; returns (table, rejects).

    ``rejects`` lists (file name, error name, message) for captures that fail.
    """
    entries = []
    for f in sorted(Path(path).iterdir()):
        key = parse_image_name(f.name)
        if key is not None:
            entries.append((key, f))
    entries.sort()
    persons, acqs, rows, rejects = [], [], [], []
    for (p, a), f in entries:
        try:
            ex = extract(imaging.load_image(f), cfg)
        except HandGeomError as exc:
            rejects.append((f.name, exc.name, str(exc)))
            continue
        persons.append(p)
        acqs.append(a)
        rows.append(ex.features.values)
    X = np.vstack(rows) if rows else np.zeros((0, 13))
    return features.FeatureTable(np.array(persons, dtype=np.int64), np.array(acqs, dtype=np.int64), X), rejects
