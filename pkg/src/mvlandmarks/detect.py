"""Per-view 2D landmark detection.

Two detectors share the Detection2D output type: `decode_heatmaps` turns
heatmap stacks (e.g. the HMP1 files an external network writes) into
thresholded argmax detections, and `oracle_detect` simulates a trained
network by projecting ground-truth 3D landmarks with configurable noise,
outliers, and dropout. Detection lists round-trip through JSON lines.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import project_point

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class Detection2D:
    landmark_id: int
    u: float
    v: float
    confidence: float
    view_id: int


@dataclass
class HeatmapStack:
    """NL float planes, one per landmark; ids default to plane order."""

    planes: np.ndarray
    landmark_ids: list | None = None

    def __post_init__(self):
        self.planes = np.asarray(self.planes, dtype=np.float32)
        if self.planes.ndim != 3:
            raise ValueError("heatmap stack must have shape (count, height, width)")
        if not np.all(np.isfinite(self.planes)):
            raise ValueError("heatmap stack contains non-finite values")
        if self.landmark_ids is not None and len(self.landmark_ids) != len(self.planes):
            raise ValueError("landmark_ids length does not match plane count")

    @property
    def landmark_count(self):
        return len(self.planes)


def decode_heatmaps(stack, threshold=DEFAULT_THRESHOLD, view_id=0):
    """Argmax decoding: one detection per plane whose maximum exceeds `threshold`.

    The detection sits at the center of the argmax pixel (col + 0.5,
    row + 0.5) with confidence equal to the maximum value; ties resolve to
    the smallest (row, col) in scan order. Planes with max <= threshold
    produce nothing.
    """
    if isinstance(stack, np.ndarray):
        stack = HeatmapStack(stack)
    detections = []
    ids = stack.landmark_ids if stack.landmark_ids is not None else range(stack.landmark_count)
    for lid, plane in zip(ids, stack.planes):
        m = float(plane.max())
        if m > threshold:
            row, col = np.unravel_index(int(np.argmax(plane)), plane.shape)
            detections.append(
                Detection2D(
                    landmark_id=int(lid),
                    u=float(col) + 0.5,
                    v=float(row) + 0.5,
                    confidence=min(max(m, 0.0), 1.0),
                    view_id=int(view_id),
                )
            )
    return detections


@dataclass(frozen=True)
class OracleConfig:
    """Noise model for the ground-truth-projecting stand-in detector.

    rng_seed None means "inherit the pipeline seed" when run through the
    driver; standalone it behaves like seed 0.
    """

    noise_sigma: float = 0.0
    outlier_rate: float = 0.0
    outlier_spread: float = 50.0
    dropout_rate: float = 0.0
    rng_seed: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.outlier_rate <= 1.0 and 0.0 <= self.dropout_rate <= 1.0):
            raise ValueError("rates must be in [0, 1]")
        if self.noise_sigma < 0 or self.outlier_spread < 0:
            raise ValueError("spreads must be >= 0")


def oracle_detect(view, landmarks_3d, config=OracleConfig(), landmark_ids=None):
    """Simulated detections from projected ground-truth landmarks.

    Each landmark independently: dropped with probability dropout_rate;
    otherwise displaced either uniformly within a disc of radius
    outlier_spread (probability outlier_rate) or by isotropic Gaussian
    noise_sigma, then clamped to the image. Landmarks projecting outside the
    view produce nothing. Randomness is keyed on (rng_seed, view_id,
    landmark_id), so results do not depend on evaluation order.
    """
    camera = view.camera
    width, height = camera.image_width, camera.image_height
    landmarks_3d = np.atleast_2d(np.asarray(landmarks_3d, dtype=np.float64))
    ids = list(landmark_ids) if landmark_ids is not None else list(range(len(landmarks_3d)))
    detections = []
    seed = 0 if config.rng_seed is None else int(config.rng_seed)
    for lid, p in zip(ids, landmarks_3d):
        rng = np.random.default_rng([seed, view.view_id, int(lid)])
        if rng.random() < config.dropout_rate:
            continue
        u, v, d = project_point(camera, p)
        if not (0.0 <= u <= width and 0.0 <= v <= height and 0.0 <= d <= 1.0):
            continue
        if rng.random() < config.outlier_rate:
            ang = rng.uniform(0.0, 2.0 * np.pi)
            rad = config.outlier_spread * np.sqrt(rng.random())
            u += rad * np.cos(ang)
            v += rad * np.sin(ang)
        elif config.noise_sigma > 0:
            du, dv = rng.normal(0.0, config.noise_sigma, size=2)
            u += du
            v += dv
        detections.append(
            Detection2D(
                landmark_id=int(lid),
                u=float(min(max(u, 0.0), width)),
                v=float(min(max(v, 0.0), height)),
                confidence=1.0,
                view_id=int(view.view_id),
            )
        )
    return detections


def write_detections(path, detections):
    """JSON-lines serialization: one detection object per line."""
    with open(path, "w") as f:
        for d in detections:
            f.write(json.dumps({
                "view_id": d.view_id,
                "landmark_id": d.landmark_id,
                "u": d.u,
                "v": d.v,
                "confidence": d.confidence,
            }, sort_keys=True) + "\n")


def read_detections(path):
    detections = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        detections.append(
            Detection2D(
                landmark_id=int(rec["landmark_id"]),
                u=float(rec["u"]),
                v=float(rec["v"]),
                confidence=float(rec["confidence"]),
                view_id=int(rec["view_id"]),
            )
        )
    return detections
