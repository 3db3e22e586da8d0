"""Training-data export: channel PNGs, Gaussian heatmap stacks, metadata.

File formats:
  PNG      -- single channels as 16-bit grayscale (value = round(v * 65535)),
              color as 8-bit RGB when red/green/blue are all present.
  HMP1     -- raw heatmap stack: 16-byte header (magic "HMP1", uint32
              landmark count, uint32 width, uint32 height, little endian)
              followed by count * height * width float32 values, one plane
              per landmark in row-major order.
  metadata -- one JSON record per view: camera parameters, view id, the
              projected 2D ground-truth landmarks with visibility flags,
              and the files written.
"""

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

DEFAULT_SIGMA_PX = 5.0

_HMP_MAGIC = b"HMP1"


def gaussian_heatmap(width, height, u0, v0, sigma):
    """Unit-peak Gaussian centered at continuous pixel coords (u0, v0).

    Evaluated at pixel centers (col + 0.5, row + 0.5):
    H = exp(-((u - u0)^2 + (v - v0)^2) / (2 sigma^2)).
    """
    u = np.arange(width) + 0.5
    v = np.arange(height) + 0.5
    du2 = (u - u0) ** 2
    dv2 = (v - v0) ** 2
    return np.exp(-(dv2[:, None] + du2[None, :]) / (2.0 * sigma * sigma))


def write_heatmap_stack(path, planes):
    """Write an (N, H, W) float array in the HMP1 raw-stack format."""
    planes = np.asarray(planes, dtype=np.float32)
    if planes.ndim != 3:
        raise ValueError("heatmap stack must have shape (count, height, width)")
    n, h, w = planes.shape
    header = _HMP_MAGIC + struct.pack("<III", n, w, h)
    Path(path).write_bytes(header + planes.astype("<f4").tobytes())


def read_heatmap_stack(path):
    """Read an HMP1 file; returns an (N, H, W) float32 array."""
    raw = Path(path).read_bytes()
    if raw[:4] != _HMP_MAGIC:
        raise ValueError(f"{path}: not a heatmap stack (bad magic)")
    n, w, h = struct.unpack_from("<III", raw, 4)
    expected = n * h * w
    planes = np.frombuffer(raw, dtype="<f4", count=expected, offset=16)
    if planes.size != expected:
        raise ValueError(f"{path}: truncated heatmap stack")
    return planes.reshape(n, h, w).copy()


def save_channel_png(path, plane):
    """16-bit grayscale PNG of a [0, 1] float plane."""
    arr = np.round(np.clip(plane, 0.0, 1.0) * 65535.0).astype("<u2")
    Image.fromarray(arr, mode="I;16").save(path)


def load_channel_png(path):
    arr = np.asarray(Image.open(path), dtype=np.float64)
    return arr / 65535.0


def save_rgb_png(path, red, green, blue):
    arr = np.stack([red, green, blue], axis=2)
    arr = np.round(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def export_training_view(view, landmarks_3d, sigma=DEFAULT_SIGMA_PX, out_dir=".",
                         landmark_ids=None, stem=None):
    """Write one rendered view as network training data.

    Per landmark, a Gaussian heatmap peaking (value 1) at its projected 2D
    position; landmarks projecting outside the image (or outside [near, far])
    get an all-zero plane. Channel planes go to PNG files, heatmaps to one
    HMP1 stack, and a JSON metadata record stores the full camera and the
    projected coordinates.

    Returns (files, heatmaps, metadata): a dict of written paths, the
    (L, H, W) float32 heatmap array, and the metadata record.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem if stem is not None else f"view_{view.view_id:04d}"
    camera = view.camera
    width, height = camera.image_width, camera.image_height

    landmarks_3d = np.atleast_2d(np.asarray(landmarks_3d, dtype=np.float64))
    ids = list(landmark_ids) if landmark_ids is not None else list(range(len(landmarks_3d)))
    uvd = camera.project_points(landmarks_3d)

    heatmaps = np.zeros((len(landmarks_3d), height, width), dtype=np.float32)
    records = []
    for k, (u, v, d) in enumerate(uvd):
        interior = (0.0 <= u <= width) and (0.0 <= v <= height) and (0.0 <= d <= 1.0)
        if interior:
            heatmaps[k] = gaussian_heatmap(width, height, u, v, sigma)
        records.append({"id": int(ids[k]), "u": float(u), "v": float(v)})

    # visibility from the rendered view when available, else in-frustum
    vis_by_id = {}
    if view.gt_landmarks_2d:
        vis_by_id = {lid: visible for lid, _, _, visible in view.gt_landmarks_2d}
    for k, rec in enumerate(records):
        u, v, d = uvd[k]
        in_view = (0.0 <= u <= width) and (0.0 <= v <= height) and (0.0 <= d <= 1.0)
        rec["visible"] = bool(vis_by_id.get(rec["id"], in_view))

    files = {}
    chans = view.channels
    if all(c in chans for c in ("red", "green", "blue")):
        p = out_dir / f"{stem}_rgb.png"
        save_rgb_png(p, chans["red"], chans["green"], chans["blue"])
        files["rgb"] = str(p)
    for name in ("geometry", "depth", "curvature"):
        if name in chans:
            p = out_dir / f"{stem}_{name}.png"
            save_channel_png(p, chans[name])
            files[name] = str(p)

    hmp_path = out_dir / f"{stem}.hmp"
    write_heatmap_stack(hmp_path, heatmaps)
    files["heatmaps"] = str(hmp_path)

    metadata = {
        "view_id": int(view.view_id),
        "camera": camera.to_dict(),
        "gt_landmarks_2d": records,
        "heatmap_sigma": float(sigma),
        "files": files,
    }
    meta_path = out_dir / f"{stem}.json"
    with open(meta_path, "w") as f:
        json.dump(metadata, f, indent=2, sort_keys=True)
    files["metadata"] = str(meta_path)
    return files, heatmaps, metadata
