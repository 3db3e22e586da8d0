"""Software rasterization of a mesh into multi-channel float planes.

Half-plane edge-function rasterizer with a top-left fill rule and a z-buffer.
Channels (all H x W float in [0, 1]):

  depth      normalized z: 0 at the near plane, 1 at the far plane,
             1 for background pixels
  geometry   headlight Lambertian shading, flat per triangle:
             max(0, outward_normal . direction_to_camera); background 0
  red/green/blue
             barycentric interpolation of per-vertex colors; background 0
  curvature  per-vertex curvature clamped to [-c_max, +c_max], mapped
             linearly to [0, 1], interpolated; background 0

The shorthand channel name "rgb" expands to red, green, blue.
"""

from dataclasses import dataclass

import numpy as np

DEFAULT_CURVATURE_CLAMP = 0.5  # 1/mm mapped to the ends of the gray ramp

CHANNEL_NAMES = ("red", "green", "blue", "geometry", "depth", "curvature")


def expand_channels(channels):
    """Normalize a channel request ('rgb' sugar, ordering, validation)."""
    if isinstance(channels, str):
        channels = [c for c in channels.replace(",", " ").split() if c]
    out = []
    for name in channels:
        expanded = ("red", "green", "blue") if name == "rgb" else (name,)
        for ch in expanded:
            if ch not in CHANNEL_NAMES:
                raise ValueError(f"unknown channel {ch!r}")
            if ch not in out:
                out.append(ch)
    return tuple(out)


@dataclass
class RenderedView:
    """Rendered channel planes plus the camera that produced them."""

    channels: dict
    camera: object
    view_id: int = 0
    gt_landmarks_2d: list | None = None  # (landmark_id, u, v, visible) tuples

    def channel(self, name):
        try:
            return self.channels[name]
        except KeyError:
            raise KeyError(f"view has no {name!r} channel (rendered: {sorted(self.channels)})") from None


def render_view(mesh, camera, channels=("depth",), curvature=None, landmarks=None,
                landmark_ids=None, view_id=0, curvature_clamp=DEFAULT_CURVATURE_CLAMP):
    """Rasterize `mesh` through `camera` into the requested channels.

    Parameters
    ----------
    mesh : TriangleMesh
    camera : CameraSpec
    channels : iterable of channel names ("rgb" allowed as shorthand);
        may be empty, in which case no rasterization happens and the view
        just carries camera bookkeeping (and projected landmarks).
    curvature : CurvatureField or (V,) array, required for "curvature"
    landmarks : (L, 3) array of ground-truth 3D points, optional; their
        projections are stored on the view with a depth-buffer visibility
        flag (True when no rasterization happened and the point is in view).
    landmark_ids : ids for `landmarks` (defaults to 0..L-1)
    view_id : stamped on the returned view
    """
    channels = expand_channels(channels)
    want_color = any(c in channels for c in ("red", "green", "blue"))
    if want_color and mesh.vertex_colors is None:
        raise ValueError("color channels requested but the mesh has no vertex colors")
    curv_values = None
    if "curvature" in channels:
        if curvature is None:
            raise ValueError("curvature channel requested without a curvature field")
        curv_values = np.asarray(getattr(curvature, "values", curvature), dtype=np.float64)
        if curv_values.shape != (mesh.vertex_count,):
            raise ValueError("curvature field length does not match vertex count")

    width, height = camera.image_width, camera.image_height
    planes = {}
    zbuf = None
    if channels:
        zbuf = _rasterize(mesh, camera, channels, planes, curv_values, curvature_clamp)

    gt_list = None
    if landmarks is not None:
        landmarks = np.atleast_2d(np.asarray(landmarks, dtype=np.float64))
        ids = list(landmark_ids) if landmark_ids is not None else list(range(len(landmarks)))
        uvd = camera.project_points(landmarks)
        gt_list = []
        for lid, (u, v, d) in zip(ids, uvd):
            in_view = (0.0 <= u <= width) and (0.0 <= v <= height) and (0.0 <= d <= 1.0)
            visible = bool(in_view)
            if in_view and zbuf is not None:
                col = min(int(u), width - 1)
                row = min(int(v), height - 1)
                visible = bool(d <= zbuf[row, col] + 0.005)
            gt_list.append((int(lid), float(u), float(v), visible))

    return RenderedView(channels=planes, camera=camera, view_id=view_id, gt_landmarks_2d=gt_list)


def _rasterize(mesh, camera, channels, planes, curv_values, curvature_clamp):
    width, height = camera.image_width, camera.image_height
    zbuf = np.ones((height, width), dtype=np.float64)

    uvd = camera.project_points(mesh.vertices)
    uv = uvd[:, :2]
    z = uvd[:, 2]

    if "geometry" in channels:
        normals = mesh.triangle_normals()
        geom_value = np.maximum(0.0, normals @ (-camera.forward))
    if any(c in channels for c in ("red", "green", "blue")):
        colors = np.clip(mesh.vertex_colors, 0.0, 1.0)
    if "curvature" in channels:
        cmax = float(curvature_clamp)
        curv_gray = np.clip((curv_values + cmax) / (2.0 * cmax), 0.0, 1.0)

    for name in channels:
        planes[name] = np.zeros((height, width), dtype=np.float64)
    if "depth" in channels:
        planes["depth"].fill(1.0)

    tris = mesh.triangles
    for t in range(len(tris)):
        i0, i1, i2 = tris[t]
        p0, p1, p2 = uv[i0], uv[i1], uv[i2]
        area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        if area2 == 0.0:
            continue
        if area2 < 0.0:  # orient so the interior has positive edge functions
            i1, i2 = i2, i1
            p1, p2 = p2, p1
            area2 = -area2

        lo_x = max(0, int(np.ceil(min(p0[0], p1[0], p2[0]) - 0.5)))
        hi_x = min(width - 1, int(np.floor(max(p0[0], p1[0], p2[0]) - 0.5)))
        lo_y = max(0, int(np.ceil(min(p0[1], p1[1], p2[1]) - 0.5)))
        hi_y = min(height - 1, int(np.floor(max(p0[1], p1[1], p2[1]) - 0.5)))
        if lo_x > hi_x or lo_y > hi_y:
            continue

        px = np.arange(lo_x, hi_x + 1) + 0.5
        py = (np.arange(lo_y, hi_y + 1) + 0.5)[:, None]

        e01 = _edge(p0, p1, px, py)
        e12 = _edge(p1, p2, px, py)
        e20 = _edge(p2, p0, px, py)
        inside = (
            ((e01 > 0) | ((e01 == 0) & _top_left(p0, p1)))
            & ((e12 > 0) | ((e12 == 0) & _top_left(p1, p2)))
            & ((e20 > 0) | ((e20 == 0) & _top_left(p2, p0)))
        )
        if not inside.any():
            continue

        w0 = e12 / area2
        w1 = e20 / area2
        w2 = e01 / area2
        zpix = np.clip(w0 * z[i0] + w1 * z[i1] + w2 * z[i2], 0.0, 1.0)

        block = (slice(lo_y, hi_y + 1), slice(lo_x, hi_x + 1))
        win = inside & (zpix < zbuf[block])
        if not win.any():
            continue
        zb = zbuf[block]
        zb[win] = zpix[win]

        for name in channels:
            plane = planes[name][block]
            if name == "depth":
                plane[win] = zpix[win]
            elif name == "geometry":
                plane[win] = geom_value[t]
            elif name == "curvature":
                vals = w0 * curv_gray[i0] + w1 * curv_gray[i1] + w2 * curv_gray[i2]
                plane[win] = vals[win]
            else:
                k = CHANNEL_NAMES.index(name)  # red=0, green=1, blue=2
                vals = w0 * colors[i0, k] + w1 * colors[i1, k] + w2 * colors[i2, k]
                plane[win] = np.clip(vals[win], 0.0, 1.0)
    return zbuf


def _edge(a, b, px, py):
    """Edge function of a->b at pixel centers; positive on the interior side."""
    return (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])


def _top_left(a, b):
    """Fill-rule ownership for pixels exactly on edge a->b (y grows downward)."""
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    return dy < 0 or (dy == 0 and dx > 0)
