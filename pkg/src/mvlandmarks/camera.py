"""Orthographic cameras: randomized sampling, projection, and pixel rays.

Image convention: u grows along the camera right axis, v grows downward
(row 0 is the top of the image), pixel centers sit at integer + 0.5, and a
point at the focal point projects to the image center (W/2, H/2). Depth is
normalized to [0, 1] over [near, far].
"""

from dataclasses import dataclass

import numpy as np


def _unit(v, name="vector"):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError(f"{name} must be nonzero")
    return v / n


@dataclass(frozen=True, eq=False)
class CameraSpec:
    """Orthographic camera; all distances in mm, image size in pixels."""

    position: np.ndarray
    focal_point: np.ndarray
    up: np.ndarray
    ortho_half_width: float
    ortho_half_height: float
    near: float
    far: float
    image_width: int = 256
    image_height: int = 256

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        object.__setattr__(self, "focal_point", np.asarray(self.focal_point, dtype=np.float64))
        object.__setattr__(self, "up", _unit(self.up, "up"))
        view = self.focal_point - self.position
        if np.linalg.norm(view) == 0:
            raise ValueError("camera position and focal point coincide")
        forward = view / np.linalg.norm(view)
        if abs(forward @ self.up) > 1.0 - 1e-9:
            raise ValueError("view direction is parallel to the up vector")
        if not (self.near < self.far):
            raise ValueError("near must be < far")
        if self.ortho_half_width <= 0 or self.ortho_half_height <= 0:
            raise ValueError("ortho half extents must be positive")
        right = _unit(np.cross(forward, self.up))
        true_up = np.cross(right, forward)
        object.__setattr__(self, "_forward", forward)
        object.__setattr__(self, "_right", right)
        object.__setattr__(self, "_true_up", true_up)

    @property
    def forward(self):
        return self._forward

    @property
    def right(self):
        return self._right

    @property
    def true_up(self):
        return self._true_up

    @property
    def mm_per_pixel(self):
        """Sample spacing of the image plane along u (2*half_width / width)."""
        return 2.0 * self.ortho_half_width / self.image_width

    def project_points(self, points):
        """Project (N, 3) world points; returns (N, 3) of (u, v, depth)."""
        p = np.atleast_2d(np.asarray(points, dtype=np.float64)) - self.position
        x = p @ self._right
        y = p @ self._true_up
        z = p @ self._forward
        u = (x / (2.0 * self.ortho_half_width) + 0.5) * self.image_width
        v = (0.5 - y / (2.0 * self.ortho_half_height)) * self.image_height
        depth = (z - self.near) / (self.far - self.near)
        return np.stack([u, v, depth], axis=1)

    def pixel_ray(self, u, v):
        """Back-project continuous pixel coordinates to a world-space ray.

        Returns (origin, direction): origin on the near plane, direction the
        (unit) camera view axis. project_points(origin + t * direction)
        reproduces (u, v) for every t.
        """
        x = (u / self.image_width - 0.5) * 2.0 * self.ortho_half_width
        y = (0.5 - v / self.image_height) * 2.0 * self.ortho_half_height
        origin = self.position + x * self._right + y * self._true_up + self.near * self._forward
        return origin, self._forward.copy()

    def to_dict(self):
        return {
            "position": self.position.tolist(),
            "focal_point": self.focal_point.tolist(),
            "up": self.up.tolist(),
            "ortho_half_width": float(self.ortho_half_width),
            "ortho_half_height": float(self.ortho_half_height),
            "near": float(self.near),
            "far": float(self.far),
            "image_width": int(self.image_width),
            "image_height": int(self.image_height),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            position=np.array(d["position"], dtype=np.float64),
            focal_point=np.array(d["focal_point"], dtype=np.float64),
            up=np.array(d["up"], dtype=np.float64),
            ortho_half_width=float(d["ortho_half_width"]),
            ortho_half_height=float(d["ortho_half_height"]),
            near=float(d["near"]),
            far=float(d["far"]),
            image_width=int(d.get("image_width", 256)),
            image_height=int(d.get("image_height", 256)),
        )


def project_point(camera, p):
    """Project one world point; returns (u, v, depth) floats."""
    u, v, d = camera.project_points(np.asarray(p, dtype=np.float64).reshape(1, 3))[0]
    return float(u), float(v), float(d)


@dataclass(frozen=True)
class ViewSamplingConfig:
    """Random camera placement on a spherical cap around a frontal axis."""

    view_count: int = 100
    frontal_axis: tuple = (0.0, 0.0, 1.0)
    cap_half_angle: float = 60.0
    rng_seed: int = 0
    image_width: int = 256
    image_height: int = 256

    def __post_init__(self):
        if self.view_count < 1:
            raise ValueError("view_count must be >= 1")
        if not (0.0 <= self.cap_half_angle <= 180.0):
            raise ValueError("cap_half_angle must be in [0, 180]")


def _rotation_to(axis):
    """Rotation matrix mapping +z onto the unit vector `axis`."""
    z = np.array([0.0, 0.0, 1.0])
    c = float(z @ axis)
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])  # 180 deg about x
    k = np.cross(z, axis)
    s2 = float(k @ k)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + kx + kx @ kx * ((1.0 - c) / s2)


def sample_cameras(mesh, config=ViewSamplingConfig()):
    """Sample `config.view_count` orthographic cameras looking at the mesh.

    Positions are uniform on the spherical cap of half-angle
    `cap_half_angle` degrees around `frontal_axis`, at distance twice the
    bounding-sphere radius from the bounding-box center (the focal point).
    Half extents are 1.05x the bounding-sphere radius so every vertex lands
    inside the image; near/far hug the bounding box along each view axis.

    Cameras are drawn sequentially from one seeded generator, so the first k
    cameras of an N-view sample equal a k-view sample with the same seed.
    """
    bbox = mesh.bounding_box()
    center = bbox.center
    radius = float(np.max(np.linalg.norm(mesh.vertices - center, axis=1)))
    if radius == 0.0:
        raise ValueError("mesh bounding box has zero extent")
    distance = 2.0 * radius
    half_extent = 1.05 * radius
    corners = bbox.corners()

    axis = _unit(np.asarray(config.frontal_axis, dtype=np.float64), "frontal_axis")
    rot = _rotation_to(axis)
    cos_min = np.cos(np.deg2rad(config.cap_half_angle))
    rng = np.random.default_rng(config.rng_seed)
    world_y = np.array([0.0, 1.0, 0.0])
    world_z = np.array([0.0, 0.0, 1.0])

    cameras = []
    for _ in range(config.view_count):
        cos_t = rng.uniform(cos_min, 1.0)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        sin_t = np.sqrt(max(0.0, 1.0 - cos_t * cos_t))
        direction = rot @ np.array([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t])
        position = center + distance * direction
        forward = -direction
        up = world_y if abs(forward @ world_y) < 1.0 - 1e-9 else world_z
        z_corners = (corners - position) @ forward
        cameras.append(
            CameraSpec(
                position=position,
                focal_point=center.copy(),
                up=up,
                ortho_half_width=half_extent,
                ortho_half_height=half_extent,
                near=float(z_corners.min()),
                far=float(z_corners.max()),
                image_width=config.image_width,
                image_height=config.image_height,
            )
        )
    return cameras
