"""Pinhole cameras, per-pixel rays and point projection.

Conventions: ``rotation`` maps world to camera coordinates, the camera looks
down its +z axis and image rows grow downward. Pixel ``(i, j)`` is column
``i``, row ``j``; its center sits at ``(i + 0.5, j + 0.5)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHO_TOL = 1e-9


class BehindCameraError(ValueError):
    """Raised when a point does not have positive depth in the camera frame."""


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def at(self, u):
        return self.origin + u * self.direction


@dataclass(frozen=True, eq=False)
class Camera:
    rotation: np.ndarray
    center: np.ndarray
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    tol: float = field(default=ORTHO_TOL, repr=False)

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        ctr = np.array(self.center, dtype=np.float64).reshape(3)
        if not np.allclose(rot.T @ rot, np.eye(3), rtol=0.0, atol=self.tol):
            raise ValueError("camera rotation is not orthonormal")
        if abs(np.linalg.det(rot) - 1.0) > self.tol:
            raise ValueError("camera rotation must have determinant +1")
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if int(self.width) <= 0 or int(self.height) <= 0:
            raise ValueError("image size must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        rot.setflags(write=False)
        ctr.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "center", ctr)
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        for name in ("fx", "fy", "cx", "cy"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def key(self):
        """Hashable identity used for caching ray tables."""
        return (
            tuple(self.rotation.ravel().tolist()),
            tuple(self.center.tolist()),
            self.fx, self.fy, self.cx, self.cy, self.width, self.height,
        )

    def __eq__(self, other):
        return isinstance(other, Camera) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def scaled(self, k):
        """Same pose with focal lengths, principal point and image size scaled by ``k``."""
        return Camera(self.rotation, self.center, self.fx * k, self.fy * k,
                      self.cx * k, self.cy * k, self.width * k, self.height * k)


def pixel_ray(camera: Camera, px) -> Ray:
    i, j = px
    if not (0 <= i < camera.width and 0 <= j < camera.height):
        raise ValueError(f"pixel {px!r} outside {camera.width}x{camera.height} image")
    p_cam = np.array([(i + 0.5 - camera.cx) / camera.fx,
                      (j + 0.5 - camera.cy) / camera.fy,
                      1.0])
    # R^-1 p - C with p lifted to world coordinates through the camera pose
    target = camera.rotation.T @ p_cam + camera.center
    d = target - camera.center
    return Ray(camera.center.copy(), d / np.linalg.norm(d))


def pixel_rays(camera: Camera):
    """Origins and unit directions for every pixel, shaped ``(height*width, 3)`` row-major."""
    jj, ii = np.meshgrid(np.arange(camera.height), np.arange(camera.width), indexing="ij")
    p_cam = np.stack([
        (ii.ravel() + 0.5 - camera.cx) / camera.fx,
        (jj.ravel() + 0.5 - camera.cy) / camera.fy,
        np.ones(ii.size),
    ], axis=1)
    d = p_cam @ camera.rotation
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    o = np.broadcast_to(camera.center, d.shape).copy()
    return o, d


def project_point(camera: Camera, point):
    """Continuous pixel coordinates ``(u, v)`` and depth of a world point."""
    p_cam = camera.rotation @ (np.asarray(point, dtype=np.float64) - camera.center)
    if not p_cam[2] > 0:
        raise BehindCameraError(f"point {point!r} is behind the camera (depth {p_cam[2]:g})")
    return (camera.fx * p_cam[0] / p_cam[2] + camera.cx,
            camera.fy * p_cam[1] / p_cam[2] + camera.cy,
            p_cam[2])


def project_points(camera: Camera, points):
    """Vectorized projection. Returns ``u, v, depth``; entries with depth <= 0 are NaN in u, v."""
    p_cam = (np.asarray(points, dtype=np.float64) - camera.center) @ camera.rotation.T
    z = p_cam[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(z > 0, camera.fx * p_cam[..., 0] / z + camera.cx, np.nan)
        v = np.where(z > 0, camera.fy * p_cam[..., 1] / z + camera.cy, np.nan)
    return u, v, z


def look_at(eye, target, up=(0.0, 0.0, 1.0)):
    """World-to-camera rotation for a camera at ``eye`` looking at ``target`` (z up)."""
    eye = np.asarray(eye, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, up)
    if np.linalg.norm(right) < 1e-9:
        right = np.cross(fwd, (0.0, 1.0, 0.0))
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    return np.stack([right, down, fwd])


def orbit_camera(azimuth_deg, elevation_deg, distance, *, target=(0.0, 0.0, 0.0),
                 width=32, height=32, fov_deg=60.0) -> Camera:
    """Camera on a sphere around ``target``; azimuth about +z, elevation above the xy plane."""
    az, el = np.radians(azimuth_deg), np.radians(elevation_deg)
    target = np.asarray(target, dtype=np.float64)
    eye = target + distance * np.array([np.cos(el) * np.cos(az),
                                        np.cos(el) * np.sin(az),
                                        np.sin(el)])
    f = (width / 2.0) / np.tan(np.radians(fov_deg) / 2.0)
    return Camera(look_at(eye, target), eye, f, f,
                  width / 2.0, height / 2.0, width, height)
