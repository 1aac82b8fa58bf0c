"""Synthetic silhouette datasets written to disk."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import io
from .geometry import orbit_camera
from .losses import ViewSet, render_views
from .voxel import DEFAULT_EXTENT, shape_pool

RING_ELEVATION = 30.0
RING_DISTANCE_FACTOR = 2.5


def ring_cameras(count, extent=DEFAULT_EXTENT, elevation=RING_ELEVATION, width=32, height=32,
                 fov_deg=60.0, azimuth_offset=0.0):
    """``count`` look-at cameras evenly spaced in azimuth at 2.5x the grid half-diagonal."""
    if count < 1:
        raise ValueError("need at least one view")
    lo, hi = extent
    half_diag = math.sqrt(3.0) * (hi - lo) / 2.0
    target = np.full(3, (lo + hi) / 2.0)
    return [orbit_camera(azimuth_offset + 360.0 * k / count, elevation,
                         RING_DISTANCE_FACTOR * half_diag, target=target,
                         width=width, height=height, fov_deg=fov_deg)
            for k in range(count)]


def gen_data(kind, n, views, out_dir, seed=0, image_size=32, extent=DEFAULT_EXTENT):
    """Write ``shape.vox``, ``cam_XXX.json`` / ``mask_XXX.pgm`` per view and ``manifest.json``.

    The shape parameters are drawn from ``seed``; masks are raytrace-pooled
    renderings of the binary shape.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror}") from exc
    shape = shape_pool(seed, 1, (kind,), n=n, extent=extent)[0]
    cams = ring_cameras(views, extent, width=image_size, height=image_size)
    rendered = render_views(shape, cams)
    io.write_voxels(out / "shape.vox", shape)
    entries = []
    for k, (cam, mask) in enumerate(rendered):
        cname, mname = f"cam_{k:03d}.json", f"mask_{k:03d}.pgm"
        io.write_camera(out / cname, cam)
        io.write_mask(out / mname, mask)
        entries.append({"camera": cname, "mask": mname})
    manifest = {"shape": kind, "n": n, "seed": seed, "voxels": "shape.vox", "views": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return shape, rendered


def parse_view_list(spec: str) -> ViewSet:
    """Load ``"cam1.json:mask1.pgm,cam2.json:mask2.pgm"`` into a :class:`ViewSet`."""
    pairs = []
    for item in filter(None, (s.strip() for s in spec.split(","))):
        cam_path, sep, mask_path = item.rpartition(":")
        if not sep or not cam_path:
            raise ValueError(f"view {item!r} is not of the form camera.json:mask.pgm")
        pairs.append((io.read_camera(cam_path), io.read_mask(mask_path)))
    if not pairs:
        raise ValueError("no views given")
    return ViewSet(tuple(pairs))


def load_manifest_views(directory) -> ViewSet:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    return ViewSet(tuple((io.read_camera(d / v["camera"]), io.read_mask(d / v["mask"]))
                         for v in manifest["views"]))


def load_pool(directory):
    paths = sorted(Path(directory).glob("*.vox"))
    if not paths:
        raise ValueError(f"no .vox files in pool directory {directory}")
    return [io.read_voxels(p) for p in paths]
