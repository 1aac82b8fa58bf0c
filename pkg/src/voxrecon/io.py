"""Readers and writers for cameras, voxel grids, masks, discriminators, logs and point clouds.

* camera: JSON object ``{"width", "height", "fx", "fy", "cx", "cy", "R": [9], "C": [3]}``
* voxels: ``VOXF`` little-endian binary, f32 payload in x-slowest order
* masks: binary PGM (P5), maxval 255
* discriminator: ``DISC`` little-endian binary, f32 weights row-major then biases
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .barrier import Discriminator
from .geometry import Camera
from .projection import MaskImage
from .voxel import VoxelGrid

VOX_MAGIC = b"VOXF"
DISC_MAGIC = b"DISC"
FORMAT_VERSION = 1
CAMERA_ORTHO_TOL = 1e-6
VALUE_SLACK = 1e-6


class FormatError(ValueError):
    """A file does not follow its expected format."""


def _path(path):
    return Path(path)


def _write_bytes(path, data: bytes):
    path = _path(path)
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def _read_bytes(path):
    path = _path(path)
    try:
        return path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc


# -- cameras ---------------------------------------------------------------

def camera_to_dict(cam: Camera) -> dict:
    return {
        "width": cam.width, "height": cam.height,
        "fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
        "R": cam.rotation.ravel().tolist(), "C": cam.center.tolist(),
    }


def camera_from_dict(d: dict, source="camera") -> Camera:
    try:
        R = np.array(d["R"], dtype=np.float64)
        C = np.array(d["C"], dtype=np.float64)
        fields = {k: d[k] for k in ("width", "height", "fx", "fy", "cx", "cy")}
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{source}: missing or malformed field {exc}") from exc
    if R.size != 9 or C.size != 3:
        raise FormatError(f"{source}: R needs 9 numbers and C needs 3")
    if not all(isinstance(fields[k], int) for k in ("width", "height")):
        raise FormatError(f"{source}: width and height must be integers")
    try:
        return Camera(R.reshape(3, 3), C, float(fields["fx"]), float(fields["fy"]),
                      float(fields["cx"]), float(fields["cy"]), fields["width"], fields["height"],
                      tol=CAMERA_ORTHO_TOL)
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from exc


def write_camera(path, cam: Camera):
    _write_bytes(path, (json.dumps(camera_to_dict(cam), indent=1) + "\n").encode())


def read_camera(path) -> Camera:
    try:
        d = json.loads(_read_bytes(path).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: not a JSON camera descriptor ({exc})") from exc
    if not isinstance(d, dict):
        raise FormatError(f"{path}: camera descriptor must be a JSON object")
    return camera_from_dict(d, str(path))


# -- voxel grids -----------------------------------------------------------

def voxels_to_bytes(grid: VoxelGrid) -> bytes:
    head = VOX_MAGIC + struct.pack("<IIdd", FORMAT_VERSION, grid.n, grid.lo, grid.hi)
    return head + grid.values.astype("<f4").tobytes()


def voxels_from_bytes(data: bytes, source="voxels") -> VoxelGrid:
    hsize = 4 + struct.calcsize("<IIdd")
    if len(data) < hsize or data[:4] != VOX_MAGIC:
        raise FormatError(f"{source}: bad magic, expected VOXF")
    version, n, lo, hi = struct.unpack("<IIdd", data[4:hsize])
    if version != FORMAT_VERSION:
        raise FormatError(f"{source}: unsupported version {version}")
    expected = hsize + 4 * n ** 3
    if len(data) != expected:
        raise FormatError(f"{source}: expected {expected} bytes for n={n}, got {len(data)}")
    v = np.frombuffer(data, dtype="<f4", offset=hsize).astype(np.float64)
    if not np.isfinite(v).all() or v.min(initial=0.0) < -VALUE_SLACK or v.max(initial=0.0) > 1 + VALUE_SLACK:
        raise FormatError(f"{source}: occupancy values outside [0, 1]")
    try:
        return VoxelGrid(np.clip(v, 0.0, 1.0).reshape(n, n, n), lo, hi)
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from exc


def write_voxels(path, grid: VoxelGrid):
    _write_bytes(path, voxels_to_bytes(grid))


def read_voxels(path) -> VoxelGrid:
    return voxels_from_bytes(_read_bytes(path), str(path))


# -- masks -----------------------------------------------------------------

def mask_to_pgm(mask: MaskImage) -> bytes:
    px = np.round(mask.values * 255.0).astype(np.uint8)
    return f"P5\n{mask.width} {mask.height}\n255\n".encode() + px.tobytes()


def mask_from_pgm(data: bytes, source="mask") -> MaskImage:
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{source}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace before the raster
    if tokens[0] != b"P5":
        raise FormatError(f"{source}: not a binary PGM (P5)")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"{source}: malformed PGM header") from exc
    if maxval != 255:
        raise FormatError(f"{source}: PGM maxval must be 255, got {maxval}")
    raster = data[pos:]
    if len(raster) != w * h:
        raise FormatError(f"{source}: expected {w * h} pixels, got {len(raster)}")
    return MaskImage(np.frombuffer(raster, dtype=np.uint8).reshape(h, w) / 255.0)


def write_mask(path, mask: MaskImage):
    _write_bytes(path, mask_to_pgm(mask))


def read_mask(path) -> MaskImage:
    return mask_from_pgm(_read_bytes(path), str(path))


# -- discriminator checkpoints --------------------------------------------

def discriminator_to_bytes(d: Discriminator) -> bytes:
    out = [DISC_MAGIC, struct.pack("<II", FORMAT_VERSION, len(d.weights))]
    for w, b in zip(d.weights, d.biases):
        out.append(struct.pack("<II", *w.shape))
        out.append(w.astype("<f4").tobytes())
        out.append(b.astype("<f4").tobytes())
    return b"".join(out)


def discriminator_from_bytes(data: bytes, source="discriminator") -> Discriminator:
    if data[:4] != DISC_MAGIC:
        raise FormatError(f"{source}: bad magic, expected DISC")
    try:
        version, layers = struct.unpack_from("<II", data, 4)
        if version != FORMAT_VERSION:
            raise FormatError(f"{source}: unsupported version {version}")
        pos = 12
        ws, bs = [], []
        for _ in range(layers):
            rows, cols = struct.unpack_from("<II", data, pos)
            pos += 8
            w = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=pos)
            pos += 4 * rows * cols
            b = np.frombuffer(data, dtype="<f4", count=rows, offset=pos)
            pos += 4 * rows
            ws.append(w.astype(np.float64).reshape(rows, cols))
            bs.append(b.astype(np.float64))
    except (struct.error, ValueError) as exc:
        raise FormatError(f"{source}: truncated checkpoint") from exc
    if pos != len(data):
        raise FormatError(f"{source}: {len(data) - pos} trailing bytes")
    n = round(ws[0].shape[1] ** (1 / 3)) * 2
    return Discriminator(n, weights=(ws, bs))


def write_discriminator(path, d: Discriminator):
    _write_bytes(path, discriminator_to_bytes(d))


def read_discriminator(path) -> Discriminator:
    return discriminator_from_bytes(_read_bytes(path), str(path))


# -- logs and point clouds -------------------------------------------------

LOG_FIELDS = ("iter", "reproj_loss", "penalty", "disc_error", "gated", "lr")


def write_log(path, rows):
    """One CSV line per logged iteration in ``LOG_FIELDS`` order, no header."""
    text = "".join(r.csv() + "\n" for r in rows)
    _write_bytes(path, text.encode())


def write_point_cloud(path, rows):
    text = "".join(" ".join(str(int(v)) for v in r) + "\n" for r in rows)
    _write_bytes(path, text.encode())
