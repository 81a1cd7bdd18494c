"""Binary PPM (P6) output and the colormaps used for matrix heatmaps."""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np


def diverging_rgb(values: np.ndarray) -> np.ndarray:
    """Map [-1, 1] to blue → white → red; -1 is (0, 0, 255), +1 is (255, 0, 0)."""
    v = np.clip(np.asarray(values, dtype=float), -1.0, 1.0)
    rgb = np.full(v.shape + (3,), 255.0)
    neg = v < 0
    pos = v > 0
    rgb[neg, 0] = 255.0 * (1.0 + v[neg])
    rgb[neg, 1] = 255.0 * (1.0 + v[neg])
    rgb[pos, 1] = 255.0 * (1.0 - v[pos])
    rgb[pos, 2] = 255.0 * (1.0 - v[pos])
    return np.rint(rgb).astype(np.uint8)


def sequential_rgb(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] to white → red (used for confusion matrices)."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    rgb = np.full(v.shape + (3,), 255.0)
    rgb[..., 1] = 255.0 * (1.0 - v)
    rgb[..., 2] = 255.0 * (1.0 - v)
    return np.rint(rgb).astype(np.uint8)


def write_ppm(rgb: np.ndarray, path: Union[str, Path]) -> Path:
    """Write an H×W×3 uint8 image as P6, one pixel per cell."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected H×W×3 image, got shape {rgb.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    height, width = rgb.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    path.write_bytes(header + rgb.tobytes())
    return path


def read_ppm(path: Union[str, Path]) -> np.ndarray:
    """Read back a P6 file written by `write_ppm`."""
    raw = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos].decode("ascii"))
    pos += 1
    if fields[0] != "P6":
        raise ValueError(f"not a binary PPM: {path}")
    width, height = int(fields[1]), int(fields[2])
    return np.frombuffer(raw[pos:pos + width * height * 3], dtype=np.uint8).reshape(height, width, 3)
