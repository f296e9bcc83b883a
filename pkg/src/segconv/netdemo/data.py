"""Datasets for the demo: seeded synthetic digit-like images and an IDX reader."""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from ..exceptions import ParseError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _render_strokes(strokes, size=28, sigma=1.1):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    img = np.zeros((size, size))
    for (y0, x0), (y1, x1) in strokes:
        dy, dx = y1 - y0, x1 - x0
        length2 = dy * dy + dx * dx
        t = ((yy - y0) * dy + (xx - x0) * dx) / length2 if length2 else np.zeros_like(yy)
        t = np.clip(t, 0.0, 1.0)
        d2 = (yy - (y0 + t * dy)) ** 2 + (xx - (x0 + t * dx)) ** 2
        img = np.maximum(img, np.exp(-d2 / (2 * sigma * sigma)))
    return img


def synthetic_digits(n_samples, seed=0, n_classes=10, size=28, noise=0.05):
    """Seeded MNIST-like data: each class is a fixed set of three strokes.

    Samples are the class template shifted by up to two pixels, rescaled in
    intensity and perturbed with Gaussian noise. Returns ``(images, labels)``
    with images of shape ``(n, size, size, 1)`` in [0, 1] (float32).
    """
    rng = np.random.default_rng(seed)
    templates = []
    for _ in range(n_classes):
        strokes = [tuple(map(tuple, rng.uniform(6, size - 7, size=(2, 2)))) for _ in range(3)]
        templates.append(_render_strokes(strokes, size))
    labels = rng.integers(0, n_classes, size=n_samples)
    images = np.empty((n_samples, size, size, 1), dtype=np.float32)
    for n, label in enumerate(labels):
        dy, dx = rng.integers(-2, 3, size=2)
        img = np.roll(templates[label], (dy, dx), axis=(0, 1))
        img = img * rng.uniform(0.8, 1.2) + rng.normal(0.0, noise, size=img.shape)
        images[n, :, :, 0] = np.clip(img, 0.0, 1.0)
    return images, labels.astype(np.int64)


def _open(path):
    path = Path(path)
    data = path.read_bytes()
    if path.suffix == ".gz":
        data = gzip.decompress(data)
    return data


def _parse_idx(data, expected_magic, ndim):
    if len(data) < 4 + 4 * ndim:
        raise ParseError(f"IDX header needs {4 + 4 * ndim} bytes, got {len(data)}", len(data))
    (magic,) = struct.unpack_from(">I", data, 0)
    if magic != expected_magic:
        raise ParseError(f"IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}", 0)
    dims = struct.unpack_from(f">{ndim}I", data, 4)
    start = 4 + 4 * ndim
    count = int(np.prod(dims))
    if len(data) - start < count:
        raise ParseError(
            f"IDX payload has {len(data) - start} bytes, expected {count}", len(data)
        )
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=start).reshape(dims)


def read_idx_images(path):
    """Read an IDX3 ``ubyte`` image file (optionally gzipped) as float32 ``(n, h, w, 1)`` in [0, 1]."""
    raw = _parse_idx(_open(path), IMAGE_MAGIC, 3)
    return (raw.astype(np.float32) / 255.0)[..., None]


def read_idx_labels(path):
    return _parse_idx(_open(path), LABEL_MAGIC, 1).astype(np.int64)


def write_idx_images(path, images):
    """Write ``(n, h, w)`` or ``(n, h, w, 1)`` values in [0, 1] as an IDX3 file."""
    images = np.asarray(images)
    if images.ndim == 4:
        images = images[..., 0]
    raw = np.rint(np.clip(images, 0, 1) * 255).astype(np.uint8)
    header = struct.pack(">I3I", IMAGE_MAGIC, *raw.shape)
    Path(path).write_bytes(header + raw.tobytes())


def write_idx_labels(path, labels):
    raw = np.asarray(labels, dtype=np.uint8)
    Path(path).write_bytes(struct.pack(">II", LABEL_MAGIC, raw.shape[0]) + raw.tobytes())


def load_idx_dataset(images_path, labels_path):
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise ParseError(f"{len(images)} images but {len(labels)} labels")
    return images, labels
