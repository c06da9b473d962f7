"""Data sources: seeded synthetic generators and the IDX image format.

Everything here is reproducible: the same spec and seed always produce the
same bytes.  The Gaussian and Markov generators cover the simulation
setups; the IDX reader ingests the standard handwritten-digit files
(big-endian magics 2051 for images, 2049 for labels).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    CountMismatchError,
    DimensionError,
    FormatError,
    ParamError,
)


@dataclass(frozen=True)
class GaussianSpec:
    """Spherical Gaussian: mean vector plus a common variance scale."""

    mean: tuple
    variance_scale: float = 1.0

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "mean", tuple(float(m) for m in mean))
        if not self.variance_scale > 0:
            raise ParamError(
                f"variance_scale must be positive, got {self.variance_scale}"
            )

    @property
    def k(self) -> int:
        return len(self.mean)

    @property
    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)


def sample_gaussian(spec: GaussianSpec, n: int, seed) -> np.ndarray:
    """n i.i.d. draws as an (n, k) array."""
    if n < 1:
        raise ParamError(f"need at least one sample, got {n}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, spec.k))
    return spec.mean_array + np.sqrt(spec.variance_scale) * z


REGIMES = ("iid_standard_normal", "sqrt_feedback")


@dataclass(frozen=True)
class MarkovSpec:
    """Scalar series regime: independent draws or the square-root feedback
    recursion x_t = sign(x_{t-1}) sqrt(|x_{t-1}|) + w_t."""

    regime: str = "iid_standard_normal"

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ParamError(f"unknown regime {self.regime!r}; valid: {REGIMES}")

    @property
    def order(self) -> int:
        return 0 if self.regime == "iid_standard_normal" else 1


def feedback_map(x):
    """Conditional mean of the sqrt_feedback regime."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.sqrt(np.abs(x))


def sample_markov(spec: MarkovSpec, length: int, seed, x0: float | None = None,
                  noise=None) -> np.ndarray:
    """Generate a scalar series of the given length.

    `noise` replaces the innovation sequence (length-1 values driving steps
    1..length-1) and exists for deterministic tests; the initial sample is
    x0 when supplied, otherwise a standard normal draw.
    """
    if length < 1:
        raise ParamError(f"need at least one sample, got {length}")
    rng = np.random.default_rng(seed)
    if spec.regime == "iid_standard_normal":
        if noise is not None:
            raise ParamError("the noise hook only applies to sqrt_feedback")
        series = rng.standard_normal(length)
        if x0 is not None:
            series[0] = float(x0)
        return series
    first = float(x0) if x0 is not None else float(rng.standard_normal())
    if noise is None:
        w = rng.standard_normal(length - 1)
    else:
        w = np.asarray(noise, dtype=float).ravel()
        if w.size != length - 1:
            raise DimensionError(
                f"noise must supply {length - 1} innovations, got {w.size}"
            )
    series = np.empty(length)
    series[0] = first
    for t in range(1, length):
        series[t] = np.sign(series[t - 1]) * np.sqrt(abs(series[t - 1])) + w[t - 1]
    return series


_IMAGE_MAGIC = 2051
_LABEL_MAGIC = 2049


def _read_exact(fh, count: int, what: str) -> bytes:
    buf = fh.read(count)
    if len(buf) != count:
        raise FormatError(f"truncated file while reading {what}")
    return buf


def read_idx_images(path) -> np.ndarray:
    """Read an IDX image file into an (n, rows*cols) float array in [0, 1]."""
    with open(path, "rb") as fh:
        magic, n, rows, cols = struct.unpack(">iiii", _read_exact(fh, 16, "header"))
        if magic != _IMAGE_MAGIC:
            raise FormatError(f"bad image magic {magic} (expected {_IMAGE_MAGIC})")
        raw = _read_exact(fh, n * rows * cols, "pixels")
    pixels = np.frombuffer(raw, dtype=np.uint8).astype(float) / 255.0
    return pixels.reshape(n, rows * cols)


def read_idx_labels(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic, n = struct.unpack(">ii", _read_exact(fh, 8, "header"))
        if magic != _LABEL_MAGIC:
            raise FormatError(f"bad label magic {magic} (expected {_LABEL_MAGIC})")
        raw = _read_exact(fh, n, "labels")
    return np.frombuffer(raw, dtype=np.uint8).astype(int)


def write_idx_images(path, images) -> None:
    """Inverse of read_idx_images, for round-trip tests and synthetic sets.

    Accepts (n, rows, cols) or flat (n, 784) uint8-convertible arrays.
    """
    images = np.asarray(images)
    if images.ndim == 2:
        side = int(round(images.shape[1] ** 0.5))
        if side * side != images.shape[1]:
            raise DimensionError("flat images must have square pixel counts")
        images = images.reshape(images.shape[0], side, side)
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">iiii", _IMAGE_MAGIC, n, rows, cols))
        fh.write(np.ascontiguousarray(images, dtype=np.uint8).tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">ii", _LABEL_MAGIC, labels.size))
        fh.write(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())


def load_mnist(images_path, labels_path, keep_labels=None, per_class_cap=None):
    """Load an IDX image/label pair, optionally filtering and capping classes.

    Returns (images, labels) with pixels in [0, 1], dataset order preserved.
    The cap keeps the first `per_class_cap` occurrences of each kept label.
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            f"{images.shape[0]} images vs {labels.shape[0]} labels"
        )
    if keep_labels is not None:
        keep = np.isin(labels, sorted(keep_labels))
        images, labels = images[keep], labels[keep]
    if per_class_cap is not None:
        chosen = np.zeros(labels.size, dtype=bool)
        for value in np.unique(labels):
            idx = np.flatnonzero(labels == value)[:per_class_cap]
            chosen[idx] = True
        images, labels = images[chosen], labels[chosen]
    return images, labels
