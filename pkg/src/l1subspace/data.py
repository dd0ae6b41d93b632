"""Data pipelines: synthetic subspace data with Laplace noise, LIBSVM text
parsing, PGM image IO, block corruption, and dense CSV import/export.

The synthetic generator draws a planted orthonormal basis, Gaussian
coefficients, and additive Laplace noise through an inverse-CDF transform,
then centers each feature row.  Everything is driven by numpy's seeded
generators, so each artifact is a pure function of its parameters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import DataMatrix, StiefelPoint
from .errors import DomainError, NumericError, ParseError, ShapeError
from .linalg import polar_factor

# integer outliers added to corrupted quadrants are uniform on this range
OUTLIER_LOW, OUTLIER_HIGH = 1, 200


@dataclass(frozen=True)
class SyntheticTruth:
    """Planted factors behind a synthetic draw: basis, noise level, seed."""

    Q_true: StiefelPoint
    sigma: float
    seed: int

    @property
    def noiseless(self) -> bool:
        return self.sigma == 0.0


@dataclass(frozen=True)
class LabeledDataset:
    """Dense features (one sample per column) with one integer label each."""

    features: DataMatrix
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.ndim != 1 or labels.shape[0] != self.features.n:
            raise ShapeError(
                f"need one label per sample: {labels.shape} labels for "
                f"{self.features.n} columns"
            )
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True)
class GrayImage:
    """Grayscale image, pixel values in [0, 255], row-major h x w array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=float)
        if px.ndim != 2 or px.size == 0:
            raise ShapeError(f"pixels must be a nonempty 2-d array, got {np.shape(self.pixels)}")
        if not np.all(np.isfinite(px)):
            raise NumericError("pixels contain non-finite values")
        if px.min() < 0.0 or px.max() > 255.0:
            raise DomainError(
                f"pixel range [{px.min():.3f}, {px.max():.3f}] exceeds [0, 255]"
            )
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


# ---------------------------------------------------------------------------
# Laplace noise


def _laplace_from_uniform(b, u):
    # inverse CDF of the zero-mean Laplace law with scale b
    shifted = u - 0.5
    return -b * np.sign(shifted) * np.log1p(-2.0 * np.abs(shifted))


def laplace_sample(b: float, u):
    """Laplace(0, b) samples from uniform draws u in (0, 1), elementwise.

    Uses the inverse CDF -b sign(u - 1/2) ln(1 - 2|u - 1/2|); variance is
    2 b^2.  Scalar u gives a float, an array gives an array.
    """
    if not (isinstance(b, (int, float)) and math.isfinite(b) and b > 0):
        raise DomainError(f"scale b must be positive and finite, got {b!r}")
    try:
        arr = np.asarray(u, dtype=float)
    except (TypeError, ValueError):
        raise DomainError(f"u must be numeric, got {u!r}") from None
    if arr.size == 0 or not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("u must lie strictly inside (0, 1)")
    out = _laplace_from_uniform(float(b), arr)
    return float(out) if np.isscalar(u) or arr.ndim == 0 else out


def gen_synthetic(
    d: int, n: int, k: int, sigma: float, seed: int
) -> tuple[DataMatrix, SyntheticTruth]:
    """Planted-subspace data X = Q_true S + N, centered featurewise.

    Q_true is the polar factor of a d x k Gaussian draw, S is k x n standard
    Gaussian, and N has i.i.d. Laplace entries with standard deviation
    ``sigma`` (scale sigma / sqrt 2).  All randomness comes from one
    generator seeded with ``seed``.
    """
    for name, value in (("d", d), ("n", n), ("k", k)):
        if not (isinstance(value, (int, np.integer)) and value >= 1):
            raise DomainError(f"{name} must be a positive integer, got {value!r}")
    if k > min(d, n):
        raise DomainError(f"k = {k} exceeds min(d, n) = {min(d, n)}")
    if not (isinstance(sigma, (int, float)) and math.isfinite(sigma) and sigma >= 0):
        raise DomainError(f"sigma must be nonnegative and finite, got {sigma!r}")
    rng = np.random.default_rng(seed)
    Q_true = StiefelPoint(polar_factor(rng.standard_normal((d, k))))
    S = rng.standard_normal((k, n))
    X = Q_true.values @ S
    if sigma > 0.0:
        u = rng.random((d, n))
        u = np.where(u == 0.0, 0.5, u)  # the open-interval guard
        X = X + _laplace_from_uniform(sigma / math.sqrt(2.0), u)
    X = X - X.mean(axis=1, keepdims=True)
    return DataMatrix(X, centered=True), SyntheticTruth(Q_true, float(sigma), seed)


def center_features(X: DataMatrix) -> DataMatrix:
    """Subtract each feature row's mean; returns a centered DataMatrix."""
    vals = X.values - X.values.mean(axis=1, keepdims=True)
    return DataMatrix(vals, centered=True)


# ---------------------------------------------------------------------------
# LIBSVM text format


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    with open(source, "r", encoding="ascii") as fh:
        return fh.read()


def parse_libsvm(source, n_features: int | None = None) -> LabeledDataset:
    """Parse LIBSVM text: one sample per line, ``label idx:val ...`` with
    1-based strictly increasing indices.

    ``n_features`` fixes the dimension; otherwise the largest index seen is
    used.  Labels must be integers; real-valued labels are rounded with a
    warning.  Any malformed content raises ParseError naming the line.
    """
    text = _read_text(source)
    labels: list[int] = []
    rows: list[tuple[int, list[tuple[int, float]]]] = []
    max_index = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            raw_label = float(tokens[0])
        except ValueError:
            raise ParseError(f"line {lineno}: bad label {tokens[0]!r}") from None
        label = int(round(raw_label))
        if raw_label != label:
            warnings.warn(
                f"line {lineno}: real-valued label {raw_label} rounded to {label}",
                stacklevel=2,
            )
        entries: list[tuple[int, float]] = []
        prev = 0
        for tok in tokens[1:]:
            idx_str, sep, val_str = tok.partition(":")
            if not sep:
                raise ParseError(f"line {lineno}: expected idx:val, got {tok!r}")
            try:
                idx = int(idx_str)
                val = float(val_str)
            except ValueError:
                raise ParseError(f"line {lineno}: bad feature token {tok!r}") from None
            if idx < 1:
                raise ParseError(f"line {lineno}: index {idx} is not 1-based")
            if idx <= prev:
                raise ParseError(
                    f"line {lineno}: index {idx} does not increase (previous {prev})"
                )
            if not math.isfinite(val):
                raise ParseError(f"line {lineno}: non-finite value in {tok!r}")
            entries.append((idx, val))
            prev = idx
        labels.append(label)
        rows.append((lineno, entries))
        max_index = max(max_index, prev)
    if not rows:
        raise ParseError("no samples found in input")
    d = n_features if n_features is not None else max_index
    if d < 1:
        raise ParseError("cannot infer dimension: no feature indices present")
    dense = np.zeros((d, len(rows)))
    for j, (lineno, entries) in enumerate(rows):
        for idx, val in entries:
            if idx > d:
                raise ParseError(
                    f"line {lineno}: index {idx} exceeds dimension {d}"
                )
            dense[idx - 1, j] = val
    return LabeledDataset(DataMatrix(dense), np.asarray(labels, dtype=int))


def write_libsvm(dataset: LabeledDataset, dest) -> None:
    """Serialize a LabeledDataset to LIBSVM text, dropping zero entries.

    Values are written with full round-trip precision, so parse_libsvm on
    the output reproduces the dense matrix exactly (pass the dimension if a
    trailing feature row can be all zero).
    """
    X = dataset.features.values
    lines = []
    for j in range(X.shape[1]):
        parts = [str(int(dataset.labels[j]))]
        col = X[:, j]
        for i in np.flatnonzero(col):
            parts.append(f"{i + 1}:{float(col[i])!r}")
        lines.append(" ".join(parts))
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="ascii") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# PGM images (P2 ASCII and P5 binary, maxval up to 255)

_WHITESPACE = b" \t\n\r\x0b\x0c"


class _ByteScanner:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _skip_filler(self):
        data, n = self.data, len(self.data)
        while self.pos < n:
            b = data[self.pos]
            if b == 0x23:  # '#' comment runs to end of line
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            elif b in _WHITESPACE:
                self.pos += 1
            else:
                break

    def token(self) -> bytes:
        self._skip_filler()
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos] not in _WHITESPACE:
            self.pos += 1
        if start == self.pos:
            raise ParseError("truncated header")
        return data[start : self.pos]

    def int_token(self, what: str) -> int:
        tok = self.token()
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"bad {what}: {tok!r}") from None


def read_pgm(source) -> GrayImage:
    """Read a PGM image (magic P2 or P5, maxval at most 255)."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    scan = _ByteScanner(data)
    magic = scan.token()
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"unsupported magic {magic!r}, need P2 or P5")
    width = scan.int_token("width")
    height = scan.int_token("height")
    maxval = scan.int_token("maxval")
    if width < 1 or height < 1:
        raise ParseError(f"bad dimensions {width} x {height}")
    if not (0 < maxval <= 255):
        raise ParseError(f"maxval {maxval} outside (0, 255]")
    count = width * height
    if magic == b"P2":
        values = []
        for _ in range(count):
            try:
                values.append(scan.int_token("pixel"))
            except ParseError:
                raise ParseError(
                    f"truncated pixel data: expected {count} values, got {len(values)}"
                ) from None
        pixels = np.asarray(values, dtype=float)
    else:
        start = scan.pos + 1  # exactly one whitespace byte after maxval
        payload = data[start : start + count]
        if len(payload) < count:
            raise ParseError(
                f"truncated pixel data: expected {count} bytes, got {len(payload)}"
            )
        pixels = np.frombuffer(payload, dtype=np.uint8).astype(float)
    if pixels.max(initial=0.0) > maxval:
        raise ParseError(f"pixel value exceeds maxval {maxval}")
    return GrayImage(pixels.reshape(height, width))


def write_pgm(image: GrayImage, dest, binary: bool = True) -> None:
    """Write a PGM file, P5 when binary else P2; pixels round to integers."""
    px = np.rint(image.pixels).astype(np.uint8)
    header = f"P5\n{image.width} {image.height}\n255\n" if binary else \
        f"P2\n{image.width} {image.height}\n255\n"
    if binary:
        blob = header.encode("ascii") + px.tobytes()
    else:
        body = "\n".join(" ".join(str(v) for v in row) for row in px)
        blob = (header + body + "\n").encode("ascii")
    if hasattr(dest, "write"):
        dest.write(blob)
    else:
        with open(dest, "wb") as fh:
            fh.write(blob)


# ---------------------------------------------------------------------------
# block corruption and image stacking


def _crop_to_multiple(pixels, multiple):
    h, w = pixels.shape
    H = (h // multiple) * multiple
    W = (w // multiple) * multiple
    if H < multiple or W < multiple:
        raise ShapeError(
            f"image {h} x {w} too small to hold a {multiple}-divisible grid"
        )
    if (H, W) != (h, w):
        warnings.warn(
            f"cropping {h} x {w} image to {H} x {W} for an exact 3 x 3 grid",
            stacklevel=3,
        )
    top = (h - H) // 2
    left = (w - W) // 2
    return pixels[top : top + H, left : left + W]


def crop_to_grid(image: GrayImage) -> GrayImage:
    """Center-crop so both sides divide by 6, matching the corruption grid.

    Identity when the image already fits; warns when pixels are dropped.
    """
    return GrayImage(_crop_to_multiple(image.pixels, 6))


def add_block_outliers(image: GrayImage, block_index: int, seed) -> np.ndarray:
    """Raw corruption stage: add integer outliers uniform on
    {OUTLIER_LOW..OUTLIER_HIGH} to the top-left and bottom-right quadrants of
    one block of the 3 x 3 grid (row-major ``block_index`` in 1..9).

    Returns a plain float array; values may exceed 255.  Images whose sides
    are not divisible by 6 are center-cropped with a warning so the grid and
    quadrants split exactly.
    """
    if not (isinstance(block_index, (int, np.integer)) and 1 <= block_index <= 9):
        raise DomainError(f"block_index must be in 1..9, got {block_index!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    px = _crop_to_multiple(image.pixels, 6).copy()
    bh, bw = px.shape[0] // 3, px.shape[1] // 3
    r, c = divmod(block_index - 1, 3)
    block = px[r * bh : (r + 1) * bh, c * bw : (c + 1) * bw]
    qh, qw = bh // 2, bw // 2
    block[:qh, :qw] += rng.integers(OUTLIER_LOW, OUTLIER_HIGH + 1, size=(qh, qw))
    block[qh:, qw:] += rng.integers(OUTLIER_LOW, OUTLIER_HIGH + 1, size=(bh - qh, bw - qw))
    return px


def _rescale_to_range(values, lo=0.0, hi=255.0):
    vmin = float(values.min())
    vmax = float(values.max())
    if vmax == vmin:
        return values.copy()
    return (values - vmin) * ((hi - lo) / (vmax - vmin)) + lo


def corrupt_image(image: GrayImage, block_index: int, seed) -> GrayImage:
    """Corrupt half the pixels of one grid block, then affinely rescale the
    whole image back to [0, 255] (identity for a constant image)."""
    raw = add_block_outliers(image, block_index, seed)
    return GrayImage(_rescale_to_range(raw))


def image_columns(images: list[GrayImage]) -> np.ndarray:
    """Column-major vectorization of equally sized images, one per column."""
    if not images:
        raise ShapeError("need at least one image")
    shape = images[0].pixels.shape
    for img in images:
        if img.pixels.shape != shape:
            raise ShapeError(
                f"image sizes differ: {img.pixels.shape} vs {shape}"
            )
    return np.column_stack([img.pixels.ravel(order="F") for img in images])


def stack_images(images: list[GrayImage]) -> DataMatrix:
    """Stack 9 equally sized images into a centered (h w) x 9 data matrix."""
    if len(images) != 9:
        raise ShapeError(f"expected exactly 9 images, got {len(images)}")
    return center_features(DataMatrix(image_columns(images)))


def unstack_images(values, height: int, width: int) -> list[GrayImage]:
    """Inverse of image_columns: columns back to height x width images."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 2 or vals.shape[0] != height * width:
        raise ShapeError(
            f"need {height * width} rows to unstack {height} x {width} images, "
            f"got shape {vals.shape}"
        )
    return [
        GrayImage(vals[:, j].reshape((height, width), order="F"))
        for j in range(vals.shape[1])
    ]


# ---------------------------------------------------------------------------
# dense CSV matrices


def write_csv_matrix(values, dest) -> None:
    """Write a dense matrix as CSV, one feature row per line, full precision."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 2 or vals.size == 0:
        raise ShapeError(f"expected a nonempty 2-d array, got shape {np.shape(values)}")
    text = "\n".join(",".join(repr(float(v)) for v in row) for row in vals) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="ascii") as fh:
            fh.write(text)


def read_csv_matrix(source) -> np.ndarray:
    """Read a dense CSV matrix written by write_csv_matrix."""
    text = _read_text(source)
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise ParseError(f"line {lineno}: bad numeric value") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(
                f"line {lineno}: expected {width} columns, got {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise ParseError("no rows found in input")
    return np.asarray(rows, dtype=float)
