"""Dataset ingestion, synthetic generators and result writers."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from skimage import color as skcolor

from .exceptions import DataFormatError, InvalidInputError, InvalidParameterError
from .isolation import as_dataset

RING_G_VERSION = "ring-g/1"

# Ring-G geometry (generator version ring-g/1).
RING_G_CENTRAL_SIGMA = 0.12
RING_G_INNER = (0.8, 1.5)
RING_G_OUTER = (3.2, 5.6)
RING_G_SIDE_CENTRE = (8.4, 0.0)
RING_G_SIDE_SIGMA = 0.4

NOISE_RGB = (255, 0, 255)


@dataclass
class LabeledDataset:
    """Points with optional ground-truth classes (``-1`` marks unlabeled points)."""

    data: np.ndarray
    truth: np.ndarray | None = None

    def __post_init__(self):
        self.data = as_dataset(self.data)
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=np.int64)
            if self.truth.shape != (self.data.shape[0],):
                raise InvalidInputError(
                    f"truth has {self.truth.shape[0]} labels for {self.data.shape[0]} points"
                )

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def load_csv(path, label_col: str | int | None = None) -> LabeledDataset:
    """Read comma-separated numeric rows.

    Args:
        path: CSV file (UTF-8, no header).  Blank lines are skipped.
        label_col: ``"last"``, ``"first"`` or a column index to split off as
            integer ground truth; ``None`` for unlabeled data.

    Raises:
        DataFormatError: On unreadable files, ragged rows or non-numeric cells;
            the message names the offending line.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"cannot read file: {exc}", path=path) from exc
    return parse_csv(text, label_col=label_col, source=path)


def parse_csv(text: str, label_col=None, source=None) -> LabeledDataset:
    rows = []
    width = None
    lines = []
    for lineno, record in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not record or all(not cell.strip() for cell in record):
            continue
        if width is None:
            width = len(record)
        elif len(record) != width:
            raise DataFormatError(f"expected {width} columns, found {len(record)}", path=source, line=lineno)
        try:
            rows.append([float(cell) for cell in record])
        except ValueError:
            bad = next(c for c in record if not _is_float(c))
            raise DataFormatError(f"non-numeric cell {bad.strip()!r}", path=source, line=lineno) from None
        lines.append(lineno)
    if not rows:
        raise DataFormatError("no data rows", path=source)

    table = np.asarray(rows, dtype=np.float64)
    bad = ~np.isfinite(table).all(axis=1)
    if bad.any():
        raise DataFormatError("non-finite value", path=source, line=lines[int(np.argmax(bad))])
    if label_col is None:
        return LabeledDataset(table)

    col = _resolve_column(label_col, table.shape[1])
    if table.shape[1] < 2:
        raise DataFormatError("a label column needs at least one feature column", path=source)
    labels = table[:, col]
    if not np.all(labels == np.round(labels)):
        row = int(np.argmax(labels != np.round(labels)))
        raise DataFormatError("label is not an integer", path=source, line=lines[row])
    features = np.delete(table, col, axis=1)
    return LabeledDataset(features, labels.astype(np.int64))


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _resolve_column(label_col, width: int) -> int:
    if label_col == "last":
        return width - 1
    if label_col == "first":
        return 0
    col = int(label_col)
    if col < 0:
        col += width
    if not 0 <= col < width:
        raise InvalidParameterError(f"label column {label_col} out of range for {width} columns")
    return col


def write_csv(path, data, truth=None) -> None:
    """Write points (and optionally a trailing label column) without a header."""
    X = np.asarray(data, dtype=np.float64)
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for i, row in enumerate(X):
            cells = [repr(float(v)) for v in row]
            if truth is not None:
                cells.append(str(int(truth[i])))
            writer.writerow(cells)


def write_labels(path, labels) -> None:
    """Write ``index,label`` rows under a header; noise is ``-1``."""
    labels = np.asarray(getattr(labels, "labels", labels))
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,label\n")
        for i, lab in enumerate(labels):
            fh.write(f"{i},{int(lab)}\n")


def read_labels(path) -> np.ndarray:
    """Read a file written by :func:`write_labels`."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "index,label":
        raise DataFormatError("missing 'index,label' header", path=path, line=1)
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        try:
            idx, lab = int(parts[0]), int(parts[1])
        except (ValueError, IndexError):
            raise DataFormatError(f"bad row {line!r}", path=path, line=lineno) from None
        if idx != len(out):
            raise DataFormatError(f"expected index {len(out)}, found {idx}", path=path, line=lineno)
        out.append(lab)
    return np.asarray(out, dtype=np.int64)


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def _annulus(rng, n, r_in, r_out):
    # uniform in area: radius^2 uniform between the squared bounds
    r = np.sqrt(rng.uniform(r_in**2, r_out**2, n))
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def generate_ring_g(n_per_cluster=500, noise_fraction=0.0, seed=0) -> LabeledDataset:
    """Two concentric uniform rings and two Gaussian clusters in the plane.

    Classes: 0 is a Gaussian at the origin inside both rings, 1 the inner
    ring, 2 the outer ring, 3 a Gaussian to the right of the outer ring.
    ``noise_fraction`` adds that fraction of ``4 * n_per_cluster`` uniform
    background points labeled ``-1``.  Geometry is fixed by
    :data:`RING_G_VERSION`.
    """
    if n_per_cluster < 50:
        raise InvalidParameterError(f"n_per_cluster must be >= 50, got {n_per_cluster}")
    if not 0.0 <= noise_fraction < 1.0:
        raise InvalidParameterError(f"noise_fraction must be in [0,1), got {noise_fraction}")
    rng = np.random.default_rng(seed)
    m = n_per_cluster
    parts = [
        rng.normal(0.0, RING_G_CENTRAL_SIGMA, (m, 2)),
        _annulus(rng, m, *RING_G_INNER),
        _annulus(rng, m, *RING_G_OUTER),
        rng.normal(RING_G_SIDE_CENTRE, RING_G_SIDE_SIGMA, (m, 2)),
    ]
    truth = np.repeat(np.arange(4), m)
    n_noise = int(round(noise_fraction * 4 * m))
    if n_noise:
        lo = np.array([-RING_G_OUTER[1] - 1.0, -RING_G_OUTER[1] - 1.0])
        hi = np.array([RING_G_SIDE_CENTRE[0] + 3.0, RING_G_OUTER[1] + 1.0])
        parts.append(rng.uniform(lo, hi, (n_noise, 2)))
        truth = np.concatenate([truth, np.full(n_noise, -1)])
    return LabeledDataset(np.vstack(parts), truth)


def generate_gaussian_mixture(k=4, n_per_cluster=100, spread=0.1, seed=0, d=2) -> LabeledDataset:
    """``k`` isotropic Gaussian blobs with centres on a jittered unit grid.

    Centres sit on a ``ceil(sqrt(k))``-wide grid with unit spacing, each
    displaced by up to 0.15 per axis; ``spread`` is the per-axis standard
    deviation, so blobs overlap noticeably once it nears 0.2.
    """
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if n_per_cluster < 1:
        raise InvalidParameterError(f"n_per_cluster must be >= 1, got {n_per_cluster}")
    rng = np.random.default_rng(seed)
    centres = _grid_centres(rng, k, d)
    X = np.vstack([rng.normal(c, spread, (n_per_cluster, d)) for c in centres])
    truth = np.repeat(np.arange(k), n_per_cluster)
    return LabeledDataset(X, truth)


def _grid_centres(rng, k, d):
    side = int(np.ceil(np.sqrt(k)))
    grid = np.array([(i % side, i // side) for i in range(k)], dtype=np.float64)
    centres = np.zeros((k, d))
    w = min(2, d)
    centres[:, :w] = grid[:, :w]
    return centres + rng.uniform(-0.15, 0.15, centres.shape)


def mixture_centres(k, seed=0, d=2) -> np.ndarray:
    """Blob centres used by :func:`generate_gaussian_mixture` for the same ``(k, seed, d)``."""
    return _grid_centres(np.random.default_rng(seed), k, d)


# ---------------------------------------------------------------------------
# Images
# ---------------------------------------------------------------------------

@dataclass
class ImageTensor:
    """An image as one CIELAB point per pixel, row-major."""

    width: int
    height: int
    pixels: np.ndarray  # (height * width, 3) of (L*, a*, b*)

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.float64)
        if self.pixels.shape != (self.width * self.height, 3):
            raise InvalidInputError(
                f"expected {self.width * self.height} Lab pixels, got array of shape {self.pixels.shape}"
            )
        if not np.all(np.isfinite(self.pixels)):
            raise InvalidInputError("image has non-finite channel values")


def srgb_to_lab(rgb) -> np.ndarray:
    """8-bit sRGB triples (..., 3) to CIELAB under the D65 white point."""
    rgb = np.asarray(rgb, dtype=np.float64) / 255.0
    return skcolor.rgb2lab(rgb, illuminant="D65", channel_axis=-1)


def lab_to_srgb(lab) -> np.ndarray:
    """CIELAB (..., 3) back to 8-bit sRGB, clipped to the gamut."""
    lab = np.asarray(lab, dtype=np.float64)
    with warnings.catch_warnings():
        # out-of-gamut colours are clipped; the warning adds nothing here
        warnings.simplefilter("ignore")
        rgb = skcolor.lab2rgb(lab, illuminant="D65", channel_axis=-1)
    return np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)


def load_image_cielab(path) -> ImageTensor:
    """Read an 8-bit sRGB PNG and convert every pixel to CIELAB."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise DataFormatError(f"unsupported image format {im.format}", path=path)
            if im.mode not in ("RGB", "RGBA", "L", "LA", "P"):
                raise DataFormatError(f"unsupported PNG mode {im.mode} (need 8-bit)", path=path)
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError) as exc:
        raise DataFormatError(f"cannot read image: {exc}", path=path) from exc
    h, w, _ = rgb.shape
    return ImageTensor(w, h, srgb_to_lab(rgb).reshape(-1, 3))


def write_png(path, rgb: np.ndarray) -> None:
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), mode="RGB").save(Path(path), format="PNG")


def segment_colours(image: ImageTensor, labels) -> np.ndarray:
    """(height, width, 3) sRGB rendering: each cluster in its mean Lab colour, noise magenta."""
    labels = np.asarray(getattr(labels, "labels", labels))
    if labels.shape[0] != image.pixels.shape[0]:
        raise InvalidInputError(f"{labels.shape[0]} labels for {image.pixels.shape[0]} pixels")
    out = np.empty((labels.shape[0], 3), dtype=np.uint8)
    out[:] = NOISE_RGB
    for j in np.unique(labels[labels >= 0]):
        mask = labels == j
        out[mask] = lab_to_srgb(image.pixels[mask].mean(axis=0))
    return out.reshape(image.height, image.width, 3)


def write_segmented_image(path, image: ImageTensor, labels, masks_dir=None) -> list[Path]:
    """Write the segmented rendering and, optionally, one black/white mask per cluster.

    Returns the paths written.
    """
    path = Path(path)
    labels = np.asarray(getattr(labels, "labels", labels))
    written = []
    try:
        write_png(path, segment_colours(image, labels))
        written.append(path)
        if masks_dir is not None:
            masks_dir = Path(masks_dir)
            masks_dir.mkdir(parents=True, exist_ok=True)
            for j in np.unique(labels[labels >= 0]):
                mask = (labels == j).reshape(image.height, image.width)
                p = masks_dir / f"cluster_{int(j):03d}.png"
                Image.fromarray((mask * 255).astype(np.uint8), mode="L").save(p, format="PNG")
                written.append(p)
    except OSError as exc:
        raise OSError(f"{path}: {exc}") from exc
    return written


def two_tone_image(width=200, height=150, colours=((200, 60, 40), (40, 90, 190)), jitter=2, seed=0) -> np.ndarray:
    """Synthetic sRGB test image: left and right halves in two colours plus small noise."""
    rng = np.random.default_rng(seed)
    img = np.empty((height, width, 3), dtype=np.int64)
    img[:, : width // 2] = colours[0]
    img[:, width // 2 :] = colours[1]
    img += rng.integers(-jitter, jitter + 1, img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)
