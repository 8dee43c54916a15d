"""CSV and image I/O, synthetic generators and result writers."""

import numpy as np
import pytest
from PIL import Image

from pskc.data import (
    NOISE_RGB,
    RING_G_INNER,
    RING_G_OUTER,
    ImageTensor,
    LabeledDataset,
    generate_gaussian_mixture,
    generate_ring_g,
    lab_to_srgb,
    load_csv,
    load_image_cielab,
    mixture_centres,
    parse_csv,
    read_labels,
    segment_colours,
    srgb_to_lab,
    two_tone_image,
    write_csv,
    write_labels,
    write_png,
    write_segmented_image,
)
from pskc.exceptions import DataFormatError, InvalidInputError, InvalidParameterError


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def test_parse_plain_rows():
    ds = parse_csv("1.0,2.0\n3.0,4.0")
    assert (ds.n, ds.d) == (2, 2)
    assert ds.truth is None


def test_parse_with_last_label_column():
    ds = parse_csv("1.0,2.0\n3.0,4.0", label_col="last")
    assert ds.d == 1
    assert ds.truth.tolist() == [2, 4]
    assert ds.data[:, 0].tolist() == [1.0, 3.0]


def test_parse_first_and_index_columns():
    text = "0,1.5,2.5\n1,3.5,4.5\n"
    assert parse_csv(text, label_col="first").truth.tolist() == [0, 1]
    assert parse_csv(text, label_col=0).data.tolist() == [[1.5, 2.5], [3.5, 4.5]]
    with pytest.raises(InvalidParameterError):
        parse_csv(text, label_col=7)


def test_non_numeric_cell_names_the_line():
    with pytest.raises(DataFormatError, match="line 1: non-numeric cell 'abc'"):
        parse_csv("abc,1.0\n2.0,3.0")


def test_ragged_row_names_the_line(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("1,2\n3,4\n5\n")
    with pytest.raises(DataFormatError) as info:
        load_csv(p)
    assert info.value.line == 3
    assert str(info.value).startswith(f"{p}:3:")


@pytest.mark.parametrize(
    "text,match",
    [("", "no data"), ("1,nan\n", "non-finite"), ("1.0,2.5\n", "not an integer")],
)
def test_other_csv_errors(text, match):
    label = "last" if "2.5" in text else None
    with pytest.raises(DataFormatError, match=match):
        parse_csv(text, label_col=label)


def test_unreadable_file(tmp_path):
    with pytest.raises(DataFormatError, match="cannot read"):
        load_csv(tmp_path / "missing.csv")


def test_blank_lines_are_skipped():
    assert parse_csv("1,2\n\n3,4\n").n == 2


def test_csv_round_trip(tmp_path, rng):
    X = rng.normal(size=(30, 3))
    truth = rng.integers(-1, 4, 30)
    p = tmp_path / "d.csv"
    write_csv(p, X, truth)
    back = load_csv(p, label_col="last")
    np.testing.assert_array_equal(back.data, X)
    np.testing.assert_array_equal(back.truth, truth)


def test_labels_file_format(tmp_path):
    p = tmp_path / "labels.csv"
    write_labels(p, np.array([0, 1, -1]))
    assert p.read_text() == "index,label\n0,0\n1,1\n2,-1\n"
    np.testing.assert_array_equal(read_labels(p), [0, 1, -1])


def test_read_labels_errors(tmp_path):
    p = tmp_path / "labels.csv"
    p.write_text("0,0\n")
    with pytest.raises(DataFormatError, match="header"):
        read_labels(p)
    p.write_text("index,label\n0,0\n2,1\n")
    with pytest.raises(DataFormatError, match="expected index 1"):
        read_labels(p)


def test_labeled_dataset_length_check():
    with pytest.raises(InvalidInputError):
        LabeledDataset(np.zeros((3, 2)), [0, 1])


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def test_ring_g_counts():
    ds = generate_ring_g(500, 0.0, seed=7)
    assert ds.n == 2000
    assert np.bincount(ds.truth).tolist() == [500] * 4


def test_ring_g_geometry():
    ds = generate_ring_g(300, 0.0, seed=1)
    r = np.linalg.norm(ds.data, axis=1)
    inner, outer = r[ds.truth == 1], r[ds.truth == 2]
    assert RING_G_INNER[0] <= inner.min() and inner.max() <= RING_G_INNER[1]
    assert RING_G_OUTER[0] <= outer.min() and outer.max() <= RING_G_OUTER[1]


def test_ring_g_seeds():
    a, b = generate_ring_g(100, seed=1), generate_ring_g(100, seed=2)
    assert not np.array_equal(a.data, b.data)
    np.testing.assert_array_equal(a.truth, b.truth)
    np.testing.assert_array_equal(a.data, generate_ring_g(100, seed=1).data)


def test_ring_g_noise():
    ds = generate_ring_g(100, noise_fraction=0.1, seed=0)
    assert ds.n == 440
    assert np.count_nonzero(ds.truth == -1) == 40


def test_ring_g_rejects_small_clusters():
    with pytest.raises(InvalidParameterError):
        generate_ring_g(49)
    with pytest.raises(InvalidParameterError):
        generate_ring_g(100, noise_fraction=1.0)


def test_mixture_two_separable_blobs():
    ds = generate_gaussian_mixture(2, 100, 0.02, seed=1)
    assert np.bincount(ds.truth).tolist() == [100, 100]
    a, b = ds.data[ds.truth == 0], ds.data[ds.truth == 1]
    gap = np.linalg.norm(a.mean(axis=0) - b.mean(axis=0))
    assert gap > 10 * max(a.std(axis=0).max(), b.std(axis=0).max())


def test_mixture_single_class():
    ds = generate_gaussian_mixture(1, 10, 0.5, seed=1)
    assert ds.n == 10 and set(ds.truth) == {0}


def test_s3_like_mixture_overlaps():
    # nearest-centre assignment misclassifies a small but non-zero share
    ds = generate_gaussian_mixture(15, 300, 0.2, seed=1)
    centres = mixture_centres(15, seed=1)
    d = np.linalg.norm(ds.data[:, None, :] - centres[None], axis=2)
    confusion = np.mean(d.argmin(axis=1) != ds.truth)
    assert 0.01 < confusion < 0.05


def test_mixture_higher_dimension():
    ds = generate_gaussian_mixture(3, 20, 0.1, seed=0, d=5)
    assert ds.data.shape == (60, 5)
    with pytest.raises(InvalidParameterError):
        generate_gaussian_mixture(0)


# ---------------------------------------------------------------------------
# CIELAB
# ---------------------------------------------------------------------------

def test_reference_colours():
    np.testing.assert_allclose(srgb_to_lab([255, 255, 255]), [100, 0, 0], atol=0.1)
    np.testing.assert_allclose(srgb_to_lab([0, 0, 0]), [0, 0, 0], atol=1e-9)
    grey = srgb_to_lab([119, 119, 119])
    np.testing.assert_allclose(grey[1:], [0, 0], atol=0.01)
    assert 49 < grey[0] < 51


def test_reference_primary_red():
    # standard D65 value for sRGB red: (53.24, 80.09, 67.20)
    np.testing.assert_allclose(srgb_to_lab([255, 0, 0]), [53.24, 80.09, 67.20], atol=0.05)


def test_round_trip_within_one_level():
    rgb = np.random.default_rng(0).integers(0, 256, size=(4096, 3))
    back = lab_to_srgb(srgb_to_lab(rgb)).astype(int)
    assert np.abs(back - rgb).max() <= 1


def _png(path, arr, mode=None):
    Image.fromarray(arr, mode=mode).save(path, format="PNG")
    return path


def test_load_image(tmp_path):
    arr = np.zeros((2, 3, 3), dtype=np.uint8)
    arr[0, 1] = 255
    im = load_image_cielab(_png(tmp_path / "a.png", arr))
    assert (im.width, im.height) == (3, 2)
    assert im.pixels.shape == (6, 3)
    np.testing.assert_allclose(im.pixels[1], [100, 0, 0], atol=0.1)
    np.testing.assert_allclose(im.pixels[0], [0, 0, 0], atol=1e-9)


def test_load_rejects_other_formats(tmp_path):
    p = tmp_path / "a.jpg"
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(p, format="JPEG")
    with pytest.raises(DataFormatError, match="format"):
        load_image_cielab(p)
    bad = tmp_path / "b.png"
    bad.write_bytes(b"not a png")
    with pytest.raises(DataFormatError, match="b.png"):
        load_image_cielab(bad)


def test_load_rejects_16_bit(tmp_path):
    p = _png(tmp_path / "deep.png", np.zeros((4, 4), dtype=np.uint16) + 1000)
    with pytest.raises(DataFormatError, match="mode"):
        load_image_cielab(p)


def test_image_tensor_shape_check():
    with pytest.raises(InvalidInputError):
        ImageTensor(2, 2, np.zeros((3, 3)))


# ---------------------------------------------------------------------------
# Segmented output
# ---------------------------------------------------------------------------

def test_uniform_single_cluster_is_constant(tmp_path):
    img = ImageTensor(4, 3, np.tile(srgb_to_lab([10, 200, 30]), (12, 1)))
    out = segment_colours(img, np.zeros(12, dtype=int))
    assert len({tuple(px) for px in out.reshape(-1, 3)}) == 1
    np.testing.assert_allclose(out[0, 0], [10, 200, 30], atol=1)


def test_two_tone_segmentation_has_two_colours(tmp_path):
    rgb = two_tone_image(20, 10, jitter=0)
    img = ImageTensor(20, 10, srgb_to_lab(rgb).reshape(-1, 3))
    labels = np.tile(np.repeat([0, 1], 10), 10)
    labels[0] = -1
    paths = write_segmented_image(tmp_path / "seg.png", img, labels, masks_dir=tmp_path / "masks")
    out = np.asarray(Image.open(paths[0]))
    colours = {tuple(px) for px in out.reshape(-1, 3)} - {NOISE_RGB}
    assert len(colours) == 2
    assert tuple(out[0, 0]) == NOISE_RGB
    assert [p.name for p in paths[1:]] == ["cluster_000.png", "cluster_001.png"]
    mask = np.asarray(Image.open(paths[1]))
    assert mask[5, 3] == 255 and mask[5, 15] == 0


def test_label_count_mismatch():
    img = ImageTensor(2, 1, np.zeros((2, 3)))
    with pytest.raises(InvalidInputError):
        segment_colours(img, [0, 1, 1])


def test_write_errors_carry_the_path(tmp_path):
    img = ImageTensor(2, 1, np.zeros((2, 3)))
    target = tmp_path / "no" / "such" / "dir.png"
    with pytest.raises(OSError, match="dir.png"):
        write_segmented_image(target, img, [0, 0])


def test_two_tone_image_shape(tmp_path):
    rgb = two_tone_image()
    assert rgb.shape == (150, 200, 3) and rgb.dtype == np.uint8
    p = tmp_path / "tt.png"
    write_png(p, rgb)
    assert load_image_cielab(p).pixels.shape == (30000, 3)
