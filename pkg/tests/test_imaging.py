import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp
from PIL import Image

from handgeom import imaging
from handgeom.errors import EmptyForeground, ImageTooSmall, InvalidThreshold, UnsupportedFormat


def write_pgm(path, arr):
    arr = np.asarray(arr, dtype=np.uint8)
    path.write_bytes(f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode() + arr.tobytes())
    return path


@pytest.mark.parametrize("value,expected", [(255, 1.0), (0, 0.0), (18, 18 / 255)])
def test_load_pgm_scales_by_255(tmp_path, value, expected):
    img = imaging.load_image(write_pgm(tmp_path / "a.pgm", np.full((40, 50), value)))
    assert (img.width, img.height) == (50, 40)
    assert np.all(img.pixels == expected)


def test_pixel_18_straddles_threshold(tmp_path):
    img = imaging.load_image(write_pgm(tmp_path / "a.pgm", np.full((32, 32), 18)))
    assert imaging.binarize(img).bits.all()
    img17 = imaging.load_image(write_pgm(tmp_path / "b.pgm", np.full((32, 32), 17)))
    assert not imaging.binarize(img17).bits.any()


def test_load_bmp_roundtrip(tmp_path):
    arr = np.random.default_rng(0).integers(0, 256, (37, 41), dtype=np.uint8)
    Image.fromarray(arr, mode="L").save(tmp_path / "x.bmp")
    img = imaging.load_image(tmp_path / "x.bmp")
    np.testing.assert_array_equal(np.rint(img.pixels * 255).astype(np.uint8), arr)


def test_load_rejects_colour_and_png(tmp_path):
    Image.new("RGB", (40, 40)).save(tmp_path / "c.bmp")
    Image.new("L", (40, 40)).save(tmp_path / "g.png")
    for name in ("c.bmp", "g.png"):
        with pytest.raises(UnsupportedFormat):
            imaging.load_image(tmp_path / name)
    (tmp_path / "junk.pgm").write_bytes(b"not an image")
    with pytest.raises(UnsupportedFormat):
        imaging.load_image(tmp_path / "junk.pgm")


def test_load_too_small_and_missing(tmp_path):
    with pytest.raises(ImageTooSmall):
        imaging.load_image(write_pgm(tmp_path / "s.pgm", np.zeros((31, 40))))
    with pytest.raises(OSError):
        imaging.load_image(tmp_path / "missing.pgm")


def test_save_pgm_roundtrip(tmp_path):
    px = np.random.default_rng(1).integers(0, 256, (33, 35)) / 255.0
    imaging.save_pgm(imaging.GrayImage(px), tmp_path / "o.pgm")
    np.testing.assert_allclose(imaging.load_image(tmp_path / "o.pgm").pixels, px, atol=1e-12)
    mask = imaging.BinaryImage(px > 0.5)
    imaging.save_pgm(mask, tmp_path / "m.pgm")
    back = imaging.load_image(tmp_path / "m.pgm").pixels
    assert set(np.unique(back)) <= {0.0, 1.0}
    np.testing.assert_array_equal(back == 1.0, mask.bits)


def test_lowpass_constant_and_impulse():
    c = imaging.GrayImage(np.full((40, 40), 0.3))
    np.testing.assert_allclose(imaging.lowpass_filter(c, 2).pixels, 0.3, atol=1e-15)
    px = np.zeros((41, 41))
    px[20, 20] = 1.0
    out = imaging.lowpass_filter(imaging.GrayImage(px), 1).pixels
    np.testing.assert_allclose(out[19:22, 19:22], 1 / 9, atol=1e-15)
    assert out.sum() == pytest.approx(1.0)
    assert np.count_nonzero(out > 1e-15) == 9


def naive_box(px, r):
    h, w = px.shape
    out = np.empty_like(px)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    acc += px[min(max(y + dy, 0), h - 1), min(max(x + dx, 0), w - 1)]
            out[y, x] = acc / (2 * r + 1) ** 2
    return out


@pytest.mark.parametrize("r", [1, 2, 3])
def test_lowpass_matches_direct_convolution(r):
    px = np.random.default_rng(r).random((34, 36))
    got = imaging.lowpass_filter(imaging.GrayImage(px), r).pixels
    np.testing.assert_allclose(got, naive_box(px, r), atol=1e-12, rtol=0)


def test_lowpass_bad_radius():
    with pytest.raises(ValueError):
        imaging.lowpass_filter(imaging.GrayImage(np.zeros((32, 32))), 0)


images = hnp.arrays(np.float64, (32, 33), elements=st.floats(0, 1))


@settings(max_examples=30, deadline=None)
@given(images, st.integers(1, 4))
def test_lowpass_stays_within_input_range(px, r):
    out = imaging.lowpass_filter(imaging.GrayImage(px), r).pixels
    assert out.max() <= px.max() and out.min() >= px.min()


def test_binarize_examples():
    px = np.zeros((32, 32))
    px[0, 0], px[0, 1], px[0, 2] = 0.5, 0.07, 0.0699999
    b = imaging.binarize(imaging.GrayImage(px), 0.07).bits
    assert b[0, 0] and b[0, 1] and not b[0, 2] and not b[5, 5]
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(InvalidThreshold):
            imaging.binarize(imaging.GrayImage(px), bad)


def test_binarize_invert():
    px = np.full((32, 32), 0.95)
    px[0, 0] = 0.02
    assert imaging.binarize(imaging.GrayImage(px)).bits.sum() == 32 * 32 - 1
    inv = imaging.binarize(imaging.GrayImage(px), invert=True).bits
    assert inv[0, 0] and inv.sum() == 1


@settings(max_examples=30, deadline=None)
@given(images, st.floats(0.01, 0.99))
def test_binarize_idempotent(px, thr):
    once = imaging.binarize(imaging.GrayImage(px), thr)
    twice = imaging.binarize(imaging.GrayImage(once.bits.astype(np.float64)), thr)
    np.testing.assert_array_equal(once.bits, twice.bits)


def test_log_kernels_shape():
    g, d2 = imaging.log_kernels(2.0)
    assert g.size == d2.size == 13
    assert g.sum() == pytest.approx(1.0)
    assert abs(d2.sum()) < 1e-15


def boundary_pixels(mask):
    """Foreground pixels with a background 4-neighbour (replicated border)."""
    p = np.pad(mask, 1, mode="edge")
    inner = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return mask & ~inner


def chebyshev_within(a, b, r=1):
    """Every True pixel of a lies within Chebyshev distance r of a True pixel of b."""
    from scipy import ndimage
    grown = ndimage.binary_dilation(b, structure=np.ones((2 * r + 1,) * 2, dtype=bool))
    return bool((a <= grown).all())


def test_detect_edges_errors_and_constant():
    with pytest.raises(EmptyForeground):
        imaging.detect_edges(imaging.BinaryImage(np.zeros((32, 32), dtype=bool)))
    e = imaging.detect_edges(imaging.BinaryImage(np.ones((32, 32), dtype=bool)))
    assert not e.bits.any()


def test_detect_edges_square_ring():
    m = np.zeros((20, 20), dtype=bool)
    m[5:15, 5:15] = True
    e = imaging.detect_edges(imaging.BinaryImage(m)).bits
    ring = boundary_pixels(m)
    assert e.any()
    assert chebyshev_within(e, ring) and chebyshev_within(ring, e)
    from scipy import ndimage
    _, n = ndimage.label(e, structure=np.ones((3, 3)))
    assert n == 1
    # closed: the ring separates the inside from the outside
    _, parts = ndimage.label(~e)
    assert parts == 2


# At sigma 2 the LoG zero crossing of a 3x3 blob sits 2 px out, so the
# 1-px bound is checked from 4x4 up; sigma 1 covers 3x3.
@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(1.0, 3), (2.0, 4)]), st.data())
def test_edges_near_boundary_and_complement(case, data):
    sigma, lo = case
    h, w = data.draw(st.integers(lo, 14)), data.draw(st.integers(lo, 14))
    top, left = data.draw(st.integers(2, 10)), data.draw(st.integers(2, 10))
    m = np.zeros((32, 32), dtype=bool)
    m[top:top + h, left:left + w] = True
    e = imaging.detect_edges(imaging.BinaryImage(m), sigma).bits
    assert e.any()
    assert chebyshev_within(e, boundary_pixels(m))
    ec = imaging.detect_edges(imaging.BinaryImage(~m), sigma).bits
    assert chebyshev_within(e, ec) and chebyshev_within(ec, e)
    # every edge pixel has an edge neighbour
    from scipy import ndimage
    nb = ndimage.convolve(e.astype(int), np.ones((3, 3), dtype=int), mode="constant") - e
    assert (nb[e] >= 1).all()


def test_preprocess_on_rendered_hand(hand):
    img, _, ex = hand
    from scipy import ndimage
    _, n = ndimage.label(ex.mask.bits, structure=np.ones((3, 3)))
    assert n == 1
    assert imaging.preprocess(img).bits.sum() == ex.mask.bits.sum()


def test_gray_image_validation():
    with pytest.raises(ImageTooSmall):
        imaging.GrayImage(np.zeros((10, 40)))
    with pytest.raises(ValueError):
        imaging.GrayImage(np.full((32, 32), 1.5))
