from __future__ import annotations

import numpy as np
import pytest

from scenejudge.raster import Canvas, ImageBuffer, Viewport, blend, resize_longest, side_by_side, solid, text_size


def test_buffer_invariants():
    with pytest.raises(ValueError):
        ImageBuffer(2, 2, b"\x00" * 15)
    img = ImageBuffer.from_array(solid(3, 2, (1, 2, 3, 255)), "x")
    assert (img.width, img.height, len(img.pixels)) == (3, 2, 24)
    assert img.to_array()[1, 2].tolist() == [1, 2, 3, 255]


def test_png_round_trip(tmp_path):
    arr = np.random.default_rng(0).integers(0, 256, (7, 5, 4), dtype=np.uint8)
    arr[..., 3] = 255
    img = ImageBuffer.from_array(arr, "r")
    img.save_png(tmp_path / "r.png")
    assert ImageBuffer.load(tmp_path / "r.png").pixels == img.pixels


def test_viewport_round_trip():
    vp = Viewport.square((2.0, 2.0), 2.1, 335)
    for u, v in [(0.3, 3.1), (2.0, 2.0), (4.0, 0.0)]:
        col, row = vp.to_px(u, v)
        assert np.allclose(vp.to_world(col, row), (u, v))
    # +v is up: larger v maps to a smaller row
    assert vp.to_px(2, 3)[1] < vp.to_px(2, 1)[1]


def test_fill_polygon_uses_pixel_centers():
    vp = Viewport(5.0, 5.0, 5.0, 5.0, 10, 10)  # one pixel per meter
    c = Canvas(vp, background=(0, 0, 0, 255))
    c.fill_polygon([(2, 2), (6, 2), (6, 5), (2, 5)], (255, 0, 0, 255))
    mask = c.data[..., 0] == 255
    rows, cols = np.nonzero(mask)
    assert mask.sum() == 4 * 3
    assert (cols.min(), cols.max()) == (2, 5)
    assert (rows.min(), rows.max()) == (5, 7)


def test_stroke_is_at_least_two_pixels():
    vp = Viewport(5.0, 5.0, 5.0, 5.0, 100, 100)
    c = Canvas(vp, background=(0, 0, 0, 255))
    c.stroke_segment((1, 5), (9, 5), (255, 255, 255, 255), 0.1)
    assert (c.data[:, 50, 0] == 255).sum() >= 2


def test_blend_is_integer_mix():
    out = blend(np.array([[255, 255, 255, 255]], np.uint8), (0, 0, 0, 255), 0.3)
    assert out[0, :3].tolist() == [178, 178, 178] or out[0, :3].tolist() == [179, 179, 179]


def test_resize_longest_preserves_aspect():
    img = ImageBuffer.from_array(solid(100, 50, (9, 9, 9, 255)))
    out = resize_longest(img, 1200)
    assert (out.width, out.height) == (1200, 600)


def test_side_by_side_widths_and_label():
    a = ImageBuffer.from_array(solid(30, 20, (255, 255, 255, 255)), "a")
    b = ImageBuffer.from_array(solid(40, 25, (255, 255, 255, 255)), "b")
    out = side_by_side([a, b])
    assert (out.width, out.height) == (70, 25)
    assert out.label == "a+b"
    w, h = text_size("a")
    # label burned into the first member's top-left corner
    assert (out.to_array()[:h, :w, :3] == 0).any()


def test_digest_is_content_hash():
    a = ImageBuffer.from_array(solid(4, 4, (1, 1, 1, 255)), "a")
    same = ImageBuffer.from_array(solid(4, 4, (1, 1, 1, 255)), "a")
    other = ImageBuffer.from_array(solid(4, 4, (1, 1, 2, 255)), "a")
    assert a.digest() == same.digest()
    assert a.digest() != other.digest()
