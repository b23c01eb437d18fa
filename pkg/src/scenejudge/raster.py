"""Image buffers and a tiny aliasing-free rasterizer built on numpy."""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from scenejudge import style

RGBA = tuple[int, int, int, int]


@dataclass(frozen=True)
class ImageBuffer:
    """Row-major RGBA image. ``label`` names the image when it is composited."""

    width: int
    height: int
    pixels: bytes
    label: str = ""

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height * 4:
            raise ValueError("pixel buffer length does not match width * height * 4")

    @classmethod
    def from_array(cls, array: np.ndarray, label: str = "") -> "ImageBuffer":
        array = np.ascontiguousarray(array, dtype=np.uint8)
        if array.ndim != 3 or array.shape[2] != 4:
            raise ValueError(f"expected an HxWx4 array, got shape {array.shape}")
        return cls(array.shape[1], array.shape[0], array.tobytes(), label)

    def to_array(self) -> np.ndarray:
        """Read-only ``(height, width, 4)`` uint8 view."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 4)

    def with_label(self, label: str) -> "ImageBuffer":
        return ImageBuffer(self.width, self.height, self.pixels, label)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.width}x{self.height}:".encode())
        h.update(self.pixels)
        return h.hexdigest()[:16]

    def to_png(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.to_array().copy(), "RGBA").save(buf, format="PNG")
        return buf.getvalue()

    def save_png(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_png())

    @classmethod
    def load(cls, path: str | Path, label: str = "") -> "ImageBuffer":
        with Image.open(path) as img:
            return cls.from_array(np.asarray(img.convert("RGBA")), label)


def solid(width: int, height: int, rgba: Sequence[int]) -> np.ndarray:
    arr = np.empty((height, width, 4), dtype=np.uint8)
    arr[:, :] = rgba
    return arr


def blend(dst: np.ndarray, color: np.ndarray | Sequence[int], opacity: float) -> np.ndarray:
    """Integer source-over mix of ``color`` onto ``dst`` (all four channels)."""
    a = int(round(opacity * 255))
    src = np.asarray(color, dtype=np.uint16)
    return ((dst.astype(np.uint16) * (255 - a) + src * a + 127) // 255).astype(np.uint8)


@dataclass(frozen=True)
class Viewport:
    """Maps view-plane coordinates (``u`` right, ``v`` up, meters) to pixels."""

    center_u: float
    center_v: float
    half_width: float
    half_height: float
    width_px: int
    height_px: int

    @classmethod
    def square(cls, center: tuple[float, float], half_extent: float, resolution: int) -> "Viewport":
        return cls(center[0], center[1], half_extent, half_extent, resolution, resolution)

    @classmethod
    def fit(cls, center: tuple[float, float], half_w: float, half_h: float, resolution: int) -> "Viewport":
        """Longest side gets ``resolution`` pixels; the other keeps the aspect."""
        if half_w >= half_h:
            w = resolution
            h = max(1, int(round(resolution * half_h / half_w)))
            half_h = half_w * h / w
        else:
            h = resolution
            w = max(1, int(round(resolution * half_w / half_h)))
            half_w = half_h * w / h
        return cls(center[0], center[1], half_w, half_h, w, h)

    @property
    def scale(self) -> float:
        return self.width_px / (2.0 * self.half_width)

    def to_px(self, u: float, v: float) -> tuple[float, float]:
        """Continuous pixel coordinates ``(col, row)``; pixel ``i`` spans ``[i, i+1)``."""
        col = (u - (self.center_u - self.half_width)) * self.scale
        row = ((self.center_v + self.half_height) - v) * (self.height_px / (2.0 * self.half_height))
        return col, row

    def to_world(self, col: float, row: float) -> tuple[float, float]:
        u = self.center_u - self.half_width + col / self.scale
        v = self.center_v + self.half_height - row * (2.0 * self.half_height / self.height_px)
        return u, v


class Canvas:
    def __init__(self, viewport: Viewport, background: Sequence[int] = style.BACKGROUND):
        self.vp = viewport
        self.data = solid(viewport.width_px, viewport.height_px, background)

    def _paint(self, mask: np.ndarray, r0: int, c0: int, rgba: Sequence[int], opacity: float) -> None:
        if not mask.any():
            return
        region = self.data[r0 : r0 + mask.shape[0], c0 : c0 + mask.shape[1]]
        if opacity >= 1.0:
            region[mask] = rgba
        else:
            region[mask] = blend(region[mask], rgba, opacity)

    def _px_polygon(self, poly: Sequence[tuple[float, float]]) -> np.ndarray:
        return np.array([self.vp.to_px(u, v) for u, v in poly], dtype=np.float64)

    def fill_polygon(self, poly: Sequence[tuple[float, float]], rgba: Sequence[int], opacity: float = 1.0) -> None:
        """Fill pixels whose centers fall inside ``poly`` (even-odd rule)."""
        if len(poly) < 3:
            return
        self.fill_px_polygon(self._px_polygon(poly), rgba, opacity)

    def fill_px_polygon(self, pts: np.ndarray, rgba: Sequence[int], opacity: float = 1.0) -> None:
        h, w = self.data.shape[:2]
        c0 = max(0, int(np.floor(pts[:, 0].min())))
        c1 = min(w, int(np.ceil(pts[:, 0].max())) + 1)
        r0 = max(0, int(np.floor(pts[:, 1].min())))
        r1 = min(h, int(np.ceil(pts[:, 1].max())) + 1)
        if c0 >= c1 or r0 >= r1:
            return
        xs = np.arange(c0, c1, dtype=np.float64) + 0.5
        ys = np.arange(r0, r1, dtype=np.float64) + 0.5
        X, Y = np.meshgrid(xs, ys)
        inside = np.zeros(X.shape, dtype=bool)
        n = len(pts)
        for i in range(n):
            x1, y1 = pts[i]
            x2, y2 = pts[(i + 1) % n]
            if y1 == y2:
                continue
            crosses = (y1 > Y) != (y2 > Y)
            x_cross = x1 + (Y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (X < x_cross)
        self._paint(inside, r0, c0, rgba, opacity)

    def stroke_segment(
        self,
        a: tuple[float, float],
        b: tuple[float, float],
        rgba: Sequence[int],
        width_px: float = style.MIN_STROKE_PX,
        opacity: float = 1.0,
    ) -> None:
        """Pixels whose centers lie within ``width_px / 2`` of the segment."""
        width_px = max(width_px, style.MIN_STROKE_PX)
        (ax, ay), (bx, by) = self.vp.to_px(*a), self.vp.to_px(*b)
        half = width_px / 2.0
        h, w = self.data.shape[:2]
        c0 = max(0, int(np.floor(min(ax, bx) - half)))
        c1 = min(w, int(np.ceil(max(ax, bx) + half)) + 1)
        r0 = max(0, int(np.floor(min(ay, by) - half)))
        r1 = min(h, int(np.ceil(max(ay, by) + half)) + 1)
        if c0 >= c1 or r0 >= r1:
            return
        X, Y = np.meshgrid(np.arange(c0, c1) + 0.5, np.arange(r0, r1) + 0.5)
        dx, dy = bx - ax, by - ay
        seg2 = dx * dx + dy * dy
        if seg2 == 0:
            t = np.zeros_like(X)
        else:
            t = np.clip(((X - ax) * dx + (Y - ay) * dy) / seg2, 0.0, 1.0)
        dist2 = (X - (ax + t * dx)) ** 2 + (Y - (ay + t * dy)) ** 2
        self._paint(dist2 <= half * half, r0, c0, rgba, opacity)

    def stroke_polyline(self, pts, rgba, width_px: float = style.MIN_STROKE_PX, closed: bool = False, opacity=1.0):
        n = len(pts)
        for i in range(n if closed else n - 1):
            self.stroke_segment(pts[i], pts[(i + 1) % n], rgba, width_px, opacity)

    def fill_rect(self, u0: float, v0: float, u1: float, v1: float, rgba, opacity: float = 1.0) -> None:
        self.fill_polygon([(u0, v0), (u1, v0), (u1, v1), (u0, v1)], rgba, opacity)

    def text(self, col: int, row: int, s: str, scale: int = 1) -> None:
        """Burn ``s`` with its top-left corner at pixel ``(col, row)``."""
        burn_text(self.data, col, row, s, scale)

    def image(self, label: str = "") -> ImageBuffer:
        return ImageBuffer.from_array(self.data, label)


# -- bitmap font ---------------------------------------------------------------

_GLYPHS = {
    "0": "111101101101111", "1": "010110010010111", "2": "111001111100111",
    "3": "111001111001111", "4": "101101111001001", "5": "111100111001111",
    "6": "111100111101111", "7": "111001010010010", "8": "111101111101111",
    "9": "111101111001111", "a": "010101111101101", "b": "110101110101110",
    "c": "011100100100011", "d": "110101101101110", "e": "111100110100111",
    "f": "111100110100100", "g": "011100101101011", "h": "101101111101101",
    "i": "111010010010111", "j": "001001001101010", "k": "101101110101101",
    "l": "100100100100111", "m": "101111111101101", "n": "110101101101101",
    "o": "010101101101010", "p": "110101110100100", "q": "010101101110011",
    "r": "110101110101101", "s": "011100010001110", "t": "111010010010010",
    "u": "101101101101111", "v": "101101101101010", "w": "101101111111101",
    "x": "101101010101101", "y": "101101010010010", "z": "111001010100111",
    "|": "010010010010010", "_": "000000000000111", "-": "000000111000000",
    ".": "000000000000010", ":": "000010000010000", ",": "000000000010100",
    "/": "001001010100100", "(": "010100100100010", ")": "010001001001010",
    " ": "000000000000000", "?": "111001010000010",
}
GLYPH_W, GLYPH_H = 3, 5


def text_size(s: str, scale: int = 1) -> tuple[int, int]:
    """Width and height in pixels of a burned label, padding included."""
    return ((len(s) * (GLYPH_W + 1) + 1) * scale, (GLYPH_H + 2) * scale)


def burn_text(arr: np.ndarray, col: int, row: int, s: str, scale: int = 1) -> None:
    w, h = text_size(s, scale)
    H, W = arr.shape[:2]
    r0, r1 = max(0, row), min(H, row + h)
    c0, c1 = max(0, col), min(W, col + w)
    if r0 >= r1 or c0 >= c1:
        return
    arr[r0:r1, c0:c1] = style.LABEL_BG
    for k, ch in enumerate(s.lower()):
        bits = _GLYPHS.get(ch, _GLYPHS["?"])
        gx = col + (1 + k * (GLYPH_W + 1)) * scale
        gy = row + scale
        for i, bit in enumerate(bits):
            if bit != "1":
                continue
            y = gy + (i // GLYPH_W) * scale
            x = gx + (i % GLYPH_W) * scale
            ya, yb = max(0, y), min(H, y + scale)
            xa, xb = max(0, x), min(W, x + scale)
            if ya < yb and xa < xb:
                arr[ya:yb, xa:xb] = style.LABEL_INK


# -- backend image shaping -------------------------------------------------------


def resize_longest(image: ImageBuffer, target: int) -> ImageBuffer:
    """Nearest-neighbor resize so the longest side equals ``target``."""
    longest = max(image.width, image.height)
    if longest == target:
        return image
    if image.width >= image.height:
        w, h = target, max(1, int(round(image.height * target / image.width)))
    else:
        w, h = max(1, int(round(image.width * target / image.height))), target
    src = image.to_array()
    rows = np.minimum((np.arange(h) + 0.5) * image.height / h, image.height - 1).astype(np.intp)
    cols = np.minimum((np.arange(w) + 0.5) * image.width / w, image.width - 1).astype(np.intp)
    return ImageBuffer.from_array(src[rows][:, cols], image.label)


def side_by_side(images: Sequence[ImageBuffer], scale: int = 1) -> ImageBuffer:
    """Concatenate horizontally, top-aligned, each member's label burned top-left."""
    height = max(im.height for im in images)
    width = sum(im.width for im in images)
    out = solid(width, height, style.BACKGROUND)
    col = 0
    for im in images:
        out[: im.height, col : col + im.width] = im.to_array()
        if im.label:
            burn_text(out, col, 0, im.label, scale)
        col += im.width
    return ImageBuffer.from_array(out, "+".join(im.label for im in images))
