"""Independent reference computations used by the tests.

These are deliberately naive: exact fractions, full enumeration, and a
winding-number polygon test, so they share no code path with the package.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


# -- agreement ------------------------------------------------------------------------------


def prf_oracle(preds: list[bool], golds: list[bool]) -> dict[str, dict[str, float]]:
    out = {}
    for name, cls in (("valid", True), ("invalid", False)):
        predicted = [i for i, p in enumerate(preds) if p == cls]
        actual = [i for i, g in enumerate(golds) if g == cls]
        both = [i for i in predicted if golds[i] == cls]
        p = Fraction(len(both), len(predicted)) if predicted else Fraction(0)
        r = Fraction(len(both), len(actual)) if actual else Fraction(0)
        f = 2 * p * r / (p + r) if p + r else Fraction(0)
        out[name] = {"precision": p, "recall": r, "f1": f}
    out["macro"] = {k: (out["valid"][k] + out["invalid"][k]) / 2 for k in ("precision", "recall", "f1")}
    return {c: {k: float(v) for k, v in d.items()} for c, d in out.items()}


def kappa_oracle(preds: list[bool], golds: list[bool]) -> float | None:
    n = len(preds)
    p_o = Fraction(sum(p == g for p, g in zip(preds, golds)), n)
    p_e = Fraction(0)
    for cls in (True, False):
        p_e += Fraction(sum(p == cls for p in preds), n) * Fraction(sum(g == cls for g in golds), n)
    if p_e == 1:
        return None
    return float((p_o - p_e) / (1 - p_e))


# -- graph edit distance ----------------------------------------------------------------------


def _mappings(n1: int, n2: int):
    def rec(i, used, acc):
        if i == n1:
            yield tuple(acc)
            return
        for w in range(n2):
            if w not in used:
                yield from rec(i + 1, used | {w}, acc + [w])
        yield from rec(i + 1, used, acc + [None])

    yield from rec(0, frozenset(), [])


def ged_oracle(labels1, edges1, labels2, edges2) -> int:
    """Minimum over every partial injective node map of the induced edit cost."""
    e1, e2 = set(edges1), set(edges2)
    best = None
    for m in _mappings(len(labels1), len(labels2)):
        cost = 0
        for v, w in enumerate(m):
            if w is None or labels1[v] != labels2[w]:
                cost += 1
        cost += len(labels2) - sum(w is not None for w in m)
        image = {(m[a], m[b]) for a, b in e1 if m[a] is not None and m[b] is not None}
        kept = len(image & e2)
        cost += (len(e1) - kept) + (len(e2) - kept)
        best = cost if best is None else min(best, cost)
    return best


def random_dag(rng, max_nodes: int = 5, alphabet: str = "ABC"):
    n = int(rng.integers(0, max_nodes + 1))
    labels = [alphabet[int(rng.integers(len(alphabet)))] for _ in range(n)]
    edges = [(a, b) for b in range(n) for a in range(b) if rng.random() < 0.35]
    return labels, edges


# -- geometry -------------------------------------------------------------------------------


def winding_inside(pt, poly) -> bool:
    """Nonzero winding number test."""
    x, y = pt
    wn = 0
    n = len(poly)
    for i in range(n):
        (x0, y0), (x1, y1) = poly[i], poly[(i + 1) % n]
        cross = (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)
        if y0 <= y < y1 and cross > 0:
            wn += 1
        elif y1 <= y < y0 and cross < 0:
            wn -= 1
    return wn != 0


def color_mask(arr: np.ndarray, rgba) -> np.ndarray:
    return np.all(arr == np.asarray(rgba, dtype=arr.dtype), axis=-1)


def mask_centroid(mask: np.ndarray) -> tuple[float, float]:
    rows, cols = np.nonzero(mask)
    return float(cols.mean() + 0.5), float(rows.mean() + 0.5)


def world_to_pixel(u: float, v: float, center, half_w: float, half_h: float, width: int, height: int):
    """Orthographic map with +v up: returns (col, row) of the containing pixel."""
    col = (u - (center[0] - half_w)) / (2 * half_w) * width
    row = ((center[1] + half_h) - v) / (2 * half_h) * height
    return int(np.floor(col)), int(np.floor(row))
