"""Patch geometry, exhaustive block matching and weighted reprojection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionMismatch, ImageTooSmall


@dataclass(frozen=True)
class PatchGeometry:
    """Patch side, group size, search window and reference stride."""

    patch_side: int
    group_size: int
    window: int = 37
    stride: int = 4

    def __post_init__(self):
        if self.patch_side < 1 or self.group_size < 1 or self.stride < 1:
            raise ValueError("patch_side, group_size and stride must be positive")
        if self.window % 2 == 0 or self.window < self.patch_side:
            raise ValueError("window must be odd and at least patch_side")

    @property
    def n(self) -> int:
        return self.patch_side**2


@dataclass
class PatchGroup:
    """``matrix`` is ``n x k`` (one flattened patch per column); ``coords[j]`` is the
    top-left corner of column ``j``; column 0 is the reference patch."""

    matrix: np.ndarray
    coords: np.ndarray


def _axis_positions(length: int, side: int, stride: int) -> np.ndarray:
    last = length - side
    pos = list(range(0, last + 1, stride))
    if pos[-1] != last:
        pos.append(last)
    return np.array(pos)


def reference_positions(image_shape, geometry: PatchGeometry) -> np.ndarray:
    """Top-left corners of reference patches on a stride grid.

    The last valid row and column offsets are always included, so the
    reference patches alone cover every pixel whenever ``stride <= patch_side``.
    """
    h, w = image_shape
    side = geometry.patch_side
    if h < side or w < side:
        raise ImageTooSmall(f"image {h}x{w} is smaller than a {side}x{side} patch")
    rows = _axis_positions(h, side, geometry.stride)
    cols = _axis_positions(w, side, geometry.stride)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return np.stack([rr.ravel(), cc.ravel()], axis=1)


def _window_offsets(half: int) -> np.ndarray:
    d = np.arange(-half, half + 1)
    dy, dx = np.meshgrid(d, d, indexing="ij")
    return np.stack([dy.ravel(), dx.ravel()], axis=1)


def _box_rows(cs: np.ndarray, starts: np.ndarray, side: int) -> np.ndarray:
    return cs[starts + side] - cs[starts]


def distance_table(image: np.ndarray, refs: np.ndarray, geometry: PatchGeometry):
    """Squared l2 distances from each reference patch to every window offset.

    Returns ``(dist, offsets)``; ``dist[i, o]`` is ``inf`` where the shifted
    patch falls outside the image. Box sums are computed separably with
    cumulative sums, which keeps the distance of identical patches at
    exactly zero.
    """
    image = np.asarray(image, dtype=float)
    h, w = image.shape
    side = geometry.patch_side
    pr, pc = h - side + 1, w - side + 1
    offsets = _window_offsets(geometry.window // 2)

    urows, inv_r = np.unique(refs[:, 0], return_inverse=True)
    ucols, inv_c = np.unique(refs[:, 1], return_inverse=True)
    dist = np.full((len(refs), len(offsets)), np.inf)
    table = np.empty((len(urows), len(ucols)))
    for o, (dy, dx) in enumerate(offsets):
        r0, r1 = max(0, -dy, urows[0]), min(pr, pr - dy, urows[-1] + 1)
        c0, c1 = max(0, -dx, ucols[0]), min(pc, pc - dx, ucols[-1] + 1)
        if r0 >= r1 or c0 >= c1:
            continue
        rsel = (urows >= r0) & (urows < r1)
        csel = (ucols >= c0) & (ucols < c1)
        if not rsel.any() or not csel.any():
            continue
        a = image[r0 : r1 + side - 1, c0 : c1 + side - 1]
        b = image[r0 + dy : r1 + dy + side - 1, c0 + dx : c1 + dx + side - 1]
        sq = (a - b) ** 2
        cs = np.zeros((sq.shape[0] + 1, sq.shape[1]))
        np.cumsum(sq, axis=0, out=cs[1:])
        v = _box_rows(cs, urows[rsel] - r0, side)
        ch = np.zeros((v.shape[0], v.shape[1] + 1))
        np.cumsum(v, axis=1, out=ch[:, 1:])
        starts = ucols[csel] - c0
        box = ch[:, starts + side] - ch[:, starts]
        table.fill(np.inf)
        table[np.ix_(rsel, csel)] = box
        dist[:, o] = table[inv_r, inv_c]
    return dist, offsets


def match_groups(image: np.ndarray, refs: np.ndarray, geometry: PatchGeometry, chunk: int = 2048):
    """Block matching for many references at once.

    Returns ``(coords, sizes)``: ``coords`` has shape ``(G, k, 2)`` and
    ``sizes[g]`` is the number of valid members of group ``g`` (smaller than
    ``k`` only when the window holds fewer candidates); padded entries are -1.
    """
    refs = np.asarray(refs)
    k = geometry.group_size
    coords = np.full((len(refs), k, 2), -1, dtype=np.int64)
    sizes = np.empty(len(refs), dtype=np.int64)
    for s in range(0, len(refs), chunk):
        sub = refs[s : s + chunk]
        dist, offsets = distance_table(image, sub, geometry)
        dist[:, len(offsets) // 2] = -1.0  # reference first
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        n_valid = np.isfinite(dist).sum(axis=1)
        kk = min(k, order.shape[1])
        c = sub[:, None, :] + offsets[order[:, :kk]]
        valid = np.arange(kk)[None, :] < n_valid[:, None]
        c[~valid] = -1
        coords[s : s + len(sub), :kk] = c
        sizes[s : s + len(sub)] = np.minimum(k, n_valid)
    return coords, sizes


def block_match(image: np.ndarray, ref, geometry: PatchGeometry) -> PatchGroup:
    """The ``k`` nearest patches (squared l2) to the patch at ``ref``.

    Candidates are the patches whose centre lies in the ``window x window``
    square centred on the reference centre. Ties are broken in row-major
    candidate order and the reference itself is always column 0.
    """
    image = np.asarray(image, dtype=float)
    coords, sizes = match_groups(image, np.asarray([ref]), geometry)
    c = coords[0, : sizes[0]]
    return PatchGroup(extract_groups(image, c[None], geometry.patch_side)[0], c)


def extract_groups(image: np.ndarray, coords: np.ndarray, side: int) -> np.ndarray:
    """Stack patches at ``coords`` (``(G, k, 2)``) into ``(G, n, k)`` similarity matrices."""
    view = sliding_window_view(np.asarray(image, dtype=float), (side, side))
    patches = view[coords[..., 0], coords[..., 1]]
    g, k = coords.shape[:2]
    return patches.reshape(g, k, side * side).transpose(0, 2, 1)


class PixelAccumulator:
    """Per-pixel weighted sums of patch estimates (numerator, denominator)."""

    def __init__(self, shape):
        self.shape = tuple(shape)
        self.numerators = np.zeros(self.shape)
        self.denominators = np.zeros(self.shape)

    def add(self, coords: np.ndarray, side: int, values: np.ndarray, weights: np.ndarray) -> None:
        """Add ``weights[g, j] * values[g, :, j]`` at the pixels of patch ``coords[g, j]``."""
        g, k = coords.shape[:2]
        if values.shape != (g, side * side, k) or weights.shape != (g, k):
            raise DimensionMismatch("values/weights do not match the group coordinates")
        h, w = self.shape
        d = np.arange(side)
        local = (d[:, None] * w + d[None, :]).ravel()
        base = coords[..., 0] * w + coords[..., 1]
        idx = base[:, None, :] + local[None, :, None]
        wts = np.broadcast_to(weights[:, None, :], idx.shape)
        size = h * w
        self.numerators += np.bincount(idx.ravel(), (wts * values).ravel(), minlength=size).reshape(self.shape)
        self.denominators += np.bincount(idx.ravel(), wts.ravel(), minlength=size).reshape(self.shape)

    def merge(self, other: "PixelAccumulator") -> None:
        self.numerators += other.numerators
        self.denominators += other.denominators

    def result(self) -> np.ndarray:
        """Normalized image; pixels that received no weight are NaN."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.numerators / self.denominators


def scatter_group(group: PatchGroup, denoised: np.ndarray, weights, accum: PixelAccumulator) -> None:
    """Reproject one denoised group; every pixel of column ``j`` gets weight ``weights[j]``."""
    side = int(round(np.sqrt(group.matrix.shape[0])))
    accum.add(
        np.asarray(group.coords)[None],
        side,
        np.asarray(denoised, dtype=float)[None],
        np.asarray(weights, dtype=float)[None],
    )
