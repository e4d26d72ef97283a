"""Oriented-box geometry: SAT overlap, collision, and exact rotated 3D IOU.

Boxes rotate only about the vertical axis, so every query decomposes into a
2D problem on the yaw-rotated x-z footprint plus a vertical interval check.
IOU uses exact convex polygon clipping, never sampling, so the metric is
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SAT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class OrientedBox:
    center: tuple[float, float, float]
    half_extents: tuple[float, float, float]
    yaw: float

    def __post_init__(self):
        values = (*self.center, *self.half_extents, self.yaw)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("box has non-finite values")
        if not all(h > 0 for h in self.half_extents):
            raise ValueError("box needs strictly positive half extents")

    @property
    def vertical_range(self) -> tuple[float, float]:
        return (self.center[1] - self.half_extents[1], self.center[1] + self.half_extents[1])

    def inflated(self, margin: float) -> "OrientedBox":
        hx, hy, hz = self.half_extents
        return OrientedBox(self.center, (hx + margin, hy + margin, hz + margin), self.yaw)


def box_of(obj) -> OrientedBox:
    """OrientedBox view of anything with position/half_extents/yaw."""
    return OrientedBox(tuple(obj.position), tuple(obj.half_extents), obj.yaw)


def footprint_corners(box: OrientedBox) -> np.ndarray:
    """Counter-clockwise x-z corners (4 x 2) of the yaw-rotated footprint."""
    hx, hz = box.half_extents[0], box.half_extents[2]
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    cx, cz = box.center[0], box.center[2]
    # Local CCW order (viewed from +y with x right, z up in the plane).
    local = ((hx, hz), (-hx, hz), (-hx, -hz), (hx, -hz))
    # Rotation about +y by yaw maps (x, z) -> (x cos + z sin, -x sin + z cos).
    return np.array(
        [(cx + x * c + z * s, cz - x * s + z * c) for x, z in local], dtype=np.float64
    )


def _axes_of(corners: np.ndarray) -> np.ndarray:
    e1 = corners[1] - corners[0]
    e2 = corners[3] - corners[0]
    axes = np.array([[e1[1], -e1[0]], [e2[1], -e2[0]]])
    return axes / np.linalg.norm(axes, axis=1, keepdims=True)


def overlap_2d(a: OrientedBox, b: OrientedBox, tolerance: float = SAT_TOLERANCE) -> bool:
    """Separating Axis Theorem on the two footprints (4 candidate axes)."""
    ca, cb = footprint_corners(a), footprint_corners(b)
    for axis in np.vstack([_axes_of(ca), _axes_of(cb)]):
        pa = ca @ axis
        pb = cb @ axis
        if pa.min() > pb.max() + tolerance or pb.min() > pa.max() + tolerance:
            return False
    return True


def vertical_overlap(a: OrientedBox, b: OrientedBox, tolerance: float = SAT_TOLERANCE) -> bool:
    a_lo, a_hi = a.vertical_range
    b_lo, b_hi = b.vertical_range
    return a_lo <= b_hi + tolerance and b_lo <= a_hi + tolerance


def collides(a: OrientedBox, b: OrientedBox, tolerance: float = SAT_TOLERANCE) -> bool:
    """True iff the 2D footprints overlap and the vertical ranges overlap."""
    return vertical_overlap(a, b, tolerance) and overlap_2d(a, b, tolerance)


def scene_collisions(scene, ignore: set[tuple[str, str]] | None = None, clearance: float = 0.0):
    """All colliding unordered id pairs, in scene order.

    ``ignore`` holds unordered id pairs to skip; ``clearance`` inflates each
    box by clearance/2 so pairs closer than that margin count as colliding.
    """
    ignored = {tuple(sorted(p)) for p in (ignore or set())}
    boxes = [box_of(o) for o in scene.objects]
    if clearance > 0:
        boxes = [b.inflated(clearance / 2.0) for b in boxes]
    hits = []
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            pair = tuple(sorted((scene.objects[i].id, scene.objects[j].id)))
            if pair in ignored:
                continue
            if collides(boxes[i], boxes[j]):
                hits.append((scene.objects[i].id, scene.objects[j].id))
    return hits


def clip_polygon(polygon: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon against a convex CCW clip polygon."""
    output = polygon
    n_clip = len(clip)
    for k in range(n_clip):
        if len(output) == 0:
            break
        a = clip[k]
        b = clip[(k + 1) % n_clip]
        # Inside = left of directed edge a->b for a CCW clip polygon.
        ex, ez = b[0] - a[0], b[1] - a[1]
        d = ex * (output[:, 1] - a[1]) - ez * (output[:, 0] - a[0])
        keep = d >= -SAT_TOLERANCE
        result = []
        n_out = len(output)
        for i in range(n_out):
            j = (i + 1) % n_out
            if keep[i]:
                result.append(output[i])
            if keep[i] != keep[j]:
                t = d[i] / (d[i] - d[j])
                result.append(output[i] + t * (output[j] - output[i]))
        output = np.array(result) if result else np.empty((0, 2))
    return output


def polygon_area(polygon: np.ndarray) -> float:
    """Shoelace area of a CCW polygon."""
    if len(polygon) < 3:
        return 0.0
    x = polygon[:, 0]
    z = polygon[:, 1]
    return 0.5 * float(np.dot(x, np.roll(z, -1)) - np.dot(z, np.roll(x, -1)))


def footprint_intersection_area(a: OrientedBox, b: OrientedBox) -> float:
    clipped = clip_polygon(footprint_corners(a), footprint_corners(b))
    return max(0.0, polygon_area(clipped))


def box_volume(box: OrientedBox) -> float:
    hx, hy, hz = box.half_extents
    return 8.0 * hx * hy * hz


def iou_3d(a: OrientedBox, b: OrientedBox) -> float:
    """Exact 3D intersection over union of two vertically-aligned oriented boxes.

    All three volumes go through the same centered-shoelace pipeline so that
    identical boxes score exactly 1.0: centering the footprints on the pair
    midpoint removes the large-coordinate cancellation in the shoelace sum,
    and clipping a polygon against itself returns its own vertices.
    """
    a_lo, a_hi = a.vertical_range
    b_lo, b_hi = b.vertical_range
    height = min(a_hi, b_hi) - max(a_lo, b_lo)
    if height <= 0.0:
        return 0.0
    mid = np.array(
        [(a.center[0] + b.center[0]) / 2.0, (a.center[2] + b.center[2]) / 2.0]
    )
    ca = footprint_corners(a) - mid
    cb = footprint_corners(b) - mid
    area = max(0.0, polygon_area(clip_polygon(ca, cb)))
    inter = area * height
    if inter <= 0.0:
        return 0.0
    vol_a = polygon_area(ca) * (2.0 * a.half_extents[1])
    vol_b = polygon_area(cb) * (2.0 * b.half_extents[1])
    union = vol_a + vol_b - inter
    return min(1.0, max(0.0, inter / union))
