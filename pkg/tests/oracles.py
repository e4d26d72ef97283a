"""Independent geometry oracles used by tests.

These deliberately avoid the library's SAT/clipping code paths: collision and
IOU are checked by brute-force point sampling in box-local frames.
"""

import math

import numpy as np


def _to_local(points, box):
    """World points -> box-local coordinates (analytic, no library calls)."""
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    p = points - np.asarray(box.center)
    # Inverse of the yaw rotation x' = x c + z s, z' = -x s + z c.
    x = p[:, 0] * c - p[:, 2] * s
    z = p[:, 0] * s + p[:, 2] * c
    return np.stack([x, p[:, 1], z], axis=1)


def _from_local(points, box):
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    x = points[:, 0] * c + points[:, 2] * s
    z = -points[:, 0] * s + points[:, 2] * c
    out = np.stack([x, points[:, 1], z], axis=1)
    return out + np.asarray(box.center)


def sample_points_in_box(box, n, rng):
    h = np.asarray(box.half_extents)
    local = rng.uniform(-1.0, 1.0, size=(n, 3)) * h
    return _from_local(local, box)


def points_inside(points, box):
    local = _to_local(points, box)
    h = np.asarray(box.half_extents)
    return np.all(np.abs(local) <= h, axis=1)


def box_volume(box):
    return 8.0 * box.half_extents[0] * box.half_extents[1] * box.half_extents[2]


def sampled_overlap(a, b, n, rng, chunk=100_000):
    """True iff any of n points drawn inside the smaller box lies in the other.

    Sampling the smaller box maximizes the hit probability for a given
    intersection volume; the test early-exits on the first hit.
    """
    if box_volume(b) < box_volume(a):
        a, b = b, a
    remaining = n
    while remaining > 0:
        take = min(chunk, remaining)
        pts = sample_points_in_box(a, take, rng)
        if points_inside(pts, b).any():
            return True
        remaining -= take
    return False


def sampled_iou(a, b, n, rng):
    """Monte-Carlo IOU: intersection volume estimated from points inside a."""
    vol_a = 8.0 * a.half_extents[0] * a.half_extents[1] * a.half_extents[2]
    vol_b = 8.0 * b.half_extents[0] * b.half_extents[1] * b.half_extents[2]
    pts = sample_points_in_box(a, n, rng)
    hit = float(points_inside(pts, b).mean())
    inter = hit * vol_a
    union = vol_a + vol_b - inter
    return inter / union if union > 0 else 0.0


def axis_margins(a, b):
    """(gap, penetration) proxies from the 4 SAT candidate axes plus vertical.

    gap > 0 means some axis certifies separation by at least that much;
    penetration is the smallest projected overlap across all axes when no
    axis separates (a necessary, not sufficient, overlap proxy).

    Implemented from scratch: corners and projections computed here.
    """

    def corners(box):
        hx, hz = box.half_extents[0], box.half_extents[2]
        c, s = math.cos(box.yaw), math.sin(box.yaw)
        cx, cz = box.center[0], box.center[2]
        pts = []
        for lx, lz in ((hx, hz), (-hx, hz), (-hx, -hz), (hx, -hz)):
            pts.append((cx + lx * c + lz * s, cz - lx * s + lz * c))
        return np.array(pts)

    def axes(box):
        c, s = math.cos(box.yaw), math.sin(box.yaw)
        return [(c, -s), (s, c)]

    ca, cb = corners(a), corners(b)
    best_gap = -np.inf
    min_overlap = np.inf
    for ax, az in axes(a) + axes(b):
        pa = ca[:, 0] * ax + ca[:, 1] * az
        pb = cb[:, 0] * ax + cb[:, 1] * az
        gap = max(pb.min() - pa.max(), pa.min() - pb.max())
        best_gap = max(best_gap, gap)
        min_overlap = min(min_overlap, min(pa.max(), pb.max()) - max(pa.min(), pb.min()))
    a_lo, a_hi = a.center[1] - a.half_extents[1], a.center[1] + a.half_extents[1]
    b_lo, b_hi = b.center[1] - b.half_extents[1], b.center[1] + b.half_extents[1]
    v_gap = max(b_lo - a_hi, a_lo - b_hi)
    v_overlap = min(a_hi, b_hi) - max(a_lo, b_lo)
    if v_gap > 0:
        best_gap = max(best_gap, v_gap)
    min_overlap = min(min_overlap, v_overlap)
    return best_gap, min_overlap


def random_box_pair(rng, center_span=1.5, extent_range=(0.15, 0.8)):
    from roomedit.geometry import OrientedBox

    def one():
        center = rng.uniform(-center_span, center_span, size=3)
        extents = rng.uniform(*extent_range, size=3)
        yaw = rng.uniform(-math.pi, math.pi)
        return OrientedBox(tuple(center), tuple(extents), float(yaw))

    return one(), one()


def decisive_box_pair(rng, gap_margin=1e-3, overlap_margin=0.05, **kwargs):
    """Random pair that is clearly separated or clearly overlapping.

    Separated pairs need an axis gap of at least ``gap_margin`` (the oracle
    then provably finds no hits); overlapping pairs need every projected
    overlap to be at least ``overlap_margin`` so the intersection volume is
    large enough for a bounded-budget sampling oracle to find. All returned
    pairs therefore have separation margin >= gap_margin.
    """
    while True:
        a, b = random_box_pair(rng, **kwargs)
        gap, overlap = axis_margins(a, b)
        if gap >= gap_margin:
            return a, b, False
        if gap < 0 and overlap >= overlap_margin:
            return a, b, True
