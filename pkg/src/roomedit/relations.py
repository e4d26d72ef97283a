"""Spatial relations between oriented objects in a room.

Ten directed relations plus NONE (reserved for padded/self pairs). The
horizontal relations split the azimuth circle into four 90-degree sectors,
each with a "closely" variant when the two object centers are less than
one meter apart horizontally.
"""

from __future__ import annotations

import enum
import math

CLOSE_DISTANCE_M = 1.0
# Stacked-object gate: above/below only when vertical ranges are disjoint
# and the horizontal centers are within this distance.
STACK_DISTANCE_M = 0.8


class SpatialRelation(enum.IntEnum):
    IN_FRONT_OF = 0
    BEHIND = 1
    RIGHT_OF = 2
    LEFT_OF = 3
    CLOSELY_IN_FRONT_OF = 4
    CLOSELY_BEHIND = 5
    CLOSELY_RIGHT_OF = 6
    CLOSELY_LEFT_OF = 7
    ABOVE = 8
    BELOW = 9
    NONE = 10


N_RELATIONS = len(SpatialRelation)  # 11 including NONE

RELATION_PHRASES: dict[SpatialRelation, str] = {
    SpatialRelation.IN_FRONT_OF: "in front of",
    SpatialRelation.BEHIND: "behind",
    SpatialRelation.RIGHT_OF: "right of",
    SpatialRelation.LEFT_OF: "left of",
    SpatialRelation.CLOSELY_IN_FRONT_OF: "closely in front of",
    SpatialRelation.CLOSELY_BEHIND: "closely behind",
    SpatialRelation.CLOSELY_RIGHT_OF: "closely right of",
    SpatialRelation.CLOSELY_LEFT_OF: "closely left of",
    SpatialRelation.ABOVE: "above",
    SpatialRelation.BELOW: "below",
    SpatialRelation.NONE: "none",
}

PHRASE_TO_RELATION = {v: k for k, v in RELATION_PHRASES.items()}

_INVERSE = {
    SpatialRelation.IN_FRONT_OF: SpatialRelation.BEHIND,
    SpatialRelation.BEHIND: SpatialRelation.IN_FRONT_OF,
    SpatialRelation.RIGHT_OF: SpatialRelation.LEFT_OF,
    SpatialRelation.LEFT_OF: SpatialRelation.RIGHT_OF,
    SpatialRelation.CLOSELY_IN_FRONT_OF: SpatialRelation.CLOSELY_BEHIND,
    SpatialRelation.CLOSELY_BEHIND: SpatialRelation.CLOSELY_IN_FRONT_OF,
    SpatialRelation.CLOSELY_RIGHT_OF: SpatialRelation.CLOSELY_LEFT_OF,
    SpatialRelation.CLOSELY_LEFT_OF: SpatialRelation.CLOSELY_RIGHT_OF,
    SpatialRelation.ABOVE: SpatialRelation.BELOW,
    SpatialRelation.BELOW: SpatialRelation.ABOVE,
    SpatialRelation.NONE: SpatialRelation.NONE,
}


def invert_relation(relation: SpatialRelation) -> SpatialRelation:
    """Relation seen from the other endpoint; an involution."""
    return _INVERSE[relation]


def is_closely(relation: SpatialRelation) -> bool:
    return relation in (
        SpatialRelation.CLOSELY_IN_FRONT_OF,
        SpatialRelation.CLOSELY_BEHIND,
        SpatialRelation.CLOSELY_RIGHT_OF,
        SpatialRelation.CLOSELY_LEFT_OF,
    )


def horizontal_relation(dx: float, dz: float, distance: float) -> SpatialRelation:
    """Classify a horizontal displacement into one of the 8 azimuth relations.

    Sector ties (|dx| == |dz|) resolve toward front/behind so extraction is
    deterministic; dz == dx == 0 counts as (closely) in front.
    """
    close = distance < CLOSE_DISTANCE_M
    if abs(dz) >= abs(dx):
        if dz >= 0:
            return (
                SpatialRelation.CLOSELY_IN_FRONT_OF if close else SpatialRelation.IN_FRONT_OF
            )
        return SpatialRelation.CLOSELY_BEHIND if close else SpatialRelation.BEHIND
    if dx > 0:
        return SpatialRelation.CLOSELY_RIGHT_OF if close else SpatialRelation.RIGHT_OF
    return SpatialRelation.CLOSELY_LEFT_OF if close else SpatialRelation.LEFT_OF


def classify_relation(subject, reference) -> SpatialRelation:
    """Relation of ``subject`` as seen from ``reference`` ("subject is <r> reference").

    Vertical stacking wins: above/below when the vertical ranges
    [y - h_y, y + h_y] are disjoint and the horizontal centers are within
    STACK_DISTANCE_M. Otherwise the azimuth of the center displacement
    decides, with the closely_ prefix under CLOSE_DISTANCE_M.
    """
    dx = subject.position[0] - reference.position[0]
    dy = subject.position[1] - reference.position[1]
    dz = subject.position[2] - reference.position[2]
    distance = math.hypot(dx, dz)

    sub_lo = subject.position[1] - subject.half_extents[1]
    sub_hi = subject.position[1] + subject.half_extents[1]
    ref_lo = reference.position[1] - reference.half_extents[1]
    ref_hi = reference.position[1] + reference.half_extents[1]
    vertically_disjoint = sub_lo > ref_hi or sub_hi < ref_lo
    if vertically_disjoint and distance < STACK_DISTANCE_M:
        return SpatialRelation.ABOVE if dy > 0 else SpatialRelation.BELOW

    return horizontal_relation(dx, dz, distance)
