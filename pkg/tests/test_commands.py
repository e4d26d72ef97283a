import numpy as np
import pytest

from roomedit.commands import (
    Add,
    MalformedField,
    ObjectRef,
    OutOfRangeValue,
    RelativeLocation,
    Remove,
    Replace,
    Rotate,
    Scale,
    Translate,
    UnknownTemplate,
    format_template_command,
    parse_template_command,
)
from roomedit.relations import SpatialRelation


def test_parse_move_template():
    cmd = parse_template_command(
        "Move object towards the left direction for 0.5 meters : a wooden double bed"
    )
    assert cmd == Translate(ObjectRef("a wooden double bed"), "left", 0.5)


def test_parse_rotate_template():
    cmd = parse_template_command("Rotate object 90 degrees : a red armchair")
    assert cmd == Rotate(ObjectRef("a red armchair"), 90.0)


def test_parse_scale_template():
    cmd = parse_template_command("Enlarge object by 1.3 times : a round coffee table")
    assert cmd == Scale(ObjectRef("a round coffee table"), 1.3)
    cmd = parse_template_command("Shrink object by 0.6 times : a round coffee table")
    assert cmd == Scale(ObjectRef("a round coffee table"), 0.6)


def test_parse_replace_template():
    cmd = parse_template_command(
        "Replace source with target : a wooden double bed to a single bed with white frame"
    )
    assert cmd == Replace(ObjectRef("a wooden double bed"), "a single bed with white frame")


def test_parse_add_template():
    cmd = parse_template_command("Add a brass floor lamp location: closely left of a walnut writing desk")
    assert cmd == Add(
        "a brass floor lamp",
        RelativeLocation(SpatialRelation.CLOSELY_LEFT_OF, "a walnut writing desk"),
    )


def test_parse_remove_template():
    assert parse_template_command("Remove a brass floor lamp") == Remove(
        ObjectRef("a brass floor lamp")
    )


def test_parse_remove_with_location_clause():
    cmd = parse_template_command(
        "Remove a black office chair location: behind a walnut writing desk"
    )
    assert cmd == Remove(
        ObjectRef(
            "a black office chair",
            RelativeLocation(SpatialRelation.BEHIND, "a walnut writing desk"),
        )
    )


def test_parse_is_whitespace_insensitive():
    cmd = parse_template_command(
        "  Move   object towards the  left direction for   0.5  meters :   a wooden bed  "
    )
    assert cmd == Translate(ObjectRef("a wooden bed"), "left", 0.5)


def test_unknown_template():
    with pytest.raises(UnknownTemplate):
        parse_template_command("Translate object sideways : bed")


def test_malformed_fields_report_offsets():
    with pytest.raises(MalformedField) as err:
        parse_template_command("Move object towards the up direction for 0.5 meters : bed")
    assert err.value.offset is not None
    with pytest.raises(MalformedField):
        parse_template_command("Rotate object ninety degrees : bed")
    with pytest.raises(MalformedField):
        parse_template_command("Add a lamp")
    with pytest.raises(MalformedField):
        parse_template_command("Replace source with target : just one thing")


def test_out_of_range_values():
    with pytest.raises(OutOfRangeValue):
        parse_template_command("Rotate object 270 degrees : bed")
    with pytest.raises(OutOfRangeValue):
        parse_template_command("Rotate object 0 degrees : bed")
    with pytest.raises(OutOfRangeValue):
        parse_template_command("Enlarge object by 11 times : bed")
    with pytest.raises(OutOfRangeValue):
        parse_template_command("Move object towards the left direction for 25 meters : bed")


_WORDS = (
    "a", "the", "wooden", "oak", "walnut", "round", "gray", "blue", "red",
    "bed", "chair", "lamp", "desk", "table", "sofa", "wardrobe", "nightstand",
    "double", "single", "modern", "compact", "tall", "fabric", "metal",
)


def random_description(rng):
    n = int(rng.integers(1, 5))
    return " ".join(rng.choice(_WORDS) for _ in range(n))


def random_ref(rng):
    desc = random_description(rng)
    if rng.random() < 0.3:
        relation = SpatialRelation(int(rng.integers(0, 10)))
        return ObjectRef(desc, RelativeLocation(relation, random_description(rng)))
    return ObjectRef(desc)


def random_command(rng):
    kind = int(rng.integers(0, 6))
    if kind == 0:
        direction = ("front", "back", "left", "right")[int(rng.integers(0, 4))]
        distance = round(float(rng.uniform(0.05, 20.0)), 4)
        return Translate(random_ref(rng), direction, distance)
    if kind == 1:
        angle = 0.0
        while angle == 0.0:
            angle = round(float(rng.uniform(-180, 180)), 3)
        return Rotate(random_ref(rng), angle)
    if kind == 2:
        factor = float(rng.uniform(0.05, 10.0))
        return Scale(random_ref(rng), factor)
    if kind == 3:
        return Replace(random_ref(rng), random_description(rng))
    if kind == 4:
        relation = SpatialRelation(int(rng.integers(0, 8)))
        return Add(random_description(rng), RelativeLocation(relation, random_description(rng)))
    return Remove(random_ref(rng))


def test_roundtrip_identity_on_random_commands():
    rng = np.random.default_rng(99)
    for _ in range(2000):
        cmd = random_command(rng)
        line = format_template_command(cmd)
        assert parse_template_command(line) == cmd, line


def test_format_parse_idempotent_on_canonical_strings():
    rng = np.random.default_rng(100)
    for _ in range(500):
        line = format_template_command(random_command(rng))
        assert format_template_command(parse_template_command(line)) == line
