"""Template-command grammar: the wire format for breakdown edit commands.

Six single-object edit commands round-trip through canonical one-line
templates:

    Move object towards the {front|back|left|right} direction for {D} meters : {ref}
    Rotate object {A} degrees : {ref}
    {Shrink|Enlarge} object by {F} times : {ref}
    Replace source with target : {ref} to {target description}
    Add {description} location: {relation} {reference description}
    Remove {ref}

where {ref} is a free-text description, optionally disambiguated by a
trailing ``location: {relation} {reference description}`` clause. Numbers are
plain decimals. Parsing is whitespace-insensitive; formatting is canonical,
so ``parse(format(cmd)) == cmd`` and ``format(parse(s))`` canonicalizes ``s``.

Descriptions must not contain the separator tokens ``location:`` or ``to``
(catalog captions are chosen accordingly).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .relations import PHRASE_TO_RELATION, RELATION_PHRASES, SpatialRelation


class TemplateError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class UnknownTemplate(TemplateError):
    pass


class MalformedField(TemplateError):
    pass


class OutOfRangeValue(TemplateError):
    pass


_SEPARATORS = ("location:", " to ")


def _clean_text(value: str, what: str) -> str:
    text = " ".join(value.split())
    if not text:
        raise ValueError(f"{what} must be non-empty")
    lowered = f" {text.lower()} "
    if "location:" in lowered or " to " in lowered:
        raise ValueError(f"{what} must not contain the separators {_SEPARATORS}")
    return text


@dataclass(frozen=True)
class RelativeLocation:
    relation: SpatialRelation
    reference_desc: str

    def __post_init__(self):
        if self.relation == SpatialRelation.NONE:
            raise ValueError("relative location needs a real relation")
        object.__setattr__(
            self, "reference_desc", _clean_text(self.reference_desc, "reference description")
        )


@dataclass(frozen=True)
class ObjectRef:
    description: str
    relative: RelativeLocation | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "description", _clean_text(self.description, "object description")
        )


_PLACEABLE = frozenset(
    r
    for r in SpatialRelation
    if r not in (SpatialRelation.NONE, SpatialRelation.ABOVE, SpatialRelation.BELOW)
)

DIRECTIONS = ("front", "back", "left", "right")


@dataclass(frozen=True)
class Rotate:
    target: ObjectRef
    angle_degrees: float

    def __post_init__(self):
        if not -180.0 <= self.angle_degrees <= 180.0 or self.angle_degrees == 0.0:
            raise OutOfRangeValue(f"angle {self.angle_degrees} outside [-180, 180] \\ {{0}}")


@dataclass(frozen=True)
class Translate:
    target: ObjectRef
    direction: str
    distance_m: float

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        if not 0.0 < self.distance_m <= 20.0:
            raise OutOfRangeValue(f"distance {self.distance_m} outside (0, 20]")


@dataclass(frozen=True)
class Scale:
    target: ObjectRef
    factor: float

    def __post_init__(self):
        if not 0.0 < self.factor <= 10.0:
            raise OutOfRangeValue(f"factor {self.factor} outside (0, 10]")


@dataclass(frozen=True)
class Replace:
    source: ObjectRef
    target_desc: str

    def __post_init__(self):
        object.__setattr__(self, "target_desc", _clean_text(self.target_desc, "target description"))


@dataclass(frozen=True)
class Add:
    target_desc: str
    location: RelativeLocation

    def __post_init__(self):
        object.__setattr__(self, "target_desc", _clean_text(self.target_desc, "target description"))
        if self.location.relation not in _PLACEABLE:
            raise ValueError("add placement needs a horizontal relation")


@dataclass(frozen=True)
class Remove:
    target: ObjectRef


EditCommand = Union[Rotate, Translate, Scale, Replace, Add, Remove]

EDIT_TYPE_NAMES: dict[type, str] = {
    Rotate: "rotate",
    Translate: "translate",
    Scale: "scale",
    Replace: "replace",
    Add: "add",
    Remove: "remove",
}


def edit_type(cmd: EditCommand) -> str:
    return EDIT_TYPE_NAMES[type(cmd)]


def _format_number(value: float) -> str:
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


# Longest phrases first so "closely in front of" wins over "in front of".
_LOCATION_PHRASES = sorted(
    ((phrase, rel) for phrase, rel in PHRASE_TO_RELATION.items() if rel != SpatialRelation.NONE),
    key=lambda item: -len(item[0]),
)


def _format_ref(ref: ObjectRef) -> str:
    if ref.relative is None:
        return ref.description
    phrase = RELATION_PHRASES[ref.relative.relation]
    return f"{ref.description} location: {phrase} {ref.relative.reference_desc}"


def format_template_command(cmd: EditCommand) -> str:
    """Canonical single-line template string for a command."""
    if isinstance(cmd, Translate):
        return (
            f"Move object towards the {cmd.direction} direction "
            f"for {_format_number(cmd.distance_m)} meters : {_format_ref(cmd.target)}"
        )
    if isinstance(cmd, Rotate):
        return f"Rotate object {_format_number(cmd.angle_degrees)} degrees : {_format_ref(cmd.target)}"
    if isinstance(cmd, Scale):
        verb = "Shrink" if cmd.factor < 1.0 else "Enlarge"
        return f"{verb} object by {_format_number(cmd.factor)} times : {_format_ref(cmd.target)}"
    if isinstance(cmd, Replace):
        return f"Replace source with target : {_format_ref(cmd.source)} to {cmd.target_desc}"
    if isinstance(cmd, Add):
        phrase = RELATION_PHRASES[cmd.location.relation]
        return f"Add {cmd.target_desc} location: {phrase} {cmd.location.reference_desc}"
    if isinstance(cmd, Remove):
        return f"Remove {_format_ref(cmd.target)}"
    raise TypeError(f"not an edit command: {cmd!r}")


def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


def _parse_ref(text: str, full_text: str) -> ObjectRef:
    base = text
    relative = None
    match = re.search(r"\s+location\s*:\s*", text)
    if match:
        base = text[: match.start()]
        clause = text[match.end() :]
        rel = None
        for phrase, relation in _LOCATION_PHRASES:
            pattern = r"\s+".join(re.escape(word) for word in phrase.split())
            m = re.match(pattern + r"\s+(\S.*)", clause)
            if m:
                rel = RelativeLocation(relation, m.group(1))
                break
        if rel is None:
            raise MalformedField(
                f"bad location clause: {clause!r}",
                offset=_byte_offset(full_text, full_text.find(clause)),
            )
        relative = rel
    if not base.strip():
        raise MalformedField(
            "empty object description", offset=_byte_offset(full_text, full_text.find(text))
        )
    return ObjectRef(base, relative)


def _parse_number(token: str, full_text: str, what: str) -> float:
    if re.fullmatch(r"-?\d+(?:\.\d+)?", token) is None:
        raise MalformedField(
            f"bad {what}: {token!r}", offset=_byte_offset(full_text, full_text.find(token))
        )
    return float(token)


_NUM = r"(-?[\d.]+)"

_MOVE_RE = re.compile(
    r"Move\s+object\s+towards\s+the\s+(\w+)\s+direction\s+for\s+"
    + _NUM
    + r"\s+meters\s*:\s*(\S.*)"
)
_ROTATE_RE = re.compile(r"Rotate\s+object\s+" + _NUM + r"\s+degrees\s*:\s*(\S.*)")
_SCALE_RE = re.compile(r"(Shrink|Enlarge)\s+object\s+by\s+" + _NUM + r"\s+times\s*:\s*(\S.*)")
_REPLACE_RE = re.compile(r"Replace\s+source\s+with\s+target\s*:\s*(\S.*)")
_ADD_RE = re.compile(r"Add\s+(\S.*)")
_REMOVE_RE = re.compile(r"Remove\s+(\S.*)")


def parse_template_command(text: str) -> EditCommand:
    """Parse one canonical template line into an EditCommand.

    Raises UnknownTemplate when no template head matches, MalformedField
    (with a byte offset) for a recognizable template with a broken field,
    and OutOfRangeValue for numeric fields outside the command's range.
    """
    stripped = text.strip()
    try:
        if stripped.startswith("Move"):
            m = _MOVE_RE.fullmatch(stripped)
            if not m:
                raise MalformedField("malformed Move template", offset=0)
            direction, dist_tok, ref_text = m.groups()
            if direction not in DIRECTIONS:
                raise MalformedField(
                    f"bad direction {direction!r}",
                    offset=_byte_offset(stripped, m.start(1)),
                )
            distance = _parse_number(dist_tok, stripped, "distance")
            return Translate(_parse_ref(ref_text, stripped), direction, distance)
        if stripped.startswith("Rotate"):
            m = _ROTATE_RE.fullmatch(stripped)
            if not m:
                raise MalformedField("malformed Rotate template", offset=0)
            angle = _parse_number(m.group(1), stripped, "angle")
            return Rotate(_parse_ref(m.group(2), stripped), angle)
        if stripped.startswith(("Shrink", "Enlarge")):
            m = _SCALE_RE.fullmatch(stripped)
            if not m:
                raise MalformedField("malformed Shrink/Enlarge template", offset=0)
            factor = _parse_number(m.group(2), stripped, "factor")
            return Scale(_parse_ref(m.group(3), stripped), factor)
        if stripped.startswith("Replace"):
            m = _REPLACE_RE.fullmatch(stripped)
            if not m:
                raise MalformedField("malformed Replace template", offset=0)
            payload = m.group(1)
            if " to " not in payload:
                raise MalformedField(
                    "Replace needs '{source} to {target}'",
                    offset=_byte_offset(stripped, m.start(1)),
                )
            src_text, dst_text = payload.rsplit(" to ", 1)
            if not dst_text.strip():
                raise MalformedField(
                    "empty replacement description",
                    offset=_byte_offset(stripped, m.start(1)),
                )
            return Replace(_parse_ref(src_text, stripped), dst_text)
        if stripped.startswith("Add"):
            m = _ADD_RE.fullmatch(stripped)
            if not m:
                raise MalformedField("malformed Add template", offset=0)
            ref = _parse_ref(m.group(1), stripped)
            if ref.relative is None:
                raise MalformedField(
                    "Add needs a 'location:' clause",
                    offset=_byte_offset(stripped, m.start(1)),
                )
            return Add(ref.description, ref.relative)
        if stripped.startswith("Remove"):
            m = _REMOVE_RE.fullmatch(stripped)
            if not m:
                raise MalformedField("malformed Remove template", offset=0)
            return Remove(_parse_ref(m.group(1), stripped))
    except (OutOfRangeValue, MalformedField):
        raise
    except ValueError as exc:
        raise MalformedField(str(exc), offset=0) from None
    raise UnknownTemplate(f"no template matches: {stripped[:60]!r}")
