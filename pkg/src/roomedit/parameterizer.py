"""Natural-language command -> ordered breakdown template commands.

Two backends produce plans: an external chat model (prompted with the scene
attributes and the six output formats, answers parsed line by line) and a
deterministic rule grammar that covers single-operation phrasings plus
"and"/"then" conjunctions, so the whole suite runs offline.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .catalog import ObjectCatalog
from .commands import (
    Add,
    EditCommand,
    ObjectRef,
    RelativeLocation,
    Remove,
    Replace,
    Rotate,
    Scale,
    TemplateError,
    Translate,
    format_template_command,
    parse_template_command,
)
from .relations import SpatialRelation
from .scene import Scene


class Unparseable(ValueError):
    pass


class NoValidCommands(ValueError):
    def __init__(self, message: str, response_text: str = ""):
        super().__init__(message)
        self.response_text = response_text


@dataclass(frozen=True)
class BreakdownPlan:
    commands: tuple[EditCommand, ...]
    raw_response: str
    backend: str
    warnings: tuple[str, ...] = ()

    def template_lines(self) -> list[str]:
        return [format_template_command(cmd) for cmd in self.commands]


_FORMAT_LINES = [
    "Rotate an object: Rotate object {angle} degrees : {object description}",
    "Translate an object: Move object towards the {front/back/left/right} "
    "direction for {distance} meters : {object description}",
    "Scale an object: {Shrink/Enlarge} object by {factor} times : {object description}",
    "Replace an object: Replace source with target : {source object description} "
    "to {target object description}",
    "Add an object: Add {object description} location: {relation} {reference object description}",
    "Remove an object: Remove {object description}",
]


def build_prompt(scene: Scene, natural_command: str, catalog: ObjectCatalog) -> str:
    """Deterministic planning prompt: scene attributes, formats, instruction."""
    lines = [
        "You are a 3D room-layout editing planner. Break the user's request",
        "into basic editing operations, one per line, using exactly these",
        "output formats:",
        "",
    ]
    lines.extend(f"- {fmt}" for fmt in _FORMAT_LINES)
    lines.append("")
    lines.append(f"The room ({scene.room_type}) contains:")
    for obj in scene.objects:
        x, y, z = obj.position
        hx, hy, hz = obj.half_extents
        lines.append(
            f"- {catalog.categories[obj.category]} | caption: {obj.caption} | "
            f"position: ({x:.2f}, {y:.2f}, {z:.2f}) m | "
            f"half extents: ({hx:.2f}, {hy:.2f}, {hz:.2f}) m | "
            f"rotation: {math.degrees(obj.yaw):.1f} deg"
        )
    lines.append("")
    lines.append(f"User request: {natural_command}")
    lines.append(
        "Answer with one breakdown command per line in the formats above, "
        "in execution order, and nothing else."
    )
    return "\n".join(lines)


def parse_llm_response(text: str):
    """Template-grammar lines from a model reply, in order; prose is skipped."""
    commands = []
    warnings = []
    for line in text.splitlines():
        line = line.strip().lstrip("-*0123456789. ").strip()
        if not line:
            continue
        try:
            commands.append(parse_template_command(line))
        except TemplateError as exc:
            warnings.append(f"ignored line {line[:60]!r}: {exc}")
    if not commands:
        raise NoValidCommands("no valid template lines in response", response_text=text)
    return commands, tuple(warnings)


_NUM = r"(\d+(?:\.\d+)?)"
_DIRECTION_WORDS = {
    "left": "left",
    "right": "right",
    "forward": "front",
    "forwards": "front",
    "front": "front",
    "ahead": "front",
    "back": "back",
    "backward": "back",
    "backwards": "back",
}
_RELATION_PHRASES = [
    ("closely in front of", SpatialRelation.CLOSELY_IN_FRONT_OF),
    ("closely behind", SpatialRelation.CLOSELY_BEHIND),
    ("closely to the left of", SpatialRelation.CLOSELY_LEFT_OF),
    ("closely to the right of", SpatialRelation.CLOSELY_RIGHT_OF),
    ("closely left of", SpatialRelation.CLOSELY_LEFT_OF),
    ("closely right of", SpatialRelation.CLOSELY_RIGHT_OF),
    ("in front of", SpatialRelation.IN_FRONT_OF),
    ("to the left of", SpatialRelation.LEFT_OF),
    ("to the right of", SpatialRelation.RIGHT_OF),
    ("left of", SpatialRelation.LEFT_OF),
    ("right of", SpatialRelation.RIGHT_OF),
    ("next to", SpatialRelation.CLOSELY_RIGHT_OF),
    ("behind", SpatialRelation.BEHIND),
]


def _strip_article(text: str) -> str:
    return re.sub(r"^(the|a|an)\s+", "", text.strip(), flags=re.IGNORECASE)


def _clean(text: str) -> str:
    return " ".join(text.strip().strip(".,!").split())


def _rule_single(clause: str) -> EditCommand:
    """One clause -> one command; raises Unparseable when nothing matches."""
    text = _clean(clause)
    lowered = text.lower()

    # move/shift/push X ... direction ... distance (order-flexible)
    m = re.match(r"(?:please\s+)?(?:move|shift|push|slide)\s+(.*)$", lowered)
    if m:
        rest = m.group(1)
        dist = re.search(_NUM + r"\s*(?:m|meter|meters|metre|metres)\b", rest)
        direction = None
        for word, canon in _DIRECTION_WORDS.items():
            if re.search(rf"\b{word}\b", rest):
                direction = canon
                break
        if dist and direction:
            desc = rest
            desc = re.sub(_NUM + r"\s*(?:m|meter|meters|metre|metres)\b", " ", desc)
            desc = re.sub(
                r"\b(to|towards|toward|the|by|for|direction|move|of)\b", " ", desc
            )
            for word in _DIRECTION_WORDS:
                desc = re.sub(rf"\b{word}\b", " ", desc)
            desc = _strip_article(_clean(desc))
            if desc:
                return Translate(ObjectRef(desc), direction, float(dist.group(1)))
        raise Unparseable(f"cannot parse move clause: {clause!r}")

    # rotate X by A degrees [clockwise]
    m = re.match(
        r"(?:please\s+)?(?:rotate|turn|spin)\s+(.+?)\s+(?:by\s+)?"
        + _NUM
        + r"\s*(?:degrees|degree|deg)\b(.*)$",
        lowered,
    )
    if m:
        desc = _strip_article(_clean(m.group(1)))
        angle = float(m.group(2))
        if re.search(r"\bclockwise\b", m.group(3)) and not re.search(
            r"\bcounter[- ]?clockwise\b", m.group(3)
        ):
            angle = -angle
        return Rotate(ObjectRef(desc), angle)

    # make X bigger/smaller by F times | shrink/enlarge X by F [times]
    m = re.match(
        r"(?:please\s+)?make\s+(.+?)\s+(bigger|larger|smaller)\s+by\s+" + _NUM + r"(?:\s*times)?$",
        lowered,
    )
    if not m:
        m = re.match(
            r"(?:please\s+)?(shrink|enlarge|grow)\s+(.+?)\s+by\s+" + _NUM + r"(?:\s*times)?$",
            lowered,
        )
        if m:
            verb, desc, factor = m.group(1), m.group(2), float(m.group(3))
            if verb == "shrink" and factor > 1.0:
                factor = 1.0 / factor
            return Scale(ObjectRef(_strip_article(_clean(desc))), factor)
    else:
        desc, comparative, factor = m.group(1), m.group(2), float(m.group(3))
        if comparative == "smaller" and factor > 1.0:
            factor = 1.0 / factor
        return Scale(ObjectRef(_strip_article(_clean(desc))), factor)

    # replace X with Y
    m = re.match(r"(?:please\s+)?(?:replace|swap)\s+(.+?)\s+with\s+(.+)$", lowered)
    if m:
        return Replace(
            ObjectRef(_strip_article(_clean(m.group(1)))), _strip_article(_clean(m.group(2)))
        )

    # add/place/put a X <relation> the Y
    m = re.match(r"(?:please\s+)?(?:add|place|put)\s+(.+)$", lowered)
    if m:
        rest = m.group(1)
        for phrase, relation in _RELATION_PHRASES:
            split = re.split(rf"\s+{re.escape(phrase)}\s+", rest, maxsplit=1)
            if len(split) == 2:
                desc = _strip_article(_clean(split[0]))
                reference = _strip_article(_clean(split[1]))
                if desc and reference:
                    return Add(desc, RelativeLocation(relation, reference))
        raise Unparseable(f"cannot parse add clause: {clause!r}")

    # remove/delete the X
    m = re.match(r"(?:please\s+)?(?:remove|delete|take\s+away|get\s+rid\s+of)\s+(.+)$", lowered)
    if m:
        return Remove(ObjectRef(_strip_article(_clean(m.group(1)))))

    raise Unparseable(f"no rule matches: {clause!r}")


_SPLIT_RE = re.compile(r"\s*(?:,\s*then\b|;\s*then\b|\bthen\b|,\s*and\b|;|\band\s+then\b|\band\b|,)\s+", re.IGNORECASE)


def rules_plan(natural_command: str) -> list[EditCommand]:
    """Deterministic grammar: split on conjunctions, parse each clause."""
    text = natural_command.strip()
    if not text:
        raise Unparseable("empty command")
    clauses = [c for c in _SPLIT_RE.split(text) if c.strip()]
    commands = [_rule_single(clause) for clause in clauses]
    if not commands:
        raise Unparseable(f"nothing actionable in {natural_command!r}")
    return commands


def parameterize(
    scene: Scene,
    natural_command: str,
    catalog: ObjectCatalog,
    backend: str = "rules",
    llm_client=None,
) -> BreakdownPlan:
    """Plan breakdown commands for a natural command with the chosen backend."""
    if backend == "rules":
        commands = rules_plan(natural_command)
        return BreakdownPlan(
            commands=tuple(commands), raw_response="", backend="rules"
        )
    if backend == "llm":
        if llm_client is None:
            from .llm import LlmClient, LlmConfig

            config = LlmConfig.from_env()
            if config is None:
                raise ValueError(
                    "llm backend needs EDITROOM_LLM_URL (and optional "
                    "EDITROOM_LLM_KEY / EDITROOM_LLM_MODEL)"
                )
            llm_client = LlmClient(config)
        prompt = build_prompt(scene, natural_command, catalog)
        response = llm_client.complete(prompt)
        commands, warnings = parse_llm_response(response)
        return BreakdownPlan(
            commands=tuple(commands),
            raw_response=response,
            backend="llm",
            warnings=warnings,
        )
    raise ValueError(f"unknown backend {backend!r}")
