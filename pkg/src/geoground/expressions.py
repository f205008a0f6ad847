"""Template filling with uniqueness disambiguation.

Two fixed grammars: a phrase built from an object's own attributes
("The <color> <size> <shape> <category> <in the <loc> of the image>") and a
sentence relating two objects ("The <category> is <relation> the <anchor>").
An object gets an expression by the first applicable route: unique category,
a distinguishing own attribute, or a distinguishing relation to an
identifiable anchor; otherwise it is discarded. Every emitted expression is
checked to resolve back to exactly its target via :func:`resolve_expression`,
which matches structured fills (never raw text) against the scene.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .attributes import AttributeSet, RelationKind, Scene
from .config import (
    COLOR_WORDS,
    GEOMETRY_WORDS,
    LOCATION_WORDS,
    REL_LOCATION_WORDS,
    REL_SIZE_WORDS,
    SIZE_WORDS,
)

# Disambiguation prefers the earlier slot when several attributes would do.
SLOT_PRIORITY = ("color", "size_word", "geometry", "abs_location")

_MODIFIER_SLOTS = ("color", "size_word", "geometry")


@dataclass(frozen=True)
class NounFills:
    """Category plus at most one qualifying attribute; used for anchors."""

    category: str
    attribute_slot: str | None = None
    attribute_value: str | None = None


@dataclass(frozen=True)
class PhraseFills:
    article: str
    category: str
    color: str | None = None
    size_word: str | None = None
    geometry: str | None = None
    abs_location: str | None = None
    modifier_order: tuple[str, ...] = ()
    step: int = 1

    def constraints(self) -> dict[str, str]:
        out = {}
        for slot in SLOT_PRIORITY:
            value = getattr(self, slot)
            if value is not None:
                out[slot] = value
        return out


@dataclass(frozen=True)
class SentenceFills:
    subject: PhraseFills
    relation_kind: RelationKind
    relation_value: str
    anchor: NounFills
    step: int = 3


@dataclass(frozen=True)
class Expression:
    target_id: str
    template_kind: str  # "phrase" | "sentence"
    fills: PhraseFills | SentenceFills
    text: str
    seed: int


@dataclass(frozen=True)
class Discarded:
    """Marker for objects no template can single out."""

    target_id: str
    reason: str


_VOWELS = frozenset("aeiou")


def _article_token(article: str, next_word: str) -> str:
    if article == "A" and next_word[:1].lower() in _VOWELS:
        return "An"
    return article


def _relation_surface(kind: RelationKind, value: str) -> str:
    if kind is RelationKind.REL_SIZE or value in ("above", "below"):
        return value
    return f"on the {value}"


def _phrase_tokens(fills: PhraseFills) -> list[str]:
    if not fills.category:
        raise ValueError("phrase fills lack the mandatory category")
    modifiers = [getattr(fills, slot) for slot in fills.modifier_order]
    if any(m is None for m in modifiers):
        raise ValueError(f"modifier_order names an empty slot: {fills.modifier_order}")
    present = {slot for slot in _MODIFIER_SLOTS if getattr(fills, slot) is not None}
    if present != set(fills.modifier_order):
        raise ValueError("modifier_order must list exactly the filled modifier slots")
    head = modifiers[0] if modifiers else fills.category
    tokens = [_article_token(fills.article, head)]
    tokens.extend(modifiers)
    tokens.append(fills.category)
    if fills.abs_location is not None:
        tokens.append(f"in the {fills.abs_location} of the image")
    return tokens


def render(fills: PhraseFills | SentenceFills, kind: str) -> str:
    """Render fills into the final text: single spaces, no trailing period."""
    if kind == "phrase":
        if not isinstance(fills, PhraseFills):
            raise ValueError("phrase rendering needs PhraseFills")
        return " ".join(_phrase_tokens(fills))
    if kind == "sentence":
        if not isinstance(fills, SentenceFills):
            raise ValueError("sentence rendering needs SentenceFills")
        if not fills.anchor.category:
            raise ValueError("sentence fills lack the anchor category")
        subject = " ".join(_phrase_tokens(fills.subject))
        relation = _relation_surface(fills.relation_kind, fills.relation_value)
        anchor = fills.anchor.category
        if fills.anchor.attribute_value is not None:
            anchor = f"{fills.anchor.attribute_value} {anchor}"
        return f"{subject} is {relation} the {anchor}"
    raise ValueError(f"unknown template kind {kind!r}")


def _words_pattern(words) -> str:
    return "|".join(re.escape(w) for w in sorted(words, key=len, reverse=True))

_MODIFIER = f"(?:{_words_pattern(COLOR_WORDS + SIZE_WORDS + GEOMETRY_WORDS)})"
# Category names are open-class, but never contain the templates' own
# function words; excluding those keeps the tail clauses unambiguous.
_CATEGORY_WORD = r"(?!(?:a|an|in|is|of|on|the|image)(?: |$))[a-z0-9][a-z0-9\-]*"
_CATEGORY = f"{_CATEGORY_WORD}(?: {_CATEGORY_WORD})*?"
_LOCATION = f"(?:{_words_pattern(LOCATION_WORDS)})"
_REL_LOC_SURFACE = "|".join(
    re.escape(v) if v in ("above", "below") else re.escape(f"on the {v}")
    for v in REL_LOCATION_WORDS
)
_RELATION = f"(?:{_REL_LOC_SURFACE}|{_words_pattern(REL_SIZE_WORDS)})"

PHRASE_PATTERN = re.compile(
    rf"^(?:The|An?)(?: {_MODIFIER})* {_CATEGORY}(?: in the {_LOCATION} of the image)?$"
)
SENTENCE_PATTERN = re.compile(
    rf"^(?:The|An?)(?: {_MODIFIER})* {_CATEGORY} is (?:{_RELATION}) the(?: {_MODIFIER})? {_CATEGORY}$"
)


def matches_template(text: str, kind: str) -> bool:
    pattern = PHRASE_PATTERN if kind == "phrase" else SENTENCE_PATTERN
    return pattern.match(text) is not None


def _matches_own(attrs: AttributeSet, category: str, constraints: dict[str, str]) -> bool:
    if attrs.category != category:
        return False
    return all(getattr(attrs, slot) == value for slot, value in constraints.items())


def resolve_expression(expr: Expression | PhraseFills | SentenceFills,
                       scene: Scene) -> set[str]:
    """All object ids the structured fills could refer to.

    The oracle for disambiguation soundness: an expression is unambiguous
    iff this returns exactly its target.
    """
    fills = expr.fills if isinstance(expr, Expression) else expr
    if isinstance(fills, PhraseFills):
        constraints = fills.constraints()
        return {
            o.object_id for o in scene.objects
            if _matches_own(scene.attributes[o.object_id], fills.category, constraints)
        }
    anchor_constraints = {}
    if fills.anchor.attribute_slot is not None:
        anchor_constraints[fills.anchor.attribute_slot] = fills.anchor.attribute_value
    anchors = {
        o.object_id for o in scene.objects
        if _matches_own(scene.attributes[o.object_id], fills.anchor.category, anchor_constraints)
    }
    subject_constraints = fills.subject.constraints()
    candidates = {
        o.object_id for o in scene.objects
        if _matches_own(scene.attributes[o.object_id], fills.subject.category,
                        subject_constraints)
    }
    related = {
        f.subject_id for f in scene.relations
        if f.kind is fills.relation_kind and f.value == fills.relation_value
        and f.object_id in anchors
    }
    return candidates & related


def category_is_unique(scene: Scene, target_id: str) -> bool:
    """Step-1 predicate: no other scene object shares the target's category."""
    category = scene.object_by_id(target_id).category
    return sum(1 for o in scene.objects if o.category == category) == 1


def find_distinguishing_attribute(scene: Scene, target_id: str) -> tuple[str, str] | None:
    """Step-2 predicate: first own attribute no same-category object shares."""
    target = scene.object_by_id(target_id)
    attrs = scene.attributes[target_id]
    rivals = [o for o in scene.objects
              if o.category == target.category and o.object_id != target_id]
    for slot in SLOT_PRIORITY:
        value = getattr(attrs, slot)
        if value is None:
            continue
        if all(getattr(scene.attributes[o.object_id], slot) != value for o in rivals):
            return slot, value
    return None


def _identify_anchor(scene: Scene, anchor_id: str) -> NounFills | None:
    """Description of the anchor if category or one attribute singles it out."""
    anchor = scene.object_by_id(anchor_id)
    if category_is_unique(scene, anchor_id):
        return NounFills(anchor.category)
    attrs = scene.attributes[anchor_id]
    for slot in SLOT_PRIORITY:
        value = getattr(attrs, slot)
        if value is None:
            continue
        probe = NounFills(anchor.category, slot, value)
        matched = {
            o.object_id for o in scene.objects
            if _matches_own(scene.attributes[o.object_id], anchor.category, {slot: value})
        }
        if matched == {anchor_id}:
            return probe
    return None


def find_distinguishing_relation(scene: Scene, target_id: str) -> tuple | None:
    """Step-3 predicate: a relational fact held by the target alone.

    Returns (fact, anchor fills) for the first fact, in deterministic order,
    whose anchor is itself identifiable and which no same-category object
    shares toward that anchor.
    """
    target = scene.object_by_id(target_id)
    rivals = {o.object_id for o in scene.objects
              if o.category == target.category and o.object_id != target_id}
    fact_keys = {(f.subject_id, f.object_id, f.kind, f.value) for f in scene.relations}
    own_facts = sorted(
        (f for f in scene.relations if f.subject_id == target_id),
        key=lambda f: (f.kind.value, f.value, f.object_id),
    )
    for fact in own_facts:
        anchor_fills = _identify_anchor(scene, fact.object_id)
        if anchor_fills is None:
            continue
        if any((rival, fact.object_id, fact.kind, fact.value) in fact_keys
               for rival in rivals):
            continue
        return fact, anchor_fills
    return None


def _choose_phrase_fills(attrs: AttributeSet, article: str, step: int,
                         required: tuple[str, str] | None,
                         rng: random.Random) -> PhraseFills:
    chosen: dict[str, str] = {}
    if required is not None:
        chosen[required[0]] = required[1]
    for slot, value in attrs.present().items():
        if slot not in chosen and rng.random() < 0.5:
            chosen[slot] = value
    # Keep texts at three or more words when the attributes allow it.
    if not chosen and len(attrs.category.split()) < 2:
        available = list(attrs.present().items())
        if available:
            slot, value = available[rng.randrange(len(available))]
            chosen[slot] = value
    order = [slot for slot in _MODIFIER_SLOTS if slot in chosen]
    rng.shuffle(order)
    return PhraseFills(
        article=article,
        category=attrs.category,
        color=chosen.get("color"),
        size_word=chosen.get("size_word"),
        geometry=chosen.get("geometry"),
        abs_location=chosen.get("abs_location"),
        modifier_order=tuple(order),
        step=step,
    )


def generate_expression(target_id: str, scene: Scene, seed: int) -> Expression | Discarded:
    """Produce a uniquely-resolving expression for the target, or discard it.

    Routes are tried in order: unique category (phrase, random extra
    attributes), distinguishing own attribute (phrase), distinguishing
    relation to an identifiable anchor (sentence). The same scene, target,
    and seed always produce the same text.
    """
    target = scene.object_by_id(target_id)  # raises KeyError for foreign ids
    attrs = scene.attributes[target_id]
    rng = random.Random(seed)

    fills: PhraseFills | SentenceFills | None = None
    if category_is_unique(scene, target_id):
        article = rng.choice(("The", "A"))
        fills = _choose_phrase_fills(attrs, article, 1, None, rng)
    else:
        required = find_distinguishing_attribute(scene, target_id)
        if required is not None:
            fills = _choose_phrase_fills(attrs, "The", 2, required, rng)
        else:
            found = find_distinguishing_relation(scene, target_id)
            if found is not None:
                fact, anchor_fills = found
                subject = PhraseFills(article="The", category=target.category, step=3)
                fills = SentenceFills(subject, fact.kind, fact.value, anchor_fills)

    if fills is None:
        return Discarded(target_id, "no distinguishing attribute or relation")

    kind = "sentence" if isinstance(fills, SentenceFills) else "phrase"
    expr = Expression(target_id, kind, fills, render(fills, kind), seed)
    resolved = resolve_expression(expr, scene)
    if resolved != {target_id}:
        raise AssertionError(
            f"generated expression is ambiguous: {expr.text!r} -> {sorted(resolved)}")
    return expr


def fills_to_dict(fills: PhraseFills | SentenceFills) -> dict:
    if isinstance(fills, PhraseFills):
        return {
            "kind": "phrase",
            "article": fills.article,
            "category": fills.category,
            "color": fills.color,
            "size_word": fills.size_word,
            "geometry": fills.geometry,
            "abs_location": fills.abs_location,
            "modifier_order": list(fills.modifier_order),
            "step": fills.step,
        }
    return {
        "kind": "sentence",
        "subject": fills_to_dict(fills.subject),
        "relation_kind": fills.relation_kind.value,
        "relation_value": fills.relation_value,
        "anchor": {
            "category": fills.anchor.category,
            "attribute_slot": fills.anchor.attribute_slot,
            "attribute_value": fills.anchor.attribute_value,
        },
        "step": fills.step,
    }


def fills_from_dict(data: dict) -> PhraseFills | SentenceFills:
    if data["kind"] == "phrase":
        return PhraseFills(
            article=data["article"],
            category=data["category"],
            color=data.get("color"),
            size_word=data.get("size_word"),
            geometry=data.get("geometry"),
            abs_location=data.get("abs_location"),
            modifier_order=tuple(data.get("modifier_order", ())),
            step=int(data.get("step", 1)),
        )
    subject = fills_from_dict(data["subject"])
    anchor = data["anchor"]
    return SentenceFills(
        subject=subject,
        relation_kind=RelationKind(data["relation_kind"]),
        relation_value=data["relation_value"],
        anchor=NounFills(anchor["category"], anchor.get("attribute_slot"),
                         anchor.get("attribute_value")),
        step=int(data.get("step", 3)),
    )


def expression_to_dict(expr: Expression) -> dict:
    return {
        "target_id": expr.target_id,
        "template_kind": expr.template_kind,
        "fills": fills_to_dict(expr.fills),
        "text": expr.text,
        "seed": expr.seed,
    }


def expression_from_dict(data: dict) -> Expression:
    return Expression(
        target_id=data["target_id"],
        template_kind=data["template_kind"],
        fills=fills_from_dict(data["fills"]),
        text=data["text"],
        seed=int(data["seed"]),
    )
