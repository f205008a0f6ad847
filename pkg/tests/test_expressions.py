import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoground.attributes import AttributeSet, RelationalFact, RelationKind, Scene, build_scene
from geoground.config import COLOR_WORDS, LOCATION_WORDS, SIZE_WORDS
from geoground.expressions import (
    Discarded,
    Expression,
    NounFills,
    PhraseFills,
    SentenceFills,
    category_is_unique,
    expression_from_dict,
    expression_to_dict,
    fills_from_dict,
    fills_to_dict,
    find_distinguishing_attribute,
    find_distinguishing_relation,
    generate_expression,
    matches_template,
    render,
    resolve_expression,
)
from geoground.geometry import BBox
from geoground.ingest import ImageRecord, ObjectInstance

IMG = ImageRecord("img", 800, 800)


def scene_of(specs, relations=()):
    """specs: list of (object_id, category, attr overrides dict)."""
    objects, attributes = [], {}
    for i, (object_id, category, overrides) in enumerate(specs):
        x = 30 * i + 10
        objects.append(ObjectInstance(object_id, "img", category, BBox(x, 10, x + 20, 30)))
        attributes[object_id] = AttributeSet(category, **overrides)
    return Scene(IMG, objects, attributes, list(relations))


class TestRender:
    def test_modifier_permutation(self):
        fills = PhraseFills(article="The", category="vehicle", color="blue",
                            size_word="tiny", modifier_order=("size_word", "color"))
        assert render(fills, "phrase") == "The tiny blue vehicle"

    def test_bare_category(self):
        assert render(PhraseFills(article="A", category="dam"), "phrase") == "A dam"

    def test_article_agreement_before_vowel(self):
        assert render(PhraseFills(article="A", category="airport"), "phrase") == "An airport"
        fills = PhraseFills(article="A", category="airport", color="orange",
                            modifier_order=("color",))
        assert render(fills, "phrase") == "An orange airport"

    def test_location_clause(self):
        fills = PhraseFills(article="The", category="ship", abs_location="top left")
        assert render(fills, "phrase") == "The ship in the top left of the image"

    def test_sentence(self):
        fills = SentenceFills(
            subject=PhraseFills(article="The", category="vehicle", step=3),
            relation_kind=RelationKind.REL_LOCATION,
            relation_value="left of",
            anchor=NounFills("bridge"),
        )
        assert render(fills, "sentence") == "The vehicle is on the left of the bridge"

    def test_sentence_with_anchor_attribute_and_size_relation(self):
        fills = SentenceFills(
            subject=PhraseFills(article="The", category="vehicle", step=3),
            relation_kind=RelationKind.REL_SIZE,
            relation_value="smaller than",
            anchor=NounFills("ship", "color", "blue"),
        )
        assert render(fills, "sentence") == "The vehicle is smaller than the blue ship"

    def test_vertical_relation_has_no_on_the(self):
        fills = SentenceFills(
            subject=PhraseFills(article="The", category="vehicle", step=3),
            relation_kind=RelationKind.REL_LOCATION,
            relation_value="above",
            anchor=NounFills("bridge"),
        )
        assert render(fills, "sentence") == "The vehicle is above the bridge"

    def test_missing_category_is_error(self):
        with pytest.raises(ValueError, match="category"):
            render(PhraseFills(article="The", category=""), "phrase")

    def test_inconsistent_order_is_error(self):
        fills = PhraseFills(article="The", category="ship", color="red", modifier_order=())
        with pytest.raises(ValueError, match="modifier_order"):
            render(fills, "phrase")


class TestTemplateGrammar:
    @pytest.mark.parametrize("text", [
        "The tiny blue vehicle",
        "A dam",
        "An airport",
        "The ship in the top left of the image",
        "The huge round storage tank in the middle of the image",
    ])
    def test_phrase_accepts(self, text):
        assert matches_template(text, "phrase")

    @pytest.mark.parametrize("text", [
        "The vehicle is on the left of the bridge",
        "The vehicle is above the bridge",
        "The vehicle is smaller than the blue ship",
        "An airport is larger than the dam",
    ])
    def test_sentence_accepts(self, text):
        assert matches_template(text, "sentence")

    @pytest.mark.parametrize("kind, text", [
        ("phrase", "the lowercase article"),
        ("phrase", "The vehicle in the sky"),
        ("phrase", "The vehicle is"),
        ("sentence", "The vehicle floats near the bridge"),
        ("sentence", "The vehicle is on the left of bridge"),
    ])
    def test_rejects(self, kind, text):
        assert not matches_template(text, kind)


class TestResolver:
    def test_color_singleton(self):
        scene = scene_of([("a", "vehicle", {"color": "red"}),
                          ("b", "vehicle", {"color": "blue"})])
        fills = PhraseFills(article="The", category="vehicle", color="red",
                            modifier_order=("color",))
        assert resolve_expression(fills, scene) == {"a"}

    def test_category_only_is_ambiguous(self):
        scene = scene_of([("a", "vehicle", {}), ("b", "vehicle", {})])
        fills = PhraseFills(article="The", category="vehicle")
        assert resolve_expression(fills, scene) == {"a", "b"}

    def test_no_match(self):
        scene = scene_of([("a", "vehicle", {})])
        assert resolve_expression(PhraseFills(article="The", category="airport"), scene) == set()

    def test_sentence_resolution(self):
        relations = [RelationalFact("a", "c", RelationKind.REL_LOCATION, "left of")]
        scene = scene_of([("a", "vehicle", {}), ("b", "vehicle", {}), ("c", "bridge", {})],
                         relations)
        fills = SentenceFills(
            subject=PhraseFills(article="The", category="vehicle", step=3),
            relation_kind=RelationKind.REL_LOCATION,
            relation_value="left of",
            anchor=NounFills("bridge"),
        )
        assert resolve_expression(fills, scene) == {"a"}


class TestGenerationSteps:
    def test_step1_unique_category(self):
        scene = scene_of([("a", "airport", {}), ("b", "vehicle", {}), ("c", "vehicle", {})])
        expr = generate_expression("a", scene, seed=5)
        assert isinstance(expr, Expression)
        assert expr.template_kind == "phrase"
        assert expr.fills.step == 1
        assert resolve_expression(expr, scene) == {"a"}
        assert matches_template(expr.text, "phrase")

    def test_step2_distinguishing_color(self):
        scene = scene_of([("a", "vehicle", {"color": "red"}),
                          ("b", "vehicle", {"color": "blue"})])
        expr = generate_expression("a", scene, seed=1)
        assert expr.fills.step == 2
        assert expr.fills.color == "red"
        assert resolve_expression(expr, scene) == {"a"}
        assert not category_is_unique(scene, "a")

    def test_step2_priority_color_over_size(self):
        scene = scene_of([("a", "vehicle", {"color": "red", "size_word": "tiny"}),
                          ("b", "vehicle", {"color": "blue", "size_word": "huge"})])
        assert find_distinguishing_attribute(scene, "a") == ("color", "red")

    def test_step3_relation_to_unique_anchor(self):
        relations = [
            RelationalFact("a", "c", RelationKind.REL_LOCATION, "left of"),
            RelationalFact("c", "a", RelationKind.REL_LOCATION, "right of"),
        ]
        scene = scene_of([("a", "vehicle", {}), ("b", "vehicle", {}), ("c", "bridge", {})],
                         relations)
        expr = generate_expression("a", scene, seed=0)
        assert isinstance(expr, Expression)
        assert expr.template_kind == "sentence"
        assert expr.text == "The vehicle is on the left of the bridge"
        assert resolve_expression(expr, scene) == {"a"}
        # earlier steps must have been inapplicable
        assert not category_is_unique(scene, "a")
        assert find_distinguishing_attribute(scene, "a") is None

    def test_step4_discard(self):
        scene = scene_of([("a", "vehicle", {}), ("b", "vehicle", {})])
        result = generate_expression("a", scene, seed=3)
        assert isinstance(result, Discarded)
        assert result.target_id == "a"
        assert find_distinguishing_relation(scene, "a") is None

    def test_relation_shared_by_rival_not_distinguishing(self):
        relations = [
            RelationalFact("a", "c", RelationKind.REL_LOCATION, "left of"),
            RelationalFact("b", "c", RelationKind.REL_LOCATION, "left of"),
        ]
        scene = scene_of([("a", "vehicle", {}), ("b", "vehicle", {}), ("c", "bridge", {})],
                         relations)
        assert isinstance(generate_expression("a", scene, seed=3), Discarded)

    def test_anchor_needs_identification(self):
        # two indistinguishable bridges: the relation cannot anchor on either
        relations = [RelationalFact("a", "c", RelationKind.REL_LOCATION, "left of")]
        scene = scene_of([("a", "vehicle", {}), ("b", "vehicle", {}),
                          ("c", "bridge", {}), ("d", "bridge", {})], relations)
        assert isinstance(generate_expression("a", scene, seed=3), Discarded)

    def test_anchor_identified_by_attribute(self):
        relations = [RelationalFact("a", "c", RelationKind.REL_SIZE, "smaller than")]
        scene = scene_of([("a", "vehicle", {}), ("b", "vehicle", {}),
                          ("c", "ship", {"color": "red"}), ("d", "ship", {"color": "blue"})],
                         relations)
        expr = generate_expression("a", scene, seed=3)
        assert expr.text == "The vehicle is smaller than the red ship"

    def test_unknown_target_is_hard_error(self):
        scene = scene_of([("a", "vehicle", {})])
        with pytest.raises(KeyError):
            generate_expression("ghost", scene, seed=0)

    def test_determinism(self):
        scene = scene_of([("a", "airport", {"color": "gray", "size_word": "huge",
                                            "abs_location": "middle"})])
        texts = {generate_expression("a", scene, seed=123).text for _ in range(5)}
        assert len(texts) == 1
        other = generate_expression("a", scene, seed=124).text
        # a different seed may or may not change the text, but must not crash
        assert isinstance(other, str)


class TestSerialization:
    def test_phrase_round_trip(self):
        fills = PhraseFills(article="The", category="vehicle", color="blue",
                            abs_location="top", modifier_order=("color",), step=2)
        assert fills_from_dict(fills_to_dict(fills)) == fills

    def test_sentence_round_trip(self):
        fills = SentenceFills(
            subject=PhraseFills(article="The", category="vehicle", step=3),
            relation_kind=RelationKind.REL_SIZE,
            relation_value="larger than",
            anchor=NounFills("ship", "color", "blue"),
        )
        assert fills_from_dict(fills_to_dict(fills)) == fills

    def test_expression_round_trip(self):
        scene = scene_of([("a", "airport", {})])
        expr = generate_expression("a", scene, seed=9)
        assert expression_from_dict(expression_to_dict(expr)) == expr


categories = st.sampled_from(["vehicle", "ship", "airport", "bridge"])
colors = st.sampled_from([None] + list(COLOR_WORDS))
sizes = st.sampled_from([None] + list(SIZE_WORDS))
locations = st.sampled_from([None] + list(LOCATION_WORDS))


@st.composite
def random_scenes(draw):
    n = draw(st.integers(3, 12))
    rng = random.Random(draw(st.integers(0, 10 ** 6)))
    objects, attributes = [], {}
    span = 800 // n
    for i in range(n):
        object_id = f"img:{i:04d}"
        category = draw(categories)
        x = i * span + 5
        w = rng.randint(10, span - 6)
        y = rng.randint(5, 700)
        h = rng.randint(10, 80)
        objects.append(ObjectInstance(object_id, "img", category,
                                      BBox(x, y, x + w, y + h)))
        attributes[object_id] = AttributeSet(
            category, color=draw(colors), size_word=draw(sizes), abs_location=draw(locations))
    scene = build_scene(IMG, objects)
    return Scene(IMG, scene.objects, attributes, scene.relations)


@given(scene=random_scenes(), seed=st.integers(0, 2 ** 32))
@settings(max_examples=100, deadline=None)
def test_soundness_over_random_scenes(scene, seed):
    for obj in scene.objects:
        result = generate_expression(obj.object_id, scene, seed)
        if isinstance(result, Discarded):
            continue
        assert resolve_expression(result, scene) == {obj.object_id}
        assert matches_template(result.text, result.template_kind)
        assert generate_expression(obj.object_id, scene, seed) == result
