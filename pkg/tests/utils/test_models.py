import random
from fractions import Fraction

import pytest

from specine.utils import (
    AlignedIngredient,
    AlignedSpec,
    AlignmentRule,
    ChatMessage,
    ChatRequest,
    ExecutionLimits,
    HierarchicalScore,
    Ordering,
    PipelineConfig,
    Problem,
    Ratio,
    TestCase,
    UsageStats,
    Variant,
    compare_scores,
    normalize_output,
    render_aligned_spec,
)


def score(pp: int, pt: int, gp: int, gt: int) -> HierarchicalScore:
    return HierarchicalScore(primary=Ratio(pp, pt), secondary=Ratio(gp, gt))


def random_score(rng: random.Random) -> HierarchicalScore:
    pt, gt = rng.randint(0, 6), rng.randint(0, 6)
    return score(rng.randint(0, pt), pt, rng.randint(0, gt), gt)


@pytest.mark.parametrize(
    "name",
    [
        "EdgeCornerCases",
        "Edge/Corner Cases",
        "edge corner cases",
        " EDGE-CORNER-CASES ",
    ],
)
def test_rule_lookup_ignores_case_and_punctuation(name):
    assert AlignmentRule.lookup(name) == AlignmentRule.EDGE_CORNER_CASES


def test_rule_lookup_unknown():
    assert AlignmentRule.lookup("Performance Budget") is None


def test_rule_titles_cover_every_rule():
    assert AlignmentRule.HINTS_OR_TIPS.title == "Hints or Tips"
    assert len({rule.title for rule in AlignmentRule}) == 10


def test_variant_parse():
    assert Variant.parse("WOPTC") == Variant.WO_PTC
    assert Variant.parse(" wtf ") == Variant.W_TF
    with pytest.raises(ValueError, match="Unknown variant 'nope'"):
        Variant.parse("nope")


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("3", ["3"]),
        ("3  \n", ["3"]),
        ("1 \n2\t\n\n\n", ["1", "2"]),
        ("\n3", ["", "3"]),
        (" 3", [" 3"]),
        ("", []),
    ],
)
def test_normalize_output(text, expected):
    assert normalize_output(text) == expected


def test_normalize_output_is_idempotent():
    text = "a  \n b\n\n"
    once = "\n".join(normalize_output(text))
    assert normalize_output(once) == normalize_output(text)


def test_problem_violations():
    valid = Problem(
        id="p1",
        spec_text="Print 1.",
        public_tests=(TestCase(input="", expected="1"),),
        private_tests=(TestCase(input="x", expected="1"),),
    )
    assert valid.violations() == []

    bad = Problem(id=" ", spec_text="", private_tests=())
    assert bad.violations() == [
        "id is empty",
        "specification text is empty",
        "no private tests",
    ]


def test_problem_overlap_uses_normalized_identity():
    problem = Problem(
        id="p1",
        spec_text="Echo.",
        public_tests=(TestCase(input="1\n", expected="1  "),),
        private_tests=(TestCase(input="1", expected="1"),),
    )
    assert problem.violations() == ["a test appears in both public and private tests"]


def test_ratio_formatting():
    ratio = Ratio(159, 205)
    assert ratio.value == Fraction(159, 205)
    assert ratio.percent == 77.56
    assert str(ratio) == "159/205"
    assert Ratio(0, 0).value == 0
    assert Ratio(0, 0).absent
    assert not Ratio(0, 0).complete
    assert Ratio(3, 3).complete


@pytest.mark.parametrize(
    ("value", "perfect"),
    [
        (score(0, 0, 0, 0), False),
        (score(3, 3, 0, 0), True),
        (score(0, 0, 5, 5), True),
        (score(3, 3, 4, 5), False),
        (score(2, 3, 5, 5), False),
    ],
)
def test_is_perfect(value, perfect):
    assert value.is_perfect is perfect


def test_compare_scores_examples():
    assert compare_scores(score(0, 3, 2, 5), score(0, 3, 0, 5)) == Ordering.GREATER
    # primary dominates secondary
    assert compare_scores(score(1, 3, 0, 5), score(0, 3, 5, 5)) == Ordering.GREATER
    assert compare_scores(score(1, 2, 0, 5), score(2, 4, 0, 1)) == Ordering.EQUAL
    # absent components count as zero
    assert compare_scores(score(0, 0, 1, 2), score(0, 3, 1, 2)) == Ordering.EQUAL
    assert compare_scores(score(0, 3, 1, 2), score(0, 3, 2, 2)) == Ordering.LESS


def test_compare_scores_is_a_total_preorder():
    rng = random.Random(7)
    for _ in range(10_000):
        a, b, c = random_score(rng), random_score(rng), random_score(rng)
        ab, ba = compare_scores(a, b), compare_scores(b, a)
        assert compare_scores(a, a) == Ordering.EQUAL
        assert ab == -ba
        if ab >= Ordering.EQUAL and compare_scores(b, c) >= Ordering.EQUAL:
            assert compare_scores(a, c) >= Ordering.EQUAL
        if a.primary.value != b.primary.value:
            expected = (
                Ordering.GREATER if a.primary.value > b.primary.value else Ordering.LESS
            )
            assert ab == expected


def test_with_ingredients_replaces_same_rule():
    purpose = AlignedIngredient(AlignmentRule.SPECIFICATION_PURPOSE, "A", 1)
    inputs = AlignedIngredient(AlignmentRule.INPUT_REQUIREMENTS, "B", 2)
    spec = AlignedSpec(base="base", retained=(purpose, inputs))

    newer = AlignedIngredient(AlignmentRule.SPECIFICATION_PURPOSE, "C", 3)
    updated = spec.with_ingredients((newer,))

    assert updated.retained == (inputs, newer)
    assert updated.base == "base"
    assert spec.retained == (purpose, inputs)


def test_with_ingredients_last_proposal_wins():
    first = AlignedIngredient(AlignmentRule.APIS, "first", 1)
    second = AlignedIngredient(AlignmentRule.APIS, "second", 1)
    spec = AlignedSpec(base="base").with_ingredients((first, second))
    assert spec.retained == (second,)
    assert spec.rules == (AlignmentRule.APIS,)


def test_render_aligned_spec():
    spec = AlignedSpec(
        base="Print n.",
        retained=(
            AlignedIngredient(AlignmentRule.SPECIFICATION_PURPOSE, "Print n twice."),
            AlignedIngredient(AlignmentRule.HINTS_OR_TIPS, "Use a loop."),
        ),
    )
    assert render_aligned_spec(spec) == (
        "Print n.\n\n## Specification Purpose\nPrint n twice.\n\n"
        "## Hints or Tips\nUse a loop."
    )
    assert render_aligned_spec(AlignedSpec(base="Print n.")) == "Print n."


def test_render_aligned_spec_escapes_section_markers():
    hidden = AlignedSpec(
        base="Print n.",
        retained=(
            AlignedIngredient(
                AlignmentRule.SPECIFICATION_PURPOSE, "a\n\n## Hints or Tips\nb"
            ),
        ),
    )
    split = AlignedSpec(
        base="Print n.",
        retained=(
            AlignedIngredient(AlignmentRule.SPECIFICATION_PURPOSE, "a"),
            AlignedIngredient(AlignmentRule.HINTS_OR_TIPS, "b"),
        ),
    )
    assert render_aligned_spec(hidden) == (
        "Print n.\n\n## Specification Purpose\na\n\n\\## Hints or Tips\nb"
    )
    assert render_aligned_spec(hidden) != render_aligned_spec(split)


CONTENT_LINES = ("a", "", "## Hints or Tips", "## APIs", "\\## APIs", "\\", "b")
RULES = (
    AlignmentRule.SPECIFICATION_PURPOSE,
    AlignmentRule.APIS,
    AlignmentRule.HINTS_OR_TIPS,
)


def random_retained(rng: random.Random) -> tuple[AlignedIngredient, ...]:
    return tuple(
        AlignedIngredient(
            rng.choice(RULES),
            "\n".join(rng.choices(CONTENT_LINES, k=rng.randint(0, 3))),
            rng.randint(0, 5),
        )
        for _ in range(rng.randint(0, 3))
    )


def test_render_aligned_spec_is_injective_for_fixed_base():
    rng = random.Random(11)
    seen: dict[str, tuple[tuple[AlignmentRule, str], ...]] = {}
    for _ in range(20_000):
        retained = random_retained(rng)
        content = tuple((i.rule, i.content) for i in retained)
        text = render_aligned_spec(AlignedSpec(base="## APIs\nbase", retained=retained))
        assert seen.setdefault(text, content) == content
    # the small alphabet makes near-collisions common
    assert len(seen) > 1_000


def test_spec_version_tracks_rendered_text():
    base = AlignedSpec(base="Print n.")
    assert base.version == AlignedSpec(base="Print n.").version
    assert len(base.version) == 12
    assert base.with_base("Print n!").version != base.version
    rewritten = base.with_ingredients(
        (AlignedIngredient(AlignmentRule.APIS, "Use sys.stdin."),)
    ).with_base("Print 2n.")
    assert rewritten.base == "Print 2n."
    assert rewritten.rules == (AlignmentRule.APIS,)


def test_value_checks():
    with pytest.raises(ValueError):
        ExecutionLimits(wall_timeout=0)
    with pytest.raises(ValueError):
        PipelineConfig(max_iterations=0)
    with pytest.raises(ValueError):
        ChatRequest(messages=())
    with pytest.raises(ValueError):
        ChatRequest(messages=(ChatMessage(role="assistant", content="hi"),))


def test_usage_stats_add():
    total = UsageStats(3, 4) + UsageStats(10, 20)
    assert total == UsageStats(13, 24)
    assert total.total == 37
