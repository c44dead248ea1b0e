from specine.utils import (
    AlignedIngredient,
    AlignmentRule,
    Origin,
    TestCase,
    block_field,
    edge_tests,
    parse_ingredient_blocks,
    parse_rewrite,
    parse_tests,
    render_ingredient,
    render_tests,
)


def test_parse_tests_keeps_inner_whitespace():
    text = (
        "Some prose first.\n"
        "<test>\n<input>\n1 2\n  3\n</input>\n<output>\n3\n</output>\n</test>\n"
        "<TEST><input>5</input><output>5</output></TEST>"
    )
    assert parse_tests(text, Origin.GENERATED) == [
        TestCase(input="1 2\n  3", expected="3", origin=Origin.GENERATED),
        TestCase(input="5", expected="5", origin=Origin.GENERATED),
    ]


def test_parse_tests_skips_incomplete_blocks():
    text = (
        "<test><input>1</input></test>"
        "<test><input>2</input><output>\n</output></test>"
        "<test><output>3</output></test>"
        "<test><input></input><output>ok</output></test>"
    )
    assert parse_tests(text, Origin.EDGE) == [
        TestCase(input="", expected="ok", origin=Origin.EDGE)
    ]


def test_render_tests_parses_back():
    tests = [TestCase(input="4\n1 2 3 4", expected="10"), TestCase("", "0")]
    assert parse_tests(render_tests(tests), Origin.PUBLIC) == tests


def test_block_field():
    assert block_field("<hint>\nuse a heap\n</hint>", "hint") == "use a heap"
    assert block_field("no tags", "input") is None


def test_ingredient_blocks():
    text = (
        '<ingredient rule="Specification Purpose">\n  Print the sum.  \n</ingredient>\n'
        "<ingredient rule='Made Up'>x</ingredient>"
    )
    assert parse_ingredient_blocks(text) == [
        ("Specification Purpose", "Print the sum."),
        ("Made Up", "x"),
    ]


def test_render_ingredient_uses_title():
    ingredient = AlignedIngredient(AlignmentRule.APIS, "Use heapq.")
    assert render_ingredient(ingredient) == (
        '<ingredient rule="APIs">\nUse heapq.\n</ingredient>'
    )
    assert parse_ingredient_blocks(render_ingredient(ingredient)) == [
        ("APIs", "Use heapq.")
    ]


def test_parse_rewrite():
    reply = "<aligned_specification>\n New spec \n</aligned_specification>"
    assert parse_rewrite(reply) == "New spec"
    assert parse_rewrite("<aligned_specification> </aligned_specification>") is None
    assert parse_rewrite("no block") is None


def test_edge_tests_only_for_edge_ingredients():
    content = render_tests([TestCase("1", "1"), TestCase("2", "4")])
    edge = AlignedIngredient(AlignmentRule.EDGE_CORNER_CASES, content)
    assert edge_tests(edge) == [
        TestCase("1", "1", Origin.EDGE),
        TestCase("2", "4", Origin.EDGE),
    ]
    assert edge_tests(AlignedIngredient(AlignmentRule.HINTS_OR_TIPS, content)) == []
