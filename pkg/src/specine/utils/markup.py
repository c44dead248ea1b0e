"""Labeled-block markup shared by agent prompts, agent replies and the DSL.

Test cases are written as::

    <test>
    <input>
    1 2
    </input>
    <output>
    3
    </output>
    </test>

and aligned ingredients as ``<ingredient rule="Specification Purpose"> ...
</ingredient>``. Block bodies keep their inner whitespace; only the newline
directly after an opening tag and directly before a closing tag belongs to the
markup.
"""

import re

from .models import AlignedIngredient, AlignmentRule, Origin, TestCase

_TEST_RE = re.compile(r"<test>(.*?)</test>", re.S | re.I)
_INGREDIENT_RE = re.compile(
    r"<ingredient\s+rule\s*=\s*[\"']([^\"']*)[\"']\s*>(.*?)</ingredient>",
    re.S | re.I,
)
_REWRITE_RE = re.compile(
    r"<aligned_specification>(.*?)</aligned_specification>", re.S | re.I
)


def _tag_re(tag: str) -> re.Pattern[str]:
    return re.compile(rf"<{tag}>\n?(.*?)\n?</{tag}>", re.S | re.I)


_FIELD_RES = {tag: _tag_re(tag) for tag in ("input", "output", "explanation")}


def block_field(body: str, tag: str) -> str | None:
    """Extract the body of a `<tag>` block inside `body`, or None if absent."""
    pattern = _FIELD_RES.get(tag) or _tag_re(tag)
    match = pattern.search(body)
    if match is None:
        return None
    return match.group(1)


def parse_tests(text: str, origin: Origin) -> list[TestCase]:
    """Parse every well-formed `<test>` block in `text`.

    Blocks missing an input or an output are skipped.

    Args:
        text (str): Text holding zero or more test blocks.
        origin (Origin): The origin tag given to every parsed test.

    Returns:
        list[TestCase]: The parsed tests in document order.
    """
    tests: list[TestCase] = []
    for match in _TEST_RE.finditer(text):
        body = match.group(1)
        test_input = block_field(body, "input")
        expected = block_field(body, "output")
        if test_input is None or expected is None or not expected.strip():
            continue
        tests.append(TestCase(input=test_input, expected=expected, origin=origin))
    return tests


def render_test(test: TestCase) -> str:
    return (
        f"<test>\n<input>\n{test.input}\n</input>\n"
        f"<output>\n{test.expected}\n</output>\n</test>"
    )


def render_tests(tests: list[TestCase] | tuple[TestCase, ...]) -> str:
    return "\n".join(render_test(test) for test in tests)


def parse_ingredient_blocks(text: str) -> list[tuple[str, str]]:
    """Return (rule name, stripped content) pairs for every ingredient block."""
    return [
        (match.group(1).strip(), match.group(2).strip())
        for match in _INGREDIENT_RE.finditer(text)
    ]


def render_ingredient(ingredient: AlignedIngredient) -> str:
    return (
        f'<ingredient rule="{ingredient.rule.title}">\n'
        f"{ingredient.content}\n</ingredient>"
    )


def parse_rewrite(text: str) -> str | None:
    match = _REWRITE_RE.search(text)
    if match is None:
        return None
    rewrite = match.group(1).strip()
    return rewrite or None


def edge_tests(ingredient: AlignedIngredient) -> list[TestCase]:
    """Tests carried by an Edge/Corner Cases ingredient; empty for other rules."""
    if ingredient.rule != AlignmentRule.EDGE_CORNER_CASES:
        return []
    return parse_tests(ingredient.content, Origin.EDGE)
