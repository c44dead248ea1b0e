"""Requirement DSL: a sectioned text format for structured specifications.

A document is a sequence of sections, each opened by a header line such as
``PURPOSE:`` and running until the next header. Headers are matched
case-insensitively and may carry the first body line inline
(``PURPOSE: compute ...``). List sections use ``- name: text`` items; example
and edge-case sections use the labeled blocks from :mod:`specine.utils.markup`.

Body lines that would read as a header are written with a leading backslash
(``\\Hints: use a heap``); the parser drops that backslash again.
"""

import re
from enum import StrEnum

import msgspec

from .errors import DslValidationError
from .markup import block_field, parse_tests, render_tests
from .models import Origin, TestCase


class KeyConcept(msgspec.Struct, frozen=True):
    term: str
    definition: str


class ExampleCase(msgspec.Struct, frozen=True):
    input: str
    output: str
    explanation: str | None = None


class ApiRef(msgspec.Struct, frozen=True):
    name: str
    functionality: str


class RequirementDsl(msgspec.Struct, frozen=True):
    background: str | None = None
    purpose: str | None = None
    key_concepts: tuple[KeyConcept, ...] = ()
    input_requirements: str | None = None
    output_requirements: str | None = None
    examples: tuple[ExampleCase, ...] = ()
    edge_cases: tuple[TestCase, ...] = ()
    apis: tuple[ApiRef, ...] = ()
    error_handling: str | None = None
    hints: str | None = None


class DslParseReport(msgspec.Struct, frozen=True):
    value: RequirementDsl | None = None
    warnings: tuple[str, ...] = ()
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.value is not None


class DiffKind(StrEnum):
    CONTENT_DIFFERS = "content differs"
    ONLY_LEFT = "present-only-in-left"
    ONLY_RIGHT = "present-only-in-right"


class DslDifference(msgspec.Struct, frozen=True):
    field: str
    kind: DiffKind


class SectionKind(StrEnum):
    TEXT = "text"
    PAIRS = "pairs"
    EXAMPLES = "examples"
    TESTS = "tests"


# (field, canonical header, kind, schema description); order is the render order
SECTIONS: tuple[tuple[str, str, SectionKind, str], ...] = (
    (
        "background",
        "BACKGROUND",
        SectionKind.TEXT,
        "context, motivation or domain knowledge the task relies on",
    ),
    (
        "purpose",
        "PURPOSE",
        SectionKind.TEXT,
        "the objective and core task the code accomplishes",
    ),
    (
        "key_concepts",
        "KEY CONCEPTS",
        SectionKind.PAIRS,
        "one '- term: definition' line per critical term",
    ),
    (
        "input_requirements",
        "INPUT REQUIREMENTS",
        SectionKind.TEXT,
        "input data types, formats and constraints",
    ),
    (
        "output_requirements",
        "OUTPUT REQUIREMENTS",
        SectionKind.TEXT,
        "output data types, formats and constraints",
    ),
    (
        "examples",
        "EXAMPLES",
        SectionKind.EXAMPLES,
        "<example> blocks with <input>, <output> and optional <explanation>",
    ),
    (
        "edge_cases",
        "EDGE CASES",
        SectionKind.TESTS,
        "<test> blocks with <input> and <output> for boundary conditions",
    ),
    (
        "apis",
        "APIS",
        SectionKind.PAIRS,
        "one '- name: functionality' line per library function or API used",
    ),
    (
        "error_handling",
        "ERROR HANDLING",
        SectionKind.TEXT,
        "behaviour on invalid or unexpected input",
    ),
    (
        "hints",
        "HINTS",
        SectionKind.TEXT,
        "algorithms, data structures or other implementation notes",
    ),
)

_FIELD_KINDS = {field: kind for field, _, kind, _ in SECTIONS}
_FIELD_HEADERS = {field: header for field, header, _, _ in SECTIONS}

_HEADER_ALIASES = {
    "background": ("BACKGROUND", "SPECIFICATION BACKGROUND"),
    "purpose": ("PURPOSE", "SPECIFICATION PURPOSE"),
    "key_concepts": ("KEY CONCEPTS", "CONCEPTS"),
    "input_requirements": ("INPUT REQUIREMENTS",),
    "output_requirements": ("OUTPUT REQUIREMENTS",),
    "examples": ("EXAMPLES", "EXAMPLES WITH EXPLANATIONS"),
    "edge_cases": ("EDGE CASES", "EDGE/CORNER CASES", "EDGE CORNER CASES"),
    "apis": ("APIS", "API"),
    "error_handling": ("ERROR HANDLING", "ERROR HANDLING REQUIREMENTS"),
    "hints": ("HINTS", "HINTS OR TIPS", "TIPS"),
}


def _squash(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower())


_HEADER_KEYS = {
    _squash(alias): field
    for field, aliases in _HEADER_ALIASES.items()
    for alias in aliases
}

_HEADER_RE = re.compile(
    r"^\s*(?:#+\s*)?\**\s*([A-Za-z][A-Za-z /&_-]*?)\s*\**\s*:\s*\**(.*)$"
)
_EXAMPLE_RE = re.compile(r"<example>(.*?)</example>", re.S | re.I)
_ITEM_PREFIXES = ("- ", "* ")


def _match_header(line: str) -> tuple[str | None, str, bool]:
    """Classify a line as a known header, an unknown header or body text.

    Returns:
        tuple[str | None, str, bool]: (field or None, inline body or header name,
            whether the line is a header at all).
    """
    match = _HEADER_RE.match(line)
    if match is None:
        return None, "", False
    name, rest = match.group(1).strip(), match.group(2).strip()
    field = _HEADER_KEYS.get(_squash(name))
    if field is not None:
        return field, rest, True
    if not rest and name == name.upper():
        return None, name, True
    return None, "", False


def _needs_escape(line: str) -> bool:
    if line.startswith("\\"):
        return _needs_escape(line[1:])
    return _match_header(line)[2]


def _escape(line: str) -> str:
    return f"\\{line}" if _needs_escape(line) else line


def _unescape(line: str) -> str:
    if line.startswith("\\") and _needs_escape(line[1:]):
        return line[1:]
    return line


def _parse_pairs(
    lines: list[str], section: str, warnings: list[str]
) -> list[tuple[str, str]]:
    items: list[list[str]] = []
    for line in lines:
        stripped = line.strip()
        if stripped.startswith(_ITEM_PREFIXES) or stripped in ("-", "*"):
            items.append([stripped[2:].strip()])
        elif stripped and items:
            items[-1].append(stripped)
        elif stripped:
            warnings.append(f"{section}: ignored text outside a list item")

    pairs: list[tuple[str, str]] = []
    seen: dict[str, int] = {}
    for first, *rest in items:
        name, sep, text = first.partition(":")
        name = name.strip()
        if not sep or not name:
            warnings.append(f"{section}: skipped item without 'name: text' form")
            continue
        body = "\n".join([text.strip(), *rest]).strip()
        if name in seen:
            warnings.append(f"{section}: duplicated item '{name}', keeping the last")
            pairs[seen[name]] = (name, body)
            continue
        seen[name] = len(pairs)
        pairs.append((name, body))
    return pairs


def _parse_examples(body: str, warnings: list[str]) -> list[ExampleCase]:
    examples: list[ExampleCase] = []
    for match in _EXAMPLE_RE.finditer(body):
        block = match.group(1)
        example_input = (block_field(block, "input") or "").strip()
        output = (block_field(block, "output") or "").strip()
        if not example_input or not output:
            warnings.append("EXAMPLES: skipped example without input or output")
            continue
        explanation = (block_field(block, "explanation") or "").strip() or None
        examples.append(
            ExampleCase(input=example_input, output=output, explanation=explanation)
        )
    return examples


def parse_dsl(text: str) -> DslParseReport:
    """Parse requirement DSL text into a structured value.

    Unknown all-caps headers and duplicated sections produce warnings (the last
    occurrence of a duplicated section wins). Text before the first header is
    ignored.

    Args:
        text (str): DSL text, usually a model completion.

    Returns:
        DslParseReport: The parsed value with warnings, or an error when no
            section could be recognized or none of them had content.
    """
    warnings: list[str] = []
    sections: dict[str, list[str]] = {}
    current: str | None = None
    preamble = False

    for line in text.replace("\r\n", "\n").split("\n"):
        field, rest, is_header = _match_header(line)
        if is_header and field is not None:
            if field in sections:
                warnings.append(
                    f"duplicated section '{_FIELD_HEADERS[field]}', keeping the last"
                )
            sections[field] = [rest] if rest else []
            current = field
        elif is_header:
            warnings.append(f"unrecognized section '{rest}'")
            current = None
        elif current is not None:
            sections[current].append(_unescape(line))
        elif line.strip():
            preamble = True

    if not sections:
        return DslParseReport(
            error="no recognizable sections", warnings=tuple(warnings)
        )
    if preamble:
        warnings.append("ignored text outside sections")

    values: dict[str, object] = {}
    for field, lines in sections.items():
        header = _FIELD_HEADERS[field]
        body = "\n".join(lines).strip()
        match _FIELD_KINDS[field]:
            case SectionKind.TEXT:
                value: object = body or None
            case SectionKind.PAIRS:
                pairs = _parse_pairs(lines, header, warnings)
                if field == "key_concepts":
                    value = tuple(KeyConcept(term=t, definition=d) for t, d in pairs)
                else:
                    value = tuple(ApiRef(name=n, functionality=f) for n, f in pairs)
            case SectionKind.EXAMPLES:
                value = tuple(_parse_examples(body, warnings))
            case SectionKind.TESTS:
                value = tuple(parse_tests(body, Origin.EDGE))
        if not value:
            warnings.append(f"empty section '{header}'")
        empty = None if _FIELD_KINDS[field] == SectionKind.TEXT else ()
        values[field] = value or empty

    dsl = RequirementDsl(**values)
    if not is_populated(dsl):
        return DslParseReport(error="no populated sections", warnings=tuple(warnings))
    return DslParseReport(value=dsl, warnings=tuple(warnings))


def is_populated(dsl: RequirementDsl) -> bool:
    return any(_render_body(dsl, field) is not None for field, *_ in SECTIONS)


def _render_body(dsl: RequirementDsl, field: str) -> str | None:
    value = getattr(dsl, field)
    match _FIELD_KINDS[field]:
        case SectionKind.TEXT:
            body = (value or "").strip()
            return body or None
        case SectionKind.PAIRS:
            if not value:
                return None
            return "\n".join(
                f"- {item[0]}: {item[1]}".rstrip() for item in value
            )
        case SectionKind.EXAMPLES:
            if not value:
                return None
            blocks = []
            for example in value:
                block = (
                    f"<example>\n<input>\n{example.input.strip()}\n</input>\n"
                    f"<output>\n{example.output.strip()}\n</output>\n"
                )
                if example.explanation and example.explanation.strip():
                    block += (
                        f"<explanation>\n{example.explanation.strip()}\n"
                        "</explanation>\n"
                    )
                blocks.append(block + "</example>")
            return "\n".join(blocks)
        case SectionKind.TESTS:
            return render_tests(value) if value else None


def render_dsl(dsl: RequirementDsl) -> str:
    """Render a DSL value in canonical form.

    Only populated sections appear, in the fixed section order, separated by a
    blank line. Header-like body lines are escaped.
    """
    blocks = []
    for field, header, _, _ in SECTIONS:
        body = _render_body(dsl, field)
        if body is not None:
            escaped = "\n".join(_escape(line) for line in body.split("\n"))
            blocks.append(f"{header}:\n{escaped}")
    return "\n\n".join(blocks)


def validate_dsl(dsl: RequirementDsl) -> None:
    """Check the schema invariants of a DSL value.

    Raises:
        DslValidationError: If no section is populated, a key concept term is
            empty, duplicated or not a single colon-free line, or an example lacks
            input or output.
    """
    if not is_populated(dsl):
        raise DslValidationError("at least one section must be populated")
    for label, names in (
        ("key concept term", [c.term for c in dsl.key_concepts]),
        ("api name", [a.name for a in dsl.apis]),
    ):
        for name in names:
            if not name.strip() or ":" in name or "\n" in name:
                raise DslValidationError(f"invalid {label} '{name}'")
        if len(set(names)) != len(names):
            raise DslValidationError(f"duplicated {label}")
    for example in dsl.examples:
        if not example.input.strip() or not example.output.strip():
            raise DslValidationError("every example needs an input and an output")


def dsl_diff(a: RequirementDsl, b: RequirementDsl) -> list[DslDifference]:
    """Compare two DSL values section by section.

    Sections are compared in their canonical rendered form, so the diff is empty
    exactly when both values render identically.

    Returns:
        list[DslDifference]: One entry per differing field, in section order.
    """
    differences: list[DslDifference] = []
    for field, *_ in SECTIONS:
        left, right = _render_body(a, field), _render_body(b, field)
        if left == right:
            continue
        if right is None:
            kind = DiffKind.ONLY_LEFT
        elif left is None:
            kind = DiffKind.ONLY_RIGHT
        else:
            kind = DiffKind.CONTENT_DIFFERS
        differences.append(DslDifference(field=field, kind=kind))
    return differences


def dsl_schema() -> str:
    """Describe the canonical sections, for prompts that ask a model to emit DSL."""
    lines = [f"{header}: {description}" for _, header, _, description in SECTIONS]
    return "\n".join(lines)
