"""Text-artifact validation.

Everything under inspection must be reviewable line by line, which means
plain text: prose documents in markdown, UML diagrams as PlantUML source.
Binary content (the old word-processor habit) is the one hard rejection;
all other findings are reported as violations with line numbers, never
raised.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .plantuml import END_TAG, START_TAG
from .workflow import ArtifactFormat, ArtifactKind, DEFAULT_FORMAT

NOT_TEXT = "NotText"
MISSING_HEADING = "MissingHeading"
MISSING_START_TAG = "MissingStartTag"
MISSING_END_TAG = "MissingEndTag"

_HEADING_RE = re.compile(r"^#{1,6}\s+\S")


@dataclass(frozen=True)
class Violation:
    code: str
    line: int
    message: str


@dataclass
class ValidationResult:
    path: str
    kind: ArtifactKind
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_text_artifact(
    path: str, kind: ArtifactKind, content: bytes,
) -> ValidationResult:
    """Check that content is UTF-8 text in the format the kind requires."""
    result = ValidationResult(path=path, kind=kind)
    if b"\x00" in content:
        line = content[: content.index(b"\x00")].count(b"\n") + 1
        result.violations.append(
            Violation(NOT_TEXT, line, "binary content (NUL byte); artifacts must be text")
        )
        return result
    try:
        text = content.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = content[: exc.start].count(b"\n") + 1
        result.violations.append(
            Violation(NOT_TEXT, line, f"not valid UTF-8 text: {exc.reason}")
        )
        return result

    lines = text.splitlines()
    fmt = DEFAULT_FORMAT[kind]
    if fmt is ArtifactFormat.MARKDOWN:
        if not any(_HEADING_RE.match(ln) for ln in lines):
            result.violations.append(
                Violation(MISSING_HEADING, 1, "markdown document has no heading")
            )
    elif fmt is ArtifactFormat.PLANTUML:
        start = _tag_line(lines, START_TAG)
        if start is None:
            result.violations.append(
                Violation(MISSING_START_TAG, 1, f"missing {START_TAG} line")
            )
        end = _tag_line(lines, END_TAG, after=start or 0)
        if end is None:
            result.violations.append(
                Violation(
                    MISSING_END_TAG, max(len(lines), 1), f"missing {END_TAG} line",
                )
            )
    # plain text: being decodable was the whole requirement
    return result


def _tag_line(lines: list[str], tag: str, after: int = 0) -> int | None:
    for i in range(after, len(lines)):
        if lines[i].strip() == tag:
            return i + 1
    return None
