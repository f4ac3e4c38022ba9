"""PlantUML class-diagram subset parser with line-addressable elements.

Diagrams are plain text, so review feedback can point at the exact line
that declares a class or relation. The subset covers what course class
diagrams use: class declarations with bodies, the five relation arrows,
and relation labels after a colon. Anything else (skinparam, notes,
packages) is skipped with a warning rather than rejected, because student
files contain such noise. The grammar is written out in
``docs/plantuml-subset.md``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError

#: Relation arrows, longest first so '--' cannot shadow the others.
ARROW_KINDS = {
    "<|--": "inheritance",
    "o--": "aggregation",
    "*--": "composition",
    "..>": "dependency",
    "--": "association",
}
ARROW_TEXT = {kind: arrow for arrow, kind in ARROW_KINDS.items()}

START_TAG = "@startuml"
END_TAG = "@enduml"

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_CLASS_RE = re.compile(rf"^class(?:\s+(?P<name>{_NAME}))?\s*(?P<brace>\{{)?\s*$")
_ARROW_ALT = "|".join(re.escape(a) for a in ARROW_KINDS)
_RELATION_RE = re.compile(
    rf"^(?P<left>{_NAME})\s*(?P<arrow>{_ARROW_ALT})\s*(?P<right>{_NAME})"
    rf"\s*(?::\s*(?P<label>\S.*?)\s*)?$"
)
#: Anything shaped like "name <arrow-ish> name" is a relation attempt even
#: when the arrow itself is not one we know.
_ARROWISH_RE = re.compile(rf"^{_NAME}\s*[<>o*|.\-]{{2,}}[<>o*|.\-]*\s*{_NAME}")


@dataclass
class UmlClass:
    name: str
    attributes: list[str] = field(default_factory=list)
    methods: list[str] = field(default_factory=list)
    decl_line: int = 0


@dataclass
class UmlRelation:
    kind: str
    left: str
    right: str
    label: str | None = None
    decl_line: int = 0


@dataclass
class PlantUmlClassModel:
    classes: list[UmlClass] = field(default_factory=list)
    relations: list[UmlRelation] = field(default_factory=list)
    #: parse diagnostics; not part of the model identity
    warnings: list[str] = field(default_factory=list, compare=False)

    def class_names(self) -> set[str]:
        return {c.name for c in self.classes}


def parse_class_diagram(content: str) -> PlantUmlClassModel:
    """Parse the subset grammar; every element records its 1-based source line."""
    lines = content.splitlines()
    model = PlantUmlClassModel()

    start = _find_tag(lines, START_TAG)
    if start is None:
        raise ParseError("missing @startuml", line=1, expected=START_TAG)
    end = _find_tag(lines, END_TAG, after=start)
    if end is None:
        raise ParseError(
            "missing @enduml", line=max(len(lines), 1), expected=END_TAG,
        )

    no = start + 1  # 0-based index of the first payload line
    while no < end:
        raw = lines[no]
        text = raw.strip()
        lineno = no + 1
        if not text or text.startswith("'"):
            no += 1
            continue

        if text.startswith("class"):
            m = _CLASS_RE.match(text)
            if not m or not m.group("name"):
                raise ParseError(
                    f"malformed class declaration: {text!r}",
                    line=lineno, expected="class <Name> [{]",
                )
            cls = UmlClass(name=m.group("name"), decl_line=lineno)
            model.classes.append(cls)
            if m.group("brace"):
                no = _parse_body(lines, no + 1, end, cls)
                continue
            no += 1
            continue

        rel = _RELATION_RE.match(text)
        if rel:
            relation = UmlRelation(
                kind=ARROW_KINDS[rel.group("arrow")],
                left=rel.group("left"),
                right=rel.group("right"),
                label=rel.group("label"),
                decl_line=lineno,
            )
            model.relations.append(relation)
            for endpoint in (relation.left, relation.right):
                if endpoint not in model.class_names():
                    model.classes.append(UmlClass(name=endpoint, decl_line=lineno))
                    model.warnings.append(
                        f"line {lineno}: relation endpoint '{endpoint}' was never "
                        "declared; declared it implicitly"
                    )
            no += 1
            continue

        if _ARROWISH_RE.match(text):
            raise ParseError(
                f"unrecognized relation arrow in: {text!r}",
                line=lineno,
                expected="one of " + ", ".join(ARROW_KINDS),
            )

        model.warnings.append(
            f"line {lineno}: skipped unsupported directive: {text!r}"
        )
        no += 1

    return model


def _find_tag(lines: list[str], tag: str, after: int = -1) -> int | None:
    for i in range(after + 1, len(lines)):
        if lines[i].strip() == tag:
            return i
    return None


def _parse_body(lines: list[str], start: int, end: int, cls: UmlClass) -> int:
    """Consume member lines until the closing brace; returns the next index."""
    no = start
    while no < end:
        text = lines[no].strip()
        if text == "}":
            return no + 1
        if "{" in text or "}" in text:
            raise ParseError(
                f"unexpected brace inside class body: {text!r}",
                line=no + 1, expected="member or }",
            )
        if text and not text.startswith("'"):
            if "()" in text:
                cls.methods.append(text)
            else:
                cls.attributes.append(text)
        no += 1
    raise ParseError(
        f"class '{cls.name}' body never closed",
        line=end, expected="}",
    )


def render_class_diagram(model: PlantUmlClassModel) -> str:
    """Canonical text form: classes in order, then relations.

    Parsing the rendered text reproduces the model, including declaration
    lines, whenever the model's lines already follow this layout.
    """
    out = [START_TAG]
    for cls in model.classes:
        if cls.attributes or cls.methods:
            out.append(f"class {cls.name} {{")
            out.extend(f"  {member}" for member in cls.attributes)
            out.extend(f"  {member}" for member in cls.methods)
            out.append("}")
        else:
            out.append(f"class {cls.name}")
    for rel in model.relations:
        line = f"{rel.left} {ARROW_TEXT[rel.kind]} {rel.right}"
        if rel.label is not None:
            line += f" : {rel.label}"
        out.append(line)
    out.append(END_TAG)
    return "\n".join(out) + "\n"


def element_line_index(model: PlantUmlClassModel) -> dict[str, int]:
    """Stable element-path -> declaration-line map for anchoring feedback.

    Duplicate names (they happen in student diagrams) get an occurrence
    suffix instead of being rejected: 'class:Student#2'.
    """
    index: dict[str, int] = {}
    seen: dict[str, int] = {}

    def put(base: str, line: int) -> None:
        seen[base] = seen.get(base, 0) + 1
        key = base if seen[base] == 1 else f"{base}#{seen[base]}"
        index[key] = line

    for cls in model.classes:
        put(f"class:{cls.name}", cls.decl_line)
    for rel in model.relations:
        put(f"rel:{rel.left}{ARROW_TEXT[rel.kind]}{rel.right}", rel.decl_line)
    return index
