"""Semantic model of a PDL source and its canonical rendering.

Grammar (informal):

    model    := classdef*
    classdef := "class" IDENT "{" member* "}"
    member   := stereo* typeref IDENT ["(" ")"] ";"        (parens => method)
    stereo   := "<<" KEY "=" STRING ">>"                   KEY in {use, mandatory, optional, notUsed}
    typeref  := IDENT ["<" typeref ">"]

Strings are double-quoted, may span lines, and support \\" and \\\\ escapes;
their semantic value has every whitespace run collapsed to a single space.
`//` starts a line comment.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class EdgeKind(enum.Enum):
    MANDATORY = "mandatory"
    OPTIONAL = "optional"


@dataclass(frozen=True, order=True)
class MethodRef:
    """Syntactic `Class.method` reference."""

    class_name: str
    method_name: str

    def qualified(self) -> str:
        return f"{self.class_name}.{self.method_name}"

    @classmethod
    def parse(cls, text: str) -> "MethodRef":
        left, dot, right = text.partition(".")
        if not dot or not left or not right or "." in right:
            raise ValueError(f"method reference must have the form Class.method, got {text!r}")
        return cls(left, right)


@dataclass(frozen=True)
class PdlAttribute:
    name: str
    type_name: str
    use_text: str | None = None
    mandatory_refs: tuple[MethodRef, ...] = ()
    optional_refs: tuple[MethodRef, ...] = ()

    def declared(self) -> bool:
        """An attribute is declared (grantable, monitored) iff it carries a use
        purpose or at least one method reference."""
        return self.use_text is not None or bool(self.mandatory_refs) or bool(self.optional_refs)


@dataclass(frozen=True)
class PdlMethod:
    name: str
    return_type: str
    use_text: str | None = None
    not_used_text: str | None = None


@dataclass(frozen=True)
class PdlClass:
    name: str
    attributes: tuple[PdlAttribute, ...] = ()
    methods: tuple[PdlMethod, ...] = ()

    def member_names(self) -> list[str]:
        return [a.name for a in self.attributes] + [m.name for m in self.methods]


@dataclass(frozen=True)
class PdlModel:
    classes: tuple[PdlClass, ...] = ()
    source_name: str = "<string>"

    def find_class(self, name: str) -> PdlClass | None:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def find_method(self, ref: MethodRef) -> PdlMethod | None:
        cls = self.find_class(ref.class_name)
        if cls is None:
            return None
        for m in cls.methods:
            if m.name == ref.method_name:
                return m
        return None

    def iter_attributes(self):
        """(class, attribute) pairs in declaration order."""
        for c in self.classes:
            for a in c.attributes:
                yield c, a

    def iter_methods(self):
        for c in self.classes:
            for m in c.methods:
                yield c, m

    def semantically_equal(self, other: "PdlModel") -> bool:
        """Equality ignoring source_name."""
        return self.classes == other.classes


@dataclass(frozen=True)
class AccessEdge:
    """Reified stereotype reference: `attribute` may be read by `method`."""

    attribute: str  # qualified Class.attribute
    method: MethodRef
    kind: EdgeKind


def normalize_text(text: str) -> str:
    """Collapse whitespace runs (including newlines) to single spaces."""
    return " ".join(text.split())


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def render(model: PdlModel) -> str:
    """Canonical pretty-print; parse(render(m)) is semantically m (with
    normalized stereotype texts)."""
    lines: list[str] = []
    for cls in model.classes:
        lines.append(f"class {cls.name} {{")
        for attr in cls.attributes:
            if attr.use_text is not None:
                lines.append(f'  <<use="{_escape(normalize_text(attr.use_text))}">>')
            for ref in attr.mandatory_refs:
                lines.append(f'  <<mandatory="{_escape(ref.qualified())}">>')
            for ref in attr.optional_refs:
                lines.append(f'  <<optional="{_escape(ref.qualified())}">>')
            lines.append(f"  {attr.type_name} {attr.name};")
        for meth in cls.methods:
            if meth.use_text is not None:
                lines.append(f'  <<use="{_escape(normalize_text(meth.use_text))}">>')
            if meth.not_used_text is not None:
                lines.append(f'  <<notUsed="{_escape(normalize_text(meth.not_used_text))}">>')
            lines.append(f"  {meth.return_type} {meth.name}();")
        lines.append("}")
    return "\n".join(lines) + ("\n" if lines else "")
