"""Hand-written lexer and recursive-descent parser for PDL."""

from __future__ import annotations

from dataclasses import dataclass

from .model import MethodRef, PdlAttribute, PdlClass, PdlMethod, PdlModel, normalize_text

_STEREO_KEYS = ("use", "mandatory", "optional", "notUsed")


class PdlSyntaxError(Exception):
    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT STRING PUNCT EOF
    value: str
    line: int
    col: int


_PUNCT2 = ("<<", ">>")
_PUNCT1 = "{}<>();="


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def bump(ch: str):
        nonlocal line, col
        if ch == "\n":
            line += 1
            col = 1
        else:
            col += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            bump(ch)
            i += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
                col += 1
            continue
        tline, tcol = line, col
        if text.startswith("<<", i) or text.startswith(">>", i):
            tokens.append(_Token("PUNCT", text[i : i + 2], tline, tcol))
            i += 2
            col += 2
            continue
        if ch in _PUNCT1:
            tokens.append(_Token("PUNCT", ch, tline, tcol))
            i += 1
            col += 1
            continue
        if ch == '"':
            i += 1
            col += 1
            chars: list[str] = []
            while True:
                if i >= n:
                    raise PdlSyntaxError(tline, tcol, "unterminated string")
                c = text[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n or text[i + 1] not in ('"', "\\"):
                        raise PdlSyntaxError(line, col, "unknown escape in string")
                    chars.append(text[i + 1])
                    i += 2
                    col += 2
                    continue
                chars.append(c)
                bump(c)
                i += 1
            tokens.append(_Token("STRING", "".join(chars), tline, tcol))
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("IDENT", text[i:j], tline, tcol))
            col += j - i
            i = j
            continue
        raise PdlSyntaxError(line, col, f"unexpected character {ch!r}")
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], source_name: str):
        self.tokens = tokens
        self.pos = 0
        self.source_name = source_name

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, tok: _Token, expected: str) -> PdlSyntaxError:
        found = tok.value if tok.kind != "EOF" else "end of input"
        return PdlSyntaxError(tok.line, tok.col, f"expected {expected}, found {found!r}")

    def expect_punct(self, value: str) -> _Token:
        tok = self.peek()
        if tok.kind != "PUNCT" or tok.value != value:
            raise self.error(tok, f"'{value}'")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> _Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.error(tok, what)
        return self.advance()

    def parse_model(self) -> PdlModel:
        classes: list[PdlClass] = []
        seen: set[str] = set()
        while self.peek().kind != "EOF":
            tok = self.peek()
            if tok.kind == "IDENT" and tok.value == "class":
                cls = self.parse_class()
                if cls.name in seen:
                    raise PdlSyntaxError(tok.line, tok.col, f"duplicate class {cls.name!r}")
                seen.add(cls.name)
                classes.append(cls)
            else:
                raise self.error(tok, "'class'")
        return PdlModel(classes=tuple(classes), source_name=self.source_name)

    def parse_class(self) -> PdlClass:
        self.advance()  # 'class'
        name = self.expect_ident("class name").value
        self.expect_punct("{")
        attributes: list[PdlAttribute] = []
        methods: list[PdlMethod] = []
        names: set[str] = set()
        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.value == "}":
                self.advance()
                break
            if tok.kind == "EOF":
                raise self.error(tok, "'}'")
            member = self.parse_member(name)
            if member.name in names:
                raise PdlSyntaxError(tok.line, tok.col, f"duplicate member {name}.{member.name}")
            names.add(member.name)
            if isinstance(member, PdlAttribute):
                attributes.append(member)
            else:
                methods.append(member)
        return PdlClass(name=name, attributes=tuple(attributes), methods=tuple(methods))

    def parse_stereotypes(self) -> list[tuple[str, str, _Token]]:
        stereos: list[tuple[str, str, _Token]] = []
        while self.peek().kind == "PUNCT" and self.peek().value == "<<":
            opening = self.advance()
            key_tok = self.expect_ident("stereotype key")
            if key_tok.value not in _STEREO_KEYS:
                raise PdlSyntaxError(
                    key_tok.line, key_tok.col, f"unknown stereotype key {key_tok.value!r}"
                )
            self.expect_punct("=")
            val_tok = self.peek()
            if val_tok.kind != "STRING":
                raise self.error(val_tok, "string value")
            self.advance()
            self.expect_punct(">>")
            stereos.append((key_tok.value, normalize_text(val_tok.value), opening))
        return stereos

    def parse_typeref(self) -> str:
        base = self.expect_ident("type name").value
        if self.peek().kind == "PUNCT" and self.peek().value == "<":
            self.advance()
            inner = self.parse_typeref()
            self.expect_punct(">")
            return f"{base}<{inner}>"
        return base

    def parse_member(self, class_name: str) -> PdlAttribute | PdlMethod:
        stereos = self.parse_stereotypes()
        type_name = self.parse_typeref()
        name_tok = self.expect_ident("member name")
        is_method = False
        if self.peek().kind == "PUNCT" and self.peek().value == "(":
            self.advance()
            self.expect_punct(")")  # methods are parameterless in this version
            is_method = True
        self.expect_punct(";")

        use_text: str | None = None
        not_used_text: str | None = None
        mandatory: list[MethodRef] = []
        optional: list[MethodRef] = []
        seen_refs: set[MethodRef] = set()
        for key, value, tok in stereos:
            if key == "use":
                if use_text is not None:
                    raise PdlSyntaxError(tok.line, tok.col, "duplicate use stereotype")
                use_text = value
            elif key == "notUsed":
                if not is_method:
                    raise PdlSyntaxError(
                        tok.line, tok.col, "notUsed stereotype applies to methods only"
                    )
                if not_used_text is not None:
                    raise PdlSyntaxError(tok.line, tok.col, "duplicate notUsed stereotype")
                not_used_text = value
            else:  # mandatory | optional
                if is_method:
                    raise PdlSyntaxError(
                        tok.line, tok.col, f"{key} stereotype applies to attributes only"
                    )
                try:
                    ref = MethodRef.parse(value)
                except ValueError as exc:
                    raise PdlSyntaxError(tok.line, tok.col, str(exc)) from None
                if ref in seen_refs:
                    raise PdlSyntaxError(
                        tok.line, tok.col, f"duplicate reference to {ref.qualified()}"
                    )
                seen_refs.add(ref)
                (mandatory if key == "mandatory" else optional).append(ref)

        if is_method:
            return PdlMethod(
                name=name_tok.value,
                return_type=type_name,
                use_text=use_text,
                not_used_text=not_used_text,
            )
        return PdlAttribute(
            name=name_tok.value,
            type_name=type_name,
            use_text=use_text,
            mandatory_refs=tuple(mandatory),
            optional_refs=tuple(optional),
        )


def parse(text: str, source_name: str = "<string>") -> PdlModel:
    """Parse PDL source into its semantic model, preserving declaration order."""
    return _Parser(_lex(text), source_name).parse_model()
