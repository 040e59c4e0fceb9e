"""Turtle subset reader and writer.

The dialect covers what student records and service bookkeeping need:
directives (@base, @prefix), angle-bracket and prefixed IRIs, the `a`
keyword, predicate (`;`) and object (`,`) lists, labeled blank nodes,
string literals with language tags or datatypes, and bare integers.

Anything outside the subset is rejected with a positioned error rather
than skipped: collections, anonymous blank nodes, triple-quoted and
single-quoted strings, and fractional or exponent numbers. Silent loss
of input is worse than a hard failure here, because stored graphs are
the system of record.

The writer is deterministic: equal graphs serialize to identical bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .terms import (
    Graph,
    Iri,
    IriError,
    BlankNode,
    Literal,
    Subject,
    Term,
    TripleType,
    escape_string,
    format_term,
    resolve_iri,
)

RDF_TYPE = Iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")
XSD_STRING = Iri("http://www.w3.org/2001/XMLSchema#string")
XSD_INTEGER = Iri("http://www.w3.org/2001/XMLSchema#integer")

_INTEGER_RE = re.compile(r"[+-]?[0-9]+\Z")
_PN_PREFIX_RE = re.compile(r"[A-Za-z][A-Za-z0-9_.\-]*\Z")
_PN_LOCAL_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.\-]*\Z")


class TurtleParseError(ValueError):
    """A syntax or resolution failure, located by 1-based line and column."""

    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col
        self.reason = message


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str
    value: object
    line: int
    col: int


_PUNCT = {".": ".", ";": ";", ",": ","}


class _Tokenizer:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1
        self._prev_kind: Optional[str] = None

    def error(self, message: str, line: Optional[int] = None, col: Optional[int] = None) -> TurtleParseError:
        return TurtleParseError(message, line if line is not None else self.line, col if col is not None else self.col)

    def _peek(self, offset: int = 0) -> str:
        # NUL as the EOF sentinel: it fails every membership test below,
        # where "" would vacuously pass `in` checks and loop forever.
        idx = self.pos + offset
        return self.text[idx] if idx < len(self.text) else "\0"

    def _advance(self, count: int = 1) -> str:
        taken = self.text[self.pos : self.pos + count]
        for ch in taken:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += count
        return taken

    def _skip_trivia(self) -> None:
        while self.pos < len(self.text):
            ch = self._peek()
            if ch in " \t\r\n":
                self._advance()
            elif ch == "#":
                while self.pos < len(self.text) and self._peek() != "\n":
                    self._advance()
            else:
                return

    def tokens(self) -> "list[_Token]":
        out: "list[_Token]" = []
        while True:
            tok = self._next()
            out.append(tok)
            if tok.kind == "eof":
                return out

    def _emit(self, kind: str, value: object, line: int, col: int) -> _Token:
        self._prev_kind = kind
        return _Token(kind, value, line, col)

    def _next(self) -> _Token:
        self._skip_trivia()
        line, col = self.line, self.col
        if self.pos >= len(self.text):
            return self._emit("eof", None, line, col)
        ch = self._peek()

        if ch in _PUNCT:
            if ch == "." and self._peek(1).isdigit():
                raise self.error("decimal literals are not supported")
            self._advance()
            return self._emit(ch, ch, line, col)
        if ch == "^":
            if self._peek(1) != "^":
                raise self.error("stray '^'")
            self._advance(2)
            return self._emit("^^", "^^", line, col)

        # Out-of-subset constructs get targeted messages.
        if ch == "(" or ch == ")":
            raise self.error("collections are not supported")
        if ch == "[" or ch == "]":
            raise self.error("anonymous blank nodes are not supported")
        if ch == "'":
            raise self.error("single-quoted literals are not supported")

        if ch == "<":
            return self._iriref(line, col)
        if ch == '"':
            return self._string(line, col)
        if ch == "@":
            return self._at_word(line, col)
        if ch == "_" and self._peek(1) == ":":
            return self._bnode(line, col)
        if ch.isdigit() or (ch in "+-" and self._peek(1).isdigit()):
            return self._number(line, col)
        if ch.isalpha() or ch == ":" or ch == "_":
            return self._word(line, col)
        raise self.error(f"unexpected character {ch!r}")

    def _iriref(self, line: int, col: int) -> _Token:
        self._advance()  # <
        raw: "list[str]" = []
        while True:
            if self.pos >= len(self.text):
                raise self.error("unterminated IRI", line, col)
            ch = self._peek()
            if ch == ">":
                self._advance()
                return self._emit("iriref", "".join(raw), line, col)
            if ch == "\\":
                raw.append(self._uchar(line, col))
                continue
            if ch in ' <"{}|^`\n\r\t':
                raise self.error(f"forbidden character {ch!r} in IRI")
            raw.append(self._advance())

    def _uchar(self, line: int, col: int) -> str:
        at_line, at_col = self.line, self.col
        self._advance()  # backslash
        kind = self._advance()
        width = {"u": 4, "U": 8}.get(kind)
        if width is None:
            raise self.error(f"invalid escape '\\{kind}' in IRI", at_line, at_col)
        digits = self._advance(width)
        if len(digits) != width or not all(c in "0123456789abcdefABCDEF" for c in digits):
            raise self.error("malformed unicode escape", at_line, at_col)
        return chr(int(digits, 16))

    def _string(self, line: int, col: int) -> _Token:
        if self._peek(1) == '"' and self._peek(2) == '"':
            raise self.error("multiline literals are not supported", line, col)
        self._advance()  # opening quote
        out: "list[str]" = []
        while True:
            if self.pos >= len(self.text):
                raise self.error("unterminated string literal", line, col)
            ch = self._peek()
            if ch == '"':
                self._advance()
                return self._emit("string", "".join(out), line, col)
            if ch in "\n\r":
                raise self.error("newline inside string literal (multiline literals are not supported)", line, col)
            if ch == "\\":
                out.append(self._echar())
                continue
            out.append(self._advance())

    def _echar(self) -> str:
        at_line, at_col = self.line, self.col
        self._advance()  # backslash
        kind = self._peek()
        simple = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
        if kind in simple:
            self._advance()
            return simple[kind]
        if kind in "uU":
            self._advance()
            width = 4 if kind == "u" else 8
            digits = self._advance(width)
            if len(digits) != width or not all(c in "0123456789abcdefABCDEF" for c in digits):
                raise self.error("malformed unicode escape", at_line, at_col)
            return chr(int(digits, 16))
        raise self.error(f"invalid string escape '\\{kind}'", at_line, at_col)

    def _at_word(self, line: int, col: int) -> _Token:
        self._advance()  # @
        word_chars: "list[str]" = []
        while self._peek().isalpha() or (word_chars and self._peek() in "-0123456789"):
            word_chars.append(self._advance())
        word = "".join(word_chars)
        if not word:
            raise self.error("stray '@'", line, col)
        if self._prev_kind == "string":
            return self._emit("langtag", word, line, col)
        if word == "prefix":
            return self._emit("@prefix", word, line, col)
        if word == "base":
            return self._emit("@base", word, line, col)
        raise self.error(f"unknown directive '@{word}'", line, col)

    def _bnode(self, line: int, col: int) -> _Token:
        self._advance(2)  # _:
        label_chars: "list[str]" = []
        while self._peek().isalnum() or self._peek() in "_.-":
            label_chars.append(self._advance())
        label = "".join(label_chars)
        # Trailing dots belong to the statement terminator.
        stripped = label.rstrip(".")
        give_back = len(label) - len(stripped)
        if give_back:
            self.pos -= give_back
            self.col -= give_back
            label = stripped
        if not label:
            raise self.error("empty blank node label", line, col)
        return self._emit("bnode", label, line, col)

    def _number(self, line: int, col: int) -> _Token:
        digits: "list[str]" = []
        if self._peek() in "+-":
            digits.append(self._advance())
        while self._peek().isdigit():
            digits.append(self._advance())
        nxt = self._peek()
        if nxt == "." and self._peek(1).isdigit():
            raise self.error("decimal literals are not supported", line, col)
        if nxt in "eE":
            raise self.error("exponent (double) literals are not supported", line, col)
        return self._emit("integer", "".join(digits), line, col)

    def _word(self, line: int, col: int) -> _Token:
        # Either a prefixed name or one of the few bare keywords.
        prefix_chars: "list[str]" = []
        while self._peek().isalnum() or self._peek() in "_.-":
            prefix_chars.append(self._advance())
        prefix = "".join(prefix_chars)
        if self._peek() == ":":
            self._advance()
            local_chars: "list[str]" = []
            while self._peek().isalnum() or self._peek() in "_.-":
                local_chars.append(self._advance())
            local = "".join(local_chars)
            # A trailing dot is the statement terminator, not part of the name.
            stripped = local.rstrip(".")
            give_back = len(local) - len(stripped)
            if give_back:
                self.pos -= give_back
                self.col -= give_back
                local = stripped
            if prefix and not _PN_PREFIX_RE.match(prefix):
                raise self.error(f"malformed prefix {prefix!r}", line, col)
            if local and not _PN_LOCAL_RE.match(local):
                raise self.error(f"malformed local name {local!r}", line, col)
            return self._emit("pname", (prefix, local), line, col)
        if prefix == "a":
            return self._emit("a", "a", line, col)
        if prefix in ("true", "false"):
            raise self.error("boolean literals are not supported", line, col)
        raise self.error(f"unexpected token {prefix!r}", line, col)


class _Parser:
    def __init__(self, tokens: "list[_Token]", base: Optional[Iri]) -> None:
        self.tokens = tokens
        self.idx = 0
        self.base = base
        self.prefixes: "dict[str, str]" = {}
        self.graph = Graph()

    def peek(self) -> _Token:
        return self.tokens[self.idx]

    def take(self, kind: Optional[str] = None) -> _Token:
        tok = self.tokens[self.idx]
        if kind is not None and tok.kind != kind:
            raise TurtleParseError(f"expected {kind!r}, found {self._describe(tok)}", tok.line, tok.col)
        self.idx += 1
        return tok

    @staticmethod
    def _describe(tok: _Token) -> str:
        if tok.kind == "eof":
            return "end of input"
        return f"{tok.kind} {tok.value!r}"

    def parse(self) -> Graph:
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "@prefix":
                self._prefix_directive()
            elif tok.kind == "@base":
                self._base_directive()
            else:
                self._triples()
        return self.graph

    def _prefix_directive(self) -> None:
        self.take("@prefix")
        name_tok = self.take("pname")
        prefix, local = name_tok.value  # type: ignore[misc]
        if local:
            raise TurtleParseError("prefix declaration must end with ':'", name_tok.line, name_tok.col)
        iri_tok = self.take("iriref")
        self.prefixes[prefix] = self._resolve(iri_tok).value
        self.take(".")

    def _base_directive(self) -> None:
        self.take("@base")
        iri_tok = self.take("iriref")
        self.base = self._resolve(iri_tok)
        self.take(".")

    def _resolve(self, tok: _Token) -> Iri:
        raw = str(tok.value)
        try:
            if re.match(r"[A-Za-z][A-Za-z0-9+.\-]*:", raw):
                return Iri(raw)
            return resolve_iri(self.base, raw)
        except IriError as exc:
            raise TurtleParseError(str(exc), tok.line, tok.col) from exc

    def _expand(self, tok: _Token) -> Iri:
        prefix, local = tok.value  # type: ignore[misc]
        if prefix not in self.prefixes:
            raise TurtleParseError(f"undeclared prefix {prefix + ':'!r}", tok.line, tok.col)
        try:
            return Iri(self.prefixes[prefix] + local)
        except IriError as exc:
            raise TurtleParseError(str(exc), tok.line, tok.col) from exc

    def _triples(self) -> None:
        subject = self._subject()
        self._predicate_object_list(subject)
        self.take(".")

    def _subject(self) -> Subject:
        tok = self.peek()
        if tok.kind == "iriref":
            return self._resolve(self.take())
        if tok.kind == "pname":
            return self._expand(self.take())
        if tok.kind == "bnode":
            return BlankNode(str(self.take().value))
        raise TurtleParseError(f"expected subject, found {self._describe(tok)}", tok.line, tok.col)

    def _predicate_object_list(self, subject: Subject) -> None:
        self._verb_objects(subject)
        while self.peek().kind == ";":
            self.take(";")
            if self.peek().kind in (".", ";"):
                continue
            self._verb_objects(subject)

    def _verb_objects(self, subject: Subject) -> None:
        predicate = self._verb()
        while True:
            obj = self._object()
            self.graph.add((subject, predicate, obj))
            if self.peek().kind == ",":
                self.take(",")
                continue
            return

    def _verb(self) -> Iri:
        tok = self.peek()
        if tok.kind == "a":
            self.take()
            return RDF_TYPE
        if tok.kind == "iriref":
            return self._resolve(self.take())
        if tok.kind == "pname":
            return self._expand(self.take())
        raise TurtleParseError(f"expected predicate, found {self._describe(tok)}", tok.line, tok.col)

    def _object(self) -> Term:
        tok = self.peek()
        if tok.kind == "iriref":
            return self._resolve(self.take())
        if tok.kind == "pname":
            return self._expand(self.take())
        if tok.kind == "bnode":
            return BlankNode(str(self.take().value))
        if tok.kind == "integer":
            lex = str(self.take().value)
            return Literal(lex, datatype=XSD_INTEGER)
        if tok.kind == "string":
            return self._literal()
        raise TurtleParseError(f"expected object, found {self._describe(tok)}", tok.line, tok.col)

    def _literal(self) -> Literal:
        string_tok = self.take("string")
        lexical = str(string_tok.value)
        nxt = self.peek()
        if nxt.kind == "langtag":
            self.take()
            try:
                return Literal(lexical, language=str(nxt.value))
            except ValueError as exc:
                raise TurtleParseError(str(exc), nxt.line, nxt.col) from exc
        if nxt.kind == "^^":
            self.take()
            dt_tok = self.peek()
            if dt_tok.kind == "iriref":
                datatype = self._resolve(self.take())
            elif dt_tok.kind == "pname":
                datatype = self._expand(self.take())
            else:
                raise TurtleParseError(
                    f"expected datatype IRI, found {self._describe(dt_tok)}", dt_tok.line, dt_tok.col
                )
            try:
                return Literal(lexical, datatype=datatype)
            except ValueError as exc:
                raise TurtleParseError(str(exc), dt_tok.line, dt_tok.col) from exc
        return Literal(lexical)


def parse_turtle(text: str, base: Union[Iri, str, None] = None) -> Graph:
    """Parse Turtle text into a graph of triples.

    `base` anchors relative IRI references; a document-level @base
    directive overrides it from that point on.
    """
    base_iri = Iri(base) if isinstance(base, str) else base
    tokens = _Tokenizer(text).tokens()
    return _Parser(tokens, base_iri).parse()


# --- Serialization ---------------------------------------------------------


def _pname_or_none(iri: Iri, by_length: "list[tuple[str, str]]") -> Optional[str]:
    for namespace, prefix in by_length:
        if iri.value.startswith(namespace):
            local = iri.value[len(namespace) :]
            if local == "" or (_PN_LOCAL_RE.match(local) and not local.endswith(".")):
                return f"{prefix}:{local}"
    return None


class _TermWriter:
    def __init__(self, prefixes: "dict[str, str]") -> None:
        pairs = sorted(((ns, p) for p, ns in prefixes.items()), key=lambda x: (-len(x[0]), x[1]))
        self._by_length = list(pairs)
        self._prefix_of = dict(prefixes)
        self.used: "set[str]" = set()

    def iri(self, value: Iri) -> str:
        pname = _pname_or_none(value, self._by_length)
        if pname is not None:
            self.used.add(pname.split(":", 1)[0])
            return pname
        return f"<{value.value}>"

    def term(self, term: Term) -> str:
        if isinstance(term, Iri):
            return self.iri(term)
        if isinstance(term, BlankNode):
            return f"_:{term.label}"
        body = f'"{escape_string(term.lexical)}"'
        if term.language is not None:
            return f"{body}@{term.language}"
        if term.datatype == XSD_STRING:
            return body
        if term.datatype == XSD_INTEGER and _INTEGER_RE.match(term.lexical):
            return term.lexical
        return f"{body}^^{self.iri(term.datatype)}"


def serialize_turtle(graph: Graph, prefixes: Optional["dict[str, str]"] = None) -> str:
    """Render a graph as Turtle, identically for equal graphs.

    Subjects are blocks separated by blank lines; predicates chain with
    ';'. Order is canonical text order, with rdf:type pulled to the front
    of each block. Only prefixes that shorten something are declared.
    """
    writer = _TermWriter(prefixes or {})
    by_subject: "dict[str, list[TripleType]]" = {}
    for triple in graph:
        by_subject.setdefault(format_term(triple[0]), []).append(triple)

    blocks: "list[str]" = []
    for _, triples in sorted(by_subject.items()):
        def pair_key(t: TripleType) -> "tuple[int, str, str]":
            rank = 0 if t[1] == RDF_TYPE else 1
            return (rank, format_term(t[1]), format_term(t[2]))

        triples.sort(key=pair_key)
        subject_text = writer.term(triples[0][0])
        lines: "list[str]" = []
        for s, p, o in triples:
            verb = "a" if p == RDF_TYPE else writer.iri(p)
            lines.append(f"{verb} {writer.term(o)}")
        body = " ;\n    ".join(lines)
        blocks.append(f"{subject_text} {body} .")

    header = [
        f"@prefix {p}: <{(prefixes or {})[p]}> ."
        for p in sorted(writer.used)
    ]
    parts: "list[str]" = []
    if header:
        parts.append("\n".join(header))
    parts.extend(blocks)
    if not parts:
        return ""
    return "\n\n".join(parts) + "\n"
