"""Line-oriented N-Triples reading/writing and word extraction.

Covers the subset of N-Triples the benchmark ships: IRI subjects and
predicates, IRI or literal objects (with optional language tag or
datatype).  Blank nodes, Turtle syntax and named graphs are out of scope.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from kgsum.errors import ParseError

__all__ = [
    "IRI",
    "Literal",
    "Triple",
    "normalize_space",
    "parse_ntriples",
    "parse_ntriples_line",
    "to_ntriples",
    "extract_word",
]


@dataclass(frozen=True)
class IRI:
    """An absolute IRI term."""

    value: str

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Literal:
    """An RDF literal: lexical form plus optional datatype IRI or language tag."""

    lexical: str
    datatype: str | None = None
    lang: str | None = None

    def __str__(self) -> str:
        return self.lexical


Term = IRI | Literal


@dataclass(frozen=True)
class Triple:
    """One RDF statement.  Subject and predicate are IRI strings; the
    object is either an :class:`IRI` or a :class:`Literal`."""

    subject: str
    predicate: str
    object: Term

    def __post_init__(self) -> None:
        for role, iri in (("subject", self.subject), ("predicate", self.predicate)):
            if not iri or ":" not in iri:
                raise ParseError(f"{role} is not an absolute IRI: {iri!r}")
        if isinstance(self.object, IRI):
            if not self.object.value:
                raise ParseError("object IRI is empty")
        elif not self.object.lexical and not self.object.datatype:
            raise ParseError("object literal is empty")


_IRI_PAT = r"<([^<>\"{}|^`\\\x00-\x20]*)>"
_LIT_PAT = r'"((?:[^"\\]|\\.)*)"'
_LANG_PAT = r"@([a-zA-Z]+(?:-[a-zA-Z0-9]+)*)"

_STATEMENT_RE = re.compile(
    rf"^{_IRI_PAT}\s+{_IRI_PAT}\s+"
    rf"(?:{_IRI_PAT}|{_LIT_PAT}(?:{_LANG_PAT}|\^\^{_IRI_PAT})?)"
    rf"\s*\.\s*(?:#.*)?$"
)

_UNESCAPE_RE = re.compile(r"\\(u[0-9a-fA-F]{4}|U[0-9a-fA-F]{8}|[tbnrf\"'\\])")
_SHORT_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(s: str) -> str:
    def sub(m: re.Match) -> str:
        esc = m.group(1)
        if esc[0] in "uU":
            return chr(int(esc[1:], 16))
        return _SHORT_ESCAPES[esc[0]]

    return _UNESCAPE_RE.sub(sub, s)


def _escape(s: str) -> str:
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def parse_ntriples_line(line: str, line_number: int | None = None) -> Triple:
    """Parse a single N-Triples statement line into a :class:`Triple`."""
    m = _STATEMENT_RE.match(line.strip())
    if m is None:
        raise ParseError(f"malformed N-Triples statement: {line.strip()!r}", line_number)
    subj, pred, obj_iri, lit, lang, dt = m.groups()
    if obj_iri is not None:
        obj: Term = IRI(_unescape(obj_iri))
    else:
        obj = Literal(_unescape(lit), datatype=_unescape(dt) if dt else None, lang=lang)
    return Triple(_unescape(subj), _unescape(pred), obj)


def parse_ntriples(text: str) -> list[Triple]:
    """Parse N-Triples text into statements, in file order.

    Blank lines and lines starting with ``#`` are skipped.  A malformed
    statement raises :class:`~kgsum.errors.ParseError` carrying the
    1-based line number.  Empty input yields an empty list.
    """
    triples: list[Triple] = []
    for number, line in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        triples.append(parse_ntriples_line(stripped, number))
    return triples


def to_ntriples(triple: Triple) -> str:
    """Serialize one triple back to a canonical N-Triples statement line."""
    obj = triple.object
    if isinstance(obj, IRI):
        obj_s = f"<{_escape(obj.value)}>"
    else:
        obj_s = f'"{_escape(obj.lexical)}"'
        if obj.lang:
            obj_s += f"@{obj.lang}"
        elif obj.datatype:
            obj_s += f"^^<{_escape(obj.datatype)}>"
    return f"<{_escape(triple.subject)}> <{_escape(triple.predicate)}> {obj_s} ."


_WS_RE = re.compile(r"\s+")


def normalize_space(s: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return _WS_RE.sub(" ", s).strip()


def extract_word(term: Term | str) -> str:
    """Reduce a term to the token used for word-embedding lookup.

    IRIs keep the substring after the last ``#`` if present, otherwise
    after the last ``/``; literals keep their whitespace-normalized
    lexical form.  Falls back to the full string so the result is never
    empty for non-empty input.
    """
    if isinstance(term, Literal):
        word = normalize_space(term.lexical)
        return word if word else term.lexical
    iri = term.value if isinstance(term, IRI) else term
    if "#" in iri:
        word = iri.rsplit("#", 1)[1]
    else:
        word = iri.rsplit("/", 1)[1] if "/" in iri else iri
    word = normalize_space(word)
    return word if word else normalize_space(iri) or iri
