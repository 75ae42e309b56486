"""Python source frontend: syntax validation, tokens, syntax trees, AST summaries.

The analyzed language is Python 3 at a pinned grammar revision
(:data:`GRAMMAR_VERSION`).  Node kinds are taken from :data:`KIND_VOCABULARY`,
a frozen table derived from the standard ``ast`` module with two changes:

* expression-context nodes (``Load``, ``Store``, ``Del``) are dropped;
* ``Constant`` is split by literal type into ``Number``, ``String``, ``Bytes``,
  ``Boolean``, ``NoneLiteral`` and ``EllipsisLiteral``.
"""
from __future__ import annotations

import ast
import enum
import io
import json
import keyword
import tokenize as _tokenize
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

GRAMMAR_VERSION = (3, 10)

# fmt: off
KIND_VOCABULARY: tuple[str, ...] = (
    # module / statements
    "Module",
    "FunctionDef", "AsyncFunctionDef", "ClassDef", "Return", "Delete", "Assign",
    "AugAssign", "AnnAssign", "For", "AsyncFor", "While", "If", "With",
    "AsyncWith", "Match", "Raise", "Try", "Assert", "Import", "ImportFrom",
    "Global", "Nonlocal", "Expr", "Pass", "Break", "Continue",
    # expressions
    "BoolOp", "NamedExpr", "BinOp", "UnaryOp", "Lambda", "IfExp", "Dict", "Set",
    "ListComp", "SetComp", "DictComp", "GeneratorExp", "Await", "Yield",
    "YieldFrom", "Compare", "Call", "FormattedValue", "JoinedStr", "Attribute",
    "Subscript", "Starred", "Name", "List", "Tuple", "Slice",
    # literals (split from Constant)
    "Number", "String", "Bytes", "Boolean", "NoneLiteral", "EllipsisLiteral",
    # operators
    "And", "Or", "Add", "Sub", "Mult", "MatMult", "Div", "Mod", "Pow", "LShift",
    "RShift", "BitOr", "BitXor", "BitAnd", "FloorDiv", "Invert", "Not", "UAdd",
    "USub", "Eq", "NotEq", "Lt", "LtE", "Gt", "GtE", "Is", "IsNot", "In", "NotIn",
    # auxiliary
    "comprehension", "ExceptHandler", "arguments", "arg", "keyword", "alias",
    "withitem", "match_case",
    # patterns
    "MatchValue", "MatchSingleton", "MatchSequence", "MatchMapping",
    "MatchClass", "MatchStar", "MatchAs", "MatchOr",
)
# fmt: on
_KINDS = frozenset(KIND_VOCABULARY)
_DROPPED = (ast.expr_context,)


class TokenKind(str, enum.Enum):
    KEYWORD = "KEYWORD"
    NAME = "NAME"
    NUMBER = "NUMBER"
    STRING = "STRING"
    OPERATOR = "OPERATOR"
    BRACKET_OPEN = "BRACKET_OPEN"
    BRACKET_CLOSE = "BRACKET_CLOSE"
    PUNCT = "PUNCT"
    NEWLINE = "NEWLINE"
    INDENT_MARKER = "INDENT_MARKER"
    COMMENT = "COMMENT"
    OTHER = "OTHER"


OPEN_BRACKETS = {"(": ")", "[": "]", "{": "}"}
CLOSE_BRACKETS = {v: k for k, v in OPEN_BRACKETS.items()}
PUNCTUATION = frozenset({",", ":", ".", ";", "->"})

# Token classes shipped for introspection (``cirs rules``).
TOKEN_CLASSES = {
    "KEYWORD": "Python hard keywords (keyword.kwlist)",
    "NAME": "identifiers, including soft keywords such as match/case",
    "NUMBER": "numeric literals",
    "STRING": "string and bytes literals, f-strings as one token",
    "OPERATOR": "every OP token that is not a bracket or punctuation",
    "BRACKET_OPEN": sorted(OPEN_BRACKETS),
    "BRACKET_CLOSE": sorted(CLOSE_BRACKETS),
    "PUNCT": sorted(PUNCTUATION),
    "NEWLINE": "logical and non-logical line ends",
    "INDENT_MARKER": "INDENT and DEDENT",
    "COMMENT": "# comments",
    "OTHER": "anything else the tokenizer reports",
}


class ParseError(ValueError):
    """Raised when source cannot be turned into a syntax tree."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.message = message
        self.line = line
        self.column = column


class CorpusFormatError(ValueError):
    """A corpus file line is not a JSON object."""


@dataclass(frozen=True)
class SourceUnit:
    id: str
    source: str
    question: str | None = None
    answer: str | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("source unit id must be a non-empty string")
        if not isinstance(self.source, str) or not self.source.strip():
            raise ValueError(f"source unit {self.id!r} has empty code")


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    line: int
    column: int


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    diagnostics: tuple[Diagnostic, ...] = ()

    def __bool__(self) -> bool:
        return self.valid


@dataclass
class Node:
    kind: str
    children: list["Node"] = field(default_factory=list)
    span: tuple[int, int, int, int] | None = None
    # name of the parent's field holding this node, e.g. "ifs" or "body"
    role: str | None = None


@dataclass
class SyntaxTree:
    root: Node

    def walk(self) -> Iterator[Node]:
        """Pre-order traversal of every node."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


@dataclass(frozen=True)
class AstSummary:
    node_count: int
    distinct_kinds: int
    depth: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.node_count, self.distinct_kinds, self.depth)


def _as_text(source: str | bytes) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    return source


def _parse(text: str) -> ast.Module:
    return ast.parse(text, mode="exec", feature_version=GRAMMAR_VERSION)


def validate_syntax(source: str | bytes) -> ValidityReport:
    """Check whether ``source`` parses under the pinned grammar.

    Invalid source is reported, not raised.  Bytes that are not UTF-8 raise
    :class:`UnicodeDecodeError`.
    """
    text = _as_text(source)
    try:
        _parse(text)
    except SyntaxError as exc:
        diag = Diagnostic(exc.lineno or 1, max((exc.offset or 1) - 1, 0), exc.msg)
        return ValidityReport(False, (diag,))
    except (ValueError, RecursionError, MemoryError) as exc:
        # null bytes, pathological nesting
        return ValidityReport(False, (Diagnostic(1, 0, str(exc) or type(exc).__name__),))
    return ValidityReport(True)


def _token_kind(tok: _tokenize.TokenInfo) -> TokenKind | None:
    t = tok.type
    if t == _tokenize.NAME:
        return TokenKind.KEYWORD if keyword.iskeyword(tok.string) else TokenKind.NAME
    if t == _tokenize.NUMBER:
        return TokenKind.NUMBER
    if t == _tokenize.STRING:
        return TokenKind.STRING
    if t == _tokenize.OP:
        s = tok.string
        if s in OPEN_BRACKETS:
            return TokenKind.BRACKET_OPEN
        if s in CLOSE_BRACKETS:
            return TokenKind.BRACKET_CLOSE
        if s in PUNCTUATION:
            return TokenKind.PUNCT
        return TokenKind.OPERATOR
    if t in (_tokenize.NEWLINE, _tokenize.NL):
        return TokenKind.NEWLINE
    if t in (_tokenize.INDENT, _tokenize.DEDENT):
        return TokenKind.INDENT_MARKER
    if t == _tokenize.COMMENT:
        return TokenKind.COMMENT
    if t in (_tokenize.ENCODING, _tokenize.ENDMARKER):
        return None
    return TokenKind.OTHER


def _fstring_types() -> tuple[set[int], set[int], set[int]]:
    # newer tokenizers split f-strings; merge them back into single STRING tokens
    start = getattr(_tokenize, "FSTRING_START", None)
    if start is None:
        return set(), set(), set()
    return {start}, {_tokenize.FSTRING_MIDDLE}, {_tokenize.FSTRING_END}


_FS_START, _FS_MIDDLE, _FS_END = _fstring_types()


def tokenize(source: str | bytes) -> list[Token]:
    """Lex ``source`` into :class:`Token` objects.

    Comments, line ends and indentation markers are kept and tagged; the
    encoding and end markers are not part of the code content and are omitted.
    """
    text = _as_text(source)
    if not text.strip():
        raise ValueError("cannot tokenize empty source")
    out: list[Token] = []
    raw = _tokenize.generate_tokens(io.StringIO(text).readline)
    fstring_depth = 0
    fstring_start: tuple[int, int] | None = None
    try:
        for tok in raw:
            if tok.type in _FS_START:
                if fstring_depth == 0:
                    fstring_start = tok.start
                fstring_depth += 1
                continue
            if fstring_depth:
                if tok.type in _FS_END:
                    fstring_depth -= 1
                    if fstring_depth == 0:
                        lexeme = _slice(text, fstring_start, tok.end)
                        out.append(Token(TokenKind.STRING, lexeme, fstring_start[0], fstring_start[1]))
                continue
            kind = _token_kind(tok)
            if kind is None:
                continue
            out.append(Token(kind, tok.string, tok.start[0], tok.start[1]))
    except (_tokenize.TokenError, IndentationError, SyntaxError) as exc:
        raise ParseError(f"tokenization failed: {exc}") from exc
    return out


def _slice(text: str, start: tuple[int, int], end: tuple[int, int]) -> str:
    lines = text.splitlines(keepends=True)
    (l0, c0), (l1, c1) = start, end
    if l0 == l1:
        return lines[l0 - 1][c0:c1]
    parts = [lines[l0 - 1][c0:]] + lines[l0:l1 - 1] + [lines[l1 - 1][:c1]]
    return "".join(parts)


def kind_of(node: ast.AST) -> str:
    """Map an ``ast`` node onto the frozen kind vocabulary."""
    if isinstance(node, ast.Constant):
        value = node.value
        if isinstance(value, bool):
            return "Boolean"
        if value is None:
            return "NoneLiteral"
        if value is Ellipsis:
            return "EllipsisLiteral"
        if isinstance(value, str):
            return "String"
        if isinstance(value, bytes):
            return "Bytes"
        return "Number"
    name = type(node).__name__
    if name not in _KINDS:
        raise ParseError(f"node kind {name!r} is outside the pinned vocabulary")
    return name


def _span(node: ast.AST) -> tuple[int, int, int, int] | None:
    if not hasattr(node, "lineno"):
        return None
    return (node.lineno, node.col_offset, node.end_lineno or node.lineno, node.end_col_offset or 0)


def _children(node: ast.AST) -> Iterator[tuple[str, ast.AST]]:
    for name, value in ast.iter_fields(node):
        if isinstance(value, ast.AST):
            if not isinstance(value, _DROPPED):
                yield name, value
        elif isinstance(value, list):
            for item in value:
                if isinstance(item, ast.AST) and not isinstance(item, _DROPPED):
                    yield name, item


def from_ast(module: ast.AST) -> SyntaxTree:
    """Convert a stdlib ``ast`` tree into a :class:`SyntaxTree`."""
    root = Node(kind_of(module), span=_span(module))
    stack = [(module, root)]
    while stack:
        src, dst = stack.pop()
        for role, child in _children(src):
            node = Node(kind_of(child), span=_span(child), role=role)
            dst.children.append(node)
            stack.append((child, node))
    return SyntaxTree(root)


def parse_source(source: str | bytes) -> SyntaxTree:
    """Parse ``source`` into a :class:`SyntaxTree`; never returns a partial tree."""
    text = _as_text(source)
    try:
        module = _parse(text)
    except SyntaxError as exc:
        raise ParseError(exc.msg, exc.lineno, max((exc.offset or 1) - 1, 0)) from exc
    except (ValueError, RecursionError, MemoryError) as exc:
        raise ParseError(str(exc) or type(exc).__name__) from exc
    return from_ast(module)


def summarize_ast(tree: SyntaxTree) -> AstSummary:
    """Node count, number of distinct kinds and depth (root is level 1)."""
    count = 0
    kinds = set()
    depth = 0
    stack = [(tree.root, 1)]
    while stack:
        node, level = stack.pop()
        count += 1
        kinds.add(node.kind)
        if level > depth:
            depth = level
        for child in node.children:
            stack.append((child, level + 1))
    return AstSummary(count, len(kinds), depth)


def read_jsonl(path: str | Path) -> Iterator[dict]:
    """Yield JSON objects from a JSON-Lines file, skipping blank lines."""
    with open(path, encoding="utf-8") as fh:
        yield from parse_jsonl(fh, name=str(path))


def parse_jsonl(lines: Iterable[str], name: str = "<input>") -> Iterator[dict]:
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"{name}:{lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise CorpusFormatError(f"{name}:{lineno}: expected a JSON object")
        yield obj


def source_unit(record: dict) -> SourceUnit:
    """Build a :class:`SourceUnit` from a corpus record (source under ``code``)."""
    return SourceUnit(
        id=record.get("id"),
        source=record.get("code"),
        question=record.get("question"),
        answer=record.get("answer"),
    )
