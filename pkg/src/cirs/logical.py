"""Halstead difficulty, cyclomatic complexity and the logical complexity score."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Iterable

from .frontend import OPEN_BRACKETS, PUNCTUATION, SyntaxTree, Token, TokenKind

# Halstead classification, frozen.  Emitted by ``cirs rules``.
OPERATOR_KINDS = frozenset({TokenKind.OPERATOR, TokenKind.KEYWORD, TokenKind.PUNCT})
OPERAND_KINDS = frozenset({TokenKind.NAME, TokenKind.NUMBER, TokenKind.STRING})
IGNORED_KINDS = frozenset({TokenKind.COMMENT, TokenKind.NEWLINE, TokenKind.INDENT_MARKER})
# literal keywords are values, not operations
OPERAND_KEYWORDS = frozenset({"True", "False", "None"})

HALSTEAD_RULES = {
    "operators": {
        "token_kinds": sorted(k.value for k in OPERATOR_KINDS),
        "punctuation": sorted(PUNCTUATION),
        "bracket_pairs": "each matched pair is one occurrence identified by its opening lexeme",
        "brackets": sorted(OPEN_BRACKETS),
    },
    "operands": {
        "token_kinds": sorted(k.value for k in OPERAND_KINDS),
        "keywords": sorted(OPERAND_KEYWORDS),
    },
    "ignored": sorted(k.value for k in IGNORED_KINDS),
    "identity": "lexeme",
}

# kind -> how many decision points one node of that kind contributes
DECISION_RULES = {
    "If": "1 (covers if and each elif)",
    "IfExp": "1",
    "While": "1",
    "For": "1",
    "AsyncFor": "1",
    "comprehension": "1 per for-clause, plus 1 per if-filter",
    "BoolOp": "number of and/or operators (operands - 1)",
    "ExceptHandler": "1",
    "Assert": "1",
}
_SIMPLE_DECISIONS = frozenset({"If", "IfExp", "While", "For", "AsyncFor", "ExceptHandler", "Assert"})


class HalsteadError(RuntimeError):
    """Token stream that cannot come from valid source, e.g. unbalanced brackets."""


@dataclass(frozen=True)
class HalsteadCounts:
    distinct_operators: int
    distinct_operands: int
    total_operators: int
    total_operands: int


@dataclass(frozen=True)
class LogicalMetrics:
    difficulty: float
    cyclomatic: int
    logical_score: float


def halstead_counts(tokens: Iterable[Token]) -> HalsteadCounts:
    operators: list[str] = []
    operands: list[str] = []
    open_stack: list[str] = []
    for tok in tokens:
        kind = tok.kind
        if kind in IGNORED_KINDS:
            continue
        if kind is TokenKind.BRACKET_OPEN:
            open_stack.append(tok.lexeme)
        elif kind is TokenKind.BRACKET_CLOSE:
            if not open_stack or OPEN_BRACKETS[open_stack[-1]] != tok.lexeme:
                raise HalsteadError(f"unmatched {tok.lexeme!r} at line {tok.line}")
            operators.append(open_stack.pop())
        elif kind is TokenKind.KEYWORD and tok.lexeme in OPERAND_KEYWORDS:
            operands.append(tok.lexeme)
        elif kind in OPERATOR_KINDS:
            operators.append(tok.lexeme)
        elif kind in OPERAND_KINDS:
            operands.append(tok.lexeme)
    if open_stack:
        raise HalsteadError(f"unclosed {open_stack[-1]!r}")
    return HalsteadCounts(len(set(operators)), len(set(operands)), len(operators), len(operands))


def difficulty(counts: HalsteadCounts) -> float:
    """``(n1 / 2) * (N2 / n2)``, defined as 0 when there are no operands."""
    if counts.distinct_operands == 0:
        return 0.0
    return (counts.distinct_operators / 2) * (counts.total_operands / counts.distinct_operands)


def decision_points(tree: SyntaxTree) -> int:
    total = 0
    for node in tree.walk():
        kind = node.kind
        if kind in _SIMPLE_DECISIONS:
            total += 1
        elif kind == "comprehension":
            total += 1 + sum(1 for c in node.children if c.role == "ifs")
        elif kind == "BoolOp":
            total += sum(1 for c in node.children if c.role == "values") - 1
    return total


def cyclomatic(tree: SyntaxTree) -> int:
    """McCabe complexity of the whole snippet as one component: 1 + decision points."""
    return 1 + decision_points(tree)


_ONE_BELOW = math.nextafter(1.0, 0.0)
_TINY = sys.float_info.min


def sigmoid(t: float) -> float:
    """Logistic function kept strictly inside (0, 1) for every finite ``t``.

    Saturated values are clamped to the nearest representable double.
    """
    if t >= 0:
        value = 1.0 / (1.0 + math.exp(-t))
    else:
        e = math.exp(t)
        value = e / (1.0 + e)
    return min(max(value, _TINY), _ONE_BELOW)


def logical_score(d: float, v: int) -> float:
    if d < 0 or v < 1:
        raise ValueError(f"need difficulty >= 0 and cyclomatic >= 1, got {d}, {v}")
    return sigmoid(d * v)


def logical_metrics(tokens: Iterable[Token], tree: SyntaxTree) -> LogicalMetrics:
    d = difficulty(halstead_counts(tokens))
    v = cyclomatic(tree)
    return LogicalMetrics(d, v, logical_score(d, v))
