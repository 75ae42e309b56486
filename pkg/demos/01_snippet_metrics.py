"""
Metrics of a single snippet
===========================

Tokens, tree shape, Halstead difficulty and decision points for one program.
"""
from cirs.frontend import TokenKind, parse_source, summarize_ast, tokenize, validate_syntax
from cirs.logical import cyclomatic, difficulty, halstead_counts, logical_score

code = """\
price = 20
if price > 15 and price < 100:
    price = price * 0.9
answer = price
"""

# syntax first: invalid code never reaches the metrics
print(validate_syntax(code).valid, validate_syntax("def f(:").diagnostics[0])

# tokens, without layout markers
tokens = tokenize(code)
print([(t.kind.value, t.lexeme) for t in tokens if t.kind not in (TokenKind.NEWLINE, TokenKind.INDENT_MARKER)][:8])

# tree shape: node count, distinct node kinds, depth
tree = parse_source(code)
print(summarize_ast(tree))

# Halstead counts -> difficulty = (distinct operators / 2) * (total operands / distinct operands)
counts = halstead_counts(tokens)
print(counts, difficulty(counts))

# one if plus one `and` -> two decision points
v = cyclomatic(tree)
print("cyclomatic", v)

# the logical score squashes D * V into [0.5, 1)
print("logical", logical_score(difficulty(counts), v))
