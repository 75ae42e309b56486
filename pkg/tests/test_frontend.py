import ast
import sys

import pytest
from hypothesis import given, settings, strategies as st

from cirs.frontend import (
    KIND_VOCABULARY,
    Node,
    ParseError,
    SourceUnit,
    SyntaxTree,
    TokenKind,
    parse_jsonl,
    CorpusFormatError,
    parse_source,
    summarize_ast,
    tokenize,
    validate_syntax,
)

from oracles import recursive_summary
from snippets import random_snippet, restricted_snippet


def significant(tokens):
    layout = {TokenKind.NEWLINE, TokenKind.INDENT_MARKER}
    return [(t.kind.value, t.lexeme) for t in tokens if t.kind not in layout]


class TestValidate:
    def test_minimal_assignment(self):
        assert validate_syntax("x = 1").valid

    def test_malformed_parameters(self):
        report = validate_syntax("def f(:")
        assert not report.valid
        assert report.diagnostics[0].line == 1
        assert report.diagnostics[0].message

    def test_if_else(self):
        # cross-checked against the interpreter's own compiler
        src = "if x:\n    y = 1\nelse:\n    y = 2"
        compile(src, "<s>", "exec")
        assert validate_syntax(src).valid

    def test_non_utf8_bytes(self):
        with pytest.raises(UnicodeDecodeError):
            validate_syntax(b"x = '\xff'")

    def test_utf8_bytes(self):
        assert validate_syntax("s = 'héllo'".encode()).valid

    def test_null_byte_is_invalid_not_error(self):
        assert not validate_syntax("x = 1\x00").valid

    def test_newer_grammar_rejected(self):
        # PEP 695 type aliases are not part of the pinned grammar
        assert not validate_syntax("type X = int").valid


class TestTokenize:
    def test_assignment(self):
        assert significant(tokenize("x = a + b")) == [
            ("NAME", "x"), ("OPERATOR", "="), ("NAME", "a"), ("OPERATOR", "+"), ("NAME", "b")]

    def test_call(self):
        assert significant(tokenize("print(x)")) == [
            ("NAME", "print"), ("BRACKET_OPEN", "("), ("NAME", "x"), ("BRACKET_CLOSE", ")")]

    def test_empty_source(self):
        with pytest.raises(ValueError):
            tokenize("")

    def test_comments_are_tagged(self):
        toks = tokenize("x = 1  # one\n# alone\n")
        comments = [t.lexeme for t in toks if t.kind is TokenKind.COMMENT]
        assert comments == ["# one", "# alone"]

    def test_classes(self):
        toks = significant(tokenize("def f(a) -> int:\n    return a.b, 'z'; f\n"))
        assert ("KEYWORD", "def") in toks
        assert ("PUNCT", "->") in toks
        assert ("PUNCT", ".") in toks
        assert ("PUNCT", ",") in toks
        assert ("PUNCT", ";") in toks
        assert ("STRING", "'z'") in toks

    def test_positions(self):
        toks = tokenize("a = 1\nbb = 2\n")
        bb = [t for t in toks if t.lexeme == "bb"][0]
        assert (bb.line, bb.column) == (2, 0)

    def test_lexemes_nonempty_except_layout(self):
        for seed in range(50):
            for t in tokenize(random_snippet(seed)):
                if t.kind not in (TokenKind.NEWLINE, TokenKind.INDENT_MARKER):
                    assert t.lexeme

    @pytest.mark.parametrize("seed", range(20))
    def test_lexemes_reconstruct_code(self, seed):
        src = random_snippet(seed)
        toks = tokenize(src)
        joined = "".join(t.lexeme for t in toks if t.kind is not TokenKind.INDENT_MARKER)
        assert "".join(joined.split()) == "".join(src.split())

    def test_fstring_single_token(self):
        toks = significant(tokenize('x = f"a{b}c"'))
        assert toks[-1] == ("STRING", 'f"a{b}c"')


class TestParse:
    def test_assignment_tree(self):
        tree = parse_source("x = 1")
        assert tree.root.kind == "Module"
        (assign,) = tree.root.children
        assert assign.kind == "Assign"
        assert [c.kind for c in assign.children] == ["Name", "Number"]

    def test_pass(self):
        tree = parse_source("pass")
        assert summarize_ast(tree).depth >= 2
        assert tree.root.children[0].kind == "Pass"

    def test_malformed_raises(self):
        with pytest.raises(ParseError) as info:
            parse_source("def f(:")
        assert info.value.line == 1

    def test_no_context_nodes(self):
        kinds = {n.kind for n in parse_source("x = y; del z").walk()}
        assert not kinds & {"Load", "Store", "Del"}

    def test_literal_kinds(self):
        src = "a = 1; b = 2.5; c = 's'; d = b'x'; e = True; f = None; g = ..."
        kinds = {n.kind for n in parse_source(src).walk()}
        assert {"Number", "String", "Bytes", "Boolean", "NoneLiteral", "EllipsisLiteral"} <= kinds

    def test_docstring_is_a_string_node(self):
        kinds = [n.kind for n in parse_source('def f():\n    """doc"""\n    return 1\n').walk()]
        assert "String" in kinds

    def test_vocabulary_covers_grammar(self):
        # every concrete node class of the pinned grammar is either mapped or dropped
        abstract = {"AST", "mod", "stmt", "expr", "expr_context", "boolop", "operator", "unaryop",
                    "cmpop", "excepthandler", "pattern", "type_ignore", "slice"}
        deprecated = {"AugLoad", "AugStore", "Param", "Suite", "Num", "Str", "Bytes", "NameConstant",
                      "Ellipsis", "Index", "ExtSlice"}
        other_modes = {"Interactive", "Expression", "FunctionType", "TypeIgnore"}
        dropped = {"Load", "Store", "Del", "Constant"}
        concrete = {n for n in dir(ast) if isinstance(getattr(ast, n), type)
                    and issubclass(getattr(ast, n), ast.AST)}
        expected = concrete - abstract - deprecated - other_modes - dropped
        if sys.version_info >= (3, 12):
            expected -= {"TypeAlias", "TypeVar", "ParamSpec", "TypeVarTuple"}
        assert expected <= set(KIND_VOCABULARY)

    def test_vocabulary_is_frozen(self):
        assert len(KIND_VOCABULARY) == len(set(KIND_VOCABULARY)) == 104

    def test_spans(self):
        tree = parse_source("x = 1\ny = 2\n")
        assert tree.root.children[1].span[0] == 2

    def test_reparse_round_trip(self):
        for seed in range(30):
            src = random_snippet(seed)
            parse_source(src)
            assert validate_syntax(src).valid


class TestSummarize:
    def test_single_node(self):
        assert summarize_ast(SyntaxTree(Node("Module"))).as_tuple() == (1, 1, 1)

    def test_root_with_three_leaves(self):
        tree = SyntaxTree(Node("Module", [Node("Pass"), Node("Pass"), Node("Pass")]))
        assert summarize_ast(tree).as_tuple() == (4, 2, 2)

    def test_assignment_against_recursive_walk(self):
        src = "x = a + b"
        assert summarize_ast(parse_source(src)).as_tuple() == recursive_summary(src) == (7, 5, 4)

    @pytest.mark.parametrize("seed", range(60))
    def test_matches_recursive_walk(self, seed):
        src = random_snippet(seed) if seed % 2 else restricted_snippet(seed)
        assert summarize_ast(parse_source(src)).as_tuple() == recursive_summary(src)

    def test_invariants(self):
        for seed in range(40):
            s = summarize_ast(parse_source(random_snippet(seed)))
            assert 1 <= s.distinct_kinds <= s.node_count
            assert 1 <= s.depth <= s.node_count

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_wrapping_in_if_grows_tree(self, seed):
        src = random_snippet(seed)
        wrapped = "if True:\n" + "\n".join("    " + line for line in src.splitlines())
        a = summarize_ast(parse_source(src))
        b = summarize_ast(parse_source(wrapped))
        assert b.depth > a.depth
        assert b.node_count > a.node_count

    def test_deterministic(self):
        src = random_snippet(7)
        assert tokenize(src) == tokenize(src)
        assert summarize_ast(parse_source(src)) == summarize_ast(parse_source(src))


class TestCorpusIO:
    def test_bad_json_line_number(self):
        lines = ['{"id": "a", "code": "x = 1"}\n', "\n", "{oops\n"]
        with pytest.raises(CorpusFormatError, match=":3:"):
            list(parse_jsonl(lines))

    def test_non_object_line(self):
        with pytest.raises(CorpusFormatError):
            list(parse_jsonl(["[1, 2]\n"]))

    def test_source_unit_invariants(self):
        with pytest.raises(ValueError):
            SourceUnit("", "x = 1")
        with pytest.raises(ValueError):
            SourceUnit("a", "   \n")
        assert SourceUnit("a", "x = 1", question="q").question == "q"
