"""Lexer and parser: tokens, endings, round-trip, LL(1) localization."""

import glob
import random

import pytest

from conftest import CORPUS, corpus_path

from archc.diagnostics import CompileError
from archc.lexer import lex
from archc.parser import Parser, parse, parse_source, verify_endings
from archc.printer import pretty_print
from archc.source import SourceFile
from archc.tokens import TK, Token


def kinds(text):
    _, toks = lex(text, "t.arch")
    return [t.kind for t in toks[:-1]]


class TestLexer:
    def test_smallest_program(self):
        assert kinds("module A\nend module A") == [TK.KW_MODULE, TK.IDENT, TK.END_MODULE, TK.IDENT]

    def test_paper_let_line(self):
        _, toks = lex("let a: UInt<8> = 255;", "t.arch")
        lit = [t for t in toks if t.kind is TK.INT]
        assert lit[1].value == 255
        assert [t.value for t in lit] == [8, 255]

    def test_no_preprocessor(self):
        with pytest.raises(CompileError) as e:
            lex("`define X 1", "t.arch")
        assert e.value.diagnostics[0].code == "E_NO_PREPROCESSOR"
        assert e.value.diagnostics[0].span.col == 1

    def test_hex_and_decimal(self):
        _, toks = lex("255 0xff 0xFF", "t.arch")
        assert [t.value for t in toks[:-1]] == [255, 255, 255]

    def test_comments_dropped_docs_kept(self):
        _, toks = lex("// plain\n/// doc line\nmodule", "t.arch")
        assert toks[0].kind is TK.DOC_COMMENT
        assert toks[0].text == "/// doc line"
        assert toks[1].kind is TK.KW_MODULE

    def test_unknown_char(self):
        with pytest.raises(CompileError) as e:
            lex("module @", "t.arch")
        assert e.value.diagnostics[0].code == "E_LEX"

    def test_spans_strictly_increase(self):
        text = open(corpus_path("fsm_controller.arch")).read()
        _, toks = lex(text, "t.arch")
        offsets = [(t.span.start, t.span.end) for t in toks[:-1]]
        for (s1, e1), (s2, _) in zip(offsets, offsets[1:]):
            assert e1 <= s2 and s1 < e1

    def test_maxmunch_arrows(self):
        assert kinds("a <- b") == [TK.IDENT, TK.ARROW_L, TK.IDENT]
        assert kinds("-> =%")[0] is TK.ARROW_R
        assert kinds("x +% y")[1] is TK.PLUS_WRAP

    def test_end_fusion(self):
        assert TK.END_COMB in kinds("comb x = 1; end comb")
        # `end` before a non-block word stays bare (and later fails parse)
        assert kinds("end banana") == [TK.KW_END, TK.IDENT]

    def test_todo_bang(self):
        assert kinds("todo!") == [TK.TODO_BANG]


class TestParser:
    def test_listing1_shapes(self):
        text = """\
module Alu
end module Alu

pipeline Decode
  stage Fetch
  end stage Fetch
end pipeline Decode

fifo TxBuffer
end fifo TxBuffer
"""
        _, unit = parse_source(text, "t.arch")
        assert [(c.kind, c.name) for c in unit.constructs] == [
            ("module", "Alu"), ("pipeline", "Decode"), ("fifo", "TxBuffer")]

    def test_end_mismatch_points_at_closer(self):
        with pytest.raises(CompileError) as e:
            parse_source("module A\nend module B", "t.arch")
        d = e.value.diagnostics[0]
        assert d.code == "E_END_MISMATCH"
        assert (d.span.line, d.span.col) == (2, 12)

    def test_end_keyword_mismatch(self):
        with pytest.raises(CompileError) as e:
            parse_source("module A\nend fsm A", "t.arch")
        assert e.value.diagnostics[0].code == "E_END_MISMATCH"

    def test_fsm_unconditional_transition(self):
        text = ("fsm F\n default state Idle;\n state Idle\n -> Idle;\n"
                " end state Idle\nend fsm F")
        _, unit = parse_source(text, "t.arch")
        states = [i for i in unit.constructs[0].items
                  if type(i).__name__ == "StateDecl"]
        assert len(states) == 1
        assert states[0].transitions[0].cond is None

    def test_comb_shorthand_vs_block(self):
        short = "module A\n port y: out Bool;\n comb y = true;\nend module A"
        block = ("module A\n port y: out Bool;\n comb\n y = true;\n end comb\n"
                 "end module A")
        _, u1 = parse_source(short, "t.arch")
        _, u2 = parse_source(block, "t.arch")
        assert u1 == u2

    def test_case_sensitive_names(self):
        with pytest.raises(CompileError) as e:
            parse_source("module Abc\nend module ABC", "t.arch")
        assert e.value.diagnostics[0].code == "E_END_MISMATCH"

    def test_verify_endings_programmatic(self):
        _, unit = parse_source("module A\nend module A", "t.arch")
        verify_endings(unit)
        unit.constructs[0].end_kind = "fsm"
        with pytest.raises(CompileError) as e:
            verify_endings(unit)
        assert e.value.diagnostics[0].code == "E_END_MISMATCH"


class TestRoundTrip:
    @pytest.mark.parametrize("path", sorted(glob.glob(f"{CORPUS}/*.arch")))
    def test_pretty_print_reparses_identically(self, path):
        text = open(path).read()
        _, unit = parse_source(text, path)
        printed = pretty_print(unit)
        _, unit2 = parse_source(printed, path)
        assert unit == unit2
        assert pretty_print(unit2) == printed


class TestLL1:
    """Truncating any valid prefix and appending an invalid token yields an
    error exactly at that token."""

    INVALID = ["?", ")", "=>", "]", ",", "~", "todo"]

    def test_prefix_fuzz(self):
        rng = random.Random(1234)
        for fname in ("fsm_controller.arch", "pipe3.arch", "gen_systolic.arch",
                      "fifo_async16.arch"):
            text = open(corpus_path(fname)).read()
            src, toks = lex(text, fname)
            positions = rng.sample(range(1, len(toks) - 1), min(40, len(toks) - 2))
            for pos in positions:
                bad_text = rng.choice(self.INVALID)
                _, bad_toks = lex(bad_text, fname)
                bad = Token(bad_toks[0].kind, bad_toks[0].text, toks[pos].span)
                eof = Token(TK.EOF, "", toks[pos].span)
                stream = toks[:pos] + [bad, eof]
                try:
                    parse(src, stream)
                except CompileError as e:
                    span = e.value if False else e.diagnostics[0].span
                    assert span.start == toks[pos].span.start or \
                        span == eof.span, (fname, pos, bad_text)
