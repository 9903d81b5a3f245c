"""Elaboration: const evaluation against a big-integer oracle, generate
expansion counts, instance binding."""

import random

import pytest

from conftest import build_text, diag_codes

from archc.ast_nodes import Binary, IntLit, InstDecl, PortDecl
from archc.consteval import eval_const
from archc.diagnostics import CompileError
from archc.parser import parse_source
from archc.elaborate import elaborate_program
from archc.source import DUMMY_SPAN


def eval_text(expr_text, env=None):
    text = f"module T\n param X: const = {expr_text};\nend module T"
    _, unit = parse_source(text, "t.arch")
    return eval_const(unit.constructs[0].items[0].default, env or {})


class TestEvalConst:
    def test_paper_derived_param(self):
        assert eval_text("DATA_WIDTH + COEFF_WIDTH",
                         {"DATA_WIDTH": 8, "COEFF_WIDTH": 8}) == 16

    def test_const_div0(self):
        with pytest.raises(CompileError) as e:
            eval_text("5 / 0")
        assert e.value.diagnostics[0].code == "E_CONST_DIV0"

    def test_shift_identity(self):
        assert eval_text("1 << 0") == 1

    def test_unbound(self):
        with pytest.raises(CompileError) as e:
            eval_text("MISSING + 1")
        assert e.value.diagnostics[0].code == "E_UNBOUND_PARAM"

    def test_overflow(self):
        with pytest.raises(CompileError) as e:
            eval_text("9223372036854775807 + 1")
        assert e.value.diagnostics[0].code == "E_CONST_OVERFLOW"

    def test_oracle_10000_random_exprs(self):
        """Agreement with an independent big-integer evaluator over
        {+,-,*,/,%,<<,>>,&,|,^} with nonzero divisors."""
        rng = random.Random(99)
        ops = ["+", "-", "*", "/", "%", "<<", ">>", "&", "|", "^"]

        def gen(depth):
            if depth == 0 or rng.random() < 0.3:
                return IntLit(DUMMY_SPAN, rng.randint(0, 1000), "")
            op = rng.choice(ops)
            lhs = gen(depth - 1)
            if op in ("/", "%"):
                rhs = IntLit(DUMMY_SPAN, rng.randint(1, 50), "")
            elif op in ("<<", ">>"):
                rhs = IntLit(DUMMY_SPAN, rng.randint(0, 8), "")
            else:
                rhs = gen(depth - 1)
            return Binary(DUMMY_SPAN, op, lhs, rhs)

        def oracle(e):
            # independent: plain Python big-int, truncating division by hand
            if isinstance(e, IntLit):
                return e.value
            a, b = oracle(e.lhs), oracle(e.rhs)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                q = abs(a) // abs(b)
                return -q if (a < 0) != (b < 0) else q
            if e.op == "%":
                r = abs(a) % abs(b)
                return -r if a < 0 else r
            if e.op == "<<":
                return a << b
            if e.op == ">>":
                return a >> b
            if e.op == "&":
                return a & b
            if e.op == "|":
                return a | b
            return a ^ b

        checked = 0
        while checked < 10000:
            e = gen(4)
            want = oracle(e)
            if not (-(1 << 63) <= want < (1 << 63)):
                continue
            try:
                got = eval_const(e, {})
            except CompileError:
                continue  # intermediate overflow; oracle scope is in-range results
            assert got == want
            checked += 1


class TestGenerate:
    @pytest.mark.parametrize("n", [0, 1, 4, 16])
    def test_unroll_copies(self, n):
        text = f"""\
module Fan
  param N: const = {n};
  port y: out Bool;
  generate_for i in 0..N
    port lane[i]: in Bool;
  end generate_for
  comb y = true;
end module Fan
"""
        design, _ = build_text(text)
        ports = [p.name for p in design.cores["Fan"].ports if p.name.startswith("lane")]
        assert ports == [f"lane_{i}" for i in range(n)]

    def test_empty_range(self):
        design, _ = build_text("""\
module Empty
  port y: out Bool;
  generate_for i in 0..0
    port ghost[i]: in Bool;
  end generate_for
  comb y = true;
end module Empty
""")
        assert all(not p.name.startswith("ghost") for p in design.cores["Empty"].ports)

    def test_systolic_listing(self):
        design, _ = build_text(open(__file__.replace(
            "tests/test_elaborate.py", "corpus/gen_systolic.arch")).read())
        core = design.cores["SystolicArray"]
        assert [i.name for i in core.instances] == ["pe_0", "pe_1", "pe_2", "pe_3"]
        # pe_0.sum_in is the folded constant 0
        first = core.instances[0].in_map["sum_in"]
        assert isinstance(first, IntLit) and first.value == 0

    def test_conditional_ports_disabled(self):
        design, _ = build_text(open(__file__.replace(
            "tests/test_elaborate.py", "corpus/gen_condport.arch")).read())
        cache = design.cores["CacheGen"]
        assert [p.name for p in cache.ports] == ["clk", "addr", "data"]
        debug = design.cores["CacheGen__ENABLE_DEBUG1"]
        assert [p.name for p in debug.ports] == ["clk", "addr", "data", "debug_state"]

    def test_generate_if_branches_elaborate_identically(self):
        def variant(cond):
            return f"""\
module Same
  param FLAG: const = {cond};
  port a: in Bool;
  port y: out Bool;
  generate_if FLAG
    comb y = !a;
  else
    comb y = !a;
  end generate_if
end module Same
"""
        from archc.sv_emit import emit_module
        d1, _ = build_text(variant("true"))
        d2, _ = build_text(variant("false"))
        sv1 = emit_module(d1.cores["Same"]).replace("FLAG = 1", "FLAG = X")
        sv2 = emit_module(d2.cores["Same"]).replace("FLAG = 0", "FLAG = X")
        assert sv1 == sv2

    def test_nonconst_bound(self):
        with pytest.raises(CompileError) as e:
            build_text("""\
module Bad
  port n: in UInt<4>;
  port y: out Bool;
  generate_for i in 0..n
    port extra[i]: in Bool;
  end generate_for
  comb y = true;
end module Bad
""")
        assert "E_NONCONST_GENERATE" in diag_codes(e.value)

    def test_indexed_port_only_inside_generate(self):
        with pytest.raises(CompileError) as e:
            build_text("""\
module Loose
  port lane[0]: in Bool;
  port y: out Bool;
  comb y = true;
end module Loose
""")
        d = e.value.diagnostics[0]
        assert d.code == "E_UNSUPPORTED" and "generate_for" in d.message

    def test_duplicate_generated_name(self):
        with pytest.raises(CompileError) as e:
            build_text("""\
module Dup
  port y: out Bool;
  generate_for i in 0..2
    port lane_1: in Bool;
  end generate_for
  comb y = true;
end module Dup
""")
        assert "E_DUP_NAME" in diag_codes(e.value)


class TestInstances:
    def test_cross_file_binding(self):
        a = "module A\n port x: in Bool;\n port y: out Bool;\n comb y = !x;\nend module A"
        b = ("module B\n port p: in Bool;\n port q: out Bool;\n"
             " inst u: A\n  x <- p;\n  y -> q;\n end inst u\nend module B")
        from conftest import build_files
        import tempfile, os
        with tempfile.TemporaryDirectory() as d:
            pa, pb = os.path.join(d, "a.arch"), os.path.join(d, "b.arch")
            open(pa, "w").write(a)
            open(pb, "w").write(b)
            design, _ = build_files([pb, pa])
        assert design.cores["B"].instances[0].module_key == "A"

    def test_unknown_module_suggests_nearest(self):
        with pytest.raises(CompileError) as e:
            build_text("""\
module Counter19
  port y: out Bool;
  comb y = true;
end module Counter19

module P
  port y: out Bool;
  inst u: Counter91
  end inst u
  comb y = true;
end module P
""")
        d = e.value.diagnostics[0]
        assert d.code == "E_UNKNOWN_MODULE"
        assert "Counter19" in d.message

    def test_recursive_inst(self):
        with pytest.raises(CompileError) as e:
            build_text("""\
module Loop
  port y: out Bool;
  inst again: Loop
    y -> t;
  end inst again
  comb y = t;
end module Loop
""")
        assert "E_RECURSIVE_INST" in diag_codes(e.value)

    def test_param_override_specializes(self):
        text = """\
module Width
  param W: const = 4;
  port d: in UInt<W>;
  port q: out UInt<W>;
  comb q = d;
end module Width

module Top
  port d: in UInt<8>;
  port q: out UInt<8>;
  inst w: Width
    param W = 8;
    d <- d;
    q -> q;
  end inst w
end module Top
"""
        design, _ = build_text(text)
        key = [k for k in design.cores if k.startswith("Width__")]
        assert key, list(design.cores)
        spec = design.cores[key[0]]
        assert str(spec.ports[0].ty) == "UInt<8>"
