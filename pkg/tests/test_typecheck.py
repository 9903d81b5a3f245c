"""Width rules (paper Listing 3 / §3.2 / §9.2.4), CDC brute-force oracle,
driver and direction rules, guards, todo!."""

import random

import pytest

from conftest import build_text, diag_codes

from archc.diagnostics import CompileError, render_all


def wrap_module(body, ports=""):
    return f"module T\n{ports}{body}\nend module T"


def expect_code(text, code):
    with pytest.raises(CompileError) as e:
        build_text(text)
    assert code in diag_codes(e.value), diag_codes(e.value)
    return e.value


class TestWidths:
    def test_listing3_mismatch_suggests_zext(self):
        exc = expect_code(wrap_module(
            "  let b: UInt<16> = a;\n  comb y = b;",
            "  port a: in UInt<8>;\n  port y: out UInt<16>;\n"), "E_WIDTH_MISMATCH")
        d = [x for x in exc.diagnostics if x.code == "E_WIDTH_MISMATCH"][0]
        assert ".zext<16>()" in (d.help or "")

    def test_listing3_explicit_zext_ok(self):
        design, _ = build_text(wrap_module(
            "  let b: UInt<16> = a.zext<16>();\n  comb y = b;",
            "  port a: in UInt<8>;\n  port y: out UInt<16>;\n"))
        assert str(design.cores["T"].nets["b"].ty) == "UInt<16>"

    def test_shift_is_non_widening(self):
        expect_code(wrap_module(
            "  let wide: UInt<9> = a << 1;\n  comb y = wide;",
            "  port a: in UInt<8>;\n  port y: out UInt<9>;\n"), "E_WIDTH_MISMATCH")

    def test_shift_after_zext_ok(self):
        design, _ = build_text(wrap_module(
            "  let wide: UInt<9> = a.zext<9>() << 1;\n  comb y = wide;",
            "  port a: in UInt<8>;\n  port y: out UInt<9>;\n"))
        assert design is not None

    def test_wrap_add_max_width(self):
        design, _ = build_text(wrap_module(
            "  comb y = x +% k;",
            "  port x: in UInt<8>;\n  port k: in UInt<4>;\n  port y: out UInt<8>;\n"))
        assert str(design.cores["T"].nets["y"].expr.ty) == "UInt<8>"

    def test_equal_width_required_for_plus(self):
        expect_code(wrap_module(
            "  comb y = x + k;",
            "  port x: in UInt<8>;\n  port k: in UInt<4>;\n  port y: out UInt<8>;\n"),
            "E_WIDTH_MISMATCH")

    def test_signed_unsigned_mix_rejected(self):
        expect_code(wrap_module(
            "  comb y = a + b;",
            "  port a: in UInt<8>;\n  port b: in SInt<8>;\n  port y: out UInt<8>;\n"),
            "E_WIDTH_MISMATCH")

    def test_literal_adopts_context(self):
        design, _ = build_text(wrap_module(
            "  comb y = a + 1;",
            "  port a: in UInt<8>;\n  port y: out UInt<8>;\n"))
        assert design is not None

    def test_literal_out_of_range(self):
        expect_code(wrap_module(
            "  let v: UInt<4> = 16;\n  comb y = v;",
            "  port y: out UInt<4>;\n"), "E_LITERAL_RANGE")

    def test_bool_uint1_alias_both_ways(self):
        design, _ = build_text(wrap_module(
            "  let b: Bool = u;\n  let u2: UInt<1> = b;\n  comb y = u2;",
            "  port u: in UInt<1>;\n  port y: out Bool;\n"))
        assert design is not None

    def test_bit_has_no_arithmetic(self):
        expect_code(wrap_module(
            "  comb y = a + b;",
            "  port a: in Bit;\n  port b: in Bit;\n  port y: out Bit;\n"),
            "E_WIDTH_MISMATCH")

    def test_bad_convert_narrowing_zext(self):
        expect_code(wrap_module(
            "  let v: UInt<4> = a.zext<4>();\n  comb y = v;",
            "  port a: in UInt<8>;\n  port y: out UInt<4>;\n"), "E_BAD_CONVERT")

    def test_trunc_cannot_widen(self):
        expect_code(wrap_module(
            "  let v: UInt<16> = a.trunc<16>();\n  comb y = v;",
            "  port a: in UInt<8>;\n  port y: out UInt<16>;\n"), "E_BAD_CONVERT")

    def test_clock_not_data(self):
        expect_code(wrap_module(
            "  comb y = clk;",
            "  port clk: in Clock<D>;\n  port y: out Bool;\n"), "E_WIDTH_MISMATCH")


class TestCdc:
    def test_two_domain_direct_assign_rejected(self):
        expect_code("""\
module X
  port aclk: in Clock<A>;
  port bclk: in Clock<B>;
  port rst: in Reset<Sync>;
  port din: in Bool;
  port q: out Bool;
  reg ra: Bool reset rst => false;
  seq on aclk rising
    ra <= din;
  end seq
  reg rb: Bool reset rst => false;
  seq on bclk rising
    rb <= ra;
  end seq
  comb q = rb;
end module X
""", "E_CDC")

    def test_synchronizer_bridge_accepted(self):
        design, _ = build_text(open(__file__.replace(
            "tests/test_typecheck.py", "corpus/cdc_flag.arch")).read())
        assert "CdcTop" in design.cores

    def test_sync_wrong_source_domain(self):
        text = open(__file__.replace(
            "tests/test_typecheck.py", "corpus/cdc_flag.arch")).read()
        bad = text.replace("data_in <- sys_flag;", "data_in <- usb_back;")
        bad = bad.replace("reg usb_flag: Bool reset rst => false;",
                          "reg usb_flag: Bool reset rst => false;\n"
                          "  reg usb_back: Bool reset rst => false;")
        bad = bad.replace("seq on usb_clk rising\n    usb_flag <= bridge.data_out;",
                          "seq on usb_clk rising\n    usb_flag <= bridge.data_out;\n"
                          "    usb_back <= flag_in;")
        with pytest.raises(CompileError) as e:
            build_text(bad)
        assert "E_SYNC_TYPE" in diag_codes(e.value)

    def test_clock_connection_domain_mismatch(self):
        text = open(__file__.replace(
            "tests/test_typecheck.py", "corpus/cdc_flag.arch")).read()
        bad = text.replace("src_clk <- sys_clk;", "src_clk <- usb_clk;")
        with pytest.raises(CompileError) as e:
            build_text(bad)
        assert "E_SYNC_TYPE" in diag_codes(e.value)

    def test_single_domain_clean(self):
        design, _ = build_text("""\
module OneDomain
  port clk: in Clock<Only>;
  port rst: in Reset<Sync>;
  port d: in Bool;
  port q: out Bool;
  reg r: Bool reset rst => false;
  seq on clk rising
    r <= d;
  end seq
  comb q = r;
end module OneDomain
""")
        assert design is not None

    def test_brute_force_oracle_small_designs(self):
        """Random 2-domain designs (<=6 nets): a reachability oracle over
        comb paths must agree with the checker's verdict exactly."""
        rng = random.Random(4242)
        agree = 0
        for trial in range(200):
            n_lets = rng.randint(1, 4)
            sources = ["din", "ra", "rb"]
            lets = []
            cones = {"din": set(), "ra": {"ra"}, "rb": {"rb"}}
            for i in range(n_lets):
                name = f"l{i}"
                picks = rng.sample(sources + [l[0] for l in lets],
                                   rng.randint(1, 2))
                lets.append((name, picks))
                cones[name] = set().union(*(cones[p] for p in picks))
                sources.append(name)
            ra_src = rng.choice([s for s in sources if s != "ra"])
            rb_src = rng.choice([s for s in sources if s != "rb"])
            q_src = rng.choice([l[0] for l in lets])

            mixes = any(("ra" in cones[l] and "rb" in cones[l]) for l, _ in lets)
            crossing = ("rb" in cones[ra_src]) or ("ra" in cones[rb_src])
            expect_err = mixes or crossing

            let_lines = "\n".join(
                f"  let {n}: Bool = {' && '.join(ps)};" for n, ps in lets)
            text = f"""\
module R{trial}
  port aclk: in Clock<A>;
  port bclk: in Clock<B>;
  port rst: in Reset<Sync>;
  port din: in Bool;
  port q: out Bool;
  reg ra: Bool reset rst => false;
  reg rb: Bool reset rst => false;
{let_lines}
  seq on aclk rising
    ra <= {ra_src};
  end seq
  seq on bclk rising
    rb <= {rb_src};
  end seq
  comb q = {q_src};
end module R{trial}
"""
            got_err = False
            try:
                build_text(text)
            except CompileError as e:
                got_err = "E_CDC" in diag_codes(e)
                assert got_err, diag_codes(e)
            assert got_err == expect_err, text
            agree += 1
        assert agree == 200


class TestDriversDirections:
    def test_two_comb_blocks_multi_driver(self):
        exc = expect_code(wrap_module(
            "  comb y = a;\n  comb y = !a;",
            "  port a: in Bool;\n  port y: out Bool;\n"), "E_MULTI_DRIVER")
        d = [x for x in exc.diagnostics if x.code == "E_MULTI_DRIVER"][0]
        assert d.notes, "both driver sites are shown"

    def test_undriven_output(self):
        expect_code(wrap_module("  comb y = a;",
                                "  port a: in Bool;\n  port y: out Bool;\n"
                                "  port z: out Bool;\n"), "E_UNDRIVEN")

    def test_drive_input(self):
        expect_code(wrap_module("  comb a = true;\n  comb y = a;",
                                "  port a: in Bool;\n  port y: out Bool;\n"),
                    "E_DRIVE_INPUT")

    def test_arrow_direction(self):
        expect_code("""\
module Kid
  port d: in Bool;
  port q: out Bool;
  comb q = d;
end module Kid

module Mom
  port a: in Bool;
  port y: out Bool;
  inst u: Kid
    d -> a2;
    q -> y;
  end inst u
  comb y2 = a2;
end module Mom
""", "E_ARROW_DIRECTION")

    def test_undriven_child_input(self):
        expect_code("""\
module Kid
  port d: in Bool;
  port q: out Bool;
  comb q = d;
end module Kid

module Mom
  port y: out Bool;
  inst u: Kid
    q -> y;
  end inst u
end module Mom
""", "E_UNDRIVEN")


class TestCompleteness:
    def test_missing_else(self):
        expect_code(wrap_module(
            "  comb\n    if en then\n      y = a;\n    end if\n  end comb",
            "  port en: in Bool;\n  port a: in UInt<8>;\n  port y: out UInt<8>;\n"),
            "E_IMPLICIT_LATCH")

    def test_with_else_ok(self):
        design, _ = build_text(wrap_module(
            "  comb\n    if en then\n      y = a;\n    else\n      y = 0;\n"
            "    end if\n  end comb",
            "  port en: in Bool;\n  port a: in UInt<8>;\n  port y: out UInt<8>;\n"))
        assert design is not None

    def test_incomplete_enum_match(self):
        expect_code("""\
module M
  enum C
    variant R;
    variant G;
    variant B;
  end enum C
  port pick: in C;
  port y: out UInt<2>;
  comb
    match pick
      case C::R:
        y = 0;
      case C::G:
        y = 1;
    end match
  end comb
end module M
""", "E_IMPLICIT_LATCH")

    def test_full_enum_match_ok(self):
        design, _ = build_text("""\
module M
  enum C
    variant R;
    variant G;
  end enum C
  port pick: in C;
  port y: out UInt<2>;
  comb
    match pick
      case C::R:
        y = 0;
      case C::G:
        y = 1;
    end match
  end comb
end module M
""")
        assert design is not None


class TestLoops:
    def test_direct_loop_with_path(self):
        exc = expect_code(wrap_module(
            "  comb a2 = b2;\n  comb b2 = a2;\n  comb y = a2;",
            "  port y: out Bool;\n"), "E_COMB_LOOP")
        d = [x for x in exc.diagnostics if x.code == "E_COMB_LOOP"][0]
        assert "->" in d.message  # ordered path trace

    def test_register_breaks_cycle(self):
        design, _ = build_text("""\
module RegBreak
  port clk: in Clock<D>;
  port rst: in Reset<Sync>;
  port y: out UInt<8>;
  reg r: UInt<8> reset rst => 0;
  let a: UInt<8> = r +% 1;
  seq on clk rising
    r <= a;
  end seq
  comb y = a;
end module RegBreak
""")
        assert design is not None

    def test_chain_levels(self):
        design, _ = build_text(wrap_module(
            "  let a2: Bool = x;\n  let b2: Bool = !a2;\n  let c2: Bool = !b2;\n"
            "  comb y = c2;",
            "  port x: in Bool;\n  port y: out Bool;\n"))
        levels = design.cores["T"].comb_levels
        assert levels["a2"] < levels["b2"] < levels["c2"]

    def test_cross_instance_loop(self):
        expect_code("""\
module Wire
  port i: in Bool;
  port o: out Bool;
  comb o = !i;
end module Wire

module Tangle
  port y: out Bool;
  inst u: Wire
    i <- back;
    o -> fwd;
  end inst u
  let back: Bool = fwd;
  comb y = fwd;
end module Tangle
""", "E_COMB_LOOP")


class TestGuardsTodo:
    def test_paper_guard_shape_ok(self):
        design, _ = build_text("""\
module AxiRead
  port clk: in Clock<D>;
  port rst: in Reset<Sync>;
  port d: in UInt<32>;
  port go: in Bool;
  port q: out UInt<32>;
  reg axi_rdata: UInt<32> guard axi_rvalid;
  reg axi_rvalid: Bool reset rst => false;
  seq on clk rising
    if go then
      axi_rdata <= d;
      axi_rvalid <= true;
    end if
  end seq
  comb q = axi_rdata;
end module AxiRead
""")
        assert design.cores["AxiRead"].regs["axi_rdata"].guard == "axi_rvalid"

    def test_guard_without_reset(self):
        expect_code("""\
module G
  port clk: in Clock<D>;
  port d: in UInt<8>;
  port q: out UInt<8>;
  reg data: UInt<8> guard valid;
  reg valid: Bool reset none;
  seq on clk rising
    data <= d;
    valid <= true;
  end seq
  comb q = data;
end module G
""", "E_GUARD_NO_RESET")

    def test_todo_typechecks_and_flags(self):
        design, _ = build_text(wrap_module(
            "  comb resp = todo!;",
            "  port resp: out UInt<8>;\n"))
        assert design.cores["T"].has_todo

    def test_error_determinism(self):
        text = open(__file__.replace(
            "tests/test_typecheck.py", "corpus/bad/03_cdc_direct.arch")).read()
        outs = set()
        for _ in range(3):
            try:
                build_text(text, name="corpus/bad/03_cdc_direct.arch")
            except CompileError as e:
                from archc.parser import parse_source
                src, _unit = parse_source(text, "corpus/bad/03_cdc_direct.arch")
                outs.add(render_all(e.diagnostics, {src.name: src}))
        assert len(outs) == 1
