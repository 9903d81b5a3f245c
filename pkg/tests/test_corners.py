"""Less-traveled combinations: conditional FSM defaults, cross-stage comb
reads, free inputs in formal properties, generate inside stages."""

from conftest import build_text

from archc.formal import verify
from archc.sim import SimFlags, build_sim
from archc.sim.engine import Simulator


def sim_of(design, top, **kw):
    return Simulator(build_sim(design.cores, top, SimFlags(**kw)))


class TestFsmConditionalDefaults:
    def test_default_block_with_branches_plus_overrides(self):
        design, _ = build_text("""\
fsm Blinker
  port clk: in Clock<D>;
  port rst: in Reset<Sync>;
  port dim: in Bool;
  port run_mode: in Bool;
  port level: out UInt<4>;
  default state Off;
  default
    comb
      if dim then
        level = 1;
      else
        level = 3;
      end if
    end comb
  end default
  state Off
    -> On when run_mode;
  end state Off
  state On
    let level = 15;
    -> Off when !run_mode;
  end state On
end fsm Blinker
""")
        sim = sim_of(design, "Blinker")
        assert sim.peek("level") == 3          # default, !dim
        sim.set_input("dim", 1)
        assert sim.peek("level") == 1          # conditional default
        sim.set_input("run_mode", 1)
        sim.run_cycles("D", 1)
        assert sim.peek("level") == 15         # state override wins
        sim.set_input("run_mode", 0)
        sim.run_cycles("D", 1)
        assert sim.peek("level") == 1          # back to conditional default


class TestPipelineCombCrossStage:
    def test_comb_in_stage_reads_earlier_stage(self):
        design, _ = build_text("""\
pipeline Peek
  port clk: in Clock<D>;
  port rst: in Reset<Sync>;
  port din: in UInt<8>;
  port snoop: out UInt<8>;
  port dout: out UInt<8>;
  stage A
    reg v: UInt<8> reset rst => 0;
    seq on clk rising
      v <= din;
    end seq
  end stage A
  stage B
    reg w: UInt<8> reset rst => 0;
    comb doubled = A.v +% A.v;
    seq on clk rising
      w <= doubled;
    end seq
  end stage B
  comb snoop = B.doubled;
  comb dout = B.w;
end pipeline Peek
""")
        sim = sim_of(design, "Peek")
        sim.set_input("din", 21)
        sim.run_cycles("D", 1)
        assert sim.peek("snoop") == 42   # comb view of the stage-A register
        sim.run_cycles("D", 1)
        assert sim.peek("dout") == 42

    def test_generate_inside_stage(self):
        design, _ = build_text("""\
pipeline Spread
  param LANES: const = 3;
  port clk: in Clock<D>;
  port rst: in Reset<Sync>;
  port din: in UInt<8>;
  port total: out UInt<8>;
  stage S
    generate_for i in 0..LANES
      reg lane[i]: UInt<8> reset rst => 0;
      seq on clk rising
        lane[i] <= din +% i;
      end seq
    end generate_for
  end stage S
  comb total = S.lane_0 +% S.lane_1 +% S.lane_2;
end pipeline Spread
""")
        sim = sim_of(design, "Spread")
        sim.set_input("din", 10)
        sim.run_cycles("D", 1)
        assert sim.peek("total") == 33


class TestFormalFreeInputs:
    def test_property_over_input_and_state(self):
        design, _ = build_text("""\
module Gated
  port clk: in Clock<D>;
  port rst: in Reset<Sync>;
  port en: in Bool;
  port q: out UInt<4>;
  reg r: UInt<4> reset rst => 0;
  seq on clk rising
    if en then
      r <= r == 9 ? 0 : r + 1;
    end if
  end seq
  comb q = r;
  assert bounded: en implies (r <= 9);
  assert always_bounded: r <= 9;
  cover top_seen: r == 9;
end module Gated
""")
        v = verify(design.cores["Gated"], 15, "builtin")
        by = {r.name: r for r in v.results}
        assert by["bounded"].status == "PROVED"
        assert by["always_bounded"].status == "PROVED"
        assert by["top_seen"].status == "HIT" and by["top_seen"].cycle == 9
        assert v.exit_code == 0
