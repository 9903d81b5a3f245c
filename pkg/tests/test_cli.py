"""CLI surface: subcommands, exit codes, --json, diagnostics rendering."""

import io
import json
import os
from contextlib import redirect_stdout

import pytest

from conftest import corpus_path

from archc import cli


def run_cli(*args):
    buf = io.StringIO()
    with redirect_stdout(buf):
        rc = cli.main(list(args))
    return rc, buf.getvalue()


class TestCheck:
    def test_clean_counter_silent_exit0(self):
        rc, out = run_cli("check", corpus_path("counter_wrap200.arch"))
        assert rc == 0 and out == ""

    def test_listing3_error_line(self, tmp_path):
        f = tmp_path / "l3.arch"
        f.write_text("""\
module L3
  port y: out UInt<16>;
  let a: UInt<8> = 255;
  let c: UInt<16> = a;
  comb y = c;
end module L3
""")
        rc, out = run_cli("check", str(f))
        assert rc == 1
        assert "error[E_WIDTH_MISMATCH]" in out
        assert out.count("error[") == 1

    def test_todo_exits_zero_with_note(self):
        rc, out = run_cli("check", corpus_path("todo_stub.arch"))
        assert rc == 0
        assert "note: todo!" in out and "CacheStub" in out

    def test_json_diagnostics(self):
        rc, out = run_cli("check", corpus_path("bad/01_width_assign.arch"), "--json")
        assert rc == 1
        obj = json.loads(out.splitlines()[0])
        assert obj["code"] == "E_WIDTH_MISMATCH"
        assert obj["severity"] == "error"
        assert obj["line"] == 4

    def test_multi_file_universe(self, tmp_path):
        a = tmp_path / "a.arch"
        a.write_text("module A\n port x: in Bool;\n port y: out Bool;\n"
                     " comb y = !x;\nend module A\n")
        b = tmp_path / "b.arch"
        b.write_text("module B\n port p: in Bool;\n port q: out Bool;\n"
                     " inst u: A\n  x <- p;\n  y -> q;\n end inst u\nend module B\n")
        rc, _ = run_cli("check", str(b), str(a))
        assert rc == 0


class TestBuild:
    def test_emits_one_file_per_construct(self, tmp_path):
        rc, out = run_cli("build", corpus_path("gen_systolic.arch"),
                          "--out-dir", str(tmp_path))
        assert rc == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["SystolicArray.sv", "SystolicPE.sv"]
        assert str(tmp_path / "SystolicPE.sv") in out

    def test_refuses_todo(self, tmp_path):
        rc, out = run_cli("build", corpus_path("todo_stub.arch"),
                          "--out-dir", str(tmp_path))
        assert rc == 1
        assert "E_TODO_IN_BUILD" in out

    def test_fsm_encoding_flag(self, tmp_path):
        rc, _ = run_cli("build", corpus_path("fsm_controller.arch"),
                        "--out-dir", str(tmp_path), "--fsm-encoding", "onehot")
        assert rc == 0
        text = (tmp_path / "Controller.sv").read_text()
        assert "3'd1" in text or "3'b001" in text or "S_Idle = 3'd1" in text


class TestSim:
    def test_counter_stimulus_pass(self):
        rc, out = run_cli("sim", corpus_path("counter_wrap200.arch"),
                          "--stim", corpus_path("counter_wrap200.stim"))
        assert rc == 0 and "PASS" in out

    def test_expect_mismatch_exit1(self, tmp_path):
        stim = tmp_path / "bad.stim"
        stim.write_text("clock SysDomain period 2\nset en 1\nrun 5\nexpect count 99\n")
        rc, out = run_cli("sim", corpus_path("counter_wrap200.arch"),
                          "--stim", str(stim))
        assert rc == 1 and "EXPECT_MISMATCH" in out

    def test_abort_exit3_with_site(self, tmp_path):
        design = tmp_path / "oob.arch"
        design.write_text("""\
module Oob
  port clk: in Clock<D>;
  port rst: in Reset<Sync>;
  port idx: in UInt<3>;
  port d: in UInt<8>;
  port q: out UInt<8>;
  reg mem: Vec<UInt<8>, 4> reset rst => 0;
  seq on clk rising
    mem[idx] <= d;
  end seq
  comb q = mem[0];
end module Oob
""")
        stim = tmp_path / "oob.stim"
        stim.write_text("clock D period 2\nset idx 5\nrun 1\n")
        rc, out = run_cli("sim", str(design), "--stim", str(stim))
        assert rc == 3
        assert "OUT_OF_BOUNDS" in out and "oob.arch" in out

    def test_todo_abort_exit3(self, tmp_path):
        stim = tmp_path / "t.stim"
        stim.write_text("set req_addr 1\nexpect resp 0\n")
        rc, out = run_cli("sim", corpus_path("todo_stub.arch"), "--stim", str(stim))
        assert rc == 3 and "TODO_REACHED" in out

    def test_wave_writes_vcd(self, tmp_path):
        out_vcd = tmp_path / "w.vcd"
        rc, _ = run_cli("sim", corpus_path("counter_wrap200.arch"),
                        "--stim", corpus_path("counter_wrap200.stim"),
                        "--wave", str(out_vcd))
        assert rc == 0 and out_vcd.exists()
        assert "$enddefinitions" in out_vcd.read_text()

    def test_ambiguous_top(self):
        rc, out = run_cli("sim", corpus_path("hier_top.arch"))
        assert rc == 1 and "E_NO_TOP" in out and "HierTop" in out

    def test_stim_parse_error(self, tmp_path):
        stim = tmp_path / "junk.stim"
        stim.write_text("warp 9\n")
        rc, out = run_cli("sim", corpus_path("counter_wrap200.arch"),
                          "--stim", str(stim))
        assert rc == 1 and "E_STIM" in out

    def test_guard_violation_under_check_uninit(self, tmp_path):
        stim = tmp_path / "g.stim"
        stim.write_text("clock SysDomain period 2\nset start 1\nrun 3\n")
        rc, out = run_cli("sim", corpus_path("guard_bug.arch"),
                          "--stim", str(stim), "--check-uninit")
        assert rc == 1  # assert guard_contract fails
        assert "GUARD_VIOLATION" in out

    def test_stop_on_assert(self, tmp_path):
        stim = tmp_path / "s.stim"
        stim.write_text("clock SysDomain period 2\nset en 1\nrun 20\n")
        rc, out = run_cli("sim", corpus_path("counter_wrap15.arch"),
                          "--stim", str(stim), "--stop-on-assert")
        assert rc == 1
        assert out.count("ASSERT_FAIL") == 1


class TestFormal:
    def test_counter_suite_exit0(self):
        rc, out = run_cli("formal", corpus_path("counter_wrap200.arch"),
                          "--bound", "50", "--solver", "builtin")
        assert rc == 0
        assert "range_ok: PROVED (bound 50)" in out

    def test_refuted_exit1_with_table(self):
        rc, out = run_cli("formal", corpus_path("counter_wrap15.arch"),
                          "--bound", "20", "--solver", "builtin")
        assert rc == 1
        assert "never_full: REFUTED at cycle 15" in out
        assert "counterexample for never_full:" in out
        assert "cycle" in out and "en" in out

    def test_solver_missing_exit2(self, monkeypatch):
        monkeypatch.setenv("PATH", "/nonexistent")
        monkeypatch.delenv("ARCHC_SOLVER_PATH", raising=False)
        rc, out = run_cli("formal", corpus_path("counter_wrap200.arch"),
                          "--bound", "5", "--solver", "z3")
        assert rc == 2 and "E_SOLVER_MISSING" in out

    def test_unsupported_exit2(self):
        rc, out = run_cli("formal", corpus_path("hier_top.arch"),
                          "--top", "HierTop", "--bound", "5", "--solver", "builtin")
        assert rc == 2 and "E_FORMAL_UNSUPPORTED" in out

    def test_not_reached_exit1(self):
        rc, out = run_cli("formal", corpus_path("counter_cover8.arch"),
                          "--bound", "5", "--solver", "builtin")
        assert rc == 1 and "NOT-REACHED" in out
