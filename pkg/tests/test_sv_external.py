"""Advisory smoke test: when an external SystemVerilog front-end is
installed (verilator or iverilog), every emitted file must parse. Not a
build dependency; skipped when neither tool is present."""

import shutil
import subprocess

import pytest

from conftest import CLEAN_CORPUS, build_files, corpus_path

from archc.sv_emit import emit_module, sv_file_name


def _frontend():
    if shutil.which("verilator"):
        return lambda path: ["verilator", "--lint-only", "-Wno-fatal", path]
    if shutil.which("iverilog"):
        return lambda path: ["iverilog", "-g2012", "-o", "/dev/null", path]
    return None


@pytest.mark.skipif(_frontend() is None,
                    reason="no SystemVerilog front-end installed (advisory check)")
@pytest.mark.parametrize("fname,top,_s,_b", CLEAN_CORPUS)
def test_emitted_sv_parses_externally(tmp_path, fname, top, _s, _b):
    design, _ = build_files([corpus_path(fname)])
    cmd_of = _frontend()
    for key in design.order:
        core = design.cores[key]
        path = tmp_path / sv_file_name(core)
        path.write_text(emit_module(core))
        proc = subprocess.run(cmd_of(str(path)), capture_output=True, text=True)
        assert proc.returncode == 0, (key, proc.stdout, proc.stderr)
