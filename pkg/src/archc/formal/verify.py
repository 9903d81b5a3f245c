"""Formal verification driver: encode, dispatch, decode, classify.

Verdicts: PROVED (assert unviolated up to the bound), REFUTED (+decoded
counterexample trace), HIT (cover witness at its earliest cycle),
NOT_REACHED, INCONCLUSIVE. Minimal witness/violation cycles come from a
binary search over bounds (sat at bound k but not k-1 pins cycle k),
keeping reported cycles solver-independent.

Exit code: 0 iff every assert PROVED and every cover HIT; 1 if any
REFUTED or NOT_REACHED; 2 on unknown/timeout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..ir import CoreModule
from .encode import SmtScript, encode_bmc
from .solver import SolverError, pick_solver, run_solver


@dataclass
class PropResult:
    name: str
    kind: str
    status: str                       # PROVED | REFUTED | HIT | NOT_REACHED | INCONCLUSIVE
    cycle: Optional[int] = None
    trace: Optional[list[dict[str, int]]] = None  # per-cycle net -> value
    detail: str = ""

    def line(self, bound: int) -> str:
        if self.status == "PROVED":
            return f"{self.kind} {self.name}: PROVED (bound {bound})"
        if self.status == "REFUTED":
            return f"{self.kind} {self.name}: REFUTED at cycle {self.cycle}"
        if self.status == "HIT":
            return f"{self.kind} {self.name}: HIT at cycle {self.cycle}"
        if self.status == "NOT_REACHED":
            return f"{self.kind} {self.name}: NOT-REACHED (bound {bound})"
        return f"{self.kind} {self.name}: INCONCLUSIVE ({self.detail})"


@dataclass
class FormalVerdict:
    results: list[PropResult]
    bound: int
    solver: str
    exit_code: int = 0

    def summary_lines(self) -> list[str]:
        out = [r.line(self.bound) for r in self.results]
        n_bad = sum(1 for r in self.results if r.status in ("REFUTED", "NOT_REACHED"))
        n_unk = sum(1 for r in self.results if r.status == "INCONCLUSIVE")
        ok = len(self.results) - n_bad - n_unk
        out.append(f"summary: {ok} ok, {n_bad} failing, {n_unk} inconclusive "
                   f"(solver {self.solver}, bound {self.bound})")
        return out


def _classify_exit(results: list[PropResult]) -> int:
    if any(r.status in ("REFUTED", "NOT_REACHED") for r in results):
        return 1
    if any(r.status == "INCONCLUSIVE" for r in results):
        return 2
    return 0


def _decode_trace(script: SmtScript, model: dict[str, int],
                  upto: int) -> list[dict[str, int]]:
    trace: list[dict[str, int]] = []
    for k in range(upto + 1):
        row: dict[str, int] = {}
        for name in script.input_names + script.state_names:
            var = f"{name}__{k}"
            if var in model:
                row[name] = model[var]
        trace.append(row)
    return trace


def _min_true_cycle(script: SmtScript, model: dict[str, int], want: int) -> int:
    for k in range(script.bound + 1):
        if model.get(script.prop_var[k], 1 - want) == want:
            return k
    return script.bound


def verify(core: CoreModule, bound: int, solver_choice: str = "auto", *,
           timeout: float | None = None, emit_smt: str | None = None,
           find_min_cycle: bool = True) -> FormalVerdict:
    """Check every property of `core` up to `bound`."""
    from .encode import formal_scope_check
    formal_scope_check(core)
    solver = pick_solver(solver_choice)
    results: list[PropResult] = []
    props = list(core.properties)
    for prop in props:
        script = encode_bmc(core, prop, bound)
        if emit_smt is not None:
            path = emit_smt
            if len(props) > 1:
                stem, dot, ext = emit_smt.rpartition(".")
                path = (f"{stem}.{prop.name}.{ext}" if dot
                        else f"{emit_smt}.{prop.name}")
            with open(path, "w", encoding="utf-8") as f:
                f.write(script.text)
        try:
            first = run_solver(script.text, solver, timeout)
        except SolverError:
            raise
        if first.status in ("unknown", "timeout"):
            results.append(PropResult(prop.name, prop.kind, "INCONCLUSIVE",
                                      detail=first.status))
            continue
        if prop.kind == "assert":
            if first.status == "unsat":
                results.append(PropResult(prop.name, prop.kind, "PROVED"))
                continue
            cycle, model, script_k = _minimize(core, prop, bound, solver, timeout,
                                               script, find_min_cycle)
            trace = _decode_trace(script_k, model, cycle)
            results.append(PropResult(prop.name, prop.kind, "REFUTED", cycle, trace))
        else:
            if first.status == "unsat":
                results.append(PropResult(prop.name, prop.kind, "NOT_REACHED"))
                continue
            cycle, model, script_k = _minimize(core, prop, bound, solver, timeout,
                                               script, find_min_cycle)
            trace = _decode_trace(script_k, model, cycle)
            results.append(PropResult(prop.name, prop.kind, "HIT", cycle, trace))
    verdict = FormalVerdict(results, bound, solver)
    verdict.exit_code = _classify_exit(results)
    return verdict


def _minimize(core: CoreModule, prop, bound: int, solver: str,
              timeout: float | None, full_script: SmtScript,
              find_min: bool) -> tuple[int, dict[str, int], SmtScript]:
    """Binary-search the smallest bound that is still sat, then pull the
    model at that bound. The minimal sat bound equals the earliest
    violation/witness cycle."""
    want = 0 if prop.kind == "assert" else 1
    if not find_min:
        model = run_solver(full_script.text, solver, timeout,
                           want_values=full_script.all_vars).model
        return _min_true_cycle(full_script, model, want), model, full_script
    lo, hi = 0, bound  # invariant: sat at hi
    while lo < hi:
        mid = (lo + hi) // 2
        script_mid = encode_bmc(core, prop, mid)
        res = run_solver(script_mid.text, solver, timeout)
        if res.status == "sat":
            hi = mid
        else:
            lo = mid + 1
    script_k = encode_bmc(core, prop, hi)
    model = run_solver(script_k.text, solver, timeout,
                       want_values=script_k.all_vars).model
    return hi, model, script_k


def trace_to_stimulus(core: CoreModule, result: PropResult,
                      expects: bool = True) -> str:
    """Counterexample/witness trace -> replayable stimulus text. Period 1,
    one set block per cycle; the assertion fires during the final tick."""
    assert result.trace is not None
    clock_domain = core.clock_ports()[0][1]
    lines = [f"clock {clock_domain} period 1"]
    state_names = list(core.regs)
    for k, row in enumerate(result.trace):
        for name, value in row.items():
            if name in state_names:
                continue
            lines.append(f"set {name} {value}")
        if expects:
            for name in state_names:
                if name in row:
                    lines.append(f"expect {name} {row[name]}")
        lines.append("tick 1")
    return "\n".join(lines) + "\n"
