"""Line-oriented stimulus programs.

    # comment
    clock <domain> period <ticks>
    set <net> <value>
    tick <n>
    run <cycles>          # cycles of the top's first-declared clock
    expect <net> <value>

Values are decimal (optionally negative) or 0x-hex, plus true/false.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import SimEvent, SimReport, Simulator, _StopSim
from .image import SimAbortError, SimImage


class StimulusError(Exception):
    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"stimulus line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class Directive:
    kind: str
    args: tuple
    line_no: int


@dataclass
class StimulusProgram:
    directives: list[Directive]


def _parse_value(text: str, line_no: int) -> int:
    if text == "true":
        return 1
    if text == "false":
        return 0
    try:
        return int(text, 0)
    except ValueError:
        raise StimulusError(line_no, f"bad value {text!r}")


def parse_stimulus(text: str) -> StimulusProgram:
    directives: list[Directive] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if head == "clock":
            if len(parts) != 4 or parts[2] != "period":
                raise StimulusError(line_no, "usage: clock <domain> period <ticks>")
            directives.append(Directive("clock", (parts[1], int(parts[3])), line_no))
        elif head == "set":
            if len(parts) != 3:
                raise StimulusError(line_no, "usage: set <net> <value>")
            directives.append(Directive("set", (parts[1], _parse_value(parts[2], line_no)),
                                        line_no))
        elif head == "tick":
            if len(parts) != 2:
                raise StimulusError(line_no, "usage: tick <n>")
            directives.append(Directive("tick", (int(parts[1]),), line_no))
        elif head == "run":
            if len(parts) != 2:
                raise StimulusError(line_no, "usage: run <cycles>")
            directives.append(Directive("run", (int(parts[1]),), line_no))
        elif head == "expect":
            if len(parts) != 3:
                raise StimulusError(line_no, "usage: expect <net> <value>")
            directives.append(Directive("expect",
                                        (parts[1], _parse_value(parts[2], line_no)),
                                        line_no))
        else:
            raise StimulusError(line_no, f"unknown directive {head!r}")
    return StimulusProgram(directives)


def run_stimulus(image: SimImage, program: StimulusProgram,
                 trace_path: str | None = None) -> SimReport:
    sim = Simulator(image)
    if trace_path is not None:
        from .vcd import VcdTrace
        sim.settle()
        sim.trace = VcdTrace(image, sim.values)
    report = sim.report
    try:
        for d in program.directives:
            if d.kind == "clock":
                domain, period = d.args
                try:
                    sim.set_period(domain, period)
                except (KeyError, ValueError) as exc:
                    raise StimulusError(d.line_no, str(exc))
            elif d.kind == "set":
                name, value = d.args
                try:
                    sim.set_input(name, value)
                except KeyError as exc:
                    raise StimulusError(d.line_no, str(exc))
            elif d.kind == "tick":
                sim.tick(d.args[0])
            elif d.kind == "run":
                domain = image.primary_domain or (image.domains[0] if image.domains else None)
                if domain is None:
                    raise StimulusError(d.line_no, "design has no clock domain to run")
                sim.run_cycles(domain, d.args[0])
            elif d.kind == "expect":
                name, want = d.args
                try:
                    got = sim.peek(name)
                except KeyError as exc:
                    raise StimulusError(d.line_no, str(exc))
                report.expect_count += 1
                if got != want:
                    report.expect_failures += 1
                    report.events.append(SimEvent(
                        "EXPECT_MISMATCH", sim._max_cycle(), "",
                        f"line {d.line_no}: `{name}` expected {want}, got {got}"))
    except _StopSim:
        pass
    except SimAbortError as e:
        event = SimEvent("ABORT", sim._max_cycle(), "", f"{e.kind}: {e.message}")
        report.events.append(event)
        report.aborted = event
    report.final_time = sim.time
    report.passed = (report.expect_failures == 0 and report.assert_failures == 0
                     and report.aborted is None)
    if trace_path is not None and sim.trace is not None:
        sim.trace.write(trace_path)
    return report
