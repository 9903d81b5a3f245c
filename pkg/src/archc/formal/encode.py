"""SMT-LIB2 (QF_BV) bounded-model-checking encoder.

Per-cycle bit-vector variables `<net>__<cycle>` for cycles 0..N; comb nets
asserted equal to their definitions; register transitions asserted as
equalities with the reset input constrained inactive and cycle 0 holding
the reset values (reset-none registers start at 0, matching the 2-state
simulator). Each assert becomes one big disjunction of per-cycle
violations, each cover a disjunction of per-cycle hits, checked by a
single (check-sat).

Scope: flat single-clock modules with scalar signals (no sub-instances,
no Vec, no enum-typed nets, no todo!).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..ast_nodes import (
    Binary, BoolLit, Convert, EnumRef, Expr, IfExpr, Index, IntLit, NameRef,
    Slice, Ternary, TodoExpr, Unary,
)
from ..ir import CoreModule, CoreProperty, VecStore
from ..types import EnumType, Reset, SInt, Type, UInt, Vec


class FormalUnsupported(Exception):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


def formal_scope_check(core: CoreModule) -> None:
    if core.instances:
        raise FormalUnsupported(
            f"`{core.name}` instantiates sub-modules (no sub-inst in formal v1)")
    clocks = core.clock_ports()
    if len(clocks) != 1:
        raise FormalUnsupported(
            f"`{core.name}` has {len(clocks)} clock ports; formal needs exactly one")
    for p in core.ports:
        if isinstance(p.ty, Vec):
            raise FormalUnsupported(f"port `{p.name}` has a Vec type")
    for name, net in core.nets.items():
        if isinstance(net.ty, Vec):
            raise FormalUnsupported(f"net `{name}` has a Vec type")
        if isinstance(net.ty, EnumType):
            raise FormalUnsupported(f"net `{name}` has an enum type")
    for name, reg in core.regs.items():
        if isinstance(reg.ty, (Vec, EnumType)):
            raise FormalUnsupported(f"register `{name}` has type {reg.ty}")
        if reg.edge != "rising":
            raise FormalUnsupported(f"register `{name}` uses a falling-edge clock")
    if core.has_todo:
        raise FormalUnsupported(
            f"`{core.name}` contains todo! placeholders")


@dataclass
class SmtScript:
    text: str
    prop: CoreProperty
    bound: int
    decode: dict[str, tuple[str, int]]           # smt var -> (net, cycle)
    all_vars: list[str]
    input_names: list[str]                       # free per-cycle inputs
    state_names: list[str]                       # regs (for trace display)
    prop_var: dict[int, str] = field(default_factory=dict)  # cycle -> P var


def _width(ty: Type) -> int:
    if isinstance(ty, (UInt, SInt)):
        return ty.width
    return 1


def _bv(value: int, width: int) -> str:
    return "#b" + format(value & ((1 << width) - 1), f"0{width}b")


class _Encoder:
    def __init__(self, core: CoreModule, bound: int) -> None:
        self.core = core
        self.bound = bound
        self.lines: list[str] = ["(set-logic QF_BV)"]
        self.decode: dict[str, tuple[str, int]] = {}
        self.all_vars: list[str] = []

    def var(self, net: str, cycle: int) -> str:
        return f"{net}__{cycle}"

    def declare(self, net: str, cycle: int, width: int) -> str:
        name = self.var(net, cycle)
        self.lines.append(f"(declare-const {name} (_ BitVec {width}))")
        self.decode[name] = (net, cycle)
        self.all_vars.append(name)
        return name

    # expression -> SMT term at cycle k
    def term(self, e: Expr, k: int) -> str:
        if isinstance(e, IntLit):
            return _bv(e.value, _width(e.ty))
        if isinstance(e, BoolLit):
            return "#b1" if e.value else "#b0"
        if isinstance(e, EnumRef):
            return _bv(e.ty.variants.index(e.variant), _width(e.ty))
        if isinstance(e, NameRef):
            return self.var(e.name, k)
        if isinstance(e, TodoExpr):
            raise FormalUnsupported("todo! in formal scope")
        if isinstance(e, Unary):
            a = self.term(e.operand, k)
            if e.op == "!":
                return f"(bvnot {a})"
            if e.op == "~":
                return f"(bvnot {a})"
            return f"(bvneg {a})"
        if isinstance(e, Binary):
            return self._binary(e, k)
        if isinstance(e, (Ternary, IfExpr)):
            c = self.bool_term(e.cond, k)
            return f"(ite {c} {self.term(e.then, k)} {self.term(e.els, k)})"
        if isinstance(e, Index):
            base_ty = e.base.ty
            if isinstance(base_ty, Vec):
                raise FormalUnsupported("Vec indexing in formal scope")
            w = _width(base_ty)
            base = self.term(e.base, k)
            idx = self.term(e.index, k)
            iw = _width(e.index.ty)
            if iw < w:
                idx = f"((_ zero_extend {w - iw}) {idx})"
            elif iw > w:
                idx = f"((_ extract {w - 1} 0) {idx})"
            return f"((_ extract 0 0) (bvlshr {base} {idx}))"
        if isinstance(e, Slice):
            return f"((_ extract {e.hi.value} {e.lo.value}) {self.term(e.base, k)})"
        if isinstance(e, Convert):
            src_w = _width(e.base.ty)
            dst_w = _width(e.ty)
            inner = self.term(e.base, k)
            if e.kind == "zext":
                return inner if dst_w == src_w else f"((_ zero_extend {dst_w - src_w}) {inner})"
            if e.kind == "sext":
                return inner if dst_w == src_w else f"((_ sign_extend {dst_w - src_w}) {inner})"
            return inner if dst_w == src_w else f"((_ extract {dst_w - 1} 0) {inner})"
        if isinstance(e, VecStore):
            raise FormalUnsupported("Vec storage in formal scope")
        raise AssertionError(f"encode: {e!r}")

    def bool_term(self, e: Expr, k: int) -> str:
        """SMT Bool formula for a 1-bit condition (keeps comparisons
        word-level so the solver's branch refinement can see them)."""
        if isinstance(e, Binary):
            op = e.op
            if op in ("==", "!="):
                inner = f"(= {self.term(e.lhs, k)} {self.term(e.rhs, k)})"
                return inner if op == "==" else f"(not {inner})"
            if op in ("<", "<=", ">", ">="):
                signed = isinstance(e.lhs.ty, SInt)
                names = {"<": "bvslt" if signed else "bvult",
                         "<=": "bvsle" if signed else "bvule",
                         ">": "bvsgt" if signed else "bvugt",
                         ">=": "bvsge" if signed else "bvuge"}
                return f"({names[op]} {self.term(e.lhs, k)} {self.term(e.rhs, k)})"
            if op == "&&":
                return f"(and {self.bool_term(e.lhs, k)} {self.bool_term(e.rhs, k)})"
            if op == "||":
                return f"(or {self.bool_term(e.lhs, k)} {self.bool_term(e.rhs, k)})"
            if op == "implies":
                return f"(=> {self.bool_term(e.lhs, k)} {self.bool_term(e.rhs, k)})"
        if isinstance(e, Unary) and e.op == "!":
            return f"(not {self.bool_term(e.operand, k)})"
        if isinstance(e, BoolLit):
            return "true" if e.value else "false"
        return f"(= {self.term(e, k)} #b1)"

    def _binary(self, e: Binary, k: int) -> str:
        op = e.op
        a = self.term(e.lhs, k)
        b = self.term(e.rhs, k)
        signed = isinstance(e.lhs.ty, SInt)
        if op in ("&&",):
            return f"(bvand {a} {b})"
        if op == "||":
            return f"(bvor {a} {b})"
        if op == "implies":
            return f"(bvor (bvnot {a}) {b})"
        if op in ("==", "!="):
            inner = f"(= {a} {b})"
            if op == "!=":
                inner = f"(not {inner})"
            return f"(ite {inner} #b1 #b0)"
        if op in ("<", "<=", ">", ">="):
            names = {"<": "bvslt" if signed else "bvult",
                     "<=": "bvsle" if signed else "bvule",
                     ">": "bvsgt" if signed else "bvugt",
                     ">=": "bvsge" if signed else "bvuge"}
            return f"(ite ({names[op]} {a} {b}) #b1 #b0)"
        if op in ("+%", "-%", "*%"):
            w = _width(e.ty)
            ext = "sign_extend" if isinstance(e.ty, SInt) else "zero_extend"
            lw, rw = _width(e.lhs.ty), _width(e.rhs.ty)
            if lw < w:
                a = f"((_ {ext} {w - lw}) {a})"
            if rw < w:
                b = f"((_ {ext} {w - rw}) {b})"
            name = {"+%": "bvadd", "-%": "bvsub", "*%": "bvmul"}[op]
            return f"({name} {a} {b})"
        names = {
            "+": "bvadd", "-": "bvsub", "*": "bvmul",
            "/": "bvsdiv" if signed else "bvudiv",
            "%": "bvsrem" if signed else "bvurem",
            "<<": "bvshl",
            ">>": "bvashr" if signed else "bvlshr",
            "&": "bvand", "|": "bvor", "^": "bvxor",
        }
        return f"({names[op]} {a} {b})"


def encode_bmc(core: CoreModule, prop: CoreProperty, bound: int) -> SmtScript:
    """One self-contained script checking `prop` over cycles 0..bound."""
    formal_scope_check(core)
    enc = _Encoder(core, bound)
    clock_names = {name for name, _ in core.clock_ports()}
    inputs = [p.name for p in core.ports
              if p.direction == "in" and p.name not in clock_names
              and not isinstance(p.ty, Reset)]
    resets = [p.name for p in core.ports if isinstance(p.ty, Reset)]
    reset_types = {p.name: p.ty for p in core.ports if isinstance(p.ty, Reset)}
    defined = [(n, d) for n, d in core.nets.items()
               if d.expr is not None]
    state_names = list(core.regs)

    for k in range(bound + 1):
        enc.lines.append(f"; cycle {k}")
        for name in inputs:
            ty = next(p.ty for p in core.ports if p.name == name)
            enc.declare(name, k, _width(ty))
        for name in resets:
            v = enc.declare(name, k, 1)
            inactive = "#b0" if reset_types[name].polarity == "High" else "#b1"
            enc.lines.append(f"(assert (= {v} {inactive}))")
        for name, reg in core.regs.items():
            enc.declare(name, k, _width(reg.ty))
        for name, net in defined:
            enc.declare(name, k, _width(net.ty))
        for name, net in defined:
            enc.lines.append(f"(assert (= {enc.var(name, k)} {enc.term(net.expr, k)}))")

    # cycle 0 = reset state; reset-none registers start at the 2-state 0
    for name, reg in core.regs.items():
        if reg.reset_value is not None:
            from ..sim.image import const_value_of
            init = const_value_of(reg.reset_value, reg.ty)
        else:
            init = 0
        enc.lines.append(f"(assert (= {enc.var(name, 0)} {_bv(init, _width(reg.ty))}))")
    # transitions (reset inactive for every cycle of the unrolling)
    for k in range(bound):
        for name, reg in core.regs.items():
            enc.lines.append(
                f"(assert (= {enc.var(name, k + 1)} {enc.term(reg.next, k)}))")

    prop_var: dict[int, str] = {}
    for k in range(bound + 1):
        v = f"__prop__{k}"
        enc.lines.append(f"(declare-const {v} (_ BitVec 1))")
        enc.lines.append(f"(assert (= {v} {enc.term(prop.expr, k)}))")
        enc.decode[v] = ("__prop__", k)
        enc.all_vars.append(v)
        prop_var[k] = v
    if prop.kind == "assert":
        goal = " ".join(f"(= {prop_var[k]} #b0)" for k in range(bound + 1))
    else:
        goal = " ".join(f"(= {prop_var[k]} #b1)" for k in range(bound + 1))
    enc.lines.append(f"; {prop.kind} {prop.name}")
    enc.lines.append(f"(assert (or {goal}))")
    enc.lines.append("(check-sat)")
    return SmtScript("\n".join(enc.lines) + "\n", prop, bound, enc.decode,
                     enc.all_vars, inputs, state_names, prop_var)
