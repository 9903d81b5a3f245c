"""archc-smt: a standalone SMT-LIB2 (QF_BV) solver.

Pipeline: definitional substitution -> branch-refined interval analysis
(decides most BMC unrollings word-level) -> Tseitin bit-blasting onto a
CDCL SAT core. Supports (get-value ...) and (get-model) after a sat
answer. Reads a file argument or stdin.
"""

from __future__ import annotations

import sys

from .bitblast import BitBlaster
from .intervals import IntervalEngine
from .sexpr import SmtParseError, parse_all
from .terms import BOOL_SORT, Term, TermBuilder


class Session:
    def __init__(self) -> None:
        self.builder = TermBuilder()
        self.status: str | None = None
        self.blaster: BitBlaster | None = None
        self.trivial_model = False
        self.def_order: list[Term] = []
        self.out: list[str] = []

    def run(self, text: str) -> str:
        try:
            commands = parse_all(text)
        except SmtParseError as e:
            return f"(error \"{e}\")"
        for cmd in commands:
            if not isinstance(cmd, list) or not cmd:
                continue
            head = cmd[0]
            if head in ("set-logic", "set-option", "set-info", "exit", "push", "pop"):
                continue
            if head in ("declare-const", "declare-fun"):
                name = cmd[1]
                sort = cmd[-1]
                if head == "declare-fun" and cmd[2] != []:
                    self.out.append("(error \"only 0-ary declare-fun supported\")")
                    continue
                width = _sort_width(sort)
                if width is None:
                    self.out.append(f"(error \"unsupported sort {sort}\")")
                    continue
                name = name[1:-1] if name.startswith("|") else name
                self.builder.declare(name, width)
            elif head == "assert":
                try:
                    self.builder.assertions.append(self.builder.build(cmd[1]))
                except SmtParseError as e:
                    self.out.append(f"(error \"{e}\")")
                    self.status = "unknown"
            elif head == "check-sat":
                self.out.append(self.check_sat())
            elif head == "get-value":
                self.out.append(self.get_value(cmd[1]))
            elif head == "get-model":
                self.out.append(self.get_model())
        return "\n".join(self.out)

    def check_sat(self) -> str:
        residual, def_order = self.builder.finish()
        self.def_order = def_order
        engine = IntervalEngine()
        for v in def_order:  # bottom-up so deep definition chains never recurse
            engine.cache[id(v)] = engine.eval(v.definition)
        all_true = True
        for c in residual:
            lo, hi = engine.eval(c)
            if hi == 0:
                self.status = "unsat"
                return "unsat"
            if lo != 1:
                all_true = False
        if all_true:
            self.status = "sat"
            self.trivial_model = True
            return "sat"
        blaster = BitBlaster()
        for v in def_order:
            blaster.cache[id(v)] = blaster.bits(v.definition)
        for c in residual:
            blaster.assert_true(c)
        result = blaster.sat.solve()
        self.status = result
        self.blaster = blaster
        return result

    def _value_of(self, name: str) -> tuple[int, int] | None:
        t = self.builder.vars.get(name)
        if t is None:
            return None
        width = t.width if t.width != BOOL_SORT else 1
        if self.trivial_model:
            if not hasattr(self, "_concrete_cache"):
                self._concrete_cache = {}
                for v in self.def_order:  # bottom-up, avoids deep recursion
                    self._concrete_cache[id(v)] = self._eval_concrete(
                        v.definition, self._concrete_cache)
            return self._eval_concrete(t, self._concrete_cache), width
        assert self.blaster is not None
        return self.blaster.value_of(t), width

    def _eval_concrete(self, t: Term, cache: dict[int, int]) -> int:
        """Evaluate under the trivial model (free vars = 0)."""
        hit = cache.get(id(t))
        if hit is not None:
            return hit
        v = self._eval_concrete_inner(t, cache)
        cache[id(t)] = v
        return v

    def _eval_concrete_inner(self, t: Term, cache) -> int:
        mask = (1 << t.width) - 1 if t.width else 1
        op = t.op
        if op == "const":
            return t.value
        if op == "var":
            if t.definition is not None:
                return self._eval_concrete(t.definition, cache)
            return 0
        a = [self._eval_concrete(x, cache) for x in t.args]
        if op == "ite":
            return a[1] if a[0] else a[2]
        if op == "=":
            return 1 if a[0] == a[1] else 0
        if op == "not":
            return 1 - a[0]
        if op == "and":
            return 1 if all(a) else 0
        if op == "or":
            return 1 if any(a) else 0
        if op == "xor":
            return a[0] ^ a[1]
        if op == "=>":
            return 1 if (not a[0] or a[1]) else 0
        if op == "bvadd":
            return (a[0] + a[1]) & mask
        if op == "bvsub":
            return (a[0] - a[1]) & mask
        if op == "bvmul":
            return (a[0] * a[1]) & mask
        if op == "bvand":
            return a[0] & a[1]
        if op == "bvor":
            return a[0] | a[1]
        if op == "bvxor":
            return a[0] ^ a[1]
        if op == "bvnot":
            return (~a[0]) & mask
        if op == "bvneg":
            return (-a[0]) & mask
        if op == "bvshl":
            return (a[0] << a[1]) & mask if a[1] <= t.width else 0
        if op == "bvlshr":
            return a[0] >> a[1] if a[1] <= t.width else 0
        if op == "bvashr":
            w = t.width
            x = a[0]
            s = x >> (w - 1)
            full = (x - (s << w))
            return (full >> min(a[1], w)) & mask
        if op == "bvult":
            return 1 if a[0] < a[1] else 0
        if op == "bvule":
            return 1 if a[0] <= a[1] else 0
        if op == "bvugt":
            return 1 if a[0] > a[1] else 0
        if op == "bvuge":
            return 1 if a[0] >= a[1] else 0
        if op in ("bvslt", "bvsle", "bvsgt", "bvsge"):
            w = t.args[0].width
            def signed(x):
                return x - (1 << w) if x >= (1 << (w - 1)) else x
            x, y = signed(a[0]), signed(a[1])
            return 1 if {"bvslt": x < y, "bvsle": x <= y,
                         "bvsgt": x > y, "bvsge": x >= y}[op] else 0
        if op == "extract":
            hi, lo = t.value >> 16, t.value & 0xFFFF
            return (a[0] >> lo) & ((1 << (hi - lo + 1)) - 1)
        if op in ("zero_extend",):
            return a[0]
        if op == "sign_extend":
            src_w = t.args[0].width
            x = a[0]
            if x >= (1 << (src_w - 1)):
                x |= (mask ^ ((1 << src_w) - 1))
            return x
        if op == "concat":
            low_w = t.args[1].width
            return (a[0] << low_w) | a[1]
        if op in ("bvudiv",):
            return mask if a[1] == 0 else a[0] // a[1]
        if op in ("bvurem",):
            return a[0] if a[1] == 0 else a[0] % a[1]
        raise AssertionError(op)

    def get_value(self, names) -> str:
        if self.status != "sat":
            return "(error \"model is not available\")"
        parts = []
        for sx in names:
            name = sx if isinstance(sx, str) else None
            if name is None:
                continue
            plain = name[1:-1] if name.startswith("|") else name
            got = self._value_of(plain)
            if got is None:
                return f"(error \"unknown constant {name}\")"
            value, width = got
            parts.append(f"({name} {_bv_text(value, width)})")
        return "(" + "\n ".join(parts) + ")"

    def get_model(self) -> str:
        if self.status != "sat":
            return "(error \"model is not available\")"
        parts = []
        for name, t in self.builder.vars.items():
            got = self._value_of(name)
            if got is None:
                continue
            value, width = got
            sort = "Bool" if t.width == BOOL_SORT else f"(_ BitVec {width})"
            body = (_bv_text(value, width) if t.width != BOOL_SORT
                    else ("true" if value else "false"))
            parts.append(f"  (define-fun {name} () {sort} {body})")
        return "(\n" + "\n".join(parts) + "\n)"


def _sort_width(sort) -> int | None:
    if sort == "Bool":
        return BOOL_SORT
    if isinstance(sort, list) and len(sort) == 3 and sort[0] == "_" \
            and sort[1] == "BitVec":
        return int(sort[2])
    return None


def _bv_text(value: int, width: int) -> str:
    return "#b" + format(value & ((1 << width) - 1), f"0{width}b")


def main(argv: list[str] | None = None) -> int:
    args = argv if argv is not None else sys.argv[1:]
    if args and args[0] not in ("-",):
        with open(args[0], "r", encoding="utf-8") as f:
            text = f.read()
    else:
        text = sys.stdin.read()
    print(Session().run(text))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
