"""Sound unsigned-interval analysis over the term graph.

Used as a word-level preprocessing step: when the abstract value of every
asserted constraint excludes `false`, the formula is satisfied by any
assignment; when some constraint's abstract value excludes `true`, the
formula is unsat. Branch-refined ite evaluation (narrowing a subterm's
interval under `=`, `bvult`, ... conditions) is what lets long wrapping
counter unrollings prove without bit-blasting.
"""

from __future__ import annotations

from .terms import BOOL_SORT, Term

Interval = tuple[int, int]


def full(width: int) -> Interval:
    if width == BOOL_SORT:
        return (0, 1)
    return (0, (1 << width) - 1)


class IntervalEngine:
    def __init__(self) -> None:
        self.cache: dict[int, Interval] = {}

    def eval(self, t: Term, refine: dict[int, Interval] | None = None) -> Interval:
        if refine:
            r = refine.get(id(t))
            if r is not None:
                return r
            if t.op == "var":
                # refinement narrows specific nodes only; other vars keep
                # their cached global interval (sound, and keeps refined
                # evaluation local to the current tree)
                return self.eval(t, None)
            return self._compute(t, refine)
        hit = self.cache.get(id(t))
        if hit is not None:
            return hit
        out = self._compute(t, None)
        self.cache[id(t)] = out
        return out

    def _compute(self, t: Term, refine) -> Interval:
        op = t.op
        if op == "const":
            return (t.value, t.value)
        if op == "var":
            if t.definition is not None:
                return self.eval(t.definition, refine)
            return full(t.width)
        if op == "ite":
            c, a, b = t.args
            ci = self.eval(c, refine)
            if ci == (1, 1):
                return self.eval(a, refine)
            if ci == (0, 0):
                return self.eval(b, refine)
            # None from _refine_from = branch provably unreachable
            then_ref = _refine_from(c, True, self, refine)
            else_ref = _refine_from(c, False, self, refine)
            ai = None if then_ref is None else self.eval(a, _merge(refine, then_ref))
            bi = None if else_ref is None else self.eval(b, _merge(refine, else_ref))
            if ai is None and bi is None:
                return full(t.width)
            if ai is None:
                return bi
            if bi is None:
                return ai
            return (min(ai[0], bi[0]), max(ai[1], bi[1]))
        args = [self.eval(a, refine) for a in t.args]
        mask = (1 << t.width) - 1 if t.width else 1
        if op == "bvadd":
            (a, b), (c, d) = args
            if b + d <= mask:
                return (a + c, b + d)
            return full(t.width)
        if op == "bvsub":
            (a, b), (c, d) = args
            if a - d >= 0:
                return (a - d, b - c)
            return full(t.width)
        if op == "bvmul":
            (a, b), (c, d) = args
            if b * d <= mask:
                return (a * c, b * d)
            return full(t.width)
        if op == "bvand":
            (_, b), (_, d) = args
            return (0, min(b, d))
        if op == "bvor":
            (a, b), (c, d) = args
            hi = (1 << max(b.bit_length(), d.bit_length())) - 1
            return (max(a, c), min(hi, mask))
        if op == "bvxor":
            (_, b), (_, d) = args
            hi = (1 << max(b.bit_length(), d.bit_length())) - 1
            return (0, min(hi, mask))
        if op == "bvnot":
            (a, b) = args[0]
            return (mask - b, mask - a)
        if op == "bvshl":
            (a, b), (c, d) = args
            if c == d and (b << d) <= mask:
                return (a << c, b << d)
            return full(t.width)
        if op in ("bvlshr", "bvashr"):
            (a, b), (c, d) = args
            if op == "bvlshr":
                if c == d:
                    return (a >> c, b >> c)
                return (0, b)
            return full(t.width)
        if op == "extract":
            hi, lo = t.value >> 16, t.value & 0xFFFF
            (a, b) = args[0]
            if lo == 0 and b <= mask:
                return (a, b)
            return full(t.width)
        if op == "zero_extend":
            return args[0]
        if op == "sign_extend":
            src = t.args[0]
            (a, b) = args[0]
            if b < (1 << (src.width - 1)):
                return (a, b)  # sign bit provably clear
            return full(t.width)
        if op == "concat":
            (a, b), (c, d) = args
            low_w = t.args[1].width
            return (
                (a << low_w) + c,
                (b << low_w) + d,
            )
        if op == "=":
            (a, b), (c, d) = args
            if b < c or d < a:
                return (0, 0)
            if a == b == c == d:
                return (1, 1)
            return (0, 1)
        if op in ("bvult", "bvule", "bvugt", "bvuge"):
            (a, b), (c, d) = args
            if op == "bvult":
                if b < c:
                    return (1, 1)
                if a >= d:
                    return (0, 0)
            elif op == "bvule":
                if b <= c:
                    return (1, 1)
                if a > d:
                    return (0, 0)
            elif op == "bvugt":
                if a > d:
                    return (1, 1)
                if b <= c:
                    return (0, 0)
            else:
                if a >= d:
                    return (1, 1)
                if b < c:
                    return (0, 0)
            return (0, 1)
        if op == "not":
            (a, b) = args[0]
            return (1 - b, 1 - a)
        if op == "and":
            hi = min(b for (_, b) in args)
            lo = 1 if all(a == 1 for (a, _) in args) else 0
            return (lo, hi)
        if op == "or":
            hi = max(b for (_, b) in args)
            lo = 1 if any(a == 1 for (a, _) in args) else 0
            return (lo, hi)
        if op == "xor":
            (a, b), (c, d) = args
            if a == b and c == d:
                v = a ^ c
                return (v, v)
            return (0, 1)
        if op == "=>":
            (a, b), (c, d) = args
            if b == 0 or c == 1:
                return (1, 1)
            if a == 1 and d == 0:
                return (0, 0)
            return (0, 1)
        # bvudiv/bvurem/bvsdiv/bvsrem/signed compares: conservative
        return full(t.width)


def _merge(base: dict[int, Interval] | None, extra: dict[int, Interval]) -> dict:
    if not base:
        return extra
    out = dict(base)
    out.update(extra)
    return out


def _refine_from(cond: Term, truth: bool, eng: IntervalEngine,
                 refine) -> dict[int, Interval] | None:
    """Interval narrowing implied by `cond == truth`; None = branch
    provably unreachable."""
    out: dict[int, Interval] = {}
    if cond.op == "not":
        return _refine_from(cond.args[0], not truth, eng, refine)
    if (cond.op == "and" and truth) or (cond.op == "or" and not truth):
        for sub in cond.args:  # every conjunct holds / every disjunct fails
            r = _refine_from(sub, truth, eng, refine)
            if r is None:
                return None
            out.update(r)
        return out
    if cond.op not in ("=", "bvult", "bvule", "bvugt", "bvuge"):
        return out
    a, b = cond.args
    if a.op == "const" and b.op != "const":
        flip = {"bvult": "bvugt", "bvule": "bvuge", "bvugt": "bvult",
                "bvuge": "bvule", "=": "="}
        cond = Term(flip[cond.op], BOOL_SORT, (b, a))
        a, b = cond.args
    if b.op != "const":
        return out
    k = b.value
    lo, hi = eng.eval(a, refine)
    op = cond.op
    if op == "=":
        if truth:
            if k < lo or k > hi:
                return None
            out[id(a)] = (k, k)
        else:
            if lo == hi == k:
                return None
            if lo == k:
                out[id(a)] = (lo + 1, hi)
            elif hi == k:
                out[id(a)] = (lo, hi - 1)
        return out
    # normalize to an inclusive bound [nlo, nhi] implied by the comparison
    if op == "bvule":
        nlo, nhi = (lo, k) if truth else (k + 1, hi)
    elif op == "bvult":
        nlo, nhi = (lo, k - 1) if truth else (k, hi)
    elif op == "bvuge":
        nlo, nhi = (k, hi) if truth else (lo, k - 1)
    else:  # bvugt
        nlo, nhi = (k + 1, hi) if truth else (lo, k)
    bound = (max(lo, nlo), min(hi, nhi))
    if bound[0] > bound[1]:
        return None
    out[id(a)] = bound
    return out
