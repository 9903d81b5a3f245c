"""The bundled SMT solver: SAT core, intervals vs brute force, parser,
and end-to-end sat/unsat answers with models."""

import random

from archc.smt.cdcl import SatSolver
from archc.smt.intervals import IntervalEngine
from archc.smt.sexpr import parse_all, parse_bv_literal
from archc.smt.solve import Session
from archc.smt.terms import TermBuilder


class TestSexpr:
    def test_nesting_and_comments(self):
        forms = parse_all("; hello\n(a (b c) #b101)")
        assert forms == [["a", ["b", "c"], "#b101"]]

    def test_bv_literals(self):
        assert parse_bv_literal("#b1010") == (10, 4)
        assert parse_bv_literal("#xff") == (255, 8)
        assert parse_bv_literal(["_", "bv7", "4"]) == (7, 4)
        assert parse_bv_literal("foo") is None


class TestCdcl:
    def test_simple_sat(self):
        s = SatSolver()
        a, b = s.new_var(), s.new_var()
        s.add_clause([a, b])
        s.add_clause([-a, b])
        assert s.solve() == "sat"
        assert s.model_value(b)

    def test_simple_unsat(self):
        s = SatSolver()
        a = s.new_var()
        s.add_clause([a])
        s.add_clause([-a])
        assert s.solve() == "unsat"

    def test_pigeonhole_3_into_2(self):
        # 3 pigeons, 2 holes: classic small unsat needing real search
        s = SatSolver()
        v = {}
        for p in range(3):
            for h in range(2):
                v[p, h] = s.new_var()
        for p in range(3):
            s.add_clause([v[p, 0], v[p, 1]])
        for h in range(2):
            for p1 in range(3):
                for p2 in range(p1 + 1, 3):
                    s.add_clause([-v[p1, h], -v[p2, h]])
        assert s.solve() == "unsat"

    def test_random_3sat_agrees_with_brute_force(self):
        rng = random.Random(5)
        for trial in range(60):
            n = rng.randint(3, 7)
            m = rng.randint(3, 22)
            clauses = []
            for _ in range(m):
                vs = rng.sample(range(1, n + 1), 3)
                clauses.append([v if rng.random() < 0.5 else -v for v in vs])
            want = any(
                all(any((lit > 0) == bool((assign >> (abs(lit) - 1)) & 1)
                        for lit in cl) for cl in clauses)
                for assign in range(1 << n))
            s = SatSolver()
            for _ in range(n):
                s.new_var()
            for cl in clauses:
                s.add_clause(list(cl))
            got = s.solve()
            assert got == ("sat" if want else "unsat"), (trial, clauses)


class TestIntervals:
    def test_random_terms_sound_vs_exhaustive(self):
        """Interval evaluation must contain every concrete value (soundness
        checked exhaustively over tiny widths)."""
        rng = random.Random(77)
        for trial in range(150):
            b = TermBuilder()
            x = b.declare("x", 3)
            y = b.declare("y", 3)

            def gen(depth):
                if depth == 0:
                    if rng.random() < 0.5:
                        return rng.choice([x, y])
                    return b.const(rng.randrange(8), 3)
                op = rng.choice(["bvadd", "bvsub", "bvand", "bvor", "bvxor",
                                 "bvnot", "ite"])
                if op == "bvnot":
                    from archc.smt.terms import Term
                    return Term("bvnot", 3, (gen(depth - 1),))
                from archc.smt.terms import Term
                if op == "ite":
                    cond = Term("bvule", 0, (gen(depth - 1), gen(depth - 1)))
                    return Term("ite", 3, (cond, gen(depth - 1), gen(depth - 1)))
                return Term(op, 3, (gen(depth - 1), gen(depth - 1)))

            t = gen(3)
            eng = IntervalEngine()
            lo, hi = eng.eval(t)

            def concrete(node, vx, vy):
                if node.op == "var":
                    return vx if node.name == "x" else vy
                if node.op == "const":
                    return node.value
                a = [concrete(c, vx, vy) for c in node.args]
                return {
                    "bvadd": lambda: (a[0] + a[1]) & 7,
                    "bvsub": lambda: (a[0] - a[1]) & 7,
                    "bvand": lambda: a[0] & a[1],
                    "bvor": lambda: a[0] | a[1],
                    "bvxor": lambda: a[0] ^ a[1],
                    "bvnot": lambda: (~a[0]) & 7,
                    "bvule": lambda: 1 if a[0] <= a[1] else 0,
                    "ite": lambda: a[1] if a[0] else a[2],
                }[node.op]()

            for vx in range(8):
                for vy in range(8):
                    v = concrete(t, vx, vy)
                    assert lo <= v <= hi, (trial, vx, vy, v, (lo, hi))


class TestSession:
    def test_definitional_chain_and_model(self):
        out = Session().run("""
(set-logic QF_BV)
(declare-const a (_ BitVec 8))
(declare-const b (_ BitVec 8))
(assert (= b (bvadd a #x01)))
(assert (= b #x10))
(check-sat)
(get-value (a b))
""")
        lines = out.splitlines()
        assert lines[0] == "sat"
        assert "(a #b00001111)" in out

    def test_unsat_no_model(self):
        out = Session().run("""
(declare-const a (_ BitVec 4))
(assert (bvult a #x2))
(assert (bvugt a #x8))
(check-sat)
(get-value (a))
""")
        assert out.splitlines()[0] == "unsat"
        assert "model is not available" in out

    def test_bool_sort(self):
        out = Session().run("""
(declare-const p Bool)
(declare-const q Bool)
(assert (= p true))
(assert (or (not p) q))
(check-sat)
(get-value (p q))
""")
        assert out.splitlines()[0] == "sat"
        assert "(q #b1)" in out

    def test_division_semantics(self):
        out = Session().run("""
(declare-const a (_ BitVec 8))
(declare-const q (_ BitVec 8))
(assert (= a #x64))
(assert (= q (bvudiv a #x07)))
(check-sat)
(get-value (q))
""")
        assert "sat" in out
        assert "(q #b00001110)" in out  # 100 / 7 = 14

    def test_shift_beyond_width(self):
        out = Session().run("""
(declare-const a (_ BitVec 4))
(declare-const r (_ BitVec 4))
(assert (= a #xf))
(assert (= r (bvshl a #x8)))
(check-sat)
(get-value (r))
""")
        assert "(r #b0000)" in out

    def test_get_model_define_funs(self):
        out = Session().run("""
(declare-const a (_ BitVec 4))
(assert (= a #x5))
(check-sat)
(get-model)
""")
        assert "(define-fun a () (_ BitVec 4) #b0101)" in out
