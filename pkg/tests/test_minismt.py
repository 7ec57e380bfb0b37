import itertools
import random
import subprocess
import sys

import pytest

from ringsynth.minismt import Sat, SmtError, parse_sexprs, solve_script


class TestSatCore:
    def test_trivial(self):
        s = Sat()
        a = s.new_var()
        s.add_clause([a])
        assert s.solve()[a] is True

    def test_unsat_pair(self):
        s = Sat()
        a = s.new_var()
        s.add_clause([a])
        s.add_clause([-a])
        assert s.solve() is None

    def test_random_against_bruteforce(self):
        rng = random.Random(99)
        for _ in range(300):
            n_vars = rng.randint(1, 6)
            n_clauses = rng.randint(1, 14)
            clauses = []
            for _ in range(n_clauses):
                width = rng.randint(1, 3)
                clause = [rng.choice([1, -1]) * rng.randint(1, n_vars)
                          for _ in range(width)]
                clauses.append(clause)
            expected = any(
                all(any((lit > 0) == bits[abs(lit) - 1] for lit in cl)
                    for cl in clauses)
                for bits in itertools.product([False, True], repeat=n_vars))
            s = Sat()
            for _ in range(n_vars):
                s.new_var()
            ok = True
            for cl in clauses:
                ok = s.add_clause(cl) and ok
            model = s.solve() if ok else None
            assert (model is not None) == expected
            if model is not None:
                for cl in clauses:
                    assert any((lit > 0) == model[abs(lit)] for lit in cl)

    def test_theory_lemmas_respected(self):
        s = Sat()
        a, b = s.new_var(), s.new_var()
        s.add_clause([a, b])
        calls = []

        def theory(model):
            calls.append(dict(model))
            if model[a]:
                return [[-a]]
            return []

        model = s.solve(theory)
        assert model[a] is False and model[b] is True


class TestScripts:
    def test_empty_script_is_sat(self):
        out = solve_script("(set-logic QF_UFLIA)(check-sat)")
        assert out.status == "sat"

    def test_bool_consts(self):
        assert solve_script("(declare-const p Bool)(assert p)(check-sat)").status == "sat"
        assert solve_script(
            "(declare-const p Bool)(assert p)(assert (not p))(check-sat)"
        ).status == "unsat"

    def test_int_ranges(self):
        script = """
(declare-fun x () Int)
(assert (and (<= 0 x) (<= x 3)))
(assert (> x 2))
(check-sat)
(get-model)
"""
        out = solve_script(script)
        assert out.status == "sat"
        assert "(define-fun x () Int 3)" in out.model_text

    def test_int_conflict(self):
        script = """
(declare-fun x () Int)
(assert (and (<= 0 x) (<= x 3)))
(assert (> x 5))
(check-sat)
"""
        assert solve_script(script).status == "unsat"

    def test_uninterpreted_function_instances(self):
        script = """
(declare-fun f (Int) Int)
(assert (and (<= 0 (f 0)) (<= (f 0) 2)))
(assert (and (<= 0 (f 1)) (<= (f 1) 2)))
(assert (< (f 0) (f 1)))
(check-sat)
(get-model)
"""
        out = solve_script(script)
        assert out.status == "sat"
        assert "define-fun f" in out.model_text

    def test_nested_application(self):
        script = """
(declare-fun d (Int) Int)
(declare-fun r (Int) Int)
(assert (and (<= 0 (d 0)) (<= (d 0) 1)))
(assert (and (<= 0 (r 0)) (<= (r 0) 5)))
(assert (and (<= 0 (r 1)) (<= (r 1) 5)))
(assert (= (r 0) 4))
(assert (= (r 1) 1))
(assert (> (r (d 0)) 3))
(check-sat)
(get-model)
"""
        out = solve_script(script)
        assert out.status == "sat"
        assert "(define-fun d ((x!0 Int)) Int 0)" in out.model_text

    def test_nested_bool_application(self):
        script = """
(declare-fun d (Int) Int)
(declare-fun g (Int) Bool)
(assert (and (<= 0 (d 0)) (<= (d 0) 1)))
(assert (g 1))
(assert (not (g 0)))
(assert (g (d 0)))
(check-sat)
(get-model)
"""
        out = solve_script(script)
        assert out.status == "sat"
        assert "(define-fun d ((x!0 Int)) Int 1)" in out.model_text

    def test_implication_chain(self):
        script = """
(declare-const p Bool)
(declare-const q Bool)
(assert (=> p q))
(assert p)
(assert (not q))
(check-sat)
"""
        assert solve_script(script).status == "unsat"

    def test_without_range_nested_is_error(self):
        script = """
(declare-fun d (Int) Int)
(declare-fun r (Int) Int)
(assert (> (r (d 0)) 3))
(check-sat)
"""
        with pytest.raises(SmtError, match="finite range"):
            solve_script(script)

    def test_random_finite_domain_against_bruteforce(self):
        rng = random.Random(7)
        for _ in range(120):
            hi = rng.randint(1, 3)
            n_funcs = 2
            points = [(f, p) for f in range(n_funcs) for p in range(2)]
            lines = []
            for f in range(n_funcs):
                lines.append(f"(declare-fun f{f} (Int) Int)")
            for f, p in points:
                lines.append(f"(assert (and (<= 0 (f{f} {p})) (<= (f{f} {p}) {hi})))")
            cons = []
            for _ in range(rng.randint(1, 5)):
                (f1, p1), (f2, p2) = rng.sample(points, 2)
                op = rng.choice(["<", "<=", "=", ">"])
                cons.append(((f1, p1), op, (f2, p2)))
                lines.append(f"(assert ({op} (f{f1} {p1}) (f{f2} {p2})))")
            lines.append("(check-sat)")
            script = "\n".join(lines)

            def check(vals):
                for (a, op, b) in cons:
                    x, y = vals[a], vals[b]
                    if op == "<" and not x < y:
                        return False
                    if op == "<=" and not x <= y:
                        return False
                    if op == "=" and not x == y:
                        return False
                    if op == ">" and not x > y:
                        return False
                return True

            expected = any(
                check(dict(zip(points, combo)))
                for combo in itertools.product(range(hi + 1), repeat=len(points)))
            got = solve_script(script).status
            assert got == ("sat" if expected else "unsat"), script


class TestCli:
    def test_stdin_protocol(self):
        proc = subprocess.run(
            [sys.executable, "-m", "ringsynth.minismt"],
            input="(declare-const p Bool)(assert p)(check-sat)(get-model)",
            capture_output=True, text=True, timeout=60)
        assert proc.returncode == 0
        lines = proc.stdout.strip().splitlines()
        assert lines[0] == "sat"
        assert "(define-fun p () Bool true)" in proc.stdout

    def test_parse_error_reported(self):
        proc = subprocess.run(
            [sys.executable, "-m", "ringsynth.minismt"],
            input="(assert (nonsense))(check-sat)",
            capture_output=True, text=True, timeout=60)
        assert proc.returncode == 2
        assert "error" in proc.stdout


class TestSexpr:
    def test_nesting(self):
        assert parse_sexprs("(a (b c) 3)") == [["a", ["b", "c"], "3"]]

    def test_comments_and_negatives(self):
        got = parse_sexprs("; hi\n(x (- 2))")
        assert got == [["x", ["-", "2"]]]

    def test_unbalanced(self):
        with pytest.raises(SmtError):
            parse_sexprs("(a (b)")
