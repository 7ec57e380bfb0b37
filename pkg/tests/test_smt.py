import sys

import pytest

from ringsynth.minismt import SmtError
from ringsynth.smt import (
    Declaration, check_model, default_solver_command, emit_smtlib,
    parse_model, run_solver,
)


def decl_delta(bound=2, letters=2):
    return Declaration(
        "delta", ("Int", "Int"), "Int",
        domain=tuple((q, l) for q in range(bound) for l in range(letters)),
        int_range=(0, bound - 1))


class TestEmission:
    def test_empty_constraints_sat(self):
        script = emit_smtlib([], [decl_delta()])
        assert "(set-logic QF_UFLIA)" in script
        assert script.index("(check-sat)") < script.index("(get-model)")
        assert run_solver(script).kind == "sat"

    def test_contradiction_unsat(self):
        d = Declaration("p", (), "Bool", domain=((),))
        script = emit_smtlib(["p", ["not", "p"]], [d])
        assert run_solver(script).kind == "unsat"

    def test_emission_deterministic(self):
        decls = [decl_delta(), Declaration("rho", ("Int", "Int"), "Int",
                                           domain=((0, 0),), int_range=(-1, 5))]
        asserts = [["<=", 0, ["delta", 0, 0]], [">", ["rho", 0, 0], 0]]
        assert emit_smtlib(asserts, decls) == emit_smtlib(asserts, decls)

    def test_round_trips_through_own_solver(self):
        # the bundled solver's parser accepts every emitted script
        decls = [decl_delta()]
        asserts = []
        for q, l in decls[0].domain:
            asserts.append(["and", ["<=", 0, ["delta", q, l]],
                            ["<=", ["delta", q, l], 1]])
        asserts.append(["=", ["delta", 0, 0], 1])
        result = run_solver(emit_smtlib(asserts, decls))
        assert result.kind == "sat"


class TestRunSolver:
    def test_timeout_outcome(self):
        script = "(set-logic QF_UFLIA)(check-sat)"
        slow = [sys.executable, "-c", "import time; time.sleep(30)"]
        result = run_solver(script, command=slow, timeout=0.5)
        assert result.kind == "timeout"

    def test_killed_solver_is_error(self):
        dying = [sys.executable, "-c", "import sys; sys.exit(9)"]
        result = run_solver("(check-sat)", command=dying)
        assert result.kind == "error"
        assert result.model_text == ""

    def test_garbage_output_is_error(self):
        noisy = [sys.executable, "-c", "print('flurble')"]
        assert run_solver("(check-sat)", command=noisy).kind == "error"

    def test_unknown_passthrough(self):
        shrug = [sys.executable, "-c", "print('unknown')"]
        assert run_solver("(check-sat)", command=shrug).kind == "unknown"

    def test_string_command_is_split(self):
        result = run_solver("(check-sat)",
                            command=f"{sys.executable} -m ringsynth.minismt")
        assert result.kind == "sat"


class TestParseModel:
    MODEL = """
(
  (define-fun delta ((x!0 Int) (x!1 Int)) Int
    (ite (and (= x!0 0) (= x!1 0)) 1 0))
  (define-fun out_g ((x!0 Int)) Bool (= x!0 1))
)
"""

    def test_ite_chain_reconstruction(self):
        decls = [decl_delta(),
                 Declaration("out_g", ("Int",), "Bool", domain=((0,), (1,)))]
        values = parse_model(self.MODEL, decls)
        assert values[("delta", 0, 0)] == 1
        assert values[("delta", 1, 1)] == 0
        assert values[("out_g", 1)] is True
        assert values[("out_g", 0)] is False

    def test_default_else_fills_domain(self):
        model = "((define-fun f ((x!0 Int)) Int 3))"
        decls = [Declaration("f", ("Int",), "Int",
                             domain=((0,), (1,), (2,)), int_range=(0, 5))]
        values = parse_model(model, decls)
        assert all(values[("f", k)] == 3 for k in range(3))

    def test_missing_function_rejected(self):
        with pytest.raises(SmtError, match="lacks a definition"):
            parse_model("((define-fun g () Int 0))",
                        [Declaration("f", (), "Int", int_range=(0, 1))])

    def test_range_violation_rejected(self):
        model = "((define-fun f () Int 7))"
        with pytest.raises(SmtError, match="outside range"):
            parse_model(model, [Declaration("f", (), "Int", int_range=(0, 5))])

    def test_model_wrapper_accepted(self):
        model = "(model (define-fun f () Int 2))"
        values = parse_model(model, [Declaration("f", (), "Int", int_range=(0, 5))])
        assert values[("f",)] == 2

    def test_reevaluation_round_trip(self):
        # solve a real script, parse the model, re-check every assertion
        decls = [decl_delta(bound=3, letters=2)]
        asserts = []
        for q, l in decls[0].domain:
            asserts.append(["and", ["<=", 0, ["delta", q, l]],
                            ["<=", ["delta", q, l], 2]])
        asserts.append(["=", ["delta", 0, 0], 2])
        asserts.append(["<", ["delta", 1, 0], ["delta", 0, 0]])
        script = emit_smtlib(asserts, decls)
        result = run_solver(script)
        assert result.kind == "sat"
        values = parse_model(result.model_text, decls)
        assert check_model(asserts, values) == []

    def test_check_model_flags_violations(self):
        values = {("p",): False}
        assert check_model(["p"], values) == [0]
