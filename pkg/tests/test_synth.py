import random

import pytest

from ringsynth.checker import verify_spec
from ringsynth.ltl import parse_ltl, pretty
from ringsynth.pspec import IndexedSpec, QuantifiedProperty, builtin_corpus
from ringsynth.ring import RingConfig, check_wellformed
from ringsynth.synth import (
    PinnedPrefix, SynthesisError, all_constraints, build_instance,
    declarations, general_part_nba, product_has_accepting_lasso,
    synthesize_loop,
)
from ringsynth.transforms import prepare_for_synthesis


def mini_spec(guarantee_texts, inputs=("r",), outputs=("g",)):
    guarantees = tuple(
        QuantifiedProperty(f"P{k}", "forall_i", parse_ltl(text))
        for k, text in enumerate(guarantee_texts))
    return IndexedSpec(local_inputs=inputs, global_inputs=(),
                       local_outputs=outputs, guarantees=guarantees)


def synth(spec, **kw):
    return synthesize_loop(prepare_for_synthesis(spec), **kw)


class TestCoreConstraints:
    def test_never_grant_is_sat(self):
        res = synth(mini_spec(["G !g(i)"]), max_bound=2)
        assert res.status == "ok"
        assert all("g" not in res.template.labels[q]
                   for q in range(res.template.n_states))

    def test_contradictory_outputs_unsat(self):
        res = synth(mini_spec(["G g(i)", "G !g(i)"]), max_bound=4)
        assert res.status == "no_model"
        assert all(s == "unsat" for _, _, s in res.timings)

    def test_bound_must_leave_room_for_both_state_kinds(self):
        hub = prepare_for_synthesis(mini_spec(["G !g(i)"]))
        with pytest.raises(SynthesisError, match="at least 2"):
            build_instance(hub, 1)


class TestSimpleArbiter:
    MINIMAL_BOUND = 2  # regression constant, first derived by the loop

    def test_minimal_bound_frozen(self, arbiter_synthesis):
        assert arbiter_synthesis.status == "ok"
        assert arbiter_synthesis.bound == self.MINIMAL_BOUND

    def test_template_well_formed_with_condition_a(self, arbiter_template):
        assert check_wellformed(arbiter_template, with_condition_a=True) == []

    def test_verified_in_rings(self, arbiter_template):
        spec = builtin_corpus("simple_arbiter")
        for n in (2, 3):
            outcomes = verify_spec(arbiter_template,
                                   RingConfig(n, "interleaving"), spec)
            assert all(o.holds for o in outcomes)

    def test_monotone_in_the_bound(self):
        res = synth(builtin_corpus("simple_arbiter"), max_bound=3, min_bound=3)
        assert res.status == "ok" and res.bound == 3

    def test_product_recheck_clean(self, arbiter_synthesis):
        hub = prepare_for_synthesis(builtin_corpus("simple_arbiter"))
        inst = build_instance(hub, arbiter_synthesis.bound)
        assert not product_has_accepting_lasso(arbiter_synthesis.template, inst)


class TestDirectGuarantees:
    def test_current_state_beta(self):
        # grant implies token: at the idle state the grant bit must be low
        res = synth(mini_spec(["G (g(i) -> TOK(i))"]), max_bound=2)
        assert res.status == "ok"
        t = res.template
        assert "g" not in t.labels[t.initial_notoken]

    def test_next_state_beta(self):
        res = synth(mini_spec(["G (r(i) -> X !g(i))"]), max_bound=3)
        assert res.status == "ok"
        t = res.template
        for (q, letter), targets in t.delta.items():
            if "r" in letter:
                assert "g" not in t.labels[targets[0]]

    def test_alpha_premise_drops_letters(self):
        spec = IndexedSpec(
            local_inputs=("r", "h"), global_inputs=(), local_outputs=("g",),
            assumptions=(QuantifiedProperty("A", "forall_i",
                                            parse_ltl("G (h(i) -> r(i))")),),
            guarantees=(QuantifiedProperty("P", "forall_i",
                                           parse_ltl("G (g(i) -> TOK(i))")),))
        hub = prepare_for_synthesis(spec)
        inst = build_instance(hub, 2)
        for li in inst.alpha_letters:
            letter = inst.letters[li]
            assert not ("h" in letter and "r" not in letter)

    def test_burst_premise_prunes_incompatible_guarantees(self):
        hub = prepare_for_synthesis(builtin_corpus("amba_non0"))
        phase1 = parse_ltl("HLOCK && HBURST==BURST4")
        restricted = general_part_nba(hub, direct=True, extra_alpha=phase1)
        full = general_part_nba(hub, direct=True)
        assert restricted.n_states < full.n_states


class TestPinning:
    def test_full_pin_reproduces_model(self, arbiter_template):
        hub = prepare_for_synthesis(builtin_corpus("simple_arbiter"))
        pin = PinnedPrefix(arbiter_template, previous_alpha=None)
        res = synthesize_loop(hub, max_bound=2, pinned=pin)
        assert res.status == "ok"
        assert res.template == arbiter_template

    def test_alpha_false_pins_outputs_only(self, arbiter_template):
        hub = prepare_for_synthesis(builtin_corpus("simple_arbiter"))
        pin = PinnedPrefix(arbiter_template, previous_alpha=parse_ltl("false"))
        res = synthesize_loop(hub, max_bound=2, pinned=pin)
        assert res.status == "ok"
        t = res.template
        for q in range(2):
            assert t.labels[q] == arbiter_template.labels[q]

    def test_pin_larger_than_bound_rejected(self):
        import template_fixtures as fx
        hub = prepare_for_synthesis(builtin_corpus("simple_arbiter"))
        pin = PinnedPrefix(fx.clean_three_state(), previous_alpha=None)
        with pytest.raises(SynthesisError, match="larger than the bound"):
            build_instance(hub, 2, pinned=pin)

    def test_pin_grows_with_new_states(self, arbiter_template):
        # pinned behavior stays intact when the bound grows
        hub = prepare_for_synthesis(builtin_corpus("simple_arbiter"))
        pin = PinnedPrefix(arbiter_template, previous_alpha=None)
        res = synthesize_loop(hub, max_bound=3, min_bound=3, pinned=pin)
        assert res.status == "ok"
        t = res.template
        for q in range(arbiter_template.n_states):
            assert t.labels[q] == arbiter_template.labels[q]
        for (q, letter), targets in arbiter_template.delta.items():
            assert t.delta[(q, letter)] == targets


class TestSolverFailures:
    def test_broken_solver_is_failure_not_unsat(self):
        res = synth(mini_spec(["G !g(i)"]), max_bound=2,
                    solver_command=["/nonexistent/solver"])
        assert res.status == "solver_failure"

    def test_timeout_is_failure(self):
        import sys
        slow = [sys.executable, "-c", "import time; time.sleep(60)"]
        res = synth(mini_spec(["G !g(i)"]), max_bound=2,
                    solver_command=slow, timeout=0.5)
        assert res.status == "solver_failure"
        assert "timeout" in res.detail


class TestParallelBounds:
    def test_parallel_matches_sequential(self):
        spec = mini_spec(["G (g(i) -> TOK(i))", "G (r(i) -> F g(i))"])
        seq = synth(spec, max_bound=4)
        par = synth(spec, max_bound=4, parallel_bounds=3)
        assert seq.status == par.status == "ok"
        assert seq.bound == par.bound


class TestNoHardcodeMode:
    def test_arbiter_without_hardcoding(self):
        res = synth(builtin_corpus("simple_arbiter"), max_bound=3,
                    hardcode_token=False)
        assert res.status == "ok"
        t = res.template
        assert check_wellformed(t, with_condition_a=True) == []
        outcomes = verify_spec(t, RingConfig(2, "interleaving"),
                               builtin_corpus("simple_arbiter"))
        assert all(o.holds for o in outcomes)


def random_beta_spec(rng: random.Random) -> IndexedSpec:
    """Specs whose guarantees all classify beta (and carry no assumptions):
    the fragment where the direct and automaton encodings agree."""
    atoms_now = ["r(i)", "g(i)", "TOK(i)", "SEND(i)"]
    atoms_next = ["X g(i)", "X SEND(i)", "X TOK(i)"]

    def literal():
        a = rng.choice(atoms_now + atoms_next)
        return a if rng.random() < 0.6 else f"!{a}"

    def body(depth):
        if depth == 0:
            return literal()
        op = rng.choice(["&&", "||", "->"])
        return f"({body(depth - 1)} {op} {body(depth - 1)})"

    texts = [f"G {body(rng.randint(1, 2))}" for _ in range(rng.randint(1, 3))]
    return mini_spec(texts)


class TestEncodingEquivalence:
    def test_direct_and_automaton_agree_on_beta_specs(self):
        from ringsynth.pspec import classify_direct
        rng = random.Random(4242)
        specs = []
        while len(specs) < 8:  # the full 20-spec run lives in acceptance
            spec = random_beta_spec(rng)
            if all(classify_direct(spec, g) == "beta" for g in spec.guarantees):
                specs.append(spec)
        for spec in specs:
            hub = prepare_for_synthesis(spec)
            for bound in (2, 3):
                direct = synthesize_loop(hub, max_bound=bound, min_bound=bound)
                auto = synthesize_loop(hub, max_bound=bound, min_bound=bound,
                                       direct=False)
                assert direct.status == auto.status, pretty(
                    spec.guarantees[0].body)

    def test_amba_general_part_shrinks_with_direct_encoding(self):
        hub = prepare_for_synthesis(builtin_corpus("amba_non0"))
        with_direct = general_part_nba(hub, direct=True)
        without = general_part_nba(hub, direct=False)
        assert with_direct.n_states < without.n_states
