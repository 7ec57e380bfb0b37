import pytest

from ringsynth.checker import (
    check_token_release, cutoff_for, cutoff_sample_check, format_trace,
    verify_ring, verify_spec,
)
from ringsynth.ltl import parse_ltl
from ringsynth.pspec import IndexedSpec, QuantifiedProperty, builtin_corpus
from ringsynth.ring import Ring, RingConfig

import template_fixtures as fx
from test_ring import lazy_holder


def prop(name, quant, text):
    return QuantifiedProperty(name, quant, parse_ltl(text))


TIMINGS = ("synchronous", "interleaving", "fully_asynchronous")


class TestVerifyRing:
    def test_send_mutual_exclusion(self):
        t = fx.clean_minimal()
        out = verify_ring(t, RingConfig(2, "interleaving"),
                          prop("mx", "forall_ij", "G !(SEND(i) && SEND(j))"))
        assert out.holds

    def test_token_hog_liveness_counterexample(self):
        out = verify_ring(lazy_holder(), RingConfig(2, "interleaving"),
                          prop("TR4", "forall_i", "G (TOK(i) -> F SEND(i))"))
        assert not out.holds
        assert out.counterexample is not None
        trace = format_trace(out.counterexample)
        assert "loop starts here" in trace

    def test_arbiter_original_spec_small_rings(self, arbiter_template):
        spec = builtin_corpus("simple_arbiter")
        for timing in TIMINGS:
            for n in (2, 3):
                outcomes = verify_spec(arbiter_template,
                                       RingConfig(n, timing), spec)
                assert all(o.holds for o in outcomes), (timing, n)

    def test_grant_mutual_exclusion(self, arbiter_template):
        out = verify_ring(arbiter_template, RingConfig(3, "fully_asynchronous"),
                          prop("mx", "forall_ij", "G !(g(i) && g(j))"))
        assert out.holds

    def test_two_indexed_with_next_rejected(self):
        t = fx.clean_minimal()
        with pytest.raises(ValueError, match="X-free"):
            verify_ring(t, RingConfig(2), prop("bad", "forall_ij",
                                               "G X !(g(i) && g(j))"))

    def test_methods_agree(self, arbiter_template):
        cases = [
            (arbiter_template, prop("TR4", "forall_i", "G (TOK(i) -> F SEND(i))")),
            (lazy_holder(), prop("TR4", "forall_i", "G (TOK(i) -> F SEND(i))")),
            (lazy_holder(), prop("mx", "forall_ij", "G !(g(i) && g(j))")),
        ]
        for template, p in cases:
            for timing in TIMINGS:
                a = verify_ring(template, RingConfig(2, timing), p,
                                method="ndfs")
                b = verify_ring(template, RingConfig(2, timing), p,
                                method="scc")
                assert a.holds == b.holds, (p.name, timing)

    def test_counterexample_reevaluates_false(self):
        from ringsynth.ring import eval_indexed
        p = prop("TR4", "forall_i", "G (TOK(i) -> F SEND(i))")
        out = verify_ring(lazy_holder(), RingConfig(2, "fully_asynchronous"), p)
        assert not out.holds
        templates = [lazy_holder()] * 2
        assert not eval_indexed(out.counterexample, templates, p, out.index)

    def test_sync_counterexample_is_async_run(self):
        # every synchronous step must also be available asynchronously
        p = prop("TR4", "forall_i", "G (TOK(i) -> F SEND(i))")
        out = verify_ring(lazy_holder(), RingConfig(2, "synchronous"), p)
        assert not out.holds
        run = out.counterexample
        ring = Ring([lazy_holder()] * 2, RingConfig(2, "fully_asynchronous"))
        for k, step in enumerate(run.steps[:-1]):
            inputs = [step.local_inputs[v] - {"RCV"} | step.global_inputs
                      for v in range(2)]
            succ = ring.successors(step.state, [frozenset(x) for x in inputs])
            assert (run.steps[k + 1].state, step.sched) in succ

    def test_combined_ring_per_property(self, arbiter_template):
        # a slightly different template at vertex 0 (grants only on demand)
        zero = fx.clean_three_state()
        outcomes = verify_spec([zero] + [arbiter_template] * 2,
                               RingConfig(3, "interleaving"),
                               builtin_corpus("simple_arbiter"))
        assert [o.property_name for o in outcomes] == ["G1", "G2"]
        assert all(o.holds for o in outcomes)


class TestTokenRelease:
    def test_immediate_sender_holds(self):
        assert check_token_release(fx.clean_minimal()).holds

    def test_waiting_for_forbidden_input(self):
        # token state leaves only on r; an environment that keeps r low
        # starves it
        from ringsynth.ring import ProcessTemplate, letters_over
        delta = {}
        for letter in letters_over(("r", "RCV")):
            if "RCV" in letter:
                delta[(0, letter)] = (1,)
            else:
                delta[(0, letter)] = (0,)
                delta[(1, letter)] = (2,) if "r" in letter else (1,)
                delta[(2, letter)] = (0,)
        t = ProcessTemplate(
            inputs=("r", "RCV"), outputs=("g", "TOK", "SEND"), n_states=3,
            token_states=frozenset({1, 2}), initial_token=1, initial_notoken=0,
            labels=(frozenset(), frozenset({"TOK"}), frozenset({"TOK", "SEND"})),
            delta=delta)
        assert not check_token_release(t).holds
        # under an assumption that r keeps arriving, the token moves on
        assert check_token_release(t, a_loc=parse_ltl("G F r")).holds

    def test_synthesized_template_releases(self, arbiter_template):
        assert check_token_release(arbiter_template).holds

    def test_release_implies_ring_circulation(self, arbiter_template):
        # a template passing the release check keeps every fair ring alive
        circulate = prop("circ", "forall_i", "G F SEND(i)")
        for n in (2, 3, 4):
            out = verify_ring(arbiter_template,
                              RingConfig(n, "fully_asynchronous"), circulate)
            assert out.holds, n


class TestCutoffs:
    def test_one_indexed_cutoff_two(self):
        spec = builtin_corpus("simple_arbiter")
        info = cutoff_for(spec, spec.guarantees[1])
        assert info.cutoff == 2 and info.assumption_shape_ok

    def test_two_indexed_cutoff_four(self):
        spec = IndexedSpec(
            local_inputs=("r",), global_inputs=(), local_outputs=("g",),
            guarantees=(prop("mx", "forall_ij", "G !(g(i) && g(j))"),))
        info = cutoff_for(spec, spec.guarantees[0])
        assert info.cutoff == 4

    def test_temporal_assumptions_have_no_cutoff(self):
        spec = builtin_corpus("amba_non0")  # A1/A2 are temporal
        info = cutoff_for(spec, spec.guarantees[0])
        assert info.cutoff is None
        assert not info.assumption_shape_ok

    def test_boolean_input_assumptions_allowed(self):
        spec = IndexedSpec(
            local_inputs=("r", "h"), global_inputs=(), local_outputs=("g",),
            assumptions=(prop("A", "forall_i", "G (h(i) -> r(i))"),
                         prop("A0", "forall_i", "!r(i)")),
            guarantees=(prop("G", "forall_i", "G (r(i) -> F g(i))"),))
        info = cutoff_for(spec, spec.guarantees[0])
        assert info.cutoff == 2 and info.assumption_shape_ok

    def test_sample_check_agrees(self, arbiter_template):
        spec = builtin_corpus("simple_arbiter")
        report = cutoff_sample_check(arbiter_template, spec,
                                     spec.guarantees[0], extra=1)
        assert report.info.cutoff == 2
        assert report.condition_a_ok
        assert report.agree
        assert set(report.verdicts) == {2, 3}
        assert all(report.verdicts.values())

    def test_condition_a_violation_flagged_first(self):
        spec = builtin_corpus("simple_arbiter")
        report = cutoff_sample_check(fx.violates_a(), spec,
                                     spec.guarantees[0], extra=0)
        assert not report.condition_a_ok
        assert report.notes and "condition (a)" in report.notes[0]
