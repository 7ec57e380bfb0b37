import itertools

import pytest

from ringsynth.pspec import QuantifiedProperty
from ringsynth.ring import (
    ProcessTemplate, Ring, RingConfig, RunStep, SystemRun, check_wellformed,
    eval_indexed, letters_over, minimal_token_template, project_local_run,
    template_from_json, template_to_dot, template_to_json,
)
from ringsynth.ltl import parse_ltl

import template_fixtures as fx


def all_system_inputs(ring):
    """Every assignment of the non-RCV local inputs across the ring."""
    names = ring.local_input_names
    per_process = letters_over(names)
    return [tuple(combo) for combo in
            itertools.product(per_process, repeat=ring.n)]


def reachable(ring):
    seen = set()
    stack = list(ring.initial_states())
    inputs_space = all_system_inputs(ring)
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        for inputs in inputs_space:
            for s2, _ in ring.successors(s, inputs):
                if s2 not in seen:
                    stack.append(s2)
    return seen


class TestWellFormedness:
    def test_minimal_template_clean(self):
        assert check_wellformed(fx.clean_minimal(), with_condition_a=True) == []

    def test_fixture_suite_classified_perfectly(self):
        for name, build, expected in fx.FIXTURES:
            violations = check_wellformed(build(), with_condition_a=True)
            found = {v.condition for v in violations}
            if expected is None:
                assert found == set(), f"{name}: unexpected {violations}"
            else:
                assert found == {expected}, f"{name}: got {found}"

    def test_snd_on_idle_state_is_iii(self):
        violations = check_wellformed(fx.violates_iii())
        assert {v.condition for v in violations} == {"iii"}

    def test_fig4_shaped_partition(self):
        # one non-token state, thirteen token states, initial pair (t1, t0)
        n = 14
        delta = {}
        for letter in letters_over(("RCV",)):
            for q in range(n):
                if q == 0:
                    delta[(0, letter)] = (1,) if "RCV" in letter else (0,)
                elif "RCV" not in letter:
                    delta[(q, letter)] = (q + 1,) if q + 1 < n else (0,)
        labels = [frozenset()] + [frozenset({"TOK"})] * (n - 1)
        labels[n - 1] = frozenset({"TOK", "SEND"})
        t = ProcessTemplate(
            inputs=("RCV",), outputs=("TOK", "SEND"), n_states=n,
            token_states=frozenset(range(1, n)), initial_token=1,
            initial_notoken=0, labels=tuple(labels), delta=delta)
        conditions = {v.condition for v in check_wellformed(t)}
        assert "i" not in conditions and "ii" not in conditions


class TestComposition:
    def test_size_one_ring_token_stays(self):
        t = fx.clean_minimal()
        ring = Ring([t], RingConfig(1, "synchronous"))
        (s0,) = ring.initial_states()
        assert s0 == (1,)
        # the sender has no receive transition, so the degenerate self-pass
        # cannot fire and the composition has no successor
        assert ring.successors(s0, [frozenset()]) == []

    def test_size_one_ring_with_self_pass(self):
        # a template that does define the receive transition in its sending
        # state self-passes forever
        t = fx.clean_minimal()
        delta = dict(t.delta)
        for letter in letters_over(t.inputs):
            if "RCV" in letter:
                delta[(1, letter)] = (1,)
        t2 = ProcessTemplate(
            inputs=t.inputs, outputs=t.outputs, n_states=2,
            token_states=t.token_states, initial_token=1, initial_notoken=0,
            labels=t.labels, delta=delta)
        ring = Ring([t2], RingConfig(1, "synchronous"))
        succ = ring.successors((1,), [frozenset()])
        assert succ == [((1,), frozenset({0}))]

    def test_two_synchronous_not_sending(self):
        t = fx.clean_three_state()
        ring = Ring([t, t], RingConfig(2, "synchronous"))
        # state (2, 0): holder grants, nobody sends: unique M = {0, 1}
        succ = ring.successors((2, 0), [frozenset(), frozenset()])
        assert succ == [(((1, 0)), frozenset({0, 1}))]

    def test_two_interleaving_matches_hand_table(self):
        t = fx.clean_minimal()
        ring = Ring([t, t], RingConfig(2, "interleaving"))
        empty = (frozenset(), frozenset())
        # holder at 0 is sending: the only step involving 0 is the pass
        succ = set(ring.successors((1, 0), empty))
        assert succ == {
            ((0, 1), frozenset({0, 1})),  # token passes 0 -> 1
            ((1, 0), frozenset({1})),     # process 1 idles alone
        }
        succ2 = set(ring.successors((0, 1), empty))
        assert succ2 == {
            ((1, 0), frozenset({0, 1})),
            ((0, 1), frozenset({0})),
        }

    def test_fully_asynchronous_includes_stutter(self):
        t = fx.clean_minimal()
        ring = Ring([t, t], RingConfig(2, "fully_asynchronous"))
        succ = dict(
            (sched, s2) for s2, sched in ring.successors((1, 0),
                                                         (frozenset(), frozenset())))
        assert succ[frozenset()] == (1, 0)  # global stutter allowed

    def test_sync_and_interleaving_subsets_of_async(self):
        t = fx.clean_three_state()
        for state in [(2, 0), (1, 0), (0, 2)]:
            for inputs in all_system_inputs(Ring([t, t], RingConfig(2))):
                asn = set(Ring([t, t], RingConfig(2, "fully_asynchronous"))
                          .successors(state, inputs))
                for timing in ("synchronous", "interleaving"):
                    sub = set(Ring([t, t], RingConfig(2, timing))
                              .successors(state, inputs))
                    assert sub <= asn

    @pytest.mark.parametrize("timing", ["synchronous", "interleaving",
                                        "fully_asynchronous"])
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_single_token_invariant(self, timing, n):
        t = fx.clean_three_state()
        ring = Ring([t] * n, RingConfig(n, timing))
        for state in reachable(ring):
            assert ring.token_position(state) is not None

    def test_multi_token_state_rejected(self):
        t = fx.clean_minimal()
        ring = Ring([t, t], RingConfig(2))
        with pytest.raises(ValueError, match="tokens"):
            ring.successors((1, 1), (frozenset(), frozenset()))

    def test_nondeterministic_template_rejected(self):
        t = fx.clean_minimal()
        delta = dict(t.delta)
        delta[(0, frozenset())] = (0, 1)
        bad = ProcessTemplate(
            inputs=t.inputs, outputs=t.outputs, n_states=2,
            token_states=t.token_states, initial_token=1, initial_notoken=0,
            labels=t.labels, delta=delta)
        with pytest.raises(ValueError, match="deterministic"):
            Ring([bad, bad], RingConfig(2))


def lazy_holder():
    """Template whose token state grants forever and never sends."""
    delta = {}
    for letter in letters_over(("r", "RCV")):
        if "RCV" in letter:
            delta[(0, letter)] = (1,)
        else:
            delta[(0, letter)] = (0,)
            delta[(1, letter)] = (1,)
    return ProcessTemplate(
        inputs=("r", "RCV"), outputs=("g", "TOK", "SEND"), n_states=2,
        token_states=frozenset({1}), initial_token=1, initial_notoken=0,
        labels=(frozenset(), frozenset({"TOK", "g"})), delta=delta)


def make_run(ring, schedule, inputs=None):
    """Drive the ring along a fixed schedule, zero inputs, loop over all."""
    state = ring.initial_states()[0]
    steps = []
    zero = tuple(frozenset() for _ in range(ring.n))
    for sched in schedule:
        options = [(s2, m) for s2, m in ring.successors(state, zero)
                   if m == sched]
        assert options, f"schedule {sched} unavailable in {state}"
        s2, m = options[0]
        holder = ring.token_position(state)
        receiver = (holder + 1) % ring.n if (
            ring.templates[holder].sends(state[holder]) and holder in m) else None
        locals_ = tuple(
            frozenset({"RCV"}) if v == receiver else frozenset()
            for v in range(ring.n))
        steps.append(RunStep(state, frozenset(), locals_, m))
        state = s2
    return steps


class TestProjection:
    def test_synchronous_projection_is_identity_length(self):
        t = fx.clean_three_state()
        ring = Ring([t, t], RingConfig(2, "synchronous"))
        allsched = [frozenset({0, 1})] * 6
        steps = make_run(ring, allsched)
        run = SystemRun(steps, loop_start=0)
        assert len(project_local_run(run, 0)) == len(steps)

    def test_never_scheduled_is_empty(self):
        ring = Ring([lazy_holder()] * 2, RingConfig(2, "fully_asynchronous"))
        steps = make_run(ring, [frozenset({0})] * 4)
        run = SystemRun(steps, loop_start=0)
        assert project_local_run(run, 1) == []

    def test_interleaving_alternation_keeps_odd_positions(self):
        ring = Ring([lazy_holder()] * 2, RingConfig(2, "interleaving"))
        steps = make_run(ring, [frozenset({1}), frozenset({0})] * 3)
        run = SystemRun(steps, loop_start=0)
        local = project_local_run(run, 0)
        assert len(local) == 3
        assert [s for s, _ in local] == [steps[k].state[0] for k in (1, 3, 5)]


class TestEvalIndexed:
    def _ring_and_run(self):
        t = fx.clean_three_state()
        ring = Ring([t, t], RingConfig(2, "synchronous"))
        steps = make_run(ring, [frozenset({0, 1})] * 6)
        return ring, SystemRun(steps, loop_start=0)

    def test_grant_only_with_token(self):
        ring, run = self._ring_and_run()
        prop = QuantifiedProperty("p", "forall_i", parse_ltl("G (g(i) -> TOK(i))"))
        assert eval_indexed(run, ring.templates, prop, {"i": 0})
        assert eval_indexed(run, ring.templates, prop, {"i": 1})

    def test_mutual_exclusion_violated_by_construction(self):
        t = fx.clean_three_state()
        # doctor a run where both processes appear to grant at once
        ring = Ring([t, t], RingConfig(2, "synchronous"))
        steps = make_run(ring, [frozenset({0, 1})] * 4)
        fake = [RunStep((2, 2), s.global_inputs, s.local_inputs, s.sched)
                for s in steps]
        run = SystemRun(fake, loop_start=0)
        prop = QuantifiedProperty("mx", "forall_ij", parse_ltl("G !(g(i) && g(j))"))
        assert not eval_indexed(run, ring.templates, prop, {"i": 0, "j": 1})

    def test_two_indexed_rejects_next(self):
        ring, run = self._ring_and_run()
        prop = QuantifiedProperty("bad", "forall_ij", parse_ltl("G X !(g(i) && g(j))"))
        with pytest.raises(ValueError, match="X-free"):
            eval_indexed(run, ring.templates, prop, {"i": 0, "j": 1})

    def test_vacuous_when_assumption_fails(self):
        ring, run = self._ring_and_run()
        prop = QuantifiedProperty("p", "forall_i", parse_ltl("G false"))
        ass = QuantifiedProperty("a", "unquantified", parse_ltl("G false"))
        assert eval_indexed(run, ring.templates, prop, {"i": 0}, assumptions=[ass])

    def test_unfair_run_is_vacuous(self):
        ring = Ring([lazy_holder()] * 2, RingConfig(2, "fully_asynchronous"))
        steps = make_run(ring, [frozenset({0})] * 4)
        run = SystemRun(steps, loop_start=0)
        prop = QuantifiedProperty("p", "forall_i", parse_ltl("G false"))
        assert eval_indexed(run, ring.templates, prop, {"i": 0})

    def test_local_next_semantics(self):
        # X is interpreted on the local (projected) run: the grant state is
        # followed by the sending state even with interleaving gaps between
        t = fx.clean_three_state()
        ring = Ring([t, t], RingConfig(2, "interleaving"))
        steps = make_run(ring, [frozenset({0}), frozenset({0, 1}),
                                frozenset({1}), frozenset({1, 0})])
        run = SystemRun(steps, loop_start=0)
        prop = QuantifiedProperty(
            "p", "forall_i", parse_ltl("G (g(i) -> X (TOK(i) && !g(i)))"))
        assert eval_indexed(run, ring.templates, prop, {"i": 0})
        assert eval_indexed(run, ring.templates, prop, {"i": 1})


class TestSerialization:
    def test_json_round_trip(self):
        for name, build, _ in fx.FIXTURES:
            if name == "bad-i":
                continue  # its token partition names a state that is not there
            t = build()
            assert template_from_json(template_to_json(t)) == t

    def test_dot_output_mentions_states_and_dont_cares(self):
        dot = template_to_dot(fx.clean_minimal())
        assert "digraph" in dot
        assert "doublecircle" in dot  # token states stand out
        # the idle self-loop fires for any r, so r must not appear on it
        assert '  q0 -> q0 [label="!RCV"];' in dot
