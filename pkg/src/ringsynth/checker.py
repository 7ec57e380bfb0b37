"""Explicit-state verification of token rings against indexed properties.

The checker searches the product of the ring with Buchi automata for the
negated property and for every assumption, under environment-controlled
inputs and scheduling.  One-indexed formulas advance their automaton only
when their process is scheduled (the projection semantics); two-indexed
and unquantified formulas read every step.  Scheduling fairness is a
deterministic monitor rather than a formula.

Emptiness runs a nested depth-first search; a Tarjan-based search over
the same product serves as the independent cross-oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import ltl
from .automata import Nba, label_satisfied, ltl_to_nba, tarjan_sccs
from .ltl import Formula, expand_counted_until, simplify, substitute_index, to_nnf
from .pspec import IndexedSpec, QuantifiedProperty, classify_direct
from .ring import (
    ProcessTemplate, Ring, RingConfig, RunStep, SystemRun, eval_indexed,
    letters_over,
)

__all__ = [
    "VerifyOutcome", "verify_ring", "verify_spec", "check_token_release",
    "CutoffInfo", "cutoff_for", "CutoffReport", "cutoff_sample_check",
    "format_trace",
]


@dataclass
class VerifyOutcome:
    holds: bool
    property_name: str
    index: dict
    counterexample: SystemRun | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.holds


def _tracker_nba(body: Formula) -> Nba:
    return ltl_to_nba(simplify(to_nnf(expand_counted_until(body))))


def _negated_nba(body: Formula) -> Nba:
    return ltl_to_nba(simplify(to_nnf(expand_counted_until(ltl.Not(body)))))


@dataclass
class _Component:
    """One automaton in the product and how it reads the run."""

    nba: Nba
    mode: str            # "projected" or "global"
    process: int | None  # index whose schedule gates a projected component
    negated: bool        # the property component (for reporting only)


class _ProductSearch:
    """Lazy product of ring, fairness monitor, and property automata."""

    def __init__(self, ring: Ring, components: list[_Component],
                 fairsched: bool):
        self.ring = ring
        self.components = components
        self.fairsched = fairsched
        n = ring.n
        self.n = n
        # acceptance sets: scheduling fairness first, then each automaton
        self.n_sets = (1 if fairsched else 0) + len(components)
        locals_ = [s for s in ring.local_input_names
                   if s not in _global_inputs(ring)]
        self.local_names = tuple(locals_)
        self.global_names = tuple(_global_inputs(ring))
        self.local_letters = letters_over(self.local_names)
        self.global_letters = letters_over(self.global_names)

    # -- initial nodes ------------------------------------------------------

    def initial_nodes(self):
        comp_inits = [sorted(c.nba.initial) for c in self.components]
        for ring_state in self.ring.initial_states():
            for combo in itertools.product(*comp_inits):
                monitor = (0, False) if self.fairsched else None
                yield (ring_state, monitor, tuple(combo), 0)

    # -- successor enumeration ----------------------------------------------

    def successors(self, node):
        """Yields (next node, step info) pairs."""
        ring_state, monitor, comp_states, counter = node
        ring = self.ring
        holder = ring.token_position(ring_state)
        sending = ring.templates[holder].sends(ring_state[holder])
        sender = holder if sending else None

        for sched in ring._scheduling_sets(sender):
            if sender is not None and sender in sched:
                receiver = (sender + 1) % self.n
                if receiver not in sched:
                    continue
            else:
                receiver = None
            movers = sorted(sched)
            for glob in self.global_letters:
                for local_combo in itertools.product(
                        self.local_letters, repeat=len(movers)):
                    inputs = [frozenset()] * self.n
                    for v, letter in zip(movers, local_combo):
                        inputs[v] = letter | glob
                    for v in range(self.n):
                        if v not in sched:
                            inputs[v] = glob
                    next_ring = ring._step(ring_state, inputs, sched, receiver)
                    if next_ring is None:
                        continue
                    step = RunStep(
                        state=ring_state,
                        global_inputs=glob,
                        local_inputs=tuple(
                            frozenset((inputs[v] - glob)
                                      | ({"RCV"} if v == receiver else set()))
                            for v in range(self.n)),
                        sched=frozenset(sched))
                    letters = self._letters(step)
                    if self.fairsched:
                        d, _ = monitor
                        if d in sched:
                            next_monitor = ((d + 1) % self.n, d == self.n - 1)
                        else:
                            next_monitor = (d, False)
                    else:
                        next_monitor = None
                    for combo in self._component_moves(comp_states, step, letters):
                        next_counter = self._advance(node, counter)
                        yield ((next_ring, next_monitor, combo, next_counter),
                               step)

    def _letters(self, step: RunStep):
        full = set(step.global_inputs)
        for v, q in enumerate(step.state):
            for name in self.ring.templates[v].output_label(q):
                full.add(f"{name}_{v}")
            if v in step.sched:
                for name in step.local_inputs[v]:
                    full.add(f"{name}_{v}")
        for v in step.sched:
            full.add(f"SCH_{v}")
        local = {}
        for v in step.sched:
            atoms = set(step.global_inputs)
            for name in self.ring.templates[v].output_label(step.state[v]):
                atoms.add(f"{name}_{v}")
            for name in step.local_inputs[v]:
                atoms.add(f"{name}_{v}")
            local[v] = frozenset(atoms)
        return frozenset(full), local

    def _component_moves(self, comp_states, step: RunStep, letters):
        full_letter, local_letters = letters
        options = []
        for comp, state in zip(self.components, comp_states):
            if comp.mode == "projected" and comp.process not in step.sched:
                options.append((state,))  # stutter, the process is not read
                continue
            letter = full_letter if comp.mode == "global" \
                else local_letters[comp.process]
            moves = tuple(dst for src, lbl, dst in comp.nba.edges
                          if src == state and label_satisfied(lbl, letter))
            if not moves:
                return
            options.append(moves)
        yield from itertools.product(*options)

    def _advance(self, node, counter: int) -> int:
        """Degeneralization counter over the product's acceptance sets."""
        if self._in_set(node, counter):
            return (counter + 1) % self.n_sets
        return counter

    def _in_set(self, node, set_index: int) -> bool:
        _, monitor, comp_states, _ = node
        if self.fairsched:
            if set_index == 0:
                return monitor[1]
            set_index -= 1
        comp = self.components[set_index]
        return comp_states[set_index] in comp.nba.accepting

    def accepting(self, node) -> bool:
        return node[3] == 0 and self._in_set(node, 0) if self.n_sets else True

    # -- emptiness ----------------------------------------------------------

    def find_lasso(self, method: str = "ndfs"):
        if self.n_sets == 0:
            raise ValueError("a product needs at least one acceptance set")
        if method == "scc":
            return self._scc_search()
        return self._ndfs()

    def _ndfs(self):
        cyan: dict = {}
        blue: set = set()
        red: set = set()

        for root in self.initial_nodes():
            if root in blue:
                continue
            # outer (blue) depth-first search, iterative with a path stack
            stack = [(root, None, self.successors(root))]
            path = [root]
            steps: list = [None]
            cyan[root] = True
            while stack:
                node, _, it = stack[-1]
                advanced = False
                for nxt, step in it:
                    if nxt not in blue and nxt not in cyan:
                        cyan[nxt] = True
                        stack.append((nxt, step, self.successors(nxt)))
                        path.append(nxt)
                        steps.append(step)
                        advanced = True
                        break
                    if self.accepting(node) and nxt in cyan:
                        return self._rebuild(path, steps, node, [(nxt, step)])
                if advanced:
                    continue
                stack.pop()
                if self.accepting(node):
                    hit = self._red_search(node, cyan, red)
                    if hit is not None:
                        return self._rebuild(path, steps, node, hit)
                del cyan[node]
                blue.add(node)
                path.pop()
                steps.pop()
        return None

    def _red_search(self, seed, cyan, red):
        stack = [(seed, iter(self.successors(seed)))]
        parent: dict = {seed: None}
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt, step in it:
                if nxt in cyan:
                    # closes a cycle through the blue path
                    chain = [(nxt, step)]
                    cur = node
                    while parent[cur] is not None:
                        prev, pstep = parent[cur]
                        chain.append((cur, pstep))
                        cur = prev
                    chain.reverse()
                    return chain
                if nxt not in red:
                    red.add(nxt)
                    parent[nxt] = (node, step)
                    stack.append((nxt, iter(self.successors(nxt))))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
        return None

    def _rebuild(self, path, steps, from_node, closing_chain):
        """Assemble the ultimately periodic run from the blue path and the
        chain that closes the cycle."""
        # closing_chain: [(node, step crossing into node), ...] ending at a
        # node that lies on the blue path
        loop_entry = closing_chain[-1][0]
        entry_at = path.index(loop_entry)
        run_steps = []
        for k in range(len(path) - 1):
            run_steps.append(steps[k + 1])
        seed_index = len(path) - 1
        for node, step in closing_chain:
            run_steps.append(step)
        # positions: steps[k] moves path[k] -> path[k+1]; the final steps
        # walk from the seed back to loop_entry
        total = len(run_steps)
        loop_start = entry_at
        # the run revisits loop_entry at the end, so drop nothing
        run = SystemRun(steps=run_steps, loop_start=loop_start)
        return run

    def _scc_search(self):
        """Cross-oracle: accepting node inside a cyclic component."""
        nodes = []
        seen = set()
        stack = list(self.initial_nodes())
        succ_cache: dict = {}

        def successors(n):
            got = succ_cache.get(n)
            if got is None:
                got = [x for x, _ in self.successors(n)]
                succ_cache[n] = got
            return got

        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            nodes.append(n)
            stack.extend(successors(n))
        for comp in tarjan_sccs(nodes, successors):
            cyclic = len(comp) > 1 or comp[0] in successors(comp[0])
            if cyclic and any(self.accepting(n) for n in comp):
                return comp  # witness component, not a reconstructed run
        return None


def _global_inputs(ring: Ring) -> tuple[str, ...]:
    # global inputs are those the hub spec carried over; the template does
    # not distinguish them, so the checker takes them from the signature
    # convention: names present in the template marked by the caller
    return getattr(ring, "_global_input_names", ())


def _make_ring(templates, config: RingConfig,
               global_inputs: tuple[str, ...]) -> Ring:
    ring = Ring(templates, config)
    ring._global_input_names = tuple(global_inputs)
    return ring


def _index_assignments(prop: QuantifiedProperty, n: int):
    if prop.quantifier == "forall_i":
        return [{"i": v} for v in range(n)]
    if prop.quantifier == "forall_i_ne0":
        return [{"i": v} for v in range(1, n)]
    if prop.quantifier == "forall_ij":
        return [{"i": v, "j": w} for v in range(n) for w in range(n) if v != w]
    if prop.quantifier == "zero_only":
        return [{}]
    return [{}]


def _component_for(prop: QuantifiedProperty, assignment: dict, n: int,
                   negated: bool) -> _Component:
    body = substitute_index(prop.body, assignment, n)
    if prop.quantifier in ("forall_i", "forall_i_ne0"):
        mode, process = "projected", assignment["i"]
    elif prop.quantifier == "zero_only":
        mode, process = "projected", 0
    elif prop.quantifier == "forall_ij":
        if ltl.has_next(body):
            raise ValueError(f"{prop.name}: two-indexed properties must be X-free")
        mode, process = "global", None
    else:
        mode, process = "global", None
    nba = _negated_nba(body) if negated else _tracker_nba(body)
    return _Component(nba=nba, mode=mode, process=process, negated=negated)


def _assumption_components(assumptions, n: int) -> list[_Component]:
    comps = []
    for ass in assumptions:
        for assignment in _index_assignments(ass, n):
            comps.append(_component_for(ass, assignment, n, negated=False))
    return comps


def verify_ring(templates, config: RingConfig, prop: QuantifiedProperty,
                assumptions=(), global_inputs: tuple[str, ...] = (),
                fairsched: bool = True, method: str = "ndfs",
                recheck: bool = True) -> VerifyOutcome:
    """Model check one quantified property on a ring of templates.

    ``templates`` is one template (replicated) or a sequence of size n
    (a combined ring places the special one at index 0).  The outcome of
    the first failing index assignment is returned; every counterexample
    is independently re-evaluated before being reported.
    """
    if isinstance(templates, ProcessTemplate):
        templates = [templates] * config.size
    ring = _make_ring(list(templates), config, global_inputs)
    ass_comps = _assumption_components(assumptions, config.size)
    for assignment in _index_assignments(prop, config.size):
        comps = ass_comps + [_component_for(prop, assignment, config.size,
                                            negated=True)]
        search = _ProductSearch(ring, comps, fairsched)
        found = search.find_lasso(method)
        if found is None:
            continue
        if method == "scc":
            return VerifyOutcome(False, prop.name, assignment, None,
                                 detail="accepting component found")
        run = found
        if recheck:
            verdict = eval_indexed(run, ring.templates, prop, assignment,
                                   assumptions=assumptions,
                                   fairsched=fairsched)
            if verdict:
                raise RuntimeError(
                    f"{prop.name}: reported counterexample re-evaluates to "
                    "true; checker defect")
        return VerifyOutcome(False, prop.name, assignment, run)
    return VerifyOutcome(True, prop.name, {})


def verify_spec(templates, config: RingConfig, spec: IndexedSpec,
                method: str = "ndfs") -> list[VerifyOutcome]:
    """Check every guarantee of a ring specification under its assumptions."""
    outcomes = []
    for prop in spec.guarantees:
        outcomes.append(verify_ring(
            templates, config, prop, assumptions=spec.assumptions,
            global_inputs=spec.global_inputs, method=method))
    return outcomes


# ---------------------------------------------------------------------------
# Token release (the liveness side of the template conditions)


def check_token_release(template: ProcessTemplate,
                        a_loc: Formula | None = None) -> VerifyOutcome:
    """Under inputs satisfying the local fairness assumption, a process
    holding the token eventually sends it.

    The process runs alone and always scheduled (the hub view); the check
    is G(TOK -> F SEND) over its runs from the initial states.
    """
    goal = ltl.parse_ltl("G (TOK -> F SEND)")
    body = goal if a_loc is None else ltl.Implies(a_loc, goal)
    nba = _negated_nba(body)
    letters = letters_over(template.inputs)

    def successors(node):
        a, q = node
        for letter in letters:
            targets = template.successors(q, letter)
            if not targets:
                continue
            word_letter = frozenset(letter | template.output_label(q))
            for src, lbl, dst in nba.edges:
                if src == a and label_satisfied(lbl, word_letter):
                    yield (dst, targets[0])

    start = [(a0, q0) for a0 in nba.initial
             for q0 in (template.initial_token, template.initial_notoken)]
    reach = set()
    stack = list(start)
    while stack:
        node = stack.pop()
        if node in reach:
            continue
        reach.add(node)
        stack.extend(successors(node))
    for comp in tarjan_sccs(sorted(reach), successors):
        cyclic = len(comp) > 1 or comp[0] in successors(comp[0])
        if cyclic and any(a in nba.accepting for a, _ in comp):
            return VerifyOutcome(False, "token-release", {},
                                 detail="a held token can be kept forever")
    return VerifyOutcome(True, "token-release", {})


# ---------------------------------------------------------------------------
# Cutoffs


@dataclass
class CutoffInfo:
    cutoff: int | None
    assumption_shape_ok: bool
    reason: str


def cutoff_for(spec: IndexedSpec, prop: QuantifiedProperty) -> CutoffInfo:
    """Ring size at which verification settles the parameterized question.

    Two for one-indexed properties, four for two-indexed ones, provided
    every assumption is an invariant (or initial constraint) over inputs;
    otherwise no cutoff is known.  Template condition (a) is reported by
    the sampling check, not here.
    """
    for ass in spec.assumptions:
        shape_ok = classify_direct(spec, ass) == "alpha" or (
            ass.temporal_class == "initial"
            and all(spec.is_input(r.name) for r in ltl.atoms_of(ass.body)))
        if not shape_ok:
            return CutoffInfo(None, False,
                              f"assumption {ass.name} is not a boolean input "
                              "invariant; no cutoff known")
    if prop.quantifier == "forall_ij":
        return CutoffInfo(4, True, "two-indexed property")
    if prop.quantifier == "zero_only":
        return CutoffInfo(None, True,
                          "cutoffs cover uniform rings only; zero-process "
                          "properties need explicit sizes")
    return CutoffInfo(2, True, "one-indexed property")


@dataclass
class CutoffReport:
    info: CutoffInfo
    condition_a_ok: bool
    verdicts: dict
    agree: bool
    notes: list[str] = field(default_factory=list)


def cutoff_sample_check(template: ProcessTemplate, spec: IndexedSpec,
                        prop: QuantifiedProperty, extra: int = 1,
                        timing: str = "fully_asynchronous") -> CutoffReport:
    """Verify at the cutoff size and a few larger rings; sizes must agree.

    A template that reacts to inputs while sending violates condition (a)
    and voids the cutoff claim, so that is reported first.
    """
    from .ring import check_wellformed

    info = cutoff_for(spec, prop)
    condition_a_ok = not any(
        v.condition == "a" for v in check_wellformed(template,
                                                     with_condition_a=True))
    notes = []
    if not condition_a_ok:
        notes.append("template violates condition (a): verdicts may depend "
                     "on the ring size")
    if info.cutoff is None:
        return CutoffReport(info, condition_a_ok, {}, True, notes)
    verdicts = {}
    for n in range(info.cutoff, info.cutoff + extra + 1):
        outcome = verify_ring(template, RingConfig(n, timing), prop,
                              assumptions=spec.assumptions,
                              global_inputs=spec.global_inputs)
        verdicts[n] = outcome.holds
    agree = len(set(verdicts.values())) <= 1
    if not agree and condition_a_ok and info.assumption_shape_ok:
        notes.append("verdicts disagree on a conforming instance: checker "
                     "or composition defect")
    return CutoffReport(info, condition_a_ok, verdicts, agree, notes)


# ---------------------------------------------------------------------------
# Counterexample formatting


def format_trace(run: SystemRun) -> str:
    lines = []
    for k, step in enumerate(run.steps):
        marker = " <- loop starts here" if k == run.loop_start else ""
        state = " ".join(f"p{v}:q{q}" for v, q in enumerate(step.state))
        glob = ",".join(sorted(step.global_inputs)) or "-"
        locs = " ".join(
            f"p{v}[{','.join(sorted(letter)) or '-'}]"
            for v, letter in enumerate(step.local_inputs))
        sched = "{" + ",".join(str(v) for v in sorted(step.sched)) + "}"
        lines.append(f"step {k}: state[{state}] globals[{glob}] {locs} "
                     f"sched{sched}{marker}")
    return "\n".join(lines) + "\n"
