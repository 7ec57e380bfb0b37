"""Process templates and token-ring composition.

A :class:`ProcessTemplate` is a Moore-style labeled transition system whose
states are split into token and non-token states.  Rings replicate a
template (or place a special template at index 0) around a unidirectional
cycle; composition supports synchronous, interleaving, and fully
asynchronous timing.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from . import ltl

__all__ = [
    "Letter", "ProcessTemplate", "RingConfig", "RunStep", "SystemRun",
    "WellFormednessViolation", "check_wellformed", "Ring", "project_local_run",
    "eval_indexed", "template_to_json", "template_from_json", "template_to_dot",
    "letters_over", "minimal_token_template",
]

Letter = frozenset  # of input signal names that are high

TIMINGS = ("synchronous", "interleaving", "fully_asynchronous")


def letters_over(signals: Sequence[str]) -> list[Letter]:
    """All assignments over the given signals, in a stable order."""
    out = []
    for values in itertools.product((False, True), repeat=len(signals)):
        out.append(frozenset(s for s, v in zip(signals, values) if v))
    return out


@dataclass(frozen=True)
class ProcessTemplate:
    """Finite Moore machine with a token/non-token state partition.

    ``delta`` maps (state, input letter) to a tuple of successors; a tuple
    of length one is the deterministic case required for composition.
    Token states never appear as targets of letters without RCV from
    non-token states, and so on, per the well-formedness conditions.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    n_states: int
    token_states: frozenset[int]
    initial_token: int
    initial_notoken: int
    labels: tuple[frozenset[str], ...]
    delta: Mapping[tuple[int, Letter], tuple[int, ...]]

    def __post_init__(self) -> None:
        if "RCV" not in self.inputs or "SEND" not in self.outputs \
                or "TOK" not in self.outputs:
            raise ValueError("templates need RCV among inputs and TOK/SEND "
                             "among outputs")

    def has_token(self, q: int) -> bool:
        return q in self.token_states

    def sends(self, q: int) -> bool:
        return "SEND" in self.labels[q]

    def letter_space(self) -> list[Letter]:
        return letters_over(self.inputs)

    def successors(self, q: int, letter: Letter) -> tuple[int, ...]:
        return self.delta.get((q, letter), ())

    def is_deterministic(self) -> bool:
        return all(len(ts) <= 1 for ts in self.delta.values())

    def output_label(self, q: int) -> frozenset:
        lbl = set(self.labels[q])
        if q in self.token_states:
            lbl.add("TOK")
        else:
            lbl.discard("TOK")
        return frozenset(lbl)


@dataclass(frozen=True)
class RingConfig:
    size: int
    timing: str = "synchronous"

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("ring size must be at least 1")
        if self.timing not in TIMINGS:
            raise ValueError(f"unknown timing model {self.timing!r}")


@dataclass(frozen=True)
class WellFormednessViolation:
    condition: str
    witness: str

    def __str__(self) -> str:
        return f"({self.condition}) {self.witness}"


def check_wellformed(t: ProcessTemplate,
                     with_condition_a: bool = False) -> list[WellFormednessViolation]:
    """Check the token-ring template conditions; empty result means well formed.

    Conditions (i) through (vii) are always checked; (a) (sending states
    ignore their inputs) only on request.
    """
    bad: list[WellFormednessViolation] = []
    states = range(t.n_states)
    non_token = [q for q in states if q not in t.token_states]

    if not t.token_states or not non_token or \
            any(q >= t.n_states for q in t.token_states):
        bad.append(WellFormednessViolation(
            "i", f"token states {sorted(t.token_states)} do not split "
                 f"{t.n_states} states into two nonempty classes"))
    if t.initial_token not in t.token_states:
        bad.append(WellFormednessViolation(
            "ii", f"initial token state {t.initial_token} lacks the token"))
    if t.initial_notoken in t.token_states:
        bad.append(WellFormednessViolation(
            "ii", f"initial non-token state {t.initial_notoken} has the token"))
    for q in non_token:
        if t.sends(q):
            bad.append(WellFormednessViolation(
                "iii", f"non-token state {q} emits SEND"))
    for (q, letter), targets in sorted(t.delta.items(),
                                       key=lambda kv: (kv[0][0], sorted(kv[0][1]))):
        rcv = "RCV" in letter
        for q2 in targets:
            if t.sends(q) and t.has_token(q) and t.has_token(q2):
                bad.append(WellFormednessViolation(
                    "iv", f"sending transition {q} -> {q2} keeps the token"))
            # receiving transitions from sending states only exist as the
            # input-independence redirect; they fall under (iv) above
            if rcv and not t.sends(q) and \
                    not (not t.has_token(q) and t.has_token(q2)):
                bad.append(WellFormednessViolation(
                    "v", f"receiving transition {q} -> {q2} on {sorted(letter)}"))
            if not t.sends(q) and not rcv and t.has_token(q) != t.has_token(q2):
                bad.append(WellFormednessViolation(
                    "vi", f"internal transition {q} -> {q2} changes token "
                          f"possession"))
    for q in states:
        for letter in t.letter_space():
            needs = (q not in t.token_states) or ("RCV" not in letter)
            if needs and not t.successors(q, letter):
                bad.append(WellFormednessViolation(
                    "vii", f"state {q} has no successor for input {sorted(letter)}"))
    if with_condition_a:
        for q in states:
            if t.sends(q):
                targets = {q2 for (src, _), ts in t.delta.items() if src == q
                           for q2 in ts}
                if len(targets) != 1:
                    bad.append(WellFormednessViolation(
                        "a", f"sending state {q} has successors {sorted(targets)}"))
    return bad


def minimal_token_template(extra_outputs: Iterable[str] = (),
                           inputs: Iterable[str] = ()) -> ProcessTemplate:
    """Two-state template that passes the token on immediately.

    State 1 holds the token and sends; state 0 idles until RCV arrives.
    Useful as a fixture and as the simplest well-formed template.
    """
    ins = tuple(inputs) + ("RCV",)
    outs = tuple(extra_outputs) + ("TOK", "SEND")
    delta = {}
    for letter in letters_over(ins):
        if "RCV" in letter:
            delta[(0, letter)] = (1,)
        else:
            delta[(0, letter)] = (0,)
            delta[(1, letter)] = (0,)
    return ProcessTemplate(
        inputs=ins, outputs=outs, n_states=2,
        token_states=frozenset({1}), initial_token=1, initial_notoken=0,
        labels=(frozenset(), frozenset({"TOK", "SEND"})),
        delta=delta)


# ---------------------------------------------------------------------------
# Ring composition


@dataclass(frozen=True)
class RunStep:
    """One position of a system run."""

    state: tuple[int, ...]
    global_inputs: frozenset
    local_inputs: tuple[Letter, ...]  # per process, RCV included when delivered
    sched: frozenset


@dataclass
class SystemRun:
    """Ultimately periodic run: steps[loop_start:] repeat forever."""

    steps: list[RunStep]
    loop_start: int

    def __post_init__(self) -> None:
        if not 0 <= self.loop_start < len(self.steps):
            raise ValueError("loop start out of range")


class Ring:
    """Token ring of deterministic templates around a unidirectional cycle.

    ``templates[v]`` runs at vertex v; for the combined system of a special
    0-process, pass that template at index 0 and the uniform one elsewhere.
    """

    def __init__(self, templates: Sequence[ProcessTemplate], config: RingConfig):
        if len(templates) != config.size:
            raise ValueError("one template per ring vertex required")
        for v, t in enumerate(templates):
            if not t.is_deterministic():
                raise ValueError(
                    f"composition requires input-deterministic templates; "
                    f"vertex {v} is nondeterministic")
        sig = {(t.inputs, t.outputs) for t in templates}
        if len(sig) != 1:
            raise ValueError("all templates must share the same signature")
        self.templates = tuple(templates)
        self.config = config
        self.n = config.size
        self.local_input_names = tuple(
            s for s in templates[0].inputs if s != "RCV")

    def initial_states(self) -> list[tuple[int, ...]]:
        """All global initial states: exactly one process holds the token."""
        out = []
        for holder in range(self.n):
            out.append(tuple(
                t.initial_token if v == holder else t.initial_notoken
                for v, t in enumerate(self.templates)))
        return out

    def token_position(self, state: tuple[int, ...]) -> int:
        holders = [v for v, q in enumerate(state)
                   if self.templates[v].has_token(q)]
        if len(holders) != 1:
            raise ValueError(f"global state {state} holds {len(holders)} tokens")
        return holders[0]

    def _scheduling_sets(self, sender: int | None) -> Iterator[frozenset]:
        n = self.n
        timing = self.config.timing
        if timing == "synchronous":
            yield frozenset(range(n))
        elif timing == "interleaving":
            for v in range(n):
                if v != sender:
                    yield frozenset({v})
            if sender is not None:
                yield frozenset({sender, (sender + 1) % n})
        else:
            for bits in range(1 << n):
                yield frozenset(v for v in range(n) if (bits >> v) & 1)

    def successors(self, state: tuple[int, ...],
                   inputs: Sequence[Letter]) -> list[tuple[tuple[int, ...], frozenset]]:
        """All (next state, scheduled set) under one system input letter.

        ``inputs[v]`` is the letter for process v over its non-RCV inputs
        (global inputs included); RCV is derived from token passing.
        """
        holder = self.token_position(state)
        sender = holder if self.templates[holder].sends(state[holder]) else None
        out = []
        for sched in self._scheduling_sets(sender):
            if sender is not None and sender in sched:
                receiver = (sender + 1) % self.n
                if receiver not in sched:
                    continue  # the send cannot fire without its receiver
                step = self._step(state, inputs, sched, receiver)
            else:
                step = self._step(state, inputs, sched, None)
            if step is not None:
                out.append((step, sched))
        return out

    def _step(self, state, inputs, sched, receiver):
        nxt = list(state)
        for v in sched:
            letter = inputs[v] | {"RCV"} if v == receiver else inputs[v] - {"RCV"}
            targets = self.templates[v].successors(state[v], frozenset(letter))
            if not targets:
                return None
            nxt[v] = targets[0]
        return tuple(nxt)

    def local_letter(self, inputs: Sequence[Letter], v: int,
                     receiver: int | None) -> Letter:
        if v == receiver:
            return frozenset(inputs[v] | {"RCV"})
        return frozenset(inputs[v] - {"RCV"})


# ---------------------------------------------------------------------------
# Run semantics


def project_local_run(run: SystemRun, j: int) -> list[tuple[int, Letter]]:
    """Local run of process j: the positions where j is scheduled.

    Each kept position maps to (local state, local input letter including
    global inputs).
    """
    out = []
    for step in run.steps:
        if j in step.sched:
            out.append((step.state[j],
                        frozenset(step.local_inputs[j] | step.global_inputs)))
    return out


def _ground_letter_full(step: RunStep, templates) -> frozenset:
    """Every ground atom that holds at a step, over all processes."""
    atoms = set(step.global_inputs)
    for v, q in enumerate(step.state):
        for name in templates[v].output_label(q):
            atoms.add(f"{name}_{v}")
        for name in step.local_inputs[v]:
            atoms.add(f"{name}_{v}")
    for v in step.sched:
        atoms.add(f"SCH_{v}")
    return frozenset(atoms)


def _ground_letter_local(step: RunStep, templates, j: int) -> frozenset:
    atoms = set(step.global_inputs)
    q = step.state[j]
    for name in templates[j].output_label(q):
        atoms.add(f"{name}_{j}")
    for name in step.local_inputs[j]:
        atoms.add(f"{name}_{j}")
    return frozenset(atoms)


def _project_lasso(run: SystemRun, keep) -> tuple[list, list] | None:
    """Split kept positions into (prefix letters, loop letters)."""
    prefix, loop = [], []
    for pos, letter in enumerate(keep):
        if letter is None:
            continue
        (prefix if pos < run.loop_start else loop).append(letter)
    if not loop:
        return None
    return prefix, loop


def eval_indexed(run: SystemRun, templates: Sequence[ProcessTemplate],
                 prop, assignment: Mapping[str, int] | None = None,
                 assumptions: Sequence = (), fairsched: bool = True) -> bool:
    """Evaluate a quantified property on an ultimately periodic run.

    One-indexed bodies are evaluated on the local (projected) run of the
    assigned process; two-indexed and unquantified bodies on the full
    output sequence.  When assumptions are given, the result is the
    implication (all assumptions hold) -> (body holds); FairSched is the
    built-in assumption that every process is scheduled infinitely often.
    """
    n = len(run.steps[0].state)
    if fairsched:
        loop_sched = set()
        for step in run.steps[run.loop_start:]:
            loop_sched |= step.sched
        if loop_sched != set(range(n)):
            return True  # unfair run: implication holds vacuously
    for ass in assumptions:
        if not _holds_everywhere(run, templates, ass, n):
            return True
    return _holds(run, templates, prop, assignment or {}, n)


def _holds_everywhere(run, templates, prop, n: int) -> bool:
    if prop.quantifier == "forall_i":
        return all(_holds(run, templates, prop, {"i": v}, n) for v in range(n))
    if prop.quantifier == "forall_i_ne0":
        return all(_holds(run, templates, prop, {"i": v}, n) for v in range(1, n))
    if prop.quantifier == "forall_ij":
        return all(_holds(run, templates, prop, {"i": v, "j": w}, n)
                   for v in range(n) for w in range(n) if v != w)
    if prop.quantifier == "zero_only":
        return _holds(run, templates, prop, {}, n)
    return _holds(run, templates, prop, {}, n)


def _holds(run, templates, prop, assignment, n: int) -> bool:
    body = ltl.substitute_index(ltl.expand_counted_until(prop.body), assignment, n)
    if prop.quantifier in ("forall_i", "forall_i_ne0"):
        j = assignment["i"]
    elif prop.quantifier == "zero_only":
        j = 0
    else:
        j = None

    if prop.quantifier == "forall_ij" or j is None:
        if prop.quantifier == "forall_ij" and ltl.has_next(body):
            raise ValueError(f"{prop.name}: two-indexed properties must be X-free")
        letters = [_ground_letter_full(step, templates) for step in run.steps]
        return ltl.evaluate_lasso(body, letters[:run.loop_start],
                                  letters[run.loop_start:])

    keep = [_ground_letter_local(step, templates, j) if j in step.sched else None
            for step in run.steps]
    lasso = _project_lasso(run, keep)
    if lasso is None:
        raise ValueError(f"process {j} is never scheduled in the loop")
    prefix, loop = lasso
    if prop.temporal_class == "initial":
        # initial-class constraints look at the first local position only
        first = (prefix + loop)[0]
        return ltl.evaluate_lasso(body, [], [first])
    return ltl.evaluate_lasso(body, prefix, loop)


# ---------------------------------------------------------------------------
# Serialization


def template_to_json(t: ProcessTemplate) -> str:
    doc = {
        "inputs": list(t.inputs),
        "outputs": list(t.outputs),
        "states": [
            {"id": q, "token": q in t.token_states,
             "outputs": sorted(t.labels[q])}
            for q in range(t.n_states)
        ],
        "initial": {"token": t.initial_token, "no_token": t.initial_notoken},
        "transitions": [
            {"from": q, "on": sorted(letter), "to": list(targets)}
            for (q, letter), targets in sorted(
                t.delta.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1])))
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def template_from_json(text: str) -> ProcessTemplate:
    doc = json.loads(text)
    labels = {}
    token = set()
    for st in doc["states"]:
        labels[st["id"]] = frozenset(st["outputs"])
        if st["token"]:
            token.add(st["id"])
    n = len(doc["states"])
    delta: dict[tuple[int, Letter], tuple[int, ...]] = {}
    for tr in doc["transitions"]:
        key = (tr["from"], frozenset(tr["on"]))
        delta[key] = tuple(tr["to"])
    return ProcessTemplate(
        inputs=tuple(doc["inputs"]), outputs=tuple(doc["outputs"]),
        n_states=n, token_states=frozenset(token),
        initial_token=doc["initial"]["token"],
        initial_notoken=doc["initial"]["no_token"],
        labels=tuple(labels[q] for q in range(n)),
        delta=delta)


def _merge_cubes(letters: list[Letter], signals: Sequence[str]) -> list[dict]:
    """Greedy cube merging so edge labels only mention decisive inputs."""
    cubes = [{s: (s in letter) for s in signals} for letter in letters]
    changed = True
    while changed:
        changed = False
        for a, b in itertools.combinations(range(len(cubes)), 2):
            ca, cb = cubes[a], cubes[b]
            if ca.keys() != cb.keys():
                continue
            diff = [s for s in ca if ca[s] != cb[s]]
            if len(diff) == 1:
                merged = {s: v for s, v in ca.items() if s != diff[0]}
                cubes = [c for k, c in enumerate(cubes) if k not in (a, b)]
                cubes.append(merged)
                changed = True
                break
    return cubes


def _cube_text(cube: dict) -> str:
    if not cube:
        return "true"
    return " & ".join(("" if v else "!") + s for s, v in sorted(cube.items()))


def template_to_dot(t: ProcessTemplate, name: str = "template") -> str:
    """GraphViz rendering: state labels list active outputs, edge labels
    list only the decisive inputs (missing inputs are don't-care)."""
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for q in range(t.n_states):
        shape = "doublecircle" if q in t.token_states else "circle"
        outs = ",".join(sorted(t.labels[q] - {"TOK"})) or "-"
        style = ' style=bold' if q in (t.initial_token, t.initial_notoken) else ""
        lines.append(f'  q{q} [shape={shape}{style} label="t{q}\\n{outs}"];')
    grouped: dict[tuple[int, int], list[Letter]] = {}
    for (q, letter), targets in t.delta.items():
        for q2 in targets:
            grouped.setdefault((q, q2), []).append(letter)
    for (q, q2), letter_list in sorted(grouped.items()):
        cubes = _merge_cubes(letter_list, t.inputs)
        text = " | ".join(sorted(_cube_text(c) for c in cubes))
        lines.append(f'  q{q} -> q{q2} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
