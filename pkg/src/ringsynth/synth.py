"""Bounded synthesis: SMT constraint generation, bound iteration, and
model extraction.

The search space is a Moore template with ``bound`` states encoded as
bounded integers: an uninterpreted transition function over explicit input
letters, one boolean output function per signal, and a ranking function
over the product with the automaton of the negated general-part
specification.  Invariants over current inputs become premises of every
rule; invariants over current/next outputs become direct constraints per
(state, letter); everything else rides the automaton.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import automata, ltl, smt
from .automata import Nba, label_satisfied, ltl_to_nba, tarjan_sccs, union
from .ltl import And, Atom, Formula, Globally, Not, SignalRef
from .ring import Letter, ProcessTemplate, check_wellformed, letters_over
from .smt import Declaration
from .transforms import ENV_NORCV_NAME, HubProp, HubSpec

__all__ = [
    "SynthesisInstance", "PinnedPrefix", "CandidateModel", "SynthesisError",
    "EncodingSoundnessError", "build_instance", "build_core_constraints",
    "build_direct_guarantees", "build_pin_constraints", "build_structure_constraints",
    "all_constraints", "declarations", "extract_template", "synthesize_loop",
    "SynthResult", "general_part_nba", "product_has_accepting_lasso",
]


class SynthesisError(RuntimeError):
    pass


class EncodingSoundnessError(SynthesisError):
    """A solver model slipped past the encoding's intent; always a bug."""


@dataclass(frozen=True)
class PinnedPrefix:
    """A previously synthesized template to keep fixed at the next stage.

    Outputs are asserted on every pinned state; transitions only for
    letters satisfying the assumption the template was synthesized under,
    so behavior outside it stays free.
    """

    template: ProcessTemplate
    previous_alpha: Formula | None  # boolean input constraint, None pins all


@dataclass(frozen=True)
class CandidateModel:
    outputs: dict            # (signal, state) -> bool
    delta: dict              # (state, letter index) -> state
    rho: dict                # (nba state, template state) -> int


@dataclass
class SynthesisInstance:
    """One bounded-synthesis query."""

    hub: HubSpec
    bound: int
    nba: Nba
    letters: list[Letter]
    alpha_letters: list[int]         # indices of letters all alphas allow
    betas: list[HubProp]
    hardcode_token: bool = True
    condition_a: bool = True
    pinned: PinnedPrefix | None = None

    def __post_init__(self) -> None:
        if self.bound < 2:
            raise SynthesisError("bound must be at least 2: a template needs "
                                 "a token and a non-token state")
        if self.pinned and self.pinned.template.n_states > self.bound:
            raise SynthesisError("pinned template larger than the bound")

    # -- derived naming ----------------------------------------------------

    @property
    def rho_max(self) -> int:
        return self.bound * max(1, self.nba.n_states)

    def out_name(self, signal: str) -> str:
        return f"out_{signal}"

    def free_outputs(self) -> list[str]:
        outs = [s for s in self.hub.outputs if s != "TOK"] \
            if self.hardcode_token else list(self.hub.outputs)
        return outs

    def has_token(self, q: int):
        """True/False when hardcoded, an s-expression otherwise."""
        if self.hardcode_token:
            return q != 0
        return [self.out_name("TOK"), q]

    def rcv_index(self) -> int:
        return self.hub.inputs.index("RCV")


# ---------------------------------------------------------------------------
# General-part automaton


def _alpha_literal_substitution(alphas: list[HubProp]) -> dict[str, bool]:
    """Atom values forced by alpha assumptions that are literal conjunctions."""
    forced: dict[str, bool] = {}
    for prop in alphas:
        body = prop.formula.sub if isinstance(prop.formula, Globally) else None
        if body is None:
            continue
        stack = [body]
        lits = []
        ok = True
        while stack:
            f = stack.pop()
            match f:
                case And(l, r):
                    stack.extend((l, r))
                case Atom(ref):
                    lits.append((ref.name, True))
                case Not(Atom(ref)):
                    lits.append((ref.name, False))
                case _:
                    ok = False
                    break
        if ok:
            for name, value in lits:
                forced[name] = value
    return forced


def _specialize(f: Formula, forced: dict[str, bool]) -> Formula:
    if not forced:
        return ltl.simplify(f)

    def fn(ref: SignalRef) -> Formula:
        if ref.name in forced:
            return ltl.TRUE if forced[ref.name] else ltl.FALSE
        return Atom(ref)

    return ltl.simplify(ltl.map_atoms(f, fn))


def general_part_nba(hub: HubSpec, direct: bool = True,
                     hardcode_token: bool = True,
                     extra_alpha: Formula | None = None) -> Nba:
    """Automaton of the negated general-part specification.

    The negated implication pair splits into one branch per general
    guarantee (guards and one negated guarantee each); branch automata are
    unioned, which keeps the tableau small.  With the direct encoding
    enabled, alpha assumptions and beta guarantees leave the formula (they
    become rule premises and per-state constraints instead).
    """
    env = list(hub.env_assumptions)
    if hardcode_token:
        env = [p for p in env if p.name != ENV_NORCV_NAME]

    def keep_guard(p: HubProp) -> bool:
        return not (direct and p.cls == "alpha")

    def keep_guarantee(p: HubProp) -> bool:
        return not (direct and p.cls == "beta")

    tr_guard = [p.formula for p in env + list(hub.tr_guard) if keep_guard(p)]
    gua_guard = [p.formula for p in env + list(hub.gua_guard) if keep_guard(p)]
    if extra_alpha is not None and not direct:
        g = extra_alpha if isinstance(extra_alpha, Globally) else Globally(extra_alpha)
        tr_guard.append(g)
        gua_guard.append(g)
    tr_goals = [p for p in hub.tr_guarantees if keep_guarantee(p)]
    gua_goals = [p for p in hub.guarantees if keep_guarantee(p)]
    if hardcode_token and direct:
        tr_goals = [p for p in tr_goals if p.name not in ("TR1", "TR2", "TR3")]

    forced: dict[str, bool] = {}
    if direct:
        # with alphas as premises the input letters are restricted anyway,
        # so their literals partially evaluate the remaining formulas
        alpha_props = [p for p in hub.tr_guard if p.cls == "alpha"]
        if extra_alpha is not None:
            g = extra_alpha if isinstance(extra_alpha, Globally) \
                else Globally(extra_alpha)
            alpha_props = alpha_props + [HubProp("PHASE", g, "alpha", "invariant_G")]
        forced = _alpha_literal_substitution(alpha_props)

    def component(f: Formula) -> Nba | None:
        f = _specialize(f, forced)
        f = ltl.simplify(ltl.to_nnf(ltl.expand_counted_until(f)))
        if isinstance(f, ltl.TrueF):
            return None   # no constraint
        return ltl_to_nba(f)

    def chain(parts: list[Nba], atoms: tuple[str, ...]) -> Nba:
        """Pairwise intersection, smallest first, reducing in between;
        a monolithic tableau blows up on stacked fairness conjuncts."""
        if not parts:
            return automata.intersect([], atoms)
        acc = None
        for part in sorted(parts, key=lambda a: a.n_states):
            acc = part if acc is None else automata.reduce_nba(
                automata.intersect([acc, part], atoms))
        return acc

    branches = []
    atoms: set[str] = set()
    for guards, goals in ((tr_guard, tr_goals), (gua_guard, gua_goals)):
        guard_nbas = [a for a in (component(g) for g in guards) if a is not None]
        for part in guard_nbas:
            atoms.update(part.atoms)
        goal_nbas = []
        for goal in goals:
            neg = component(Not(goal.formula))
            if neg is not None:
                atoms.update(neg.atoms)
            goal_nbas.append(neg)
        guard_product = chain(guard_nbas, tuple(sorted(atoms)))
        for neg in goal_nbas:
            parts = [guard_product] + ([neg] if neg is not None else [])
            branch = chain(parts, tuple(sorted(atoms)))
            if branch.n_states:
                branches.append(branch)
    merged = union(branches, tuple(sorted(atoms)))
    return automata.reduce_nba(merged)


# ---------------------------------------------------------------------------
# Instance construction


def build_instance(hub: HubSpec, bound: int, direct: bool = True,
                   hardcode_token: bool = True, condition_a: bool = True,
                   pinned: PinnedPrefix | None = None,
                   extra_alpha: Formula | None = None) -> SynthesisInstance:
    """Assemble one query: automaton, letters, direct constraints.

    ``extra_alpha`` is an additional invariant over inputs (a synthesis
    phase assumption); it filters the input letters and, like every alpha,
    strengthens the premises.
    """
    if extra_alpha is not None:
        bad = [r.name for r in ltl.atoms_of(extra_alpha)
               if r.name not in hub.inputs]
        if bad:
            raise SynthesisError(f"phase assumption mentions non-inputs: {bad}")

    letters = letters_over(hub.inputs)
    alphas = []
    if direct:
        alphas = [p.formula.sub for p in hub.tr_guard if p.cls == "alpha"]
        if extra_alpha is not None:
            g = extra_alpha.sub if isinstance(extra_alpha, Globally) else extra_alpha
            alphas.append(g)
    alpha_letters = [idx for idx, letter in enumerate(letters)
                     if all(_bool_eval(a, letter) for a in alphas)]

    betas = []
    if direct:
        betas = [p for p in hub.tr_guarantees + hub.guarantees if p.cls == "beta"]
        if hardcode_token:
            betas = [p for p in betas if p.name not in ("TR1", "TR2", "TR3")]

    nba = general_part_nba(hub, direct=direct, hardcode_token=hardcode_token,
                           extra_alpha=extra_alpha)
    return SynthesisInstance(
        hub=hub, bound=bound, nba=nba, letters=letters,
        alpha_letters=alpha_letters, betas=betas,
        hardcode_token=hardcode_token, condition_a=condition_a, pinned=pinned)


def _bool_eval(f: Formula, letter: Letter) -> bool:
    """Evaluate a boolean (temporal-free) formula over an input letter."""
    match f:
        case Atom(ref):
            return ref.name in letter
        case ltl.TrueF():
            return True
        case ltl.FalseF():
            return False
        case Not(s):
            return not _bool_eval(s, letter)
        case And(l, r):
            return _bool_eval(l, letter) and _bool_eval(r, letter)
        case ltl.Or(l, r):
            return _bool_eval(l, letter) or _bool_eval(r, letter)
        case ltl.Implies(l, r):
            return (not _bool_eval(l, letter)) or _bool_eval(r, letter)
        case ltl.Iff(l, r):
            return _bool_eval(l, letter) == _bool_eval(r, letter)
    raise SynthesisError(f"not a boolean input formula: {f!r}")


# ---------------------------------------------------------------------------
# Constraint generation


def declarations(inst: SynthesisInstance) -> list[Declaration]:
    b = inst.bound
    decls = [Declaration(
        "delta", ("Int", "Int"), "Int",
        domain=tuple((q, li) for q in range(b) for li in range(len(inst.letters))),
        int_range=(0, b - 1))]
    for signal in inst.free_outputs():
        decls.append(Declaration(
            inst.out_name(signal), ("Int",), "Bool",
            domain=tuple((q,) for q in range(b))))
    if inst.nba.n_states:
        decls.append(Declaration(
            "rho", ("Int", "Int"), "Int",
            domain=tuple((a, q) for a in range(inst.nba.n_states)
                         for q in range(b)),
            int_range=(-1, inst.rho_max)))
    return decls


def _range_assertions(inst: SynthesisInstance) -> list:
    out = []
    b = inst.bound
    for q in range(b):
        for li in range(len(inst.letters)):
            t = ["delta", q, li]
            out.append(["and", ["<=", 0, t], ["<=", t, b - 1]])
    for a in range(inst.nba.n_states):
        for q in range(b):
            t = ["rho", a, q]
            out.append(["and", ["<=", -1, t], ["<=", t, inst.rho_max]])
    for signal in inst.free_outputs():
        for q in range(b):
            t = [inst.out_name(signal), q]
            out.append(["or", t, ["not", t]])  # keeps the model total
    return out


def _skip_pair(inst: SynthesisInstance, q: int, letter: Letter) -> bool:
    """Hardcoded-token mode never constrains receive letters in token states;
    those transitions do not exist in the extracted template."""
    return inst.hardcode_token and q != 0 and "RCV" in letter


def _out_term(inst: SynthesisInstance, signal: str, state_term):
    if signal == "TOK" and inst.hardcode_token:
        if isinstance(state_term, int):
            return state_term != 0
        raise SynthesisError("hardcoded TOK applied to a symbolic state")
    return [inst.out_name(signal), state_term]


def _literal_term(inst: SynthesisInstance, name: str, wanted: bool,
                  letter: Letter, state_term):
    """Premise piece for one label literal; True/False when decided."""
    if name in inst.hub.inputs:
        return (name in letter) == wanted
    term = _out_term(inst, name, state_term)
    if isinstance(term, bool):
        return term == wanted
    return term if wanted else ["not", term]


def build_core_constraints(inst: SynthesisInstance) -> list:
    """Ranking rules over the product of the automaton with the unknown
    template, plus initial reachability.

    For every template state and automaton edge read under a permitted
    input letter: if the pair is reachable and the edge's output literals
    match the state's labeling, the successor pair's rank must not drop
    (strictly rising into accepting states)."""
    out = []
    nba = inst.nba
    for a0 in sorted(nba.initial):
        for q0 in (1, 0):
            out.append([">=", ["rho", a0, q0], 0])
    edge_list = sorted(
        ((a, lbl, bb) for a, lbl, bb in nba.edges),
        key=lambda e: (e[0], e[2], sorted(e[1])))
    for q in range(inst.bound):
        for li in inst.alpha_letters:
            letter = inst.letters[li]
            if _skip_pair(inst, q, letter):
                continue
            succ_term = ["delta", q, li]
            for a, label, bb in edge_list:
                premise = [[">=", ["rho", a, q], 0]]
                dead = False
                for name, wanted in sorted(label):
                    piece = _literal_term(inst, name, wanted, letter, q)
                    if piece is False:
                        dead = True
                        break
                    if piece is not True:
                        premise.append(piece)
                if dead:
                    continue
                op = ">" if bb in nba.accepting else ">="
                rank_next = ["rho", bb, succ_term]
                out.append(["=>", ["and", *premise] if len(premise) > 1 else premise[0],
                            [op, rank_next, ["rho", a, q]]])
    return out


def _formula_to_beta_sexpr(inst: SynthesisInstance, f: Formula, letter: Letter,
                           q: int, succ_term):
    """Ground a beta body at (state, letter): inputs become constants,
    current outputs bits of q, next outputs bits of the successor."""

    def conv(g: Formula):
        match g:
            case Atom(ref):
                if ref.name in inst.hub.inputs:
                    return ref.name in letter
                return _out_term(inst, ref.name, q)
            case ltl.Next(Atom(ref)):
                if inst.hardcode_token and ref.name == "TOK":
                    # hardcoded partition: holding the token = not state 0
                    return [">=", succ_term, 1]
                return _out_term(inst, ref.name, succ_term)
            case ltl.Next(Not(Atom(ref))):
                inner = conv(ltl.Next(Atom(ref)))
                return _negate(inner)
            case ltl.TrueF():
                return True
            case ltl.FalseF():
                return False
            case Not(s):
                return _negate(conv(s))
            case And(l, r):
                return _binop("and", conv(l), conv(r))
            case ltl.Or(l, r):
                return _binop("or", conv(l), conv(r))
            case ltl.Implies(l, r):
                return _binop("or", _negate(conv(l)), conv(r))
            case ltl.Iff(l, r):
                a, b = conv(l), conv(r)
                if isinstance(a, bool):
                    return b if a else _negate(b)
                if isinstance(b, bool):
                    return a if b else _negate(a)
                return ["=", a, b]
        raise SynthesisError(f"formula {g!r} is not in the beta fragment")

    return conv(f)


def _negate(x):
    if isinstance(x, bool):
        return not x
    return ["not", x]


def _binop(op: str, a, b):
    if op == "and":
        if a is False or b is False:
            return False
        if a is True:
            return b
        if b is True:
            return a
        return ["and", a, b]
    if a is True or b is True:
        return True
    if a is False:
        return b
    if b is False:
        return a
    return ["or", a, b]


def build_direct_guarantees(inst: SynthesisInstance) -> list:
    """One constraint per (beta guarantee, state, permitted letter)."""
    out = []
    for prop in inst.betas:
        body = prop.formula.sub  # strip the G
        for q in range(inst.bound):
            for li in inst.alpha_letters:
                letter = inst.letters[li]
                if _skip_pair(inst, q, letter):
                    continue
                term = _formula_to_beta_sexpr(inst, body, letter, q,
                                              ["delta", q, li])
                if term is True:
                    continue
                if term is False:
                    out.append("false")
                    continue
                if not inst.hardcode_token and "RCV" in letter:
                    # receive letters only matter in non-token states
                    term = ["=>", _negate(_out_term(inst, "TOK", q)), term]
                out.append(term)
    return out


def build_structure_constraints(inst: SynthesisInstance) -> list:
    """Token bookkeeping: the conditions that make any model a well-formed
    ring template, independent of the specification."""
    out = []
    b = inst.bound
    send = lambda q: [inst.out_name("SEND"), q]
    rcv_letters = [li for li, letter in enumerate(inst.letters) if "RCV" in letter]
    plain_letters = [li for li, letter in enumerate(inst.letters)
                     if "RCV" not in letter]
    if inst.hardcode_token:
        out.append(["not", send(0)])
        for li in plain_letters:
            out.append(["=", ["delta", 0, li], 0])
        for li in rcv_letters:
            out.append([">=", ["delta", 0, li], 1])
        for q in range(1, b):
            for li in plain_letters:
                out.append(["=>", send(q), ["=", ["delta", q, li], 0]])
                out.append(["=>", ["not", send(q)], [">=", ["delta", q, li], 1]])
        # the unique-successor requirement in sending states holds by
        # construction: every plain letter moves to the non-token state
        return out

    tok = lambda q: [inst.out_name("TOK"), q]
    out.append(["not", tok(0)])
    out.append(tok(1))
    for q in range(b):
        out.append(["=>", send(q), tok(q)])
        for li in plain_letters:
            nxt_tok = [inst.out_name("TOK"), ["delta", q, li]]
            out.append(["=>", send(q), ["not", nxt_tok]])
            out.append(["=>", ["and", tok(q), ["not", send(q)]], nxt_tok])
            out.append(["=>", ["not", tok(q)], ["not", nxt_tok]])
        for li in rcv_letters:
            nxt_tok = [inst.out_name("TOK"), ["delta", q, li]]
            out.append(["=>", ["not", tok(q)], nxt_tok])
        if inst.condition_a and plain_letters:
            first = ["delta", q, plain_letters[0]]
            for li in plain_letters[1:]:
                out.append(["=>", send(q), ["=", ["delta", q, li], first]])
    return out


def build_pin_constraints(inst: SynthesisInstance) -> list:
    """Freeze a previously synthesized template: all outputs, and the
    transitions for letters inside the previous phase assumption."""
    if inst.pinned is None:
        return []
    out = []
    t = inst.pinned.template
    alpha = inst.pinned.previous_alpha
    for q in range(t.n_states):
        for signal in inst.free_outputs():
            term = [inst.out_name(signal), q]
            want = signal in t.labels[q] or (signal == "TOK" and t.has_token(q))
            out.append(term if want else ["not", term])
    for li, letter in enumerate(inst.letters):
        if alpha is not None and not _bool_eval(alpha, letter):
            continue
        for q in range(t.n_states):
            targets = t.successors(q, letter)
            if targets:
                out.append(["=", ["delta", q, li], targets[0]])
    return out


def all_constraints(inst: SynthesisInstance) -> list:
    return (_range_assertions(inst)
            + build_structure_constraints(inst)
            + build_pin_constraints(inst)
            + build_core_constraints(inst)
            + build_direct_guarantees(inst))


# ---------------------------------------------------------------------------
# Extraction and the independent re-checks


def extract_template(values: dict, inst: SynthesisInstance) -> ProcessTemplate:
    """Turn a parsed model into a Moore template and validate it."""
    b = inst.bound
    if inst.hardcode_token:
        token_states = frozenset(range(1, b))
    else:
        token_states = frozenset(
            q for q in range(b) if values[(inst.out_name("TOK"), q)])
    labels = []
    for q in range(b):
        active = {s for s in inst.free_outputs()
                  if values[(inst.out_name(s), q)] and s != "TOK"}
        if q in token_states:
            active.add("TOK")
        labels.append(frozenset(active))
    delta = {}
    for q in range(b):
        for li, letter in enumerate(inst.letters):
            if q in token_states and "RCV" in letter:
                continue  # no receive transitions while holding the token
            target = values[("delta", q, li)]
            if not 0 <= target < b:
                raise EncodingSoundnessError(
                    f"delta({q},{li}) = {target} is out of range")
            delta[(q, letter)] = (target,)
    template = ProcessTemplate(
        inputs=inst.hub.inputs, outputs=inst.hub.outputs, n_states=b,
        token_states=token_states, initial_token=1, initial_notoken=0,
        labels=tuple(labels), delta=delta)
    violations = check_wellformed(template, with_condition_a=inst.condition_a)
    if violations:
        raise EncodingSoundnessError(
            "extracted model is not a well-formed template: "
            + "; ".join(str(v) for v in violations))
    return template


def product_has_accepting_lasso(template: ProcessTemplate,
                                inst: SynthesisInstance) -> bool:
    """Explicit search of the automaton x template product; independent of
    the ranking encoding and of the solver."""
    nba = inst.nba
    by_state: dict[int, list] = {}
    for a, lbl, bb in nba.edges:
        by_state.setdefault(a, []).append((lbl, bb))

    def successors(node):
        a, q = node
        for li in inst.alpha_letters:
            letter = inst.letters[li]
            targets = template.successors(q, letter)
            if not targets:
                continue
            word_letter = frozenset(letter | template.output_label(q))
            for lbl, bb in by_state.get(a, ()):
                if label_satisfied(lbl, word_letter):
                    yield (bb, targets[0])

    start = [(a0, q0) for a0 in nba.initial for q0 in (1, 0)]
    reach = set()
    stack = list(start)
    while stack:
        node = stack.pop()
        if node in reach:
            continue
        reach.add(node)
        stack.extend(successors(node))
    for comp in tarjan_sccs(sorted(reach), lambda n: successors(n)):
        cyclic = len(comp) > 1 or comp[0] in successors(comp[0])
        if cyclic and any(a in nba.accepting for a, _ in comp):
            return True
    return False


def recheck_betas(template: ProcessTemplate, inst: SynthesisInstance) -> list[str]:
    """Direct evaluation of every beta on the extracted template."""
    bad = []
    for prop in inst.betas:
        body = prop.formula.sub
        for q in range(template.n_states):
            for li in inst.alpha_letters:
                letter = inst.letters[li]
                if q in template.token_states and "RCV" in letter:
                    continue
                targets = template.successors(q, letter)
                if not targets:
                    continue
                if not _eval_beta(body, letter, template.output_label(q),
                                  template.output_label(targets[0])):
                    bad.append(f"{prop.name} at state {q}, "
                               f"letter {sorted(letter)}")
    return bad


def _eval_beta(f: Formula, letter: Letter, now: frozenset, nxt: frozenset) -> bool:
    match f:
        case Atom(ref):
            return ref.name in letter or ref.name in now
        case ltl.Next(Atom(ref)):
            return ref.name in nxt
        case ltl.Next(Not(Atom(ref))):
            return ref.name not in nxt
        case ltl.TrueF():
            return True
        case ltl.FalseF():
            return False
        case Not(s):
            return not _eval_beta(s, letter, now, nxt)
        case And(l, r):
            return _eval_beta(l, letter, now, nxt) and _eval_beta(r, letter, now, nxt)
        case ltl.Or(l, r):
            return _eval_beta(l, letter, now, nxt) or _eval_beta(r, letter, now, nxt)
        case ltl.Implies(l, r):
            return (not _eval_beta(l, letter, now, nxt)) \
                or _eval_beta(r, letter, now, nxt)
        case ltl.Iff(l, r):
            return _eval_beta(l, letter, now, nxt) == _eval_beta(r, letter, now, nxt)
    raise SynthesisError(f"not a beta body: {f!r}")


# ---------------------------------------------------------------------------
# The bound-iteration loop


@dataclass
class SynthResult:
    status: str                      # ok | no_model | solver_failure
    template: ProcessTemplate | None = None
    bound: int = 0
    detail: str = ""
    timings: list[tuple[int, float, str]] = field(default_factory=list)


def _solve_one(inst: SynthesisInstance, command, timeout) -> tuple[str, object]:
    decls = declarations(inst)
    asserts = all_constraints(inst)
    script = smt.emit_smtlib(asserts, decls)
    result = smt.run_solver(script, command=command, timeout=timeout)
    if result.kind == "sat":
        values = smt.parse_model(result.model_text, decls)
        bad = smt.check_model(asserts, values)
        if bad:
            raise EncodingSoundnessError(
                f"solver model violates emitted assertions {bad[:5]}")
        return "sat", values
    if result.kind == "unsat":
        return "unsat", None
    return "failure", f"{result.kind}: {result.detail}"


def synthesize_loop(hub: HubSpec, max_bound: int, direct: bool = True,
                    hardcode_token: bool = True, condition_a: bool = True,
                    pinned: PinnedPrefix | None = None,
                    extra_alpha: Formula | None = None,
                    solver_command=None, timeout: float | None = None,
                    parallel_bounds: int = 1,
                    min_bound: int = 2) -> SynthResult:
    """Iterate the bound upward until the query is satisfiable.

    Every satisfying model is re-validated: well-formedness of the
    extracted template, absence of accepting lassos in the explicit
    product, and the direct guarantees, all independently of the solver.
    """
    timings: list[tuple[int, float, str]] = []
    start_bound = max(min_bound, 2)
    if pinned is not None:
        start_bound = max(start_bound, pinned.template.n_states)

    def attempt(b: int):
        inst = build_instance(hub, b, direct=direct,
                              hardcode_token=hardcode_token,
                              condition_a=condition_a, pinned=pinned,
                              extra_alpha=extra_alpha)
        t0 = time.time()
        status, payload = _solve_one(inst, solver_command, timeout)
        return inst, status, payload, time.time() - t0

    bounds = list(range(start_bound, max_bound + 1))
    index = 0
    while index < len(bounds):
        chunk = bounds[index:index + max(1, parallel_bounds)]
        index += len(chunk)
        if len(chunk) == 1:
            results = [attempt(chunk[0])]
        else:
            with ThreadPoolExecutor(max_workers=len(chunk)) as pool:
                results = list(pool.map(attempt, chunk))
        for inst, status, payload, elapsed in results:
            timings.append((inst.bound, elapsed, status))
            if status == "failure":
                return SynthResult("solver_failure", detail=payload,
                                   timings=timings)
            if status != "sat":
                continue
            template = extract_template(payload, inst)
            if product_has_accepting_lasso(template, inst):
                raise EncodingSoundnessError(
                    "extracted template admits an accepting lasso in the "
                    "specification product")
            bad = recheck_betas(template, inst)
            if bad:
                raise EncodingSoundnessError(
                    "direct guarantees fail on the extracted template: "
                    + "; ".join(bad[:5]))
            return SynthResult("ok", template=template, bound=inst.bound,
                               timings=timings)
    return SynthResult("no_model", detail=f"no model up to bound {max_bound}",
                       timings=timings)
