"""Specification rewrites that turn a global ring spec into a single-process
synthesis input.

The pipeline order is fixed: split off the 0-process, localize global
outputs, append the token-ring guarantees, localize the assumptions into
per-process implications, then apply the synchronous hub abstraction.
Each step is a pure function over immutable specs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import ltl
from .ltl import (
    And, Atom, Formula, Globally, IndexLit, IndexPrev, IndexVar, Implies,
    SignalRef, conj, parse_ltl, pretty,
)
from .pspec import (
    GROUP_TR, IndexedSpec, QuantifiedProperty, SpecError, classify_body,
    infer_temporal_class,
)

__all__ = [
    "TR_PROPERTIES", "add_tr_guarantees", "localize_global_outputs",
    "split_zero_process", "localize_assumptions", "LocalizedSpec",
    "hub_abstraction", "HubProp", "HubSpec", "prepare_for_synthesis",
    "dumps_hub", "ENV_FAIR_NAME", "ENV_NORCV_NAME", "TOKEN_FAIR_NAME",
]


def _tr_defs():
    return [
        ("TR1", "G (SEND(i) -> TOK(i))"),
        ("TR2", "G (TOK(i) && !SEND(i) -> X TOK(i))"),
        ("TR3", "G (!TOK(i) && !SEND(i-1) -> X !TOK(i))"),
        ("TR4", "G (TOK(i) -> F SEND(i))"),
    ]


TR_PROPERTIES = tuple(
    QuantifiedProperty(name, "forall_i", parse_ltl(text), group=GROUP_TR)
    for name, text in _tr_defs())

ENV_FAIR_NAME = "ENV-FAIR"      # the token keeps coming around
ENV_NORCV_NAME = "ENV-NORCV"    # never delivered while already held
TOKEN_FAIR_NAME = "A-TOK"       # GF TOK(i), the localization side condition

_GF_TOK = parse_ltl("G F TOK(i)")
_G12_BODY = parse_ltl("G (HGRANT(i) -> TOK(i))")


def add_tr_guarantees(spec: IndexedSpec) -> IndexedSpec:
    """Append the four token-ring guarantees; idempotent."""
    if any(g.group == GROUP_TR for g in spec.guarantees):
        return spec
    return replace(spec, guarantees=spec.guarantees + TR_PROPERTIES)


def localize_global_outputs(spec: IndexedSpec, names: list[str]) -> IndexedSpec:
    """Replace each global output with its per-process version.

    Every occurrence of the signal becomes name(i) (name(0) inside
    zero-only properties).  The global value is report-only after this:
    it reads back as "exists i: TOK(i) and name(i)" (and the bus-master
    number is the unique i with HMASTER(i) high); that reconstruction never
    enters synthesis.
    """
    for name in names:
        if name not in spec.global_outputs:
            raise SpecError(f"{name!r} is not a declared global output")

    def localize(prop: QuantifiedProperty) -> QuantifiedProperty:
        index = IndexLit(0) if prop.quantifier == "zero_only" else IndexVar("i")

        def fn(ref: SignalRef) -> Formula:
            if ref.name in names:
                return Atom(SignalRef(ref.name, index))
            return Atom(ref)

        return replace(prop, body=ltl.map_atoms(prop.body, fn))

    return replace(
        spec,
        global_outputs=tuple(n for n in spec.global_outputs if n not in names),
        local_outputs=tuple(n for n in spec.local_outputs if n not in ("TOK", "SEND"))
        + tuple(names),
        assumptions=tuple(localize(p) for p in spec.assumptions),
        guarantees=tuple(localize(p) for p in spec.guarantees),
    )


def _references(prop: QuantifiedProperty, name: str) -> bool:
    return name in ltl.signal_names(prop.body)


def split_zero_process(spec: IndexedSpec) -> tuple[IndexedSpec, IndexedSpec]:
    """Separate the specification of the 0-process from the others.

    The non-0 spec keeps the universally quantified properties, with
    "forall i != 0" relaxing to plain "forall i" (every vertex of that
    template is a non-0 vertex).  The 0-process spec keeps the universally
    quantified and the zero-only properties, gains the auxiliary global
    input NO_REQ, and the assumption that a bus request anywhere keeps
    NO_REQ low.
    """
    def requantify(p: QuantifiedProperty) -> QuantifiedProperty:
        if p.quantifier == "forall_i_ne0":
            return replace(p, quantifier="forall_i")
        return p

    non0_assumptions = tuple(
        requantify(p) for p in spec.assumptions
        if p.quantifier != "zero_only" and not _references(p, "NO_REQ"))
    non0_guarantees = tuple(
        requantify(p) for p in spec.guarantees if p.quantifier != "zero_only")
    non0_globals = tuple(
        n for n in spec.global_inputs
        if n != "NO_REQ" or any(_references(p, "NO_REQ")
                                for p in non0_assumptions + non0_guarantees))
    non0 = replace(spec, global_inputs=non0_globals,
                   assumptions=non0_assumptions, guarantees=non0_guarantees)

    zero_assumptions = [p for p in spec.assumptions if p.quantifier != "forall_i_ne0"]
    zero_guarantees = tuple(p for p in spec.guarantees
                            if p.quantifier != "forall_i_ne0")
    zero_globals = spec.global_inputs
    if "HBUSREQ" in spec.local_inputs:
        if "NO_REQ" not in spec.global_inputs:
            zero_globals = zero_globals + ("NO_REQ",)
        a6 = parse_ltl("G (HBUSREQ(i) -> !NO_REQ)")
        if not any(p.body == a6 for p in zero_assumptions):
            zero_assumptions.append(QuantifiedProperty("A6", "forall_i", a6))
    zero = replace(spec, global_inputs=zero_globals,
                   assumptions=tuple(zero_assumptions),
                   guarantees=zero_guarantees)
    return non0, zero


@dataclass(frozen=True)
class LocalizedSpec:
    """Per-process implication form of a one-indexed specification.

    Represents forall i. A((tr_guard -> TR) && (gua_guard -> guarantees))
    where gua_guard additionally assumes the token arrives infinitely
    often.
    """

    spec: IndexedSpec
    tr_guard: tuple[QuantifiedProperty, ...]
    gua_guard: tuple[QuantifiedProperty, ...]
    tr: tuple[QuantifiedProperty, ...]
    gua: tuple[QuantifiedProperty, ...]

    def implication_formulas(self) -> tuple[Formula, Formula]:
        """The two conjunct implications, still indexed by i."""
        return (
            Implies(conj([p.body for p in self.tr_guard]),
                    conj([p.body for p in self.tr])),
            Implies(conj([p.body for p in self.gua_guard]),
                    conj([p.body for p in self.gua])),
        )


def localize_assumptions(spec: IndexedSpec) -> LocalizedSpec:
    """Rewrite global assumptions into per-process implication form.

    The token-ring guarantees are guarded by the assumptions except token
    fairness; the remaining guarantees additionally assume GF TOK(i).
    This localization is sound but not complete.  A mutual-exclusion link
    G(HGRANT(i) -> TOK(i)) is added when the signature carries HGRANT and
    no such guarantee exists yet.
    """
    if not any(g.group == GROUP_TR for g in spec.guarantees):
        raise SpecError("token-ring guarantees missing; run add_tr_guarantees first")
    if spec.global_outputs:
        raise SpecError("localize global outputs before localizing assumptions")

    tr_guard = tuple(p for p in spec.assumptions if p.body != _GF_TOK)
    gua_guard = spec.assumptions
    if not any(p.body == _GF_TOK for p in gua_guard):
        gua_guard = gua_guard + (
            QuantifiedProperty(TOKEN_FAIR_NAME, "forall_i", _GF_TOK),)

    gua = tuple(g for g in spec.guarantees if g.group != GROUP_TR)
    if "HGRANT" in spec.local_outputs and not any(g.body == _G12_BODY for g in gua):
        gua = gua + (QuantifiedProperty("G12", "forall_i", _G12_BODY),)
    tr = tuple(g for g in spec.guarantees if g.group == GROUP_TR)
    return LocalizedSpec(spec=spec, tr_guard=tr_guard, gua_guard=gua_guard,
                         tr=tr, gua=gua)


# ---------------------------------------------------------------------------
# Synchronous hub abstraction


@dataclass(frozen=True)
class HubProp:
    """One ground property of the single-process synthesis problem."""

    name: str
    formula: Formula
    cls: str            # alpha | beta | general
    temporal_class: str


@dataclass(frozen=True)
class HubSpec:
    """Single-process synchronous synthesis input.

    The environment simulates the rest of the ring: it feeds RCV, promises
    to keep the token coming (ENV-FAIR) and never to deliver it while the
    process holds it (ENV-NORCV).  Guards are ground assumption conjuncts
    per implication side; tr_guarantees are the token-ring obligations.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    env_assumptions: tuple[HubProp, ...]
    tr_guard: tuple[HubProp, ...]
    gua_guard: tuple[HubProp, ...]
    tr_guarantees: tuple[HubProp, ...]
    guarantees: tuple[HubProp, ...]

    def alphas(self) -> list[HubProp]:
        """Input-invariant assumptions usable as premises of every rule."""
        return [p for p in self.tr_guard if p.cls == "alpha"]

    def formula_pair(self) -> tuple[Formula, Formula]:
        """(environment assumptions, guarantee implication) as formulas."""
        env = conj([p.formula for p in self.env_assumptions])
        gua = And(
            Implies(conj([p.formula for p in self.tr_guard]),
                    conj([p.formula for p in self.tr_guarantees])),
            Implies(conj([p.formula for p in self.gua_guard]),
                    conj([p.formula for p in self.guarantees])))
        return env, gua


ENV_FAIR = parse_ltl("G F (RCV || TOK)")
ENV_NORCV = parse_ltl("G (TOK -> !RCV)")


def _ground_local(body: Formula, prop_name: str) -> Formula:
    """Drop the process index: name(i) and name(0) become plain names,
    the predecessor's SEND becomes the RCV input."""

    def fn(ref: SignalRef) -> Formula:
        match ref.index:
            case None:
                return Atom(ref)
            case IndexVar(_) | IndexLit(0):
                return Atom(SignalRef(ref.name))
            case IndexPrev(_):
                if ref.name == "SEND":
                    return Atom(SignalRef("RCV"))
                raise SpecError(
                    f"{prop_name}: only SEND may refer to the ring predecessor")
            case _:
                raise SpecError(f"{prop_name}: reference {ref} cannot be "
                                "grounded to a single process")

    return ltl.map_atoms(body, fn)


def hub_abstraction(loc: LocalizedSpec) -> HubSpec:
    """Reduce ring synthesis to synchronous single-process synthesis.

    Sound and complete for one-indexed specifications: the process is
    always scheduled and the environment plays all other ring members.
    """
    spec = loc.spec
    for prop in (loc.tr_guard + loc.gua_guard + loc.tr + loc.gua):
        if prop.quantifier == "forall_ij":
            raise SpecError(f"{prop.name}: specification is not one-indexed")

    inputs = tuple(n for n in spec.local_inputs if n != "RCV") \
        + spec.global_inputs + ("RCV",)
    outputs = spec.local_outputs
    is_input = lambda name: name in inputs

    def ground(prop: QuantifiedProperty) -> HubProp:
        formula = _ground_local(prop.body, prop.name)
        tclass = infer_temporal_class(formula)
        body = formula.sub if isinstance(formula, Globally) else formula
        return HubProp(prop.name, formula, classify_body(body, is_input, tclass),
                       tclass)

    env = (
        HubProp(ENV_FAIR_NAME, ENV_FAIR, "general", "invariant_G"),
        HubProp(ENV_NORCV_NAME, ENV_NORCV, "general", "invariant_G"),
    )
    return HubSpec(
        inputs=inputs, outputs=outputs, env_assumptions=env,
        tr_guard=tuple(ground(p) for p in loc.tr_guard),
        gua_guard=tuple(ground(p) for p in loc.gua_guard),
        tr_guarantees=tuple(ground(p) for p in loc.tr),
        guarantees=tuple(ground(p) for p in loc.gua),
    )


def prepare_for_synthesis(spec: IndexedSpec, process: str = "uniform") -> HubSpec:
    """Run the whole transform pipeline on a ring specification.

    ``process`` picks the side after the 0-split: "non0", "zero", or
    "uniform" for specs without a distinguished process.
    """
    if process != "uniform":
        non0, zero = split_zero_process(spec)
        spec = non0 if process == "non0" else zero
    if spec.global_outputs:
        spec = localize_global_outputs(spec, list(spec.global_outputs))
    spec = add_tr_guarantees(spec)
    return hub_abstraction(localize_assumptions(spec))


def dumps_hub(hub: HubSpec) -> str:
    """Text form of the post-transform spec, for inspection and diffing."""
    lines = ["# single-process synthesis input (hub abstraction)",
             "[SIGNALS]",
             "inputs: " + " ".join(hub.inputs),
             "outputs: " + " ".join(hub.outputs),
             "",
             "[ASSUMPTIONS]"]
    for p in hub.env_assumptions:
        lines.append(f"<{p.name}> global: {pretty(p.formula)}  # environment")
    lines.append("")
    lines.append("[GUARANTEES]")
    for group, props in (("token-ring guard", hub.tr_guard),
                         ("guarantee guard", hub.gua_guard)):
        for p in props:
            lines.append(f"# {group} [{p.cls}] <{p.name}> {pretty(p.formula)}")
    for side, props in (("tr", hub.tr_guarantees), ("gua", hub.guarantees)):
        for p in props:
            lines.append(f"<{p.name}> global: {pretty(p.formula)}  # {side} [{p.cls}]")
    return "\n".join(lines) + "\n"
