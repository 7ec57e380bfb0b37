"""Parameterized specifications: model, file format, and classification.

An :class:`IndexedSpec` is a signal signature plus quantified assumption
and guarantee lists.  Properties carry a quantifier (``forall i``,
``forall i!=0``, ``forall i,j``, zero-only, or unquantified), a temporal
class, and a group tag used by the transformation pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import ltl
from .ltl import (
    Atom, Formula, Globally, IndexLit, IndexPrev, IndexVar, Next, Not,
    parse_ltl, pretty,
)

__all__ = [
    "QuantifiedProperty", "IndexedSpec", "SpecError", "classify_direct",
    "load_spec", "loads_spec", "save_spec", "dumps_spec", "builtin_corpus",
    "infer_temporal_class", "GROUP_MAIN", "GROUP_TR",
]

GROUP_MAIN = "main"
GROUP_TR = "tr"

QUANTIFIERS = ("forall_i", "forall_i_ne0", "forall_ij", "zero_only", "unquantified")
TEMPORAL_CLASSES = ("invariant_G", "initial", "general")


class SpecError(ValueError):
    pass


def infer_temporal_class(body: Formula) -> str:
    if isinstance(body, Globally):
        return "invariant_G"
    if not ltl.has_temporal(body):
        return "initial"
    return "general"


@dataclass(frozen=True)
class QuantifiedProperty:
    name: str
    quantifier: str
    body: Formula
    temporal_class: str = ""
    group: str = GROUP_MAIN

    def __post_init__(self) -> None:
        if self.quantifier not in QUANTIFIERS:
            raise SpecError(f"unknown quantifier {self.quantifier!r}")
        if not self.temporal_class:
            object.__setattr__(self, "temporal_class", infer_temporal_class(self.body))
        elif self.temporal_class not in TEMPORAL_CLASSES:
            raise SpecError(f"unknown temporal class {self.temporal_class!r}")
        if self.temporal_class == "initial" and ltl.has_temporal(self.body):
            raise SpecError(
                f"{self.name}: initial-class property contains a temporal operator")


@dataclass(frozen=True)
class IndexedSpec:
    """A parameterized specification over a token-ring signature.

    ``global_outputs`` only occur before output localization; synthesis
    takes specs whose outputs are all per-process.
    """

    local_inputs: tuple[str, ...]
    global_inputs: tuple[str, ...]
    local_outputs: tuple[str, ...]
    assumptions: tuple[QuantifiedProperty, ...] = ()
    guarantees: tuple[QuantifiedProperty, ...] = ()
    global_outputs: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if "RCV" not in self.local_inputs:
            object.__setattr__(self, "local_inputs", self.local_inputs + ("RCV",))
        for reserved in ("TOK", "SEND"):
            if reserved not in self.local_outputs:
                object.__setattr__(self, "local_outputs",
                                   self.local_outputs + (reserved,))
        self.validate()

    # -- signature helpers -------------------------------------------------

    @property
    def signal_names(self) -> set[str]:
        return (set(self.local_inputs) | set(self.global_inputs)
                | set(self.local_outputs) | set(self.global_outputs))

    def is_input(self, name: str) -> bool:
        return name in self.local_inputs or name in self.global_inputs

    def is_local(self, name: str) -> bool:
        return name in self.local_inputs or name in self.local_outputs

    def properties(self):
        return list(self.assumptions) + list(self.guarantees)

    # -- validation --------------------------------------------------------

    def validate(self) -> None:
        seen = set()
        for name in (list(self.local_inputs) + list(self.global_inputs)
                     + list(self.local_outputs)):
            if name in seen:
                raise SpecError(f"signal {name!r} declared twice")
            seen.add(name)
        if "SCH" in seen:
            raise SpecError("SCH is reserved for the scheduling proposition")
        for prop in self.properties():
            self._check_property(prop)

    def _check_property(self, prop: QuantifiedProperty) -> None:
        allowed_vars = {
            "forall_i": {"i"}, "forall_i_ne0": {"i"}, "forall_ij": {"i", "j"},
            "zero_only": set(), "unquantified": set(),
        }[prop.quantifier]
        for ref in ltl.atoms_of(prop.body):
            if ref.name not in self.signal_names:
                raise SpecError(f"{prop.name}: undeclared signal {ref.name!r}")
            if self.is_local(ref.name):
                if ref.index is None:
                    raise SpecError(f"{prop.name}: local signal {ref.name!r} "
                                    "needs a process index")
                if isinstance(ref.index, (IndexVar, IndexPrev)):
                    if ref.index.name not in allowed_vars:
                        raise SpecError(f"{prop.name}: index variable "
                                        f"{ref.index.name!r} not bound")
                if (isinstance(ref.index, IndexLit) and ref.index.value != 0):
                    raise SpecError(f"{prop.name}: only index literal 0 is allowed")
            else:
                if ref.index is not None:
                    raise SpecError(f"{prop.name}: global signal {ref.name!r} "
                                    "cannot be indexed")
            if prop.quantifier == "forall_ij" and self.is_input(ref.name):
                raise SpecError(f"{prop.name}: two-indexed properties must not "
                                f"reference inputs ({ref.name!r})")


# ---------------------------------------------------------------------------
# Direct-encoding classification


def classify_body(body: Formula, is_input, temporal_class: str) -> str:
    """Shared shape check behind :func:`classify_direct`.

    ``body`` is the formula under the leading G; ``is_input`` decides the
    signal kind of an atom name.
    """
    if temporal_class != "invariant_G":
        return "general"

    if not ltl.has_temporal(body) and \
            all(is_input(r.name) for r in ltl.atoms_of(body)):
        return "alpha"

    ok = True

    def scan(f: Formula) -> None:
        nonlocal ok
        if not ok:
            return
        match f:
            case Next(Atom(ref)) | Next(Not(Atom(ref))):
                if is_input(ref.name):
                    ok = False
            case Next(_):
                ok = False
            case ltl.Eventually(_) | ltl.Globally(_) | ltl.Until(_, _) | \
                    ltl.WeakUntil(_, _) | ltl.CountedWeakUntil(_, _, _):
                ok = False
            case Atom() | ltl.TrueF() | ltl.FalseF():
                pass
            case Not(s):
                scan(s)
            case (ltl.And(l, r) | ltl.Or(l, r) | ltl.Implies(l, r) | ltl.Iff(l, r)):
                scan(l)
                scan(r)

    scan(body)
    return "beta" if ok else "general"


def classify_direct(spec: IndexedSpec, prop: QuantifiedProperty) -> str:
    """Classify a property as alpha, beta, or general.

    alpha: an invariant over current input values only.
    beta: an invariant over current inputs/outputs and next outputs,
    with next-state operators only directly above output literals.
    Everything else takes the automaton route.
    """
    if prop.temporal_class != "invariant_G":
        return "general"
    return classify_body(prop.body.sub, spec.is_input, prop.temporal_class)


# ---------------------------------------------------------------------------
# Spec-file format


_QUANT_PREFIXES = [
    ("forall i,j:", "forall_ij"),
    ("forall i!=0:", "forall_i_ne0"),
    ("forall i:", "forall_i"),
    ("zero:", "zero_only"),
    ("global:", "unquantified"),
]


def loads_spec(text: str, origin: str = "<string>") -> IndexedSpec:
    section = None
    signals = {"local_in": [], "global_in": [], "local_out": [], "global_out": []}
    assumptions: list[QuantifiedProperty] = []
    guarantees: list[QuantifiedProperty] = []
    counters = {"A": 0, "G": 0}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{origin}:{lineno}"
        if line.startswith("["):
            header = line.strip("[]").upper()
            if header == "SIGNALS":
                section = "signals"
            elif header == "ASSUMPTIONS":
                section = "assumptions"
            elif header == "GUARANTEES":
                section = "guarantees"
            else:
                raise SpecError(f"{where}: unknown section {line!r}")
            continue
        if section == "signals":
            key, _, rest = line.partition(":")
            key = key.strip()
            if key not in signals:
                raise SpecError(f"{where}: unknown signal kind {key!r}")
            signals[key].extend(rest.split())
            continue
        if section in ("assumptions", "guarantees"):
            name = None
            if line.startswith("<"):
                tag, _, line = line.partition(">")
                name = tag[1:].strip()
                line = line.strip()
            prop = _parse_property_line(line, name, where,
                                        "A" if section == "assumptions" else "G",
                                        counters)
            (assumptions if section == "assumptions" else guarantees).append(prop)
            continue
        raise SpecError(f"{where}: content outside any section")

    try:
        return IndexedSpec(tuple(signals["local_in"]), tuple(signals["global_in"]),
                           tuple(signals["local_out"]),
                           tuple(assumptions), tuple(guarantees),
                           global_outputs=tuple(signals["global_out"]))
    except SpecError as exc:
        raise SpecError(f"{origin}: {exc}") from None


def _parse_property_line(line: str, name: str | None, where: str,
                         kind: str, counters: dict) -> QuantifiedProperty:
    quantifier = None
    rest = line
    initial_flag = False
    if line.startswith("init:"):
        rest = line[len("init:"):].strip()
        initial_flag = True
    else:
        for prefix, quant in _QUANT_PREFIXES:
            if line.startswith(prefix):
                quantifier = quant
                rest = line[len(prefix):].strip()
                break
        else:
            raise SpecError(f"{where}: property line needs a quantifier prefix")
    try:
        body = parse_ltl(rest)
    except ltl.ParseError as exc:
        raise SpecError(f"{where}: {exc}") from None
    if initial_flag:
        if ltl.has_temporal(body):
            raise SpecError(f"{where}: init property contains a temporal operator")
        variables = ltl.index_vars(body)
        if "j" in variables:
            quantifier = "forall_ij"
        elif "i" in variables:
            quantifier = "forall_i"
        elif any(isinstance(r.index, IndexLit) for r in ltl.atoms_of(body)):
            quantifier = "zero_only"
        else:
            quantifier = "unquantified"
    if name is None:
        counters[kind] += 1
        name = f"{kind}{counters[kind]}"
    return QuantifiedProperty(name, quantifier, body)


def load_spec(path: str | Path) -> IndexedSpec:
    path = Path(path)
    return loads_spec(path.read_text(encoding="utf-8"), origin=str(path))


def dumps_spec(spec: IndexedSpec) -> str:
    lines = ["[SIGNALS]"]
    lines.append("local_in: " + " ".join(n for n in spec.local_inputs if n != "RCV"))
    lines.append("global_in: " + " ".join(spec.global_inputs))
    lines.append("local_out: " + " ".join(n for n in spec.local_outputs
                                          if n not in ("TOK", "SEND")))
    if spec.global_outputs:
        lines.append("global_out: " + " ".join(spec.global_outputs))
    for header, props in (("[ASSUMPTIONS]", spec.assumptions),
                          ("[GUARANTEES]", spec.guarantees)):
        lines.append("")
        lines.append(header)
        for prop in props:
            prefix = {
                "forall_i": "forall i:", "forall_i_ne0": "forall i!=0:",
                "forall_ij": "forall i,j:", "zero_only": "zero:",
                "unquantified": "global:",
            }[prop.quantifier]
            lines.append(f"<{prop.name}> {prefix} {pretty(prop.body)}")
    return "\n".join(lines) + "\n"


def save_spec(spec: IndexedSpec, path: str | Path) -> None:
    Path(path).write_text(dumps_spec(spec), encoding="utf-8")


# ---------------------------------------------------------------------------
# Built-in corpus


def _props(defs, quantifier_default="forall_i", group=GROUP_MAIN):
    out = []
    for name, text, *rest in defs:
        quant = rest[0] if rest else quantifier_default
        out.append(QuantifiedProperty(name, quant, parse_ltl(text), group=group))
    return tuple(out)


def _amba_assumptions(with_no_req: bool):
    defs = [
        ("A1", "G ((HMASTERLOCK(i) && HBURST==INCR && HMASTER(i)) -> X F !HBUSREQ(i))"),
        ("A2", "G F HREADY"),
        ("A3", "G (HLOCK(i) -> HBUSREQ(i))"),
        ("A4", "!HBUSREQ(i) && !HLOCK(i) && !HREADY"),
        ("A5", "G F TOK(i)"),
    ]
    if with_no_req:
        defs.append(("A6", "G (HBUSREQ(i) -> !NO_REQ)"))
    return _props(defs)


def _amba_guarantees(zero: bool, burst31: int, burst32: int):
    defs = [
        ("G1", "G (!HREADY -> X !START(i))"),
        ("G2", "G ((HMASTERLOCK(i) && HBURST==INCR && START(i)) -> "
               "X (!START(i) W (!START(i) && HBUSREQ(i))))"),
        ("G3.1", f"G ((HMASTERLOCK(i) && HBURST==BURST4 && START(i) && HREADY) -> "
                 f"X (!START(i) W[{burst31}] (!START(i) && HREADY)))"),
        ("G3.2", f"G ((HMASTERLOCK(i) && HBURST==BURST4 && START(i) && !HREADY) -> "
                 f"X (!START(i) W[{burst32}] (!START(i) && HREADY)))"),
        ("G4", "G (HREADY -> (HGRANT(i) <-> X HMASTER(i)))"),
        ("G5", "G (HREADY -> (LOCKED(i) <-> X HMASTERLOCK(i)))"),
        ("G6", "G (X !START(i) -> ((HMASTER(i) <-> X HMASTER(i)) && "
               "(HMASTERLOCK(i) <-> X HMASTERLOCK(i))))"),
        ("G7", "G ((DECIDE(i) && X HGRANT(i)) -> (HLOCK(i) <-> X LOCKED(i)))"),
        ("G8", "G (!DECIDE(i) -> ((HGRANT(i) <-> X HGRANT(i)) && "
               "(LOCKED(i) <-> X LOCKED(i))))"),
        ("G9", "G (HBUSREQ(i) -> F (!HBUSREQ(i) || HMASTER(i)))"),
    ]
    if zero:
        defs += [
            ("G10.2", "G ((NO_REQ && !TOK(0) && X TOK(0)) -> X HGRANT(0))", "zero_only"),
            ("G11.2", "TOK(0) -> (HGRANT(0) && HMASTER(0) && !HMASTERLOCK(0))",
             "zero_only"),
        ]
    else:
        defs += [
            ("G10.1", "G (!HGRANT(i) -> (!HGRANT(i) W HBUSREQ(i)))"),
            ("G11.1", "!HGRANT(i) && !HMASTERLOCK(i)"),
        ]
    defs.append(("G12", "G (HGRANT(i) -> TOK(i))"))
    return _props(defs)


def _amba_spec(zero: bool, burst31: int = 3, burst32: int = 4) -> IndexedSpec:
    return IndexedSpec(
        local_inputs=("HBUSREQ", "HLOCK"),
        global_inputs=("HREADY", "HBURST0", "HBURST1") + (("NO_REQ",) if zero else ()),
        local_outputs=("HGRANT", "HMASTER", "HMASTERLOCK", "START", "DECIDE", "LOCKED"),
        assumptions=_amba_assumptions(with_no_req=zero),
        guarantees=_amba_guarantees(zero, burst31, burst32),
    )


def builtin_corpus(name: str) -> IndexedSpec:
    """Built-in specifications: the bus-arbiter case study and a toy arbiter."""
    if name == "amba_non0":
        return _amba_spec(zero=False)
    if name == "amba_zero":
        return _amba_spec(zero=True)
    if name == "amba_zero_reduced_burst":
        return _amba_spec(zero=True, burst31=2, burst32=3)
    if name == "simple_arbiter":
        return IndexedSpec(
            local_inputs=("r",),
            global_inputs=(),
            local_outputs=("g",),
            assumptions=(),
            guarantees=_props([
                ("G1", "G (g(i) -> TOK(i))"),
                ("G2", "G (r(i) -> F g(i))"),
            ]),
        )
    raise SpecError(f"unknown built-in specification {name!r}")
