"""LTL to Buchi translation and automaton utilities.

The translation is a classic tableau construction: graph nodes carry the
obligations that hold now and next, until-subformulas induce generalized
Buchi acceptance sets, and a counter product turns the result into a plain
NBA.  No minimality is attempted beyond pruning states that cannot
contribute to an accepted word.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import ltl
from .ltl import (
    And, Atom, Eventually, FalseF, Formula, Globally, Next, Not, Or,
    TrueF, Until, WeakUntil,
)

__all__ = ["Label", "Nba", "ltl_to_nba", "degeneralize", "accepts_lasso",
           "parse_nba_text", "format_nba_text"]


# A label is a conjunction of literals: mapping atom name -> required value.
# The empty label is "true" (any letter).
Label = frozenset  # of (name, bool) pairs


def label_satisfied(label: Label, letter: frozenset[str]) -> bool:
    return all((name in letter) == value for name, value in label)


def format_label(label: Label) -> str:
    if not label:
        return "true"
    parts = [("" if value else "!") + name for name, value in sorted(label)]
    return " && ".join(parts)


@dataclass
class Nba:
    """Nondeterministic Buchi automaton over letters 2^atoms.

    Edges carry conjunctive literal labels; an edge stands for every letter
    satisfying its label.  Every stored label is satisfiable by construction
    (contradictory literal sets are rejected).
    """

    atoms: tuple[str, ...]
    n_states: int
    initial: frozenset[int]
    edges: list[tuple[int, Label, int]]
    accepting: frozenset[int]

    def __post_init__(self) -> None:
        for src, label, dst in self.edges:
            values = {}
            for name, value in label:
                if values.setdefault(name, value) != value:
                    raise ValueError(f"unsatisfiable edge label on {src}->{dst}")

    def successors(self, state: int, letter: frozenset[str]):
        for src, label, dst in self.edges:
            if src == state and label_satisfied(label, letter):
                yield dst

    def out_edges(self, state: int):
        return [(label, dst) for src, label, dst in self.edges if src == state]


# ---------------------------------------------------------------------------
# Tableau construction


@dataclass
class _Node:
    name: int
    incoming: set[int] = field(default_factory=set)
    new: set[Formula] = field(default_factory=set)
    old: set[Formula] = field(default_factory=set)
    nxt: set[Formula] = field(default_factory=set)


_INIT = -1


def _neg_literal(f: Formula) -> Formula:
    return f.sub if isinstance(f, Not) else Not(f)


def _is_literal(f: Formula) -> bool:
    return isinstance(f, (Atom, TrueF, FalseF)) or (
        isinstance(f, Not) and isinstance(f.sub, Atom))


class _Tableau:
    def __init__(self, f: Formula):
        self.counter = itertools.count()
        self.nodes: dict[int, _Node] = {}
        self.by_content: dict[tuple, int] = {}
        work = [_Node(next(self.counter), incoming={_INIT}, new={f})]
        while work:
            self._process(work.pop(), work)

    def _process(self, node: _Node, work: list[_Node]) -> None:
        while node.new:
            eta = node.new.pop()
            if _is_literal(eta):
                if isinstance(eta, FalseF) or _neg_literal(eta) in node.old:
                    return  # contradictory node, discarded
                if not isinstance(eta, TrueF):
                    node.old.add(eta)
                continue
            if eta in node.old:
                continue  # obligation already imposed on this node
            match eta:
                case And(l, r):
                    node.old.add(eta)
                    for part in (l, r):
                        if part not in node.old:
                            node.new.add(part)
                case Next(s):
                    node.old.add(eta)
                    node.nxt.add(s)
                case Globally(s):
                    node.old.add(eta)
                    if s not in node.old:
                        node.new.add(s)
                    node.nxt.add(eta)
                case Or(l, r):
                    self._split(node, eta, {l}, {r}, set(), work)
                    return
                case Until(l, r):
                    self._split(node, eta, {l}, {r}, {eta}, work)
                    return
                case WeakUntil(l, r):
                    self._split(node, eta, {l}, {r}, {eta}, work)
                    return
                case Eventually(s):
                    self._split(node, eta, set(), {s}, {eta}, work)
                    return
                case _:
                    raise ValueError(f"formula not in NNF or not expanded: {eta!r}")
        # fully processed: merge with an equivalent node or save and
        # schedule the time successor
        key = (frozenset(node.old), frozenset(node.nxt))
        existing = self.by_content.get(key)
        if existing is not None:
            self.nodes[existing].incoming |= node.incoming
            return
        self.nodes[node.name] = node
        self.by_content[key] = node.name
        work.append(_Node(next(self.counter), incoming={node.name},
                          new=set(node.nxt)))

    def _split(self, node: _Node, eta: Formula, left_new: set, right_new: set,
               left_next: set, work: list[_Node]) -> None:
        work.append(_Node(next(self.counter), incoming=set(node.incoming),
                          new=node.new | {g for g in left_new if g not in node.old},
                          old=node.old | {eta},
                          nxt=node.nxt | left_next))
        work.append(_Node(next(self.counter), incoming=set(node.incoming),
                          new=node.new | {g for g in right_new if g not in node.old},
                          old=node.old | {eta}, nxt=set(node.nxt)))


def _gba_from_tableau(f: Formula):
    tab = _Tableau(f)
    order = sorted(tab.nodes)
    index = {name: k + 1 for k, name in enumerate(order)}  # 0 is the initial state
    n_states = len(order) + 1

    def label_of(node: _Node) -> Label:
        lits = []
        for g in node.old:
            if isinstance(g, Atom):
                lits.append((g.ref.ground_name(), True))
            elif isinstance(g, Not):
                lits.append((g.sub.ref.ground_name(), False))
        return frozenset(lits)

    edges = []
    for name in order:
        node = tab.nodes[name]
        lbl = label_of(node)
        for src in node.incoming:
            edges.append((0 if src == _INIT else index[src], lbl, index[name]))

    # one acceptance set per until/eventually subformula
    acc_sets = []
    eventuals = []
    seen = set()
    for name in order:
        for g in tab.nodes[name].old:
            if isinstance(g, (Until, Eventually)) and g not in seen:
                seen.add(g)
                eventuals.append(g)
    for g in eventuals:
        target = g.right if isinstance(g, Until) else g.sub
        members = set()
        for name in order:
            node = tab.nodes[name]
            if g not in node.old or target in node.old:
                members.add(index[name])
        acc_sets.append(frozenset(members))
    return n_states, frozenset([0]), edges, acc_sets


def degeneralize(n_states: int, initial: frozenset[int],
                 edges: list[tuple[int, Label, int]],
                 acc_sets: list[frozenset[int]], atoms: tuple[str, ...]) -> Nba:
    """Counter construction from generalized to plain Buchi acceptance.

    With k sets the result has at most (k)*n states before pruning; k = 0
    makes every state accepting.
    """
    k = len(acc_sets)
    if k == 0:
        return Nba(atoms, n_states, initial, edges, frozenset(range(n_states)))
    if k == 1:
        return Nba(atoms, n_states, initial, edges, acc_sets[0])

    def enc(state: int, counter: int) -> int:
        return counter * n_states + state

    new_edges = []
    for src, label, dst in edges:
        for c in range(k):
            c2 = (c + 1) % k if src in acc_sets[c] else c
            new_edges.append((enc(src, c), label, enc(dst, c2)))
    new_initial = frozenset(enc(s, 0) for s in initial)
    new_accepting = frozenset(enc(s, 0) for s in acc_sets[0])
    return Nba(atoms, n_states * k, new_initial, new_edges, new_accepting)


def tarjan_sccs(nodes, successors):
    """Iterative Tarjan; returns the strongly connected components."""
    index: dict = {}
    lowlink: dict = {}
    on_stack: set = set()
    stack: list = []
    sccs: list[list] = []
    counter = itertools.count()

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(successors(root)))]
        index[root] = lowlink[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = lowlink[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(w))))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
    return sccs


def _prune(nba: Nba) -> Nba:
    """Keep only states reachable from initial and able to reach an
    accepting cycle."""
    fwd: dict[int, set[int]] = {}
    back: dict[int, set[int]] = {}
    for src, _, dst in nba.edges:
        fwd.setdefault(src, set()).add(dst)
        back.setdefault(dst, set()).add(src)

    reachable = set()
    stack = list(nba.initial)
    while stack:
        s = stack.pop()
        if s in reachable:
            continue
        reachable.add(s)
        stack.extend(fwd.get(s, ()))

    # states inside a cyclic SCC that contains an accepting state
    succ = lambda s: (t for t in fwd.get(s, ()) if t in reachable)
    core = set()
    for comp in tarjan_sccs(sorted(reachable), succ):
        cyclic = len(comp) > 1 or comp[0] in fwd.get(comp[0], ())
        if cyclic and any(s in nba.accepting for s in comp):
            core.update(comp)

    # states that can reach such a component
    productive = set(core)
    stack = list(core)
    while stack:
        s = stack.pop()
        for p in back.get(s, ()):
            if p in reachable and p not in productive:
                productive.add(p)
                stack.append(p)

    keep = sorted(productive | (set(nba.initial) & reachable))
    remap = {s: k for k, s in enumerate(keep)}
    edges = [(remap[s], lbl, remap[d]) for s, lbl, d in nba.edges
             if s in remap and d in remap and d in productive]
    return Nba(nba.atoms, len(keep),
               frozenset(remap[s] for s in nba.initial if s in remap),
               edges, frozenset(remap[s] for s in nba.accepting if s in remap))


def _bisim_quotient(nba: Nba) -> Nba:
    """Quotient by forward bisimulation (same acceptance, matching moves).

    Merging bisimilar states preserves the language and substantially
    shrinks tableau output.
    """
    cls: dict[int, object] = {s: s in nba.accepting for s in range(nba.n_states)}
    out: dict[int, list[tuple[Label, int]]] = {s: [] for s in range(nba.n_states)}
    for src, label, dst in nba.edges:
        out[src].append((label, dst))
    while True:
        sig = {}
        for s in range(nba.n_states):
            sig[s] = (cls[s], frozenset((lbl, cls[d]) for lbl, d in out[s]))
        new_ids: dict = {}
        new_cls = {}
        for s in range(nba.n_states):
            new_cls[s] = new_ids.setdefault(sig[s], len(new_ids))
        if len(set(new_cls.values())) == len(set(cls.values())):
            break
        cls = new_cls
    reps = sorted(set(cls.values())) if nba.n_states else []
    remap = {c: k for k, c in enumerate(reps)}
    edges = sorted({(remap[cls[s]], lbl, remap[cls[d]]) for s, lbl, d in nba.edges},
                   key=lambda e: (e[0], e[2], sorted(e[1])))
    return Nba(nba.atoms, len(reps),
               frozenset(remap[cls[s]] for s in nba.initial),
               edges,
               frozenset(remap[cls[s]] for s in nba.accepting))


def ltl_to_nba(f: Formula) -> Nba:
    """Translate a ground NNF formula (no W[k]) into an equivalent NBA."""
    if any(isinstance(g, ltl.CountedWeakUntil) for g in ltl.walk(f)):
        raise ValueError("expand W[k] before translation")
    for g in ltl.walk(f):
        if isinstance(g, Not) and not isinstance(g.sub, Atom):
            raise ValueError("formula must be in negation normal form")
        if isinstance(g, (ltl.Implies, ltl.Iff)):
            raise ValueError("formula must be in negation normal form")
    atoms = tuple(sorted(ref.ground_name() for ref in ltl.atoms_of(f)))
    f = ltl.simplify(f)  # NNF-preserving constant folding
    n_states, initial, edges, acc_sets = _gba_from_tableau(f)
    return reduce_nba(degeneralize(n_states, initial, edges, acc_sets, atoms))


def _merge_parallel_edges(nba: Nba) -> Nba:
    """Cube-merge and subsume labels of edges sharing source and target."""
    grouped: dict[tuple[int, int], set[Label]] = {}
    for src, lbl, dst in nba.edges:
        grouped.setdefault((src, dst), set()).add(lbl)
    edges = []
    for (src, dst), labels in grouped.items():
        labels = set(labels)
        changed = True
        while changed:
            changed = False
            for a, b in itertools.combinations(labels, 2):
                if len(a) == len(b):
                    diff = a.symmetric_difference(b)
                    if len(diff) == 2 and len({n for n, _ in diff}) == 1:
                        labels.discard(a)
                        labels.discard(b)
                        labels.add(a & b)
                        changed = True
                        break
        # a weaker (smaller) label subsumes any superset
        final = [a for a in labels
                 if not any(a != b and b <= a for b in labels)]
        edges.extend((src, lbl, dst) for lbl in final)
    return Nba(nba.atoms, nba.n_states, nba.initial, edges, nba.accepting)


def reduce_nba(nba: Nba) -> Nba:
    """Alternate pruning, edge merging, and bisimulation quotienting."""
    before = (-1, -1)
    while (nba.n_states, len(nba.edges)) != before:
        before = (nba.n_states, len(nba.edges))
        nba = _merge_parallel_edges(_prune(_bisim_quotient(nba)))
    return nba


def union(nbas: list[Nba], atoms: tuple[str, ...]) -> Nba:
    """Disjoint union; accepts the union of the languages."""
    offset = 0
    edges = []
    initial = set()
    accepting = set()
    for a in nbas:
        edges.extend((s + offset, lbl, d + offset) for s, lbl, d in a.edges)
        initial.update(s + offset for s in a.initial)
        accepting.update(s + offset for s in a.accepting)
        offset += a.n_states
    return Nba(atoms, offset, frozenset(initial), edges, frozenset(accepting))


def _merge_labels(labels) -> Label | None:
    values: dict[str, bool] = {}
    for label in labels:
        for name, value in label:
            if values.setdefault(name, value) != value:
                return None
    return frozenset(values.items())


def intersect(nbas: list[Nba], atoms: tuple[str, ...]) -> Nba:
    """Language intersection via the counting product.

    Conjunctions of temporal properties explode the tableau when
    translated monolithically; intersecting the per-conjunct automata
    sidesteps that.  The counter cycles through the components' acceptance
    sets exactly like plain degeneralization.
    """
    if not nbas:
        return Nba(atoms, 1, frozenset([0]), [(0, frozenset(), 0)], frozenset([0]))
    if len(nbas) == 1:
        return nbas[0]
    k = len(nbas)
    out_edges = []
    for a in nbas:
        table: dict[int, list] = {}
        for src, lbl, dst in a.edges:
            table.setdefault(src, []).append((lbl, dst))
        out_edges.append(table)

    index: dict[tuple, int] = {}
    edges = []
    queue = []

    def intern(node) -> int:
        got = index.get(node)
        if got is None:
            got = len(index)
            index[node] = got
            queue.append(node)
        return got

    initial = set()
    for combo in itertools.product(*(sorted(a.initial) for a in nbas)):
        initial.add(intern(combo + (0,)))
    while queue:
        node = queue.pop()
        states, counter = node[:-1], node[-1]
        src_id = index[node]
        next_counter = (counter + 1) % k \
            if states[counter] in nbas[counter].accepting else counter
        for combo in itertools.product(
                *(out_edges[c].get(states[c], ()) for c in range(k))):
            label = _merge_labels(lbl for lbl, _ in combo)
            if label is None:
                continue
            target = tuple(dst for _, dst in combo) + (next_counter,)
            edges.append((src_id, label, intern(target)))
    accepting = frozenset(
        idx for node, idx in index.items()
        if node[-1] == 0 and node[0] in nbas[0].accepting)
    return Nba(atoms, len(index), frozenset(initial), edges, accepting)


# ---------------------------------------------------------------------------
# Lasso membership oracle


def accepts_lasso(nba: Nba, prefix: list[frozenset[str]],
                  loop: list[frozenset[str]]) -> bool:
    """Does the automaton accept prefix.loop^w?

    Decided by unrolling the product of the automaton with the lasso graph
    and looking for a reachable cycle through an accepting product node.
    """
    if not loop:
        raise ValueError("loop must be nonempty")
    letters = list(prefix) + list(loop)
    n = len(letters)
    loop_start = len(prefix)

    succ_cache: list[dict[int, list[int]]] = [dict() for _ in range(n)]

    def step(state: int, pos: int) -> list[int]:
        cached = succ_cache[pos].get(state)
        if cached is None:
            cached = list(nba.successors(state, letters[pos]))
            succ_cache[pos][state] = cached
        return cached

    # forward reachability over product nodes (state, position)
    reach: set[tuple[int, int]] = set()
    stack = [(s, 0) for s in nba.initial]
    while stack:
        state, pos = stack.pop()
        if (state, pos) in reach:
            continue
        reach.add((state, pos))
        nxt = pos + 1 if pos + 1 < n else loop_start
        for t in step(state, pos):
            stack.append((t, nxt))

    loop_nodes = [(s, p) for (s, p) in reach if p >= loop_start]

    def successors(node):
        state, pos = node
        nxt = pos + 1 if pos + 1 < n else loop_start
        return ((t, nxt) for t in step(state, pos) if (t, nxt) in reach)

    for comp in tarjan_sccs(loop_nodes, successors):
        cyclic = len(comp) > 1 or comp[0] in successors(comp[0])
        if cyclic and any(state in nba.accepting for state, _ in comp):
            return True
    return False


# ---------------------------------------------------------------------------
# Minimal text exchange format, so an external translator can be substituted.
#
#   nba <n_states>
#   atoms: <name> <name> ...
#   initial: <id> <id> ...
#   accepting: <id> ...
#   edge <src> <dst> <label expression | true>


def format_nba_text(nba: Nba) -> str:
    lines = [f"nba {nba.n_states}",
             "atoms: " + " ".join(nba.atoms),
             "initial: " + " ".join(str(s) for s in sorted(nba.initial)),
             "accepting: " + " ".join(str(s) for s in sorted(nba.accepting))]
    for src, label, dst in nba.edges:
        lines.append(f"edge {src} {dst} {format_label(label)}")
    return "\n".join(lines) + "\n"


def parse_nba_text(text: str) -> Nba:
    n_states = None
    atoms: tuple[str, ...] = ()
    initial: frozenset[int] = frozenset()
    accepting: frozenset[int] = frozenset()
    edges = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("nba"):
            n_states = int(line.split()[1])
        elif line.startswith("atoms:"):
            atoms = tuple(line.split(":", 1)[1].split())
        elif line.startswith("initial:"):
            initial = frozenset(int(x) for x in line.split(":", 1)[1].split())
        elif line.startswith("accepting:"):
            accepting = frozenset(int(x) for x in line.split(":", 1)[1].split())
        elif line.startswith("edge"):
            _, src, dst, expr = line.split(None, 3)
            edges.append((int(src), _label_from_expr(expr), int(dst)))
        else:
            raise ValueError(f"unrecognized line in automaton file: {raw!r}")
    if n_states is None:
        raise ValueError("missing 'nba <n>' header")
    return Nba(atoms, n_states, initial, edges, accepting)


def _label_from_expr(expr: str) -> Label:
    f = ltl.parse_ltl(expr)
    if isinstance(f, TrueF):
        return frozenset()
    lits = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.extend((g.left, g.right))
        elif isinstance(g, Atom):
            lits.append((g.ref.ground_name(), True))
        elif isinstance(g, Not) and isinstance(g.sub, Atom):
            lits.append((g.sub.ref.ground_name(), False))
        else:
            raise ValueError(f"edge labels must be conjunctions of literals: {expr!r}")
    return frozenset(lits)
