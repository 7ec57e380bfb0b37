"""Bundled SMT-LIB 2 solver for finite-domain synthesis queries.

Handles the fragment the constraint generator emits: uninterpreted
functions over integers with asserted finite ranges, boolean structure,
and integer comparisons (including one level of nested application).
Grounding turns every application instance into a variable; a CDCL SAT
core enumerates boolean skeletons and a difference-logic check over the
integer atoms prunes them (lazy theory combination).

Runs standalone so the solver driver can treat it like any external
SMT solver:

    python3 -m ringsynth.minismt [file.smt2]   # or script on stdin
"""

from __future__ import annotations

import heapq
import sys
from collections import deque
from dataclasses import dataclass

__all__ = ["solve_script", "SmtError", "main"]


class SmtError(ValueError):
    pass


class _Infeasible(Exception):
    """Top-level range assertions already contradict each other."""


# ---------------------------------------------------------------------------
# S-expression reader


def tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield c
            i += 1
        elif c.isspace():
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            yield text[i + 1:j]
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            yield text[i:j]
            i = j


def parse_sexprs(text: str) -> list:
    stack = [[]]
    for tok in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SmtError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SmtError("unbalanced '('")
    return stack[0]


def _to_int(tok) -> int | None:
    if isinstance(tok, str):
        if tok.lstrip("-").isdigit():
            return int(tok)
        return None
    if isinstance(tok, list) and len(tok) == 2 and tok[0] == "-":
        inner = _to_int(tok[1])
        return -inner if inner is not None else None
    return None


# ---------------------------------------------------------------------------
# CDCL SAT core


class Sat:
    """Small CDCL solver: watched literals, VSIDS, 1UIP learning."""

    def __init__(self):
        self.n_vars = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.assign: list[int] = [0]  # index 0 unused
        self.level: list[int] = [0]
        self.reason: list[int] = [-1]
        self.activity: list[float] = [0.0]
        self.phase: list[int] = [0]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.var_inc = 1.0
        self.ok = True
        self.heap: list[tuple[float, int]] = []  # lazy max-heap on activity

    def new_var(self) -> int:
        self.n_vars += 1
        self.assign.append(0)
        self.level.append(0)
        self.reason.append(-1)
        self.activity.append(0.0)
        self.phase.append(-1)
        heapq.heappush(self.heap, (0.0, self.n_vars))
        return self.n_vars

    def value(self, lit: int) -> int:
        v = self.assign[abs(lit)]
        return v if lit > 0 else -v

    def add_clause(self, lits) -> bool:
        """Add a clause; only sound at decision level 0."""
        seen = {}
        out = []
        for lit in lits:
            if seen.get(-lit):
                return True  # tautology
            if not seen.get(lit):
                seen[lit] = True
                out.append(lit)
        if self.decision_level() != 0:
            self.backtrack(0)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            if self.value(out[0]) == -1:
                self.ok = False
                return False
            if self.value(out[0]) == 0:
                self.enqueue(out[0], -1)
            return self.ok
        # keep watchable (non-false) literals in the watch slots
        out.sort(key=lambda l: self.value(l) == -1)
        if self.value(out[0]) == -1:
            self.ok = False
            return False
        idx = len(self.clauses)
        self.clauses.append(out)
        self.watches.setdefault(out[0], []).append(idx)
        self.watches.setdefault(out[1], []).append(idx)
        if self.value(out[1]) == -1 and self.value(out[0]) == 0:
            self.enqueue(out[0], idx)
        return True

    def decision_level(self) -> int:
        return len(self.trail_lim)

    def enqueue(self, lit: int, reason: int) -> None:
        v = abs(lit)
        self.assign[v] = 1 if lit > 0 else -1
        self.level[v] = self.decision_level()
        self.reason[v] = reason
        self.trail.append(lit)

    def propagate(self) -> int:
        """Returns a conflicting clause index or -1."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            falsified = -lit
            watching = self.watches.get(falsified, [])
            keep = []
            k = 0
            while k < len(watching):
                ci = watching[k]
                k += 1
                clause = self.clauses[ci]
                if clause[0] == falsified:
                    clause[0], clause[1] = clause[1], clause[0]
                # clause[1] is the falsified watch now
                first = clause[0]
                if self.value(first) == 1:
                    keep.append(ci)
                    continue
                for m in range(2, len(clause)):
                    if self.value(clause[m]) != -1:
                        clause[1], clause[m] = clause[m], clause[1]
                        self.watches.setdefault(clause[1], []).append(ci)
                        break
                else:
                    keep.append(ci)
                    if self.value(first) == -1:
                        self.watches[falsified] = keep + watching[k:]
                        self.qhead = len(self.trail)
                        return ci
                    self.enqueue(first, ci)
            self.watches[falsified] = keep
        return -1

    def bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for i in range(1, self.n_vars + 1):
                self.activity[i] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[i], i) for i in range(1, self.n_vars + 1)
                         if self.assign[i] == 0]
            heapq.heapify(self.heap)
        elif self.assign[v] == 0:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def analyze(self, conflict: int) -> tuple[list[int], int]:
        learnt = [0]
        seen = [False] * (self.n_vars + 1)
        counter = 0
        lit = 0
        index = len(self.trail) - 1
        clause = self.clauses[conflict]
        while True:
            for q in clause if lit == 0 else clause[1:]:
                v = abs(q)
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self.bump(v)
                    if self.level[v] == self.decision_level():
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(self.trail[index])]:
                index -= 1
            lit = self.trail[index]
            v = abs(lit)
            seen[v] = False
            index -= 1
            counter -= 1
            if counter == 0:
                break
            clause = self.clauses[self.reason[v]]
            clause = [lit] + [x for x in clause if x != lit]
        learnt[0] = -lit
        if len(learnt) == 1:
            return learnt, 0
        back = max(self.level[abs(q)] for q in learnt[1:])
        # move a literal of the backjump level into the second watch slot
        for k in range(1, len(learnt)):
            if self.level[abs(learnt[k])] == back:
                learnt[1], learnt[k] = learnt[k], learnt[1]
                break
        return learnt, back

    def backtrack(self, target: int) -> None:
        while self.decision_level() > target:
            limit = self.trail_lim.pop()
            while len(self.trail) > limit:
                lit = self.trail.pop()
                v = abs(lit)
                self.phase[v] = 1 if lit > 0 else -1
                self.assign[v] = 0
                self.reason[v] = -1
                heapq.heappush(self.heap, (-self.activity[v], v))
        self.qhead = min(self.qhead, len(self.trail))

    def decide(self) -> int:
        while self.heap:
            _, v = heapq.heappop(self.heap)
            if self.assign[v] == 0:
                return v if self.phase[v] >= 0 else -v
        for v in range(1, self.n_vars + 1):  # heap entries may go stale
            if self.assign[v] == 0:
                return v if self.phase[v] >= 0 else -v
        return 0

    def solve(self, theory_check=None) -> dict[int, bool] | None:
        """Returns a model as {var: bool} or None when unsatisfiable."""
        if not self.ok:
            return None
        while True:
            conflict = self.propagate()
            if conflict >= 0:
                if self.decision_level() == 0:
                    self.ok = False
                    return None
                learnt, back = self.analyze(conflict)
                self.backtrack(back)
                if len(learnt) == 1:
                    self.enqueue(learnt[0], -1)
                else:
                    idx = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches.setdefault(learnt[0], []).append(idx)
                    self.watches.setdefault(learnt[1], []).append(idx)
                    self.enqueue(learnt[0], idx)
                self.var_inc *= 1.05
                continue
            lit = self.decide()
            if lit == 0:
                model = {v: self.assign[v] == 1 for v in range(1, self.n_vars + 1)}
                if theory_check is None:
                    return model
                lemmas = theory_check(model)
                if not lemmas:
                    return model
                self.backtrack(0)
                for lemma in lemmas:
                    if not self.add_clause(lemma):
                        return None
                if not self.ok:
                    return None
                continue
            self.trail_lim.append(len(self.trail))
            self.enqueue(lit, -1)


# ---------------------------------------------------------------------------
# Grounding: terms to variables and atoms


@dataclass
class FunDecl:
    name: str
    arg_sorts: tuple[str, ...]
    ret_sort: str


@dataclass
class IntVar:
    key: tuple
    lo: int | None = None
    hi: int | None = None


@dataclass
class Atom:
    """Difference constraint x - y <= c (y may be the zero node)."""

    x: tuple | None
    y: tuple | None
    c: int


class Grounder:
    def __init__(self, decls: dict[str, FunDecl]):
        self.decls = decls
        self.int_vars: dict[tuple, IntVar] = {}
        self.bool_terms: dict[tuple, None] = {}
        self.link_clauses: list[list] = []  # pending (argvar, k, var, target) links

    def term_key(self, expr) -> tuple:
        """Intern a term; returns ('int', key) / ('bool', key) / ('const', n)."""
        value = _to_int(expr)
        if value is not None:
            return ("const", value)
        if isinstance(expr, str):
            if expr in ("true", "false"):
                return ("boolconst", expr == "true")
            decl = self.decls.get(expr)
            if decl is None:
                raise SmtError(f"unknown constant {expr!r}")
            if decl.arg_sorts:
                raise SmtError(f"{expr!r} expects arguments")
            return self._app(decl, ())
        if isinstance(expr, list) and expr and isinstance(expr[0], str):
            decl = self.decls.get(expr[0])
            if decl is None:
                raise SmtError(f"unknown function {expr[0]!r}")
            if len(expr) - 1 != len(decl.arg_sorts):
                raise SmtError(f"arity mismatch for {expr[0]!r}")
            args = tuple(self.term_key(a) for a in expr[1:])
            return self._app(decl, args)
        raise SmtError(f"unsupported term {expr!r}")

    def _app(self, decl: FunDecl, args: tuple) -> tuple:
        for a in args:
            if a[0] == "boolconst" or a[0] == "bool":
                raise SmtError(f"boolean argument to {decl.name!r} not supported")
        key = (decl.name,) + args
        if decl.ret_sort == "Bool":
            self.bool_terms.setdefault(("bool", key))
            return ("bool", key)
        if ("int", key) not in self.int_vars:
            self.int_vars[("int", key)] = IntVar(key)
        return ("int", key)


# ---------------------------------------------------------------------------
# Formula compilation (Tseitin over atoms and boolean terms)


class Compiler:
    def __init__(self, grounder: Grounder, sat: Sat):
        self.g = grounder
        self.sat = sat
        self.atom_vars: dict[tuple, int] = {}   # canonical atom -> sat var
        self.atom_of_var: dict[int, Atom] = {}
        self.bool_vars: dict[tuple, int] = {}
        self.cache: dict[int, int] = {}

    def bool_var(self, key: tuple) -> int:
        var = self.bool_vars.get(key)
        if var is None:
            var = self.sat.new_var()
            self.bool_vars[key] = var
        return var

    def atom_var(self, x, y, c: int) -> int:
        """SAT literal for the constraint x - y <= c."""
        xk = None if x is None or x[0] == "const" else x[1]
        yk = None if y is None or y[0] == "const" else y[1]
        base = 0
        if x is not None and x[0] == "const":
            base -= x[1]
        if y is not None and y[0] == "const":
            base += y[1]
        c = c + base
        if xk is None and yk is None:
            # ground truth: 0 <= c
            return self.const_lit(0 <= c)
        key = (xk, yk, c)
        var = self.atom_vars.get(key)
        if var is None:
            var = self.sat.new_var()
            self.atom_vars[key] = var
            self.atom_of_var[var] = Atom(xk, yk, c)
        return var

    def const_lit(self, truth: bool) -> int:
        if not hasattr(self, "_consts"):
            v = self.sat.new_var()
            self.sat.add_clause([v])
            self._consts = v
        return self._consts if truth else -self._consts

    # -- compile boolean expressions to literals ---------------------------

    def compile(self, expr) -> int:
        match expr:
            case "true":
                return self.const_lit(True)
            case "false":
                return self.const_lit(False)
            case str():
                key = self.g.term_key(expr)
                if key[0] != "bool":
                    raise SmtError(f"expected boolean, got {expr!r}")
                return self.bool_var(key)
            case ["not", a]:
                return -self.compile(a)
            case ["and", *args]:
                return self._gate(args, conj=True)
            case ["or", *args]:
                return self._gate(args, conj=False)
            case ["=>", *args]:
                if len(args) < 2:
                    raise SmtError("=> needs at least two arguments")
                lits = [self.compile(a) for a in args]
                cur = lits[-1]
                for lit in reversed(lits[:-1]):
                    cur = self._gate_lits([-lit, cur], conj=False)
                return cur
            case ["ite", c, a, b]:
                lc = self.compile(c)
                la, lb = self.compile(a), self.compile(b)
                return self._gate_lits(
                    [self._gate_lits([-lc, la], conj=False),
                     self._gate_lits([lc, lb], conj=False)], conj=True)
            case [("<=" | "<" | ">=" | ">") as op, a, b]:
                return self._comparison(op, a, b)
            case ["=", a, b]:
                return self._equality(a, b)
            case ["distinct", a, b]:
                return -self._equality(a, b)
            case [str() as head, *_] if head in self.g.decls:
                key = self.g.term_key(expr)
                if key[0] != "bool":
                    raise SmtError(f"expected boolean, got {expr!r}")
                return self.bool_var(key)
            case _:
                raise SmtError(f"unsupported expression {expr!r}")

    def _equality(self, a, b) -> int:
        ka = self.g.term_key(a)
        kb = self.g.term_key(b)
        if ka[0] == "bool" or kb[0] == "bool" or ka[0] == "boolconst" \
                or kb[0] == "boolconst":
            la = self.compile(a)
            lb = self.compile(b)
            return self._gate_lits(
                [self._gate_lits([-la, lb], conj=False),
                 self._gate_lits([la, -lb], conj=False)], conj=True)
        le = self.atom_var(ka, kb, 0)
        ge = self.atom_var(kb, ka, 0)
        return self._gate_lits([le, ge], conj=True)

    def _comparison(self, op: str, a, b) -> int:
        ka = self.g.term_key(a)
        kb = self.g.term_key(b)
        if op == "<=":
            return self.atom_var(ka, kb, 0)
        if op == "<":
            return self.atom_var(ka, kb, -1)
        if op == ">=":
            return self.atom_var(kb, ka, 0)
        return self.atom_var(kb, ka, -1)

    def _gate(self, args, conj: bool) -> int:
        return self._gate_lits([self.compile(a) for a in args], conj)

    def _gate_lits(self, lits: list[int], conj: bool) -> int:
        if not lits:
            return self.const_lit(conj)
        if len(lits) == 1:
            return lits[0]
        out = self.sat.new_var()
        if conj:
            for lit in lits:
                self.sat.add_clause([-out, lit])
            self.sat.add_clause([out] + [-lit for lit in lits])
        else:
            for lit in lits:
                self.sat.add_clause([out, -lit])
            self.sat.add_clause([-out] + lits)
        return out


# ---------------------------------------------------------------------------
# Difference-logic theory check


def difference_check(compiler: Compiler, model: dict[int, bool]):
    """Returns conflict lemmas (empty when consistent) and value assignment.

    Edges y -> x with weight c encode x <= y + c; a negative cycle is a
    contradiction and its literals form a blocking clause.  The relaxation
    runs queue-based (SPFA); a node relaxed more often than there are nodes
    sits on or behind a negative cycle.  Several disjoint cycles can be
    blocked per call, which keeps the lazy loop short.
    """
    adjacency: dict = {"Z0": []}

    def add_edge(src, dst, w, lit):
        adjacency.setdefault(src, []).append((dst, w, lit))
        adjacency.setdefault(dst, [])

    for var, atom in compiler.atom_of_var.items():
        x = atom.x if atom.x is not None else "Z0"
        y = atom.y if atom.y is not None else "Z0"
        if model.get(var, False):
            add_edge(y, x, atom.c, var)
        else:
            # not(x - y <= c)  ==  y - x <= -c - 1
            add_edge(x, y, -atom.c - 1, -var)

    lemmas = []
    banned_lits: set[int] = set()
    for _ in range(8):  # cap the cycles blocked per call
        cycle = _spfa_negative_cycle(adjacency, banned_lits)
        if cycle is None:
            break
        lemmas.append([-lit for lit in cycle])
        banned_lits.update(cycle)
    if lemmas:
        return lemmas, None
    dist = _spfa_distances(adjacency)
    base = dist["Z0"]
    return [], {v: d - base for v, d in dist.items() if v != "Z0"}


def _spfa_negative_cycle(adjacency: dict, banned: set[int]):
    nodes = list(adjacency)
    dist = {v: 0 for v in nodes}
    pred: dict = {v: None for v in nodes}
    count = {v: 0 for v in nodes}
    queue = deque(nodes)
    queued = set(nodes)
    limit = len(nodes)
    relaxations = 0
    while queue:
        u = queue.popleft()
        queued.discard(u)
        du = dist[u]
        for v, w, lit in adjacency[u]:
            if lit in banned:
                continue
            if du + w < dist[v]:
                dist[v] = du + w
                pred[v] = (u, lit)
                count[v] += 1
                relaxations += 1
                if count[v] > limit:
                    return _walk_cycle(pred, v, adjacency)
                if relaxations % 16 == 0:
                    # negative cycles show up in the predecessor graph long
                    # before any relaxation counter saturates
                    found = _pred_cycle(pred, v, limit)
                    if found is not None:
                        return found
                if v not in queued:
                    queue.append(v)
                    queued.add(v)
    return None


def _pred_cycle(pred: dict, start, limit: int):
    node = start
    seen = set()
    for _ in range(limit + 1):
        if pred[node] is None:
            return None
        if node in seen:
            return _collect_pred_cycle(pred, node)
        seen.add(node)
        node = pred[node][0]
    return None


def _collect_pred_cycle(pred: dict, node):
    lits = []
    cur = node
    while True:
        src, lit = pred[cur]
        lits.append(lit)
        cur = src
        if cur == node:
            return lits


def _walk_cycle(pred: dict, start, adjacency: dict):
    node = start
    seen_at: dict = {}
    order = []
    while node is not None and node not in seen_at:
        seen_at[node] = len(order)
        order.append(node)
        node = pred[node][0] if pred[node] is not None else None
    if node is None:
        # soundness fallback: block every asserted difference literal
        return [lit for edges in adjacency.values() for _, _, lit in edges]
    cycle_nodes = order[seen_at[node]:]
    return [pred[w][1] for w in cycle_nodes]


def _spfa_distances(adjacency: dict) -> dict:
    nodes = list(adjacency)
    dist = {v: 0 for v in nodes}
    queue = deque(nodes)
    queued = set(nodes)
    while queue:
        u = queue.popleft()
        queued.discard(u)
        du = dist[u]
        for v, w, _ in adjacency[u]:
            if du + w < dist[v]:
                dist[v] = du + w
                if v not in queued:
                    queue.append(v)
                    queued.add(v)
    return dist


# ---------------------------------------------------------------------------
# Script evaluation


@dataclass
class Outcome:
    status: str  # sat | unsat
    model_text: str = ""


def _scan_bounds(compiler: Compiler, grounder: Grounder, asserts: list) -> None:
    """Derive finite ranges for int variables from top-level comparisons."""

    def note(key, lo=None, hi=None):
        var = grounder.int_vars.get(key)
        if var is None:
            return
        if lo is not None:
            var.lo = lo if var.lo is None else max(var.lo, lo)
        if hi is not None:
            var.hi = hi if var.hi is None else min(var.hi, hi)

    def scan(expr):
        match expr:
            case ["and", *args]:
                for a in args:
                    scan(a)
            case [("<=" | "<" | ">=" | ">" | "=") as op, a, b]:
                ka = _to_int(a)
                kb = _to_int(b)
                if ka is None and kb is not None:
                    key = grounder.term_key(a)
                    if key[0] != "int":
                        return
                    if op == "<=":
                        note(key, hi=kb)
                    elif op == "<":
                        note(key, hi=kb - 1)
                    elif op == ">=":
                        note(key, lo=kb)
                    elif op == ">":
                        note(key, lo=kb + 1)
                    else:
                        note(key, lo=kb, hi=kb)
                elif kb is None and ka is not None:
                    key = grounder.term_key(b)
                    if key[0] != "int":
                        return
                    if op == "<=":
                        note(key, lo=ka)
                    elif op == "<":
                        note(key, lo=ka + 1)
                    elif op == ">=":
                        note(key, hi=ka)
                    elif op == ">":
                        note(key, hi=ka - 1)
                    else:
                        note(key, lo=ka, hi=ka)

    for a in asserts:
        scan(a)


def _nested_arg(args):
    nested = [a for a in args if a[0] == "int"]
    if len(nested) > 1:
        raise SmtError("only one nested argument is supported")
    return nested[0] if nested else None


def _arg_range(grounder: Grounder, arg, fname: str) -> range:
    argvar = grounder.int_vars[arg]
    if argvar.lo is None or argvar.hi is None:
        raise SmtError(
            f"argument {arg} of {fname} has no finite range; "
            "assert bounds before use")
    if argvar.lo > argvar.hi:
        raise _Infeasible  # asserted bounds contradict each other
    return range(argvar.lo, argvar.hi + 1)


def _arg_eq_lit(compiler: Compiler, arg, k: int) -> int:
    return compiler._gate_lits(
        [compiler.atom_var(arg, ("const", k), 0),
         compiler.atom_var(("const", k), arg, 0)], conj=True)


def _link_nested(compiler: Compiler, grounder: Grounder) -> None:
    """Case-split nested applications over their argument ranges."""
    pending = True
    while pending:
        pending = False
        for key, var in list(grounder.int_vars.items()):
            fname, *args = var.key
            arg = _nested_arg(args)
            if arg is None or getattr(var, "linked", False):
                continue
            var.linked = True
            pending = True
            los, his = [], []
            domain = _arg_range(grounder, arg, fname)
            for k in domain:
                concrete_args = tuple(
                    a if a[0] != "int" else ("const", k) for a in args)
                target = grounder._app(grounder.decls[fname], concrete_args)
                tvar = grounder.int_vars[target]
                if tvar.lo is not None:
                    los.append(tvar.lo)
                if tvar.hi is not None:
                    his.append(tvar.hi)
                # (arg = k) -> var = target
                eq_val = compiler._gate_lits(
                    [compiler.atom_var(key, target, 0),
                     compiler.atom_var(target, key, 0)], conj=True)
                compiler.sat.add_clause([-_arg_eq_lit(compiler, arg, k), eq_val])
            if var.lo is None and len(los) == len(domain):
                var.lo = min(los)
            if var.hi is None and len(his) == len(domain):
                var.hi = max(his)
    # nested boolean applications, e.g. an output bit of a successor state
    done = set()
    changed = True
    while changed:
        changed = False
        for key in list(grounder.bool_terms):
            fname, *args = key[1]
            arg = _nested_arg(args)
            if arg is None or key in done:
                continue
            done.add(key)
            changed = True
            nested_lit = compiler.bool_var(key)
            for k in _arg_range(grounder, arg, fname):
                concrete_args = tuple(
                    a if a[0] != "int" else ("const", k) for a in args)
                target = grounder._app(grounder.decls[fname], concrete_args)
                target_lit = compiler.bool_var(target)
                eq = _arg_eq_lit(compiler, arg, k)
                compiler.sat.add_clause([-eq, -nested_lit, target_lit])
                compiler.sat.add_clause([-eq, nested_lit, -target_lit])


def solve_script(text: str) -> Outcome:
    commands = parse_sexprs(text)
    decls: dict[str, FunDecl] = {}
    asserts = []
    want_model = False
    for cmd in commands:
        if not isinstance(cmd, list) or not cmd:
            raise SmtError(f"bad command {cmd!r}")
        head = cmd[0]
        if head in ("set-logic", "set-option", "set-info", "exit"):
            continue
        if head == "declare-fun":
            _, name, arg_sorts, ret = cmd
            decls[name] = FunDecl(name, tuple(arg_sorts), ret)
        elif head == "declare-const":
            _, name, ret = cmd
            decls[name] = FunDecl(name, (), ret)
        elif head == "assert":
            asserts.append(cmd[1])
        elif head == "check-sat":
            pass
        elif head == "get-model":
            want_model = True
        else:
            raise SmtError(f"unsupported command {head!r}")

    sat = Sat()
    grounder = Grounder(decls)
    compiler = Compiler(grounder, sat)
    try:
        roots = [compiler.compile(a) for a in asserts]
        _scan_bounds(compiler, grounder, asserts)
        _link_nested(compiler, grounder)
    except _Infeasible:
        return Outcome("unsat")
    for lit in roots:
        sat.add_clause([lit])

    values_box = {}

    def theory(model):
        lemmas, values = difference_check(compiler, model)
        if not lemmas:
            values_box["values"] = values
        return lemmas

    model = sat.solve(theory)
    if model is None:
        return Outcome("unsat")
    if not want_model:
        return Outcome("sat")
    return Outcome("sat", _format_model(grounder, compiler, model,
                                        values_box.get("values", {})))


def _format_model(grounder: Grounder, compiler: Compiler,
                  model: dict[int, bool], values: dict) -> str:
    per_fun: dict[str, list[tuple[tuple, object]]] = {}
    for key, var in grounder.int_vars.items():
        fname, *args = var.key
        if any(a[0] != "const" for a in args):
            continue  # nested instance; its concrete points carry the data
        point = tuple(a[1] for a in args)
        per_fun.setdefault(fname, []).append((point, values.get(key[1], 0)))
    for key in grounder.bool_terms:
        fname, *args = key[1]
        if any(a[0] != "const" for a in args):
            continue
        point = tuple(a[1] for a in args)
        var = compiler.bool_vars.get(key)
        value = model.get(var, False) if var is not None else False
        per_fun.setdefault(fname, []).append((point, value))

    lines = ["("]
    for fname in sorted(per_fun):
        decl = grounder.decls[fname]
        entries = sorted(per_fun[fname])
        params = " ".join(f"(x!{k} {s})" for k, s in enumerate(decl.arg_sorts))
        if not decl.arg_sorts:
            value = entries[0][1]
            lines.append(f"  (define-fun {fname} () {decl.ret_sort} "
                         f"{_value_text(value)})")
            continue
        body = _value_text(entries[-1][1])
        for point, value in reversed(entries[:-1]):
            cond = " ".join(f"(= x!{k} {v})" for k, v in enumerate(point))
            cond = f"(and {cond})" if len(point) > 1 else cond
            body = f"(ite {cond} {_value_text(value)} {body})"
        lines.append(f"  (define-fun {fname} ({params}) {decl.ret_sort} {body})")
    lines.append(")")
    return "\n".join(lines)


def _value_text(value) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    if value < 0:
        return f"(- {-value})"
    return str(value)


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if args:
        with open(args[0], "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = sys.stdin.read()
    try:
        outcome = solve_script(text)
    except SmtError as exc:
        print(f"(error \"{exc}\")")
        return 2
    print(outcome.status)
    if outcome.model_text:
        print(outcome.model_text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
