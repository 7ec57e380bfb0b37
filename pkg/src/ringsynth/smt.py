"""SMT-LIB 2 emission, solver subprocess driver, and model parsing.

Constraints are nested s-expressions (lists, strings, ints).  The driver
talks to any SMT-LIB-2-conformant solver over a text pipe; the bundled
finite-domain solver is the default command, so synthesis works without
external tools.  Every sat answer is re-checked by evaluating the emitted
assertions against the parsed model.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import sys
from dataclasses import dataclass

from .minismt import SmtError, parse_sexprs

__all__ = [
    "Declaration", "SolverResult", "default_solver_command", "emit_smtlib",
    "run_solver", "parse_model", "evaluate_term", "check_model",
]

Sexpr = object  # int | str | list


@dataclass(frozen=True)
class Declaration:
    name: str
    arg_sorts: tuple[str, ...]
    ret_sort: str
    domain: tuple[tuple[int, ...], ...] = ()   # concrete argument points
    int_range: tuple[int, int] | None = None   # inclusive value range


def default_solver_command() -> list[str]:
    """The bundled solver, unless RINGSYNTH_SOLVER_CMD overrides it."""
    override = os.environ.get("RINGSYNTH_SOLVER_CMD")
    if override:
        return shlex.split(override)
    return [sys.executable, "-m", "ringsynth.minismt"]


def sexpr_text(e: Sexpr) -> str:
    if isinstance(e, bool):
        return "true" if e else "false"
    if isinstance(e, int):
        return str(e) if e >= 0 else f"(- {-e})"
    if isinstance(e, str):
        return e
    return "(" + " ".join(sexpr_text(x) for x in e) + ")"


def emit_smtlib(assertions: list[Sexpr], declarations: list[Declaration]) -> str:
    """Emit a complete SMT-LIB 2 script; byte-stable for identical input."""
    lines = ["(set-option :produce-models true)", "(set-logic QF_UFLIA)"]
    for d in declarations:
        args = " ".join(d.arg_sorts)
        lines.append(f"(declare-fun {d.name} ({args}) {d.ret_sort})")
    for a in assertions:
        lines.append(f"(assert {sexpr_text(a)})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


@dataclass
class SolverResult:
    kind: str  # sat | unsat | unknown | timeout | error
    model_text: str = ""
    detail: str = ""

    def __bool__(self) -> bool:  # pragma: no cover - convenience only
        return self.kind == "sat"


def run_solver(script: str, command: list[str] | str | None = None,
               timeout: float | None = None) -> SolverResult:
    """Run an external solver process on the script.

    Timeouts, nonzero exits, and malformed output each yield their own
    outcome; none of them is ever conflated with unsat.
    """
    if command is None:
        command = default_solver_command()
    if isinstance(command, str):
        command = shlex.split(command)
    try:
        proc = subprocess.run(command, input=script, capture_output=True,
                              text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return SolverResult("timeout", detail=f"no answer within {timeout}s")
    except OSError as exc:
        return SolverResult("error", detail=str(exc))
    out = proc.stdout
    verdict = None
    rest_index = 0
    for line in out.splitlines(keepends=True):
        stripped = line.strip()
        rest_index += len(line)
        if stripped in ("sat", "unsat", "unknown"):
            verdict = stripped
            break
        if stripped.startswith("(error") or stripped == "":
            continue
        break
    if verdict is None:
        detail = (out + proc.stderr).strip() or f"exit status {proc.returncode}"
        return SolverResult("error", detail=detail[:2000])
    if verdict == "sat":
        return SolverResult("sat", model_text=out[rest_index:])
    if verdict == "unsat":
        return SolverResult("unsat")
    return SolverResult("unknown", detail=out[rest_index:].strip()[:2000])


# ---------------------------------------------------------------------------
# Model parsing


def _eval_sexpr(expr, env: dict, defs: dict):
    match expr:
        case "true":
            return True
        case "false":
            return False
        case str() as s:
            if s in env:
                return env[s]
            if s in defs:
                return _apply_def(defs[s], (), env, defs)
            if s.lstrip("-").isdigit():
                return int(s)
            raise SmtError(f"unbound symbol {s!r} in model")
        case ["-", a]:
            return -_eval_sexpr(a, env, defs)
        case ["-", a, b]:
            return _eval_sexpr(a, env, defs) - _eval_sexpr(b, env, defs)
        case ["+", *args]:
            return sum(_eval_sexpr(a, env, defs) for a in args)
        case ["*", a, b]:
            return _eval_sexpr(a, env, defs) * _eval_sexpr(b, env, defs)
        case ["ite", c, a, b]:
            return _eval_sexpr(a, env, defs) if _eval_sexpr(c, env, defs) \
                else _eval_sexpr(b, env, defs)
        case ["=", a, b]:
            return _eval_sexpr(a, env, defs) == _eval_sexpr(b, env, defs)
        case ["distinct", a, b]:
            return _eval_sexpr(a, env, defs) != _eval_sexpr(b, env, defs)
        case ["not", a]:
            return not _eval_sexpr(a, env, defs)
        case ["and", *args]:
            return all(_eval_sexpr(a, env, defs) for a in args)
        case ["or", *args]:
            return any(_eval_sexpr(a, env, defs) for a in args)
        case ["=>", a, b]:
            return (not _eval_sexpr(a, env, defs)) or _eval_sexpr(b, env, defs)
        case ["<=", a, b]:
            return _eval_sexpr(a, env, defs) <= _eval_sexpr(b, env, defs)
        case ["<", a, b]:
            return _eval_sexpr(a, env, defs) < _eval_sexpr(b, env, defs)
        case [">=", a, b]:
            return _eval_sexpr(a, env, defs) >= _eval_sexpr(b, env, defs)
        case [">", a, b]:
            return _eval_sexpr(a, env, defs) > _eval_sexpr(b, env, defs)
        case [str() as head, *args] if head in defs:
            values = tuple(_eval_sexpr(a, env, defs) for a in args)
            return _apply_def(defs[head], values, env, defs)
        case _:
            raise SmtError(f"cannot evaluate model expression {expr!r}")


def _apply_def(definition, args: tuple, env: dict, defs: dict):
    params, body = definition
    if len(params) != len(args):
        raise SmtError("arity mismatch in model definition")
    local = dict(zip(params, args))
    return _eval_sexpr(body, local, defs)


def parse_model(model_text: str, declarations: list[Declaration]) -> dict:
    """Total valuations per declaration over its declared domain.

    Returns {(name, args...): value}.  Missing functions, non-total
    definitions, and out-of-range values are rejected.
    """
    defs: dict[str, tuple] = {}

    def collect(exprs) -> None:
        for e in exprs:
            if not isinstance(e, list) or not e:
                continue
            if e[0] == "define-fun":
                _, name, params, _ret, body = e
                defs[name] = ([p[0] for p in params], body)
            elif e[0] == "model":
                collect(e[1:])
            else:
                collect(e)  # bare parenthesized group of definitions

    collect(parse_sexprs(model_text))

    values: dict = {}
    for d in declarations:
        if d.name not in defs:
            raise SmtError(f"model lacks a definition for {d.name!r}")
        points = d.domain if d.arg_sorts else ((),)
        for point in points:
            try:
                value = _apply_def(defs[d.name], point, {}, defs)
            except SmtError as exc:
                raise SmtError(f"{d.name}{point}: {exc}") from None
            if d.ret_sort == "Int":
                if not isinstance(value, int) or isinstance(value, bool):
                    raise SmtError(f"{d.name}{point}: expected Int, got {value!r}")
                if d.int_range is not None and \
                        not d.int_range[0] <= value <= d.int_range[1]:
                    raise SmtError(
                        f"{d.name}{point}: value {value} outside range {d.int_range}")
            else:
                if not isinstance(value, bool):
                    raise SmtError(f"{d.name}{point}: expected Bool, got {value!r}")
            values[(d.name,) + tuple(point)] = value
    return values


# ---------------------------------------------------------------------------
# Independent assertion re-evaluation


def evaluate_term(expr, values: dict):
    """Evaluate an emitted assertion term under parsed model values."""
    match expr:
        case bool():
            return expr
        case int():
            return expr
        case "true":
            return True
        case "false":
            return False
        case str() as s:
            if (s,) in values:
                return values[(s,)]
            if s.lstrip("-").isdigit():
                return int(s)
            raise SmtError(f"unbound symbol {s!r}")
        case ["ite", c, a, b]:
            return evaluate_term(a, values) if evaluate_term(c, values) \
                else evaluate_term(b, values)
        case ["not", a]:
            return not evaluate_term(a, values)
        case ["and", *args]:
            return all(evaluate_term(a, values) for a in args)
        case ["or", *args]:
            return any(evaluate_term(a, values) for a in args)
        case ["=>", a, b]:
            return (not evaluate_term(a, values)) or evaluate_term(b, values)
        case ["=", a, b]:
            return evaluate_term(a, values) == evaluate_term(b, values)
        case ["distinct", a, b]:
            return evaluate_term(a, values) != evaluate_term(b, values)
        case ["<=", a, b]:
            return evaluate_term(a, values) <= evaluate_term(b, values)
        case ["<", a, b]:
            return evaluate_term(a, values) < evaluate_term(b, values)
        case [">=", a, b]:
            return evaluate_term(a, values) >= evaluate_term(b, values)
        case [">", a, b]:
            return evaluate_term(a, values) > evaluate_term(b, values)
        case ["-", a]:
            return -evaluate_term(a, values)
        case ["-", a, b]:
            return evaluate_term(a, values) - evaluate_term(b, values)
        case ["+", *args]:
            return sum(evaluate_term(a, values) for a in args)
        case [str() as head, *args]:
            key = (head,) + tuple(evaluate_term(a, values) for a in args)
            if key not in values:
                raise SmtError(f"no model value for {key}")
            return values[key]
        case _:
            raise SmtError(f"cannot evaluate {expr!r}")


def check_model(assertions: list, values: dict) -> list[int]:
    """Indices of assertions the model fails to satisfy (empty when sound)."""
    bad = []
    for k, a in enumerate(assertions):
        if evaluate_term(a, values) is not True:
            bad.append(k)
    return bad
