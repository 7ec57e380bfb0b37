"""Command-line entry point: synthesize, verify, encode, and the bus-arbiter
preset workflow.

Exit codes follow a fixed contract so long runs can be scripted:
0 success, 10 no model within the bound, 20 solver failure or timeout,
3 verification failure, 2 usage errors.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import click

from . import checker, ltl, report, ring, smt, synth, transforms
from .pspec import builtin_corpus, load_spec
from .ring import RingConfig, template_from_json, template_to_dot, template_to_json
from .synth import PinnedPrefix, build_instance, synthesize_loop
from .transforms import dumps_hub, prepare_for_synthesis

EXIT_OK = 0
EXIT_NO_MODEL = 10
EXIT_SOLVER = 20
EXIT_VERIFY = 3

PRESETS = ("simple_arbiter", "amba_non0", "amba_zero", "amba_zero_reduced_burst")

TIMING_BY_MODE = {"sync": "synchronous", "interleaving": "interleaving",
                  "async": "fully_asynchronous"}


def _load(spec_path: str | None, preset: str | None):
    if (spec_path is None) == (preset is None):
        raise click.UsageError("exactly one of --spec and --preset is required")
    if preset is not None:
        return builtin_corpus(preset)
    return load_spec(spec_path)


def _ground_alpha(text: str) -> ltl.Formula:
    """Phase assumptions arrive indexed (HLOCK(i) && ...); drop the index."""
    f = ltl.parse_ltl(text)
    if isinstance(f, ltl.Globally):
        f = f.sub
    return transforms._ground_local(f, "phase assumption")


def _write_model(template, out_base: Path, figure: bool) -> list[Path]:
    out_base.parent.mkdir(parents=True, exist_ok=True)
    written = []
    json_path = out_base.with_suffix(".json")
    json_path.write_text(template_to_json(template), encoding="utf-8")
    written.append(json_path)
    dot_path = out_base.with_suffix(".dot")
    dot_path.write_text(template_to_dot(template, out_base.stem), encoding="utf-8")
    written.append(dot_path)
    if figure:
        written.append(report.render_template_figure(
            template, out_base.with_suffix(".png"), title=out_base.stem))
    return written


@click.group()
def main() -> None:
    """Synthesis and verification of token-ring process templates."""


@main.command("synth")
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None)
@click.option("--preset", type=click.Choice(PRESETS), default=None)
@click.option("--process", type=click.Choice(["uniform", "non0", "zero"]),
              default="uniform", help="side of the 0-process split to take")
@click.option("--max-bound", default=10, show_default=True)
@click.option("--min-bound", default=2, show_default=True)
@click.option("--phase-assumption", default=None,
              help="extra invariant over inputs, e.g. 'G (HLOCK(i) && HBURST==BURST4)'")
@click.option("--pin", "pin_path", type=click.Path(exists=True), default=None,
              help="model file whose states and covered transitions stay fixed")
@click.option("--pin-assumption", default=None,
              help="the assumption the pinned model was synthesized under")
@click.option("--no-direct-encoding", is_flag=True)
@click.option("--no-hardcode-token", is_flag=True)
@click.option("--solver-cmd", default=None,
              help="external SMT solver command (default: bundled solver)")
@click.option("--timeout", type=float, default=None, help="per-query seconds")
@click.option("--parallel-bounds", default=1, show_default=True)
@click.option("--out", "out_base", type=click.Path(), default="model")
@click.option("--figure/--no-figure", default=True)
@click.option("--dump-transformed", "dump_path", type=click.Path(), default=None)
def cmd_synth(spec_path, preset, process, max_bound, min_bound,
              phase_assumption, pin_path, pin_assumption, no_direct_encoding,
              no_hardcode_token, solver_cmd, timeout, parallel_bounds,
              out_base, figure, dump_path) -> None:
    """Synthesize a process template from a ring specification."""
    spec = _load(spec_path, preset)
    hub = prepare_for_synthesis(spec, process=process)
    if dump_path:
        Path(dump_path).write_text(dumps_hub(hub), encoding="utf-8")
    extra_alpha = _ground_alpha(phase_assumption) if phase_assumption else None
    pinned = None
    if pin_path:
        prev = ltl.parse_ltl(pin_assumption) if pin_assumption else None
        if prev is not None and isinstance(prev, ltl.Globally):
            prev = prev.sub
        if prev is not None:
            prev = transforms._ground_local(prev, "pin assumption")
        pinned = PinnedPrefix(
            template_from_json(Path(pin_path).read_text(encoding="utf-8")), prev)
    result = synthesize_loop(
        hub, max_bound=max_bound, min_bound=min_bound,
        direct=not no_direct_encoding, hardcode_token=not no_hardcode_token,
        pinned=pinned, extra_alpha=extra_alpha, solver_command=solver_cmd,
        timeout=timeout, parallel_bounds=parallel_bounds)
    rows = [{"bound": b, "seconds": f"{t:.2f}", "answer": s}
            for b, t, s in result.timings]
    click.echo(report.write_tsv(rows, ["bound", "seconds", "answer"]), nl=False)
    if result.status == "no_model":
        click.echo(result.detail, err=True)
        sys.exit(EXIT_NO_MODEL)
    if result.status == "solver_failure":
        click.echo(f"solver failure: {result.detail}", err=True)
        sys.exit(EXIT_SOLVER)
    for path in _write_model(result.template, Path(out_base), figure):
        click.echo(f"wrote {path}", err=True)
    click.echo(f"states\t{result.template.n_states}")
    sys.exit(EXIT_OK)


@main.command("encode")
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None)
@click.option("--preset", type=click.Choice(PRESETS), default=None)
@click.option("--process", type=click.Choice(["uniform", "non0", "zero"]),
              default="uniform")
@click.option("--bound", default=2, show_default=True)
@click.option("--phase-assumption", default=None)
@click.option("--no-direct-encoding", is_flag=True)
@click.option("--no-hardcode-token", is_flag=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def cmd_encode(spec_path, preset, process, bound, phase_assumption,
               no_direct_encoding, no_hardcode_token, out_path) -> None:
    """Dump the exact SMT-LIB 2 query for one bound."""
    spec = _load(spec_path, preset)
    hub = prepare_for_synthesis(spec, process=process)
    extra_alpha = _ground_alpha(phase_assumption) if phase_assumption else None
    inst = build_instance(hub, bound, direct=not no_direct_encoding,
                          hardcode_token=not no_hardcode_token,
                          extra_alpha=extra_alpha)
    script = smt.emit_smtlib(synth.all_constraints(inst), synth.declarations(inst))
    if out_path:
        Path(out_path).write_text(script, encoding="utf-8")
        click.echo(f"wrote {out_path}", err=True)
    else:
        click.echo(script, nl=False)


@main.command("verify")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--zero-model", "zero_path", type=click.Path(exists=True), default=None,
              help="template for ring vertex 0 of a combined ring")
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None)
@click.option("--preset", type=click.Choice(PRESETS), default=None)
@click.option("--ring-size", "sizes", multiple=True, type=int)
@click.option("--cutoff", is_flag=True, help="verify at cutoff sizes instead")
@click.option("--extra", default=1, show_default=True,
              help="additional ring sizes beyond the cutoff")
@click.option("--mode", type=click.Choice(["sync", "interleaving", "async"]),
              default="async", show_default=True)
@click.option("--report", "report_base", type=click.Path(), default=None,
              help="base path for the TSV report and figure")
def cmd_verify(model_path, zero_path, spec_path, preset, sizes, cutoff,
               extra, mode, report_base) -> None:
    """Check a synthesized template (or combined ring) against a spec."""
    spec = _load(spec_path, preset)
    template = template_from_json(Path(model_path).read_text(encoding="utf-8"))
    zero = template_from_json(Path(zero_path).read_text(encoding="utf-8")) \
        if zero_path else None
    timing = TIMING_BY_MODE[mode]

    failures = []
    rows = []
    violations = ring.check_wellformed(template, with_condition_a=True)
    if zero is not None:
        violations += ring.check_wellformed(zero, with_condition_a=True)
    if violations:
        for v in violations:
            click.echo(f"ill-formed template: condition ({v.condition}): "
                       f"{v.witness}", err=True)
        sys.exit(EXIT_VERIFY)
    release = checker.check_token_release(template)
    rows.append({"property": "token-release", "size": "-", "mode": "-",
                 "verdict": "holds" if release.holds else "fails"})
    if not release.holds:
        failures.append("token-release")

    if cutoff:
        for prop in spec.guarantees:
            rep = checker.cutoff_sample_check(template, spec, prop,
                                              extra=extra, timing=timing)
            if rep.info.cutoff is None:
                rows.append({"property": prop.name, "size": "-", "mode": timing,
                             "verdict": f"no cutoff known ({rep.info.reason})"})
                continue
            for n, ok in rep.verdicts.items():
                rows.append({"property": prop.name, "size": n, "mode": timing,
                             "verdict": "holds" if ok else "fails"})
                if not ok:
                    failures.append(f"{prop.name}@{n}")
            if not rep.agree:
                failures.append(f"{prop.name}: cutoff sampling disagrees")
            for note in rep.notes:
                click.echo(f"note: {prop.name}: {note}", err=True)
    else:
        if not sizes:
            sizes = (2,)
        for n in sizes:
            templates = [template] * n
            if zero is not None:
                templates[0] = zero
            for prop in spec.guarantees:
                outcome = checker.verify_ring(
                    templates, RingConfig(n, timing), prop,
                    assumptions=spec.assumptions,
                    global_inputs=spec.global_inputs)
                rows.append({"property": prop.name, "size": n, "mode": timing,
                             "verdict": "holds" if outcome.holds else "fails"})
                if not outcome.holds:
                    failures.append(f"{prop.name}@{n}")
                    click.echo(f"counterexample for {prop.name} at n={n} "
                               f"(index {outcome.index}):", err=True)
                    click.echo(checker.format_trace(outcome.counterexample),
                               err=True)
    text = report.write_tsv(rows, ["property", "size", "mode", "verdict"])
    click.echo(text, nl=False)
    if report_base:
        base = Path(report_base)
        base.parent.mkdir(parents=True, exist_ok=True)
        report.write_tsv(rows, ["property", "size", "mode", "verdict"],
                         base.with_suffix(".tsv"))
        report.render_template_figure(template, base.with_suffix(".png"),
                                      title=Path(model_path).stem)
    sys.exit(EXIT_VERIFY if failures else EXIT_OK)


AMBA_PHASES = [
    ("1", "G (HLOCK(i) && HBURST==BURST4)"),
    ("2", "G (HBURST==BURST4)"),
    ("3", None),
]

AMBA_BOUNDS = {"1": 12, "2": 15, "3": 16}


@main.command("amba")
@click.option("--process", type=click.Choice(["non0", "zero"]), required=True)
@click.option("--phase", type=click.Choice(["1", "2", "3", "all"]), default="all",
              show_default=True)
@click.option("--reduced-burst", is_flag=True,
              help="shorter bus bursts (0-process variant)")
@click.option("--solver-cmd", default=None)
@click.option("--timeout", type=float, default=None)
@click.option("--parallel-bounds", default=1, show_default=True)
@click.option("--max-bound", "bound_cap", type=int, default=None,
              help="cap the per-phase bound tables")
@click.option("--out-dir", type=click.Path(), default="amba-out", show_default=True)
@click.option("--figure/--no-figure", default=True)
def cmd_amba(process, phase, reduced_burst, solver_cmd, timeout,
             parallel_bounds, bound_cap, out_dir, figure) -> None:
    """Three-phase decompositional synthesis of the bus arbiter.

    Phase 1 assumes locked four-beat bursts only, phase 2 relaxes the lock,
    phase 3 is the full specification; each phase pins the previous model.
    The long phases are only feasible with an efficient external solver.
    """
    if reduced_burst and process != "zero":
        raise click.UsageError("--reduced-burst applies to the 0-process")
    if process == "zero" and not reduced_burst:
        click.echo("warning: the 0-process with original burst lengths is "
                   "long-running (hours, and possibly no model at these "
                   "bounds); consider --reduced-burst", err=True)
    preset = "amba_zero_reduced_burst" if reduced_burst else (
        "amba_zero" if process == "zero" else "amba_non0")
    spec = builtin_corpus(preset)
    hub = prepare_for_synthesis(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    phases = AMBA_PHASES if phase == "all" else \
        [p for p in AMBA_PHASES if p[0] == phase]
    pinned = None
    if phase not in ("all", "1"):
        click.echo("warning: running a later phase without its predecessor "
                   "leaves nothing pinned", err=True)
    rows = []
    for name, alpha_text in phases:
        extra = _ground_alpha(alpha_text) if alpha_text else None
        max_bound = AMBA_BOUNDS[name] if bound_cap is None \
            else min(AMBA_BOUNDS[name], bound_cap)
        t0 = time.time()
        result = synthesize_loop(
            hub, max_bound=max_bound,
            min_bound=pinned.template.n_states if pinned else 2,
            extra_alpha=extra, pinned=pinned, solver_command=solver_cmd,
            timeout=timeout, parallel_bounds=parallel_bounds)
        elapsed = time.time() - t0
        if result.status != "ok":
            click.echo(f"phase {name}: {result.status}: {result.detail}",
                       err=True)
            sys.exit(EXIT_NO_MODEL if result.status == "no_model" else EXIT_SOLVER)
        rows.append({"phase": name,
                     "assumption": alpha_text or "- (full specification)",
                     "states": result.template.n_states,
                     "seconds": round(elapsed, 1)})
        base = out / f"{preset}-phase{name}"
        _write_model(result.template, base, figure)
        pinned = PinnedPrefix(result.template, extra)
    text = report.write_tsv(rows, ["phase", "assumption", "states", "seconds"],
                            out / f"{preset}-summary.tsv")
    click.echo(text, nl=False)
    if figure:
        report.render_phase_summary(rows, out / f"{preset}-summary.png")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
