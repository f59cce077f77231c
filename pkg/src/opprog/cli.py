"""Command-line entry point wiring the library for batch use.

Configuration precedence is flag > environment (OPPROG_*) > --config file >
built-in default. Every subcommand supports --json for machine-readable
output; identical invocations produce byte-identical output.
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from . import annotate as annotate_mod
from . import datakit, evalkit, textnum
from .categorize import classify, default_lexicon, load_lexicon, score_categories
from .errors import OpProgError, ProgramSyntaxError
from .evaluator import evaluate, validate_refs
from .program import format_arg, parse_program, serialize_program
from .registry import default_constants, default_registry, load_constants, load_registry

_CONFIG_KEYS = ("registry", "constants", "lexicon", "abs_tol", "rel_tol",
                "seed", "max_states")


@dataclass
class CliConfig:
    registry_path: str | None = None
    constants_path: str | None = None
    lexicon_path: str | None = None
    abs_tol: float = 0.01
    rel_tol: float = 0.01
    seed: int = 0
    max_states: int = 200_000
    json_mode: bool = False

    def registry(self):
        return load_registry(self.registry_path) if self.registry_path else default_registry()

    def constants(self):
        return load_constants(self.constants_path) if self.constants_path else default_constants()

    def lexicon(self):
        return load_lexicon(self.lexicon_path) if self.lexicon_path else default_lexicon()

    def match(self) -> evalkit.MatchConfig:
        return evalkit.MatchConfig(abs_tol=self.abs_tol, rel_tol=self.rel_tol,
                                   rng_seed=self.seed)


def _build_config(config_path, **flags) -> CliConfig:
    file_values = {}
    if config_path:
        doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
        unknown = set(doc) - set(_CONFIG_KEYS)
        if unknown:
            raise click.UsageError(f"unknown config fields: {sorted(unknown)}")
        file_values = doc
    cfg = CliConfig()
    cfg.registry_path = flags.get("registry") or file_values.get("registry")
    cfg.constants_path = flags.get("constants") or file_values.get("constants")
    cfg.lexicon_path = flags.get("lexicon") or file_values.get("lexicon")
    for name in ("abs_tol", "rel_tol", "seed", "max_states"):
        flag = flags.get(name)
        if flag is not None:
            setattr(cfg, name, flag)
        elif name in file_values:
            setattr(cfg, name, file_values[name])
    cfg.json_mode = bool(flags.get("json_mode"))
    return cfg


def _emit(cfg: CliConfig, data, human: str) -> None:
    if cfg.json_mode:
        click.echo(json.dumps(data, sort_keys=True))
    else:
        click.echo(human)


def _fail(error: OpProgError) -> None:
    payload = {"error": type(error).__name__, "message": str(error)}
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


def _format_value(v: float) -> str:
    return f"{v:g}"


def _read_program_text(text: str) -> str:
    if text == "-":
        text = sys.stdin.read()
    if not text.strip():
        raise click.UsageError("program text is empty")
    return text


def _parse_numbers(csv: str | None) -> list[float]:
    if not csv:
        return []
    return [float(tok) for tok in csv.replace(",", " ").split()]


@click.group(context_settings={"auto_envvar_prefix": "OPPROG"})
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON file with default settings.")
@click.option("--registry", type=click.Path(exists=True), default=None,
              help="Operation registry file.")
@click.option("--constants", type=click.Path(exists=True), default=None,
              help="Constant table file.")
@click.option("--lexicon", type=click.Path(exists=True), default=None,
              help="Category lexicon file.")
@click.option("--abs-tol", type=float, default=None, help="Absolute match tolerance.")
@click.option("--rel-tol", type=float, default=None, help="Relative match tolerance.")
@click.option("--seed", type=int, default=None, help="Seed for random fallbacks.")
@click.option("--max-states", type=int, default=None, help="Search state budget.")
@click.option("--json", "json_mode", is_flag=True, help="Machine-readable output.")
@click.pass_context
def main(ctx, config_path, registry, constants, lexicon, abs_tol, rel_tol,
         seed, max_states, json_mode):
    """Operation-program toolkit: execute and derive programs, screen and
    expand datasets, score predictions, and run the annotation service."""
    ctx.obj = _build_config(
        config_path, registry=registry, constants=constants, lexicon=lexicon,
        abs_tol=abs_tol, rel_tol=rel_tol, seed=seed, max_states=max_states,
        json_mode=json_mode,
    )


@main.command("exec")
@click.argument("program_text")
@click.option("--numbers", default=None, help="Problem numbers, comma-separated.")
@click.option("--problem", default=None, help="Extract the numbers from this text.")
@click.pass_obj
def exec_cmd(cfg: CliConfig, program_text, numbers, problem):
    """Execute PROGRAM_TEXT and print its step values ('-' reads stdin)."""
    text = _read_program_text(program_text)
    nums = _parse_numbers(numbers)
    if problem:
        nums = [m.value for m in textnum.extract_numbers(problem)]
    try:
        program = parse_program(text)
        report = validate_refs(program, len(nums), cfg.registry(), cfg.constants())
        if not report.ok:
            raise OpProgError(
                "invalid program: " + "; ".join(v.message for v in report.violations))
        trace = evaluate(program, nums, cfg.registry(), cfg.constants())
    except ProgramSyntaxError as e:
        raise click.UsageError(str(e))
    except OpProgError as e:
        _fail(e)
        return
    lines = [f"#{i} {call} = {_format_value(v)}"
             for i, (call, v) in enumerate(zip(program.calls, trace.step_values))]
    lines.append(f"final {_format_value(trace.final)}")
    _emit(cfg, {"steps": list(trace.step_values), "final": trace.final},
          "\n".join(lines))


@main.command("parse")
@click.argument("program_text")
@click.pass_obj
def parse_cmd(cfg: CliConfig, program_text):
    """Parse PROGRAM_TEXT and print its canonical form."""
    text = _read_program_text(program_text)
    try:
        program = parse_program(text)
    except ProgramSyntaxError as e:
        raise click.UsageError(str(e))
    canonical = serialize_program(program)
    _emit(cfg, {
        "canonical": canonical,
        "calls": [{"op": c.op, "args": [format_arg(a) for a in c.args]}
                  for c in program.calls],
    }, canonical)


@main.command("categorize")
@click.argument("text")
@click.pass_obj
def categorize_cmd(cfg: CliConfig, text):
    """Categorize problem TEXT with the lexicon."""
    lexicon = cfg.lexicon()
    label = classify(text, lexicon)
    scores = score_categories(text, lexicon)
    _emit(cfg, {"label": label.value, "scores": scores.as_dict()}, label.value)


@main.command("annotate")
@click.option("--problem", required=True, help="Problem text.")
@click.option("--rationale", required=True, help="Worked solution text.")
@click.option("--answer", type=float, required=True, help="Target numeric answer.")
@click.option("--max-steps", type=int, default=8, show_default=True)
@click.option("--ops", default=None,
              help="Comma-separated op subset; defaults to the problem "
                   "category's palette plus the general operations.")
@click.option("--use-constants", is_flag=True,
              help="Expose the constant table to the search.")
@click.pass_obj
def annotate_cmd(cfg: CliConfig, problem, rationale, answer, max_steps, ops,
                 use_constants):
    """Derive candidate programs from a rationale."""
    registry = cfg.registry()
    if ops:
        op_names = tuple(ops.split(","))
    else:
        category = classify(problem, cfg.lexicon())
        op_names = tuple(registry.palette(category))
    config = annotate_mod.SearchConfig(
        max_steps=max_steps, max_states=cfg.max_states,
        answer=cfg.match(),
        op_names=op_names,
    )
    numbers = [m.value for m in textnum.extract_numbers(problem)]
    trace = annotate_mod.extract_rationale_trace(rationale, config)
    try:
        result = annotate_mod.dp_annotate(
            numbers, trace, answer, registry,
            cfg.constants() if use_constants else None, config)
    except OpProgError as e:
        _fail(e)
        return
    programs = [serialize_program(p) for p in result.programs]
    human = "\n".join([result.status] + programs)
    _emit(cfg, {"status": result.status, "programs": programs}, human)


@main.command("enumerate")
@click.option("--numbers", required=True, help="Problem numbers, comma-separated.")
@click.option("--target", type=float, required=True)
@click.option("--max-len", type=int, default=2, show_default=True)
@click.option("--tol", type=float, default=None, help="Defaults to the match tolerance.")
@click.option("--ops", default=None, help="Comma-separated op subset.")
@click.option("--use-constants", is_flag=True)
@click.pass_obj
def enumerate_cmd(cfg: CliConfig, numbers, target, max_len, tol, ops, use_constants):
    """Brute-force all programs reaching the target."""
    registry = cfg.registry()
    nums = _parse_numbers(numbers)
    tol = tol if tol is not None else max(cfg.abs_tol, cfg.rel_tol * abs(target))
    try:
        programs = annotate_mod.enumerate_programs(
            nums, registry, cfg.constants() if use_constants else None,
            max_len, target, tol,
            op_names=tuple(ops.split(",")) if ops else None)
    except OpProgError as e:
        _fail(e)
        return
    serialized = [serialize_program(p) for p in programs]
    _emit(cfg, {"programs": serialized, "count": len(serialized)},
          "\n".join(serialized) if serialized else "(none)")


@main.command("stats")
@click.argument("dataset", type=click.Path(exists=True))
@click.pass_obj
def stats_cmd(cfg: CliConfig, dataset):
    """Corpus statistics per category."""
    records, report = datakit.load_dataset(dataset, cfg.registry(), cfg.constants())
    stats = datakit.compute_stats(records)
    data = {
        "load": report.summary(),
        "rows": {name: vars(s) for name, s in stats.rows},
        "total": vars(stats.total),
    }
    _emit(cfg, data, datakit.render_stats_table(stats) + f"\n{report.summary()}")


@main.command("validate")
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--fix", is_flag=True, help="Write only valid records to --output.")
@click.option("--output", type=click.Path(), default=None)
@click.pass_obj
def validate_cmd(cfg: CliConfig, dataset, fix, output):
    """Check that each record's program reproduces its correct option."""
    registry, consts = cfg.registry(), cfg.constants()
    records, report = datakit.load_dataset(dataset, registry, consts)
    match = cfg.match()
    verdicts = [datakit.validate_record(r, registry, consts, match)
                for r in records if r.program is not None]
    valid = [v for v in verdicts if v.valid]
    failures = [{"id": v.record_id, "reason": v.reason, "detail": v.detail}
                for v in verdicts if not v.valid]
    if fix:
        if not output:
            raise click.UsageError("--fix requires --output")
        keep_ids = {v.record_id for v in valid}
        kept = [r for r in records if r.program is None or r.id in keep_ids]
        datakit.save_dataset(kept, output)
    data = {"checked": len(verdicts), "valid": len(valid), "failures": failures,
            "load": report.summary()}
    human = [f"checked {len(verdicts)} annotated records: {len(valid)} valid, "
             f"{len(failures)} invalid"]
    human += [f"  {f['id']}: {f['reason']} {f['detail'] or ''}".rstrip()
              for f in failures]
    _emit(cfg, data, "\n".join(human))


@main.command("duplicates")
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--threshold", type=int, default=4, show_default=True,
              help="Word edit-distance threshold.")
@click.pass_obj
def duplicates_cmd(cfg: CliConfig, dataset, threshold):
    """Cluster near-duplicate problems."""
    records, _ = datakit.load_dataset(dataset, cfg.registry(), cfg.constants())
    try:
        clusters = datakit.find_near_duplicates(records, word_threshold=threshold)
    except OpProgError as e:
        _fail(e)
        return
    human = "\n".join(" ".join(c) for c in clusters) if clusters else "(none)"
    _emit(cfg, {"clusters": clusters, "count": len(clusters)}, human)


@main.command("expand")
@click.option("--annotated", "annotated_path", required=True,
              type=click.Path(exists=True))
@click.option("--unannotated", "unannotated_path", required=True,
              type=click.Path(exists=True))
@click.option("--output", type=click.Path(), required=True)
@click.option("--threshold", type=int, default=4, show_default=True)
@click.pass_obj
def expand_cmd(cfg: CliConfig, annotated_path, unannotated_path, output, threshold):
    """Transfer programs onto near-duplicate problems, keeping only those
    that still reach the correct option."""
    registry, consts = cfg.registry(), cfg.constants()
    annotated, _ = datakit.load_dataset(annotated_path, registry, consts)
    unannotated, _ = datakit.load_dataset(unannotated_path, registry, consts)
    new_records, report = datakit.expand_annotations(
        annotated, unannotated, registry, consts, cfg.match(),
        word_threshold=threshold)
    datakit.save_dataset(new_records, output)
    data = {"attempted": report.attempted, "accepted": report.accepted,
            "rejected": report.rejected, "pairs": report.pairs}
    _emit(cfg, data,
          f"attempted {report.attempted}, accepted {report.accepted}, "
          f"rejected {sum(report.rejected.values())}")


@main.command("eval")
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--beams", required=True,
              help="Beam file path, or 'empty' for the random baseline.")
@click.option("--seed", type=int, default=None,
              help="Overrides the global seed for the random fallback.")
@click.pass_obj
def eval_cmd(cfg: CliConfig, dataset, beams, seed):
    """Score beam predictions; problems without usable programs answer at
    random from the seeded stream."""
    registry, consts = cfg.registry(), cfg.constants()
    records, _ = datakit.load_dataset(dataset, registry, consts)
    if beams == "empty":
        beam_map = {r.id: evalkit.PredictionBeam(r.id, ()) for r in records}
    else:
        beam_map = evalkit.load_beams(beams)
    match = cfg.match()
    if seed is not None:
        match = evalkit.MatchConfig(abs_tol=match.abs_tol, rel_tol=match.rel_tol,
                                    beam_size=match.beam_size, rng_seed=seed)
    report = evalkit.evaluate_predictions(records, beam_map, registry, consts,
                                          match)
    _emit(cfg, report.as_dict(), evalkit.render_report(report))


@main.command("serve")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), default=None)
@click.option("--event-log", "event_log_path", type=click.Path(), default=None)
@click.option("--trust-threshold", type=float, default=None)
@click.option("--service-config", type=click.Path(exists=True), default=None,
              help="Service config file (JSON).")
@click.pass_obj
def serve_cmd(cfg: CliConfig, host, port, dataset_path, event_log_path,
              trust_threshold, service_config):
    """Run the annotation service."""
    import uvicorn

    from .service import create_app
    from .service.config import load_config

    config = load_config(
        service_config, host=host, port=port, dataset_path=dataset_path,
        event_log_path=event_log_path, trust_threshold=trust_threshold,
        registry_path=cfg.registry_path, constants_path=cfg.constants_path,
        lexicon_path=cfg.lexicon_path,
    )
    uvicorn.run(create_app(config=config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
