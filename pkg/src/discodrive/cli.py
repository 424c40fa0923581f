"""`disco`: the single entry point exposing the whole pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
With --json-errors a machine-readable envelope is written to stderr.
All stochastic subcommands require an explicit --seed; no code path uses
wall-clock or OS entropy (network backoff jitter aside).
"""

from __future__ import annotations

import json
import os
import re
import sys
from pathlib import Path

import click

from . import __version__
from .backend import BackendConfig, BackendError, BackendKind
from .corpus import (
    Corpus,
    CorpusIntegrityError,
    CorpusParseError,
    DomainTag,
    read_corpus,
    read_scenarios,
    write_corpus,
    write_scenarios,
)
from .disfluency import (
    InjectionPlan,
    default_lexicons,
    inject_corpus,
    tag_disfluencies,
)
from .evalharness import (
    AggregationParams,
    InsufficientDataError,
    RatingRecord,
    RatingValidationError,
    SplitError,
    StratumError,
    aggregate_likert,
    aggregate_pairwise,
    aggregate_pairwise_majority,
    filter_incar_subset,
    pair_for_comparison,
    sample_discodrive,
    sample_external,
)
from .metrics import (
    MetricParams,
    ScoreFileError,
    UndefinedMetricError,
    corpus_distinct,
    corpus_report,
    render_distinct_table,
    render_report_table,
)
from .scenarios import (
    InsufficientDiversityError,
    ScenarioParseError,
    generate_scenarios,
    load_fewshot_bank,
)
from .simulate import GenerationConfig, GenerationResult, PromptTemplates, generate_corpus
from .spans import DisfluencyType
from .corpus import Speaker, Turn
from dataclasses import replace as _dc_replace

_DATA_ERRORS = (
    CorpusParseError,
    CorpusIntegrityError,
    ScoreFileError,
    ScenarioParseError,
    InsufficientDiversityError,
    StratumError,
    SplitError,
    InsufficientDataError,
    RatingValidationError,
    UndefinedMetricError,
    ValueError,
    KeyError,
    OSError,
)

_ENV_RE = re.compile(r"\$\{(\w+)\}")


def _interpolate_env(value: str) -> str:
    """${VAR} interpolation, used for secrets in config files only."""
    def sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in os.environ:
            raise click.UsageError(f"config references unset env var {name!r}")
        return os.environ[name]

    return _ENV_RE.sub(sub, value)


def _load_backend_config(path: str | None, mock: bool) -> BackendConfig:
    if mock or path is None:
        return BackendConfig(kind=BackendKind.MOCK)
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in ("endpoint_url", "model_name"):
        if isinstance(obj.get(key), str):
            obj[key] = _interpolate_env(obj[key])
    return BackendConfig.from_json(obj)


@click.group()
@click.version_option(version=__version__, prog_name="disco")
@click.option("--json-errors", is_flag=True, help="Machine-readable error envelope on stderr.")
@click.pass_context
def cli(ctx: click.Context, json_errors: bool) -> None:
    """Disfluency-enriched dialog synthesis, tagging, and evaluation."""
    ctx.ensure_object(dict)
    ctx.obj["json_errors"] = json_errors


# -- scenarios ---------------------------------------------------------------

@cli.command()
@click.option("--domain", type=click.Choice([d.value for d in DomainTag]), required=True)
@click.option("--count", type=int, required=True, help="Unique scenarios to produce.")
@click.option("--seed", type=int, required=True)
@click.option("--batch-size", type=int, default=10, show_default=True)
@click.option("--bank", "bank_path", type=click.Path(exists=True), default=None,
              help="Few-shot bank JSON (default: packaged bank for the domain).")
@click.option("--backend-config", type=click.Path(exists=True), default=None)
@click.option("--mock", is_flag=True, help="Use the deterministic mock backend.")
@click.option("-o", "--output", type=click.Path(), required=True)
def scenarios(domain, count, seed, batch_size, bank_path, backend_config, mock, output):
    """Generate per-domain conversation scenarios (pipeline step 1)."""
    tag = DomainTag(domain)
    bank = load_fewshot_bank(tag, bank_path)
    config = _load_backend_config(backend_config, mock)
    result = generate_scenarios(config, bank, count, seed, batch_size=batch_size)
    write_scenarios(result, output)
    click.echo(f"wrote {len(result)} scenarios to {output}")


# -- simulate -----------------------------------------------------------------

def _load_pipeline_config(path: str) -> dict:
    """Pipeline config JSON: backend, domains + counts, turn-length
    schedule, seeds, paths. Referenced paths must exist at load time."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    backend = obj.get("backend", {})
    for key in ("endpoint_url", "model_name"):
        if isinstance(backend.get(key), str):
            backend[key] = _interpolate_env(backend[key])
    for name, value in obj.get("paths", {}).items():
        if value and name != "output" and not Path(value).exists():
            raise click.UsageError(f"config path {name}={value!r} does not exist")
    for domain in obj.get("domains", []):
        DomainTag(domain)
    return obj


@cli.command()
@click.option("--scenarios", "scenario_path", type=click.Path(exists=True), default=None,
              help="Scenario JSONL (step-2 only mode).")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Pipeline config JSON (full two-step mode); flags override config.")
@click.option("--seed", type=int, default=None,
              help="Required unless the config file carries one.")
@click.option("--backend-config", type=click.Path(exists=True), default=None)
@click.option("--mock", is_flag=True)
@click.option("--turn-length-mode", type=click.Choice(["balanced", "uniform", "fixed"]),
              default=None)
@click.option("--fixed-length", type=int, default=None)
@click.option("--history-window", type=int, default=None)
@click.option("--templates-dir", type=click.Path(exists=True), default=None)
@click.option("-o", "--output", type=click.Path(), default=None)
def simulate(scenario_path, config_path, seed, backend_config, mock, turn_length_mode,
             fixed_length, history_window, templates_dir, output):
    """Simulate dialogs (pipeline step 2, or both steps with --config)."""
    pipeline = _load_pipeline_config(config_path) if config_path else {}
    paths = pipeline.get("paths", {})
    if seed is None:
        seed = pipeline.get("seed")
    if seed is None:
        raise click.UsageError("--seed is required (or a seed in the config file)")
    output = output or paths.get("output")
    if output is None:
        raise click.UsageError("-o/--output is required (or paths.output in the config file)")
    if mock or backend_config:
        backend = _load_backend_config(backend_config, mock)
    elif pipeline.get("backend"):
        backend = BackendConfig.from_json(pipeline["backend"])
    else:
        backend = BackendConfig(kind=BackendKind.MOCK)

    if scenario_path:
        scenario_list = read_scenarios(scenario_path)
    elif pipeline.get("domains"):
        per_domain = int(pipeline.get("scenarios_per_domain", 1))
        batch_size = int(pipeline.get("batch_size", 10))
        fewshot_dir = paths.get("fewshot_dir")
        scenario_list = []
        for name in pipeline["domains"]:
            domain = DomainTag(name)
            bank_path = Path(fewshot_dir) / f"{domain.value}.json" if fewshot_dir else None
            bank = load_fewshot_bank(domain, bank_path)
            scenario_list.extend(
                generate_scenarios(backend, bank, per_domain, seed, batch_size=batch_size)
            )
    else:
        raise click.UsageError("provide --scenarios or a config file with domains")

    config = GenerationConfig(
        backend=backend,
        seed=seed,
        history_window=history_window or int(pipeline.get("history_window", 6)),
        driver_temperature=float(pipeline.get("driver_temperature", 0.9)),
        ai_temperature=float(pipeline.get("ai_temperature", 0.7)),
        turn_length_mode=turn_length_mode or pipeline.get("turn_length_mode", "balanced"),
        fixed_turn_length=fixed_length or pipeline.get("fixed_turn_length"),
    )
    templates_dir = templates_dir or paths.get("templates_dir")
    templates = PromptTemplates.load(templates_dir) if templates_dir else None
    result: GenerationResult = generate_corpus(config, scenario_list, templates=templates)
    write_corpus(result.corpus, output)
    click.echo(f"wrote {len(result.corpus)} dialogs to {output}")
    if result.failures:
        click.echo(f"{len(result.failures)} scenario(s) failed:", err=True)
        for failure in result.failures:
            click.echo(f"  {failure['scenario_id']}: {failure['error']}", err=True)
        raise click.exceptions.Exit(3)


# -- tag / inject --------------------------------------------------------------

@cli.command()
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
def tag(input_path, output_path):
    """Tag disfluency spans on all driver turns of a corpus."""
    corpus = read_corpus(input_path)
    lex = default_lexicons()
    new_dialogs = []
    for dialog in corpus.dialogs:
        turns = [
            _dc_replace(t, disfluency_spans=tuple(tag_disfluencies(t.text, lex)))
            if t.speaker == Speaker.DRIVER
            else t
            for t in dialog.turns
        ]
        new_dialogs.append(_dc_replace(dialog, turns=tuple(turns)))
    write_corpus(Corpus(tuple(new_dialogs), dict(corpus.provenance)), output_path)
    click.echo(f"tagged {len(new_dialogs)} dialogs -> {output_path}")


def _parse_ops(spec: str) -> dict:
    weights = {}
    for part in spec.split(","):
        if not part:
            continue
        name, _, w = part.partition("=")
        weights[DisfluencyType(name.strip())] = float(w) if w else 1.0
    return weights


@cli.command()
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.option("--rate", type=float, default=1.0, show_default=True)
@click.option("--ops", default="repetition", show_default=True,
              help="Comma list: repetition[,replacement[,restart]] with optional =weight.")
@click.option("--seed", type=int, required=True)
def inject(input_path, output_path, rate, ops, seed):
    """Post-hoc disfluency injection into driver turns."""
    corpus = read_corpus(input_path)
    plan = InjectionPlan(rate=rate, op_weights=_parse_ops(ops))
    injected = inject_corpus(corpus, plan, default_lexicons(), seed=seed)
    write_corpus(injected, output_path)
    stats = injected.provenance["injection"]
    click.echo(
        f"modified {stats['modified_turns']} driver turn(s), "
        f"skipped {stats['skipped_ops']} inapplicable op(s) -> {output_path}"
    )


# -- validate ------------------------------------------------------------------

@cli.command()
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--lenient", is_flag=True, help="Turn-length rule reported as a warning.")
def validate(corpus_path, lenient):
    """Structural validation; exit 0 iff no violations."""
    from .corpus import validate_corpus

    corpus = read_corpus(corpus_path)
    report = validate_corpus(corpus, strict_lengths=not lenient)
    for v in report.violations:
        click.echo(f"violation {v.code} at {v.location}: {v.message}")
    for w in report.warnings:
        click.echo(f"warning {w.code} at {w.location}: {w.message}")
    click.echo(f"{len(report.violations)} violations")
    if report.violations:
        raise click.exceptions.Exit(2)


# -- metrics -------------------------------------------------------------------

@cli.group()
def metrics():
    """Lexical-diversity metrics."""


@metrics.command("distinct")
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--n", "max_n", type=int, default=4, show_default=True)
@click.option("--speaker", type=click.Choice(["driver", "car_ai"]), default=None)
@click.option("--json", "as_json", is_flag=True)
def metrics_distinct(corpus_path, max_n, speaker, as_json):
    """Distinct-1..N table over corpus utterances."""
    corpus = read_corpus(corpus_path)
    values = corpus_distinct(corpus, max_n=max_n, speaker=speaker)
    if as_json:
        click.echo(json.dumps({f"distinct_{n}": v for n, v in values.items()}))
    else:
        click.echo(render_distinct_table(values, label=Path(corpus_path).name))


@cli.command()
@click.argument("score_file", type=click.Path(exists=True))
@click.option("--bleu-smoothing", type=click.Choice(["add_k", "none"]), default="add_k",
              show_default=True)
@click.option("--bleu-mode", type=click.Choice(["corpus", "sentence"]), default="corpus",
              show_default=True)
@click.option("--bertscore-column", is_flag=True,
              help="Render a placeholder column for table parity.")
@click.option("--json", "as_json", is_flag=True)
def score(score_file, bleu_smoothing, bleu_mode, bertscore_column, as_json):
    """Score generations: JSONL of {context, reference, hypothesis}."""
    params = MetricParams(bleu_smoothing=bleu_smoothing, bleu_mode=bleu_mode)
    report = corpus_report(score_file, params)
    if as_json:
        click.echo(json.dumps(report.to_json()))
    else:
        click.echo(render_report_table(report, include_bertscore_column=bertscore_column))


# -- sampling / pairing ----------------------------------------------------------

@cli.group()
def sample():
    """Stratified evaluation sampling."""


@sample.command("discodrive")
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--seed", type=int, required=True)
@click.option("--per-stratum", type=int, default=4, show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def sample_discodrive_cmd(corpus_path, seed, per_stratum, output):
    """Per-(domain, length) stratified sample (4/stratum = 140 dialogs)."""
    corpus = read_corpus(corpus_path)
    selected = sample_discodrive(corpus, seed, per_stratum=per_stratum)
    write_corpus(Corpus(tuple(selected), {"sample_seed": seed}), output)
    click.echo(f"sampled {len(selected)} dialogs to {output}")


@sample.command("external")
@click.option("--train", type=click.Path(exists=True), required=True)
@click.option("--valid", type=click.Path(exists=True), required=True)
@click.option("--test", type=click.Path(exists=True), required=True)
@click.option("--counts", default="100,20,20", show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def sample_external_cmd(train, valid, test, counts, seed, output):
    """Split-based sample for an external corpus (100/20/20)."""
    n_train, n_valid, n_test = (int(x) for x in counts.split(","))
    splits = {
        "train": read_corpus(train).dialogs,
        "valid": read_corpus(valid).dialogs,
        "test": read_corpus(test).dialogs,
    }
    selected = sample_external(
        splits, {"train": n_train, "valid": n_valid, "test": n_test}, seed
    )
    write_corpus(Corpus(tuple(selected), {"sample_seed": seed}), output)
    click.echo(f"sampled {len(selected)} dialogs to {output}")


@cli.command()
@click.argument("corpus_a", type=click.Path(exists=True))
@click.argument("corpus_b", type=click.Path(exists=True))
@click.option("--seed", type=int, required=True)
@click.option("--name-a", default="set_a", show_default=True)
@click.option("--name-b", default="set_b", show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def pair(corpus_a, corpus_b, seed, name_a, name_b, output):
    """Build blind comparison pairs (manifest JSON with server-side sources)."""
    from .service import pairwise_items

    a = read_corpus(corpus_a).dialogs
    b = read_corpus(corpus_b).dialogs
    pairs = pair_for_comparison(a, b, seed, name_a=name_a, name_b=name_b)
    Path(output).write_text(
        json.dumps({"seed": seed, "items": pairwise_items(pairs)}, ensure_ascii=False, indent=2),
        encoding="utf-8",
    )
    click.echo(f"wrote {len(pairs)} pairs to {output}")


# -- aggregation -------------------------------------------------------------------

@cli.command()
@click.argument("ratings_path", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["likert", "pairwise"]), required=True)
@click.option("--ci-z", type=float, default=1.96, show_default=True)
def aggregate(ratings_path, mode, ci_z):
    """Aggregate a rating log (JSONL of rating records)."""
    records = []
    with open(ratings_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(RatingRecord.from_json(json.loads(line)))
    if mode == "likert":
        summaries = aggregate_likert(records, AggregationParams(ci_z=ci_z))
        for name, s in summaries.items():
            click.echo(f"{name}: {s.render()}  [n={s.count}]")
    else:
        raw = aggregate_pairwise(records)
        majority = aggregate_pairwise_majority(records)
        for name in sorted(raw):
            counts = raw[name]
            line = f"{name}: A={counts['A']} B={counts['B']}"
            if name in majority:
                m = majority[name]
                line += f"  (majority: A={m['A']} B={m['B']} ties={m['ties']})"
            click.echo(line)


# -- filtering ----------------------------------------------------------------------

@cli.command("filter")
@click.argument("input_path", type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["corpus", "kvret", "multiwoz", "sgd"]),
              default="corpus", show_default=True)
@click.option("--whitelist", default="navigation,weather,hotel,attraction,restaurant",
              show_default=True)
@click.option("--cap", type=int, default=None)
@click.option("--seed", type=int, required=True)
@click.option("--any-service", is_flag=True,
              help="Keep dialogs with any whitelisted service (default: all).")
@click.option("-o", "--output", type=click.Path(), required=True)
def filter_cmd(input_path, fmt, whitelist, cap, seed, any_service, output):
    """In-car subset filter over service labels."""
    from . import adapters

    if fmt == "corpus":
        dialogs = list(read_corpus(input_path).dialogs)
    elif fmt == "kvret":
        dialogs = adapters.read_kvret(input_path)
    elif fmt == "multiwoz":
        dialogs = adapters.read_multiwoz(input_path)
    else:
        dialogs = adapters.read_sgd(input_path)
    result = filter_incar_subset(
        dialogs,
        whitelist=[w.strip() for w in whitelist.split(",") if w.strip()],
        cap=cap,
        seed=seed,
        require_all=not any_service,
    )
    write_corpus(Corpus(tuple(result.dialogs), {"filter_seed": seed}), output)
    click.echo(
        f"kept {len(result.dialogs)} dialog(s); excluded {result.excluded}; "
        f"skipped {result.skipped_unlabeled} unlabeled"
    )


# -- serve -----------------------------------------------------------------------------

@cli.command()
@click.option("--state-dir", type=click.Path(), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8700, show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True), default=None,
              help="Static annotation UI bundle to serve at /.")
def serve(state_dir, host, port, ui_dir):
    """Run the annotation service."""
    from .service import serve as run_serve

    run_serve(state_dir, host=host, port=port, ui_dir=ui_dir)


# -- entry point -------------------------------------------------------------------------

def _emit_error(kind: str, exc: BaseException, json_errors: bool) -> None:
    if json_errors:
        envelope = {"error": {"type": kind, "class": type(exc).__name__, "message": str(exc)}}
        click.echo(json.dumps(envelope), err=True)
    else:
        click.echo(f"disco: {kind} error: {exc}", err=True)


def main(argv: list[str] | None = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in args
    try:
        # click returns Exit codes as the value in non-standalone mode
        rv = cli.main(args=args, prog_name="disco", standalone_mode=False)
        return rv if isinstance(rv, int) else 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        _emit_error("usage", exc, json_errors)
        return 1
    except click.Abort:
        return 1
    except BackendError as exc:
        _emit_error("backend", exc, json_errors)
        return 3
    except _DATA_ERRORS as exc:
        _emit_error("data", exc, json_errors)
        return 2


if __name__ == "__main__":
    sys.exit(main())
