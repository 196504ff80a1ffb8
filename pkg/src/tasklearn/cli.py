"""Command-line entry points: learn, eval, record, serve.

Exit codes: 0 success, 1 validation error, 2 backend error.
"""

import json
import sys
from pathlib import Path

import click

from tasklearn.agent import (
    LoopConfig,
    ORACLE,
    Services,
    run_task,
)
from tasklearn.errors import GatewayError, TaskLearnError
from tasklearn.evalharness import emit_report, run_corpus
from tasklearn.gateway import (
    BackendConfig,
    LLMGateway,
    MODE_LIVE,
    MODE_RECORD,
    MODE_REPLAY,
    MODE_SCRIPTED,
    TokenLedger,
)
from tasklearn.memory import EpisodeLog, RuleStore
from tasklearn.oversight import OversightQueue, PreferenceModel
from tasklearn.parser import Lexicon
from tasklearn.prompts import TemplateBank, default_bank
from tasklearn.world import load_scenario_file

EXIT_VALIDATION = 1
EXIT_BACKEND = 2


def _load_prefs(path: str | None, lexicon: Lexicon) -> PreferenceModel | None:
    if path is None:
        return None
    return PreferenceModel.load(path, lexicon)


def _gateway(backend: str, corpus: str | None, script: str | None, endpoint: str | None,
             credential_env: str | None, budget: int | None) -> LLMGateway:
    script_tuple = None
    if script is not None:
        script_tuple = tuple(json.loads(Path(script).read_text(encoding="utf-8")))
    cfg = BackendConfig(
        mode=backend,
        endpoint=endpoint,
        credential_env=credential_env,
        corpus_path=corpus,
        script=script_tuple,
        budget_tokens=budget,
    )
    return LLMGateway(cfg)


@click.group()
def main():
    """Learn household tasks by querying a language model, verifying each
    response in simulation, and compiling what survives into rules."""


@main.command()
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--backend", type=click.Choice([MODE_REPLAY, MODE_SCRIPTED, MODE_LIVE]), default=MODE_REPLAY)
@click.option("--corpus", type=click.Path(exists=True), help="Replay corpus (NDJSON).")
@click.option("--script", type=click.Path(exists=True), help="Scripted responses (JSON array).")
@click.option("--endpoint", help="Live completion endpoint URL.")
@click.option("--credential-env", help="Environment variable holding the API credential.")
@click.option("--prefs", type=click.Path(exists=True), help="Preference file (JSON).")
@click.option("--templates", type=click.Path(exists=True), help="Template/example bank override.")
@click.option("--interactive", is_flag=True, help="Ask a human instead of the preference oracle.")
@click.option("--log", type=click.Path(), help="Episode log path (NDJSON, appended).")
@click.option("--budget", type=int, help="Token budget cap.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def learn(scenario, backend, corpus, script, endpoint, credential_env, prefs,
          templates, interactive, log, budget, fmt):
    """Run the learning loop over SCENARIO."""
    try:
        scn = load_scenario_file(scenario)
        lexicon = Lexicon.from_scenario(scn)
        services = Services(
            gateway=_gateway(backend, corpus, script, endpoint, credential_env, budget),
            ledger=TokenLedger(),
            templates=TemplateBank.from_file(templates) if templates else default_bank(),
            rules=RuleStore(),
            episodes=EpisodeLog(log),
            oversight=OversightQueue(),
            lexicon=lexicon,
            prefs=_load_prefs(prefs, lexicon),
            events=None,
            oversight_mode="interactive" if interactive else ORACLE,
        )
        cfg = LoopConfig()
        report, _ = run_task(scn, cfg, services)
    except GatewayError as exc:
        click.echo(f"backend error: {exc}", err=True)
        sys.exit(EXIT_BACKEND)
    except TaskLearnError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    if fmt == "json":
        click.echo(json.dumps(report.to_json(), indent=2))
    else:
        doc = report.to_json()
        click.echo(f"scenario: {doc['scenario']}  task: {doc['task']}")
        click.echo(
            f"objects: {len(doc['objects'])}  llm calls: {doc['llm_calls']}  "
            f"repairs: {doc['repairs']}  rules: {doc['rules_compiled']}"
        )
        for category, count in doc["category_tally"].items():
            click.echo(f"  {category}: {count}")
        click.echo(f"final state digest: {doc['final_digest']}")


@main.command("eval")
@click.argument("corpus", type=click.Path(exists=True))
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--prefs", type=click.Path(exists=True), required=True)
@click.option("--format", "fmt", type=click.Choice(["text", "csv", "json"]), default="text")
@click.option("--out", type=click.Path(), help="Write the report here instead of stdout.")
def eval_corpus(corpus, scenario, prefs, fmt, out):
    """Verdict every labeled CORPUS record against SCENARIO."""
    try:
        scn = load_scenario_file(scenario)
        lexicon = Lexicon.from_scenario(scn)
        model = _load_prefs(prefs, lexicon)
        report = run_corpus(corpus, scn, model)
    except TaskLearnError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    document = emit_report(report, fmt)
    if out:
        Path(out).write_text(document, encoding="utf-8")
    else:
        click.echo(document, nl=False)


@main.command()
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--corpus-out", type=click.Path(), required=True, help="Corpus file to append to.")
@click.option("--script", type=click.Path(exists=True), help="Scripted responses instead of a live backend.")
@click.option("--endpoint", help="Live completion endpoint URL.")
@click.option("--credential-env", help="Environment variable holding the API credential.")
@click.option("--prefs", type=click.Path(exists=True))
@click.option("--log", type=click.Path())
def record(scenario, corpus_out, script, endpoint, credential_env, prefs, log):
    """Run learn while writing every exchange to a replay corpus."""
    try:
        scn = load_scenario_file(scenario)
        lexicon = Lexicon.from_scenario(scn)
        script_tuple = None
        if script is not None:
            script_tuple = tuple(json.loads(Path(script).read_text(encoding="utf-8")))
        gateway = LLMGateway(
            BackendConfig(
                mode=MODE_RECORD,
                corpus_path=corpus_out,
                script=script_tuple,
                endpoint=endpoint,
                credential_env=credential_env,
            )
        )
        services = Services(
            gateway=gateway,
            ledger=TokenLedger(),
            templates=default_bank(),
            rules=RuleStore(),
            episodes=EpisodeLog(log),
            oversight=OversightQueue(),
            lexicon=lexicon,
            prefs=_load_prefs(prefs, lexicon),
        )
        report, _ = run_task(scn, LoopConfig(), services)
    except GatewayError as exc:
        click.echo(f"backend error: {exc}", err=True)
        sys.exit(EXIT_BACKEND)
    except TaskLearnError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo(f"recorded {report.llm_calls} exchanges to {corpus_out}")


@main.command()
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--port", type=int, default=8765)
@click.option("--backend", type=click.Choice([MODE_REPLAY, MODE_SCRIPTED, MODE_LIVE]), default=MODE_REPLAY)
@click.option("--corpus", type=click.Path(exists=True))
@click.option("--script", type=click.Path(exists=True))
@click.option("--endpoint", help="Live completion endpoint URL.")
@click.option("--credential-env", help="Environment variable holding the API credential.")
@click.option("--prefs", type=click.Path(exists=True))
@click.option("--log", type=click.Path())
@click.option("--static", type=click.Path(exists=True), help="Directory with the built console UI.")
def serve(scenario, port, backend, corpus, script, endpoint, credential_env, prefs, log, static):
    """Host the oversight console API (and UI, if built) for SCENARIO."""
    from tasklearn.server import serve as run_server

    try:
        scn = load_scenario_file(scenario)
        lexicon = Lexicon.from_scenario(scn)
        gateway = _gateway(backend, corpus, script, endpoint, credential_env, None)
        model = _load_prefs(prefs, lexicon)
    except TaskLearnError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    run_server(
        scn,
        gateway,
        port=port,
        prefs=model,
        static_dir=static,
        episode_log=EpisodeLog(log),
    )


if __name__ == "__main__":
    main()
