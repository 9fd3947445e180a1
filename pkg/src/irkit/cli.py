"""Command-line front door for the toolkit.

Exit codes: 0 success, 1 domain error or validation violations,
2 usage/IO/parse errors. Human-readable output goes to stdout; machine
artifacts are written under ``--out``.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import s2r as s2r_mod
from . import solution as sol
from . import uiloc
from .corpus import load_corpus, validate_corpus
from .embeddings import load_embeddings_dir
from .errors import (
    InvalidConfigError,
    IoFailureError,
    IrkitError,
    MalformedFileError,
    UnknownIssueError,
)
from .evaluation import ExperimentSpec, run_experiment
from .execmodel import build_model
from .reporting import render_report_outputs

_USAGE_ERRORS = (IoFailureError, MalformedFileError, InvalidConfigError)


def _fail(exc: IrkitError):
    click.echo(str(exc), err=True)
    sys.exit(2 if isinstance(exc, _USAGE_ERRORS) else 1)


@click.group()
def main():
    """Issue-resolution toolkit: S2R assessment, UI localization,
    solution identification, and evaluation."""


@main.command("validate")
@click.argument("corpus_path", type=click.Path())
def cmd_validate(corpus_path):
    """Check every corpus invariant; exit 0 iff the report is empty."""
    try:
        corpus = load_corpus(corpus_path, validate=False)
    except IrkitError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    report = validate_corpus(corpus)
    click.echo(report.to_text(), nl=False)
    sys.exit(0 if report.ok else 1)


def _load_issue(corpus_path, issue_id):
    corpus = load_corpus(corpus_path)
    issue = corpus.issue_by_id(issue_id)
    if issue is None:
        raise UnknownIssueError(f"no issue {issue_id!r} in corpus")
    return corpus, issue


@main.command("assess")
@click.argument("corpus_path", type=click.Path())
@click.argument("issue_id")
@click.option("--out", type=click.Path(), default=None, help="Directory for report.md/report.json.")
@click.option("--steps-file", type=click.Path(), default=None,
              help="Pre-extracted steps (JSON) instead of the rule-based extractor.")
@click.option("--use-gold", is_flag=True, help="Use gold S2R sentence annotations when present.")
@click.option("--tau-high", type=float, default=0.75, show_default=True)
@click.option("--tau-match", type=float, default=0.5, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
def cmd_assess(corpus_path, issue_id, out, steps_file, use_gold, tau_high, tau_match, delta):
    """Assess an issue's reproduction steps against the app model."""
    try:
        corpus, issue = _load_issue(corpus_path, issue_id)
        app = corpus.apps[issue.app_id]
        screens = {s.id: s for s in app.screens}
        model = build_model(app.trace_records, screens)
        steps = None
        if steps_file is not None:
            try:
                steps = s2r_mod.parse_steps_json(Path(steps_file).read_text(encoding="utf-8"))
            except OSError as exc:
                raise IoFailureError(f"{steps_file}: {exc}") from exc
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise MalformedFileError(f"{steps_file}: {exc}") from exc
        config = s2r_mod.MatchConfig(tau_high=tau_high, tau_match=tau_match, delta=delta)
        report = s2r_mod.assess_s2rs(issue, model, screens, config,
                                     use_gold=use_gold, steps=steps)
        markdown = s2r_mod.render_report(report, "markdown", screens=screens)
        if out is not None:
            out_dir = Path(out)
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "report.md").write_text(markdown, encoding="utf-8")
            (out_dir / "report.json").write_text(
                s2r_mod.render_report(report, "json"), encoding="utf-8")
        else:
            click.echo(markdown, nl=False)
    except IrkitError as exc:
        _fail(exc)


def _parse_weights(text):
    try:
        weights = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise InvalidConfigError(f"bad --fusion-weights {text!r}") from None
    if len(weights) != 2:
        raise InvalidConfigError("--fusion-weights needs exactly two comma-separated values")
    return weights


@main.command("localize")
@click.argument("corpus_path", type=click.Path())
@click.argument("issue_id")
@click.option("--granularity", type=click.Choice(["screen", "component"]), default="screen",
              show_default=True)
@click.option("--dense", is_flag=True, help="Fuse dense embedding scores when available.")
@click.option("--fusion-weights", default="0.5,0.5", show_default=True,
              help="Lexical,dense weights for score fusion.")
@click.option("--alpha", type=float, default=0.7, show_default=True,
              help="Component vs parent-screen weight.")
@click.option("--gamma", type=float, default=0.3, show_default=True,
              help="Screen boost for code re-ranking.")
@click.option("-n", "--top", "top_n", type=int, default=10, show_default=True,
              help="Entries to emit.")
@click.option("--out", type=click.Path(), default=None, help="Directory for ranking.json.")
def cmd_localize(corpus_path, issue_id, granularity, dense, fusion_weights, alpha, gamma,
                 top_n, out):
    """Rank an app's screens or components against an issue's observed
    behavior."""
    try:
        corpus, issue = _load_issue(corpus_path, issue_id)
        app = corpus.apps[issue.app_id]
        store = None
        if dense:
            store = load_embeddings_dir(corpus_path)
            if store is None:
                click.echo("warning: --dense requested but no embeddings found; "
                           "falling back to lexical-only", err=True)
        config = uiloc.LocalizeConfig(
            dense=dense and store is not None,
            fusion_weights=_parse_weights(fusion_weights),
            alpha=alpha,
            gamma=gamma,
        )
        query = uiloc.extract_ob_query(issue)
        localize = (uiloc.localize_screens if granularity == "screen"
                    else uiloc.localize_components)
        ranking = localize(query, app.screens, config, store=store,
                           query_key=issue.id, query_id=issue.id)
        entries = ranking.entries[:top_n]
        width = max((len(doc_id) for doc_id, _ in entries), default=4)
        click.echo(f"{'rank':>4}  {'doc':<{width}}  score")
        for rank, (doc_id, score) in enumerate(entries, start=1):
            click.echo(f"{rank:>4}  {doc_id:<{width}}  {score:.6f}")
        if out is not None:
            out_dir = Path(out)
            out_dir.mkdir(parents=True, exist_ok=True)
            payload = {
                "query_id": ranking.query_id,
                "granularity": granularity.upper(),
                "entries": [[doc_id, score] for doc_id, score in entries],
            }
            (out_dir / "ranking.json").write_text(
                json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    except IrkitError as exc:
        _fail(exc)


@main.command("classify")
@click.argument("spec_path", type=click.Path())
@click.option("--out", type=click.Path(), default=None,
              help="Directory for model.json/metrics.json.")
def cmd_classify(spec_path, out):
    """Train a solution-comment classifier per a JSON spec and report
    training-set metrics."""
    try:
        try:
            data = json.loads(Path(spec_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoFailureError(f"{spec_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise MalformedFileError(f"{spec_path}:{exc.lineno}: {exc.msg}") from exc
        if "corpus_path" not in data:
            raise InvalidConfigError("classify spec missing field 'corpus_path'")
        cfg = data.get("config", {})
        config = sol.TrainConfig(
            lam=cfg.get("lambda", 1e-4),
            learning_rate=cfg.get("learning_rate", 0.5),
            epochs=int(cfg.get("epochs", 500)),
            seed=int(data.get("seed", 0)),
        )
        corpus = load_corpus(data["corpus_path"])
        issues = sorted(
            (i for i in corpus.issues if any(c.is_solution is not None for c in i.comments)),
            key=lambda i: i.id)
        dataset, vocab = sol.build_dataset(issues, project_id=data.get("project_id", "default"))
        model = sol.train(dataset, config, vocabulary=vocab)
        metrics = sol.evaluate(model, dataset)
        if out is not None:
            out_dir = Path(out)
            out_dir.mkdir(parents=True, exist_ok=True)
            sol.save_model(model, out_dir / "model.json")
            (out_dir / "metrics.json").write_text(
                json.dumps(metrics, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        click.echo(f"precision={metrics['precision']:.4f} recall={metrics['recall']:.4f} "
                   f"f1={metrics['f1']:.4f} ({len(dataset.items)} comments)")
    except IrkitError as exc:
        _fail(exc)


@main.command("evaluate")
@click.argument("spec_path", type=click.Path())
@click.option("--out", type=click.Path(), default="results", show_default=True,
              help="Results root directory.")
def cmd_evaluate(spec_path, out):
    """Run an experiment spec and write records + aggregates."""
    try:
        try:
            spec = ExperimentSpec.from_json_file(spec_path)
        except OSError as exc:
            raise IoFailureError(f"{spec_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise MalformedFileError(f"{spec_path}:{exc.lineno}: {exc.msg}") from exc
        result = run_experiment(spec, out_dir=out)
        for key in sorted(result.aggregate):
            value = result.aggregate[key]
            if isinstance(value, float):
                click.echo(f"{key}\t{value:.6f}")
            else:
                click.echo(f"{key}\t{value}")
    except IrkitError as exc:
        _fail(exc)


@main.command("report")
@click.argument("results_dir", type=click.Path())
@click.option("--out", type=click.Path(), required=True,
              help="Directory for summary.csv and figures.")
def cmd_report(results_dir, out):
    """Render summary.csv and PNG figures from experiment results."""
    try:
        written = render_report_outputs(results_dir, out)
        for path in written:
            click.echo(str(path))
    except IrkitError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
