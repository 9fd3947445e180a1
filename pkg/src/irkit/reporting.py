"""Figure and table rendering for experiment results.

Consumes the ``records.jsonl`` + ``aggregate.json`` pair written by the
evaluation harness and produces a delimited summary plus PNG figures.
Rendering is deterministic: fixed figure sizes, fixed dpi, no timestamps.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import IoFailureError, MalformedFileError

_FIG_KW = {"figsize": (6.0, 4.0), "dpi": 100}
_SAVE_KW = {"dpi": 100, "metadata": {"Software": None}}


def load_results(results_dir: str | Path) -> tuple[list[dict], dict]:
    root = Path(results_dir)
    records_path = root / "records.jsonl"
    aggregate_path = root / "aggregate.json"
    if not records_path.exists() or not aggregate_path.exists():
        raise IoFailureError(f"{root}: expected records.jsonl and aggregate.json")
    try:
        records = [json.loads(line) for line in
                   records_path.read_text(encoding="utf-8").splitlines() if line.strip()]
        aggregate = json.loads(aggregate_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedFileError(f"{root}: {exc.msg}") from exc
    return records, aggregate


def write_summary_csv(records: list[dict], aggregate: dict, out_path: Path) -> None:
    """One row per record plus a final aggregate row; columns unioned."""
    scalar_keys = sorted({
        k for r in records for k, v in r.items()
        if isinstance(v, (int, float, str)) and k != "item_id"
    })
    with out_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item_id"] + scalar_keys)
        for record in records:
            writer.writerow([record.get("item_id", "")] +
                            [record.get(k, "") for k in scalar_keys])
        writer.writerow(["AGGREGATE"] +
                        [aggregate.get(k, "") for k in scalar_keys])


def _save_bar(labels, values, title, ylabel, path: Path) -> None:
    fig, ax = plt.subplots(**_FIG_KW)
    ax.bar(range(len(values)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.set_ylim(0, max(1.0, max(values, default=1.0) * 1.1))
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_figures(records: list[dict], aggregate: dict, out_dir: str | Path) -> list[Path]:
    """Write PNG figures for whatever metrics the result set contains."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    hit_keys = sorted((k for k in aggregate if k.startswith("hits@")),
                      key=lambda k: int(k.split("@")[1]))
    if hit_keys:
        path = out / "hits_at_k.png"
        _save_bar(hit_keys, [aggregate[k] for k in hit_keys],
                  "Hits@K", "fraction of queries", path)
        written.append(path)

    if "mrr" in aggregate or "map" in aggregate:
        keys = [k for k in ("mrr", "map") if k in aggregate]
        path = out / "ranking_metrics.png"
        _save_bar([k.upper() for k in keys], [aggregate[k] for k in keys],
                  "Ranking metrics", "score", path)
        written.append(path)

    if records and "f1" in records[0]:
        path = out / "per_fold_f1.png"
        _save_bar([r["item_id"] for r in records], [r["f1"] for r in records],
                  "Per-fold F1", "F1", path)
        written.append(path)

    if "correct_rate" in aggregate:
        keys = ["correct_rate", "ambiguous_rate", "mismatch_rate"]
        path = out / "verdict_rates.png"
        _save_bar([k.replace("_rate", "") for k in keys], [aggregate[k] for k in keys],
                  "Step verdict rates", "fraction of steps", path)
        written.append(path)
    return written


def render_report_outputs(results_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Full report path: summary.csv next to the rendered figures."""
    records, aggregate = load_results(results_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = out / "summary.csv"
    write_summary_csv(records, aggregate, summary)
    return [summary] + render_figures(records, aggregate, out)
