"""
PPG Auth CLI
────────────
Stage-wise driver for the camera-PPG authentication pipeline. Each command
reads and writes files, so a run can start from frames, traces, beats or
features.

Usage:
    python -m cli.main synth data/ --users 15 --frames
    python -m cli.main extract data/ work/traces
    python -m cli.main validate work/traces
    python -m cli.main beats work/traces work/beats
    python -m cli.main features work/beats/beats.csv work/features.csv
    python -m cli.main select work/features.csv work/selection.json
    python -m cli.main train work/features.csv work/selection.json work/models
    python -m cli.main evaluate work/features.csv work/report.json
    python -m cli.main report work/report.json work/report
    python -m cli.main --seed 7 --set evaluation.windows=[1,20] evaluate ...

Exit codes: 0 success, 2 capture validation rejected a trace, 1 any other error.
"""
from __future__ import annotations

from pathlib import Path

import typer
from dotenv import load_dotenv
from rich import box
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from ppgauth.config import PipelineConfig, config_keys, config_source, load_config
from ppgauth.errors import ParseError, PpgAuthError
from ppgauth.eval.report import (
    per_user_breakdown,
    plot_boxplots,
    read_report,
    write_breakdown_csv,
    write_cells_csv,
    write_report,
)
from ppgauth.features.matrix import read_features_csv, write_features_csv
from ppgauth.orchestrator import pipeline_orchestrator
from ppgauth.select.pipeline import load_selection, save_selection
from ppgauth.signal.beats import read_beats_csv, read_reference, write_beats_csv, write_reference
from ppgauth.signal.ingest import read_red_means, read_trace_csv, write_red_means, write_trace_csv
from ppgauth.synth import synth_dataset

load_dotenv()

console = Console()
err_console = Console(stderr=True)

RED_SUFFIX = ".red.csv"

# bad inputs arrive as PpgAuthError; output paths that cannot be written as OSError
FAILURES = (PpgAuthError, OSError)


def _config_epilog() -> str:
    rows = [
        f"{escape(key)} ({config_source(key)}) = {escape(repr(default))}  {escape(desc)}"
        for key, default, desc in config_keys()
    ]
    return "\n\n".join(["Config keys (JSON file, --set key=value), each with the module that reads it:", *rows])


app = typer.Typer(help="Camera PPG authentication pipeline", epilog=_config_epilog(), no_args_is_help=True)


# ─── Shared state ─────────────────────────────────────────────────────────────

@app.callback()
def main(
    ctx: typer.Context,
    config: Path = typer.Option(None, "--config", "-c", help="Pipeline config JSON"),
    seed: int = typer.Option(None, "--seed", help="Master seed (overrides config and PPG_SEED)"),
    overrides: list[str] = typer.Option(None, "--set", help="Override a config key, e.g. evaluation.windows=[1,20]"),
):
    ctx.obj = {"config": config, "seed": seed, "overrides": overrides or []}


def _load(ctx: typer.Context) -> PipelineConfig:
    obj = ctx.obj or {}
    return load_config(obj.get("config"), obj.get("overrides"), obj.get("seed"))


def _fail(exc: Exception) -> typer.Exit:
    err_console.print(f"[bold red]error:[/bold red] {escape(str(exc))}")
    return typer.Exit(1)


def _trace_files(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise ParseError("directory not found", path=directory)
    return sorted(p for p in directory.glob("*.csv") if not p.name.endswith(RED_SUFFIX))


def _red_file(trace_path: Path) -> Path:
    return trace_path.with_name(trace_path.stem + RED_SUFFIX)


# ─── Commands ─────────────────────────────────────────────────────────────────

@app.command()
def synth(
    ctx: typer.Context,
    output: Path = typer.Argument(..., help="Directory for the generated traces or frame files"),
    users: int = typer.Option(15, "--users", help="Number of synthetic users"),
    sessions: int = typer.Option(2, "--sessions", help="Sessions per user"),
    seconds: float = typer.Option(40.0, "--seconds", help="Recording length per session"),
    fps: float = typer.Option(60.0, "--fps", help="Frame rate"),
    drift: float = typer.Option(0.0, "--drift", help="Per-session morphology drift (0 = none)"),
    frames: bool = typer.Option(False, "--frames", help="Write .ppgf frame files instead of trace CSVs"),
):
    """Generate a synthetic multi-user dataset."""
    try:
        cfg = _load(ctx)
        written = synth_dataset(output, users, sessions, seconds, fps, drift, cfg.seed, frames)
    except FAILURES as exc:
        raise _fail(exc) from exc
    console.print(f"[green]wrote {len(written)} files to {output}[/green]")


@app.command()
def extract(
    ctx: typer.Context,
    input_dir: Path = typer.Argument(..., help="Directory of .ppgf frame files"),
    output: Path = typer.Argument(..., help="Directory for trace CSVs and red-mean side files"),
):
    """Frames → luma traces (plus per-frame red means)."""
    try:
        _load(ctx)
        files = sorted(input_dir.glob("*.ppgf"))
        if not files:
            raise PpgAuthError(f"no .ppgf files in {input_dir}")
        output.mkdir(parents=True, exist_ok=True)
        for path in files:
            trace, red = pipeline_orchestrator.extract(path)
            write_trace_csv(trace, output / f"{path.stem}.csv")
            write_red_means(red, output / f"{path.stem}{RED_SUFFIX}")
    except FAILURES as exc:
        raise _fail(exc) from exc
    console.print(f"[green]extracted {len(files)} traces to {output}[/green]")


@app.command()
def validate(
    ctx: typer.Context,
    traces: Path = typer.Argument(..., help="Directory of raw trace CSVs"),
):
    """Capture validation of raw traces; exits 2 if any trace is rejected."""
    try:
        cfg = _load(ctx)
        table = Table(title="Capture validation", box=box.SIMPLE)
        table.add_column("Trace")
        table.add_column("Seconds", justify="right")
        table.add_column("Verdict")
        rejected = 0
        for path in _trace_files(traces):
            trace = read_trace_csv(path)
            red_path = _red_file(path)
            red = read_red_means(red_path, len(trace.samples)) if red_path.exists() else None
            verdict = pipeline_orchestrator.validate(trace, red, cfg)
            rejected += not verdict.accepted
            label = "[green]accepted[/green]" if verdict.accepted else "[red]" + ", ".join(r.value for r in verdict.reasons) + "[/red]"
            table.add_row(path.name, f"{trace.duration:.1f}", label)
    except FAILURES as exc:
        raise _fail(exc) from exc
    console.print(table)
    if rejected:
        raise typer.Exit(2)


@app.command()
def beats(
    ctx: typer.Context,
    traces: Path = typer.Argument(..., help="Directory of raw trace CSVs"),
    output: Path = typer.Argument(..., help="Directory for filtered traces, beats.csv and reference.csv"),
    reference: Path = typer.Option(None, "--reference", help="Reference wave to gate against instead of the dataset mean"),
    keep_rejected: bool = typer.Option(False, "--keep-rejected", help="Keep traces that fail capture validation"),
):
    """Detrend, low-pass, segment beats and gate them (FTA)."""
    try:
        cfg = _load(ctx)
        raw = []
        for path in _trace_files(traces):
            trace = read_trace_csv(path)
            red_path = _red_file(path)
            red = read_red_means(red_path, len(trace.samples)) if red_path.exists() else None
            if not keep_rejected and not pipeline_orchestrator.validate(trace, red, cfg).accepted:
                continue
            raw.append(trace)
        if not raw:
            raise PpgAuthError(f"no usable traces in {traces}")

        filtered = pipeline_orchestrator.filter_traces(raw, cfg)
        ref = read_reference(reference) if reference else None
        records, ref = pipeline_orchestrator.segment(filtered, cfg, ref)

        filtered_dir = output / "filtered"
        filtered_dir.mkdir(parents=True, exist_ok=True)
        for trace in filtered:
            write_trace_csv(trace, filtered_dir / trace.meta["source"])
        write_beats_csv(records, output / "beats.csv")
        write_reference(ref, output / "reference.csv")
    except FAILURES as exc:
        raise _fail(exc) from exc
    fta = sum(r.fta for r in records)
    console.print(f"[green]{len(records)} beats, {fta} FTA, from {len(raw)} traces → {output}[/green]")


@app.command()
def features(
    ctx: typer.Context,
    beats_csv: Path = typer.Argument(..., help="beats.csv written by the beats command"),
    output: Path = typer.Argument(..., help="Feature matrix CSV"),
    traces: Path = typer.Option(None, "--traces", help="Filtered traces (default: <beats dir>/filtered)"),
):
    """Beats → 541 features per beat."""
    try:
        cfg = _load(ctx)
        records = read_beats_csv(beats_csv)
        trace_dir = traces or beats_csv.parent / "filtered"
        by_name = {p.name: read_trace_csv(p) for p in _trace_files(trace_dir)}
        matrix = pipeline_orchestrator.features(records, by_name, cfg)
        write_features_csv(matrix, output)
    except FAILURES as exc:
        raise _fail(exc) from exc
    console.print(f"[green]{matrix.n_rows} feature rows → {output}[/green]")


@app.command()
def select(
    ctx: typer.Context,
    features_csv: Path = typer.Argument(..., help="Feature matrix CSV"),
    output: Path = typer.Argument(..., help="Selection model JSON"),
):
    """Fit PCA compression and mRMR / RMI feature selection."""
    try:
        cfg = _load(ctx)
        model = pipeline_orchestrator.select(read_features_csv(features_csv), cfg)
        save_selection(model, output)
    except FAILURES as exc:
        raise _fail(exc) from exc
    console.print(f"[green]{len(model.selected)} features selected:[/green] {', '.join(model.selected)}")


@app.command()
def train(
    ctx: typer.Context,
    features_csv: Path = typer.Argument(..., help="Feature matrix CSV"),
    selection: Path = typer.Argument(..., help="Selection model JSON"),
    output: Path = typer.Argument(..., help="Directory for model files"),
):
    """Fit the multi-class SVM and per-user one-class models."""
    try:
        cfg = _load(ctx)
        written = pipeline_orchestrator.train(read_features_csv(features_csv), load_selection(selection), cfg, output)
    except FAILURES as exc:
        raise _fail(exc) from exc
    console.print(f"[green]wrote {len(written)} model files to {output}[/green]")


@app.command()
def evaluate(
    ctx: typer.Context,
    features_csv: Path = typer.Argument(..., help="Feature matrix CSV"),
    output: Path = typer.Argument(..., help="Evaluation report JSON"),
    selection: Path = typer.Option(None, "--selection", help="Selection model for the one-class protocols"),
):
    """Run the configured protocols and write the EvalReport."""
    try:
        cfg = _load(ctx)
        model = load_selection(selection) if selection else None
        report = pipeline_orchestrator.evaluate(read_features_csv(features_csv), cfg, model)
        write_report(report, output)
    except FAILURES as exc:
        raise _fail(exc) from exc

    table = Table(title=f"EER ({report.dataset_variant.value})", box=box.SIMPLE)
    for col in ("Protocol", "Classifier", "Enrol", "Window", "Mean EER", "Median EER", "Users"):
        table.add_column(col)
    for s in report.summaries:
        table.add_row(
            s.protocol,
            s.classifier,
            "" if s.enrol is None else str(s.enrol),
            str(s.window),
            f"{s.mean_eer:.3f}",
            f"{s.median_eer:.3f}",
            str(s.n_users),
        )
    console.print(table)


@app.command()
def report(
    ctx: typer.Context,
    report_json: Path = typer.Argument(..., help="Evaluation report JSON"),
    output: Path = typer.Argument(..., help="Directory for CSV tables and SVG plots"),
):
    """Per-cell CSV, per-user breakdown with bootstrap CIs, and box plots."""
    try:
        cfg = _load(ctx)
        rep = read_report(report_json)
        output.mkdir(parents=True, exist_ok=True)
        write_cells_csv(rep, output / "cells.csv")
        table = per_user_breakdown(rep, cfg.evaluation.bootstrap, cfg.seed)
        write_breakdown_csv(table, output / "breakdown.csv")
        plots = plot_boxplots(rep, output)
    except FAILURES as exc:
        raise _fail(exc) from exc
    if table.worst_user is not None:
        console.print(f"worst user: [bold]{table.worst_user}[/bold] (EER {table.worst_eer:.3f})")
    console.print(f"[green]{len(table.rows)} rows, {len(plots)} plots → {output}[/green]")


@app.command("show-config")
def show_config(ctx: typer.Context):
    """Print every config key with its effective value and description."""
    try:
        cfg = _load(ctx).model_dump(mode="json")
    except FAILURES as exc:
        raise _fail(exc) from exc
    table = Table(title="Pipeline config", box=box.ROUNDED)
    table.add_column("Key", style="cyan")
    table.add_column("Value")
    table.add_column("Description", style="dim")
    for key, _default, desc in config_keys():
        value = cfg
        for part in key.split("."):
            value = value[part]
        table.add_row(key, escape(repr(value)), desc)
    console.print(table)


if __name__ == "__main__":
    app()
