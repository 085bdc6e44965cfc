"""Prefetch simulator CLI commands."""

import json
import sys
from pathlib import Path
from typing import Callable, Optional

import typer
from loguru import logger
from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskID, TextColumn
from rich.table import Table

from app.config import settings
from app.database import create_db_and_tables, get_db_session
from app.exceptions import ConfigurationError
from app.schemas import DatabaseSpec, ExperimentConfig, ReportRow
from app.services.datastore import (
    WORKLOAD_NAMES,
    Database,
    generate_database,
    generate_workload,
    load_database,
    load_trace,
    save_database,
    save_trace,
)
from app.services.encoding import EncodingStore, encode_database
from app.services.harness import (
    ExperimentOrchestrator,
    RunStatistics,
    SemanticPipeline,
    emit_report,
    read_report,
    run_adaptivity_scenario,
    split_trace,
)
from app.services.partitioning import save_migration_log

app = typer.Typer(help="Trace-driven semantic prefetching simulator")
console = Console()

# Config overrides collected by the app callback; flags win over the config file
_overrides: dict = {}
_base: dict = {"preset": None, "config_file": None}


def _make_progress_callback(progress: Progress, task_id: TaskID) -> Callable[[str, int, int], None]:
    """Create a progress callback for simulator stages."""
    def update_progress(stage: str, current: int, total: int) -> None:
        stage_labels = {
            "encode": "Encoding blocks...",
            "partition": "Warming up partitions...",
            "train": "Training prediction model...",
        }
        label = stage_labels.get(stage, f"[{stage}] {current}/{total}")
        if total > 0:
            progress.update(task_id, description=label, completed=(current / total) * 100)
        else:
            progress.update(task_id, description=label)
    return update_progress


def _progress() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
        console=console,
    )


def load_config() -> ExperimentConfig:
    """Preset (or config file), then the global flag overrides."""
    config_file = _base["config_file"]
    if config_file is not None:
        base = ExperimentConfig.model_validate_json(Path(config_file).read_text(encoding="utf-8"))
    else:
        base = ExperimentConfig.preset(_base["preset"] or settings.default_preset)
    if not _overrides:
        return base
    try:
        return ExperimentConfig.model_validate({**base.model_dump(), **_overrides})
    except ValueError as e:
        raise ConfigurationError(f"Invalid configuration override: {e}") from e


def _load_db(path: Path) -> Database:
    db = load_database(path)
    console.print(f"[dim]Database {path} ({db.n_tables} tables, {db.total_blocks} blocks)[/dim]")
    return db


def _display_rows(rows: list[ReportRow], title: str) -> None:
    console.print(Panel(f"[bold]{title}[/bold]"))
    table = Table(show_header=True, header_style="bold")
    for column in ("System", "k", "Hits", "Misses", "Hit ratio", "Coverage", "Rel. t_io", "Prefetched", "Repart.", "Prefetch s"):
        table.add_column(column)
    for row in rows:
        table.add_row(
            row.system,
            str(row.k),
            f"{row.hits:,}",
            f"{row.misses:,}",
            f"{row.hit_ratio:.4f}",
            "n/a" if row.coverage is None else f"{row.coverage:.4f}",
            "n/a" if row.relative_t_io is None else f"{row.relative_t_io:.4f}",
            f"{row.prefetched_blocks:,}",
            str(row.repartition_count),
            f"{row.prefetch_seconds:.2f}",
        )
    console.print(table)


@app.callback()
def main(
    preset: Optional[str] = typer.Option(None, "--preset", "-p", help="full, desk or navigational"),
    config_file: Optional[Path] = typer.Option(None, "--config", "-c", help="ExperimentConfig JSON file"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Workload/database seed"),
    model_seed: Optional[int] = typer.Option(None, "--model-seed", help="Model initialization seed"),
    lookback: Optional[int] = typer.Option(None, "--lookback", help="Model input sequence length l"),
    max_par_size: Optional[int] = typer.Option(None, "--max-par-size", help="Partition capacity in blocks"),
    cache_bytes: Optional[int] = typer.Option(None, "--cache-bytes", help="Cache size in bytes"),
    block_size_bytes: Optional[int] = typer.Option(None, "--block-size-bytes", help="Block size in bytes"),
    k_w: Optional[float] = typer.Option(None, "--k-w", help="Inter-partition tolerance constant"),
    theta_init: Optional[float] = typer.Option(None, "--theta-init", help="Initial max partition load"),
    l_p: Optional[int] = typer.Option(None, "--l-p", help="Queries per repartitioning batch"),
    fill_frac: Optional[float] = typer.Option(None, "--fill-frac", help="Initial partition fill"),
    spare_frac: Optional[float] = typer.Option(None, "--spare-frac", help="Spare partitions fraction"),
    decay_factor: Optional[float] = typer.Option(None, "--decay-factor", help="Edge weight decay after repartitioning"),
    l_be: Optional[int] = typer.Option(None, "--l-be", help="Block encoding length"),
    max_epochs: Optional[int] = typer.Option(None, "--max-epochs", help="Training epoch cap"),
    seek_cost: Optional[float] = typer.Option(None, "--seek-cost", help="I/O units per contiguous run"),
    transfer_cost: Optional[float] = typer.Option(None, "--transfer-cost", help="I/O units per block"),
):
    """Global configuration flags, applied to every command."""
    logger.remove()
    logger.add(sys.stderr, level=settings.log_level)
    _base["preset"] = preset
    _base["config_file"] = config_file
    _overrides.clear()
    flags = {
        "seed": seed,
        "model_seed": model_seed,
        "lookback": lookback,
        "max_par_size": max_par_size,
        "cache_bytes": cache_bytes,
        "block_size_bytes": block_size_bytes,
        "k_w": k_w,
        "theta_init": theta_init,
        "l_p": l_p,
        "fill_frac": fill_frac,
        "spare_frac": spare_frac,
        "decay_factor": decay_factor,
        "l_be": l_be,
        "max_epochs": max_epochs,
        "seek_cost": seek_cost,
        "transfer_cost": transfer_cost,
    }
    _overrides.update({key: value for key, value in flags.items() if value is not None})


@app.command(name="gen-db")
def gen_db(
    out: Path = typer.Option(..., "--out", "-o", help="Database manifest to write (JSON)"),
    spec_file: Optional[Path] = typer.Option(None, "--spec", help="DatabaseSpec JSON (default: desk database)"),
    tables: int = typer.Option(4, "--tables", help="Tables in the default database"),
    blocks_per_table: int = typer.Option(256, "--blocks-per-table", help="Blocks per table in the default database"),
):
    """Generate a synthetic database and save its manifest."""
    try:
        config = load_config()
        if spec_file is not None:
            spec = DatabaseSpec.model_validate_json(spec_file.read_text(encoding="utf-8"))
        else:
            spec = DatabaseSpec.desk_default(n_tables=tables, blocks_per_table=blocks_per_table)
        db = generate_database(spec, config.seed)
        save_database(db, out)
    except (ValueError, OSError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)
    console.print(f"[green]Database written to {out}[/green]")
    console.print(f"  Tables: {db.n_tables}, blocks: {db.total_blocks:,}, fingerprint: {db.fingerprint()}")


@app.command(name="gen-trace")
def gen_trace(
    db_path: Path = typer.Option(..., "--db", help="Database manifest"),
    workload: str = typer.Option(..., "--workload", "-w", help=f"One of {', '.join(WORKLOAD_NAMES)}"),
    out: Path = typer.Option(..., "--out", "-o", help="Trace file to write (JSONL)"),
    queries: Optional[int] = typer.Option(None, "--queries", "-n", help="Number of queries"),
):
    """Generate a query trace."""
    try:
        config = load_config()
        db = _load_db(db_path)
        trace = generate_workload(db, workload, queries or config.workload.n_queries, config.seed, config.workload)
        save_trace(trace, out)
    except (ValueError, OSError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)
    console.print(f"[green]{len(trace)} {workload} queries written to {out}[/green] (checksum {trace.checksum()})")


@app.command()
def encode(
    db_path: Path = typer.Option(..., "--db", help="Database manifest"),
    out: Path = typer.Option(..., "--out", "-o", help="Directory for encodings and autoencoder checkpoints"),
):
    """Train per-table autoencoders and store every block encoding."""
    try:
        config = load_config()
        db = _load_db(db_path)
        with _progress() as progress:
            task = progress.add_task("Encoding blocks...", total=100)
            artifacts = encode_database(db, config, _make_progress_callback(progress, task))
        artifacts.store.save(out)
        for table_id, model in artifacts.autoencoders.items():
            model.save(out / f"autoencoder_{table_id}.npz")
            artifacts.histories[table_id].write_csv(out / f"autoencoder_{table_id}_training.csv")
    except (ValueError, OSError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)
    console.print(f"[green]{len(artifacts.store):,} block encodings written to {out}[/green]")


@app.command()
def train(
    db_path: Path = typer.Option(..., "--db", help="Database manifest"),
    trace_path: Path = typer.Option(..., "--trace", "-t", help="Trace file; its training prefix is used"),
    out: Path = typer.Option(..., "--out", "-o", help="Directory for model, partition map and logs"),
    encodings_dir: Optional[Path] = typer.Option(None, "--encodings", help="Precomputed encodings directory"),
):
    """Train the learned system on a trace's training prefix."""
    try:
        config = load_config()
        db = _load_db(db_path)
        trace = load_trace(trace_path, db.fingerprint())
        train_trace, _ = split_trace(trace, config.train_fraction)
        encodings = EncodingStore.load(encodings_dir) if encodings_dir else None
        with _progress() as progress:
            task = progress.add_task("Preparing...", total=100)
            pipeline = SemanticPipeline.build(
                db, train_trace, config, encodings, _make_progress_callback(progress, task)
            )
        out.mkdir(parents=True, exist_ok=True)
        pipeline.model.save(out / "model.npz")
        pipeline.partitions.save_map(out / "partitions.txt")
        pipeline.history.write_csv(out / "training.csv")
        save_migration_log(pipeline.migrations, out / "migrations.jsonl", append=False)
    except (ValueError, OSError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)
    history = pipeline.history
    console.print(f"[green]Model trained on {len(train_trace)} queries, written to {out}[/green]")
    console.print(
        f"  Partitions: {pipeline.partitions.n_partitions}, epochs: {len(history.epochs)}, "
        f"loss {history.initial_loss:.4f} -> {history.final_loss:.4f}"
    )
    timings = pipeline.timings
    console.print(
        f"  Time: encode {timings.encode_seconds:.2f}s, partition {timings.partition_seconds:.2f}s, "
        f"train {timings.train_seconds:.2f}s"
    )


@app.command()
def run(
    db_path: Path = typer.Option(..., "--db", help="Database manifest"),
    trace_path: Path = typer.Option(..., "--trace", "-t", help="Trace file"),
    systems: list[str] = typer.Option(["np", "lookahead", "naive", "rand-readahead", "semantic"], "--system", "-s", help="System to replay (repeatable)"),
    ks: Optional[list[int]] = typer.Option(None, "--k", help="k to sweep (repeatable, default from config)"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Report file (.csv or .json)"),
    fmt: Optional[str] = typer.Option(None, "--format", "-f", help="csv or json (default: from --out suffix)"),
    encodings_dir: Optional[Path] = typer.Option(None, "--encodings", help="Precomputed encodings directory"),
    external: Optional[Path] = typer.Option(None, "--external", help="Candidate file for the external system"),
    workload: Optional[str] = typer.Option(None, "--workload", "-w", help="Workload label (default: trace file name)"),
    timings: bool = typer.Option(False, "--timings", help="Add per-stage wall-clock columns to the report"),
    store: bool = typer.Option(True, "--store/--no-store", help="Record the run in the run store"),
):
    """Replay a trace against the selected systems and report the metrics."""
    label = workload or trace_path.stem
    try:
        config = load_config()
        db = _load_db(db_path)
        trace = load_trace(trace_path, db.fingerprint())
        encodings = EncodingStore.load(encodings_dir) if encodings_dir else None
        if store:
            create_db_and_tables()
        with get_db_session() as session, _progress() as progress:
            task = progress.add_task("Starting experiment...", total=100)
            orchestrator = ExperimentOrchestrator(
                db,
                config,
                session=session if store else None,
                encodings=encodings,
                external_path=external,
                progress_callback=_make_progress_callback(progress, task),
            )
            rows = orchestrator.run_experiment(trace, list(systems), ks=list(ks) if ks else None, workload=label)
        if out is not None:
            emit_report(rows, out, fmt, include_timings=timings)
    except (ValueError, OSError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)
    _display_rows(rows, f"{label}: {len(trace)} queries")
    if out is not None:
        console.print(f"\n[green]Report written to {out}[/green]")


@app.command()
def adaptivity(
    out: Path = typer.Option(..., "--out", "-o", help="Windowed hit-ratio series (CSV)"),
    db_path: Optional[Path] = typer.Option(None, "--db", help="Database manifest (default: generated, 2 x active tables)"),
    systems: list[str] = typer.Option(["np", "lookahead", "naive", "rand-readahead", "semantic"], "--system", "-s", help="System to replay (repeatable)"),
    store: bool = typer.Option(True, "--store/--no-store", help="Record the run in the run store"),
):
    """Run the shifting-workload scenario."""
    try:
        config = load_config()
        if db_path is not None:
            db = _load_db(db_path)
        else:
            db = generate_database(DatabaseSpec.desk_default(n_tables=2 * config.adaptivity_tables), config.seed)
        if store:
            create_db_and_tables()
        with get_db_session() as session, _progress() as progress:
            task = progress.add_task("Starting scenario...", total=100)
            orchestrator = ExperimentOrchestrator(
                db,
                config,
                session=session if store else None,
                progress_callback=_make_progress_callback(progress, task),
            )
            result = run_adaptivity_scenario(orchestrator, list(systems), config.seed)
        result.write_csv(out)
    except (ValueError, OSError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)

    n_batches = result.batch_of(result.n_windows - 1) if result.n_windows else 0
    table = Table(show_header=True, header_style="bold")
    table.add_column("System")
    for batch in range(1, n_batches + 1):
        table.add_column(f"Batch {batch}")
    for system in result.series:
        means = []
        for batch in range(1, n_batches + 1):
            windows = result.batch_windows(system, batch)
            means.append(f"{sum(windows) / len(windows):.4f}" if windows else "n/a")
        table.add_row(system, *means)
    console.print(table)
    console.print(f"\n[green]{result.n_windows} windows per system written to {out}[/green]")


@app.command()
def report(
    run_id: Optional[int] = typer.Argument(None, help="Stored run ID (omit to list recent runs)"),
    convert: Optional[Path] = typer.Option(None, "--convert", help="Report file to convert"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output report file"),
    limit: int = typer.Option(20, "--limit", "-l", help="Runs to list"),
    timings: bool = typer.Option(False, "--timings", help="Keep the per-stage wall-clock columns in the output"),
):
    """List stored runs, show or export one run, or convert a report file."""
    try:
        if convert is not None:
            if out is None:
                raise ConfigurationError("--convert needs --out")
            rows = read_report(convert)
            emit_report(rows, out, include_timings=timings)
            console.print(f"[green]{len(rows)} rows converted to {out}[/green]")
            return

        create_db_and_tables()
        with get_db_session() as session:
            stats = RunStatistics(session)
            if run_id is not None:
                rows = stats.get_rows(run_id)
                _display_rows(rows, f"Run #{run_id}")
                if out is not None:
                    emit_report(rows, out, include_timings=timings)
                    console.print(f"\n[green]Report written to {out}[/green]")
                return

            runs = stats.list_runs(limit=limit)
    except (ValueError, OSError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)

    if not runs:
        console.print("[dim]No stored runs[/dim]")
        return
    table = Table(show_header=True, header_style="bold")
    for column in ("ID", "Name", "Kind", "Status", "Rows", "Best system", "Hit ratio", "Duration"):
        table.add_column(column)
    for r in runs:
        status_color = {"completed": "green", "running": "yellow", "failed": "red"}.get(r.status, "dim")
        table.add_row(
            str(r.run_id),
            r.name[:40],
            r.kind,
            f"[{status_color}]{r.status}[/{status_color}]",
            str(r.n_rows),
            r.best_system or "-",
            "-" if r.best_hit_ratio is None else f"{r.best_hit_ratio:.4f}",
            "-" if r.duration_seconds is None else f"{r.duration_seconds}s",
        )
    console.print(table)


@app.command(name="show-config")
def show_config():
    """Print the effective configuration as JSON."""
    try:
        config = load_config()
    except (ValueError, OSError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)
    console.print_json(json.dumps(config.model_dump(mode="json")))


if __name__ == "__main__":
    app()
