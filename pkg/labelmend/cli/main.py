"""CLI entry point for labelmend."""

from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional
import logging

import typer
from rich.console import Console
from rich.logging import RichHandler

from ..config import CorruptionKind, CorruptionMode, ExperimentConfig, settings
from ..errors import ConfigError, LabelmendError

app = typer.Typer(
    name="labelmend",
    help="Detect and refurbish erroneous segmentation labels on phantom cardiac data",
)
console = Console()
logger = logging.getLogger("labelmend")


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    level = logging.DEBUG if verbose or settings.debug else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Turn library errors into a message and their exit code."""
    try:
        yield
    except LabelmendError as e:
        console.print(f"[red]{type(e).__name__}: {e}[/red]")
        raise typer.Exit(e.exit_code)


def load_config(
    config_path: Optional[Path],
    seed: Optional[int] = None,
    detector: Optional[str] = None,
    pipeline: Optional[str] = None,
    paper_scale: bool = False,
) -> ExperimentConfig:
    """Config file (or defaults) with command-line overrides applied."""
    config = ExperimentConfig.load(config_path) if config_path else ExperimentConfig()
    if paper_scale:
        config = config.paper_scale()
    if seed is not None:
        config = config.with_seed(seed).model_copy(update={"seeds": [seed]})
    updates = {}
    if detector is not None:
        updates["detector"] = detector
    if pipeline is not None:
        updates["pipeline"] = pipeline
    if updates:
        config = ExperimentConfig.from_dict({**config.to_dict(), **updates})
    return config


def _out_dir(out: Optional[Path], config: ExperimentConfig, name: str) -> Path:
    if out is not None:
        return out
    base = config.output_dir if config.output_dir != Path("runs") else settings.home
    return base / name


ConfigOpt = typer.Option(None, "--config", "-c", help="Experiment config (.json or .yaml)")
SeedOpt = typer.Option(None, "--seed", help="Seed for data, corruption and training")
OutOpt = typer.Option(None, "--out", "-o", help="Output directory")
ForceOpt = typer.Option(False, "--force", "-f", help="Write into a non-empty output directory")
DetectorOpt = typer.Option(None, "--detector", help="Detector: vog or loss")
PaperScaleOpt = typer.Option(False, "--paper-scale", help="500 samples, 100 epochs")
JobsOpt = typer.Option(None, "--jobs", "-j", help="Arms to run in parallel")


@app.command()
def generate(
    config_path: Optional[Path] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    out: Optional[Path] = OutOpt,
    force: bool = ForceOpt,
    paper_scale: bool = PaperScaleOpt,
):
    """Generate the phantom dataset and its train/val/test manifest."""
    from ..data import dataset_digest, generate_phantom, save_dataset, split_dataset
    from ..experiments import prepare_output

    with _exit_codes():
        config = load_config(config_path, seed=seed, paper_scale=paper_scale)
        out_dir = _out_dir(out, config, "data")
        prepare_output(out_dir, force)
        ds = config.dataset
        samples = generate_phantom(ds.n, (ds.height, ds.width), ds.seed)
        manifest = split_dataset(samples, ds.fractions, ds.seed, ds.model_dump(mode="json"))
        save_dataset(samples, manifest, out_dir)
        digest = dataset_digest(samples, manifest)

    console.print(f"[bold green]✓ Generated {len(samples)} phantoms in {out_dir}[/bold green]")
    console.print(
        f"  train/val/test: {len(manifest.train)}/{len(manifest.val)}/{len(manifest.test)}"
    )
    console.print(f"  digest: {digest}")


@app.command()
def corrupt(
    source: Path = typer.Argument(..., help="Dataset directory written by 'generate'"),
    kind: CorruptionKind = typer.Option(CorruptionKind.INCOMPLETE, "--kind", help="Error type"),
    mode: CorruptionMode = typer.Option(CorruptionMode.RANDOM, "--mode", help="Error mode"),
    proportion: float = typer.Option(0.25, "--proportion", "-p", help="Share of train+val"),
    seed: int = typer.Option(0, "--seed", help="Corruption seed"),
    out: Optional[Path] = OutOpt,
    force: bool = ForceOpt,
):
    """Corrupt the train and val labels of an on-disk dataset."""
    from ..config import CorruptionSpec
    from ..corruption import corrupt_dataset
    from ..data import dataset_digest, load_dataset, save_dataset
    from ..experiments import prepare_output

    with _exit_codes():
        try:
            spec = CorruptionSpec(kind=kind, mode=mode, proportion=proportion, seed=seed)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        out_dir = out or source.with_name(f"{source.name}-{mode.value}-{kind.value}")
        samples, manifest = load_dataset(source)
        prepare_output(out_dir, force)
        corrupted_samples, corrupted = corrupt_dataset(
            samples, spec, manifest.eligible_for_corruption()
        )
        save_dataset(corrupted_samples, manifest, out_dir)
        digest = dataset_digest(corrupted_samples, manifest)

    console.print(f"[bold green]✓ Corrupted {len(corrupted)} samples into {out_dir}[/bold green]")
    console.print(f"  digest: {digest}")


@app.command("train")
def train_cmd(
    config_path: Optional[Path] = ConfigOpt,
    data: Optional[Path] = typer.Option(None, "--data", help="Dataset directory to train on"),
    seed: Optional[int] = SeedOpt,
    out: Optional[Path] = OutOpt,
    force: bool = ForceOpt,
    detector: Optional[str] = DetectorOpt,
    pipeline: Optional[str] = typer.Option(None, "--pipeline", help="baseline or refurb"),
    paper_scale: bool = PaperScaleOpt,
):
    """Train one arm and write its checkpoint, trace-log and reports."""
    from ..experiments import prepare_output, render_report, train_arm

    with _exit_codes():
        config = load_config(config_path, seed, detector, pipeline, paper_scale)
        out_dir = _out_dir(out, config, f"train-{config.pipeline}")
        prepare_output(out_dir, force)
        report = train_arm(config, out_dir, data)
    render_report(report, console)


def _run_experiment(
    name: str,
    config_path: Optional[Path],
    seed: Optional[int],
    out: Optional[Path],
    force: bool,
    detector: Optional[str],
    paper_scale: bool,
    jobs: Optional[int],
) -> None:
    from ..experiments import (
        experiment1,
        experiment2,
        experiment3,
        prepare_output,
        render_report,
    )

    runners = {"exp1": experiment1, "exp2": experiment2, "exp3": experiment3}
    with _exit_codes():
        config = load_config(config_path, seed, detector, paper_scale=paper_scale)
        out_dir = _out_dir(out, config, name)
        prepare_output(out_dir, force)
        report = runners[name](config, out_dir, jobs or settings.jobs)
    render_report(report, console)
    console.print(f"[bold green]✓ {name} report written to {out_dir}[/bold green]")


@app.command()
def exp1(
    config_path: Optional[Path] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    out: Optional[Path] = OutOpt,
    force: bool = ForceOpt,
    detector: Optional[str] = DetectorOpt,
    paper_scale: bool = PaperScaleOpt,
    jobs: Optional[int] = JobsOpt,
):
    """Detection accuracy of VOG vs loss on randomly corrupted labels."""
    _run_experiment("exp1", config_path, seed, out, force, detector, paper_scale, jobs)


@app.command()
def exp2(
    config_path: Optional[Path] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    out: Optional[Path] = OutOpt,
    force: bool = ForceOpt,
    detector: Optional[str] = DetectorOpt,
    paper_scale: bool = PaperScaleOpt,
    jobs: Optional[int] = JobsOpt,
):
    """Label Dice before and after refurbishment."""
    _run_experiment("exp2", config_path, seed, out, force, detector, paper_scale, jobs)


@app.command()
def exp3(
    config_path: Optional[Path] = ConfigOpt,
    seed: Optional[int] = SeedOpt,
    out: Optional[Path] = OutOpt,
    force: bool = ForceOpt,
    detector: Optional[str] = DetectorOpt,
    paper_scale: bool = PaperScaleOpt,
    jobs: Optional[int] = JobsOpt,
):
    """Baseline vs refurbished pipeline test Dice with paired signed-rank tests."""
    _run_experiment("exp3", config_path, seed, out, force, detector, paper_scale, jobs)


@app.command()
def report(
    path: Path = typer.Argument(..., help="report.json or the directory holding it"),
):
    """Re-render a saved experiment report."""
    from ..experiments import ExperimentReport, render_report

    with _exit_codes():
        loaded = ExperimentReport.load(path)
    render_report(loaded, console)


@app.command()
def version():
    """Show version."""
    from labelmend import __version__
    console.print(f"labelmend v{__version__}")


if __name__ == "__main__":
    app()
