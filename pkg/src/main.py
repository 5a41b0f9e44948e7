import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional

import typer
from loguru import logger
from pydantic import ValidationError

from src.config import configure_logger, list_available_configs, load_scenario_config, settings
from src.core.concepts import format_concept, parse_concept
from src.core.distributions import parse_distribution
from src.core.learners import LEARNER_NAMES, LabeledSample, get_learner, load_sample
from src.core.risk import ExactMode, MonteCarloMode, risk_curve, robust_risk
from src.errors import ConfigError, RobustLearnError
from src.experiments.properties import PROPERTIES, run_properties
from src.experiments.reports import (
    CSV_HEADER, CURVE_HEADER, curve_rows, report_rows, report_to_json, write_report, write_rows,
)
from src.experiments.scenarios import SCENARIO_ALIASES, SCENARIOS, run_scenario
from src.schemas import ScenarioConfig

EXIT_PASS = 0
EXIT_CLAIM_FAILED = 1
EXIT_USAGE = 2

RISK_KINDS = {"exact-in-ball": "exact_in_ball", "constant-in-ball": "constant_in_ball"}

# Create a Typer app instance
app = typer.Typer(help="Simulate robust learning against evasion attacks on the boolean hypercube")


@dataclass
class RunOptions:
    """Global flags shared by every subcommand."""
    seed: Optional[int]
    out: Optional[Path]
    fmt: str
    timing: bool


def _guarded(action: Callable[[], int]):
    """Run a command body and translate its outcome into the process exit code."""
    try:
        code = action()
    except (RobustLearnError, ValidationError) as e:
        logger.error(f"❌ Error: {str(e)}")
        raise typer.Exit(EXIT_USAGE)
    except Exception as e:
        logger.error(f"❌ Error: \n{str(e)}")
        logger.exception("Exception details:")
        raise typer.Exit(EXIT_USAGE)
    raise typer.Exit(code)


def _emit_json(options: RunOptions, payload: dict):
    line = json.dumps(payload, sort_keys=True)
    typer.echo(line)
    if options.out:
        options.out.parent.mkdir(parents=True, exist_ok=True)
        with open(options.out, "a") as file:
            file.write(line + "\n")
        logger.info(f"📝 Written to {options.out}")


def _emit_rows(options: RunOptions, header: List[str], rows: List[list]):
    if options.out:
        options.out.parent.mkdir(parents=True, exist_ok=True)
        write_rows(options.out, header, rows)
        logger.info(f"📝 Written to {options.out}")
        return
    writer = csv.writer(sys.stdout)
    writer.writerow(header)
    writer.writerows(rows)


@app.callback()
def main(
    ctx: typer.Context,
    seed: Optional[int] = typer.Option(None, "--seed", "-s", min=0, help="Master seed (scenario configs carry their own otherwise)"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", min=1, help="Worker threads for chunked evaluation"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Append results to this file"),
    fmt: str = typer.Option("json", "--format", "-f", help="Report format: json or csv"),
    timing: bool = typer.Option(False, "--timing", help="Include runtime_ms in reports"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose logging"),
    log_file: str = typer.Option(None, "--log-file", "-l", help="Path to log file. If not provided, no file logging is performed.")
) -> None:
    """
    Simulate robust learning against evasion attacks on the boolean hypercube.
    """
    # Configure logger based on verbosity and log file path
    configure_logger(verbose, log_file)

    if fmt not in ("json", "csv"):
        logger.error(f"❌ Error: unknown format '{fmt}'; use json or csv")
        raise typer.Exit(EXIT_USAGE)
    if workers is not None:
        settings.update(workers=workers)
        logger.debug(f"Using {workers} workers")

    ctx.obj = RunOptions(seed=seed, out=out, fmt=fmt, timing=timing)


@app.command()
def risk(
    ctx: typer.Context,
    kind: str = typer.Option("exact-in-ball", "--kind", "-k", help="exact-in-ball or constant-in-ball"),
    h: str = typer.Option(..., "--h", help="Hypothesis, e.g. conj:0,2"),
    c: str = typer.Option(..., "--c", help="Target concept, e.g. conj:1"),
    dist: str = typer.Option(..., "--dist", "-d", help="Distribution, e.g. uniform:4 or product:0.75,0.75"),
    rho: int = typer.Option(1, "--rho", "-r", min=0, help="Perturbation budget"),
    mode: str = typer.Option("exact", "--mode", "-m", help="exact or mc"),
    samples: int = typer.Option(10000, "--samples", "-n", min=1, help="Monte Carlo sample count"),
    curve: bool = typer.Option(False, "--curve", help="Emit a CSV table of risk for every radius up to rho"),
) -> None:
    """
    Evaluate one robust risk.
    """
    options: RunOptions = ctx.obj

    def action() -> int:
        if kind not in RISK_KINDS:
            raise ConfigError(f"unknown risk kind '{kind}'. Available: {', '.join(RISK_KINDS)}")
        if mode not in ("exact", "mc"):
            raise ConfigError(f"unknown mode '{mode}'; use exact or mc")
        D = parse_distribution(dist)
        hypothesis, target = parse_concept(h, D.dim), parse_concept(c, D.dim)
        risk_mode = ExactMode() if mode == "exact" else MonteCarloMode(samples=samples, seed=options.seed or 0)
        logger.info(f"🔬 {kind} risk of {hypothesis} against {target}, rho={rho}, {mode}")

        if curve:
            estimates = risk_curve(hypothesis, target, D, rho, RISK_KINDS[kind], risk_mode)
            _emit_rows(options, CURVE_HEADER, curve_rows(estimates))
            return EXIT_PASS

        estimate = robust_risk(hypothesis, target, D, rho, RISK_KINDS[kind], risk_mode)
        if options.fmt == "csv":
            _emit_rows(options, CURVE_HEADER, curve_rows([estimate]))
        else:
            _emit_json(options, estimate.to_fragment())
        return EXIT_PASS

    _guarded(action)


@app.command()
def learn(
    ctx: typer.Context,
    sample_file: Path = typer.Argument(..., help="File of '<bitstring> <label>' lines"),
    learner: str = typer.Option("elimination", "--learner", help=f"One of: {', '.join(LEARNER_NAMES)}"),
    target: Optional[str] = typer.Option(None, "--target", "-t", help="Target concept, for auditing labels and membership queries"),
) -> None:
    """
    Run a learner on a sample file and print its hypothesis.
    """
    options: RunOptions = ctx.obj

    def action() -> int:
        S = load_sample(sample_file)
        concept = parse_concept(target, S.dim) if target else None
        if concept is not None:
            S = LabeledSample(S.matrix, S.labels, concept)
            if not S.is_realizable():
                logger.warning(f"Sample labels are not consistent with target {concept}")
        hypothesis = get_learner(learner, concept)(S)
        consistent = LabeledSample(S.matrix, S.labels, hypothesis).is_realizable()
        logger.success(f"✅ {learner} learner returned {hypothesis} from {S.size} examples")
        _emit_json(options, {
            "learner": learner, "samples": S.size, "hypothesis": format_concept(hypothesis),
            "consistent": consistent,
        })
        return EXIT_PASS

    _guarded(action)


@app.command()
def scenario(
    ctx: typer.Context,
    name: Optional[str] = typer.Argument(
        None, help=f"One of: {', '.join(SCENARIOS)}; aliases: {', '.join(SCENARIO_ALIASES)}",
    ),
    config_file: Optional[str] = typer.Option(None, "--config", "-c", help="Scenario config file (path, or name in the configs directory)"),
    mode: Optional[str] = typer.Option(None, "--mode", "-m", help="Risk evaluation mode, exact or mc, where the scenario supports it"),
) -> None:
    """
    Run a scenario and check its measured quantities against their bounds.
    """
    options: RunOptions = ctx.obj

    def action() -> int:
        chosen_name, chosen_config = name, config_file
        if chosen_name is None and chosen_config is None:
            from src.ui.menu import select_scenario_from_menu
            picked_kind, picked = select_scenario_from_menu()
            if picked_kind == "config":
                chosen_config = picked
            else:
                chosen_name = picked

        if chosen_config:
            cfg = load_scenario_config(chosen_config, scenario=chosen_name, seed=options.seed, mode=mode)
        else:
            try:
                cfg = ScenarioConfig(scenario=chosen_name, seed=options.seed or 0, mode=mode)
            except ValidationError as e:
                raise ConfigError(f"Invalid scenario arguments: {e}") from e

        report = run_scenario(cfg)
        out, fmt = options.out, options.fmt
        if out is None and cfg.output is not None:
            out, fmt = Path(cfg.output.path), cfg.output.format

        if out is not None:
            write_report(report, out, fmt, options.timing)
        elif fmt == "csv":
            writer = csv.writer(sys.stdout)
            writer.writerow(CSV_HEADER)
            writer.writerows(report_rows(report))
        else:
            typer.echo(report_to_json(report, options.timing))

        for quantity, claim in report.claimed.items():
            status = "✅" if claim.passed else "❌"
            logger.info(f" → {status} {quantity} = {report.measured[quantity]:.6g} {claim.relation} {claim.bound:.6g}")
        return EXIT_PASS if report.passed else EXIT_CLAIM_FAILED

    _guarded(action)


@app.command()
def verify(
    ctx: typer.Context,
    scale: float = typer.Option(1.0, "--scale", min=0.0, help="Multiply every property's case count"),
    only: Optional[List[str]] = typer.Option(None, "--only", help=f"Run only these properties: {', '.join(PROPERTIES)}"),
) -> None:
    """
    Run the randomised property suite.
    """
    options: RunOptions = ctx.obj

    def action() -> int:
        logger.info(f"🔬 Running property suite (scale {scale}, seed {options.seed or 0})")
        results = run_properties(options.seed or 0, scale, only)
        for result in results:
            if options.out:
                _emit_json(options, {
                    "property": result.name, "passed": result.passed,
                    "cases": result.cases, "detail": result.detail,
                })
        failed = [result.name for result in results if not result.passed]
        if failed:
            logger.error(f"❌ {len(failed)} of {len(results)} properties failed: {', '.join(failed)}")
            return EXIT_CLAIM_FAILED
        logger.success(f"✅ All {len(results)} properties hold")
        return EXIT_PASS

    _guarded(action)


@app.command()
def configs() -> None:
    """
    List the scenario configuration files in the configs directory.
    """
    available = list_available_configs()
    if not available:
        logger.warning(f"No configuration files found in {settings.configs_dir}")
        return
    logger.info(f"📋 {len(available)} configuration files in {settings.configs_dir}:")
    for name in available:
        typer.echo(name)


if __name__ == "__main__":
    app()
