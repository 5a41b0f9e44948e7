"""
Scenario report assembly and persistence.

Reports are appended as JSON Lines (sorted keys) or as CSV rows, one row per
measured quantity.
"""
import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from loguru import logger

from src import __version__
from src.schemas import ClaimedBound, ScenarioConfig, ScenarioReport

CSV_HEADER = ["scenario", "quantity", "value", "bound", "relation", "passed"]
CURVE_HEADER = ["rho", "kind", "value", "method", "samples", "radius"]


def satisfies(value: float, bound: float, relation: str, tolerance: float = 0.0) -> bool:
    """Whether value meets bound under relation, relaxed by tolerance."""
    if math.isnan(value):
        return False
    if relation == ">=":
        return value >= bound - tolerance
    if relation == ">":
        return value > bound - tolerance
    if relation == "<=":
        return value <= bound + tolerance
    if relation == "<":
        return value < bound + tolerance
    if relation == "==":
        return abs(value - bound) <= tolerance
    raise ValueError(f"unknown relation '{relation}'")


class ReportBuilder:
    """Collects measured quantities and the bounds they are checked against."""

    def __init__(self, scenario: str, cfg: ScenarioConfig):
        self.scenario = scenario
        self.cfg = cfg
        self.measured: Dict[str, float] = {}
        self.claimed: Dict[str, ClaimedBound] = {}
        self.info: Dict[str, Any] = {}

    def measure(self, name: str, value: float) -> float:
        self.measured[name] = float(value)
        return float(value)

    def claim(self, name: str, bound: float, relation: str, citation: str, tolerance: float = 0.0) -> bool:
        passed = satisfies(self.measured[name], bound, relation, tolerance)
        self.claimed[name] = ClaimedBound(
            bound=float(bound), relation=relation, tolerance=float(tolerance),
            citation=citation, passed=passed,
        )
        if not passed:
            logger.warning(f"❌ {self.scenario}: {name} = {self.measured[name]:.6g} fails {relation} {bound:.6g} (tol {tolerance:.3g})")
        return passed

    def note(self, key: str, value: Any):
        self.info[key] = value

    def build(self, resolved: Dict[str, Any], runtime_ms: Optional[float] = None) -> ScenarioReport:
        config = self.cfg.echo()
        config.update(resolved)
        return ScenarioReport(
            scenario=self.scenario,
            seed=self.cfg.seed,
            config=config,
            measured=self.measured,
            claimed=self.claimed,
            info=self.info,
            passed=all(bound.passed for bound in self.claimed.values()),
            runtime_ms=runtime_ms,
            tool_version=__version__,
        )


def report_to_json(report: ScenarioReport, timing: bool = False) -> str:
    payload = report.model_dump(mode="json", exclude=None if timing else {"runtime_ms"})
    return json.dumps(payload, sort_keys=True)


def report_rows(report: ScenarioReport) -> List[List[Any]]:
    rows = []
    for name in sorted(report.measured):
        claim = report.claimed.get(name)
        rows.append([
            report.scenario, name, repr(report.measured[name]),
            repr(claim.bound) if claim else "", claim.relation if claim else "",
            claim.passed if claim else "",
        ])
    return rows


def write_report(report: ScenarioReport, path: Union[str, Path], fmt: str = "json", timing: bool = False):
    """Append a report to path in the given format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        with open(path, "a") as file:
            file.write(report_to_json(report, timing) + "\n")
    elif fmt == "csv":
        write_rows(path, CSV_HEADER, report_rows(report))
    else:
        raise ValueError(f"unknown report format '{fmt}'")
    logger.info(f"📝 Report written to {path}")


def write_rows(path: Union[str, Path], header: List[str], rows: Iterable[List[Any]]):
    path = Path(path)
    new_file = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as file:
        writer = csv.writer(file)
        if new_file:
            writer.writerow(header)
        writer.writerows(rows)


def curve_rows(curve) -> List[List[Any]]:
    return [
        [estimate.rho, estimate.kind, repr(estimate.value), estimate.method,
         estimate.samples_used, repr(estimate.confidence_radius)]
        for estimate in curve
    ]
