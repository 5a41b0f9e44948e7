import json
from pathlib import Path

import pytest

from src.config import list_available_configs, load_scenario_config, settings
from src.core.reduction import K_ZERO_WARNING
from src.errors import ConfigError, ScenarioConstraintError
from src.experiments.reports import CSV_HEADER, report_to_json, satisfies, write_report
from src.experiments.scenarios import SCENARIO_ALIASES, SCENARIOS, run_scenario
from src.schemas import ScenarioConfig

CONFIGS_DIR = Path(__file__).resolve().parent.parent / "configs"

SMALL = {
    "dictators": dict(n=4, m=10, trials=40),
    "nontrivial-hiding": dict(n=4, m=10, hiding_bias=0.05, trials=500),
    "disjoint-conj": dict(n=12, l=4, rho=2),
    "agreement": dict(n=16, l=6, m=10, trials=2000),
    "lower-bound": dict(n=32, l=8, rho=6, m=20, trials=200, risk_samples=2000),
    "robust-learn": dict(n=8, l=2, trials=200, long_n=64, long_l=45, long_rho=11, long_m=100, risk_samples=5000),
    "reduction": dict(n=4, k=1, m=64),
}


def small_config(name, **overrides):
    return ScenarioConfig(scenario=name, seed=7, **{**SMALL[name], **overrides})


def test_every_scenario_has_a_small_config():
    assert set(SMALL) == set(SCENARIOS)


@pytest.mark.parametrize("name", sorted(SMALL))
def test_small_scenarios_pass(name):
    report = run_scenario(small_config(name))
    assert report.passed, {key: claim for key, claim in report.claimed.items() if not claim.passed}
    assert report.claimed
    assert all(claim.citation for claim in report.claimed.values())
    assert report.config["scenario"] == name


def test_dictators_expected_risk_is_at_least_half():
    report = run_scenario(small_config("dictators"))
    assert report.measured["expected_risk"] >= 0.5
    assert report.measured["labelings_identical"] == 1.0


@pytest.mark.parametrize("learner", ["const0", "const1"])
def test_dictators_with_constant_learners(learner):
    report = run_scenario(small_config("dictators", learner=learner))
    assert report.passed
    assert report.measured["expected_risk"] >= 0.5


def test_dictators_membership_learner_inverts_the_construction():
    report = run_scenario(small_config("dictators", learner="membership"))
    assert report.passed
    assert report.measured["expected_risk"] == 0.0


def test_disjoint_conj_bound_and_odd_tail():
    report = run_scenario(small_config("disjoint-conj"))
    assert report.measured["exact_in_ball_risk"] >= 0.46875
    odd = run_scenario(small_config("disjoint-conj", l=5, rho=3))
    assert abs(odd.measured["event_probability"] - 0.484375) <= 1e-12
    assert odd.claimed["event_probability"].relation == "=="


def test_disjoint_conj_even_tail_is_a_lower_bound():
    report = run_scenario(small_config("disjoint-conj", n=16, l=6, rho=3))
    assert report.claimed["event_probability"].bound == 0.4921875
    assert report.claimed["event_probability"].relation == ">="
    assert report.measured["event_probability"] > 0.4921875


def test_lower_bound_contrast_case():
    report = run_scenario(small_config("lower-bound", rho=0))
    assert report.info["regime"] == "contrast"
    assert report.claimed["expected_risk"].relation == "<"
    assert report.passed


def test_scenario_constraints_are_reported():
    with pytest.raises(ScenarioConstraintError) as error:
        run_scenario(small_config("disjoint-conj", l=2))
    assert any("l >= 3" in message for message in error.value.failed)
    with pytest.raises(ScenarioConstraintError):
        run_scenario(small_config("agreement", l=4, m=10))


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        run_scenario(ScenarioConfig(scenario="nonexistent"))


def test_reports_are_deterministic_across_worker_counts():
    cfg = small_config("agreement")
    first = report_to_json(run_scenario(cfg))
    settings.update(workers=3)
    second = report_to_json(run_scenario(cfg))
    assert first == second
    assert "runtime_ms" not in json.loads(first)


def test_write_report_formats(tmp_path):
    report = run_scenario(small_config("disjoint-conj"))
    json_path = tmp_path / "reports.jsonl"
    write_report(report, json_path, "json")
    write_report(report, json_path, "json", timing=True)
    lines = json_path.read_text().splitlines()
    assert len(lines) == 2
    assert "runtime_ms" not in json.loads(lines[0])
    assert "runtime_ms" in json.loads(lines[1])

    csv_path = tmp_path / "reports.csv"
    write_report(report, csv_path, "csv")
    write_report(report, csv_path, "csv")
    rows = csv_path.read_text().splitlines()
    assert rows[0] == ",".join(CSV_HEADER)
    assert len(rows) == 1 + 2 * len(report.measured)


@pytest.mark.parametrize("relation, value, expected", [
    (">=", 0.495, True), (">", 0.5, True), ("<=", 0.52, False), ("<", 0.49, True), ("==", 0.505, True),
])
def test_satisfies_with_tolerance(relation, value, expected):
    assert satisfies(value, 0.5, relation, 0.01) is expected


def test_shipped_configs_validate():
    settings.update(configs_dir=CONFIGS_DIR)
    available = list_available_configs()
    assert "disjoint-conj.json" in available
    assert "robust-learn-alpha3.yml" in available
    for name in available:
        cfg = load_scenario_config(name)
        assert cfg.scenario in SCENARIOS


def test_config_overrides_and_validation(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"schema": 1, "scenario": "disjoint-conj", "n": 12, "l": 4, "rho": 2}))
    assert load_scenario_config(path, seed=42).seed == 42
    path.write_text(json.dumps({"schema": 2, "scenario": "disjoint-conj"}))
    with pytest.raises(ConfigError):
        load_scenario_config(path)
    path.write_text(json.dumps({"schema": 1, "scenario": "disjoint-conj", "colour": "red"}))
    with pytest.raises(ConfigError):
        load_scenario_config(path)
    with pytest.raises(ConfigError):
        load_scenario_config(tmp_path / "missing.json")


def test_lower_bound_margin_is_claimed():
    report = run_scenario(small_config("lower-bound"))
    radius = report.info["confidence_radius"]
    assert report.info["regime"] == "robust"
    assert report.claimed["margin"].bound == pytest.approx(3 * radius)
    assert report.measured["margin"] == pytest.approx(report.measured["expected_risk"] - 0.1)
    assert report.measured["margin"] >= 3 * radius
    assert report.passed


def test_lower_bound_margin_fails_with_too_few_trials():
    report = run_scenario(small_config("lower-bound", trials=10))
    assert report.claimed["expected_risk"].passed
    assert not report.claimed["margin"].passed
    assert not report.passed


def test_lower_bound_intermediate_budget_has_no_risk_claim():
    report = run_scenario(small_config("lower-bound", rho=3))
    assert report.info["regime"] == "intermediate"
    assert "expected_risk" in report.measured
    assert "expected_risk" not in report.claimed
    assert "margin" not in report.claimed


def test_robust_learn_recovery_slack_is_fixed():
    report = run_scenario(small_config("robust-learn"))
    claim = report.claimed["recovery_frequency"]
    assert claim.bound == pytest.approx(0.9)
    assert claim.tolerance == 0.05


def test_disjoint_conj_monte_carlo_mode():
    exact = run_scenario(small_config("disjoint-conj"))
    sampled = run_scenario(small_config("disjoint-conj", mode="mc", risk_samples=20000))
    assert exact.config["mode"] == "exact"
    assert sampled.config["mode"] == "mc"
    assert exact.info["risk"]["method"] == "exact"
    assert sampled.info["risk"]["method"] == "monte_carlo"
    assert sampled.info["risk"]["samples"] == 20000
    radius = sampled.claimed["exact_in_ball_risk"].tolerance
    assert radius == sampled.info["risk"]["radius"] > 0
    assert abs(sampled.measured["exact_in_ball_risk"] - exact.measured["exact_in_ball_risk"]) <= radius
    assert sampled.passed


def test_monte_carlo_mode_lifts_the_enumeration_limit():
    with pytest.raises(ScenarioConstraintError):
        run_scenario(small_config("disjoint-conj", n=24))
    report = run_scenario(small_config("disjoint-conj", n=24, mode="mc", risk_samples=5000))
    assert report.passed


def test_nontrivial_hiding_monte_carlo_mode():
    report = run_scenario(small_config("nontrivial-hiding", mode="mc", risk_samples=20000))
    assert report.info["risk"]["method"] == "monte_carlo"
    assert report.passed


@pytest.mark.parametrize("name, mode", [("reduction", "mc"), ("dictators", "mc"), ("lower-bound", "exact")])
def test_unsupported_mode_is_a_constraint_error(name, mode):
    with pytest.raises(ScenarioConstraintError) as error:
        run_scenario(small_config(name, mode=mode))
    assert any(f"mode '{mode}'" in message for message in error.value.failed)


@pytest.mark.parametrize("alias, name", sorted(SCENARIO_ALIASES.items()))
def test_scenario_aliases(alias, name):
    report = run_scenario(ScenarioConfig(scenario=alias, seed=7, **SMALL[name]))
    assert report.scenario == name
    assert report.passed


def test_unknown_scenario_lists_aliases():
    with pytest.raises(ConfigError, match="agreement-prob"):
        run_scenario(ScenarioConfig(scenario="agreement-probability"))


def test_reduction_flags_k_zero():
    report = run_scenario(small_config("reduction", k=0))
    assert report.info["warning"] == K_ZERO_WARNING
    assert "warning" not in run_scenario(small_config("reduction")).info
