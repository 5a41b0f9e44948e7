import sys
import questionary
from typing import Dict, List, Tuple

from loguru import logger

from src.config import list_available_configs
from src.experiments.scenarios import SCENARIOS


def scenario_choices() -> List[Dict]:
    """
    Build the picker entries: every registered scenario, then every config file.

    Returns:
        List of questionary choice dictionaries whose values are
        ("scenario", name) or ("config", file name) pairs
    """
    choices = [
        {
            'name': f"{scenario.name}: {scenario.description}",
            'value': ("scenario", scenario.name)
        }
        for scenario in SCENARIOS.values()
    ]
    choices.extend(
        {
            'name': f"config file {name}",
            'value': ("config", name)
        }
        for name in list_available_configs()
    )
    return choices


def select_scenario_from_menu() -> Tuple[str, str]:
    """
    Display an interactive menu of scenarios and configuration files and let the user pick one.

    Returns:
        A ("scenario", name) or ("config", file name) pair
    """
    logger.info("\n📋 Select a scenario to run:")

    selected = questionary.select(
        "Use arrow keys to navigate, enter to select:",
        choices=scenario_choices(),
    ).ask()

    # Check if user cancelled the selection
    if selected is None:
        logger.info("\nSelection cancelled by user. Exiting...")
        sys.exit(0)

    logger.info(f"\n✅ Selected {selected[0]}: {selected[1]}")
    return selected
