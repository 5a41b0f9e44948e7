import os
import sys
import yaml
from pathlib import Path
from loguru import logger
from typing import Dict, Optional, Union
from dotenv import load_dotenv
from pydantic import ValidationError

from src.errors import ConfigError
from src.schemas import ScenarioConfig

load_dotenv()

CONFIG_SUFFIXES = (".json", ".yml", ".yaml")

CONSOLE_FORMAT = "<level>{level: <8}</level> | <level>{message}</level>"
VERBOSE_CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | {thread.name} | "
    "<cyan>{name}:{function}:{line}</cyan> | <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {thread.name} | {name}:{function}:{line} | {message}"


def configure_logger(verbose: bool = False, log_file: Optional[str] = None):
    """
    Send progress messages to stderr (stdout carries reports) and, when
    log_file is given, every DEBUG record to a rotating file.
    """
    logger.remove()
    logger.add(
        sys.stderr,
        format=VERBOSE_CONSOLE_FORMAT if verbose else CONSOLE_FORMAT,
        level="DEBUG" if verbose else "INFO",
    )
    if log_file:
        logger.add(log_file, rotation="10 MB", retention="1 week", format=FILE_FORMAT, level="DEBUG")
        logger.debug(f"Logging to file: {log_file}")


# Default console logging; the CLI reconfigures it from its flags
configure_logger(verbose=False, log_file=None)


class Settings:
    _instance = None  # Singleton instance

    def __new__(cls):
        """Implement singleton pattern"""
        if cls._instance is None:
            cls._instance = super(Settings, cls).__new__(cls)
            cls._instance._initialize()
        return cls._instance

    def _initialize(self):
        """Initialize the settings from the environment"""
        self._workers = int(os.getenv("ROBUSTLEARN_WORKERS", "1"))
        self._intractable_limit = int(float(os.getenv("ROBUSTLEARN_INTRACTABLE_LIMIT", "1e8")))
        self._confidence = float(os.getenv("ROBUSTLEARN_CONFIDENCE", "0.99"))
        self._configs_dir = Path(os.getenv("ROBUSTLEARN_CONFIGS_DIR", "configs"))

    def update(self, workers: Optional[int] = None, intractable_limit: Optional[int] = None,
               confidence: Optional[float] = None, configs_dir: Optional[Union[str, Path]] = None):
        """
        Override settings, typically from command-line flags.

        Args:
            workers: Number of pool workers used for Monte Carlo and enumeration chunks
            intractable_limit: Largest ball the brute-force adversary will enumerate
            confidence: Confidence level for Hoeffding radii
            configs_dir: Directory holding scenario configuration files
        """
        if workers is not None:
            if workers < 1:
                raise ConfigError(f"workers must be positive, got {workers}")
            self._workers = workers
        if intractable_limit is not None:
            self._intractable_limit = intractable_limit
        if confidence is not None:
            if not 0.0 < confidence < 1.0:
                raise ConfigError(f"confidence must lie in (0, 1), got {confidence}")
            self._confidence = confidence
        if configs_dir is not None:
            self._configs_dir = Path(configs_dir)

    def reset(self):
        """Restore environment defaults"""
        self._initialize()

    @property
    def workers(self) -> int:
        """Get the number of pool workers"""
        return self._workers

    @property
    def intractable_limit(self) -> int:
        """Get the brute-force enumeration limit"""
        return self._intractable_limit

    @property
    def confidence(self) -> float:
        """Get the default confidence level"""
        return self._confidence

    @property
    def configs_dir(self) -> Path:
        """Get the scenario configs directory"""
        return self._configs_dir


settings = Settings()


def list_available_configs() -> Dict[str, Path]:
    """
    List all available scenario configuration files in the configs directory.

    Returns:
        Dict[str, Path]: Dictionary mapping config names to their file paths
    """
    configs = {}
    configs_dir = settings.configs_dir

    if not configs_dir.exists():
        logger.warning(f"Configs directory not found: {configs_dir}")
        return configs

    for file_path in sorted(configs_dir.iterdir()):
        if file_path.suffix in CONFIG_SUFFIXES:
            configs[file_path.name] = file_path

    return configs


def resolve_config_path(name: Union[str, Path]) -> Path:
    """
    Resolve a config argument either as a path or as a name inside the configs directory.
    """
    path = Path(name)
    if path.exists():
        return path
    candidate = settings.configs_dir / path
    if candidate.exists():
        return candidate
    available = ", ".join(list_available_configs()) or "none"
    raise ConfigError(f"Configuration '{name}' not found. Available configs: {available}")


def load_scenario_config(name: Union[str, Path], **overrides) -> ScenarioConfig:
    """
    Load and validate a scenario configuration from a JSON or YAML file.

    Args:
        name: File path, or file name inside the configs directory
        **overrides: Fields replacing the file's values (None values are ignored)

    Returns:
        ScenarioConfig: The validated configuration

    Raises:
        ConfigError: If the file is missing, unreadable or fails validation
    """
    config_path = resolve_config_path(name)

    try:
        with open(config_path, "r") as file:
            config_dict = yaml.safe_load(file)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Could not read configuration {config_path}: {e}") from e

    if not isinstance(config_dict, dict):
        raise ConfigError(f"Configuration {config_path} must contain a mapping")

    config_dict.update({key: value for key, value in overrides.items() if value is not None})

    try:
        config = ScenarioConfig(**config_dict)
    except ValidationError as e:
        raise ConfigError(f"Invalid scenario configuration in {config_path}: {e}") from e

    logger.info(f"Loaded configuration from {config_path}")
    return config
