#!/usr/bin/env python3

"""User configuration file handling.

The optional file holds per-command option defaults:

    defaults:
      runs: 20000
    design:
      seed: 7
      threads: 4

Values under 'defaults' apply to every command, command sections win over
them, and explicit command-line flags win over both.
"""

import logging
import pathlib
from typing import Any, Optional

import xdg  # type: ignore
import yaml

from . import utils

logger = logging.getLogger(__name__)

CONFIG_FILE = xdg.xdg_config_home() / "unitcharts" / "config.yaml"

DEFAULTS: dict[str, Any] = {
    'alpha': 0.0027,
    'arl0': 370.4,
    'xi': 4.0,
    'runs': 10000,
    'rl_cap': 5_000_000,
    'l_grid': 0.001,
    'bootstrap': 1000,
    'threads': 1,
}


def load_config(path: Optional[pathlib.Path] = None) -> dict[str, Any]:
    """Load the user configuration file.

    A missing default file gives an empty configuration, a missing
    explicit one is an error.
    """
    explicit = path is not None
    path = pathlib.Path(path) if explicit else CONFIG_FILE
    if not path.exists():
        if explicit:
            raise utils.InputError(f"Configuration file {path} not found")
        return {}

    try:
        with path.open(encoding="utf-8") as file:
            config = yaml.safe_load(file) or {}
    except (OSError, yaml.YAMLError) as err:
        raise utils.InputError(f"Cannot load configuration {path}: {err}") \
            from err

    if not isinstance(config, dict) or not all(
            isinstance(v, dict) for v in config.values()):
        raise utils.InputError(f"Configuration {path} must map sections to "
                               "option mappings")
    logger.debug("Loaded configuration from %s", path)
    return config


def _option_name(key: str) -> str:
    return str(key).replace('-', '_')


def default_map(config: dict[str, Any],
                commands: list[str]) -> dict[str, dict[str, Any]]:
    """Get the click default map of each command."""
    common = {_option_name(k): v
              for k, v in config.get('defaults', {}).items()}
    unknown = set(config) - set(commands) - {'defaults'}
    if unknown:
        logger.warning("Ignoring unknown configuration sections: %s",
                       ", ".join(sorted(unknown)))
    return {command: {**common,
                      **{_option_name(k): v
                         for k, v in config.get(command, {}).items()}}
            for command in commands}
