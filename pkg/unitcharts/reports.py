#!/usr/bin/env python3

"""Input files, structured reports and table rendering."""

import dataclasses
import datetime
import enum
import hashlib
import importlib.resources
import logging
import math
import pathlib
from typing import Any, Iterable, Optional, Sequence

import click
import numpy as np
import tabulate
import yaml

from . import utils

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SIGNIFICANT_DIGITS = 10


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Provenance of a report."""

    command: str
    config: dict[str, Any]
    version: str
    input_digest: str
    timestamp: str

    def as_dict(self) -> dict[str, Any]:
        """Export data as a dictionary."""
        return dataclasses.asdict(self)


def bundled_dataset(phase: int) -> pathlib.Path:
    """Get the path of a bundled peanut contamination sample."""
    resource = importlib.resources.files(__package__) / "data" \
        / f"peanut_phase{phase}.txt"
    return pathlib.Path(str(resource))


def read_series(path: pathlib.Path) -> np.ndarray:
    """Read a one-column file of observations in (0, 1).

    Blank lines and lines starting with '#' are skipped, and the first
    remaining line may be a non-numeric header.
    """
    try:
        lines = pathlib.Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise utils.InputError(f"Cannot read {path}: {err}") from err

    values = []
    header_allowed = True
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            value = float(text)
        except ValueError as err:
            if header_allowed:
                header_allowed = False
                continue
            raise utils.InputError(f"{path}:{lineno}: not a number: {text!r}",
                                   lineno) from err
        header_allowed = False
        if not 0.0 < value < 1.0:
            raise utils.InputError(
                f"{path}:{lineno}: {text} is outside the open interval "
                f"(0, 1) supporting the models", lineno)
        values.append(value)

    if not values:
        raise utils.InputError(f"{path}: no observation found")
    return np.array(values)


def input_digest(paths: Iterable[pathlib.Path]) -> str:
    """Get the SHA-256 digest of input files, in order."""
    digest = hashlib.sha256(usedforsecurity=False)
    for path in paths:
        digest.update(pathlib.Path(path).read_bytes())
    return digest.hexdigest()


def make_manifest(command: str, config: dict[str, Any],
                  inputs: Sequence[pathlib.Path] = ()) -> RunManifest:
    """Create the manifest of a command run."""
    from . import __version__  # pylint: disable=import-outside-toplevel

    return RunManifest(
        command=command, config=config, version=__version__,
        input_digest=input_digest(inputs),
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(
            timespec='seconds'))


def normalize(value: Any) -> Any:
    """Convert a result tree to plain YAML types, rounding floats."""
    # pylint: disable=too-many-return-statements
    if isinstance(value, enum.Enum):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return str(value)
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, dict):
        return {str(normalize(k)): normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [normalize(v) for v in value]
    if hasattr(value, 'as_dict'):
        return normalize(value.as_dict())
    return value


def dump_report(manifest: RunManifest, result: Any) -> str:
    """Get the YAML text of a report."""
    document = {'schema_version': SCHEMA_VERSION,
                'manifest': normalize(manifest.as_dict()),
                'result': normalize(result)}
    return yaml.safe_dump(document, sort_keys=False, allow_unicode=True)


def write_report(manifest: RunManifest, result: Any,
                 output: Optional[pathlib.Path] = None):
    """Write a report to a file, or to stdout."""
    text = dump_report(manifest, result)
    if output is None:
        click.echo(text, nl=False)
        return
    try:
        pathlib.Path(output).write_text(text, encoding="utf-8")
    except OSError as err:
        raise utils.InputError(f"Cannot write {output}: {err}") from err
    logger.info("Report written to %s", output)


def load_report(path: pathlib.Path) -> dict[str, Any]:
    """Load a report written by write_report."""
    try:
        with pathlib.Path(path).open(encoding="utf-8") as file:
            document = yaml.safe_load(file)
    except (OSError, yaml.YAMLError) as err:
        raise utils.InputError(f"Cannot load report {path}: {err}") from err
    if not isinstance(document, dict) or 'result' not in document:
        raise utils.InputError(f"{path} is not a report")
    return document


def _format_cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}" if abs(value) < 10 else f"{value:.2f}"
    return value


def render_table(headers: Sequence[str], rows: Iterable[Sequence[Any]],
                 title: Optional[str] = None) -> str:
    """Get an aligned text rendering of rows."""
    table = tabulate.tabulate([[_format_cell(v) for v in row] for row in rows],
                              headers=headers, disablenumparse=True)
    if title:
        return f"{title}\n{table}"
    return table
