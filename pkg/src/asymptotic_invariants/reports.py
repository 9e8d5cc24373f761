"""Run manifests, report artifacts and selftest budgets."""

import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from datetime import UTC, datetime
from pathlib import Path
from typing import Literal, TypedDict, cast

import yaml

from asymptotic_invariants import __version__

Budget = Literal["small", "medium", "full"]
Row = dict[str, float | int | str]


class SelftestBudget(TypedDict):
    """Reduced acceptance budgets for one selftest level."""

    curve_points: int
    mc_samples: int
    n_pairs: int
    times: list[float]
    dt: float
    energy_samples: int
    biot_savart_pairs: int


def config_hash(effective: dict[str, object]) -> str:
    """sha256 of the canonical JSON of an effective configuration."""
    canonical = json.dumps(effective, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """What produced an artifact; equal manifests mean equal bodies."""

    command: list[str]
    config_hash: str
    seed: int
    version: str = __version__
    started_at: str = ""
    wall_seconds: float = 0.0
    budgets: dict[str, object] = field(default_factory=dict)
    threads: int | None = None

    @classmethod
    def start(
        cls,
        effective: dict[str, object],
        seed: int,
        threads: int | None = None,
        command: list[str] | None = None,
    ) -> "RunManifest":
        return cls(
            command=list(command if command is not None else sys.argv),
            config_hash=config_hash(effective),
            seed=seed,
            started_at=datetime.now(UTC).isoformat(timespec="seconds"),
            wall_seconds=time.monotonic(),
            budgets=effective,
            threads=threads,
        )

    def finished(self) -> "RunManifest":
        """Copy with ``wall_seconds`` turned from a start mark into elapsed time."""
        elapsed = round(time.monotonic() - self.wall_seconds, 3)
        return RunManifest(
            command=self.command,
            config_hash=self.config_hash,
            seed=self.seed,
            version=self.version,
            started_at=self.started_at,
            wall_seconds=elapsed,
            budgets=self.budgets,
            threads=self.threads,
        )

    def to_dict(self) -> dict[str, object]:
        return asdict(self)


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        mode="w",
        dir=path.parent,
        prefix=f".{path.name}.",
        suffix=".tmp",
        delete=False,
        newline="",
    ) as tf:
        temp_path = Path(tf.name)
        _ = tf.write(text)
    try:
        os.replace(temp_path, path)
    except OSError:
        temp_path.unlink(missing_ok=True)
        raise


def render_json(body: dict[str, object], manifest: RunManifest) -> str:
    """JSON report with the manifest embedded under ``"manifest"``."""
    return json.dumps({**body, "manifest": manifest.to_dict()}, indent=2, default=str) + "\n"


def write_json(path: Path, body: dict[str, object], manifest: RunManifest) -> None:
    atomic_write(path, render_json(body, manifest))


def render_csv(rows: list[Row]) -> str:
    if not rows:
        return ""
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return out.getvalue()


def manifest_path(csv_path: Path) -> Path:
    return csv_path.with_name(f"{csv_path.stem}.manifest.json")


def write_csv(path: Path, rows: list[Row], manifest: RunManifest) -> None:
    """CSV ladder plus its sibling ``<name>.manifest.json``."""
    atomic_write(path, render_csv(rows))
    atomic_write(manifest_path(path), json.dumps(manifest.to_dict(), indent=2, default=str) + "\n")


def load_report(path: Path) -> dict[str, object]:
    """Load a JSON report written by ``write_json``.

    Raises:
        FileNotFoundError: If the report doesn't exist
    """
    if not path.exists():
        msg = f"report not found: {path}"
        raise FileNotFoundError(msg)

    with path.open() as f:
        raw_data = json.load(f)

    return cast(dict[str, object], raw_data)


_BUDGET_KEYS = (
    "curve_points",
    "mc_samples",
    "n_pairs",
    "times",
    "dt",
    "energy_samples",
    "biot_savart_pairs",
)


def load_budgets(budgets_file: Path) -> dict[str, SelftestBudget]:
    """Load selftest budgets from YAML.

    Args:
        budgets_file: Path to budgets.yaml

    Returns:
        Budgets keyed by level name

    Raises:
        FileNotFoundError: If budgets.yaml doesn't exist
        ValueError: If a level misses a key
    """
    if not budgets_file.exists():
        msg = f"budgets not found: {budgets_file}"
        raise FileNotFoundError(msg)

    with budgets_file.open() as f:
        raw_data = yaml.safe_load(f)

    if not isinstance(raw_data, dict) or "budgets" not in raw_data:
        msg = f"{budgets_file}: expected a top-level 'budgets' mapping"
        raise ValueError(msg)

    data = cast(dict[str, dict[str, object]], raw_data["budgets"])
    for level, values in data.items():
        missing = [k for k in _BUDGET_KEYS if k not in values]
        if missing:
            msg = f"{budgets_file}: budget '{level}' is missing {', '.join(missing)}"
            raise ValueError(msg)

    return cast(dict[str, SelftestBudget], data)
