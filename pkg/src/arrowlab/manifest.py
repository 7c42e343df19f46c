"""Run manifests: what was run, with what inputs, producing which files.

Manifests are part of the reproducibility contract: the same (seed, config)
must yield byte-identical output files, the manifest included. The timestamp
therefore honors SOURCE_DATE_EPOCH and defaults to the epoch rather than
wall-clock time.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    seed: int
    scenario: str
    config_digest: str
    outputs: list[str]
    timestamp: str
    assertions: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.assertions.values())


def config_digest(config: dict) -> str:
    """Content hash of a configuration (canonical JSON, sorted keys)."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def manifest_timestamp() -> str:
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).isoformat()


def write_manifest(manifest: RunManifest, out_dir) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    with open(path, "w") as f:
        json.dump(asdict(manifest), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def load_manifest(path) -> RunManifest:
    with open(path) as f:
        data = json.load(f)
    return RunManifest(**data)
