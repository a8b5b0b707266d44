"""Run manifests: what was run, with which parameters, producing which bytes."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from pathlib import Path
from typing import Iterable

from . import __version__

MANIFEST_NAME = "manifest.json"


def sha256_file(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_dir: str | os.PathLike,
    command: str,
    argv: list[str],
    parameters: dict,
    outputs: Iterable[str | os.PathLike],
    inputs: Iterable[str | os.PathLike] = (),
    timestamp: bool = True,
    name: str = MANIFEST_NAME,
) -> Path:
    out_dir = Path(out_dir)
    entries = []
    for p in outputs:
        p = Path(p)
        entries.append({"path": os.path.relpath(p, out_dir), "sha256": sha256_file(p)})
    manifest = {
        "command": command,
        "argv": list(argv),
        "parameters": parameters,
        "inputs": [str(p) for p in inputs],
        "outputs": entries,
        "version": __version__,
    }
    if timestamp:
        manifest["created"] = _dt.datetime.now().isoformat(timespec="seconds")
    path = out_dir / name
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def verify_manifest(path: str | os.PathLike) -> list[tuple[str, bool, str]]:
    """Re-hash every listed output: ``(path, ok, detail)`` per entry."""
    path = Path(path)
    base = path.parent
    with open(path) as fh:
        manifest = json.load(fh)
    results = []
    for entry in manifest.get("outputs", []):
        target = base / entry["path"]
        if not target.exists():
            results.append((entry["path"], False, "missing"))
            continue
        actual = sha256_file(target)
        ok = actual == entry["sha256"]
        results.append((entry["path"], ok, "ok" if ok else f"hash mismatch ({actual[:12]})"))
    return results
