"""Atomic artifact writing plus per-command manifests of content digests."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Iterable

from . import __version__

PARTIAL = ".partial"


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


class Artifacts:
    """Collects the outputs of one command.

    Files are written as ``<name>.partial`` and renamed on :meth:`commit`;
    a failed command leaves its partial files behind for inspection.
    """

    def __init__(self, out_dir: str | Path, command: str, seed: int | None,
                 config: Any = None, inputs: Iterable[str | Path] = ()):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.seed = seed
        self.config = config
        self.inputs = [Path(p) for p in inputs]
        self.names: list[str] = []

    def path(self, name: str) -> Path:
        if name not in self.names:
            self.names.append(name)
        return self.out_dir / (name + PARTIAL)

    def write_text(self, name: str, text: str) -> None:
        self.path(name).write_text(text, encoding="utf-8")

    def write_json(self, name: str, obj: Any) -> None:
        self.write_text(name, dump_json(obj))

    def _relative(self, p: Path) -> str:
        try:
            return str(p.resolve().relative_to(self.out_dir.resolve()))
        except ValueError:
            return str(p)

    def manifest(self) -> dict:
        return {
            "tool": "dedupkit",
            "version": __version__,
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "inputs": [{"path": self._relative(p), "sha256": file_digest(p)} for p in self.inputs],
            "outputs": [{"path": n, "sha256": file_digest(self.out_dir / n)} for n in self.names],
        }

    def commit(self) -> Path:
        for name in self.names:
            os.replace(self.out_dir / (name + PARTIAL), self.out_dir / name)
        target = self.out_dir / f"manifest-{self.command}.json"
        target.write_text(dump_json(self.manifest()), encoding="utf-8")
        return target


def verify_dir(out_dir: str | Path) -> list[str]:
    """Recompute every digest recorded by the manifests in ``out_dir``."""
    out_dir = Path(out_dir)
    manifests = sorted(out_dir.glob("manifest-*.json"))
    if not manifests:
        return [f"no manifests in {out_dir}"]
    problems = []
    for m in manifests:
        data = json.loads(m.read_text(encoding="utf-8"))
        for kind in ("inputs", "outputs"):
            for entry in data.get(kind, []):
                p = Path(entry["path"])
                if not p.is_absolute() and (out_dir / p).exists():
                    p = out_dir / p
                if not p.exists():
                    problems.append(f"{m.name}: missing {kind[:-1]} {entry['path']}")
                elif file_digest(p) != entry["sha256"]:
                    problems.append(f"{m.name}: digest mismatch for {entry['path']}")
    return problems
