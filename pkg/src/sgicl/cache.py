"""Generation cache: one file per entry, atomic writes via rename.

The key is a pure function of the generation inputs, so any change to the
template, sampling temperature, conditioning mode, seed, or backend produces a
distinct entry. Multiple processes may share a cache directory; writers stage
to a unique temp file and ``os.replace`` it into place, so readers never see a
partial record. Corrupt records are quarantined (renamed to ``*.corrupt``) and
reported, never silently reused.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

from .core import GeneratedDemonstration
from .errors import CacheIntegrityError


@dataclass(frozen=True)
class CacheKey:
    task: str
    example_id: str
    target_class: int
    conditioning_mode: str
    temperature: float
    seed: int
    template_hash: str
    backend_id: str

    def digest(self) -> str:
        payload = "\x1f".join(
            (
                self.task,
                self.example_id,
                str(self.target_class),
                self.conditioning_mode,
                repr(float(self.temperature)),
                str(self.seed),
                self.template_hash,
                self.backend_id,
            )
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


class DemonstrationCache:
    """Directory of one-file-per-entry generation records."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, key: CacheKey) -> Path:
        return self.root / f"{key.digest()}.json"

    def get(self, key: CacheKey) -> GeneratedDemonstration | None:
        path = self.path_for(key)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        try:
            record = json.loads(raw)
            demo_dict = record["demonstration"]
            if record["checksum"] != _checksum(demo_dict):
                raise ValueError("checksum mismatch")
            return GeneratedDemonstration.from_dict(demo_dict)
        except (ValueError, KeyError, TypeError) as exc:
            quarantined = self._quarantine(path)
            raise CacheIntegrityError(
                f"corrupt cache entry {path.name} ({exc}); quarantined to "
                f"{quarantined.name}"
            ) from None

    def put(self, key: CacheKey, demo: GeneratedDemonstration) -> None:
        demo_dict = demo.to_dict()
        record = {
            "key": asdict(key),
            "demonstration": demo_dict,
            "checksum": _checksum(demo_dict),
        }
        path = self.path_for(key)
        fd, tmp_name = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(_canonical(record))
            os.replace(tmp_name, path)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except FileNotFoundError:
                pass
            raise

    def _quarantine(self, path: Path) -> Path:
        target = path.with_suffix(".corrupt")
        try:
            os.replace(path, target)
        except FileNotFoundError:
            pass
        return target


def _checksum(demo_dict: dict) -> str:
    return hashlib.sha256(_canonical(demo_dict).encode("utf-8")).hexdigest()


__all__ = ["CacheKey", "DemonstrationCache"]
