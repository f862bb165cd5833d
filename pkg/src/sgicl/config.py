"""Run configuration files and backend descriptors.

The run config is a flat key-value text file (diff-able, scriptable); CLI
flags override config keys. Backends are described by small TOML files so an
endpoint swap never requires code changes.
"""

from __future__ import annotations

from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .backend import RemoteBackend, StubBackend, StubScript
from .errors import ConfigurationError
from .taskfile import parse_kv_lines

CONFIG_KEYS = frozenset(
    {
        "task",
        "dataset",
        "train",
        "method",
        "k",
        "seeds",
        "variant",
        "conditioning_mode",
        "temperature",
        "max_new_tokens",
        "stop",
        "retry_limit",
        "shuffle_demos",
        "backend",
        "embed_backend",
        "cache_dir",
        "out_dir",
        "limit",
    }
)


def load_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` run config; unknown keys are rejected."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    entries = parse_kv_lines(path)
    unknown = set(entries) - CONFIG_KEYS
    if unknown:
        raise ConfigurationError(
            f"{path}: unknown config key(s): {', '.join(sorted(unknown))}; "
            f"known keys: {', '.join(sorted(CONFIG_KEYS))}"
        )
    return entries


def load_backend(path: str | Path):
    """Build a backend from its TOML descriptor.

    Stub descriptors carry ``kind = "stub"`` and a ``script`` path (relative
    to the descriptor file); remote descriptors carry ``kind = "remote"`` plus
    endpoint/model/auth settings.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"backend descriptor not found: {path}")
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML ({exc})") from None
    kind = data.get("kind")
    if kind == "stub":
        return _build_stub(path, data)
    if kind == "remote":
        return _build_remote(path, data)
    raise ConfigurationError(
        f"{path}: backend kind must be 'stub' or 'remote', got {kind!r}"
    )


def _take(data: dict, path: Path, allowed: set[str]) -> dict:
    unknown = set(data) - allowed - {"kind"}
    if unknown:
        raise ConfigurationError(
            f"{path}: unknown backend key(s): {', '.join(sorted(unknown))}"
        )
    return data


def _build_stub(path: Path, data: dict) -> StubBackend:
    _take(data, path, {"id", "script", "max_in_flight", "embed_dim"})
    script_path = data.get("script")
    if script_path:
        script_file = (path.parent / script_path).resolve()
        if not script_file.exists():
            raise ConfigurationError(f"{path}: stub script not found: {script_file}")
        script = StubScript.load(script_file)
    else:
        script = StubScript()
    return StubBackend(
        script,
        id=data.get("id", "stub"),
        max_in_flight=int(data.get("max_in_flight", 8)),
        embed_dim=int(data.get("embed_dim", 8)),
    )


def _build_remote(path: Path, data: dict) -> RemoteBackend:
    _take(
        data,
        path,
        {
            "id",
            "endpoint",
            "model",
            "auth_env",
            "embed_endpoint",
            "embed_model",
            "timeout",
            "transport_retries",
            "backoff_base",
            "length_normalize",
            "max_in_flight",
        },
    )
    endpoint = data.get("endpoint")
    if not endpoint:
        raise ConfigurationError(f"{path}: remote backends need an 'endpoint' URL")
    return RemoteBackend(
        endpoint,
        model=data.get("model"),
        id=data.get("id"),
        auth_env=data.get("auth_env"),
        embed_endpoint=data.get("embed_endpoint"),
        embed_model=data.get("embed_model"),
        timeout=float(data.get("timeout", 60.0)),
        transport_retries=int(data.get("transport_retries", 3)),
        backoff_base=float(data.get("backoff_base", 0.5)),
        length_normalize=bool(data.get("length_normalize", False)),
        max_in_flight=int(data.get("max_in_flight", 8)),
    )


__all__ = ["CONFIG_KEYS", "load_backend", "load_config_file"]
