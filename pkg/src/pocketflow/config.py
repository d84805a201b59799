"""Where to find the services and where to keep local state.

Settings resolve in a fixed order: command-line flag, then environment
variable, then {data_root}/config.json, then the built-in default. The
data root itself cannot come from the config file (the file lives inside
it), so it resolves from flag/env/default only.

Environment variables: POCKETFLOW_REPO, POCKETFLOW_EXEC, POCKETFLOW_DATA.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping
from urllib.parse import urlsplit

from .errors import DecodeError, UnsupportedSchema

# The bundled mock maps a fixed port P to repo P / exec P+1, so
# `pocketflow-mock serve --bind 127.0.0.1:7711` matches these out of the box.
DEFAULT_REPO_BASE = "http://127.0.0.1:7711"
DEFAULT_EXEC_BASE = "http://127.0.0.1:7712"

ENV_REPO = "POCKETFLOW_REPO"
ENV_EXEC = "POCKETFLOW_EXEC"
ENV_DATA = "POCKETFLOW_DATA"

CONFIG_SCHEMA = 1

_FILE_KEYS = {"schema", "repo_base", "exec_base", "poll_initial", "poll_backoff", "poll_max"}


@dataclass(frozen=True)
class Config:
    repo_base: str
    exec_base: str
    data_root: Path
    poll_initial: float = 0.5
    poll_backoff: float = 1.5
    poll_max: float = 5.0

    def __post_init__(self) -> None:
        for label, uri in (("repo_base", self.repo_base), ("exec_base", self.exec_base)):
            parts = urlsplit(uri)
            if parts.scheme not in ("http", "https") or not parts.netloc:
                raise ValueError(f"{label} must be an absolute http(s) URI, got {uri!r}")
        if self.poll_initial <= 0 or self.poll_backoff < 1.0 or self.poll_max < self.poll_initial:
            raise ValueError("poll policy must satisfy 0 < initial <= max, backoff >= 1")


def default_data_root(env: Mapping[str, str] | None = None) -> Path:
    """Per-user application data directory for this tool."""
    env = os.environ if env is None else env
    if sys.platform == "win32":
        base = Path(env.get("APPDATA", Path.home() / "AppData" / "Roaming"))
    elif sys.platform == "darwin":
        base = Path.home() / "Library" / "Application Support"
    else:
        base = Path(env.get("XDG_DATA_HOME") or Path.home() / ".local" / "share")
    return base / "pocketflow"


def _read_config_file(path: Path) -> dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        return {}
    try:
        obj = json.loads(text)
    except ValueError as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise DecodeError(f"{path}: expected a JSON object")
    if obj.get("schema", CONFIG_SCHEMA) != CONFIG_SCHEMA:
        raise UnsupportedSchema(str(path), obj.get("schema"))
    unknown = sorted(set(obj) - _FILE_KEYS)
    if unknown:
        # A typoed key silently falling back to defaults is worse than an error.
        raise DecodeError(f"{path}: unknown settings {', '.join(unknown)}")
    return obj


def resolve_config(
    repo_flag: str | None = None,
    exec_flag: str | None = None,
    data_flag: str | None = None,
    env: Mapping[str, str] | None = None,
) -> Config:
    """Apply the flag > env > file > default chain and validate the result.

    Raises ValueError for invalid values, DecodeError/UnsupportedSchema for
    an unreadable config file.
    """
    env = os.environ if env is None else env
    data_root = Path(data_flag or env.get(ENV_DATA) or default_data_root(env))
    file_obj = _read_config_file(data_root / "config.json")

    def pick(flag: str | None, env_key: str, file_key: str, default: Any) -> Any:
        if flag is not None:
            return flag
        if env.get(env_key):
            return env[env_key]
        if file_key in file_obj:
            return file_obj[file_key]
        return default

    try:
        poll_initial = float(file_obj.get("poll_initial", 0.5))
        poll_backoff = float(file_obj.get("poll_backoff", 1.5))
        poll_max = float(file_obj.get("poll_max", 5.0))
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"{data_root / 'config.json'}: bad poll setting: {exc}") from exc

    return Config(
        repo_base=str(pick(repo_flag, ENV_REPO, "repo_base", DEFAULT_REPO_BASE)).rstrip("/"),
        exec_base=str(pick(exec_flag, ENV_EXEC, "exec_base", DEFAULT_EXEC_BASE)).rstrip("/"),
        data_root=data_root,
        poll_initial=poll_initial,
        poll_backoff=poll_backoff,
        poll_max=poll_max,
    )
