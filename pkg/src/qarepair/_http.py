"""Shared HTTP plumbing for the live adapters: auth lookup, retries, on-disk cache."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from pathlib import Path
from typing import Any, Callable

import httpx

from .errors import ConfigError, PayloadError

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 425, 429, 500, 502, 503, 504})


def resolve_token(env_name: str | None) -> str | None:
    """Read an auth token from the environment; a named but unset variable is a config error."""
    if not env_name:
        return None
    token = os.environ.get(env_name)
    if not token:
        raise ConfigError(f"environment variable {env_name} is not set (needed for backend auth)")
    return token


def post_json(
    client: httpx.Client,
    url: str,
    payload: dict[str, Any],
    *,
    token: str | None,
    max_retries: int,
    backoff: float,
    unavailable: type[Exception],
    sleep: Callable[[float], None] = time.sleep,
) -> Any:
    """POST ``payload`` and decode the JSON reply, retrying transient failures.

    Transport errors and retryable status codes are retried up to ``max_retries``
    times with exponential backoff; exhausting them raises ``unavailable``.
    """
    headers = {"Content-Type": "application/json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    last_error = "no attempt made"
    for attempt in range(max_retries + 1):
        if attempt:
            sleep(backoff * 2 ** (attempt - 1))
        try:
            resp = client.post(url, json=payload, headers=headers)
        except httpx.TransportError as exc:
            last_error = type(exc).__name__
            logger.warning("transport error on %s (attempt %d): %s", url, attempt + 1, last_error)
            continue
        if resp.status_code in RETRYABLE_STATUS:
            last_error = f"HTTP {resp.status_code}"
            logger.warning("retryable status %d from %s (attempt %d)", resp.status_code, url, attempt + 1)
            continue
        if resp.status_code >= 400:
            raise unavailable(f"HTTP {resp.status_code} from {url}")
        try:
            return resp.json()
        except ValueError as exc:
            raise PayloadError(f"non-JSON response from {url}") from exc
    raise unavailable(f"{url} unavailable after {max_retries + 1} attempts ({last_error})")


class JsonFileCache:
    """One JSON file per key; writes go through a temp file and an atomic rename."""

    def __init__(self, directory: str | os.PathLike[str]):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(*parts: Any) -> str:
        blob = json.dumps(parts, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Any | None:
        path = self._path(key)
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except ValueError:
            logger.warning("ignoring corrupt cache entry %s", path)
            return None

    def put(self, key: str, value: Any) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(value, fh, ensure_ascii=False)
            os.replace(tmp, self._path(key))
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
