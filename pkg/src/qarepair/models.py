"""Model backends: a scripted mock keyed by prompt substrings and an HTTP chat adapter."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path
from typing import Any, Callable, Iterable, Protocol, Sequence

import httpx

from ._http import post_json, resolve_token
from .errors import ModelUnavailableError, PayloadError

logger = logging.getLogger(__name__)


class ModelBackend(Protocol):
    """``complete(prompt)`` returns the raw completion text.

    Transport failure after retries raises ModelUnavailableError.
    """

    def complete(self, prompt: str) -> str: ...


class ScriptRule:
    __slots__ = ("patterns", "completion", "fail")

    def __init__(self, match: str | Sequence[str], completion: str = "", fail: bool = False):
        self.patterns = (match,) if isinstance(match, str) else tuple(match)
        self.completion = completion
        self.fail = fail

    def matches(self, prompt: str) -> bool:
        return all(p in prompt for p in self.patterns)


class ScriptedModel:
    """Returns the completion of the first rule whose substrings all occur in the prompt.

    Script file format::

        {"rules": [{"match": "substring" | ["all", "of", "these"],
                    "completion": "...", "fail": false}],
         "default": ""}

    A rule with ``"fail": true`` simulates a transport outage.
    """

    def __init__(self, rules: Iterable[ScriptRule], default: str = "", default_fail: bool = False):
        self.rules = list(rules)
        self.default = default
        self.default_fail = default_fail

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScriptedModel":
        rules = []
        for r in data.get("rules", []):
            if "match" not in r:
                raise PayloadError("model script rule without 'match'")
            rules.append(ScriptRule(r["match"], r.get("completion", ""), bool(r.get("fail", False))))
        return cls(rules, data.get("default", ""), bool(data.get("default_fail", False)))

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedModel":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise PayloadError(f"{path}: model script must be a JSON object")
        return cls.from_dict(data)

    def complete(self, prompt: str) -> str:
        for rule in self.rules:
            if rule.matches(prompt):
                if rule.fail:
                    raise ModelUnavailableError("scripted model outage")
                return rule.completion
        if self.default_fail:
            raise ModelUnavailableError("scripted model outage")
        return self.default


class ChatCompletionModel:
    """OpenAI-compatible chat-completions adapter with a low-randomness default."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        auth_env: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        temperature: float = 0.0,
        backoff: float = 1.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.max_retries = max_retries
        self.backoff = backoff
        self._token = resolve_token(auth_env)
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        data = post_json(
            self._client,
            self.endpoint,
            payload,
            token=self._token,
            max_retries=self.max_retries,
            backoff=self.backoff,
            unavailable=ModelUnavailableError,
            sleep=self._sleep,
        )
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise PayloadError("chat response lacks choices[0].message.content") from exc
        return content if isinstance(content, str) else ""

    def close(self) -> None:
        self._client.close()
