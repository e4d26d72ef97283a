"""Minimal chat-completion client for the optional language-model backend.

Configured entirely from the environment (EDITROOM_LLM_URL, EDITROOM_LLM_KEY,
EDITROOM_LLM_MODEL); no vendor lock beyond the common chat-completions POST
shape. Tests never touch the network: they inject fake clients.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

ENV_URL = "EDITROOM_LLM_URL"
ENV_KEY = "EDITROOM_LLM_KEY"
ENV_MODEL = "EDITROOM_LLM_MODEL"


class LlmError(RuntimeError):
    """Transport or protocol failure talking to the language model."""


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str
    model: str
    api_key: str | None = None
    timeout: float = 30.0
    retries: int = 2

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @classmethod
    def from_env(cls) -> "LlmConfig | None":
        endpoint = os.environ.get(ENV_URL)
        if not endpoint:
            return None
        return cls(
            endpoint=endpoint,
            model=os.environ.get(ENV_MODEL, "gpt-4o"),
            api_key=os.environ.get(ENV_KEY),
        )


class LlmClient:
    """POSTs {model, messages} and returns the first choice's content."""

    offline = False

    def __init__(self, config: LlmConfig, transport=None):
        self.config = config
        if transport is None:
            import httpx

            transport = httpx.Client(timeout=config.timeout)
        self._http = transport

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        last_error = None
        for attempt in range(self.config.retries + 1):
            try:
                response = self._http.post(self.config.endpoint, json=payload, headers=headers)
                if response.status_code >= 500:
                    raise LlmError(f"server error {response.status_code}")
                if response.status_code != 200:
                    raise LlmError(f"request failed: {response.status_code} {response.text[:200]}")
                body = response.json()
                return body["choices"][0]["message"]["content"]
            except LlmError as exc:
                last_error = exc
            except Exception as exc:  # transport errors from the http layer
                last_error = LlmError(str(exc))
            if attempt < self.config.retries:
                time.sleep(min(2.0**attempt * 0.1, 2.0))
        raise last_error
