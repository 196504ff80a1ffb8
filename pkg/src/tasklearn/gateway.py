"""Completion backends behind one interface.

Four modes: ``live`` (HTTP), ``replay`` (deterministic corpus lookup),
``scripted`` (ordered canned responses) and ``record`` (wraps live or a
script, appending every exchange to a corpus file). Token accounting uses a
whitespace approximation everywhere except when a live provider reports
usage; the point is order-of-magnitude budget control, not billing accuracy.
"""

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import requests

from tasklearn.errors import (
    BackendConnectionError,
    BudgetExhaustedError,
    GatewayError,
    ReplayKeyMissingError,
    ScriptExhaustedError,
)

if TYPE_CHECKING:
    from tasklearn.prompts import PromptInstance

MODE_LIVE = "live"
MODE_REPLAY = "replay"
MODE_SCRIPTED = "scripted"
MODE_RECORD = "record"


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.0
    max_tokens: int = 100
    n_samples: int = 1

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass
class BackendConfig:
    mode: str
    endpoint: str | None = None
    credential_env: str | None = None
    corpus_path: str | Path | None = None
    script: tuple[str, ...] | None = None
    budget_tokens: int | None = None
    timeout: float = 30.0
    max_retries: int = 2

    def __post_init__(self):
        if self.mode not in (MODE_LIVE, MODE_REPLAY, MODE_SCRIPTED, MODE_RECORD):
            raise ValueError(f"unknown backend mode: {self.mode}")
        if self.mode == MODE_LIVE and not self.endpoint:
            raise ValueError("live mode requires an endpoint")
        if self.mode == MODE_REPLAY and not self.corpus_path:
            raise ValueError("replay mode requires a corpus_path")
        if self.mode == MODE_SCRIPTED and self.script is None:
            raise ValueError("scripted mode requires a script")
        if self.mode == MODE_RECORD:
            if not self.corpus_path:
                raise ValueError("record mode requires a corpus_path")
            if self.script is None and not self.endpoint:
                raise ValueError("record mode requires a script or an endpoint")


class TokenLedger:
    """Monotonic token/call counters; updates are atomic."""

    def __init__(self):
        self._lock = threading.Lock()
        self.sent = 0
        self.received = 0
        self.calls = 0

    def add(self, sent: int, received: int):
        with self._lock:
            self.sent += sent
            self.received += received
            self.calls += 1

    @property
    def total(self) -> int:
        with self._lock:
            return self.sent + self.received

    def snapshot(self) -> dict:
        with self._lock:
            return {"sent": self.sent, "received": self.received, "calls": self.calls}


def estimate_tokens(text: str) -> int:
    return len(text.split())


def normalize_prompt(text: str) -> str:
    """Collapse whitespace runs to single spaces; prompts are single-line by
    construction, so this only guards against incidental spacing drift."""
    return " ".join(text.split())


def prompt_key(text: str) -> str:
    return hashlib.sha256(normalize_prompt(text).encode("utf-8")).hexdigest()


def _http_post(url: str, payload: dict, headers: dict, timeout: float) -> dict:
    resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    resp.raise_for_status()
    return resp.json()


class LLMGateway:
    """Stateful gateway for one backend configuration."""

    def __init__(self, cfg: BackendConfig):
        self.cfg = cfg
        self._script_pos = 0
        self._corpus: dict[str, list[str]] | None = None
        if cfg.mode == MODE_REPLAY:
            self._corpus = load_corpus_responses(cfg.corpus_path)

    def complete(self, prompt: "PromptInstance", ledger: TokenLedger) -> list[str]:
        """Return ``n_samples`` responses for the prompt and update the ledger.

        Budget exhaustion is checked before any backend work and does not
        count as a call.
        """
        cfg = self.cfg
        budget = cfg.budget_tokens
        if budget is not None and ledger.total >= budget:
            raise BudgetExhaustedError(
                f"token budget exhausted ({ledger.total}/{budget})"
            )
        n = prompt.params.n_samples
        if cfg.mode == MODE_REPLAY:
            responses = self._replay(prompt.text, n)
        elif cfg.mode == MODE_SCRIPTED:
            responses = self._scripted(n)
        elif cfg.mode == MODE_RECORD:
            responses = self._scripted(n) if cfg.script is not None else self._live(prompt)
            self._append_record(prompt.text, responses)
        else:
            responses = self._live(prompt)
        ledger.add(
            estimate_tokens(prompt.text), sum(estimate_tokens(r) for r in responses)
        )
        return responses

    def _replay(self, text: str, n: int) -> list[str]:
        key = prompt_key(text)
        assert self._corpus is not None
        if key not in self._corpus:
            raise ReplayKeyMissingError(key, text)
        stored = self._corpus[key]
        return stored[:n] if len(stored) > n else list(stored)

    def _scripted(self, n: int) -> list[str]:
        assert self.cfg.script is not None
        out = []
        for _ in range(n):
            if self._script_pos >= len(self.cfg.script):
                raise ScriptExhaustedError(
                    f"script exhausted after {self._script_pos} responses"
                )
            out.append(self.cfg.script[self._script_pos])
            self._script_pos += 1
        return out

    def _live(self, prompt: "PromptInstance") -> list[str]:
        cfg = self.cfg
        headers = {}
        if cfg.credential_env:
            credential = os.environ.get(cfg.credential_env)
            if not credential:
                raise GatewayError(
                    f"credential environment variable {cfg.credential_env} is not set"
                )
            headers["Authorization"] = f"Bearer {credential}"
        payload = {
            "prompt": prompt.text,
            "temperature": prompt.params.temperature,
            "max_tokens": prompt.params.max_tokens,
            "n": prompt.params.n_samples,
        }
        delay = 0.5
        last_error: Exception | None = None
        for attempt in range(cfg.max_retries + 1):
            try:
                doc = _http_post(cfg.endpoint, payload, headers, cfg.timeout)
                return [str(r) for r in doc["responses"]]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < cfg.max_retries:
                    time.sleep(delay)
                    delay *= 2
        raise BackendConnectionError(
            f"backend unreachable after {cfg.max_retries + 1} attempts: {last_error}"
        )

    def _append_record(self, text: str, responses: list[str]):
        record = {
            "key": prompt_key(text),
            "prompt": text,
            "responses": list(responses),
        }
        with Path(self.cfg.corpus_path).open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")


def load_corpus_responses(path: str | Path) -> dict[str, list[str]]:
    """Load an NDJSON corpus into a key -> responses map. Later records for
    the same key override earlier ones (re-recording)."""
    corpus: dict[str, list[str]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        corpus[doc["key"]] = [str(r) for r in doc["responses"]]
    return corpus


def complete(
    prompt: "PromptInstance", cfg: BackendConfig, ledger: TokenLedger
) -> list[str]:
    """One-shot completion for stateless backends (live/replay)."""
    return LLMGateway(cfg).complete(prompt, ledger)
