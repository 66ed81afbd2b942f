"""Provider-agnostic inference harness.

One serial request lane per model, lanes running concurrently; uniform
decoding controls; bounded retries with fixed backoff; and a response log
whose content is independent of completion interleaving (records are
canonically ordered on close). Real provider adapters live out of tree; the
package ships a scripted mock and a replay transport.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

from .corpus import RawInstance
from .errors import LawMismatch, RegevalError, TransportConfigError
from .jurisdiction import THEMES, Jurisdiction, JurisdictionRegistry
from .retrieval import RetrievalKey, gold_keys_for_records
from .shaping import ShapedViews, SnippetPointer


@dataclass(frozen=True)
class RunConfig:
    """Uniform inference settings; defaults are the reference decoding setup."""

    models: tuple[str, ...] = ()
    temperature: float = 0.0
    max_tokens: int = 2048
    timeout_seconds: float = 180.0
    retries: int = 3
    backoff_seconds: float = 2.0
    concurrency: int | None = None
    context_window: int = 3

    _DEFAULTS = {
        "temperature": 0.0,
        "max_tokens": 2048,
        "timeout_seconds": 180.0,
        "retries": 3,
        "backoff_seconds": 2.0,
        "concurrency": None,
        "context_window": 3,
    }

    @property
    def effective_concurrency(self) -> int:
        return self.concurrency if self.concurrency is not None else max(len(self.models), 1)

    def overrides(self) -> dict:
        return {
            name: getattr(self, name)
            for name, default in self._DEFAULTS.items()
            if getattr(self, name) != default
        }

    def to_dict(self) -> dict:
        return {
            "models": list(self.models),
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "timeout_seconds": self.timeout_seconds,
            "retries": self.retries,
            "backoff_seconds": self.backoff_seconds,
            "concurrency": self.effective_concurrency,
            "context_window": self.context_window,
        }


@dataclass(frozen=True)
class PromptTemplate:
    """Fixed per-law instruction template; never carries expert notes."""

    law: str
    scope_summary: str
    decision_cues: tuple[str, ...]
    exceptions: tuple[str, ...]
    output_constraint: str


_SCOPE_SUMMARIES = {
    "LGPD": "Brazil's general data protection law governing the processing of personal data.",
    "PDPA": "Singapore's personal data protection act governing collection, use, and disclosure.",
    "PIPEDA": "Canada's federal privacy law for personal information in commercial activity.",
}

_EXCEPTIONS = (
    "processing required to comply with a legal or regulatory obligation",
    "data made manifestly public by the data subject",
    "processing strictly necessary to protect life or physical safety",
    "aggregated or fully anonymized data outside the scope of the statute",
)


def default_template(jur: Jurisdiction) -> PromptTemplate:
    example = jur.render("<n>")
    return PromptTemplate(
        law=jur.code,
        scope_summary=_SCOPE_SUMMARIES.get(jur.code, f"Data protection regime {jur.code}."),
        decision_cues=THEMES,
        exceptions=_EXCEPTIONS,
        output_constraint=(
            f"Answer with the implicated {jur.code} article identifiers only, "
            f'written as "{example}" and separated by commas. '
            "Do not add explanations or any other text."
        ),
    )


@dataclass(frozen=True)
class LocalizationPromptItem:
    """Task-1 request: one gold anchor plus compact code context."""

    law: str
    key: RetrievalKey
    context: str = ""


@dataclass(frozen=True)
class JudgmentPromptItem:
    """Task-2 request: one snippet window."""

    law: str
    pointer: SnippetPointer
    snippet: str


PromptItem = LocalizationPromptItem | JudgmentPromptItem


def render_prompt(template: PromptTemplate, item: PromptItem) -> str:
    """Deterministic prompt text for one request."""
    if template.law != item.law:
        raise LawMismatch(f"template law {template.law} != item law {item.law}")
    lines = [
        f"You are auditing an Android application for {template.law} compliance.",
        f"Law scope: {template.scope_summary}",
        "Decision cues: " + ", ".join(template.decision_cues) + ".",
        "Legitimate exceptions: " + "; ".join(template.exceptions) + ".",
        "",
    ]
    if isinstance(item, LocalizationPromptItem):
        key = item.key
        lines.append(f"Anchor granularity: {key.granularity}")
        lines.append(f"File path: {key.file_path}")
        if key.module is not None:
            lines.append(f"Module: {key.module}")
        if key.span is not None:
            lines.append(f"Lines: {key.span.render()}")
        if item.context:
            lines.append("Context:")
            lines.append(item.context)
        lines.append("")
        lines.append(
            "Rank the provisions this anchor implicates, most likely first."
        )
    else:
        lines.append(f"File path: {item.pointer.file_path}")
        lines.append(f"Lines: {item.pointer.span.render()}")
        lines.append("Code window:")
        lines.append(item.snippet)
        lines.append("")
        lines.append("List every provision this code window implicates.")
    lines.append(template.output_constraint)
    return "\n".join(lines)


def _trim_context(snippet: str, window: int) -> str:
    lines = snippet.splitlines()
    limit = 2 * window + 1
    if len(lines) <= limit:
        return snippet
    center = len(lines) // 2
    start = max(0, center - window)
    return "\n".join(lines[start : start + limit])


def build_prompt_items(
    views: Mapping[str, ShapedViews],
    corpus: Sequence[RawInstance] | None = None,
    context_window: int = 3,
    tasks: Sequence[str] = ("task1", "task2"),
) -> list[PromptItem]:
    """Expand gold views into one prompt item per anchor and per snippet.

    Compact task-1 context comes from stored snippets of the contributing
    instances when the raw corpus is supplied; repositories are never fetched.
    """
    context_by_pointer: dict[tuple, str] = {}
    context_by_file: dict[tuple, str] = {}
    ordered_corpus = sorted(
        corpus or (),
        key=lambda i: (i.law, i.repo_url, i.app_name, i.commit_id, i.file_path, i.span),
    )
    for inst in ordered_corpus:
        trimmed = _trim_context(inst.snippet, context_window)
        context_by_pointer.setdefault(
            (inst.law, inst.repo_url, inst.app_name, inst.commit_id, inst.file_path, inst.span),
            trimmed,
        )
        context_by_file.setdefault(
            (inst.law, inst.repo_url, inst.app_name, inst.commit_id, inst.file_path), trimmed
        )

    items: list[PromptItem] = []
    for law, view in sorted(views.items()):
        if "task1" in tasks:
            for key in sorted(gold_keys_for_records(view.task1), key=lambda k: k.sort_key()):
                file_id = (law, key.repo_url, key.app_name, key.commit_id, key.file_path)
                if key.granularity == "line" and key.span is not None:
                    context = context_by_pointer.get(file_id + (key.span,), "")
                    context = context or context_by_file.get(file_id, "")
                else:
                    context = context_by_file.get(file_id, "")
                items.append(LocalizationPromptItem(law=law, key=key, context=context))
        if "task2" in tasks:
            for rec in view.task2:
                items.append(JudgmentPromptItem(law=law, pointer=rec.pointer, snippet=rec.snippet))
    return items


# --- transports ----------------------------------------------------------------


@dataclass(frozen=True)
class TransportRequest:
    """One attempt-independent request; adapters may ignore the key fields."""

    model: str
    task: str
    law: str
    key: Mapping
    prompt: str
    temperature: float
    max_tokens: int
    timeout_seconds: float

    def identity(self) -> str:
        return json.dumps(
            {"model": self.model, "task": self.task, "law": self.law, "key": dict(self.key)},
            sort_keys=True,
        )


class TransportFailure(RegevalError):
    """Transient send failure; the harness may retry."""


class Transport(Protocol):
    def send(self, request: TransportRequest) -> str: ...


class MockTransport:
    """Scripted transport for tests and synthetic runs.

    `reply` maps a request to response text. `fail_times` makes every request
    fail that many times before succeeding; failures are counted per request
    identity so retries are observable.
    """

    def __init__(self, reply: Callable[[TransportRequest], str], fail_times: int = 0):
        self.reply = reply
        self.fail_times = fail_times
        self.attempts: dict[str, int] = {}
        self._lock = threading.Lock()

    def send(self, request: TransportRequest) -> str:
        with self._lock:
            count = self.attempts.get(request.identity(), 0) + 1
            self.attempts[request.identity()] = count
        if count <= self.fail_times:
            raise TransportFailure(f"scripted failure {count}/{self.fail_times}")
        return self.reply(request)


class FailingTransport:
    """Transport whose every attempt fails."""

    def __init__(self) -> None:
        self.attempts = 0
        self._lock = threading.Lock()

    def send(self, request: TransportRequest) -> str:
        with self._lock:
            self.attempts += 1
        raise TransportFailure("permanent scripted failure")


class ReplayTransport:
    """Re-serves the text of a previous run's raw_responses.jsonl."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.exists():
            raise TransportConfigError(f"replay file not found: {self.path}")
        self._responses: dict[str, str] = {}
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            identity = json.dumps(
                {
                    "model": record["model"],
                    "task": record["task"],
                    "law": record["law"],
                    "key": record["key"],
                },
                sort_keys=True,
            )
            self._responses[identity] = record["text"]

    def prepare(self, requests: Sequence[TransportRequest]) -> None:
        missing = [r.identity() for r in requests if r.identity() not in self._responses]
        if missing:
            raise TransportConfigError(
                f"replay file lacks {len(missing)} of {len(requests)} requests"
            )

    def send(self, request: TransportRequest) -> str:
        try:
            return self._responses[request.identity()]
        except KeyError:
            raise TransportFailure(f"no replayed response for {request.identity()}") from None


# --- run execution ---------------------------------------------------------------


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass
class RunResult:
    records: list[dict]
    responses_path: Path
    config_path: Path
    log_path: Path


def _item_request(
    item: PromptItem,
    model: str,
    config: RunConfig,
    templates: Mapping[str, PromptTemplate],
) -> TransportRequest:
    template = templates[item.law]
    prompt = render_prompt(template, item)
    if isinstance(item, LocalizationPromptItem):
        task = "task1"
        key = item.key.to_dict()
        key.pop("law", None)
    else:
        task = "task2"
        key = {
            "file_path": item.pointer.file_path,
            "span": item.pointer.span.as_list(),
            "commit_id": item.pointer.commit_id,
        }
    return TransportRequest(
        model=model,
        task=task,
        law=item.law,
        key=key,
        prompt=prompt,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
        timeout_seconds=config.timeout_seconds,
    )


def execute_run(
    config: RunConfig,
    views: Mapping[str, ShapedViews],
    transport: Transport,
    out_dir: str | Path,
    registry: JurisdictionRegistry,
    corpus: Sequence[RawInstance] | None = None,
    templates: Mapping[str, PromptTemplate] | None = None,
    tasks: Sequence[str] = ("task1", "task2"),
) -> RunResult:
    """Attempt every (model, instance) pair and write the run artifacts.

    Each model gets one serial request lane; lanes run concurrently. Transient
    failures are retried up to `retries` times after the initial attempt; an
    instance that exhausts its retries is recorded with empty text and scored
    downstream as an empty prediction.
    """
    if not config.models:
        raise TransportConfigError("run config lists no models")
    if templates is None:
        templates = {law: default_template(registry.get(law)) for law in views}
    missing = [law for law in views if law not in templates]
    if missing:
        raise TransportConfigError(f"no prompt template for laws: {missing}")

    items = build_prompt_items(views, corpus, config.context_window, tasks)
    requests_by_model = {
        model: [_item_request(item, model, config, templates) for item in items]
        for model in config.models
    }
    prepare = getattr(transport, "prepare", None)
    if callable(prepare):
        prepare([req for reqs in requests_by_model.values() for req in reqs])

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_lock = threading.Lock()
    log_lines: list[str] = []
    records: list[dict] = []
    records_lock = threading.Lock()

    def log(message: str) -> None:
        with log_lock:
            log_lines.append(f"{_timestamp()} {message}")

    overrides = config.overrides()
    log(f"run start models={list(config.models)} requests={len(items) * len(config.models)}")
    if overrides:
        log(f"non-default settings: {json.dumps(overrides, sort_keys=True)}")

    def run_lane(model: str) -> None:
        done = 0
        failed = 0
        total = len(requests_by_model[model])
        for request in requests_by_model[model]:
            started = _timestamp()
            attempts = 0
            text = ""
            status = "exhausted_retries"
            max_attempts = config.retries + 1
            while attempts < max_attempts:
                attempts += 1
                try:
                    text = transport.send(request)
                    status = "ok"
                    break
                except TransportFailure as exc:
                    log(f"{model} attempt {attempts}/{max_attempts} failed: {exc}")
                    if attempts < max_attempts and config.backoff_seconds > 0:
                        time.sleep(config.backoff_seconds)
            if status == "ok":
                done += 1
            else:
                failed += 1
            record = {
                "model": model,
                "task": request.task,
                "law": request.law,
                "key": dict(request.key),
                "text": text if status == "ok" else "",
                "status": status,
                "attempts": attempts,
                "timestamps": {"started": started, "finished": _timestamp()},
            }
            with records_lock:
                records.append(record)
            log(f"{model} progress {done + failed}/{total} ok={done} failed={failed}")

    with ThreadPoolExecutor(max_workers=config.effective_concurrency) as pool:
        futures = [pool.submit(run_lane, model) for model in config.models]
        for future in futures:
            future.result()

    records.sort(key=lambda r: (r["model"], r["task"], r["law"], json.dumps(r["key"], sort_keys=True)))

    responses_path = out / "raw_responses.jsonl"
    with open(responses_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    config_path = out / "run_config.json"
    config_payload = {"run": config.to_dict(), "overrides": config.overrides()}
    config_path.write_text(json.dumps(config_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    log_path = out / "run.log"
    counters = {
        model: sum(1 for r in records if r["model"] == model and r["status"] == "ok")
        for model in config.models
    }
    summary = ", ".join(f"{model}: {count}/{len(items)} ok" for model, count in counters.items())
    log(f"run complete ({summary})")
    log_path.write_text("\n".join(log_lines) + "\n", encoding="utf-8")
    return RunResult(records=records, responses_path=responses_path, config_path=config_path, log_path=log_path)


def load_responses(path: str | Path) -> list[dict]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records
