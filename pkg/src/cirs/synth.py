"""Few-shot data synthesis: templates, generation clients, syntax gate, dedupe.

Prompts and completions use a tagged layout::

    <question>
    ...
    </question>
    <solution>
    ...
    </solution>

Each completion may carry any number of such pairs.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

from .frontend import TokenKind, tokenize, validate_syntax

log = logging.getLogger(__name__)

DEFAULT_PREAMBLE = (
    "You write math word problems and solve them with short Python programs.\n"
    "Study the examples below, then write one new problem with a different "
    "scenario and its Python solution. The solution must assign the final "
    "result to a variable named answer."
)
EXEMPLARS_PER_TEMPLATE = 3

_PAIR = re.compile(
    r"<question>\s*\n?(.*?)\n?\s*</question>\s*<solution>\s*\n?(.*?)\n?\s*</solution>",
    re.DOTALL,
)
_FENCE = re.compile(r"^```(?:python)?\s*\n(.*?)\n```\s*$", re.DOTALL)

ACCEPTED = "accepted"
REJECTED_SYNTAX = "rejected_syntax"
REJECTED_DUPLICATE = "rejected_duplicate"


class TransportError(RuntimeError):
    """A transient failure talking to the generation backend."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class SeedProblem:
    id: str
    dataset: str
    question: str
    solution: str

    def __post_init__(self):
        if not self.question.strip() or not self.solution.strip():
            raise ValueError(f"seed problem {self.id!r} needs a question and a solution")

    @classmethod
    def from_record(cls, rec: dict) -> "SeedProblem":
        return cls(str(rec["id"]), str(rec.get("dataset", "")), rec.get("question") or "", rec.get("code") or "")


@dataclass(frozen=True)
class GenerationTemplate:
    preamble: str
    exemplars: tuple[SeedProblem, ...]
    seed: int

    def render(self) -> str:
        parts = [self.preamble.rstrip(), ""]
        for n, ex in enumerate(self.exemplars, 1):
            parts += [f"Example {n}:", format_pair(ex.question, ex.solution), ""]
        parts += ["New problem:", "<question>"]
        return "\n".join(parts)


def format_pair(question: str, code: str) -> str:
    return f"<question>\n{question.strip()}\n</question>\n<solution>\n{code.strip()}\n</solution>"


def sample_indices(n: int, k: int, seed: int) -> list[int]:
    """First ``k`` positions of a Fisher-Yates shuffle of ``range(n)``.

    Swap ``i`` is with ``random.Random(seed).randrange(i, n)``.
    """
    rng = random.Random(seed)
    idx = list(range(n))
    for i in range(k):
        j = rng.randrange(i, n)
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k]


def build_template(pool: Sequence[SeedProblem], seed: int, preamble: str = DEFAULT_PREAMBLE) -> GenerationTemplate:
    if len(pool) < EXEMPLARS_PER_TEMPLATE:
        raise ValueError(f"seed pool needs at least {EXEMPLARS_PER_TEMPLATE} problems, got {len(pool)}")
    picks = sample_indices(len(pool), EXEMPLARS_PER_TEMPLATE, seed)
    return GenerationTemplate(preamble, tuple(pool[i] for i in picks), seed)


@dataclass(frozen=True)
class Completion:
    text: str
    usage: dict | None = None


class GenerationClient(Protocol):
    model_tag: str

    def complete(self, prompt: str) -> Completion:
        """Return a completion; raise :class:`TransportError` on transient failure."""


class MockClient:
    """Replays scripted completions in call order.

    Script entries are completion strings, or dicts ``{"error": msg}``
    which raise :class:`TransportError` for that call.  The script cycles.
    """

    model_tag = "mock"

    def __init__(self, script: Sequence[str | dict], model_tag: str = "mock"):
        if not script:
            raise ValueError("mock script is empty")
        self.script = list(script)
        self.model_tag = model_tag
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, prompt: str) -> Completion:
        with self._lock:
            entry = self.script[self.calls % len(self.script)]
            self.calls += 1
        if isinstance(entry, dict):
            if "error" in entry:
                raise TransportError(entry["error"])
            return Completion(entry["text"], entry.get("usage"))
        return Completion(entry)

    @classmethod
    def from_file(cls, path) -> "MockClient":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))


class HTTPClient:
    """OpenAI-style chat-completions backend.

    The credential is read from the environment variable ``credential_env``
    at call time and never logged.
    """

    def __init__(self, endpoint: str, credential_env: str | None = None, model: str = "gpt-3.5-turbo",
                 temperature: float = 0.7, timeout: float = 60.0):
        self.endpoint = endpoint
        self.credential_env = credential_env
        self.model_tag = model
        self.temperature = temperature
        self.timeout = timeout

    def complete(self, prompt: str) -> Completion:
        body = json.dumps({
            "model": self.model_tag,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }).encode()
        headers = {"Content-Type": "application/json"}
        if self.credential_env:
            key = os.environ.get(self.credential_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        req = urllib.request.Request(self.endpoint, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                data = json.load(resp)
        except urllib.error.HTTPError as exc:
            if exc.code == 429 or exc.code >= 500:
                raise TransportError(f"HTTP {exc.code}") from exc
            raise
        except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
            raise TransportError(str(exc)) from exc
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError("unexpected response shape") from exc
        return Completion(text, data.get("usage"))


def parse_completion(text: str) -> list[tuple[str, str]]:
    # the rendered prompt ends inside an open <question> tag
    if "<question>" not in text.split("</question>", 1)[0] and "</question>" in text:
        text = "<question>\n" + text
    pairs = []
    for q, code in _PAIR.findall(text):
        code = code.strip()
        fenced = _FENCE.match(code)
        if fenced:
            code = fenced.group(1)
        if q.strip() and code.strip():
            pairs.append((q.strip(), code))
    return pairs


@dataclass
class Generation:
    pairs: list[tuple[str, str]]
    attempts: int
    parse_failed: bool
    usage: dict | None = None


def generate(
    template: GenerationTemplate,
    client: GenerationClient,
    max_attempts: int = 3,
    backoff: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> Generation:
    """One template round trip, retrying transport errors with exponential backoff."""
    prompt = template.render()
    for attempt in range(1, max_attempts + 1):
        try:
            completion = client.complete(prompt)
            break
        except TransportError as exc:
            if attempt == max_attempts:
                raise TransportError(f"giving up after {attempt} attempts: {exc}", attempts=attempt) from exc
            delay = backoff * 2 ** (attempt - 1)
            log.warning("transport error (attempt %d/%d), retrying in %.1fs", attempt, max_attempts, delay)
            sleep(delay)
    pairs = parse_completion(completion.text)
    if not pairs:
        log.warning("completion for template seed %d had no question/solution pair", template.seed)
    return Generation(pairs, attempt, not pairs, completion.usage)


@dataclass
class GeneratedSample:
    id: str
    question: str
    code: str
    provenance: dict
    status: str | None = None

    def to_record(self) -> dict:
        return {"id": self.id, "question": self.question, "code": self.code,
                "provenance": self.provenance, "status": self.status}


def normalize_code(code: str) -> str:
    """Code with comments dropped and whitespace canonicalized, for duplicate checks."""
    out = []
    for tok in tokenize(code):
        if tok.kind is TokenKind.COMMENT:
            continue
        if tok.kind is TokenKind.NEWLINE:
            if out and out[-1] != "\n":
                out.append("\n")
        elif tok.kind is TokenKind.INDENT_MARKER:
            out.append("<indent>" if tok.lexeme else "<dedent>")
        else:
            out.append(tok.lexeme)
    return " ".join(out).strip()


def normalize_question(question: str) -> str:
    return " ".join(question.split())


class Gate:
    """Stateful syntax gate and first-occurrence-wins deduplicator."""

    def __init__(self, reserved: Iterable[SeedProblem] = ()):
        self.seen_code: set[str] = set()
        self.seen_questions: set[str] = set()
        # seed problems count as already seen so they never leak into the output
        for p in reserved:
            if validate_syntax(p.solution).valid:
                self.seen_code.add(normalize_code(p.solution))
            self.seen_questions.add(normalize_question(p.question))

    def __call__(self, sample: GeneratedSample) -> GeneratedSample:
        if not sample.code.strip() or not validate_syntax(sample.code).valid:
            sample.status = REJECTED_SYNTAX
            return sample
        code_key = normalize_code(sample.code)
        q_key = normalize_question(sample.question)
        if code_key in self.seen_code or q_key in self.seen_questions:
            sample.status = REJECTED_DUPLICATE
            return sample
        self.seen_code.add(code_key)
        self.seen_questions.add(q_key)
        sample.status = ACCEPTED
        return sample


def gate_and_dedupe(samples: Iterable[GeneratedSample], reserved: Iterable[SeedProblem] = ()) -> dict[str, list[GeneratedSample]]:
    gate = Gate(reserved)
    out: dict[str, list[GeneratedSample]] = {ACCEPTED: [], REJECTED_SYNTAX: [], REJECTED_DUPLICATE: []}
    for s in samples:
        gate(s)
        out[s.status].append(s)
    return out


def utc_timestamp() -> str:
    """Current UTC time, or ``SOURCE_DATE_EPOCH`` when set for reproducible runs."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _round_seed(seed: int, round_no: int) -> int:
    digest = hashlib.sha256(f"{seed}:{round_no}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class SynthesisResult:
    samples: list[GeneratedSample]
    manifest: dict = field(default_factory=dict)

    @property
    def accepted(self) -> list[GeneratedSample]:
        return [s for s in self.samples if s.status == ACCEPTED]

    @property
    def complete(self) -> bool:
        return self.manifest.get("status") == "complete"


def synthesize_corpus(
    pool: Sequence[SeedProblem],
    target: int,
    client: GenerationClient,
    seed: int = 0,
    budget: int = 100,
    preamble: str = DEFAULT_PREAMBLE,
    max_attempts: int = 3,
    backoff: float = 1.0,
    concurrency: int = 1,
    clock: Callable[[], str] = utc_timestamp,
    sleep: Callable[[float], None] = time.sleep,
) -> SynthesisResult:
    """Run build-template, generate and gate rounds until ``target`` samples are accepted.

    ``budget`` caps the number of template rounds (client calls before
    retries).  Rounds are dispatched in batches of ``concurrency`` and their
    candidates consumed in dispatch order, so duplicates resolve the same way
    however the calls finish.
    """
    if target < 1:
        raise ValueError("target must be >= 1")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    gate = Gate(pool)
    samples: list[GeneratedSample] = []
    counts = {ACCEPTED: 0, REJECTED_SYNTAX: 0, REJECTED_DUPLICATE: 0}
    rounds = attempts = parse_failures = 0
    usage: dict[str, int] = {}

    def run(round_no: int) -> tuple[GenerationTemplate, Generation]:
        template = build_template(pool, _round_seed(seed, round_no), preamble)
        return template, generate(template, client, max_attempts, backoff, sleep)

    error: TransportError | None = None
    executor = ThreadPoolExecutor(max_workers=concurrency) if concurrency > 1 else None
    try:
        while counts[ACCEPTED] < target and rounds < budget and error is None:
            batch = range(rounds, min(rounds + max(concurrency, 1), budget))
            results = []
            if executor is None:
                for r in batch:
                    try:
                        results.append(run(r))
                    except TransportError as exc:
                        error = exc
                        break
            else:
                # keep dispatch order; a failed round ends the run after the rounds before it
                for fut in [executor.submit(run, r) for r in batch]:
                    try:
                        results.append(fut.result())
                    except TransportError as exc:
                        error = exc
                        break
            if error is not None:
                rounds += 1
                attempts += error.attempts
            for template, gen in results:
                rounds += 1
                attempts += gen.attempts
                parse_failures += gen.parse_failed
                for key, value in (gen.usage or {}).items():
                    if isinstance(value, int):
                        usage[key] = usage.get(key, 0) + value
                for question, code in gen.pairs:
                    if counts[ACCEPTED] >= target:
                        break
                    sample = GeneratedSample(
                        id=f"gen-{len(samples):06d}",
                        question=question,
                        code=code,
                        provenance={
                            "template_seed_ids": [p.id for p in template.exemplars],
                            "template_seed": template.seed,
                            "model": client.model_tag,
                            "timestamp": clock(),
                        },
                    )
                    gate(sample)
                    counts[sample.status] += 1
                    samples.append(sample)
                if counts[ACCEPTED] >= target:
                    break
    finally:
        if executor is not None:
            executor.shutdown()

    total = len(samples)
    status = "complete" if counts[ACCEPTED] >= target else "partial"
    if error is not None:
        log.error("stopping after transport failure: %s", error)
    elif status == "partial":
        log.warning("budget of %d rounds exhausted with %d/%d accepted", budget, counts[ACCEPTED], target)
    manifest = {
        "status": status,
        "target": target,
        "budget": budget,
        "seed": seed,
        "model": client.model_tag,
        "calls": rounds,
        "attempts": attempts,
        "parse_failures": parse_failures,
        "candidates": total,
        "accepted": counts[ACCEPTED],
        "rejected_syntax": counts[REJECTED_SYNTAX],
        "rejected_duplicate": counts[REJECTED_DUPLICATE],
        "acceptance_rate": counts[ACCEPTED] / total if total else 0.0,
        "usage": usage or None,
        "error": str(error) if error is not None else None,
    }
    return SynthesisResult(samples, manifest)


def load_seed_pool(records: Iterable[dict]) -> list[SeedProblem]:
    return [SeedProblem.from_record(r) for r in records]
