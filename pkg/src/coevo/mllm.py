"""Prompt templates, an OpenAI-compatible vision chat client with record/replay
cassettes, reply parsing, and the vision-model reproduction operator."""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import re
import threading
import time
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .evo import OperatorError
from .render import RenderedView

logger = logging.getLogger(__name__)


class Task(str, Enum):
    IM = "im"
    IMMUNIZATION = "immunization"
    DISMANTLING = "dismantling"
    TSP = "tsp"


class Phase(str, Enum):
    INIT = "init"
    CROSSOVER = "crossover"
    MUTATION_REMOVAL = "mutation_removal"
    MUTATION_ADDITION = "mutation_addition"
    MUTATION = "mutation"
    DISMANTLE = "dismantle"


@dataclass(frozen=True)
class PromptTemplate:
    task: Task
    phase: Phase
    context_text: str
    directive_text: str
    slots: tuple[str, ...] = ()

    def fill(self, **params) -> tuple[str, str]:
        missing = [s for s in self.slots if s not in params]
        if missing:
            raise KeyError(f"template {self.task.value}/{self.phase.value} missing slots {missing}")
        return self.context_text.format(**params), self.directive_text.format(**params)


_TSP_CROSSOVER_CONTEXT = (
    "You are given two parent TSP tours, and each tour is shown as a image with numbered nodes. "
    "You are also given their visiting orders as lists of node IDs below.\n\n"
    "Parent A tour: {tour_a}\n\n"
    "Parent B tour: {tour_b}"
)
_TSP_MUTATION_CONTEXT = (
    "You are given a TSP tour: it is shown as a image with node numbers.\n"
    "You are also given its visiting order as a list of node IDs below.\n\n"
    "Current tour: {tour}"
)

TEMPLATES: dict[tuple[Task, Phase], PromptTemplate] = {}


def _register(*templates: PromptTemplate) -> None:
    for t in templates:
        TEMPLATES[(t.task, t.phase)] = t


_register(
    PromptTemplate(
        Task.IM,
        Phase.INIT,
        "You are an expert in network science and will be provided with one network in the form of an image. "
        "Please help me intelligently select nodes as the diffusion seeds in this network to achieve "
        "influence maximization.",
        "Only provide a list of node indices separated by commas.",
    ),
    PromptTemplate(
        Task.IM,
        Phase.CROSSOVER,
        "Examine a network image where seed nodes are distinctly labeled. Carefully analyze the seed nodes "
        "present in each network image and suggest an optimal set of seed nodes that harness the advantages "
        "of both parent networks to maximize influence spread.",
        "Focus on selecting high-degree nodes or nodes in strategic positions that significantly enhance "
        "network connectivity. Provide your answer as a list of node indices, separated by commas.",
    ),
    PromptTemplate(
        Task.IM,
        Phase.MUTATION_REMOVAL,
        "Examine a network image where seed nodes are colored and non-seed nodes are labeled in white. "
        "Identify the current seed node that contributes the least to influence maximization.",
        "Focus on nodes that appear trivial or less connected. Provide the index of this node.",
    ),
    PromptTemplate(
        Task.IM,
        Phase.MUTATION_ADDITION,
        "Examine a network image where seed nodes are colored and non-seed nodes are labeled in white. "
        "Propose a non-seed node that could significantly increase the network's influence spread.",
        "Focus on nodes with higher degrees or strategically critical positions in the network. "
        "Provide the index of this node.",
    ),
    PromptTemplate(
        Task.IMMUNIZATION,
        Phase.CROSSOVER,
        "You are given two parent immunization strategies shown as graphs with highlighted nodes. Each "
        "highlighted node is selected for immunization. Generate a child solution by combining high-impact "
        "nodes from both parents. Prioritize nodes that connect to many non-immunized nodes, i.e., these "
        "create more cut edges, helping to stop virus spread.",
        "Avoid clustering immunized nodes together. Your solution must include the same number of "
        "non-repetitive immunized nodes as the parents. Provide your answer as a list of node indices, "
        "separated by commas.",
    ),
    PromptTemplate(
        Task.IMMUNIZATION,
        Phase.MUTATION_REMOVAL,
        "You are given an immunization solution visualized as a graph with highlighted nodes. To refine the "
        "solution, remove one node that contributes few connections to the rest of the network (i.e., nodes "
        "mostly surrounded by other immunized nodes or on the periphery).",
        "The goal is to improve efficiency: keep only the most impactful nodes for maximizing the number of "
        "cut edges. Provide the index of this node.",
    ),
    PromptTemplate(
        Task.IMMUNIZATION,
        Phase.MUTATION_ADDITION,
        "You are given an immunization solution visualized as a graph with highlighted nodes. Improve the "
        "solution by adding one new node to immunize.",
        "Focus on nodes that, when immunized, will connect to many still-vulnerable nodes and increase the "
        "total number of cut edges. Provide the index of this node.",
    ),
    PromptTemplate(
        Task.DISMANTLING,
        Phase.DISMANTLE,
        "You are an expert in network science and you will be provided with a network in the form of image. "
        "Each node is labeled with its node id in black text. Your task is to help me dismantle this network.",
        "Please tell me which node to remove to most likely collapse this network, i.e., make the largest "
        "connected component as small as possible.",
    ),
    PromptTemplate(
        Task.TSP,
        Phase.CROSSOVER,
        _TSP_CROSSOVER_CONTEXT,
        "Use these to create a new child tour that combines parts from both parents. Try to keep the path "
        "smooth and avoid long jumps. The child tour must visit every node exactly once and return to the "
        "start. Return the complete visiting sequence as an ordered list of node IDs.",
        ("tour_a", "tour_b"),
    ),
    PromptTemplate(
        Task.TSP,
        Phase.MUTATION,
        _TSP_MUTATION_CONTEXT,
        "Make a small change to the tour to try and shorten the overall path. You can swap two nodes, move "
        "one node to a different place, or reverse a small segment. The new tour must still visit every node "
        "once and return to the start. Return the complete visiting sequence as an ordered list of node IDs.",
        ("tour",),
    ),
)

# appended to set-valued init directives so the reply size is pinned
INIT_SIZE_HINT = "Select exactly {k} nodes."


def get_template(task: Task | str, phase: Phase | str) -> PromptTemplate:
    key = (Task(task), Phase(phase))
    if key not in TEMPLATES:
        raise KeyError(f"no prompt template for task={key[0].value} phase={key[1].value}")
    return TEMPLATES[key]


def image_part(view: RenderedView) -> dict:
    data = base64.b64encode(view.png).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{data}"}}


def _tour_text(tour: Sequence[int]) -> str:
    return ", ".join(str(v) for v in tour)


def build_prompt(template: PromptTemplate, images: Sequence[RenderedView] = (), **params) -> list[dict]:
    """System message carries the context text; the user message carries the
    directive followed by the images in the given order."""
    for slot in ("tour", "tour_a", "tour_b"):
        if slot in params and not isinstance(params[slot], str):
            params[slot] = _tour_text(params[slot])
    context, directive = template.fill(**params)
    if template.phase is Phase.INIT and "k" in params:
        directive = f"{directive} {INIT_SIZE_HINT.format(k=params['k'])}"
    if not context.strip() or not directive.strip():
        raise ValueError("rendered prompt is empty")
    content = [{"type": "text", "text": directive}] + [image_part(v) for v in images]
    return [{"role": "system", "content": context}, {"role": "user", "content": content}]


# reply parsing

_RUN = re.compile(r"-?\d+(?:(?:\s*,\s*|\s+and\s+|\s+)-?\d+)*")
_INT = re.compile(r"-?\d+")


class ParseError(OperatorError):
    pass


def parse_node_list(text: str) -> list[int]:
    """The last run of integers separated by commas, whitespace or 'and'."""
    runs = _RUN.findall(text or "")
    if not runs:
        raise ParseError(f"no node indices in reply {text!r:.80}")
    return [int(x) for x in _INT.findall(runs[-1])]


def parse_single_node(text: str) -> int:
    ints = _INT.findall(text or "")
    if not ints:
        raise ParseError(f"no node index in reply {text!r:.80}")
    return int(ints[-1])


# transport


class VisionAPIError(RuntimeError):
    pass


class AuthError(VisionAPIError):
    pass


class MalformedResponseError(VisionAPIError):
    pass


class CassetteMiss(VisionAPIError):
    pass


@dataclass(frozen=True)
class ModelEndpoint:
    base_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-4o-2024-11-20"
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    parallel_call_limit: int = 4
    backoff_base: float = 1.0
    backoff_cap: float = 30.0
    temperature: float | None = None

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.parallel_call_limit < 1:
            raise ValueError("parallel_call_limit must be >= 1")

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise AuthError(f"environment variable {self.api_key_env} is not set")
        return key


@dataclass(frozen=True)
class CallRecord:
    request_hash: str
    attempt: int
    status: int | None
    latency_s: float
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    error: str | None = None
    source: str = "live"


def request_body(endpoint: ModelEndpoint, messages: list[dict]) -> dict:
    body = {"model": endpoint.model_name, "messages": messages}
    if endpoint.temperature is not None:
        body["temperature"] = endpoint.temperature
    return body


def request_hash(body: dict) -> str:
    return hashlib.sha256(json.dumps(body, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


class Cassette:
    """JSON-lines store of replies keyed by (request hash, occurrence index)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._replies: dict[tuple[str, int], str] = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    rec = json.loads(line)
                    self._replies[(rec["hash"], rec["occurrence"])] = rec["reply"]

    def get(self, h: str, occurrence: int) -> str | None:
        return self._replies.get((h, occurrence))

    def put(self, h: str, occurrence: int, reply: str) -> None:
        self._replies[(h, occurrence)] = reply
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a") as fh:
            fh.write(json.dumps({"hash": h, "occurrence": occurrence, "reply": reply}) + "\n")

    def __len__(self) -> int:
        return len(self._replies)


_RETRYABLE = {408, 409, 429, 500, 502, 503, 504}


class VisionClient:
    """Thread-safe chat-completions client.

    ``mode`` is ``live`` (network only), ``record`` (network, replies appended
    to the cassette) or ``replay`` (cassette only, misses raise).
    """

    def __init__(
        self,
        endpoint: ModelEndpoint | None = None,
        cassette: Cassette | str | Path | None = None,
        mode: str = "live",
        http: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown client mode {mode!r}")
        if mode != "live" and cassette is None:
            raise ValueError(f"mode {mode!r} needs a cassette")
        self.endpoint = endpoint or ModelEndpoint()
        self.cassette = cassette if isinstance(cassette, Cassette) or cassette is None else Cassette(cassette)
        self.mode = mode
        self._http = http
        self._sleep = sleep
        self._sem = threading.Semaphore(self.endpoint.parallel_call_limit)
        self._lock = threading.Lock()
        self._seen: dict[str, int] = defaultdict(int)
        self.calls: list[CallRecord] = []

    def _client(self) -> httpx.Client:
        if self._http is None:
            self._http = httpx.Client(timeout=self.endpoint.timeout)
        return self._http

    def _log(self, rec: CallRecord) -> None:
        with self._lock:
            self.calls.append(rec)

    def call_vision(self, messages: list[dict]) -> str:
        body = request_body(self.endpoint, messages)
        h = request_hash(body)
        with self._lock:
            occurrence = self._seen[h]
            self._seen[h] += 1
        if self.mode == "replay":
            reply = self.cassette.get(h, occurrence)
            if reply is None:
                raise CassetteMiss(f"no cassette entry for request {h[:12]} occurrence {occurrence}")
            self._log(CallRecord(h, 0, None, 0.0, source="replay"))
            return reply
        with self._sem:
            reply = self._post(body, h)
        if self.mode == "record":
            with self._lock:
                self.cassette.put(h, occurrence, reply)
        return reply

    def _post(self, body: dict, h: str) -> str:
        ep = self.endpoint
        headers = {"Authorization": f"Bearer {ep.api_key()}", "Content-Type": "application/json"}
        url = ep.base_url.rstrip("/") + "/chat/completions"
        last: Exception | None = None
        for attempt in range(ep.max_retries + 1):
            t0 = time.perf_counter()
            try:
                resp = self._client().post(url, json=body, headers=headers, timeout=ep.timeout)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                self._log(CallRecord(h, attempt, None, time.perf_counter() - t0, error=type(exc).__name__))
                last = exc
            else:
                latency = time.perf_counter() - t0
                if resp.status_code in (401, 403):
                    self._log(CallRecord(h, attempt, resp.status_code, latency, error="auth"))
                    raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
                if resp.status_code in _RETRYABLE:
                    self._log(CallRecord(h, attempt, resp.status_code, latency, error="transient"))
                    last = VisionAPIError(f"HTTP {resp.status_code}")
                elif resp.status_code >= 400:
                    self._log(CallRecord(h, attempt, resp.status_code, latency, error="client"))
                    raise VisionAPIError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                else:
                    text, usage = _extract_reply(resp)
                    self._log(
                        CallRecord(h, attempt, resp.status_code, latency, usage.get("prompt_tokens"),
                                   usage.get("completion_tokens"))
                    )
                    return text
            if attempt < ep.max_retries:
                self._sleep(min(ep.backoff_cap, ep.backoff_base * 2**attempt))
        raise VisionAPIError(f"request failed after {ep.max_retries + 1} attempts: {last}")

    def close(self) -> None:
        if self._http is not None:
            self._http.close()


def _extract_reply(resp: httpx.Response) -> tuple[str, dict]:
    try:
        data = resp.json()
        text = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(f"unexpected response body: {resp.text[:200]}") from exc
    if isinstance(text, list):
        text = "".join(part.get("text", "") for part in text if isinstance(part, dict))
    if not isinstance(text, str):
        raise MalformedResponseError("reply content is not text")
    return text, data.get("usage") or {}


# operator


@dataclass
class MLLMOperator:
    """Reproduction operator backed by a vision chat model.

    Unparseable replies are re-asked up to ``parse_retries`` times before an
    :class:`OperatorError` propagates to the ensemble fallback.
    """

    client: VisionClient
    task: Task = Task.IM
    parse_retries: int = 1
    replies: list[str] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.task = Task(self.task)

    def _ask(self, phase: Phase, images, parse, **params):
        try:
            template = get_template(self.task, phase)
        except KeyError as exc:
            raise OperatorError(str(exc)) from exc
        messages = build_prompt(template, images, **params)
        last: Exception | None = None
        for _ in range(self.parse_retries + 1):
            try:
                reply = self.client.call_vision(messages)
            except VisionAPIError as exc:
                raise OperatorError(str(exc)) from exc
            self.replies.append(reply)
            try:
                return parse(reply)
            except ParseError as exc:
                last = exc
        raise OperatorError(f"unparseable reply for {self.task.value}/{phase.value}: {last}")

    def propose_init(self, view: RenderedView, n: int, k: int) -> list[list[int]]:
        return [self._ask(Phase.INIT, [view], parse_node_list, k=k) for _ in range(n)]

    def propose_crossover(self, view_a: RenderedView, view_b: RenderedView, k: int) -> list[int]:
        return self._ask(Phase.CROSSOVER, [view_a, view_b], parse_node_list)

    def propose_mutation_removal(self, view: RenderedView) -> int:
        return self._ask(Phase.MUTATION_REMOVAL, [view], parse_single_node)

    def propose_mutation_addition(self, view: RenderedView) -> int:
        return self._ask(Phase.MUTATION_ADDITION, [view], parse_single_node)

    def propose_dismantle(self, view: RenderedView) -> int:
        return self._ask(Phase.DISMANTLE, [view], parse_single_node)

    def propose_tsp_crossover(self, view_a, view_b, tour_a: Sequence[int], tour_b: Sequence[int]) -> list[int]:
        return self._ask(Phase.CROSSOVER, [view_a, view_b], parse_node_list, tour_a=tour_a, tour_b=tour_b)

    def propose_tsp_mutation(self, view: RenderedView, tour: Sequence[int]) -> list[int]:
        return self._ask(Phase.MUTATION, [view], parse_node_list, tour=tour)
