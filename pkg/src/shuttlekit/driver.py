"""Generate–validate–retry loop against a completion server, plus clients.

One schedule is built gate by gate: render the instruction for the current
state, request exactly one completion, parse and replay it, and either
apply the slice or resubmit the identical instruction. Clients share one
small interface so the loop runs unchanged against HTTP, a scripted mock,
or a recorded replay file.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import requests

from .circuit import Circuit
from .dataset import parse_output, render_instruction
from .errors import (
    IllegalOperationError,
    OrderViolationError,
    OutputParseError,
    PlacementError,
    TransportError,
)
from .schedule import Schedule, optimize, step
from .state import initial_placement
from .trap import TrapGraph

DEFAULT_MAX_TOKENS = 29_000
DEFAULT_MAX_CONSECUTIVE_INVALID = 10
DEFAULT_BUDGET_SECONDS = 8 * 3600.0


@dataclass(frozen=True)
class CompletionResult:
    text: str
    token_count: int


class CompletionClient(Protocol):
    def complete(self, instruction: str, max_tokens: int, temperature: float) -> CompletionResult:
        ...


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    max_tokens: int = DEFAULT_MAX_TOKENS
    max_consecutive_invalid: int = DEFAULT_MAX_CONSECUTIVE_INVALID
    budget_seconds: float = DEFAULT_BUDGET_SECONDS


@dataclass(frozen=True)
class GenerationStats:
    """Accounting for one generation run.

    tokens_final counts only accepted outputs; tokens_total counts every
    attempt, so tokens_total - tokens_final is the retry overhead.
    """

    outcome: str  # "complete" or "failed"
    gates_executed: int
    ops_count: int
    retries: int
    tokens_final: int
    tokens_total: int
    wall_seconds: float
    failure_reason: str | None = None


def request_digest(instruction: str, max_tokens: int, temperature: float) -> str:
    """Stable key for record/replay matching; model name deliberately excluded."""
    payload = f"{temperature:.6f}|{max_tokens}|{instruction}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def http_complete(
    endpoint: str,
    model: str,
    instruction: str,
    max_tokens: int,
    temperature: float,
    timeout: float = 600.0,
) -> CompletionResult:
    """One completion request against an OpenAI-compatible endpoint.

    Reads choices[0].text (or .message.content) and the server-reported
    usage.completion_tokens, estimating by whitespace split when the server
    omits usage.
    """
    payload = {
        "model": model,
        "prompt": instruction,
        "max_tokens": max_tokens,
        "temperature": temperature,
    }
    try:
        response = requests.post(endpoint, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"request failed: {exc}") from exc
    if response.status_code != 200:
        raise TransportError(f"endpoint returned status {response.status_code}")
    try:
        body = response.json()
    except ValueError as exc:
        raise TransportError("endpoint response is not JSON") from exc
    try:
        choice = body["choices"][0]
    except (KeyError, IndexError, TypeError) as exc:
        raise TransportError("endpoint response has no choices") from exc
    text = choice.get("text")
    if text is None:
        text = choice.get("message", {}).get("content")
    if not isinstance(text, str):
        raise TransportError("endpoint response carries no completion text")
    usage = body.get("usage") or {}
    tokens = usage.get("completion_tokens")
    if not isinstance(tokens, int):
        tokens = len(text.split())
    return CompletionResult(text, tokens)


@dataclass
class HttpCompletionClient:
    endpoint: str
    model: str
    timeout: float = 600.0

    def complete(self, instruction: str, max_tokens: int, temperature: float) -> CompletionResult:
        return http_complete(
            self.endpoint, self.model, instruction, max_tokens, temperature, self.timeout
        )


class MockCompletionClient:
    """Scripted client: returns canned responses in order; reset() rewinds.

    Token counts default to the whitespace estimate so scripts stay terse.
    """

    def __init__(
        self, script: Sequence[str], token_counts: Sequence[int] | None = None
    ) -> None:
        self.script = list(script)
        if token_counts is not None and len(token_counts) != len(self.script):
            raise ValueError("token_counts must match the script length")
        self.token_counts = list(token_counts) if token_counts is not None else None
        self.cursor = 0
        self.calls: list[str] = []

    def reset(self) -> None:
        self.cursor = 0
        self.calls = []

    def complete(self, instruction: str, max_tokens: int, temperature: float) -> CompletionResult:
        if self.cursor >= len(self.script):
            raise TransportError("mock script exhausted")
        text = self.script[self.cursor]
        tokens = (
            self.token_counts[self.cursor]
            if self.token_counts is not None
            else len(text.split())
        )
        self.cursor += 1
        self.calls.append(instruction)
        return CompletionResult(text, tokens)


class RecordingClient:
    """Pass-through wrapper appending every exchange to a JSONL file."""

    def __init__(self, inner: CompletionClient, path: str) -> None:
        self.inner = inner
        self.path = path

    def reset(self) -> None:
        reset = getattr(self.inner, "reset", None)
        if reset is not None:
            reset()

    def complete(self, instruction: str, max_tokens: int, temperature: float) -> CompletionResult:
        result = self.inner.complete(instruction, max_tokens, temperature)
        record = {
            "digest": request_digest(instruction, max_tokens, temperature),
            "text": result.text,
            "token_count": result.token_count,
        }
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
        return result


class ReplayCompletionClient:
    """Replays a recorded exchange file in order, verifying request digests."""

    def __init__(self, path: str) -> None:
        self.records = []
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise TransportError(f"replay file line {lineno}: {exc}") from exc
                self.records.append(record)
        self.cursor = 0

    def reset(self) -> None:
        self.cursor = 0

    def complete(self, instruction: str, max_tokens: int, temperature: float) -> CompletionResult:
        if self.cursor >= len(self.records):
            raise TransportError("replay file exhausted")
        record = self.records[self.cursor]
        expected = request_digest(instruction, max_tokens, temperature)
        if record.get("digest") != expected:
            raise TransportError(
                f"replay mismatch at record {self.cursor}: request digest differs"
            )
        self.cursor += 1
        return CompletionResult(record["text"], int(record["token_count"]))


def generate_schedule(
    circuit: Circuit,
    graph: TrapGraph,
    client: CompletionClient,
    params: GenerationParams = GenerationParams(),
    clock: Callable[[], float] = time.monotonic,
) -> tuple[Schedule, GenerationStats]:
    """Build a schedule one gate execution at a time via the client.

    Each step submits one instruction and accepts the response only if it
    parses, replays cleanly from the current state, and executes a
    first-layer gate; accepted slices are peephole-optimized before being
    applied. Invalid responses resubmit the identical instruction, and ten
    consecutive invalid responses (or the time budget) abort the run with
    a partial schedule.
    """
    placement = initial_placement(circuit, graph)
    state = placement
    current = circuit
    all_ops = []
    retries = tokens_final = tokens_total = 0
    consecutive = 0
    outcome, reason = "complete", None
    start = clock()
    while not current.is_complete:
        if clock() - start > params.budget_seconds:
            outcome, reason = "failed", "time budget exhausted"
            break
        instruction = render_instruction(graph, state, current)
        try:
            result = client.complete(instruction, params.max_tokens, params.temperature)
        except TransportError as exc:
            retries += 1
            consecutive += 1
            if consecutive >= params.max_consecutive_invalid:
                outcome, reason = "failed", f"transport: {exc}"
                break
            continue
        tokens_total += result.token_count
        try:
            ops = parse_output(result.text, graph, state, current)
            trial_state, trial_circuit = state, current
            for op in ops:
                trial_state, trial_circuit = step(graph, trial_state, trial_circuit, op)
        except (OutputParseError, IllegalOperationError, OrderViolationError):
            retries += 1
            consecutive += 1
            if consecutive >= params.max_consecutive_invalid:
                outcome, reason = (
                    "failed",
                    f"{consecutive} consecutive invalid outputs for one instruction",
                )
                break
            continue
        # Replay was clean and parse_output guarantees a final ExecuteGate,
        # so at least one first-layer gate was executed. Trim redundant
        # shuttles before committing the slice.
        slice_ops = optimize(ops, graph, current, state)
        for op in slice_ops:
            state, current = step(graph, state, current, op)
        all_ops.extend(slice_ops)
        tokens_final += result.token_count
        consecutive = 0
    executed = len(circuit.gates) - len(current.pending)
    stats = GenerationStats(
        outcome=outcome,
        gates_executed=executed,
        ops_count=len(all_ops),
        retries=retries,
        tokens_final=tokens_final,
        tokens_total=tokens_total,
        wall_seconds=clock() - start,
        failure_reason=reason,
    )
    return Schedule(graph, circuit, placement, tuple(all_ops)), stats


def run_benchmark(
    circuits: Sequence[tuple[str, Circuit]],
    graphs: Sequence[tuple[str, TrapGraph]],
    client: CompletionClient,
    runs: int,
    params: GenerationParams = GenerationParams(),
    clock: Callable[[], float] = time.monotonic,
) -> list[dict]:
    """Best-of-n generation for every (circuit, trap) cell.

    Clients exposing reset() are rewound before each run so scripted and
    replay clients repeat deterministically. A cell with no complete run
    reports "failed (n)" where n is the most gates any run executed.
    """
    rows: list[dict] = []
    for circuit_label, circuit in circuits:
        for graph_label, graph in graphs:
            results: list[GenerationStats] = []
            for _ in range(runs):
                reset = getattr(client, "reset", None)
                if reset is not None:
                    reset()
                try:
                    _, stats = generate_schedule(circuit, graph, client, params, clock)
                except PlacementError as exc:
                    stats = GenerationStats(
                        outcome="failed",
                        gates_executed=0,
                        ops_count=0,
                        retries=0,
                        tokens_final=0,
                        tokens_total=0,
                        wall_seconds=0.0,
                        failure_reason=str(exc),
                    )
                results.append(stats)
            complete = [s for s in results if s.outcome == "complete"]
            if complete:
                best = min(complete, key=lambda s: s.ops_count)
                result_text = str(best.ops_count)
            else:
                best = max(results, key=lambda s: s.gates_executed)
                result_text = f"failed ({best.gates_executed})"
            rows.append(
                {
                    "circuit": circuit_label,
                    "trap": graph_label,
                    "temperature": params.temperature,
                    "runs": runs,
                    "completed": len(complete),
                    "result": result_text,
                    "ops": best.ops_count,
                    "gates_executed": best.gates_executed,
                    "retries": best.retries,
                    "tokens_final": best.tokens_final,
                    "tokens_total": best.tokens_total,
                }
            )
    return rows


def format_benchmark_rows(rows: Sequence[dict]) -> str:
    """Aligned text table over the benchmark row dicts."""
    if not rows:
        return "(no rows)\n"
    columns = list(rows[0])
    widths = {
        c: max(len(c), *(len(str(row.get(c, ""))) for row in rows)) for c in columns
    }
    header = "  ".join(c.ljust(widths[c]) for c in columns)
    ruler = "  ".join("-" * widths[c] for c in columns)
    lines = [header, ruler]
    for row in rows:
        lines.append("  ".join(str(row.get(c, "")).ljust(widths[c]) for c in columns))
    return "\n".join(lines) + "\n"
