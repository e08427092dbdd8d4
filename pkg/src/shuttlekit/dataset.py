"""Instruction/output rendering and Alpaca-format dataset assembly.

One data entry covers the ops between two consecutive gate executions: the
instruction describes the trap, the rules, and the current state; the
output lists the ops with a state echo after each one and stops at the
`Execute Gate` line. All echoes are rendered from simulation, never taken
from any external text. Wording lives in a versioned template file so the
golden snapshots survive refactors.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib.resources import files
from string import Template

from . import ops as op_mod
from .circuit import Circuit, Gate
from .errors import OutputParseError, RenderError, ScheduleValidationError
from .ops import ExecuteGate, ShuttleOp
from .schedule import EntrySlice, Schedule, decompose, step
from .state import TrapState, position_lines
from .trap import ELIGIBILITY_FLAGS, TrapGraph, VertexKind

_KIND_LABELS = {
    VertexKind.GATE: "gate segment",
    VertexKind.STORAGE: "storage",
    VertexKind.JUNCTION: "junction",
}


@lru_cache(maxsize=1)
def _template() -> Template:
    text = files("shuttlekit").joinpath("templates/instruction_v1.txt").read_text()
    return Template(text)


def _bullets(lines: list[str]) -> str:
    if not lines:
        return "- none"
    return "\n".join(f"- {line}" for line in lines)


def _vertex_lines(graph: TrapGraph) -> list[str]:
    lines = []
    for vid in graph.vertex_ids:
        vertex = graph.vertices[vid]
        label = _KIND_LABELS[vertex.kind]
        flags = [f for f in ELIGIBILITY_FLAGS if f in vertex.eligibility]
        if flags:
            label += ", allows " + ", ".join(flags)
        lines.append(f"segment {vid}: {label}")
    return lines


def _edge_lines(graph: TrapGraph) -> list[str]:
    return [f"{a} -- {b}" for a, b in sorted(graph.edges)]


def _gate_line(gate: Gate, state: TrapState) -> str:
    spots = []
    for qubit in gate.qubits:
        pos = state.position_of(qubit)
        spots.append(f"qubit {qubit} at [{pos.vertex}, {pos.position}]")
    return f"gate {gate.id}: " + ", ".join(spots)


def render_instruction(graph: TrapGraph, state: TrapState, circuit: Circuit) -> str:
    """Deterministic instruction text for one generation step.

    Contains the trap layout, the operation rules, the goal, and four
    enumerations: qubit positions, first-layer gates, the gates one
    execution away, and the currently allowed operations.
    """
    if state.qubits != frozenset(range(circuit.qubit_count)):
        raise RenderError(
            f"state holds qubits {sorted(state.qubits)}, "
            f"circuit expects 0..{circuit.qubit_count - 1}"
        )
    first_layer = circuit.first_layer
    return _template().substitute(
        capacity=graph.capacity,
        vertex_block=_bullets(_vertex_lines(graph)),
        edge_block=_bullets(_edge_lines(graph)),
        position_block=_bullets(position_lines(state)),
        first_layer_block=_bullets([_gate_line(g, state) for g in first_layer]),
        next_layer_block=_bullets(
            [
                f"gate {g.id} on qubits " + ", ".join(str(q) for q in g.qubits)
                for g in circuit.next_executable
            ]
        ),
        allowed_block=_bullets(
            [op_mod.format_op(op) for op in op_mod.allowed_ops(state, graph, circuit)]
        ),
    )


def render_output(slice: EntrySlice, graph: TrapGraph, circuit: Circuit) -> str:
    """Expected model output for one slice: op lines with per-op state echoes.

    Every op except the final `Execute Gate` is followed by the new qubit
    positions, the first-layer gates, and the operations allowed next.
    circuit must reflect the executions before the slice, i.e. slice.circuit.
    """
    state = slice.state
    current = circuit
    blocks: list[str] = []
    for op in slice.ops:
        state, current = step(graph, state, current, op)
        if isinstance(op, ExecuteGate):
            blocks.append(op_mod.format_op(op))
            break
        lines = [op_mod.format_op(op)]
        lines.append("Qubit positions:")
        lines.append(_bullets(position_lines(state)))
        lines.append("First-layer gates:")
        lines.append(_bullets([_gate_line(g, state) for g in current.first_layer]))
        lines.append("Allowed operations:")
        lines.append(
            _bullets([op_mod.format_op(o) for o in op_mod.allowed_ops(state, graph, current)])
        )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


_THINK_OPEN = re.compile(r"<think\b[^>]*>", re.IGNORECASE)
_THINK_CLOSE = re.compile(r"</think\s*>", re.IGNORECASE)
_OP_SHAPED = re.compile(r"^(Translate|Separate|Merge|Swap|Execute)\b")


def _strip_reasoning(text: str) -> str:
    """Drop <think>...</think> spans; an unclosed tag swallows the rest."""
    out = []
    pos = 0
    while True:
        open_match = _THINK_OPEN.search(text, pos)
        if open_match is None:
            out.append(text[pos:])
            break
        out.append(text[pos : open_match.start()])
        close_match = _THINK_CLOSE.search(text, open_match.end())
        if close_match is None:
            break
        pos = close_match.end()
    return "".join(out)


def parse_output(
    text: str, graph: TrapGraph, state: TrapState, circuit: Circuit
) -> list[ShuttleOp]:
    """Extract the op sequence from model output, hostile input expected.

    Echo blocks and prose are ignored; only column-0 lines that start like
    an operation count, and a malformed one is an error with its line
    number. Everything after the first `Execute Gate` line is dropped.
    Legality is not checked here: callers validate by replaying against
    the graph, state, and circuit this text was generated for.
    """
    del graph, state, circuit
    ops: list[ShuttleOp] = []
    for lineno, raw in enumerate(_strip_reasoning(text).splitlines(), start=1):
        if raw.startswith((" ", "\t", "-")):
            continue
        line = raw.strip()
        if not _OP_SHAPED.match(line):
            continue
        try:
            op = op_mod.parse_op(line)
        except ValueError:
            raise OutputParseError(f"line {lineno}: malformed operation {line!r}") from None
        ops.append(op)
        if isinstance(op, ExecuteGate):
            return ops
    raise OutputParseError("output contains no Execute Gate line")


@dataclass(frozen=True)
class DataEntry:
    instruction: str
    output: str


@dataclass(frozen=True)
class Dataset:
    """Rendered entries plus their train/eval split, assigned per schedule."""

    entries: tuple[DataEntry, ...]
    split: dict[str, tuple[DataEntry, ...]]
    skipped: tuple[str, ...] = ()


def generate_dataset(schedules: list[Schedule], eval_fraction: float) -> Dataset:
    """Render every slice of every valid schedule into one DataEntry.

    The split is assigned per whole schedule, the last round(fraction * n)
    valid schedules becoming evaluation data, so no trap state from an
    evaluation schedule ever appears in training. Invalid schedules are
    skipped and recorded, not fatal.
    """
    if not 0 <= eval_fraction <= 1:
        raise ValueError(f"eval_fraction must be within [0, 1], got {eval_fraction}")
    per_schedule: list[list[DataEntry]] = []
    skipped: list[str] = []
    for index, schedule in enumerate(schedules):
        try:
            slices = decompose(schedule)
        except ScheduleValidationError as exc:
            skipped.append(f"schedule {index}: {exc}")
            continue
        entries = []
        for piece in slices:
            instruction = render_instruction(schedule.graph, piece.state, piece.circuit)
            output = render_output(piece, schedule.graph, piece.circuit)
            entries.append(DataEntry(instruction, output))
        per_schedule.append(entries)
    eval_count = round(eval_fraction * len(per_schedule))
    cut = len(per_schedule) - eval_count
    train = tuple(e for entries in per_schedule[:cut] for e in entries)
    eval_entries = tuple(e for entries in per_schedule[cut:] for e in entries)
    return Dataset(
        entries=train + eval_entries,
        split={"train": train, "eval": eval_entries},
        skipped=tuple(skipped),
    )


def to_jsonl(entries: tuple[DataEntry, ...] | list[DataEntry]) -> str:
    """Alpaca-format lines: instruction, empty input, output."""
    lines = [
        json.dumps(
            {"instruction": e.instruction, "input": "", "output": e.output},
            ensure_ascii=False,
        )
        for e in entries
    ]
    return "\n".join(lines) + ("\n" if lines else "")
