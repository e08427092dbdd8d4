"""Schedules: placement plus op list, validated by replay.

A schedule is complete when replay executes every gate, ends with no
occupied junction, and contains no shuttling after the final gate. The
optimizer deletes adjacent op pairs that provably return to the state they
started from, junction locks included, so removal can never invalidate a
later op.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ops as op_mod
from .circuit import Circuit
from .errors import (
    IllegalOperationError,
    ScheduleError,
    ScheduleValidationError,
)
from .ops import ExecuteGate, Merge, Separate, ShuttleOp, Swap, Translate
from .state import TrapState
from .trap import TrapGraph


@dataclass(frozen=True)
class Schedule:
    graph: TrapGraph
    circuit: Circuit
    placement: TrapState
    ops: tuple[ShuttleOp, ...]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    failure_index: int | None
    reason: str | None
    gates_executed: int
    final_state: TrapState | None


@dataclass(frozen=True)
class EntrySlice:
    """Ops up to and including one gate execution, with the state they start from."""

    state: TrapState
    circuit: Circuit
    ops: tuple[ShuttleOp, ...]

    @property
    def gate(self) -> int:
        last = self.ops[-1]
        assert isinstance(last, ExecuteGate)
        return last.gate


def step(
    graph: TrapGraph, state: TrapState, circuit: Circuit, op: ShuttleOp
) -> tuple[TrapState, Circuit]:
    """Apply one op to the (state, circuit) pair."""
    state = op_mod.apply(state, graph, circuit, op)
    if isinstance(op, ExecuteGate):
        circuit = circuit.mark_executed(op.gate)
    return state, circuit


def validate(schedule: Schedule) -> ValidationReport:
    """Replay the schedule and report the first violated condition, if any."""
    state = schedule.placement
    circuit = schedule.circuit
    executed = 0
    last_gate_index = -1
    for index, op in enumerate(schedule.ops):
        try:
            state, circuit = step(schedule.graph, state, circuit, op)
        except IllegalOperationError as exc:
            return ValidationReport(False, index, str(exc), executed, None)
        if isinstance(op, ExecuteGate):
            executed += 1
            last_gate_index = index
    if not circuit.is_complete:
        total = len(circuit.gates)
        return ValidationReport(
            False, None, f"unexecuted gates remain ({executed} of {total})", executed, state
        )
    if last_gate_index != len(schedule.ops) - 1:
        return ValidationReport(
            False,
            last_gate_index + 1,
            "trailing operations after the final gate",
            executed,
            state,
        )
    for vertex in state.chains:
        if schedule.graph.is_junction(vertex):
            return ValidationReport(
                False, None, f"junction {vertex} occupied at the end", executed, state
            )
    return ValidationReport(True, None, None, executed, state)


def decompose(schedule: Schedule) -> list[EntrySlice]:
    """Split a valid schedule into per-gate slices; concatenating them restores it."""
    report = validate(schedule)
    if not report.ok:
        raise ScheduleValidationError(report)
    slices: list[EntrySlice] = []
    state = schedule.placement
    circuit = schedule.circuit
    start_state, start_circuit = state, circuit
    pending: list[ShuttleOp] = []
    for op in schedule.ops:
        pending.append(op)
        state, circuit = step(schedule.graph, state, circuit, op)
        if isinstance(op, ExecuteGate):
            slices.append(EntrySlice(start_state, start_circuit, tuple(pending)))
            start_state, start_circuit = state, circuit
            pending = []
    return slices


_PAIR_SHAPES = (
    lambda a, b: isinstance(a, Translate) and isinstance(b, Translate)
    and a.src == b.dst and a.dst == b.src,
    lambda a, b: isinstance(a, Merge) and isinstance(b, Separate) and a.at == b.at,
    lambda a, b: isinstance(a, Separate) and isinstance(b, Merge) and a.at == b.at,
    lambda a, b: isinstance(a, Swap) and isinstance(b, Swap) and a.at == b.at,
)


def _deletable_shape(a: ShuttleOp, b: ShuttleOp) -> bool:
    return any(shape(a, b) for shape in _PAIR_SHAPES)


def optimize(
    ops: list[ShuttleOp] | tuple[ShuttleOp, ...],
    graph: TrapGraph,
    circuit: Circuit,
    state: TrapState,
) -> list[ShuttleOp]:
    """Remove redundant adjacent pairs until none remain.

    Candidate pairs (back-and-forth Translate, Merge;Separate either way
    round, double Swap) are deleted only when replay shows the pair is a
    state identity. Ops are never reordered and Execute Gate lines survive.
    """
    seq = list(ops)
    # states[i] holds the (state, circuit) pair before seq[i].
    states: list[tuple[TrapState, Circuit]] = [(state, circuit)]

    def state_before(index: int) -> tuple[TrapState, Circuit]:
        while len(states) <= index:
            prev_state, prev_circuit = states[-1]
            advanced = step(graph, prev_state, prev_circuit, seq[len(states) - 1])
            states.append(advanced)
        return states[index]

    i = 0
    while i + 1 < len(seq):
        if _deletable_shape(seq[i], seq[i + 1]):
            before_state, before_circuit = state_before(i)
            try:
                mid = step(graph, before_state, before_circuit, seq[i])
                after = step(graph, *mid, seq[i + 1])
            except IllegalOperationError:
                after = None
            if after is not None and after[0] == before_state:
                del seq[i : i + 2]
                del states[i + 1 :]
                i = max(i - 1, 0)
                continue
        i += 1
    return seq


def serialize_schedule(schedule: Schedule, trap_path: str, circuit_path: str) -> str:
    """Schedule file text: trap/circuit references, placement, one op per line."""
    lines = [f"trap {trap_path}", f"circuit {circuit_path}"]
    for qubit in sorted(schedule.placement.qubit_positions):
        pos = schedule.placement.position_of(qubit)
        lines.append(f"placement: qubit {qubit} at [{pos.vertex},{pos.position}]")
    lines.extend(op_mod.format_op(op) for op in schedule.ops)
    return "\n".join(lines) + "\n"


def schedule_paths(text: str) -> tuple[str, str]:
    """The trap and circuit paths named in a schedule file header."""
    trap_path = circuit_path = None
    for line in text.splitlines():
        if line.startswith("trap "):
            trap_path = line[len("trap "):].strip()
        elif line.startswith("circuit "):
            circuit_path = line[len("circuit "):].strip()
        if trap_path and circuit_path:
            return trap_path, circuit_path
    raise ScheduleError("schedule file lacks trap/circuit header lines")


_PLACEMENT_PREFIX = "placement: "


def parse_schedule(
    text: str, graph: TrapGraph, circuit: Circuit, replay: bool = True
) -> Schedule:
    """Parse a schedule file against its trap and circuit.

    Validates by replay unless replay=False; an invalid schedule raises
    ScheduleValidationError carrying the report.
    """
    placement_entries: dict[int, tuple[int, int]] = {}
    parsed_ops: list[ShuttleOp] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("trap ", "circuit ")):
            continue
        if line.startswith(_PLACEMENT_PREFIX):
            entry = line[len(_PLACEMENT_PREFIX):]
            parts = entry.split()
            ok = (
                len(parts) == 4
                and parts[0] == "qubit"
                and parts[2] == "at"
                and parts[3].startswith("[")
                and parts[3].endswith("]")
            )
            if ok:
                try:
                    qubit = int(parts[1])
                    vertex_s, pos_s = parts[3][1:-1].split(",")
                    vertex, position = int(vertex_s), int(pos_s)
                except ValueError:
                    ok = False
            if not ok:
                raise ScheduleError(f"line {lineno}: malformed placement {entry!r}")
            if qubit in placement_entries:
                raise ScheduleError(f"line {lineno}: duplicate placement for qubit {qubit}")
            placement_entries[qubit] = (vertex, position)
            continue
        try:
            parsed_ops.append(op_mod.parse_op(line))
        except ValueError:
            raise ScheduleError(f"line {lineno}: unrecognized line {line!r}") from None

    placement = _placement_from_entries(placement_entries, graph, circuit)
    schedule = Schedule(graph, circuit, placement, tuple(parsed_ops))
    if replay:
        report = validate(schedule)
        if not report.ok:
            raise ScheduleValidationError(report)
    return schedule


def _placement_from_entries(
    entries: dict[int, tuple[int, int]], graph: TrapGraph, circuit: Circuit
) -> TrapState:
    if set(entries) != set(range(circuit.qubit_count)):
        raise ScheduleError(
            f"placement names qubits {sorted(entries)}, circuit has {circuit.qubit_count}"
        )
    by_vertex: dict[int, dict[int, int]] = {}
    for qubit, (vertex, position) in entries.items():
        if vertex not in graph.vertices:
            raise ScheduleError(f"placement references unknown vertex {vertex}")
        if graph.is_junction(vertex):
            raise ScheduleError(f"placement puts qubit {qubit} on junction {vertex}")
        by_vertex.setdefault(vertex, {})
        if position in by_vertex[vertex]:
            raise ScheduleError(f"two qubits at [{vertex},{position}]")
        by_vertex[vertex][position] = qubit
    chains: dict[int, tuple[int, ...]] = {}
    for vertex, slots in by_vertex.items():
        if sorted(slots) != list(range(len(slots))):
            raise ScheduleError(f"chain positions at vertex {vertex} are not contiguous")
        if len(slots) > graph.capacity:
            raise ScheduleError(f"chain at vertex {vertex} exceeds capacity {graph.capacity}")
        chains[vertex] = tuple(slots[p] for p in range(len(slots)))
    return TrapState(chains)
