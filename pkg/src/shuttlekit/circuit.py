"""Quantum circuits as numbered gate lists with pending-layer queries.

Gate functionality is irrelevant for shuttling, so a circuit reduces to
which qubits each gate touches and the per-qubit order implied by the text:
gates sharing a qubit execute in ascending number, independent gates in any
order. Circuits are immutable; executing a gate yields a new circuit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

from .errors import CircuitError, OrderViolationError

QASM_HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'

_QREG_RE = re.compile(r"^qreg\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")
_GATE_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(\(([^)]*)\))?\s*(.*)$")
_OPERAND_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")

_IGNORED_STATEMENTS = ("OPENQASM", "include", "creg", "barrier", "measure")


@dataclass(frozen=True)
class Gate:
    """One gate: 1-based number, operand qubits in textual order, name."""

    id: int
    qubits: tuple[int, ...]
    name: str = "g"


@dataclass(frozen=True)
class Circuit:
    qubit_count: int
    gates: tuple[Gate, ...]
    executed: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        for expected, gate in enumerate(self.gates, start=1):
            if gate.id != expected:
                raise CircuitError(f"gate {gate.id} out of sequence, expected {expected}")
            if not 1 <= len(gate.qubits) <= 2:
                raise CircuitError(f"gate {gate.id} has {len(gate.qubits)} operands")
            if len(set(gate.qubits)) != len(gate.qubits):
                raise CircuitError(f"gate {gate.id} repeats an operand")
            for q in gate.qubits:
                if not 0 <= q < self.qubit_count:
                    raise CircuitError(f"gate {gate.id} touches unknown qubit {q}")
        unknown = self.executed - {g.id for g in self.gates}
        if unknown:
            raise CircuitError(f"executed set references unknown gates {sorted(unknown)}")

    @cached_property
    def gate_by_id(self) -> dict[int, Gate]:
        return {g.id: g for g in self.gates}

    @cached_property
    def pending(self) -> tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.id not in self.executed)

    @cached_property
    def pending_per_qubit(self) -> dict[int, tuple[int, ...]]:
        lists: dict[int, list[int]] = {q: [] for q in range(self.qubit_count)}
        for gate in self.pending:
            for q in gate.qubits:
                lists[q].append(gate.id)
        return {q: tuple(ids) for q, ids in lists.items()}

    @cached_property
    def first_layer(self) -> tuple[Gate, ...]:
        """Pending gates with no pending predecessor on any operand."""
        per_qubit = self.pending_per_qubit
        return tuple(
            g for g in self.pending
            if all(per_qubit[q][0] == g.id for q in g.qubits)
        )

    @cached_property
    def next_executable(self) -> tuple[Gate, ...]:
        """Deeper gates that enter the first layer once a single gate resolves.

        A gate qualifies when its immediate predecessors across all operands
        collapse to one first-layer gate; executing that gate promotes it.
        """
        first_ids = {g.id for g in self.first_layer}
        per_qubit = self.pending_per_qubit
        out = []
        for gate in self.pending:
            if gate.id in first_ids:
                continue
            preds = set()
            for q in gate.qubits:
                order = per_qubit[q]
                pos = order.index(gate.id)
                if pos:
                    preds.add(order[pos - 1])
            if len(preds) == 1 and next(iter(preds)) in first_ids:
                out.append(gate)
        return tuple(out)

    @property
    def is_complete(self) -> bool:
        return len(self.executed) == len(self.gates)

    def mark_executed(self, gate_id: int) -> Circuit:
        """New circuit with gate_id executed; rejects out-of-order execution."""
        if gate_id not in self.gate_by_id:
            raise CircuitError(f"unknown gate {gate_id}")
        if gate_id in self.executed:
            raise OrderViolationError(f"gate {gate_id} already executed")
        if gate_id not in {g.id for g in self.first_layer}:
            raise OrderViolationError(
                f"gate {gate_id} has pending predecessors and cannot execute"
            )
        return Circuit(self.qubit_count, self.gates, self.executed | {gate_id})


def _statements(text: str):
    """Yield (line_number, statement) pairs, comments stripped."""
    buffer = ""
    start_line = 1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0]
        if not buffer.strip():
            start_line = lineno
        buffer += line
        while ";" in buffer:
            statement, buffer = buffer.split(";", 1)
            if statement.strip():
                yield start_line, statement.strip()
            start_line = lineno
        buffer += " "
    if buffer.strip():
        raise CircuitError(f"line {start_line}: unterminated statement {buffer.strip()!r}")


def parse_circuit(text: str) -> Circuit:
    """Parse the OpenQASM 2.0 subset: one qreg, 1-/2-qubit gates.

    measure, barrier, and creg statements are skipped; gate names are kept
    but their functionality plays no role. Gates are numbered 1..G in
    textual order.
    """
    register: tuple[str, int] | None = None
    gates: list[Gate] = []
    for lineno, statement in _statements(text):
        head = statement.split(None, 1)[0]
        if head in _IGNORED_STATEMENTS:
            continue
        if head == "qreg":
            match = _QREG_RE.match(statement)
            if not match:
                raise CircuitError(f"line {lineno}: malformed qreg {statement!r}")
            if register is not None:
                raise CircuitError(f"line {lineno}: only one qreg is supported")
            register = (match.group(1), int(match.group(2)))
            continue
        match = _GATE_RE.match(statement)
        if not match:
            raise CircuitError(f"line {lineno}: unrecognized statement {statement!r}")
        name, _, _, operand_text = match.groups()
        if register is None:
            raise CircuitError(f"line {lineno}: gate before qreg declaration")
        operands = []
        for chunk in operand_text.split(","):
            chunk = chunk.strip()
            operand = _OPERAND_RE.match(chunk)
            if not operand:
                raise CircuitError(f"line {lineno}: malformed operand {chunk!r}")
            reg_name, index = operand.group(1), int(operand.group(2))
            if reg_name != register[0]:
                raise CircuitError(f"line {lineno}: unknown register {reg_name!r}")
            if index >= register[1]:
                raise CircuitError(
                    f"line {lineno}: qubit {index} outside register of size {register[1]}"
                )
            operands.append(index)
        if not 1 <= len(operands) <= 2:
            raise CircuitError(
                f"line {lineno}: gate {name!r} has {len(operands)} operands, only 1 or 2 supported"
            )
        if len(set(operands)) != len(operands):
            raise CircuitError(f"line {lineno}: gate {name!r} repeats an operand")
        gates.append(Gate(len(gates) + 1, tuple(operands), name))
    if register is None:
        raise CircuitError("no qreg declaration found")
    return Circuit(register[1], tuple(gates))


def serialize_circuit(circuit: Circuit) -> str:
    """Emit the circuit back as OpenQASM text (gate names preserved)."""
    lines = [QASM_HEADER + f"qreg q[{circuit.qubit_count}];"]
    for gate in circuit.gates:
        operands = ",".join(f"q[{q}]" for q in gate.qubits)
        lines.append(f"{gate.name} {operands};")
    return "\n".join(lines) + "\n"
