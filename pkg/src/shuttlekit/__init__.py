"""Shuttling-schedule toolkit for segmented ion traps.

Model a trap as a graph, compile circuits into validated shuttling
schedules, render them as instruction/output fine-tuning data, and drive a
completion server through a generate-validate-retry loop.
"""

from .circuit import Circuit, Gate, parse_circuit, serialize_circuit
from .errors import ShuttleError
from .ops import ExecuteGate, Merge, Separate, ShuttleOp, Swap, Translate
from .schedule import Schedule, decompose, optimize, parse_schedule, serialize_schedule, validate
from .state import TrapState, initial_placement
from .trap import (
    TrapGraph,
    build_branched,
    build_eval_layout,
    build_linear,
    parse_trap,
    serialize_trap,
)

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "ExecuteGate",
    "Gate",
    "Merge",
    "Schedule",
    "Separate",
    "ShuttleError",
    "ShuttleOp",
    "Swap",
    "Translate",
    "TrapGraph",
    "TrapState",
    "__version__",
    "build_branched",
    "build_eval_layout",
    "build_linear",
    "decompose",
    "initial_placement",
    "optimize",
    "parse_circuit",
    "parse_schedule",
    "parse_trap",
    "serialize_circuit",
    "serialize_schedule",
    "serialize_trap",
    "validate",
]
