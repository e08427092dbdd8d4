"""Trap state values, qubit positions, and the initial placement heuristic."""

import pytest

from shuttlekit import trap
from shuttlekit.circuit import Circuit, Gate
from shuttlekit.errors import PlacementError
from shuttlekit.state import TrapState, initial_placement, position_lines


def test_state_rejects_empty_chain():
    with pytest.raises(ValueError):
        TrapState({3: ()})


def test_state_rejects_duplicate_qubit():
    state = TrapState({0: (1,), 2: (1,)})
    with pytest.raises(ValueError):
        state.qubit_positions  # noqa: B018  - the cached property validates


def test_chain_lookup_and_occupancy():
    state = TrapState({4: (0, 2)})
    assert state.chain_at(4) == (0, 2)
    assert state.chain_at(5) == ()
    assert state.occupied(4)
    assert not state.occupied(5)
    assert state.qubits == frozenset({0, 2})


def test_position_of_reads_chain_index():
    state = TrapState({1: (0, 1), 7: (3,)})
    assert (state.position_of(0).vertex, state.position_of(0).position) == (1, 0)
    assert (state.position_of(1).vertex, state.position_of(1).position) == (1, 1)
    assert (state.position_of(3).vertex, state.position_of(3).position) == (7, 0)
    with pytest.raises(KeyError):
        state.position_of(9)


def test_digest_distinguishes_lock_history():
    a = TrapState({2: (0,)}, {1: 0})
    b = TrapState({2: (0,)}, {1: 2})
    c = TrapState({2: (0,)}, {1: 0})
    assert a.digest() != b.digest()
    assert a.digest() == c.digest()


def test_position_lines_format():
    state = TrapState({1: (1, 0), 5: (2,)})
    assert position_lines(state) == [
        "qubit 0 at [1, 1]",
        "qubit 1 at [1, 0]",
        "qubit 2 at [5, 0]",
    ]


# -- initial placement ------------------------------------------------------


def test_two_qubit_circuit_starts_in_gate_segment():
    circuit = Circuit(2, (Gate(1, (0, 1)),))
    placement = initial_placement(circuit, trap.build_linear(1))
    assert placement.chains == {1: (0, 1)}
    assert placement.junction_locks == {}


def test_single_qubit_starts_in_gate_segment():
    circuit = Circuit(1, (Gate(1, (0,)),))
    placement = initial_placement(circuit, trap.build_linear(1))
    assert placement.chains == {1: (0,)}


def test_first_two_qubit_gate_operands_take_the_gate_segment():
    # First gate is on (q2, q3); the heuristic seeds them in operand order
    # and pairs the leftover gate-2 partners in the nearest storage. Frozen.
    circuit = Circuit(4, (Gate(1, (2, 3)), Gate(2, (0, 1)), Gate(3, (1, 2))))
    placement = initial_placement(circuit, trap.build_linear(4))
    assert dict(sorted(placement.chains.items())) == {3: (0, 1), 4: (2, 3)}


def test_placement_is_deterministic():
    circuit = Circuit(5, (Gate(1, (4, 0)), Gate(2, (1, 3)), Gate(3, (2, 4))))
    graph = trap.build_branched(5, 2, 3)
    first = initial_placement(circuit, graph)
    second = initial_placement(circuit, graph)
    assert first.chains == second.chains
    assert not any(graph.is_junction(v) for v in first.chains)


def test_placement_spreads_over_storage_by_distance():
    circuit = Circuit(6, tuple(Gate(i + 1, (i % 6,)) for i in range(6)))
    graph = trap.build_linear(6)
    placement = initial_placement(circuit, graph)
    assert set(placement.qubit_positions) == set(range(6))
    for vertex, chain in placement.chains.items():
        assert len(chain) <= graph.capacity
        assert not graph.is_junction(vertex)


def test_placement_overflow_is_an_error():
    # linear(1) holds at most 3 segments x capacity 2 = 6 qubits, junctions
    # aside; 7 qubits cannot fit.
    gates = tuple(Gate(i + 1, (i,)) for i in range(7))
    with pytest.raises(PlacementError):
        initial_placement(Circuit(7, gates), trap.build_linear(1))
