"""Schedule replay validation, per-gate decomposition, and the peephole pass."""

import random

import pytest

from shuttlekit import baseline, trap
from shuttlekit.baseline import random_circuit
from shuttlekit.circuit import Circuit, Gate
from shuttlekit.errors import ScheduleError, ScheduleValidationError
from shuttlekit.ops import ExecuteGate, Merge, Separate, Swap, Translate
from shuttlekit.schedule import (
    Schedule,
    decompose,
    optimize,
    parse_schedule,
    schedule_paths,
    serialize_schedule,
    step,
    validate,
)
from shuttlekit.state import TrapState


LINEAR1 = trap.build_linear(1)
LINEAR2 = trap.build_linear(2)
BRANCHED = trap.build_branched(1, 1, 1)


def make_schedule(graph, circuit, placement, ops):
    return Schedule(graph, circuit, TrapState(placement), tuple(ops))


def simple_instance():
    circuit = Circuit(2, (Gate(1, (0, 1)),))
    return make_schedule(LINEAR1, circuit, {1: (0, 1)}, [ExecuteGate(1)])


# -- validate -----------------------------------------------------------------


def test_validate_accepts_direct_execution():
    report = validate(simple_instance())
    assert report.ok
    assert report.gates_executed == 1
    assert report.failure_index is None
    assert report.final_state.chains == {1: (0, 1)}


def test_validate_reports_first_illegal_op():
    circuit = Circuit(2, (Gate(1, (0, 1)),))
    sched = make_schedule(
        LINEAR1,
        circuit,
        {1: (0, 1)},
        [Swap(1), Translate(1, 0), Translate(1, 2), ExecuteGate(1)],
    )
    report = validate(sched)
    assert not report.ok
    assert report.failure_index == 2  # vertex 1 emptied by the first translate
    assert "Translate 1 -> 2" in report.reason


def test_validate_flags_missing_gates():
    circuit = Circuit(2, (Gate(1, (0, 1)), Gate(2, (0, 1))))
    sched = make_schedule(LINEAR1, circuit, {1: (0, 1)}, [ExecuteGate(1)])
    report = validate(sched)
    assert not report.ok
    assert report.reason == "unexecuted gates remain (1 of 2)"
    assert report.gates_executed == 1


def test_validate_flags_trailing_ops():
    circuit = Circuit(2, (Gate(1, (0, 1)),))
    sched = make_schedule(
        LINEAR1, circuit, {1: (0, 1)}, [ExecuteGate(1), Translate(1, 0)]
    )
    report = validate(sched)
    assert not report.ok
    assert report.reason == "trailing operations after the final gate"
    assert report.failure_index == 1


def test_validate_trailing_rule_beats_junction_rule():
    # ops after the final gate trip the trailing rule even when they also
    # leave a chain resting on a junction
    circuit = Circuit(1, (Gate(1, (0,)),))
    gate_vertex = next(iter(BRANCHED.gate_vertices))
    assert gate_vertex == 3
    sched = make_schedule(
        BRANCHED,
        circuit,
        {3: (0,)},
        [ExecuteGate(1), Translate(3, 2), Translate(2, 1)],
    )
    report = validate(sched)
    assert not report.ok
    assert report.reason == "trailing operations after the final gate"


def test_validate_flags_junction_occupied_at_end():
    # bystander parked on junction 1 while the only gate executes
    circuit = Circuit(2, (Gate(1, (0,)),))
    sched = make_schedule(BRANCHED, circuit, {3: (0,), 1: (1,)}, [ExecuteGate(1)])
    report = validate(sched)
    assert not report.ok
    assert report.reason == "junction 1 occupied at the end"


# -- decompose ----------------------------------------------------------------


def compiled(qubits, depth, seed, graph=None):
    graph = graph or trap.build_linear(qubits)
    circuit = random_circuit(qubits, depth, seed)
    return baseline.compile(circuit, graph)


def test_decompose_one_slice_per_gate():
    sched = compiled(3, 3, 11)
    slices = decompose(sched)
    assert len(slices) == len(sched.circuit.gates)
    for entry in slices:
        assert isinstance(entry.ops[-1], ExecuteGate)
        assert sum(isinstance(op, ExecuteGate) for op in entry.ops) == 1


def test_decompose_concat_identity():
    for seed in range(6):
        sched = compiled(4, 4, seed)
        slices = decompose(sched)
        rebuilt = tuple(op for entry in slices for op in entry.ops)
        assert rebuilt == sched.ops


def test_decompose_slice_states_chain_together():
    sched = compiled(3, 4, 2)
    slices = decompose(sched)
    state, circuit = sched.placement, sched.circuit
    for entry in slices:
        assert entry.state.chains == state.chains
        assert entry.circuit.executed == circuit.executed
        for op in entry.ops:
            state, circuit = step(sched.graph, state, circuit, op)


def test_decompose_immediate_execute_slice():
    sched = simple_instance()
    slices = decompose(sched)
    assert len(slices) == 1
    assert slices[0].ops == (ExecuteGate(1),)
    assert slices[0].gate == 1


def test_decompose_rejects_invalid_schedule():
    circuit = Circuit(2, (Gate(1, (0, 1)), Gate(2, (0, 1))))
    sched = make_schedule(LINEAR1, circuit, {1: (0, 1)}, [ExecuteGate(1)])
    with pytest.raises(ScheduleValidationError) as exc:
        decompose(sched)
    assert "unexecuted" in str(exc.value)


# -- optimize -----------------------------------------------------------------


def run_optimize(sched):
    return tuple(optimize(sched.ops, sched.graph, sched.circuit, sched.placement))


def test_optimize_removes_back_and_forth():
    circuit = Circuit(2, (Gate(1, (0, 1)),))
    sched = make_schedule(
        LINEAR1, circuit, {1: (0, 1)}, [Translate(1, 0), Translate(0, 1), ExecuteGate(1)]
    )
    assert run_optimize(sched) == (ExecuteGate(1),)


def test_optimize_collapses_pair_stack_to_nothing():
    ops = (Separate(1), Merge(1), Swap(1), Swap(1))
    out = optimize(ops, LINEAR1, Circuit(2, ()), TrapState({1: (0, 1)}))
    assert tuple(out) == ()


def test_optimize_keeps_noncancelling_merge_separate():
    # capacity 3: [a] + [b,c] merge to [a,b,c]; separate puts [a,b] left,
    # which is not the partition we started from, so the pair must stay.
    graph = trap.build_linear(1, capacity=3)
    circuit = Circuit(3, ())
    state = TrapState({0: (0,), 2: (1, 2)})
    ops = (Merge(1), Separate(1))
    assert tuple(optimize(ops, graph, circuit, state)) == ops


def test_optimize_keeps_junction_bounce():
    # translating into a junction and back rewrites the junction lock, so
    # the pair is not state-neutral and must survive
    circuit = Circuit(1, ())
    state = TrapState({2: (0,)})
    ops = (Translate(2, 1), Translate(1, 2))
    assert tuple(optimize(ops, BRANCHED, circuit, state)) == ops
    # even with a pre-existing lock elsewhere the exit rewrites it, so the
    # bounce is never state-neutral
    state2 = TrapState({2: (0,)}, {1: 0})
    assert tuple(optimize(ops, BRANCHED, circuit, state2)) == ops


def test_optimize_is_idempotent_and_never_grows():
    rng = random.Random(5)
    for seed in range(8):
        sched = compiled(rng.randrange(2, 5), 4, seed)
        once = run_optimize(sched)
        assert len(once) <= len(sched.ops)
        twice = tuple(optimize(once, sched.graph, sched.circuit, sched.placement))
        assert twice == once


def test_optimize_preserves_execute_subsequence_and_final_state():
    for seed in range(6):
        sched = compiled(4, 5, seed)
        out = run_optimize(sched)
        gates = [op.gate for op in sched.ops if isinstance(op, ExecuteGate)]
        assert [op.gate for op in out if isinstance(op, ExecuteGate)] == gates
        slim = Schedule(sched.graph, sched.circuit, sched.placement, tuple(out))
        before, after = validate(sched), validate(slim)
        assert after.ok
        assert after.final_state.chains == before.final_state.chains


def inject_pairs(sched, rng):
    """Insert state-neutral adjacent pairs at random legal points."""
    ops = list(sched.ops)
    states = [sched.placement]
    circuit = sched.circuit
    for op in ops:
        state, circuit = step(sched.graph, states[-1], circuit, op)
        states.append(state)
    # circuit references per index are not needed: injected pairs never
    # execute gates, and translate/swap legality is circuit-independent
    spots = []
    for index, state in enumerate(states):
        for vertex, chain in sorted(state.chains.items()):
            if sched.graph.allows(vertex, "swap") and len(chain) >= 2:
                spots.append((index, (Swap(vertex), Swap(vertex))))
            for n in sorted(sched.graph.neighbors(vertex)):
                if state.occupied(n) or sched.graph.is_junction(n):
                    continue
                if sched.graph.is_junction(vertex):
                    continue
                spots.append((index, (Translate(vertex, n), Translate(n, vertex))))
    if not spots:
        return sched, 0
    picks = rng.sample(spots, min(3, len(spots)))
    for index, pair in sorted(picks, key=lambda s: -s[0]):
        ops[index:index] = list(pair)
    injected = Schedule(sched.graph, sched.circuit, sched.placement, tuple(ops))
    assert validate(injected).ok or not sched.ops
    return injected, len(picks)


def test_optimize_removes_injected_redundancy():
    rng = random.Random(99)
    for seed in range(10):
        sched = compiled(rng.randrange(2, 5), 4, seed)
        clean = Schedule(sched.graph, sched.circuit, sched.placement, run_optimize(sched))
        injected, count = inject_pairs(clean, rng)
        if count == 0:
            continue
        out = optimize(injected.ops, sched.graph, sched.circuit, sched.placement)
        assert tuple(out) == clean.ops


# -- files --------------------------------------------------------------------


def test_serialize_parse_round_trip():
    sched = compiled(3, 4, 8)
    text = serialize_schedule(sched, "trap.json", "circ.qasm")
    assert schedule_paths(text) == ("trap.json", "circ.qasm")
    back = parse_schedule(text, sched.graph, sched.circuit)
    assert back.ops == sched.ops
    assert back.placement.chains == sched.placement.chains
    assert serialize_schedule(back, "trap.json", "circ.qasm") == text


def test_parse_schedule_reports_line_numbers():
    sched = simple_instance()
    text = serialize_schedule(sched, "t", "c")
    bad = text.replace("Execute Gate 1", "Teleport 0 -> 2")
    with pytest.raises(ScheduleError, match=r"line \d+"):
        parse_schedule(bad, sched.graph, sched.circuit)


def test_parse_schedule_rejects_duplicate_placement():
    sched = simple_instance()
    text = serialize_schedule(sched, "t", "c")
    lines = text.splitlines()
    placement = [l for l in lines if l.startswith("placement:")][0]
    lines.insert(lines.index(placement), placement)
    with pytest.raises(ScheduleError, match="duplicate placement"):
        parse_schedule("\n".join(lines) + "\n", sched.graph, sched.circuit)


def test_parse_schedule_surfaces_replay_failure():
    sched = simple_instance()
    text = serialize_schedule(sched, "t", "c")
    hacked = text.replace("Execute Gate 1", "Translate 0 -> 2\nExecute Gate 1")
    with pytest.raises(ScheduleValidationError) as exc:
        parse_schedule(hacked, sched.graph, sched.circuit)
    assert exc.value.report.failure_index == 0


def test_parse_schedule_replay_can_be_deferred():
    sched = simple_instance()
    text = serialize_schedule(sched, "t", "c")
    hacked = text.replace("Execute Gate 1", "Translate 0 -> 2\nExecute Gate 1")
    parsed = parse_schedule(hacked, sched.graph, sched.circuit, replay=False)
    assert not validate(parsed).ok


def test_schedule_paths_requires_header():
    with pytest.raises(ScheduleError):
        schedule_paths("placement: qubit 0 at [1,0]\nExecute Gate 1\n")
