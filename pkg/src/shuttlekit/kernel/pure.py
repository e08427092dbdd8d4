"""Route search over encoded states, pure-Python backend.

Operates on the compact encodings from kernel.encode_*: chains as a
vertex-indexed tuple of qubit tuples, locks as a vertex-indexed tuple with
-1 for unset. Op codes are (kind, a, b) with kinds 0=Translate(src, dst),
1=Separate(v), 2=Merge(v), 3=Swap(v), 4=ExecuteGate(gate). The compiled
backend mirrors this module exactly.
"""

from __future__ import annotations

from collections import deque

TRANSLATE, SEPARATE, MERGE, SWAP, EXECUTE = range(5)


def successors(trap, chains, locks):
    """All legal shuttling transitions from a state, in canonical op order."""
    n, capacity, neighbors, is_junction, can_sep, can_mer, can_swp, _, lat_left, lat_right = trap
    out = []
    for src in range(n):
        if not chains[src]:
            continue
        for dst in neighbors[src]:
            if chains[dst]:
                continue
            if is_junction[dst] and locks[dst] == src:
                continue
            new_chains = list(chains)
            new_chains[dst] = chains[src]
            new_chains[src] = ()
            if is_junction[src]:
                new_locks = list(locks)
                new_locks[src] = dst
                out.append(((TRANSLATE, src, dst), tuple(new_chains), tuple(new_locks)))
            else:
                out.append(((TRANSLATE, src, dst), tuple(new_chains), locks))
    for v in range(n):
        if not can_sep[v] or len(chains[v]) < 2:
            continue
        left, right = lat_left[v], lat_right[v]
        if left < 0 or chains[left] or chains[right]:
            continue
        if is_junction[left] or is_junction[right]:
            continue
        head = (len(chains[v]) + 1) // 2
        new_chains = list(chains)
        new_chains[left] = chains[v][:head]
        new_chains[right] = chains[v][head:]
        new_chains[v] = ()
        out.append(((SEPARATE, v, -1), tuple(new_chains), locks))
    for v in range(n):
        if not can_mer[v] or chains[v]:
            continue
        left, right = lat_left[v], lat_right[v]
        if left < 0 or not chains[left] or not chains[right]:
            continue
        if is_junction[left] or is_junction[right]:
            continue
        if len(chains[left]) + len(chains[right]) > capacity:
            continue
        new_chains = list(chains)
        new_chains[v] = chains[left] + chains[right]
        new_chains[left] = ()
        new_chains[right] = ()
        out.append(((MERGE, v, -1), tuple(new_chains), locks))
    for v in range(n):
        if can_swp[v] and len(chains[v]) >= 2:
            new_chains = list(chains)
            new_chains[v] = chains[v][::-1]
            out.append(((SWAP, v, -1), tuple(new_chains), locks))
    return out


def ready_gates(trap, chains, gates):
    """Gate ids whose operands sit alone together in a gate-capable vertex."""
    n = trap[0]
    can_gate = trap[7]
    out = []
    for gate_id, operands in gates:
        first = operands[0]
        vertex = -1
        for v in range(n):
            if first in chains[v]:
                vertex = v
                break
        if vertex < 0 or not can_gate[vertex]:
            continue
        if len(chains[vertex]) != len(operands):
            continue
        if all(q in chains[vertex] for q in operands):
            out.append(gate_id)
    return out


def shortest_route(trap, chains, locks, gates):
    """Shortest op sequence ending in an ExecuteGate, or None if unreachable.

    Breadth-first over successors; ties resolve by canonical op order, so
    the result is deterministic.
    """
    ready = ready_gates(trap, chains, gates)
    if ready:
        return ((EXECUTE, min(ready), -1),)
    start = (chains, locks)
    parents: dict[tuple, tuple | None] = {start: None}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        for op, next_chains, next_locks in successors(trap, current[0], current[1]):
            nxt = (next_chains, next_locks)
            if nxt in parents:
                continue
            parents[nxt] = (current, op)
            ready = ready_gates(trap, next_chains, gates)
            if ready:
                path = [(EXECUTE, min(ready), -1)]
                node: tuple | None = nxt
                while parents[node] is not None:
                    node, op_code = parents[node]
                    path.append(op_code)
                return tuple(reversed(path))
            queue.append(nxt)
    return None
