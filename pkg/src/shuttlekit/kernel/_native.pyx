# cython: boundscheck=False, wraparound=False
"""Route search over encoded states, compiled backend.

Semantics mirror kernel.pure line for line; differential tests hold the two
backends equal. Typed loop counters and unboxed branch tests carry the
speedup; states stay ordinary tuples so hashing and reconstruction match
the pure backend exactly.
"""

from collections import deque

TRANSLATE, SEPARATE, MERGE, SWAP, EXECUTE = range(5)


def successors(trap, chains, locks):
    """All legal shuttling transitions from a state, in canonical op order."""
    cdef int n = trap[0]
    cdef int capacity = trap[1]
    neighbors = trap[2]
    is_junction = trap[3]
    can_sep = trap[4]
    can_mer = trap[5]
    can_swp = trap[6]
    lat_left = trap[8]
    lat_right = trap[9]
    cdef int src, dst, v, left, right, head
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
        left = lat_left[v]
        right = lat_right[v]
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
        left = lat_left[v]
        right = lat_right[v]
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
    cdef int n = trap[0]
    can_gate = trap[7]
    cdef int v, vertex, first
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
    parents = {start: None}
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
                node = nxt
                while parents[node] is not None:
                    node, op_code = parents[node]
                    path.append(op_code)
                return tuple(reversed(path))
            queue.append(nxt)
    return None
