"""State transition graph enumeration and safety classification.

The STG is explicit: ``edges[s][i]`` holds the unique successor of state
``s`` under input vector ``i`` for every ``s in 0..2^n-1`` and
``i in 0..2^m-1``.  Capacity caps keep the tables in memory.

States are classified against a legal set (forward closure from reset
unless overridden):

LEGAL          in the legal set
RECOVERABLE    illegal, and every input sequence re-enters the legal set
CONDITIONAL    illegal; some input sequences recover, others avoid the
               legal set forever
IRRECOVERABLE  illegal with no path to the legal set at all
DEADLOCK       illegal and every input is a self-loop

Recovery is adversarial: RECOVERABLE promises return for all input
sequences, so a single trapping input sequence demotes a state to
CONDITIONAL.  recovery depth min/max count cycles until the first legal
state (max is None for CONDITIONAL, both are None for IRRECOVERABLE and
DEADLOCK).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .errors import CapacityExceededError, LegalSetMissingError, LegalSetNotClosedError
from .extraction import FsmCandidate, strongly_connected_components


class StateClass(IntEnum):
    LEGAL = 0
    RECOVERABLE = 1
    CONDITIONAL = 2
    IRRECOVERABLE = 3
    DEADLOCK = 4

    @property
    def key(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class IllegalLoop:
    """A simple cycle of illegal states, starting at its lowest member.

    kind is "trap" when the members cannot reach the legal set
    (IRRECOVERABLE/DEADLOCK) and "recoverable-adjacent" when they can
    (CONDITIONAL members).
    """

    states: tuple
    kind: str


@dataclass(frozen=True)
class Stg:
    """Explicit state transition graph.  Immutable; stages return copies.

    edges is a (2^n, 2^m) array of successor states.  legal/classes are
    None until compute_legal_set/classify_states fill them in.
    """

    n: int
    m: int
    edges: np.ndarray
    reset_states: frozenset
    candidate: FsmCandidate | None = None
    legal: frozenset | None = None
    classes: np.ndarray | None = field(default=None, compare=False)
    _rec_min: np.ndarray | None = field(default=None, repr=False, compare=False)
    _rec_max: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def num_states(self) -> int:
        return 1 << self.n

    @property
    def num_inputs(self) -> int:
        return 1 << self.m

    def legal_mask(self) -> np.ndarray:
        if self.legal is None:
            raise LegalSetMissingError("legal set not computed")
        mask = np.zeros(self.num_states, dtype=bool)
        mask[list(self.legal)] = True
        return mask

    def class_of(self, state: int) -> StateClass:
        if self.classes is None:
            raise LegalSetMissingError("classification not computed")
        return StateClass(int(self.classes[state]))

    def recovery_depth(self, state: int):
        """(min, max) cycles to re-enter legal for an illegal state.

        None entries mean infinity.  Returns None for legal states.
        """
        if self.classes is None:
            raise LegalSetMissingError("classification not computed")
        if self.class_of(state) is StateClass.LEGAL:
            return None
        lo = int(self._rec_min[state])
        hi = int(self._rec_max[state])
        return (lo if lo >= 0 else None, hi if hi >= 0 else None)

    def counts(self) -> dict:
        if self.classes is None:
            raise LegalSetMissingError("classification not computed")
        return {
            cls.key: int((self.classes == cls).sum())
            for cls in StateClass
        }

    def worst_recovery_depth(self):
        """Largest max recovery depth over RECOVERABLE states, None if none."""
        if self.classes is None:
            raise LegalSetMissingError("classification not computed")
        rec = self.classes == StateClass.RECOVERABLE
        if not rec.any():
            return None
        return int(self._rec_max[rec].max())


def enumerate_stg(
    candidate: FsmCandidate,
    max_state_bits: int = 20,
    max_total_bits: int = 26,
) -> Stg:
    """Evaluate the next-state cone on every (state, input) assignment.

    Raises CapacityExceededError when n > max_state_bits or
    n + m > max_total_bits.
    """
    n, m = candidate.n, candidate.m
    if n > max_state_bits or n + m > max_total_bits:
        raise CapacityExceededError(
            f"candidate has n={n}, m={m}; caps are n <= {max_state_bits}, "
            f"n + m <= {max_total_bits}"
        )
    num_states = 1 << n
    num_inputs = 1 << m
    total = num_states * num_inputs
    edges = np.empty((num_states, num_inputs), dtype=np.uint32)
    chunk = min(total, 1 << 18)
    for base in range(0, total, chunk):
        idx = np.arange(base, min(base + chunk, total), dtype=np.uint64)
        states = (idx & np.uint64(num_states - 1)).astype(np.uint32)
        inputs = (idx >> np.uint64(n)).astype(np.uint32)
        edges[states, inputs] = candidate.eval_next_many(states, inputs)
    return Stg(
        n=n,
        m=m,
        edges=edges,
        reset_states=frozenset({candidate.reset_value()}),
        candidate=candidate,
    )


def stg_from_edges(edges, reset_states, candidate=None) -> Stg:
    """Build an Stg directly from a successor table (for hand-built graphs)."""
    edges = np.asarray(edges, dtype=np.uint32)
    num_states, num_inputs = edges.shape
    n = int(num_states - 1).bit_length()
    m = int(num_inputs - 1).bit_length()
    if 1 << n != num_states or 1 << m != num_inputs:
        raise ValueError("edge table dimensions must be powers of two")
    if edges.size and int(edges.max()) >= num_states:
        raise ValueError("successor out of range")
    return Stg(n=n, m=m, edges=edges, reset_states=frozenset(reset_states), candidate=candidate)


def compute_legal_set(stg: Stg, reset_states=None) -> Stg:
    """Attach the legal set: forward closure of the reset states.

    reset_states overrides the candidate reset (e.g. CLI --reset).
    """
    resets = frozenset(reset_states) if reset_states is not None else stg.reset_states
    if not resets:
        raise ValueError("no reset states")
    for s in resets:
        if not 0 <= s < stg.num_states:
            raise ValueError(f"reset state {s} out of range for n={stg.n}")
    mask = np.zeros(stg.num_states, dtype=bool)
    frontier = np.array(sorted(resets), dtype=np.uint32)
    mask[frontier] = True
    while frontier.size:
        succ = np.unique(stg.edges[frontier].ravel())
        new = succ[~mask[succ]]
        mask[new] = True
        frontier = new
    legal = frozenset(int(s) for s in np.flatnonzero(mask))
    return replace(stg, reset_states=resets, legal=legal)


def set_legal_override(stg: Stg, legal) -> Stg:
    """Attach an explicit legal set, checking transition closure."""
    legal = frozenset(int(s) for s in legal)
    if not legal:
        raise ValueError("legal set override is empty")
    for s in legal:
        if not 0 <= s < stg.num_states:
            raise ValueError(f"legal state {s} out of range for n={stg.n}")
    mask = np.zeros(stg.num_states, dtype=bool)
    mask[list(legal)] = True
    escapes = ~mask[stg.edges[list(sorted(legal))]]
    if escapes.any():
        rows = sorted(legal)
        bad = [rows[i] for i in np.flatnonzero(escapes.any(axis=1))[:5]]
        raise LegalSetNotClosedError(
            "legal-set override is not closed under transitions; "
            f"escaping states include {bad}"
        )
    return replace(stg, legal=legal)


def classify_states(stg: Stg) -> Stg:
    """Classify every state and compute recovery depths.

    Algorithm: min depth by layered backward propagation from the legal
    set; the trap region as the greatest fixpoint of "illegal with some
    successor still in the region" (states with an infinite legal-avoiding
    path, i.e. states that can reach an illegal cycle); max depth by
    value propagation over the acyclic recoverable region.
    """
    if stg.legal is None:
        raise LegalSetMissingError("run compute_legal_set or set_legal_override first")
    edges = stg.edges
    num_states = stg.num_states
    legal_mask = stg.legal_mask()
    illegal_mask = ~legal_mask

    dist = np.full(num_states, -1, dtype=np.int64)
    dist[legal_mask] = 0
    depth = 1
    while True:
        reachable = (dist[edges] >= 0).any(axis=1)
        new = (dist < 0) & reachable
        if not new.any():
            break
        dist[new] = depth
        depth += 1

    bad = illegal_mask.copy()
    while True:
        keep = bad & bad[edges].any(axis=1)
        if (keep == bad).all():
            break
        bad = keep

    self_only = (edges == np.arange(num_states, dtype=np.uint32)[:, None]).all(axis=1)
    deadlock = illegal_mask & self_only
    recoverable = illegal_mask & ~bad
    conditional = illegal_mask & bad & (dist >= 0) & ~deadlock
    irrecoverable = illegal_mask & bad & (dist < 0) & ~deadlock

    classes = np.full(num_states, StateClass.LEGAL, dtype=np.uint8)
    classes[recoverable] = StateClass.RECOVERABLE
    classes[conditional] = StateClass.CONDITIONAL
    classes[irrecoverable] = StateClass.IRRECOVERABLE
    classes[deadlock] = StateClass.DEADLOCK

    max_depth = np.full(num_states, -1, dtype=np.int64)
    max_depth[legal_mask] = 0
    known = legal_mask.copy()
    while True:
        ready = recoverable & ~known & known[edges].all(axis=1)
        if not ready.any():
            break
        max_depth[ready] = 1 + max_depth[edges[ready]].max(axis=1)
        known |= ready

    rec_min = np.where(illegal_mask, dist, -1)
    rec_max = np.where(recoverable, max_depth, -1)
    return replace(stg, classes=classes, _rec_min=rec_min, _rec_max=rec_max)


def report_illegal_loops(stg: Stg) -> list:
    """One shortest simple cycle per illegal SCC that contains a cycle.

    Ordered by lowest member; each cycle starts at its lowest state.
    """
    if stg.classes is None:
        raise LegalSetMissingError("classification not computed")
    illegal = np.flatnonzero(~stg.legal_mask())
    if illegal.size == 0:
        return []
    local = {int(s): k for k, s in enumerate(illegal)}
    adjacency = []
    for s in illegal:
        succ = np.unique(stg.edges[int(s)])
        adjacency.append(sorted(local[int(t)] for t in succ if int(t) in local))
    loops = []
    for comp in strongly_connected_components(adjacency):
        members = [int(illegal[k]) for k in comp]
        member_set = set(members)
        lowest = members[0]
        has_self = lowest in {int(t) for t in stg.edges[lowest]}
        if len(members) == 1 and not has_self:
            continue
        cycle = (lowest,) if has_self else _shortest_cycle(stg, lowest, member_set)
        kinds = {stg.class_of(s) for s in cycle}
        trap = kinds <= {StateClass.IRRECOVERABLE, StateClass.DEADLOCK}
        loops.append(IllegalLoop(states=cycle, kind="trap" if trap else "recoverable-adjacent"))
    loops.sort(key=lambda lp: lp.states[0])
    return loops


def _shortest_cycle(stg: Stg, start: int, members: set) -> tuple:
    from collections import deque

    parent = {start: None}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in sorted({int(t) for t in stg.edges[u]}):
            if v == start:
                path = [u]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return tuple(reversed(path))
            if v in members and v not in parent:
                parent[v] = u
                queue.append(v)
    raise AssertionError("SCC of size >= 2 must contain a cycle")
