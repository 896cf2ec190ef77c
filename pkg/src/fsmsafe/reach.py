"""Reachability under an upset budget, with replayable witnesses.

The search space is the product of the state graph and an upset counter:
node (state, used) steps to (edges[state, input], used) or, spending one
upset, to (edges[state, input] ^ (1 << bit), used + 1).  Flips ride on
transitions: a step's flip applies to the state reached after that step.

Witnesses are minimal by (steps, upsets) and deterministic beyond that:
the BFS processes upset buckets in ascending order and, inside a bucket,
discovers children input-ascending with no-flip batches before flip
batches (flip bits ascending, origins ascending); the first discovery
fixes the parent.  Ties between flip timings thus resolve to the
earliest-input, earliest-flip parent chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TraceMismatchError
from .stg import Stg


@dataclass(frozen=True)
class ReachQuery:
    """target may be a single state or a set of them; sources None means
    the reset states."""

    target: int | tuple
    sources: tuple | None = None
    budget: int = 0
    max_cycles: int | None = None


@dataclass(frozen=True)
class WitnessStep:
    state_before: int
    input_vector: int
    seu_flip: int | None  # bit flipped in the state reached by this step


@dataclass(frozen=True)
class WitnessTrace:
    steps: tuple
    final_state: int

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    @property
    def upsets_used(self) -> int:
        return sum(1 for s in self.steps if s.seu_flip is not None)


def _resolve(stg: Stg, query: ReachQuery):
    size = stg.num_states
    if query.sources is None:
        sources = tuple(sorted(stg.reset_states))
    else:
        sources = tuple(sorted(set(int(s) for s in query.sources)))
    if not sources:
        raise ValueError("no source states")
    if isinstance(query.target, int):
        targets = (int(query.target),)
    else:
        targets = tuple(sorted(set(int(t) for t in query.target)))
    if not targets:
        raise ValueError("no target states")
    for s in (*sources, *targets):
        if not 0 <= s < size:
            raise ValueError(f"state {s} out of range for {stg.n} bits")
    if query.budget < 0:
        raise ValueError("budget must be >= 0")
    max_cycles = query.max_cycles
    if max_cycles is None:
        max_cycles = size * (query.budget + 1)
    return sources, targets, int(query.budget), int(max_cycles)


def check_reachable(stg: Stg, query: ReachQuery) -> WitnessTrace | None:
    """Shortest witness from any source to any target, or None.

    The witness has the fewest steps, then the fewest upsets; the parent
    discipline in the module docstring makes it byte-deterministic.  Ties
    between distinct targets resolve to the smallest target state.
    """
    sources, targets, budget, max_cycles = _resolve(stg, query)
    size = stg.num_states
    num_inputs = stg.num_inputs
    cols = budget + 1

    immediate = sorted(set(targets) & set(sources))
    if immediate:
        return WitnessTrace(steps=(), final_state=immediate[0])

    visited = np.zeros((size, cols), dtype=bool)
    par_state = np.full((size, cols), -1, dtype=np.int64)
    par_input = np.zeros((size, cols), dtype=np.uint32)
    par_flip = np.full((size, cols), -1, dtype=np.int8)

    src = np.array(sources, dtype=np.int64)
    visited[src, 0] = True
    frontier = [np.array([], dtype=np.int64) for _ in range(cols)]
    frontier[0] = src

    def discover(children, u, origins, input_vector, flip):
        fresh = ~visited[children, u]
        if not fresh.any():
            return np.array([], dtype=np.int64)
        children = children[fresh]
        origins = origins[fresh]
        uniq, first = np.unique(children, return_index=True)
        visited[uniq, u] = True
        par_state[uniq, u] = origins[first]
        par_input[uniq, u] = input_vector
        par_flip[uniq, u] = -1 if flip is None else flip
        return uniq

    found_u = None
    for _ in range(max_cycles):
        nxt = [[] for _ in range(cols)]
        any_nodes = False
        for u in range(cols):
            states = frontier[u]
            if not len(states):
                continue
            any_nodes = True
            succ = stg.edges[states].astype(np.int64)  # (B, 2^m)
            for i in range(num_inputs):
                nxt[u].append(discover(succ[:, i], u, states, i, None))
            if u + 1 < cols:
                for i in range(num_inputs):
                    for f in range(stg.n):
                        nxt[u + 1].append(
                            discover(succ[:, i] ^ (1 << f), u + 1, states, i, f)
                        )
        if not any_nodes:
            return None
        frontier = [
            np.unique(np.concatenate(parts)) if parts else np.array([], dtype=np.int64)
            for parts in nxt
        ]
        hit = [
            (u, t) for u in range(cols) for t in targets if visited[t, u]
        ]
        if hit:
            found_u, found_target = min(hit)
            break
    if found_u is None:
        return None

    steps = []
    state, u = found_target, found_u
    while not (u == 0 and state in sources):
        prev = int(par_state[state, u])
        iv = int(par_input[state, u])
        flip = int(par_flip[state, u])
        steps.append(WitnessStep(prev, iv, None if flip < 0 else flip))
        state = prev
        u = u if flip < 0 else u - 1
    steps.reverse()
    return WitnessTrace(steps=tuple(steps), final_state=found_target)


def check_reachable_backward(stg: Stg, query: ReachQuery):
    """(steps, upsets) of the best witness, computed target-to-source.

    Runs one reversed-product BFS per upset column; independent evidence
    for check_reachable (same minimal steps, same minimal upset count,
    None exactly when the forward search returns None).
    """
    sources, targets, budget, max_cycles = _resolve(stg, query)
    size = stg.num_states
    num_inputs = stg.num_inputs
    src_mask = np.zeros(size, dtype=bool)
    src_mask[list(sources)] = True
    if any(src_mask[t] for t in targets):
        return (0, 0)

    xor_index = [np.arange(size) ^ (1 << f) for f in range(stg.n)]

    def preds(mask: np.ndarray) -> np.ndarray:
        out = np.zeros(size, dtype=bool)
        for i in range(num_inputs):
            out |= mask[stg.edges[:, i]]
        return out

    best = None
    for u_seed in range(budget + 1):
        visited = np.zeros((size, u_seed + 1), dtype=bool)
        visited[list(targets), u_seed] = True
        frontier = visited.copy()
        for step in range(1, max_cycles + 1):
            new = np.zeros_like(visited)
            for u in range(u_seed + 1):
                col = frontier[:, u]
                if not col.any():
                    continue
                new[:, u] |= preds(col)
                if u > 0:
                    pre_flip = np.zeros(size, dtype=bool)
                    for f in range(stg.n):
                        pre_flip |= col[xor_index[f]]
                    new[:, u - 1] |= preds(pre_flip)
            new &= ~visited
            if not new.any():
                break
            visited |= new
            frontier = new
            if (new[:, 0] & src_mask).any():
                if best is None or (step, u_seed) < best:
                    best = (step, u_seed)
                break
    return best


def replay_witness(stg: Stg, trace: WitnessTrace, sources=None) -> int:
    """Re-execute a witness against the netlist cone (or the edge table).

    Verifies every recorded state and the final state; raises
    TraceMismatch on the first divergence.  Returns the final state.
    """
    cand = stg.candidate

    def step_fn(state, iv):
        if cand is not None:
            return cand.eval_next(state, iv)
        return int(stg.edges[state, iv])

    if trace.steps:
        cur = trace.steps[0].state_before
    else:
        cur = trace.final_state
    if sources is not None and cur not in set(int(s) for s in sources):
        raise TraceMismatchError(f"trace starts at {cur}, not a source state")
    for idx, step in enumerate(trace.steps):
        if step.state_before != cur:
            raise TraceMismatchError(
                f"step {idx}: recorded state {step.state_before}, simulated {cur}"
            )
        if not 0 <= step.input_vector < stg.num_inputs:
            raise TraceMismatchError(f"step {idx}: input {step.input_vector} out of range")
        cur = step_fn(cur, step.input_vector)
        if step.seu_flip is not None:
            if not 0 <= step.seu_flip < stg.n:
                raise TraceMismatchError(f"step {idx}: flip bit {step.seu_flip} out of range")
            cur ^= 1 << step.seu_flip
    if cur != trace.final_state:
        raise TraceMismatchError(
            f"trace ends at {cur}, recorded final_state {trace.final_state}"
        )
    return cur
