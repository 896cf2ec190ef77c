"""Single event upset injection and output-corruption analysis.

inject_all flips every k-subset of state bits in every legal state and
reports where the machine lands: back inside the legal set (a "legal
jump"), or in an illegal state of some recovery class.  An upset counts
``corrected`` when the corrupted state's successor agrees with the
origin's successor on every input, i.e. the machine behaves as if the
flip never happened from the next cycle on.  With an explicit corrector
table the mechanism is also labeled: corrected (mapped back to the
origin), fallback (no codeword within the corrector radius), or
miscorrected (mapped to a different codeword).

output_corruption asks whether an illegal state is visible from outside
the group: a target held by a disabled DFFE shows stale data and is a
wildcard; a row is HELD when every target is held, EXPOSED when its
visible values match no legal state's under the same input, else MASKED.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .encoding import CorrectorSpec
from .errors import CapacityExceededError, LegalSetMissingError
from .stg import StateClass, Stg

EVENT_CAP = 10**7

CORRECTION_LABELS = ("corrected", "fallback", "miscorrected")

HELD = "HELD"
EXPOSED = "EXPOSED"
MASKED = "MASKED"


@dataclass(frozen=True)
class SeuOutcome:
    """One injected upset: origin legal state, flipped-bit mask, landing."""

    origin: int
    mask: int
    corrupted: int
    state_class: StateClass
    legal_jump: bool
    recovery_depth: tuple | None
    corrected: bool
    correction: str | None  # corrector mechanism label, None without a corrector


class SeuReport:
    """Array-backed results of inject_all; ordered by origin then mask."""

    def __init__(self, stg, k, origins, masks, corrupted, corrected, correction):
        self.stg = stg
        self.n = stg.n
        self.k = k
        self.origins = origins
        self.masks = masks
        self.corrupted = corrupted
        self.classes = stg.classes[corrupted]
        self.legal_jump = self.classes == StateClass.LEGAL
        self.corrected = corrected
        self.correction = correction  # int8 index into CORRECTION_LABELS, -1 none

    def __len__(self):
        return len(self.origins)

    def __iter__(self):
        return (self.outcome(i) for i in range(len(self)))

    def outcome(self, i: int) -> SeuOutcome:
        corrupted = int(self.corrupted[i])
        code = int(self.correction[i])
        return SeuOutcome(
            origin=int(self.origins[i]),
            mask=int(self.masks[i]),
            corrupted=corrupted,
            state_class=StateClass(int(self.classes[i])),
            legal_jump=bool(self.legal_jump[i]),
            recovery_depth=self.stg.recovery_depth(corrupted),
            corrected=bool(self.corrected[i]),
            correction=CORRECTION_LABELS[code] if code >= 0 else None,
        )

    def counts(self) -> dict:
        per_class = np.bincount(self.classes, minlength=5)
        return {
            "events": len(self),
            "legal_jump": int(per_class[StateClass.LEGAL]),
            "recoverable": int(per_class[StateClass.RECOVERABLE]),
            "conditional": int(per_class[StateClass.CONDITIONAL]),
            "irrecoverable": int(per_class[StateClass.IRRECOVERABLE]),
            "deadlock": int(per_class[StateClass.DEADLOCK]),
            "corrected": int(self.corrected.sum()),
        }


def inject_all(stg: Stg, k: int = 1, corrector: CorrectorSpec | None = None) -> SeuReport:
    """Inject every k-bit flip into every legal state.

    Events are ordered by origin state ascending, then flip mask (as an
    integer) ascending.  Caps at 10^7 events.  Requires a classified Stg.
    """
    if stg.legal is None:
        raise LegalSetMissingError("legal set not computed")
    if stg.classes is None:
        raise ValueError("classify_states must run before injection")
    if not 1 <= k <= stg.n:
        raise ValueError(f"k must be in 1..{stg.n}, got {k}")
    if corrector is not None and corrector.table.width != stg.n:
        raise ValueError(
            f"corrector is {corrector.table.width} bits wide, group has {stg.n}"
        )
    legal = np.array(sorted(stg.legal), dtype=np.uint32)
    masks = np.array(
        sorted(sum(1 << b for b in bits) for bits in combinations(range(stg.n), k)),
        dtype=np.uint32,
    )
    num_events = len(legal) * len(masks)
    if num_events > EVENT_CAP:
        raise CapacityExceededError(
            f"{len(legal)} legal states x {math.comb(stg.n, k)} masks = "
            f"{num_events} events exceed the {EVENT_CAP} cap"
        )

    origins = np.repeat(legal, len(masks))
    flip = np.tile(masks, len(legal))
    corrupted = origins ^ flip

    corrected = np.empty(num_events, dtype=bool)
    chunk = max(1, (1 << 22) // max(1, stg.num_inputs))
    for lo in range(0, num_events, chunk):
        hi = min(num_events, lo + chunk)
        corrected[lo:hi] = (
            stg.edges[corrupted[lo:hi]] == stg.edges[origins[lo:hi]]
        ).all(axis=1)

    correction = np.full(num_events, -1, dtype=np.int8)
    if corrector is not None:
        mapped = corrector.map[corrupted]
        fell = corrector.fallback[corrupted]
        correction[:] = CORRECTION_LABELS.index("miscorrected")
        correction[mapped == origins] = CORRECTION_LABELS.index("corrected")
        correction[fell] = CORRECTION_LABELS.index("fallback")

    return SeuReport(stg, k, origins, flip, corrupted, corrected, correction)


# ---------------------------------------------------------------------------
# output corruption


@dataclass(frozen=True)
class ExposureRow:
    state: int
    input_vector: int
    verdict: str    # HELD | EXPOSED | MASKED
    values: tuple   # per-target bit as observed
    held: tuple     # per-target hold flag


class ExposureReport:
    """Per (illegal state, input) visibility verdicts."""

    def __init__(self, stg, states, target_labels, verdicts, values, held):
        self.stg = stg
        self.states = states            # (S,) uint32
        self.target_labels = target_labels
        self.verdicts = verdicts        # (S, 2^m) of HELD/EXPOSED/MASKED codes 0/1/2
        self._values = values           # (T, S, 2^m) bool
        self._held = held               # (T, S, 2^m) bool

    _CODES = (HELD, EXPOSED, MASKED)

    def __len__(self):
        return self.verdicts.size

    def row(self, state: int, input_vector: int) -> ExposureRow:
        j = int(np.searchsorted(self.states, state))
        if j >= len(self.states) or self.states[j] != state:
            raise KeyError(f"state {state} not in report")
        return ExposureRow(
            state=state,
            input_vector=input_vector,
            verdict=self._CODES[int(self.verdicts[j, input_vector])],
            values=tuple(bool(v) for v in self._values[:, j, input_vector]),
            held=tuple(bool(h) for h in self._held[:, j, input_vector]),
        )

    def rows(self):
        for j, s in enumerate(self.states):
            for i in range(self.verdicts.shape[1]):
                yield self.row(int(s), i)

    def counts(self) -> dict:
        flat = np.bincount(self.verdicts.ravel(), minlength=3)
        return {"held": int(flat[0]), "exposed": int(flat[1]), "masked": int(flat[2])}


def _pack_columns(vals: np.ndarray, held: np.ndarray):
    """Pack (T, N) bool target columns into 63-bit lanes for fast compare."""
    t = vals.shape[0]
    lanes = []
    for lo in range(0, t, 63):
        hi = min(t, lo + 63)
        v = np.zeros(vals.shape[1], dtype=np.uint64)
        h = np.zeros(vals.shape[1], dtype=np.uint64)
        for b in range(lo, hi):
            v |= vals[b].astype(np.uint64) << np.uint64(b - lo)
            h |= held[b].astype(np.uint64) << np.uint64(b - lo)
        lanes.append((v, h))
    return lanes


def output_corruption(stg: Stg, states=None) -> ExposureReport:
    """Classify how illegal states show up at the group's output targets.

    ``states`` defaults to the single-flip frontier: illegal states at
    Hamming distance 1 from some legal state.  For each (state, input) the
    target values are compared against every legal state's values under
    the same input; positions held on either side are wildcards.
    """
    if stg.legal is None:
        raise LegalSetMissingError("legal set not computed")
    cand = stg.candidate
    if cand is None:
        raise ValueError("output corruption needs a netlist-backed candidate")
    legal = np.array(sorted(stg.legal), dtype=np.uint32)
    if states is None:
        frontier = legal[:, None] ^ (np.uint32(1) << np.arange(stg.n, dtype=np.uint32))
        states = np.setdiff1d(np.unique(frontier), legal)
    else:
        states = np.unique(np.asarray(states, dtype=np.uint32))
    num_inputs = stg.num_inputs
    t = len(cand.targets)

    def eval_grid(state_set):
        vals = np.zeros((t, len(state_set), num_inputs), dtype=bool)
        held = np.zeros_like(vals)
        for i in range(num_inputs):
            iv = np.full(len(state_set), i, dtype=np.uint32)
            v, h = cand.eval_targets_many(state_set, iv)
            vals[:, :, i] = v
            held[:, :, i] = h
        return vals, held

    lvals, lheld = eval_grid(legal)
    cvals, cheld = eval_grid(states)

    verdicts = np.full((len(states), num_inputs), 2, dtype=np.uint8)  # MASKED
    for i in range(num_inputs):
        if t == 0:
            verdicts[:, i] = 0  # nothing observable
            continue
        legal_lanes = _pack_columns(lvals[:, :, i], lheld[:, :, i])
        bad_lanes = _pack_columns(cvals[:, :, i], cheld[:, :, i])
        all_held = cheld[:, :, i].all(axis=0)
        match = np.ones((len(states), len(legal)), dtype=bool)
        for (bv, bh), (lv, lh) in zip(bad_lanes, legal_lanes):
            diff = (bv[:, None] ^ lv[None, :]) & ~bh[:, None] & ~lh[None, :]
            match &= diff == 0
        exposed = ~match.any(axis=1)
        verdicts[exposed, i] = 1
        verdicts[all_held, i] = 0

    labels = tuple(tgt.label for tgt in cand.targets)
    return ExposureReport(stg, states, labels, verdicts, cvals, cheld)
