"""Core objects of the online labeling (file maintenance) problem.

Keys from a totally ordered universe [1, r] arrive one at a time and must
be assigned labels from [1, m] so that label order matches key order.
Changing a key's label costs one unit; the newly inserted key always counts
as relocated.  A run of an algorithm against a key sequence is recorded as
a trace of allocations, from which relocation sets, busy segments, laziness
flags and the total cost are derived by the harness (never trusted from the
algorithm under test).

Keys and labels are plain Python ints; keys are routinely wider than 64
bits, so nothing here assumes fixed-width arithmetic.  The label array of
size m is conceptual and never materialized: allocations are sparse sorted
sequences.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Protocol, Sequence


class StructuralError(ValueError):
    """Inputs violate a structural precondition (caller bug, not subject bug)."""


class AlgorithmFault(Exception):
    """The algorithm under test emitted an invalid allocation.

    Attributes:
        step: 1-based index of the offending insertion.
    """

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


class CapacityError(Exception):
    """The subject algorithm ran out of label space."""


class Segment(NamedTuple):
    """Closed integer interval [lo, hi] of labels."""

    lo: int
    hi: int

    @property
    def length(self) -> int:
        return self.hi - self.lo + 1

    def contains(self, label: int) -> bool:
        return self.lo <= label <= self.hi

    def contains_segment(self, other: "Segment") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


def ceil_log2(m: int) -> int:
    """Smallest integer L with 2**L >= m (m >= 1)."""
    if m < 1:
        raise StructuralError(f"ceil_log2 undefined for {m}")
    return (m - 1).bit_length()


class Allocation:
    """Immutable order-preserving injective map from keys to labels.

    Stored as parallel tuples sorted by key; order preservation makes the
    label tuple sorted as well, which gives O(log n) rank/range queries.
    """

    __slots__ = ("keys", "labels", "_index")

    def __init__(self, keys: Sequence[int], labels: Sequence[int]):
        self.keys = tuple(keys)
        self.labels = tuple(labels)
        if len(self.keys) != len(self.labels):
            raise StructuralError("keys and labels differ in length")
        for i in range(1, len(self.keys)):
            if self.keys[i - 1] >= self.keys[i]:
                raise StructuralError("keys not strictly increasing")
            if self.labels[i - 1] >= self.labels[i]:
                raise StructuralError(
                    f"order violated: keys {self.keys[i - 1]},{self.keys[i]} "
                    f"got labels {self.labels[i - 1]},{self.labels[i]}"
                )
        self._index = dict(zip(self.keys, self.labels))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "Allocation":
        items = sorted(pairs)
        return cls([k for k, _ in items], [l for _, l in items])

    @classmethod
    def empty(cls) -> "Allocation":
        return cls((), ())

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: int) -> bool:
        return key in self._index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Allocation):
            return NotImplemented
        return self.keys == other.keys and self.labels == other.labels

    def __hash__(self) -> int:
        return hash((self.keys, self.labels))

    def __repr__(self) -> str:
        return f"Allocation({list(zip(self.keys, self.labels))!r})"

    def label_of(self, key: int) -> int:
        return self._index[key]

    def items(self) -> Iterable[tuple[int, int]]:
        return zip(self.keys, self.labels)

    def weight(self, seg: Segment) -> int:
        """Number of keys whose label lies in seg."""
        lo = bisect.bisect_left(self.labels, seg.lo)
        hi = bisect.bisect_right(self.labels, seg.hi)
        return hi - lo

    def population(self, seg: Segment) -> tuple[int, ...]:
        """Keys whose label lies in seg, in key order."""
        lo = bisect.bisect_left(self.labels, seg.lo)
        hi = bisect.bisect_right(self.labels, seg.hi)
        return self.keys[lo:hi]

    def occupied_labels(self, seg: Segment) -> tuple[int, ...]:
        """Sorted labels inside seg that carry a key."""
        lo = bisect.bisect_left(self.labels, seg.lo)
        hi = bisect.bisect_right(self.labels, seg.hi)
        return self.labels[lo:hi]

    def validate_labels(self, m: int) -> None:
        if self.labels and (self.labels[0] < 1 or self.labels[-1] > m):
            raise StructuralError(f"label outside [1, {m}]")


@dataclass(frozen=True)
class TraceStep:
    """One insertion: the allocations around it and the derived quantities."""

    t: int
    new_key: int
    alloc_before: Allocation
    alloc_after: Allocation
    relocated: frozenset[int]
    busy: Segment
    lazy: bool

    @property
    def step_cost(self) -> int:
        return len(self.relocated)


@dataclass(frozen=True)
class Trace:
    """Complete record of a run; total_cost is the relabeling cost chi."""

    m: int
    steps: tuple[TraceStep, ...]
    total_cost: int

    @property
    def n(self) -> int:
        return len(self.steps)

    @property
    def final_allocation(self) -> Allocation:
        return self.steps[-1].alloc_after if self.steps else Allocation.empty()


class LabelingAlgorithm(Protocol):
    """Online subject: receives the next key, returns the full new allocation.

    Implementations must be deterministic and must not mutate returned
    allocations.  The harness computes relocations, busy segments and
    laziness itself.
    """

    name: str
    m: int

    def insert(self, key: int) -> Allocation: ...


def relocated_set(
    alloc_before: Allocation, alloc_after: Allocation, new_key: int
) -> frozenset[int]:
    """Keys whose label changed at this step, always including the new key."""
    if new_key in alloc_before or new_key not in alloc_after:
        raise StructuralError("new_key must be absent before and present after")
    if len(alloc_after) != len(alloc_before) + 1:
        raise StructuralError("after-domain must be before-domain plus new_key")
    moved = {new_key}
    before = alloc_before._index
    for key, label in alloc_after.items():
        if key != new_key:
            try:
                old = before[key]
            except KeyError:
                raise StructuralError(f"key {key} appeared without being inserted")
            if old != label:
                moved.add(key)
    return frozenset(moved)


def busy_segment(
    alloc_before: Allocation,
    alloc_after: Allocation,
    relocated: frozenset[int],
    new_key: int,
) -> Segment:
    """Smallest segment covering new labels of relocated keys and old labels
    of relocated keys other than the new one."""
    if not relocated:
        raise StructuralError("relocated set is empty")
    if new_key not in relocated:
        raise StructuralError("new_key missing from relocated set")
    lo = hi = alloc_after.label_of(new_key)
    for key in relocated:
        label = alloc_after.label_of(key)
        lo = min(lo, label)
        hi = max(hi, label)
        if key != new_key:
            old = alloc_before.label_of(key)
            lo = min(lo, old)
            hi = max(hi, old)
    return Segment(lo, hi)


def is_lazy_step(
    alloc_after: Allocation, busy: Segment, relocated: frozenset[int]
) -> bool:
    """True iff every key now labeled inside the busy segment was relocated.

    New labels of relocated keys lie in busy by construction, so the inverse
    image always contains the relocated set; equality is a count check.
    """
    return alloc_after.weight(busy) == len(relocated)


def execute_step(
    algorithm: LabelingAlgorithm, alloc_before: Allocation, key: int, t: int
) -> TraceStep:
    """Feed one key to the algorithm and derive the validated step record."""
    alloc_after = algorithm.insert(key)
    try:
        alloc_after.validate_labels(algorithm.m)
        relocated = relocated_set(alloc_before, alloc_after, key)
    except StructuralError as exc:
        raise AlgorithmFault(t, str(exc)) from exc
    busy = busy_segment(alloc_before, alloc_after, relocated, key)
    lazy = is_lazy_step(alloc_after, busy, relocated)
    return TraceStep(t, key, alloc_before, alloc_after, relocated, busy, lazy)


def check_keys(keys: Sequence[int], r: int | None = None) -> None:
    seen = set()
    for key in keys:
        if key in seen:
            raise StructuralError(f"duplicate key {key}")
        if key < 1 or (r is not None and key > r):
            raise StructuralError(f"key {key} outside universe")
        seen.add(key)


def run_trace(
    algorithm: LabelingAlgorithm, keys: Sequence[int], r: int | None = None
) -> Trace:
    """Run the algorithm on a key sequence and record the full trace.

    Keys must be pairwise distinct and, when r is given, within [1, r].
    Every intermediate allocation is validated; an invalid one raises
    AlgorithmFault naming the step.
    """
    check_keys(keys, r)
    alloc = Allocation.empty()
    steps = []
    cost = 0
    for t, key in enumerate(keys, start=1):
        step = execute_step(algorithm, alloc, key, t)
        steps.append(step)
        cost += step.step_cost
        alloc = step.alloc_after
    return Trace(m=algorithm.m, steps=tuple(steps), total_cost=cost)
