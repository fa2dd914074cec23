"""Subject labeling algorithms exercised by the adversary.

Two real subjects plus a deliberately broken-laziness demo:

* ``even-spread``: on every insert, redistribute all keys evenly over the
  whole label range.  Trivially correct baseline, Theta(n) relabelings per
  insert.
* ``weight-balanced``: dyadic-range rebalancing in the style of Itai,
  Konheim and Rodeh; the standard subject for the polynomially-many-labels
  regime, O(log n) amortized relabelings per insert.
* ``nonlazy-demo``: test-only subject that relabels both end keys while
  leaving middle keys untouched, so its busy segment routinely covers keys
  it did not relocate.
"""

from __future__ import annotations

import bisect

from .core import Allocation, CapacityError, Trace, ceil_log2


def laziness_audit(trace: Trace) -> bool:
    """True iff every step of the trace was lazy (relabeled keys form the
    full inverse image of the busy segment).  Audited, never assumed: the
    even-redistribution formulas can leave a key coincidentally unmoved
    between moved ones, and such steps are not lazy."""
    return all(step.lazy for step in trace.steps)


def spread_labels(a: int, b: int, count: int) -> list[int]:
    """Place ``count`` labels evenly in [a, b]: a - 1 + ceil(i*(b-a+1)/(count+1)).

    Strictly increasing whenever count <= b - a + 1.
    """
    length = b - a + 1
    return [a - 1 + -(-(i * length) // (count + 1)) for i in range(1, count + 1)]


class EvenSpread:
    """Baseline subject: all keys re-spread over [1, m] on every insert."""

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("m must be positive")
        self.name = "even-spread"
        self.m = m
        self._keys: list[int] = []

    def insert(self, key: int) -> Allocation:
        if len(self._keys) + 1 > self.m:
            raise CapacityError(f"label space of size {self.m} is full")
        bisect.insort(self._keys, key)
        return Allocation(tuple(self._keys), spread_labels(1, self.m, len(self._keys)))


class WeightBalanced:
    """Dyadic-range rebalancing over [1, m].

    The label range is conceptually halved into ranges down to length 1
    (height h = ceil(log2 m)).  A new key targets the floor-midpoint gap
    between its neighbors (virtual neighbors at 0 and m+1); if the slot is
    taken, walk up to the lowest ancestor range whose post-insert density is
    at most its threshold and re-spread that range's keys evenly inside it.

    A range at depth d (root 0, deepest leaves h) has threshold
    (h + d) / (2h), i.e. 1/2 at the root interpolating to 1 at depth-h
    leaves.  Density comparisons are exact integer arithmetic:
    weight / length <= (h + d) / (2h)  iff  2*h*weight <= (h + d)*length.

    Refuses inserts beyond max_keys (default floor(m/2)) so the root
    threshold always remains satisfiable.
    """

    def __init__(self, m: int, max_keys: int | None = None):
        if m < 1:
            raise ValueError("m must be positive")
        self.name = "weight-balanced"
        self.m = m
        self.height = max(1, ceil_log2(m))
        self.max_keys = m // 2 if max_keys is None else max_keys
        self._keys: list[int] = []
        self._labels: list[int] = []

    def _ancestors(self, position: int) -> list[tuple[int, int, int]]:
        """Ranges from the root down to the length-1 range of ``position``,
        as (lo, hi, depth) triples."""
        lo, hi, depth = 1, self.m, 0
        chain = [(lo, hi, depth)]
        while lo < hi:
            left_hi = lo + (hi - lo) // 2
            if position <= left_hi:
                hi = left_hi
            else:
                lo = left_hi + 1
            depth += 1
            chain.append((lo, hi, depth))
        return chain

    def insert(self, key: int) -> Allocation:
        count = len(self._keys)
        if count + 1 > self.max_keys:
            raise CapacityError(
                f"configured capacity {self.max_keys} of label space {self.m} reached"
            )
        pos = bisect.bisect_left(self._keys, key)
        pred = self._labels[pos - 1] if pos > 0 else 0
        succ = self._labels[pos] if pos < count else self.m + 1
        gap = (pred + succ) // 2
        if succ - pred >= 2:
            # the midpoint slot is free: place without touching anyone
            self._keys.insert(pos, key)
            self._labels.insert(pos, gap)
            return Allocation(tuple(self._keys), tuple(self._labels))

        gap = max(1, min(self.m, gap))
        h = self.height
        for lo, hi, depth in reversed(self._ancestors(gap)):
            length = hi - lo + 1
            i0 = bisect.bisect_left(self._labels, lo)
            i1 = bisect.bisect_right(self._labels, hi)
            weight = i1 - i0 + 1  # post-insert
            if 2 * h * weight <= (h + depth) * length:
                self._keys.insert(pos, key)
                self._labels[i0:i1] = spread_labels(lo, hi, weight)
                return Allocation(tuple(self._keys), tuple(self._labels))
        raise CapacityError("no ancestor range satisfies its density threshold")


class NonlazyDemo:
    """Test-only subject violating laziness on purpose.

    Keys sit at labels 4*i except that the first and last labels wobble by a
    parity bit that flips every insert.  Once four or more keys are present,
    most inserts relabel both ends while middle keys stay put, so the busy
    segment covers keys that were not relocated.
    """

    def __init__(self, m: int):
        self.name = "nonlazy-demo"
        self.m = m
        self._keys: list[int] = []
        self._count = 0

    def insert(self, key: int) -> Allocation:
        if 4 * (len(self._keys) + 1) + 1 > self.m:
            raise CapacityError(f"demo subject needs m > 4n, got m={self.m}")
        bisect.insort(self._keys, key)
        self._count += 1
        parity = self._count % 2
        ell = len(self._keys)
        labels = [4 * i for i in range(1, ell + 1)]
        labels[0] -= parity
        labels[-1] += parity
        return Allocation(tuple(self._keys), labels)


ALGORITHMS = {
    "even-spread": EvenSpread,
    "weight-balanced": WeightBalanced,
    "nonlazy-demo": NonlazyDemo,
}


def make_algorithm(name: str, m: int):
    """Construct a fresh subject by its configuration name."""
    try:
        factory = ALGORITHMS[name]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}"
        ) from None
    return factory(m)
