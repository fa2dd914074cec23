"""Worst-case insertion adversary driven by a nested segment hierarchy.

The adversary maintains nested label segments S_1 = [1, m] down to a
terminal segment holding between 2 and 7 keys, each level at less than half
the length of the previous one and carrying a buffer parameter b_i fixed at
creation time.  After the first seven evenly spread keys, every inserted
key is the rounded midpoint of the two middle keys of the deepest segment,
which forces any labeling algorithm into repeated local crowding.

A completed run is an AdversaryTranscript; ``verify_adversary_transcript``
re-checks every structural invariant and every inequality the construction
promises, reporting violations instead of raising so corrupted transcripts
can be diagnosed offline.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .core import (
    Allocation,
    LabelingAlgorithm,
    Segment,
    StructuralError,
    TraceStep,
    busy_segment,
    ceil_log2,
    execute_step,
    is_lazy_step,
    relocated_set,
)


class AdversaryInvariantError(Exception):
    """The adversary's own bookkeeping broke; unreachable for valid subjects."""


class UniverseExhaustedError(Exception):
    """No fresh key fits between the two selected keys (universe too small)."""


def weight(alloc: Allocation, s: Segment) -> int:
    """Number of keys labeled inside s."""
    return alloc.weight(s)


def density(alloc: Allocation, s: Segment) -> float:
    return alloc.weight(s) / s.length


def densify(alloc: Allocation, s: Segment, b: int) -> Segment:
    """Shortest subsegment of s holding exactly floor((weight(s) - 2b) / 2)
    keys, none of them among the b smallest or b largest keys of s.

    Ties on length break toward the smallest lo.  The result's endpoints are
    occupied labels: shrinking to occupied endpoints never increases length.
    """
    occ = alloc.occupied_labels(s)
    w = len(occ)
    target = (w - 2 * b) // 2
    if b < 1 or target < 1:
        raise AdversaryInvariantError(
            f"densify needs weight - 2b >= 2, got weight={w}, b={b}"
        )
    # candidate windows: target consecutive occupied labels avoiding both buffers
    best_lo = best_hi = None
    best_len = None
    for j in range(b, w - b - target + 1):
        lo, hi = occ[j], occ[j + target - 1]
        if best_len is None or hi - lo < best_len:
            best_len = hi - lo
            best_lo, best_hi = lo, hi
    if best_lo is None:
        raise AdversaryInvariantError(
            f"no qualifying subsegment: weight={w}, b={b}, target={target}"
        )
    return Segment(best_lo, best_hi)


def densify_oracle(alloc: Allocation, s: Segment, b: int) -> Segment:
    """Definitional reference for densify: score every subsegment of s.

    Quadratically slower than densify; kept for differential testing.
    """
    occ = alloc.occupied_labels(s)
    w = len(occ)
    target = (w - 2 * b) // 2
    if b < 1 or target < 1:
        raise AdversaryInvariantError(
            f"densify needs weight - 2b >= 2, got weight={w}, b={b}"
        )
    excluded = set(occ[:b]) | set(occ[w - b :])
    best = None
    for lo in range(s.lo, s.hi + 1):
        for hi in range(lo, s.hi + 1):
            seg = Segment(lo, hi)
            if alloc.weight(seg) != target:
                continue
            if any(lo <= lab <= hi for lab in excluded):
                continue
            key = (seg.length, seg.lo)
            if best is None or key < best[0]:
                best = (key, seg)
    if best is None:
        raise AdversaryInvariantError(
            f"no qualifying subsegment: weight={w}, b={b}, target={target}"
        )
    return best[1]


def midpoint_key(alloc: Allocation, s: Segment) -> int:
    """ceil of the average of the two middle keys labeled inside s.

    With pop(s) = {x_1 < ... < x_l} the selected keys are x_ceil((l-1)/2)
    and x_ceil((l+1)/2); they are consecutive, so the result is a fresh key
    strictly between them whenever they differ by at least 2.
    """
    pop = alloc.population(s)
    ell = len(pop)
    if ell < 2:
        raise AdversaryInvariantError(f"midpoint needs weight >= 2, got {ell}")
    lo = pop[-(-(ell - 1) // 2) - 1]
    hi = pop[-(-(ell + 1) // 2) - 1]
    if hi - lo < 2:
        raise UniverseExhaustedError(
            f"no unused key between {lo} and {hi}; universe too small"
        )
    return -(-(lo + hi) // 2)


def first_phase_key(t: int, r: int) -> int:
    """Key for step t < 8: seven keys evenly spread over [1, r]."""
    if not 1 <= t <= 7:
        raise StructuralError(f"first phase covers steps 1..7, got {t}")
    return 1 + -(-((t - 1) * (r - 1)) // 6)


@dataclass(frozen=True)
class HierarchyLevel:
    segment: Segment
    buffer: int
    created_at: int


@dataclass(frozen=True)
class SegmentHierarchy:
    """Nested segments, outermost (whole label space) first."""

    levels: tuple[HierarchyLevel, ...]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def segment(self, i: int) -> Segment:
        """1-based level access matching the construction's indexing."""
        return self.levels[i - 1].segment

    def buffer(self, i: int) -> int:
        return self.levels[i - 1].buffer


def rebuild_hierarchy(
    prev: SegmentHierarchy, p_prev: int, alloc: Allocation, t: int
) -> SegmentHierarchy:
    """Keep levels 1..p_prev, then extend by densify while the innermost
    retained or built level still holds at least 8 keys."""
    levels = list(prev.levels[:p_prev])
    while alloc.weight(levels[-1].segment) >= 8:
        seg = densify(alloc, levels[-1].segment, levels[-1].buffer)
        buf = -(-alloc.weight(seg) // 8)
        levels.append(HierarchyLevel(seg, buf, t))
    return SegmentHierarchy(tuple(levels))


def critical_level(h: SegmentHierarchy, busy: Segment) -> int:
    """Largest level index whose segment contains the busy segment.

    Containment is downward-closed over nested levels, so scan until the
    first level that fails.
    """
    if not h.levels or not h.levels[0].segment.contains_segment(busy):
        raise AdversaryInvariantError(f"busy segment {busy} escapes the root level")
    p = 1
    for i in range(2, h.depth + 1):
        if h.segment(i).contains_segment(busy):
            p = i
        else:
            break
    return p


@dataclass(frozen=True)
class AdversaryStep:
    """Per-step adversary state: hierarchy after rebuilding, weights of all
    levels under the pre-insertion allocation, and the critical level."""

    hierarchy: SegmentHierarchy
    weights: tuple[int, ...]
    p: int
    step: TraceStep

    @property
    def t(self) -> int:
        return self.step.t


@dataclass(frozen=True)
class AdversaryTranscript:
    algorithm: str
    n: int
    m: int
    r: int
    steps: tuple[AdversaryStep, ...]

    @property
    def total_cost(self) -> int:
        return sum(s.step.step_cost for s in self.steps)

    @property
    def keys(self) -> tuple[int, ...]:
        return tuple(s.step.new_key for s in self.steps)

    @property
    def all_lazy(self) -> bool:
        return all(s.step.lazy for s in self.steps)


def default_universe(n: int) -> int:
    return 2 ** (n + 5)


def adversary_run(
    algorithm: LabelingAlgorithm, n: int, m: int, r: int | None = None
) -> AdversaryTranscript:
    """Run the adversary for n insertions against a fresh algorithm instance.

    Requires n >= 8, n <= m and r > 2**(n+4) (default 2**(n+5)); the large
    universe guarantees every chosen midpoint is a fresh key.
    """
    if r is None:
        r = default_universe(n)
    if n < 8:
        raise StructuralError(f"adversary needs n >= 8, got {n}")
    if m < n:
        raise StructuralError(f"adversary needs n <= m, got n={n}, m={m}")
    if r <= 2 ** (n + 4):
        raise StructuralError(f"universe must exceed 2**(n+4), got r={r}")
    if m != algorithm.m:
        raise StructuralError(
            f"algorithm labels [1,{algorithm.m}], adversary got m={m}"
        )

    root = HierarchyLevel(Segment(1, m), 1, 1)
    alloc = Allocation.empty()
    hierarchy = SegmentHierarchy((root,))
    p_prev = 0
    steps: list[AdversaryStep] = []
    for t in range(1, n + 1):
        if t < 8:
            y = first_phase_key(t, r)
            step = execute_step(algorithm, alloc, y, t)
            weights = (t - 1,)
            p = 1
        else:
            hierarchy = rebuild_hierarchy(hierarchy, p_prev, alloc, t)
            weights = tuple(alloc.weight(lvl.segment) for lvl in hierarchy.levels)
            y = midpoint_key(alloc, hierarchy.segment(hierarchy.depth))
            step = execute_step(algorithm, alloc, y, t)
            p = critical_level(hierarchy, step.busy)
        steps.append(AdversaryStep(hierarchy, weights, p, step))
        alloc = step.alloc_after
        p_prev = p
    return AdversaryTranscript(algorithm.name, n, m, r, tuple(steps))


@dataclass(frozen=True)
class Violation:
    t: int
    check: str
    detail: str


@dataclass
class VerificationReport:
    """Outcome of transcript verification: violations plus skipped check ids."""

    violations: list[Violation] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, t: int, check: str, detail: str) -> None:
        self.violations.append(Violation(t, check, detail))

    def checks_hit(self) -> set[str]:
        return {v.check for v in self.violations}

    def format(self) -> str:
        lines = [f"t={v.t} {v.check}: {v.detail}" for v in self.violations]
        lines += [f"skipped: {name}" for name in self.skipped]
        return "\n".join(lines) if lines else "all checks passed"


# Check identifiers, also the vocabulary of test assertions and CLI output.
CHECK_ROOT = "hierarchy-root"
CHECK_NESTING = "hierarchy-nesting"
CHECK_HALVING = "hierarchy-halving"
CHECK_DEPTH = "hierarchy-depth"
CHECK_REBUILD = "hierarchy-rebuild"
CHECK_BUFFER = "buffer-definition"
CHECK_TERMINAL = "terminal-weight"
CHECK_KEY_DISTINCT = "key-distinct"
CHECK_KEY_GAP = "key-gap"
CHECK_CRITICAL = "critical-range"
CHECK_WEIGHT_SNAPSHOT = "weight-snapshot"
CHECK_WEIGHT_DROP = "weight-drop"
CHECK_WEIGHT_TAIL = "weight-tail-sum"
CHECK_RELOCATION_FLOOR = "relocation-floor"
CHECK_COST_FLOOR = "total-cost-floor"
CHECK_STEP_ROUNDTRIP = "step-roundtrip"
CHECK_CHOSEN_KEY = "chosen-key"

LAZY_GATED_CHECKS = (CHECK_RELOCATION_FLOOR, CHECK_COST_FLOOR)


def verify_adversary_transcript(tr: AdversaryTranscript) -> VerificationReport:
    """Re-check every invariant of a completed transcript.

    Structural hierarchy facts, the buffer and terminal-weight rules, the
    rebuild replay, the minimum key gap, the per-level weight inequalities
    and the step round-trip (relocations, busy segment, laziness recomputed
    from the stored allocations) are always enforced.  The relocation floor
    |Rel| >= sum of inner buffers and the aggregate cost floor hold only for
    lazy subjects; for non-lazy runs they are reported as skipped.
    """
    rep = VerificationReport()
    depth_cap = ceil_log2(tr.m)
    prev: AdversaryStep | None = None
    min_gap: int | None = None
    sorted_keys: list[int] = []
    weight_at_critical_sum = 0

    for adv in tr.steps:
        t = adv.t
        st = adv.step
        h = adv.hierarchy
        levels = h.levels

        if levels[0].segment != Segment(1, tr.m) or levels[0].buffer != 1:
            rep.add(t, CHECK_ROOT, f"level 1 is {levels[0]}, expected [1,{tr.m}] b=1")
        for i in range(1, len(levels)):
            outer, inner = levels[i - 1].segment, levels[i].segment
            if not (outer.lo <= inner.lo and inner.hi <= outer.hi and inner != outer):
                rep.add(t, CHECK_NESTING, f"level {i + 1} {inner} not inside {outer}")
            if 2 * inner.length >= outer.length:
                rep.add(
                    t,
                    CHECK_HALVING,
                    f"|S_{i + 1}|={inner.length} vs |S_{i}|={outer.length}",
                )
        if h.depth > depth_cap:
            rep.add(t, CHECK_DEPTH, f"depth {h.depth} > ceil(log2 m) = {depth_cap}")
        if not 1 <= adv.p <= h.depth:
            rep.add(t, CHECK_CRITICAL, f"p={adv.p} outside [1, {h.depth}]")

        if t < 8:
            if h.depth != 1:
                rep.add(t, CHECK_REBUILD, f"first phase must keep depth 1, got {h.depth}")
        elif prev is not None:
            try:
                expect_h = rebuild_hierarchy(
                    prev.hierarchy, prev.p, st.alloc_before, t
                )
                if expect_h.levels != levels:
                    rep.add(t, CHECK_REBUILD, "hierarchy differs from rebuild replay")
            except AdversaryInvariantError as exc:
                rep.add(t, CHECK_REBUILD, f"rebuild replay failed: {exc}")
        # buffer rule for levels the Rebuilding Rule created (level 1 is pinned to 1)
        for i in range(2, len(levels) + 1):
            lvl = levels[i - 1]
            if lvl.created_at == t and i <= len(adv.weights):
                expect_b = -(-adv.weights[i - 1] // 8)
                if lvl.buffer != expect_b:
                    rep.add(
                        t,
                        CHECK_BUFFER,
                        f"level {i} buffer {lvl.buffer} != ceil({adv.weights[i - 1]}/8)",
                    )

        recomputed = tuple(st.alloc_before.weight(lvl.segment) for lvl in levels)
        if recomputed != adv.weights:
            rep.add(
                t,
                CHECK_WEIGHT_SNAPSHOT,
                f"stored {adv.weights}, recomputed {recomputed}",
            )
        w = adv.weights
        if t >= 8 and not 2 <= w[-1] <= 7:
            rep.add(t, CHECK_TERMINAL, f"terminal weight {w[-1]} outside [2,7]")
        for i in range(min(len(w), h.depth) - 1):
            if 64 * h.buffer(i + 2) < w[i] - w[i + 1]:
                rep.add(
                    t,
                    CHECK_WEIGHT_DROP,
                    f"64*b_{i + 2}={64 * h.buffer(i + 2)} < w_{i + 1}-w_{i + 2}"
                    f"={w[i] - w[i + 1]}",
                )
        for i in range(min(len(w), h.depth)):
            tail = 64 * sum(h.buffer(j) for j in range(i + 2, h.depth + 1))
            if 8 + tail < w[i]:
                rep.add(t, CHECK_WEIGHT_TAIL, f"8+{tail} < w_{i + 1}={w[i]}")
        if adv.p <= len(w):
            weight_at_critical_sum += w[adv.p - 1]

        # chosen key: first-phase formula, then midpoint of the deepest segment
        try:
            if t < 8:
                expect_key = first_phase_key(t, tr.r)
            else:
                expect_key = midpoint_key(st.alloc_before, h.segment(h.depth))
            if st.new_key != expect_key:
                rep.add(
                    t,
                    CHECK_CHOSEN_KEY,
                    f"key {st.new_key}, construction gives {expect_key}",
                )
        except (AdversaryInvariantError, UniverseExhaustedError) as exc:
            rep.add(t, CHECK_CHOSEN_KEY, f"cannot recompute key: {exc}")

        # step round-trip from the stored allocations
        try:
            rel = relocated_set(st.alloc_before, st.alloc_after, st.new_key)
            busy = busy_segment(st.alloc_before, st.alloc_after, rel, st.new_key)
            lazy = is_lazy_step(st.alloc_after, busy, rel)
            if rel != st.relocated or busy != st.busy or lazy != st.lazy:
                rep.add(t, CHECK_STEP_ROUNDTRIP, "stored step fields do not recompute")
        except StructuralError as exc:
            rep.add(t, CHECK_STEP_ROUNDTRIP, str(exc))

        # key distinctness and the minimum-gap guarantee
        pos = bisect.bisect_left(sorted_keys, st.new_key)
        if pos < len(sorted_keys) and sorted_keys[pos] == st.new_key:
            rep.add(t, CHECK_KEY_DISTINCT, f"key {st.new_key} repeated")
        else:
            if pos > 0:
                gap = st.new_key - sorted_keys[pos - 1]
                min_gap = gap if min_gap is None else min(min_gap, gap)
            if pos < len(sorted_keys):
                gap = sorted_keys[pos] - st.new_key
                min_gap = gap if min_gap is None else min(min_gap, gap)
            sorted_keys.insert(pos, st.new_key)
        if min_gap is not None and min_gap < 2 ** (tr.n + 1 - t):
            rep.add(t, CHECK_KEY_GAP, f"min gap {min_gap} < 2**{tr.n + 1 - t}")
        prev = adv

    if tr.all_lazy:
        for adv in tr.steps:
            floor = sum(
                adv.hierarchy.buffer(i)
                for i in range(adv.p + 1, adv.hierarchy.depth + 1)
            )
            if len(adv.step.relocated) < floor:
                rep.add(
                    adv.t,
                    CHECK_RELOCATION_FLOOR,
                    f"|Rel|={len(adv.step.relocated)} < {floor}",
                )
        chi = tr.total_cost
        if 64 * chi + 8 * tr.n < weight_at_critical_sum:
            rep.add(
                tr.n,
                CHECK_COST_FLOOR,
                f"64*{chi}+8*{tr.n} < sum of critical-level weights "
                f"{weight_at_critical_sum}",
            )
    else:
        rep.skipped.extend(LAZY_GATED_CHECKS)
    return rep
