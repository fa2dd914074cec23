import random

import pytest

from olabel.core import (
    Allocation,
    AlgorithmFault,
    Segment,
    StructuralError,
    busy_segment,
    is_lazy_step,
    relocated_set,
    run_trace,
)
from olabel.algorithms import EvenSpread, WeightBalanced


def alloc(*pairs):
    return Allocation.from_pairs(pairs)


def test_relocated_set_first_insertion():
    assert relocated_set(alloc(), alloc((5, 3)), 5) == {5}


def test_relocated_set_only_new_key_moves():
    before = alloc((2, 3), (4, 6))
    after = alloc((2, 3), (3, 4), (4, 6))
    assert relocated_set(before, after, 3) == {3}


def test_relocated_set_neighbors_shift():
    before = alloc((2, 3), (4, 4))
    after = alloc((2, 2), (3, 4), (4, 6))
    assert relocated_set(before, after, 3) == {2, 3, 4}


def test_relocated_set_domain_mismatch():
    with pytest.raises(StructuralError):
        relocated_set(alloc((1, 1)), alloc((1, 1)), 2)
    with pytest.raises(StructuralError):
        relocated_set(alloc(), alloc((1, 1), (2, 2)), 2)


def test_busy_segment_single_new_label():
    assert busy_segment(alloc(), alloc((5, 3)), frozenset({5}), 5) == Segment(3, 3)


def test_busy_segment_collects_old_and_new():
    before = alloc((2, 3), (4, 4))
    after = alloc((2, 2), (3, 4), (4, 6))
    assert busy_segment(before, after, frozenset({2, 3, 4}), 3) == Segment(2, 6)


def test_busy_segment_new_key_only():
    before = alloc((2, 3), (4, 6))
    after = alloc((2, 3), (3, 4), (4, 6))
    assert busy_segment(before, after, frozenset({3}), 3) == Segment(4, 4)


def test_busy_segment_requires_nonempty():
    with pytest.raises(StructuralError):
        busy_segment(alloc(), alloc((5, 3)), frozenset(), 5)


def test_is_lazy_singleton():
    assert is_lazy_step(alloc((5, 3)), Segment(3, 3), frozenset({5}))


def test_is_lazy_full_inverse_image():
    after = alloc((2, 2), (3, 4), (4, 6))
    assert is_lazy_step(after, Segment(2, 6), frozenset({2, 3, 4}))


def test_is_lazy_detects_untouched_key_inside():
    after = alloc((2, 2), (3, 4), (4, 6))
    assert not is_lazy_step(after, Segment(2, 6), frozenset({3, 4}))


def test_run_trace_single_insert():
    trace = run_trace(EvenSpread(8), [4])
    assert trace.total_cost == 1
    assert dict(trace.final_allocation.items()) == {4: 4}


def test_run_trace_even_spread_pair():
    trace = run_trace(EvenSpread(8), [4, 2])
    assert trace.total_cost == 3
    assert dict(trace.steps[1].alloc_after.items()) == {2: 3, 4: 6}
    assert trace.steps[1].lazy


def test_run_trace_rejects_duplicates():
    with pytest.raises(StructuralError):
        run_trace(EvenSpread(8), [4, 4])


def test_run_trace_rejects_keys_outside_universe():
    with pytest.raises(StructuralError):
        run_trace(EvenSpread(8), [0])
    with pytest.raises(StructuralError):
        run_trace(EvenSpread(8), [4, 100], r=50)


class _BadAlgorithm:
    """Emits an order-violating allocation on the second insert."""

    name = "broken"
    m = 100

    def __init__(self):
        self._keys = []

    def insert(self, key):
        self._keys.append(key)
        if len(self._keys) == 1:
            return Allocation((key,), (50,))
        return Allocation.from_pairs([(self._keys[0], 50), (self._keys[1], 50)])


def test_algorithm_fault_names_step():
    with pytest.raises(AlgorithmFault) as err:
        run_trace(_BadAlgorithm(), [10, 20])
    assert err.value.step == 2


def test_allocation_rejects_order_violation():
    with pytest.raises(StructuralError):
        Allocation((1, 2), (5, 4))
    with pytest.raises(StructuralError):
        Allocation((2, 1), (1, 2))


def test_allocation_queries():
    a = alloc((2, 3), (5, 9))
    assert a.weight(Segment(1, 10)) == 2
    assert a.weight(Segment(4, 9)) == 1
    assert a.population(Segment(4, 9)) == (5,)
    assert a.occupied_labels(Segment(1, 5)) == (3,)


def test_trace_roundtrip_fuzz():
    # stored per-step fields must recompute from the stored allocations,
    # and total cost is at least one per insertion
    rng = random.Random(7)
    for trial in range(40):
        m = rng.randint(8, 500)
        subject = rng.choice([EvenSpread(m), WeightBalanced(m)])
        limit = m if subject.name == "even-spread" else m // 2
        n = rng.randint(1, min(40, limit))
        keys = rng.sample(range(1, 10**12), n)
        trace = run_trace(subject, keys)
        assert trace.total_cost >= n
        for step in trace.steps:
            rel = relocated_set(step.alloc_before, step.alloc_after, step.new_key)
            assert rel == step.relocated
            busy = busy_segment(step.alloc_before, step.alloc_after, rel, step.new_key)
            assert busy == step.busy
            assert is_lazy_step(step.alloc_after, busy, rel) == step.lazy
            assert step.new_key in step.relocated
