"""Admissible ordered rooted trees characterizing bucketing histories.

Trees are nested tuples of child subtrees: ``()`` is a single node,
``((), ())`` a root with two leaf children, ``None`` the empty tree.  Node
depth counts from 1 at the root; the cost of a tree is the sum of its node
depths.

A tree is k-admissible when its leftmost principal subtree is k-admissible
and the rest of the tree is (k-1)-admissible (trees with at most one vertex
always qualify).  Equivalently, the i-th principal subtree must be
(k-i+1)-admissible -- both forms are implemented and kept in agreement by
differential tests.  Admissible trees are exactly the shapes a bucket can
accumulate in the prefix bucketing game, which makes their minimum depth

    g_k(n) = smallest d with C(k+d-1, k) >= n

the handle on optimal bucketing cost: it is between g_k(n)*n/2 and
g_k(n)*n.

Heavy traversals are iterative; traces from long runs produce trees far
deeper than Python's recursion limit.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Iterator, Optional

from .core import StructuralError

if TYPE_CHECKING:
    from .bucketing import BucketingTrace

Tree = Optional[tuple]  # None = empty tree; a node is the tuple of its children

ENUM_LIMITS = (3, 4)  # (k, d) caps for exhaustive enumeration


def _postorder(t: Tree) -> Iterator[tuple]:
    """Yield every node (as its children tuple) bottom-up, children first.

    Shared subtree objects are yielded once; pair with an id-keyed value map.
    """
    if t is None:
        return
    seen: set[int] = set()
    stack: list[tuple[tuple, bool]] = [(t, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            yield node
        else:
            stack.append((node, True))
            for child in node:
                if id(child) not in seen:
                    stack.append((child, False))


def _values(t: Tree, combine) -> dict[int, int]:
    vals: dict[int, int] = {}
    for node in _postorder(t):
        vals[id(node)] = combine(node, [vals[id(c)] for c in node])
    return vals


def tree_size(t: Tree) -> int:
    if t is None:
        return 0
    return _values(t, lambda node, cs: 1 + sum(cs))[id(t)]


def tree_depth(t: Tree) -> int:
    if t is None:
        return 0
    return _values(t, lambda node, cs: 1 + max(cs, default=0))[id(t)]


def tree_cost(t: Tree) -> int:
    """Sum of node depths, root at depth 1; zero for the empty tree."""
    if t is None:
        return 0
    sizes = _values(t, lambda node, cs: 1 + sum(cs))
    # c(T) = |T| + sum of child costs, since re-rooting shifts every node down
    costs: dict[int, int] = {}
    for node in _postorder(t):
        costs[id(node)] = sizes[id(node)] + sum(costs[id(c)] for c in node)
    return costs[id(t)]


def min_buckets(t: Tree) -> int:
    """Smallest k for which t is k-admissible (0 for at most one vertex)."""
    if t is None:
        return 0
    need = _values(
        t,
        lambda node, cs: max(
            len(node), max((c + j for j, c in enumerate(cs)), default=0)
        ),
    )
    return need[id(t)]


def is_admissible(t: Tree, k: int) -> bool:
    """Admissibility by direct unfolding: the leftmost principal subtree
    stays k-admissible, the remainder must be (k-1)-admissible."""
    if k < 0:
        raise StructuralError("k must be non-negative")
    work: list[tuple[Tree, int]] = [(t, k)]
    while work:
        node, budget = work.pop()
        if node is None or len(node) == 0:
            continue
        if budget <= 0:
            return False
        work.append((node[0], budget))
        work.append((node[1:], budget - 1))
    return True


def is_admissible_principal(t: Tree, k: int) -> bool:
    """Admissibility by the principal-subtree characterization: at most k
    children, the i-th of them (k-i+1)-admissible."""
    if k < 0:
        raise StructuralError("k must be non-negative")
    work: list[tuple[Tree, int]] = [(t, k)]
    while work:
        node, budget = work.pop()
        if node is None or len(node) == 0:
            continue
        if len(node) > budget:
            return False
        for j, child in enumerate(node):
            work.append((child, budget - j))
    return True


def max_admissible_size(k: int, d: int) -> int:
    """Largest size of a k-admissible tree of depth at most d: C(k+d-1, k)."""
    if k < 1 or d < 1:
        raise StructuralError(f"need k >= 1 and d >= 1, got k={k}, d={d}")
    return math.comb(k + d - 1, k)


def enumerate_admissible(k: int, d: int) -> list[Tree]:
    """Every k-admissible tree of depth at most d, including the empty tree.

    Exhaustive and duplicate-free; refuses k or d beyond the small-instance
    limits since counts explode.
    """
    if k < 0 or d < 0:
        raise StructuralError("k and d must be non-negative")
    if k > ENUM_LIMITS[0] or d > ENUM_LIMITS[1]:
        raise StructuralError(
            f"enumeration limited to k <= {ENUM_LIMITS[0]}, d <= {ENUM_LIMITS[1]}; "
            f"got k={k}, d={d}"
        )
    memo: dict[tuple[int, int], list[tuple]] = {}

    def nonempty(kk: int, dd: int) -> list[tuple]:
        if dd <= 0:
            return []
        got = memo.get((kk, dd))
        if got is not None:
            return got
        out: list[tuple] = [()]
        for arity in range(1, kk + 1):
            slots = [nonempty(kk - i, dd - 1) for i in range(arity)]
            combos: list[tuple] = [()]
            for options in slots:
                combos = [prefix + (child,) for prefix in combos for child in options]
            out.extend(combos)
        memo[(kk, dd)] = out
        return out

    return [None] + nonempty(k, d)


def min_depth(n: int, k: int) -> int:
    """g_k(n): smallest d such that C(k+d-1, k) >= n."""
    if n < 1 or k < 1:
        raise StructuralError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
    if k == 1:
        return n
    d = 1
    while math.comb(k + d - 1, k) < n:
        d += 1
    return d


def _path(s: int) -> Tree:
    t: Tree = None
    for _ in range(s):
        t = (t,) if t is not None else ()
    return t


def _build_exact(s: int, k: int, d: int) -> Tree:
    """k-admissible tree with exactly s nodes and depth at most d; requires
    s <= C(k+d-1, k).  Fills principal subtrees left to right at full
    capacity, trimming the last one recursively."""
    if s == 0:
        return None
    if s == 1:
        return ()
    if k == 1:
        return _path(s)
    rem = s - 1
    children = []
    for i in range(1, k + 1):
        if rem == 0:
            break
        sub_k = k - i + 1
        cap = math.comb(sub_k + d - 2, sub_k)
        take = min(rem, cap)
        if take == 0:
            break
        children.append(_build_exact(take, sub_k, d - 1))
        rem -= take
    if rem:
        raise StructuralError(f"{s} nodes exceed capacity of (k={k}, d={d})")
    return tuple(children)


def build_min_depth_tree(n: int, k: int) -> Tree:
    """Canonical k-admissible tree with n nodes at the minimum depth g_k(n)."""
    d = min_depth(n, k)
    return _build_exact(n, k, d)


def trees_from_bucketing(b: "BucketingTrace") -> tuple[Tree, ...]:
    """Tree tuple accumulated by a bucketing trace.

    Each merge at p creates a node whose children are the nonempty trees at
    positions p..k in position order.  Along the way the tree sizes must
    match the bucket configuration and total tree cost must match the game
    cost exactly; the final trees must be (k+1-i)-admissible.  These are
    internal-consistency checks and raise on failure.
    """
    k = b.k
    trees: list[Tree] = [None] * k
    sizes = [0] * k
    costs = [0] * k
    game_cost = 0
    for t, step in enumerate(b.steps, start=1):
        p = step.p
        children = tuple(tr for tr in trees[p - 1 :] if tr is not None)
        new_size = 1 + sum(sizes[p - 1 :])
        new_cost = 1 + sum(costs[p - 1 :]) + sum(sizes[p - 1 :])
        trees[p - 1 :] = [children] + [None] * (k - p)
        sizes[p - 1 :] = [new_size] + [0] * (k - p)
        costs[p - 1 :] = [new_cost] + [0] * (k - p)
        game_cost += step.step_cost
        if tuple(sizes) != step.config_after:
            raise StructuralError(f"step {t}: tree sizes diverge from configuration")
        if sum(costs) != game_cost:
            raise StructuralError(f"step {t}: tree cost diverges from game cost")
    for i, tr in enumerate(trees, start=1):
        if min_buckets(tr) > k + 1 - i:
            raise StructuralError(f"final tree {i} is not {k + 1 - i}-admissible")
    return tuple(trees)


def strategy_from_tree(t: Tree, k: int) -> tuple[int, ...]:
    """p-sequence whose bucketing accumulates exactly t in bucket 1.

    Children are laid out left to right in time but packed toward the
    highest bucket indices their own bucket demand allows, then swallowed by
    the parent's merge; the resulting game cost equals tree_cost(t).
    """
    if t is None:
        raise StructuralError("empty tree has no strategy")
    if not is_admissible_principal(t, k):
        raise StructuralError(f"tree is not {k}-admissible")
    need = _values(
        t,
        lambda node, cs: max(
            len(node), max((c + j for j, c in enumerate(cs)), default=0)
        ),
    )
    ps: list[int] = []
    # stack entries: ('place', node, lo) expands children; ('emit', lo) merges
    stack: list[tuple] = [("place", t, 1)]
    while stack:
        entry = stack.pop()
        if entry[0] == "emit":
            ps.append(entry[1])
            continue
        _, node, lo = entry
        positions = []
        cap = k
        for child in reversed(node):
            q = min(cap, k - need[id(child)] + 1)
            positions.append(q)
            cap = q - 1
        positions.reverse()
        stack.append(("emit", lo))
        for child, q in zip(reversed(node), reversed(positions)):
            stack.append(("place", child, q))
    return tuple(ps)


def serialize_tree(t: Tree) -> str:
    """Nested-parenthesis form: empty -> '', single node -> '()',
    children concatenated left to right inside the root's parentheses."""
    if t is None:
        return ""
    parts: list[str] = []
    stack: list[object] = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, str):
            parts.append(node)
            continue
        parts.append("(")
        stack.append(")")
        for child in reversed(node):
            stack.append(child)
    return "".join(parts)


def parse_tree(s: str) -> Tree:
    if s == "":
        return None
    stack: list[list] = [[]]
    for ch in s:
        if ch == "(":
            stack.append([])
        elif ch == ")":
            if len(stack) == 1:
                raise StructuralError("unbalanced ')'")
            done = tuple(stack.pop())
            stack[-1].append(done)
        else:
            raise StructuralError(f"unexpected character {ch!r}")
    if len(stack) != 1 or len(stack[0]) != 1:
        raise StructuralError("expected exactly one balanced tree")
    return stack[0][0]


_MIN_COST: dict[tuple[int, int], float] = {}
_MIN_COST_TAIL: dict[tuple[int, int, int], float] = {}


def min_tree_cost(s: int, k: int) -> float:
    """Minimum cost of a k-admissible tree with exactly s nodes (inf when no
    such tree exists, which only happens for s >= 2 and k = 0)."""
    if s < 0 or k < 0:
        raise StructuralError("need s >= 0 and k >= 0")
    if s == 0:
        return 0
    if s == 1:
        return 1
    if k < 1:
        return math.inf
    got = _MIN_COST.get((s, k))
    if got is not None:
        return got
    value = s + _min_cost_tail(s - 1, 1, k)
    _MIN_COST[(s, k)] = value
    return value


def _min_cost_tail(s: int, slot: int, k: int) -> float:
    """Cheapest split of s nodes among child slots slot..k, the j-th slot
    holding a (k-j+1)-admissible subtree."""
    if s == 0:
        return 0
    if slot > k:
        return math.inf
    got = _MIN_COST_TAIL.get((s, slot, k))
    if got is not None:
        return got
    value = min(
        min_tree_cost(u, k - slot + 1) + _min_cost_tail(s - u, slot + 1, k)
        for u in range(s + 1)
    )
    _MIN_COST_TAIL[(s, slot, k)] = value
    return value
