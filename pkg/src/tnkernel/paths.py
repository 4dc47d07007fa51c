"""Contraction path planning.

A path is a binary contraction tree in SSA form: operands are numbered
0..m-1, each merge consumes two live ids and produces the next fresh id.
The flop model charges one multiply-add per element of the iteration space
of a merge (the product of extents of the union of both operands' indices);
max_intermediate is the largest merge-result element count.

Planning stages mirror the execution pipeline: an exhaustive
dynamic-programming solve for small networks, cost-greedy search with
randomized restarts for large ones, local subtree re-optimization, and
index slicing to respect a memory cap. Indices may appear at most twice
across the network (plus open indices appearing once); hyperedges are out
of scope.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from heapq import heappop, heappush

from .errors import CapacityError, SliceInfeasibleError, StructuralError


@dataclass(frozen=True)
class ContractionPath:
    merges: tuple[tuple[int, int], ...]
    total_flops: int
    max_intermediate: int


@dataclass(frozen=True)
class SlicedPath:
    path: ContractionPath
    sliced: tuple[int, ...]
    slice_count: int
    max_intermediate: int  # per slice
    total_flops: int  # across all slices


@dataclass(frozen=True)
class CostEstimate:
    flops: int
    max_intermediate: int
    slice_count: int


@dataclass(frozen=True)
class PlanOptions:
    """Policy knobs for ``plan_contraction``."""

    strategy: str = "auto"  # auto | optimal | greedy
    seeds: int = 1  # 1 = the deterministic sweep; >1 adds randomized restarts
    reconfigure: bool = True
    subtree_size: int = 8
    memory_cap: int = 2 ** 26
    optimal_max: int = 16


class _View:
    """Index sets and extents of a network, validated for planning."""

    __slots__ = ("sets", "extent", "counts")

    def __init__(self, tn):
        self.extent = tn.extents()
        self.sets: list[frozenset[int]] = []
        self.counts: dict[int, int] = {}
        for ix in tn.operand_indices:
            if len(set(ix)) != len(ix):
                raise StructuralError("repeated index within one operand is unsupported")
            self.sets.append(frozenset(ix))
            for label in ix:
                self.counts[label] = self.counts.get(label, 0) + 1
        for label, c in self.counts.items():
            if c > 2:
                raise StructuralError(f"index {label} appears {c} times; hyperedges unsupported")
        if not self.sets:
            raise StructuralError("network has no operands")

    def size(self, labels) -> int:
        p = 1
        for label in labels:
            p *= self.extent[label]
        return p


def _replay(view: _View, merges, sliced: frozenset = frozenset()):
    """Validate a merge list and return (flops, max_intermediate, results).

    ``results`` carries the post-merge index set of every merge; sliced
    indices are excluded from every operand, giving per-slice costs.
    """
    m = len(view.sets)
    if len(merges) != m - 1:
        raise StructuralError(f"path has {len(merges)} merges for {m} operands")
    alive: dict[int, frozenset] = {i: s - sliced for i, s in enumerate(view.sets)}
    flops = 0
    results: list[frozenset] = []
    max_int = view.size(alive[0]) if m == 1 else 0
    nxt = m
    for a, b in merges:
        if a == b or a not in alive or b not in alive:
            raise StructuralError(f"merge ({a},{b}) references an unavailable operand")
        sa = alive.pop(a)
        sb = alive.pop(b)
        flops += view.size(sa | sb)
        result = sa ^ sb  # shared indices have both appearances here: contracted
        alive[nxt] = result
        results.append(result)
        max_int = max(max_int, view.size(result))
        nxt += 1
    return flops, max_int, results


def _make_path(view: _View, merges) -> ContractionPath:
    flops, max_int, _ = _replay(view, merges)
    return ContractionPath(tuple(merges), flops, max_int)


def estimate_cost(tn, path) -> CostEstimate:
    """Deterministic cost of a path (or sliced path) for this network."""
    view = _View(tn)
    if isinstance(path, SlicedPath):
        per_slice, max_int, _ = _replay(view, path.path.merges, frozenset(path.sliced))
        return CostEstimate(per_slice * path.slice_count, max_int, path.slice_count)
    if isinstance(path, ContractionPath):
        flops, max_int, _ = _replay(view, path.merges)
        return CostEstimate(flops, max_int, 1)
    raise TypeError(f"expected ContractionPath or SlicedPath, got {type(path).__name__}")


# ---------------------------------------------------------------------------
# exhaustive dynamic programming

def _mask_size(mask: int, ext: list[int]) -> int:
    p = 1
    while mask:
        low = mask & (-mask)
        p *= ext[low.bit_length() - 1]
        mask ^= low
    return p


def _dp_core(masks: list[int], ext: list[int]):
    """Minimal-flop binary tree over all splits, outer products included.

    Returns (flops, tree) where tree is nested tuples over operand
    positions. Boundaries use xor: an index inside a subset on both of its
    appearances cancels; one appearance keeps it open.
    """
    m = len(masks)
    if m == 1:
        return 0, 0
    full = (1 << m) - 1
    bnd = [0] * (full + 1)
    for s in range(1, full + 1):
        low = s & (-s)
        bnd[s] = bnd[s ^ low] ^ masks[low.bit_length() - 1]
    cost: list = [None] * (full + 1)
    tree: list = [None] * (full + 1)
    for i in range(m):
        cost[1 << i] = 0
        tree[1 << i] = i
    by_pop: list[list[int]] = [[] for _ in range(m + 1)]
    for s in range(1, full + 1):
        by_pop[s.bit_count()].append(s)
    for pc in range(2, m + 1):
        for s in by_pop[pc]:
            low = s & (-s)
            rest = s ^ low
            best = None
            best_split = None
            sub = rest
            while True:
                a = low | sub
                if a != s:
                    b = s ^ a
                    c = cost[a] + cost[b] + _mask_size(bnd[a] | bnd[b], ext)
                    if best is None or c < best:
                        best = c
                        best_split = (a, b)
                if sub == 0:
                    break
                sub = (sub - 1) & rest
            cost[s] = best
            tree[s] = best_split
    # expand the split table into a nested tuple tree, iteratively
    built: dict[int, object] = {}
    stack = [(full, False)]
    while stack:
        s, ready = stack.pop()
        node = tree[s]
        if isinstance(node, int):
            built[s] = node
            continue
        a, b = node
        if ready:
            built[s] = (built[a], built[b])
        else:
            stack.append((s, True))
            stack.append((b, False))
            stack.append((a, False))
    return cost[full], built[full]


def _emit_merges(root, n_leaves: int):
    """Post-order SSA merge list from a nested tree over leaf ids."""
    merges: list[tuple[int, int]] = []
    out_id: dict = {}
    nid = n_leaves

    def key(node):
        return node if isinstance(node, int) else id(node)

    stack = [(root, False)]
    while stack:
        node, ready = stack.pop()
        if isinstance(node, int):
            out_id[node] = node
            continue
        a, b = node[0], node[1]
        if ready:
            merges.append((out_id[key(a)], out_id[key(b)]))
            out_id[key(node)] = nid
            nid += 1
        else:
            stack.append((node, True))
            stack.append((b, False))
            stack.append((a, False))
    return merges


def optimal_path(tn, max_operands: int = 16) -> ContractionPath:
    """Flop-minimal path over every binary contraction tree.

    Exhaustive over subset splits: cost grows as 3^m, hence the operand cap.
    """
    view = _View(tn)
    m = len(view.sets)
    if m > max_operands:
        raise CapacityError(
            f"{m} operands exceeds the optimal-path cap of {max_operands}; use greedy_path"
        )
    if m == 1:
        return _make_path(view, ())
    labels = sorted({label for s in view.sets for label in s})
    bit = {label: i for i, label in enumerate(labels)}
    ext = [view.extent[label] for label in labels]
    masks = [sum(1 << bit[label] for label in s) for s in view.sets]
    _, tree = _dp_core(masks, ext)
    return _make_path(view, tuple(_emit_merges(tree, m)))


# ---------------------------------------------------------------------------
# cost-greedy with randomized restarts

def _greedy_once(view: _View, rng: random.Random | None):
    m = len(view.sets)
    sets: dict[int, frozenset] = dict(enumerate(view.sets))
    keys: dict[int, tuple] = {i: tuple(sorted(s)) for i, s in sets.items()}
    holders: dict[int, set[int]] = {}
    for i, s in sets.items():
        for label in s:
            holders.setdefault(label, set()).add(i)

    heap: list = []

    def push_pair(a: int, b: int):
        if keys[b] < keys[a] or (keys[b] == keys[a] and b < a):
            a, b = b, a
        sa, sb = sets[a], sets[b]
        # order: merge flops, then result size (keeps sweeps tight on chain
        # networks), then the lexicographic label tiebreak
        heappush(heap, (view.size(sa | sb), view.size(sa ^ sb), keys[a], keys[b], a, b))

    for label, hs in holders.items():
        if len(hs) == 2:
            push_pair(*sorted(hs))

    def pop_candidate():
        if rng is None:
            while heap:
                entry = heappop(heap)
                if entry[4] in sets and entry[5] in sets:
                    return entry
            return None
        buf = []
        while heap and len(buf) < 4:
            entry = heappop(heap)
            if entry[4] in sets and entry[5] in sets:
                buf.append(entry)
        if not buf:
            return None
        pick = 0
        while pick < len(buf) - 1 and rng.random() < 0.35:
            pick += 1
        chosen = buf.pop(pick)
        for entry in buf:
            heappush(heap, entry)
        return chosen

    merges: list[tuple[int, int]] = []
    nxt = m
    while len(merges) < m - 1:
        entry = pop_candidate()
        if entry is None:
            # disconnected components: outer-product the two smallest pieces
            order = sorted(sets, key=lambda i: (view.size(sets[i]), keys[i], i))
            a, b = order[0], order[1]
        else:
            a, b = entry[4], entry[5]
        sa, sb = sets.pop(a), sets.pop(b)
        result = sa ^ sb
        for label in sa | sb:
            holders[label].discard(a)
            holders[label].discard(b)
        sets[nxt] = result
        keys[nxt] = tuple(sorted(result))
        for label in result:
            holders[label].add(nxt)
            if len(holders[label]) == 2:
                other = next(h for h in holders[label] if h != nxt)
                push_pair(other, nxt)
        merges.append((a, b))
        nxt += 1
    flops, _, _ = _replay(view, merges)
    return merges, flops


def greedy_path(tn, seeds: int = 4, tiebreak: str = "lexicographic") -> ContractionPath:
    """Best-of-restarts cost-greedy path.

    Restart 0 is the pure greedy: minimal merge flops, then smallest merge
    result, then the operands' sorted index labels. Later restarts perturb
    the choice with a seeded RNG. The best restart by (flops, seed) wins, so
    the result is a pure function of (network, seeds).
    """
    if tiebreak != "lexicographic":
        raise ValueError(f"unsupported tiebreak rule {tiebreak!r}")
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    view = _View(tn)
    if len(view.sets) == 1:
        return _make_path(view, ())
    best = None
    for r in range(seeds):
        merges, flops = _greedy_once(view, random.Random(r) if r else None)
        if best is None or flops < best[0]:
            best = (flops, merges)
    return _make_path(view, tuple(best[1]))


# ---------------------------------------------------------------------------
# subtree reconfiguration

def _fold_tree(root, leaf_fn, combine_fn):
    """Iterative post-order fold over a nested-list tree; leaves are ints."""

    def key(node):
        return node if isinstance(node, int) else id(node)

    values: dict = {}
    stack = [(root, False)]
    while stack:
        node, ready = stack.pop()
        if isinstance(node, int):
            values[key(node)] = leaf_fn(node)
            continue
        if ready:
            values[key(node)] = combine_fn(node, values[key(node[0])], values[key(node[1])])
        else:
            stack.append((node, True))
            stack.append((node[1], False))
            stack.append((node[0], False))
    return values


def _internal_nodes_postorder(root) -> list:
    out = []
    stack = [(root, False)]
    while stack:
        node, ready = stack.pop()
        if isinstance(node, int):
            continue
        if ready:
            out.append(node)
        else:
            stack.append((node, True))
            stack.append((node[1], False))
            stack.append((node[0], False))
    return out


def reconfigure(tn, path: ContractionPath, subtree_size: int = 8) -> ContractionPath:
    """Re-solve every subtree with at most ``subtree_size`` leaves optimally,
    keeping only strict flop reductions. Never returns a worse path.
    """
    view = _View(tn)
    _replay(view, path.merges)
    m = len(view.sets)
    if m <= 2 or subtree_size < 2:
        return path

    nodes: list = list(range(m))
    for a, b in path.merges:
        nodes.append([nodes[a], nodes[b]])
    root = nodes[-1]
    if isinstance(root, int):
        return path

    dp_cache: dict = {}

    def solve(leaf_ids: tuple[int, ...]):
        remap: dict[int, int] = {}
        parts = []
        for lid in leaf_ids:
            parts.append(
                tuple((remap.setdefault(label, len(remap)), view.extent[label])
                      for label in sorted(view.sets[lid]))
            )
        cache_key = tuple(parts)
        hit = dp_cache.get(cache_key)
        if hit is None:
            ext = [0] * len(remap)
            for part in parts:
                for b, e in part:
                    ext[b] = e
            masks = [sum(1 << b for b, _ in part) for part in parts]
            hit = _dp_core(masks, ext)
            dp_cache[cache_key] = hit
        return hit

    def leaf_leaves(i):
        return 1, (i,)

    def combine_leaves(_, a, b):
        n = a[0] + b[0]
        if n <= subtree_size and a[1] is not None and b[1] is not None:
            return n, a[1] + b[1]
        return n, None  # leaf tuples only needed for re-solvable subtrees

    for _ in range(10):
        improved = False
        leaves = _fold_tree(root, leaf_leaves, combine_leaves)
        costs = _fold_tree(
            root,
            lambda i: (view.sets[i], 0),
            lambda n, a, b: (a[0] ^ b[0], a[1] + b[1] + view.size(a[0] | b[0])),
        )
        # post-order: descendants are visited (and possibly rewritten) before
        # their ancestors, so in-place replacements never stale a later visit
        for node in _internal_nodes_postorder(root):
            leaf_ids = leaves[id(node)][1]
            if leaf_ids is None:
                continue
            best_flops, best_tree = solve(leaf_ids)
            if best_flops < costs[id(node)][1]:
                rebuilt = _instantiate(best_tree, leaf_ids)
                node[0], node[1] = rebuilt[0], rebuilt[1]
                improved = True
        if not improved:
            break

    return _make_path(view, tuple(_emit_merges(root, m)))


def _instantiate(tree_positions, leaf_ids: tuple[int, ...]) -> list:
    """Nested-tuple position tree -> nested-list tree over original leaf ids."""
    if isinstance(tree_positions, int):
        return leaf_ids[tree_positions]
    return [
        _instantiate(tree_positions[0], leaf_ids),
        _instantiate(tree_positions[1], leaf_ids),
    ]


# ---------------------------------------------------------------------------
# slicing

def slice_path(tn, path: ContractionPath, memory_cap_elements: int) -> SlicedPath:
    """Pick indices for explicit summation until every per-slice intermediate
    fits under the cap.

    Candidates in each round are the unsliced contracted indices of the
    merges still over the cap; the index that most reduces the current max
    intermediate wins, ties on the smaller label. If an over-cap merge has no
    sliceable index left the cap is unreachable.
    """
    view = _View(tn)
    contracted = {label for label, c in view.counts.items() if c == 2}
    sliced: set[int] = set()
    while True:
        per_slice, max_int, results = _replay(view, path.merges, frozenset(sliced))
        if max_int <= memory_cap_elements:
            break
        candidates: set[int] = set()
        for res in results or [view.sets[0]]:
            live = res - sliced
            if view.size(live) > memory_cap_elements:
                free = live & contracted
                if not free:
                    raise SliceInfeasibleError(
                        f"an intermediate of {view.size(live)} elements has no sliceable"
                        f" index left; cap {memory_cap_elements} is unreachable"
                    )
                candidates |= free
        best = None
        for label in sorted(candidates):
            _, trial_max, _ = _replay(view, path.merges, frozenset(sliced | {label}))
            if best is None or trial_max < best[0]:
                best = (trial_max, label)
        sliced.add(best[1])
    slice_count = 1
    for label in sliced:
        slice_count *= view.extent[label]
    return SlicedPath(
        path=path,
        sliced=tuple(sorted(sliced)),
        slice_count=slice_count,
        max_intermediate=max_int,
        total_flops=per_slice * slice_count,
    )


# ---------------------------------------------------------------------------
# pipeline policy

def plan_contraction(tn, options: PlanOptions | None = None) -> SlicedPath:
    """Plan a network with the standard policy: exhaustive DP for small
    networks, greedy restarts otherwise, then reconfiguration and slicing.
    """
    opts = options or PlanOptions()
    n_ops = len(tn.operand_indices)
    if opts.strategy == "optimal" or (opts.strategy == "auto" and n_ops <= opts.optimal_max):
        path = optimal_path(tn, max_operands=max(n_ops, opts.optimal_max))
    elif opts.strategy in ("auto", "greedy"):
        path = greedy_path(tn, seeds=opts.seeds)
    else:
        raise ValueError(f"unknown planning strategy {opts.strategy!r}")
    if opts.reconfigure:
        path = reconfigure(tn, path, opts.subtree_size)
    return slice_path(tn, path, opts.memory_cap)
