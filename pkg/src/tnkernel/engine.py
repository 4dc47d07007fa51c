"""Executes contraction paths over dense operands.

One contract call walks the merge list, contracting operand pairs via
tensordot (large tensors) or direct indexed iteration (small ones); sliced
paths sum the scalar over every assignment of the sliced indices.
Parallelism lives at the batch level: a template network is cloned per
worker process, rebound per data pair, and contracted with the shared path,
so the output is a pure function of (template, pairs, path) regardless of
worker count.
"""
from __future__ import annotations

import itertools
from math import ceil
from multiprocessing import get_context

import numpy as np

from .errors import CapacityError, RebindError
from .network import TensorNetwork, rebind_operands
from .paths import ContractionPath, SlicedPath, estimate_cost

HARD_MEMORY_CAP = 2 ** 27  # elements per intermediate; refuse rather than swap


def _pairwise(data_a: np.ndarray, idx_a, data_b: np.ndarray, idx_b):
    shared = sorted(set(idx_a) & set(idx_b))
    out_idx = tuple(i for i in idx_a if i not in shared) + tuple(
        i for i in idx_b if i not in shared
    )
    if data_a.size > 64 and data_b.size > 64:
        if shared:
            axes_a = [idx_a.index(s) for s in shared]
            axes_b = [idx_b.index(s) for s in shared]
            out = np.tensordot(data_a, data_b, axes=(axes_a, axes_b))
        else:
            out = np.tensordot(data_a, data_b, axes=0)
    else:
        local: dict[int, int] = {}
        for label in tuple(idx_a) + tuple(idx_b):
            local.setdefault(label, len(local))
        out = np.einsum(
            data_a,
            [local[i] for i in idx_a],
            data_b,
            [local[i] for i in idx_b],
            [local[i] for i in out_idx],
        )
    return out, out_idx


def _contract_once(tn: TensorNetwork, merges, fixed: dict[int, int]):
    work: dict[int, tuple[tuple[int, ...], np.ndarray]] = {}
    for i, op in enumerate(tn.operands):
        data, indices = op.data, op.indices
        if fixed and any(label in fixed for label in indices):
            for ax in reversed(range(len(indices))):
                if indices[ax] in fixed:
                    data = np.take(data, fixed[indices[ax]], axis=ax)
            indices = tuple(label for label in indices if label not in fixed)
        work[i] = (indices, np.asarray(data))
    nxt = len(tn.operands)
    for a, b in merges:
        ia, da = work.pop(a)
        ib, db = work.pop(b)
        shared_elems = 1
        for label in set(ia) & set(ib):
            shared_elems *= da.shape[ia.index(label)]
        out_size = (da.size // shared_elems) * (db.size // shared_elems)
        if out_size > HARD_MEMORY_CAP:
            raise CapacityError(
                f"intermediate of {out_size} elements exceeds the hard cap {HARD_MEMORY_CAP}"
            )
        out, oi = _pairwise(da, ia, db, ib)
        work[nxt] = (oi, out)
        nxt += 1
    (indices, data) = next(iter(work.values()))
    if indices:
        order = np.argsort(indices, kind="stable")
        return np.transpose(data, order)
    return complex(data)


def contract(tn: TensorNetwork, path, validate: bool = True):
    """Contract the network along a (sliced) path.

    Returns the complex amplitude for closed networks; a dense array (axes
    in sorted index order) when open indices remain.
    """
    if isinstance(path, SlicedPath):
        base, sliced = path.path, path.sliced
    elif isinstance(path, ContractionPath):
        base, sliced = path, ()
    else:
        raise TypeError(f"expected ContractionPath or SlicedPath, got {type(path).__name__}")
    if validate:
        est = estimate_cost(tn, path)
        if est.max_intermediate > HARD_MEMORY_CAP:
            raise CapacityError(
                f"planned intermediate of {est.max_intermediate} elements exceeds"
                f" the hard cap {HARD_MEMORY_CAP}; slice tighter"
            )
    extents = tn.extents()
    total = None
    for assignment in itertools.product(*(range(extents[s]) for s in sliced)):
        value = _contract_once(tn, base.merges, dict(zip(sliced, assignment)))
        total = value if total is None else total + value
    return total


_WORKER_STATE: dict = {}


def _init_worker(template: TensorNetwork, path) -> None:
    _WORKER_STATE["net"] = template.clone()
    _WORKER_STATE["path"] = path


def _run_chunk(task):
    start, pairs = task
    net, path = _WORKER_STATE["net"], _WORKER_STATE["path"]
    values = []
    for offset, (x_i, x_j) in enumerate(pairs):
        try:
            rebind_operands(net, x_i, x_j)
        except RebindError as exc:
            raise RebindError(f"operand set {start + offset}: {exc}") from exc
        values.append(contract(net, path, validate=False))
    return start, values


def contract_batch(template: TensorNetwork, operand_sets, path, workers: int = 1):
    """Contract one template over many (x_i, x_j) pairs, reusing the path.

    Output order matches input order for any worker count; each worker owns
    a clone of the template so rebinding never races.
    """
    pairs = [(np.asarray(a, dtype=float), np.asarray(b, dtype=float)) for a, b in operand_sets]
    for k, (a, b) in enumerate(pairs):
        if a.shape != (template.width,) or b.shape != (template.width,):
            raise RebindError(
                f"operand set {k}: vectors of lengths {a.size}/{b.size}"
                f" do not match width {template.width}"
            )
    estimate_cost(template, path)  # validate once for the whole batch
    if not pairs:
        return []
    if workers <= 1 or len(pairs) == 1:
        net = template.clone()
        out = []
        for k, (x_i, x_j) in enumerate(pairs):
            try:
                rebind_operands(net, x_i, x_j)
            except RebindError as exc:
                raise RebindError(f"operand set {k}: {exc}") from exc
            out.append(contract(net, path, validate=False))
        return out

    chunk = max(1, ceil(len(pairs) / (workers * 4)))
    tasks = [(start, pairs[start : start + chunk]) for start in range(0, len(pairs), chunk)]
    ctx = get_context("fork")
    out: list = [None] * len(pairs)
    with ctx.Pool(workers, initializer=_init_worker, initargs=(template, path)) as pool:
        for start, values in pool.imap_unordered(_run_chunk, tasks):
            out[start : start + len(values)] = values
    return out
