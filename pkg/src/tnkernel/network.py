"""Closed scalar tensor networks for zero-state amplitudes.

A circuit becomes one operand per gate plus a (1, 0) cap at both ends of every
wire, so the full contraction is the single amplitude <0...0|U|0...0>.
Simplification fuses runs of single-qubit operands and absorbs caps; each
fused operand keeps the recipe (ordered gate factors plus cap flags) that
produced its data, which is what makes in-place rebinding for new feature
vectors possible without touching the network structure.

Index conventions: labels are opaque ints, extent 2 on qubit wires. A
single-wire operand stores data[out, in]; a CNOT stores
data[out_c, out_t, in_c, in_t].
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import Circuit, GateKind, gate_unitary
from .errors import RebindError, StructuralError


@dataclass(frozen=True)
class Factor:
    """One gate in a single-wire recipe. ``slot`` marks feature-dependent
    angles as (vector, qubit, sign) with vector "i" or "j"."""

    kind: GateKind
    angle: float | None = None
    slot: tuple[str, int, int] | None = None


def _factor_matrix(f: Factor, x_i, x_j) -> np.ndarray:
    if f.slot is not None and x_i is not None:
        vec, q, sign = f.slot
        angle = sign * (x_i[q] if vec == "i" else x_j[q])
        return gate_unitary(f.kind, float(angle))
    return gate_unitary(f.kind, f.angle)


def _chain_data(chain, start_cap: bool, end_cap: bool, x_i=None, x_j=None) -> np.ndarray:
    """Evaluate a single-wire recipe: matrix product of the chain, with the
    ket cap turning it into a column slice and the bra cap into a row slice."""
    m = np.eye(2, dtype=complex)
    for f in chain:
        m = _factor_matrix(f, x_i, x_j) @ m
    if start_cap and end_cap:
        return np.asarray(m[0, 0], dtype=complex)
    if start_cap:
        return np.ascontiguousarray(m[:, 0])
    if end_cap:
        return np.ascontiguousarray(m[0, :])
    return m


@dataclass
class TensorOperand:
    indices: tuple[int, ...]
    data: np.ndarray
    provenance: str
    chain: tuple[Factor, ...] = ()
    start_cap: bool = False
    end_cap: bool = False
    two_qubit: bool = False

    @property
    def rank(self) -> int:
        return len(self.indices)

    @property
    def parametric(self) -> bool:
        return any(f.slot is not None for f in self.chain)


@dataclass
class TensorNetwork:
    """Operand list contracting to a scalar (no output indices)."""

    operands: list[TensorOperand]
    width: int
    layers: int = 0
    simplified: bool = False

    def __len__(self) -> int:
        return len(self.operands)

    @property
    def operand_indices(self) -> list[tuple[int, ...]]:
        return [op.indices for op in self.operands]

    def extents(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for op in self.operands:
            if op.data.ndim != op.rank:
                raise StructuralError(
                    f"operand {op.provenance}: data rank {op.data.ndim} != {op.rank} indices"
                )
            for label, ext in zip(op.indices, op.data.shape):
                if out.setdefault(label, ext) != ext:
                    raise StructuralError(f"index {label} has conflicting extents")
        return out

    def output_indices(self) -> tuple[int, ...]:
        counts: dict[int, int] = {}
        for op in self.operands:
            for label in op.indices:
                counts[label] = counts.get(label, 0) + 1
        return tuple(sorted(label for label, c in counts.items() if c == 1))

    def expression(self) -> str:
        body = ";".join(",".join(map(str, op.indices)) for op in self.operands)
        return body + "->" + ",".join(map(str, self.output_indices()))

    def clone(self) -> "TensorNetwork":
        ops = [replace(op, data=op.data.copy()) for op in self.operands]
        return TensorNetwork(ops, self.width, self.layers, self.simplified)


def export_expression(tn: TensorNetwork) -> str:
    """Canonical text form of the contraction expression."""
    return tn.expression()


def circuit_to_network(c: Circuit) -> TensorNetwork:
    """One operand per gate plus start/end caps on every wire."""
    wire = list(range(c.width))  # current segment label per wire
    next_label = c.width
    operands: list[TensorOperand] = []

    for w in range(c.width):
        operands.append(
            TensorOperand((w,), _chain_data((), True, False), f"cap_start:{w}", start_cap=True)
        )

    for t, g in enumerate(c.gates):
        if g.kind is GateKind.CNOT:
            cw, tw = g.qubits
            out_c, out_t = next_label, next_label + 1
            next_label += 2
            data = gate_unitary(GateKind.CNOT).reshape(2, 2, 2, 2)
            operands.append(
                TensorOperand(
                    (out_c, out_t, wire[cw], wire[tw]),
                    data,
                    f"gate:{t}:CNOT",
                    two_qubit=True,
                )
            )
            wire[cw], wire[tw] = out_c, out_t
        else:
            q = g.qubits[0]
            out = next_label
            next_label += 1
            fac = Factor(g.kind, g.parameter, g.slot)
            operands.append(
                TensorOperand(
                    (out, wire[q]),
                    _chain_data((fac,), False, False),
                    f"gate:{t}:{g.kind.value}",
                    chain=(fac,),
                )
            )
            wire[q] = out

    for w in range(c.width):
        operands.append(
            TensorOperand(
                (wire[w],), _chain_data((), False, True), f"cap_end:{w}", end_cap=True
            )
        )

    tn = TensorNetwork(operands, c.width, c.layers)
    if tn.output_indices():
        raise StructuralError("circuit network must be fully contracted")
    return tn


def _is_single_wire(op: TensorOperand) -> bool:
    return op.rank == 2 and not op.two_qubit and bool(op.chain)


def simplify(tn: TensorNetwork) -> TensorNetwork:
    """Fuse maximal runs of single-qubit operands by matrix product, then
    absorb caps into adjacent single-wire operands. The contraction value and
    the wire-level graph structure (CNOT placement) are unchanged.
    """
    ops: list[TensorOperand | None] = list(tn.operands)

    # fuse runs: follow out-index -> in-index links between single-wire operands
    in_of = {op.indices[1]: p for p, op in enumerate(ops) if _is_single_wire(op)}
    single_outs = {op.indices[0] for op in ops if _is_single_wire(op)}
    for p in range(len(ops)):
        op = ops[p]
        if op is None or not _is_single_wire(op) or op.indices[1] in single_outs:
            continue  # consumed, not fusable, or not the head of its run
        run = [p]
        cur = op
        while cur.indices[0] in in_of:
            nxt = in_of[cur.indices[0]]
            run.append(nxt)
            cur = ops[nxt]
        if len(run) > 1:
            chain = tuple(f for q in run for f in ops[q].chain)
            ops[p] = TensorOperand(
                (ops[run[-1]].indices[0], ops[run[0]].indices[1]),
                _chain_data(chain, False, False),
                f"fused:{ops[run[0]].provenance}..{ops[run[-1]].provenance}",
                chain=chain,
            )
            for q in run[1:]:
                ops[q] = None

    # absorb caps and cap-derived vectors; scalars fall out of fully fused wires
    holders: dict[int, set[int]] = {}
    for p, op in enumerate(ops):
        if op is not None:
            for label in op.indices:
                holders.setdefault(label, set()).add(p)

    def _replace(lo: int, hi: int, merged: TensorOperand) -> None:
        for pos in (lo, hi):
            for label in ops[pos].indices:
                holders[label].discard(pos)
        ops[lo], ops[hi] = merged, None
        for label in merged.indices:
            holders[label].add(lo)

    queue = [p for p, o in enumerate(ops) if o is not None and o.rank == 1]
    while queue:
        p = queue.pop(0)
        op = ops[p]
        if op is None or op.rank != 1:
            continue
        label = op.indices[0]
        others = holders.get(label, set()) - {p}
        if len(others) != 1:
            continue
        q = others.pop()
        other = ops[q]
        lo, hi = min(p, q), max(p, q)
        if _is_single_wire(other):
            if op.start_cap and other.indices[1] == label:
                chain = op.chain + other.chain
                merged = TensorOperand(
                    (other.indices[0],),
                    _chain_data(chain, True, False),
                    f"absorbed:{other.provenance}",
                    chain=chain,
                    start_cap=True,
                )
            elif op.end_cap and other.indices[0] == label:
                chain = other.chain + op.chain
                merged = TensorOperand(
                    (other.indices[1],),
                    _chain_data(chain, False, True),
                    f"absorbed:{other.provenance}",
                    chain=chain,
                    end_cap=True,
                )
            else:
                continue
            _replace(lo, hi, merged)
            queue.append(lo)
        elif other.rank == 1 and (op.start_cap != other.start_cap):
            start = op if op.start_cap else other
            end = other if op.start_cap else op
            chain = start.chain + end.chain
            merged = TensorOperand(
                (),
                _chain_data(chain, True, True),
                f"scalar:{start.provenance}|{end.provenance}",
                chain=chain,
                start_cap=True,
                end_cap=True,
            )
            _replace(lo, hi, merged)

    out = [op for op in ops if op is not None]
    return TensorNetwork(out, tn.width, tn.layers, simplified=True)


def rebind_operands(tn: TensorNetwork, x_i, x_j) -> TensorNetwork:
    """Write the operand data for a new feature pair in place.

    Only parameter-slot operands are touched; the expression, operand order,
    and index labels are untouched, so any path planned for ``tn`` stays valid.
    """
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    if x_i.shape != (tn.width,) or x_j.shape != (tn.width,):
        raise RebindError(
            f"feature vectors of lengths {x_i.size}/{x_j.size} do not match width {tn.width}"
        )
    if not (np.all(np.isfinite(x_i)) and np.all(np.isfinite(x_j))):
        raise RebindError("feature angles must be finite")
    slotted = [op for op in tn.operands if op.parametric]
    if not slotted:
        raise RebindError("network carries no feature slots; not built from a kernel circuit")
    for op in slotted:
        op.data = _chain_data(op.chain, op.start_cap, op.end_cap, x_i, x_j)
    return tn
