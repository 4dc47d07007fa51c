"""Shared test helpers: random circuits, independent contraction oracles,
and synthetic planner networks.
"""
from __future__ import annotations

import numpy as np
import pytest

from tnkernel.circuit import Circuit, Gate, GateKind, gate_unitary
from tnkernel.network import TensorNetwork, TensorOperand


def random_circuit(rng: np.random.Generator, width: int, n_gates: int) -> Circuit:
    """Random circuit over the full gate set; CNOTs only when width >= 2."""
    kinds = [GateKind.H, GateKind.RY, GateKind.RZ]
    if width >= 2:
        kinds.append(GateKind.CNOT)
    gates = []
    for _ in range(n_gates):
        kind = kinds[rng.integers(len(kinds))]
        if kind is GateKind.CNOT:
            c, t = rng.choice(width, size=2, replace=False)
            gates.append(Gate(GateKind.CNOT, (int(c), int(t))))
        elif kind is GateKind.H:
            gates.append(Gate(kind, (int(rng.integers(width)),)))
        else:
            angle = float(rng.uniform(-2 * np.pi, 2 * np.pi))
            gates.append(Gate(kind, (int(rng.integers(width)),), angle))
    return Circuit(width, tuple(gates))


def circuit_matrix(c: Circuit) -> np.ndarray:
    """Full 2^n x 2^n unitary built independently via Kronecker lifting.

    Little-endian: qubit 0 is the least significant index bit, so a gate on
    qubit q sits at position q counted from the right of the kron chain.
    """
    dim = 1 << c.width
    full = np.eye(dim, dtype=complex)
    for g in c.gates:
        if g.kind is GateKind.CNOT:
            ctrl, targ = g.qubits
            m = np.zeros((dim, dim), dtype=complex)
            for col in range(dim):
                row = col ^ (1 << targ) if (col >> ctrl) & 1 else col
                m[row, col] = 1.0
        else:
            u = gate_unitary(g.kind, g.parameter)
            m = np.array([[1.0]], dtype=complex)
            for q in reversed(range(c.width)):
                m = np.kron(m, u if q == g.qubits[0] else np.eye(2, dtype=complex))
        full = m @ full
    return full


def naive_contract(tn: TensorNetwork):
    """Left-to-right fold of the operand list; independent of the engine.

    Fine for test-sized networks: operands are ordered caps-then-gates, so
    intermediates stay at or below the full state size.
    """
    indices = list(tn.operands[0].indices)
    data = tn.operands[0].data
    for op in tn.operands[1:]:
        shared = sorted(set(indices) & set(op.indices))
        if shared:
            axes_a = [indices.index(s) for s in shared]
            axes_b = [op.indices.index(s) for s in shared]
            data = np.tensordot(data, op.data, axes=(axes_a, axes_b))
        else:
            data = np.tensordot(data, op.data, axes=0)
        indices = [i for i in indices if i not in shared] + [
            i for i in op.indices if i not in shared
        ]
    if indices:
        data = np.transpose(data, np.argsort(indices, kind="stable"))
        return data
    return complex(data)


def synthetic_network(specs, seed: int = 0) -> TensorNetwork:
    """Planner test network from (indices, shape) pairs with random data."""
    rng = np.random.default_rng(seed)
    ops = []
    for k, (indices, shape) in enumerate(specs):
        data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        ops.append(TensorOperand(tuple(indices), data, f"synthetic:{k}"))
    return TensorNetwork(ops, width=1)


def random_planner_network(rng: np.random.Generator, n_ops: int) -> TensorNetwork:
    """Random connected closed network with exactly ``n_ops`` operands.

    A spanning set of edges guarantees connectivity; extra edges add cycles.
    Every index appears on exactly two operands, so the contraction is a
    scalar.
    """
    if n_ops == 1:
        return synthetic_network([((0, 1), (2, 2))], seed=int(rng.integers(2 ** 31)))
    members: list[list[int]] = [[] for _ in range(n_ops)]
    extents: list[int] = []

    def add_edge(a: int, b: int, ext: int):
        label = len(extents)
        extents.append(ext)
        members[a].append(label)
        members[b].append(label)

    for k in range(1, n_ops):
        add_edge(k, int(rng.integers(k)), int(rng.choice([2, 2, 3])))
    for _ in range(int(rng.integers(0, n_ops))):
        a, b = rng.choice(n_ops, size=2, replace=False)
        add_edge(int(a), int(b), 2)
    specs = [
        (tuple(mine), tuple(extents[label] for label in mine)) for mine in members
    ]
    return synthetic_network(specs, seed=int(rng.integers(2 ** 31)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
