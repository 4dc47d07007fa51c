"""Gate-level circuit IR and the kernel-circuit builder.

The kernel circuit for a data pair (x_i, x_j) embeds x_j through the feature
map and appends the adjoint of the feature map for x_i; the overlap of the
resulting state with |0...0> is the quantum kernel entry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

_SQRT2_INV = 1.0 / math.sqrt(2.0)


class GateKind(str, Enum):
    H = "H"
    RY = "RY"
    RZ = "RZ"
    CNOT = "CNOT"


_PARAMETRIC = frozenset({GateKind.RY, GateKind.RZ})


@dataclass(frozen=True)
class Gate:
    """One gate application: kind, wires (control first for CNOT), angle.

    ``slot`` marks feature-dependent rotations for operand rebinding:
    ``(vector, qubit, sign)`` where vector is "i" or "j" and the applied
    angle is ``sign * x[qubit]``.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    parameter: float | None = None
    slot: tuple[str, int, int] | None = None

    def __post_init__(self):
        expected = 2 if self.kind is GateKind.CNOT else 1
        if len(self.qubits) != expected:
            raise ValueError(f"{self.kind.value} takes {expected} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate wires in {self.qubits}")
        if self.kind in _PARAMETRIC:
            if self.parameter is None or not math.isfinite(self.parameter):
                raise ValueError(f"{self.kind.value} requires a finite angle")
        elif self.parameter is not None:
            raise ValueError(f"{self.kind.value} takes no parameter")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on ``width`` wires. Immutable; safe to share."""

    width: int
    gates: tuple[Gate, ...] = ()
    layers: int = 0

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("circuit width must be >= 1")
        for g in self.gates:
            if any(not (0 <= q < self.width) for q in g.qubits):
                raise ValueError(f"gate {g.kind.value} on {g.qubits} exceeds width {self.width}")

    def __len__(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class FeatureMapConfig:
    """Feature-map family: RY angle embedding with a linear CNOT chain."""

    width: int
    layers: int = 2
    entanglement: str = "linear"
    embedding: str = "ry_angle"

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.entanglement != "linear":
            raise ValueError(f"unsupported entanglement {self.entanglement!r}")
        if self.embedding != "ry_angle":
            raise ValueError(f"unsupported embedding {self.embedding!r}")


def gate_unitary(kind: GateKind, parameter: float | None = None) -> np.ndarray:
    """Dense unitary for one gate: 2x2, or 4x4 for CNOT (control, target)."""
    if kind is GateKind.H:
        return np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV
    if kind is GateKind.RY:
        c, s = math.cos(parameter / 2), math.sin(parameter / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind is GateKind.RZ:
        return np.array(
            [[np.exp(-0.5j * parameter), 0], [0, np.exp(0.5j * parameter)]], dtype=complex
        )
    if kind is GateKind.CNOT:
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
    raise ValueError(f"unknown gate kind {kind!r}")


def _check_angles(x, width: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != width:
        raise ValueError(f"feature vector has length {x.size}, circuit width is {width}")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature angles must be finite")
    return x


def build_feature_map(x, cfg: FeatureMapConfig, feature_tag: str | None = None) -> Circuit:
    """Embed ``x`` as rotation angles: per layer, RY(x_q) on every wire then a
    CNOT chain q -> q+1. The same angles are re-embedded in every layer.
    """
    x = _check_angles(x, cfg.width)
    gates: list[Gate] = []
    for _ in range(cfg.layers):
        for q in range(cfg.width):
            slot = (feature_tag, q, 1) if feature_tag is not None else None
            gates.append(Gate(GateKind.RY, (q,), float(x[q]), slot=slot))
        for q in range(cfg.width - 1):
            gates.append(Gate(GateKind.CNOT, (q, q + 1)))
    return Circuit(cfg.width, tuple(gates), layers=cfg.layers)


def adjoint(c: Circuit) -> Circuit:
    """Reverse the gate order and negate every rotation angle."""
    out: list[Gate] = []
    for g in reversed(c.gates):
        if g.kind in _PARAMETRIC:
            slot = None
            if g.slot is not None:
                vec, q, sign = g.slot
                slot = (vec, q, -sign)
            out.append(Gate(g.kind, g.qubits, -g.parameter, slot=slot))
        else:
            out.append(g)
    return Circuit(c.width, tuple(out), layers=c.layers)


def compose_kernel_circuit(x_i, x_j, cfg: FeatureMapConfig) -> Circuit:
    """Kernel circuit for a data pair: feature map of x_j, then the adjoint
    of the feature map of x_i. Its zero-state amplitude is the state overlap.
    """
    left = build_feature_map(x_j, cfg, feature_tag="j")
    right = adjoint(build_feature_map(x_i, cfg, feature_tag="i"))
    return Circuit(cfg.width, left.gates + right.gates, layers=cfg.layers)


def dump_circuit(c: Circuit) -> str:
    """Line-oriented text form: header, then one gate per line."""
    lines = [f"width {c.width}", f"layers {c.layers}"]
    for g in c.gates:
        if g.kind is GateKind.CNOT:
            lines.append(f"CNOT {g.qubits[0]} {g.qubits[1]}")
        elif g.kind is GateKind.H:
            lines.append(f"H {g.qubits[0]}")
        else:
            lines.append(f"{g.kind.value} {g.qubits[0]} {g.parameter!r}")
    return "\n".join(lines) + "\n"
