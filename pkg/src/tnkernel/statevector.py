"""Dense state-vector simulator: the brute-force ground truth.

Amplitude ordering is little-endian: qubit 0 is the least significant bit of
the state index. Gate application is stride-based and in-place; the width
guard keeps this module in verification territory.
"""
from __future__ import annotations

import numpy as np

from .circuit import Circuit, FeatureMapConfig, GateKind, compose_kernel_circuit, gate_unitary
from .errors import CapacityError

MAX_WIDTH = 24


def _apply_single(state: np.ndarray, matrix: np.ndarray, qubit: int) -> None:
    # view axes: (high bits, target bit, low bits); C order puts bit q at stride 2^q
    view = state.reshape(-1, 2, 1 << qubit)
    a = view[:, 0, :].copy()
    b = view[:, 1, :]
    view[:, 0, :] = matrix[0, 0] * a + matrix[0, 1] * b
    view[:, 1, :] = matrix[1, 0] * a + matrix[1, 1] * b


def _apply_cnot(state: np.ndarray, control: int, target: int, width: int) -> None:
    view = state.reshape([2] * width)

    def sel(cv, tv):
        idx = [slice(None)] * width
        # axis k of the reshaped view carries bit (width - 1 - k)
        idx[width - 1 - control] = cv
        idx[width - 1 - target] = tv
        return tuple(idx)

    tmp = view[sel(1, 0)].copy()
    view[sel(1, 0)] = view[sel(1, 1)]
    view[sel(1, 1)] = tmp


def simulate(c: Circuit) -> np.ndarray:
    """Apply the circuit to |0...0> and return the 2^n amplitude vector."""
    if c.width > MAX_WIDTH:
        raise CapacityError(
            f"state vector for {c.width} qubits exceeds the {MAX_WIDTH}-qubit guard"
        )
    state = np.zeros(1 << c.width, dtype=complex)
    state[0] = 1.0
    for g in c.gates:
        if g.kind is GateKind.CNOT:
            _apply_cnot(state, g.qubits[0], g.qubits[1], c.width)
        else:
            _apply_single(state, gate_unitary(g.kind, g.parameter), g.qubits[0])
    return state


def zero_amplitude(c: Circuit) -> complex:
    """Amplitude <0...0| c |0...0>."""
    return complex(simulate(c)[0])


def kernel_entry_oracle(x_i, x_j, cfg: FeatureMapConfig, convention: str = "probability") -> float:
    """Kernel entry by brute force: |amp| or |amp|^2 of the pair circuit."""
    amp = zero_amplitude(compose_kernel_circuit(x_i, x_j, cfg))
    mag = abs(amp)
    if convention == "magnitude":
        return mag
    if convention == "probability":
        return mag * mag
    raise ValueError(f"unknown kernel convention {convention!r}")
