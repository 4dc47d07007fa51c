"""Circuit IR: feature-map construction, adjoint, kernel composition."""
import math

import numpy as np
import pytest

from tnkernel.circuit import (
    Circuit,
    FeatureMapConfig,
    Gate,
    GateKind,
    adjoint,
    build_feature_map,
    compose_kernel_circuit,
    dump_circuit,
)
from tnkernel.statevector import zero_amplitude
from conftest import random_circuit


def test_zero_angle_map_structure():
    c = build_feature_map([0.0, 0.0], FeatureMapConfig(2, layers=1))
    assert [g.kind for g in c.gates] == [GateKind.RY, GateKind.RY, GateKind.CNOT]
    assert c.gates[0].parameter == 0.0 and c.gates[1].parameter == 0.0


def test_single_qubit_map_has_no_cnot():
    c = build_feature_map([math.pi], FeatureMapConfig(1, layers=1))
    assert len(c.gates) == 1
    assert c.gates[0] == Gate(GateKind.RY, (0,), math.pi)


def test_feature_map_gate_count_layers():
    c = build_feature_map([0.1, 0.2, 0.3, 0.4], FeatureMapConfig(4, layers=2))
    assert len(c.gates) == 2 * (4 + 3) == 14


@pytest.mark.parametrize("n,layers", [(2, 1), (3, 1), (4, 1), (5, 2), (6, 3)])
def test_compose_gate_count_formula(n, layers, rng):
    cfg = FeatureMapConfig(n, layers=layers)
    c = compose_kernel_circuit(rng.uniform(0, np.pi, n), rng.uniform(0, np.pi, n), cfg)
    assert len(c.gates) == 2 * layers * (2 * n - 1)
    assert c.layers == layers


def test_adjoint_involution(rng):
    for _ in range(20):
        c = random_circuit(rng, int(rng.integers(1, 5)), 12)
        assert adjoint(adjoint(c)).gates == c.gates


def test_adjoint_negates_rotation():
    c = Circuit(1, (Gate(GateKind.RY, (0,), 0.3),))
    assert adjoint(c).gates == (Gate(GateKind.RY, (0,), -0.3),)


def test_adjoint_reverses_and_keeps_self_adjoint_gates():
    c = Circuit(2, (Gate(GateKind.H, (0,)), Gate(GateKind.CNOT, (0, 1))))
    a = adjoint(c)
    assert a.gates == (Gate(GateKind.CNOT, (0, 1)), Gate(GateKind.H, (0,)))
    assert a.width == c.width


def test_adjoint_undoes_circuit(rng):
    for _ in range(10):
        c = random_circuit(rng, 3, 10)
        roundtrip = Circuit(3, c.gates + adjoint(c).gates)
        assert abs(zero_amplitude(roundtrip) - 1.0) < 1e-10


def test_identical_features_give_unit_amplitude(rng):
    for n in (1, 2, 4):
        cfg = FeatureMapConfig(n, layers=2)
        x = rng.uniform(0, np.pi, n)
        amp = zero_amplitude(compose_kernel_circuit(x, x, cfg))
        assert abs(abs(amp) - 1.0) < 1e-12


def test_single_qubit_kernel_closed_form(rng):
    cfg = FeatureMapConfig(1, layers=1)
    for _ in range(10):
        a, b = rng.uniform(0, np.pi, 2)
        amp = zero_amplitude(compose_kernel_circuit([a], [b], cfg))
        assert amp == pytest.approx(math.cos((a - b) / 2), abs=1e-12)


def test_feature_length_mismatch():
    with pytest.raises(ValueError, match="length"):
        build_feature_map([0.1, 0.2], FeatureMapConfig(3, layers=1))


def test_nonfinite_angle_rejected():
    with pytest.raises(ValueError, match="finite"):
        build_feature_map([float("nan")], FeatureMapConfig(1, layers=1))


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate(GateKind.CNOT, (1, 1))
    with pytest.raises(ValueError):
        Gate(GateKind.H, (0,), 0.5)
    with pytest.raises(ValueError):
        Gate(GateKind.RY, (0,))
    with pytest.raises(ValueError):
        Circuit(1, (Gate(GateKind.H, (1,)),))


def test_feature_map_config_validation():
    with pytest.raises(ValueError):
        FeatureMapConfig(0)
    with pytest.raises(ValueError):
        FeatureMapConfig(2, layers=0)
    with pytest.raises(ValueError):
        FeatureMapConfig(2, entanglement="full")


def test_dump_format():
    c = Circuit(
        2,
        (
            Gate(GateKind.H, (0,)),
            Gate(GateKind.RY, (1,), 0.5),
            Gate(GateKind.CNOT, (0, 1)),
        ),
    )
    assert dump_circuit(c) == "width 2\nlayers 0\nH 0\nRY 1 0.5\nCNOT 0 1\n"
