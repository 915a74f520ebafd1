import math

import numpy as np
import pytest
from scipy.optimize import minimize

from oracles import dense_unitary
from svqnhe.ansatz import (
    Circuit,
    GateOp,
    SignAnsatz,
    build_brickwork,
    build_hea,
    build_qaoa,
    build_sign_ansatz,
    default_brickwork_depth,
    diagonal_generators,
    diagonal_phases,
    init_params,
)
from svqnhe.pauli import Hamiltonian, PauliString, build_j1j2_1d, build_tfim_1d


def test_sign_ansatz_chain_parameter_count():
    ans = build_sign_ansatz(3, [(0, 1), (1, 2)], 1)
    assert ans.n_params == 8
    assert ans.w_names(1) == ["w1_rz0", "w1_rz1", "w1_rz2", "w1_rzz0_1", "w1_rzz1_2"]
    assert ans.g_names(2) == ["g2_ry0", "g2_ry1", "g2_ry2"]


def test_sign_ansatz_j1j2_parameter_count():
    h = build_j1j2_1d(6)
    ans = build_sign_ansatz(6, h.interaction_edges(), 1)
    assert ans.n_params == 21


def test_two_layers_have_disjoint_w_parameters():
    ans = build_sign_ansatz(3, [(0, 1), (1, 2)], 2)
    assert len(ans.w_names(2)) == len(ans.w_names(1)) == 5
    assert not set(ans.w_names(1)) & set(ans.w_names(2))
    assert ans.n_params == 2 * 5 + 2 * 3


def test_first_block_is_hadamard_and_zero_params_give_plus_state():
    ans = build_sign_ansatz(3, [(0, 1)], 1)
    np.testing.assert_allclose(ans.circuit().simulate().amps, np.full(8, 1 / math.sqrt(8)), atol=1e-14)


def test_validate_rejects_non_diagonal_w():
    ans = build_sign_ansatz(2, [(0, 1)], 1)
    g, _ = ans.layers[0]
    bad = SignAnsatz(2, ans.edges, [(g, Circuit(2, [GateOp("Ry", (0,), "x")]))], ans.trailing)
    with pytest.raises(ValueError):
        bad.validate()


def test_with_params_rejects_unknown_names():
    ans = build_sign_ansatz(2, [(0, 1)], 1)
    with pytest.raises(KeyError):
        ans.with_params({"nope": 1.0})


def test_invalid_edges_rejected():
    with pytest.raises(ValueError):
        build_sign_ansatz(3, [(0, 3)], 1)
    with pytest.raises(ValueError):
        build_sign_ansatz(3, [(1, 1)], 1)


def test_sign_ansatz_json_roundtrip():
    ans = build_sign_ansatz(3, [(0, 1), (1, 2)], 2)
    ans = ans.with_params(init_params(list(ans.params), np.random.default_rng(0)))
    back = SignAnsatz.from_dict(ans.to_dict())
    np.testing.assert_allclose(back.circuit().simulate().amps, ans.circuit().simulate().amps)


def test_diagonal_phases_match_dense_unitary():
    ans = build_sign_ansatz(3, [(0, 1), (0, 2)], 1)
    ans = ans.with_params(init_params(ans.w_names(1), np.random.default_rng(4)))
    w = ans.w_block(1)
    u = dense_unitary(w.bound_gates(), 3)
    np.testing.assert_allclose(np.diag(u), diagonal_phases(w), atol=1e-12)
    names, scales, rows = diagonal_generators(w)
    theta = np.array([w.params[k] for k in names])
    np.testing.assert_allclose(np.exp(-0.5j * (scales * theta) @ rows), np.diag(u), atol=1e-12)


def test_hea_counts():
    c = build_hea(3, 1)
    assert c.n_params == 12
    assert c.count("CNOT") == 2
    assert build_hea(6, 2).n_params == 36
    assert build_hea(4, 0).n_params == 8
    with pytest.raises(ValueError):
        build_hea(3, -1)


def test_qaoa_layers_and_cost_check():
    h = Hamiltonian(3, [(1.0, PauliString("ZZI")), (0.5, PauliString("IZZ"))])
    assert build_qaoa(h, 5).n_params == 10
    with pytest.raises(ValueError):
        build_qaoa(build_tfim_1d(3), 1)


def test_qaoa_single_qubit_reaches_minus_one():
    h = Hamiltonian(1, [(1.0, PauliString("Z"))])
    circ = build_qaoa(h, 1)

    def energy(x):
        return h.expectation(circ.bind({"gamma1": x[0], "beta1": x[1]}).simulate().amps)

    # grid oracle over one period of both angles
    grid = np.linspace(-np.pi, np.pi, 61)
    best = min((energy((a, b)), a, b) for a in grid for b in grid)
    res = minimize(energy, [best[1], best[2]], method="BFGS")
    assert res.fun == pytest.approx(-1.0, abs=1e-6)


def test_brickwork_structure():
    c = build_brickwork(4, 2)
    assert c.n_params == 8
    cz = [op.targets for op in c.ops if op.kind == "CZ"]
    assert cz == [(0, 1), (2, 3), (1, 2)]
    assert default_brickwork_depth(45) == 7
    one = build_brickwork(4, 1)
    assert one.count("Ry") == 4 and one.count("CZ") == 2


def test_circuit_json_roundtrip():
    c = build_hea(3, 1).bind(init_params(build_hea(3, 1).parameter_names, np.random.default_rng(2)))
    back = Circuit.from_json(c.to_json())
    np.testing.assert_allclose(back.simulate().amps, c.simulate().amps)
