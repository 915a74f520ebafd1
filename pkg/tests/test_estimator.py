import math

import numpy as np
import pytest

from oracles import dense_hamiltonian, dense_unitary, finite_difference, hybrid_rayleigh, pauli_matrix
from svqnhe.ansatz import Circuit, GateOp, build_hea, build_sign_ansatz, diagonal_generators, init_params
from svqnhe.estimator import (
    EnergyEstimate,
    adjoint_gradient,
    build_measurement_plan,
    cv_statistic,
    exact_hybrid_gradients,
    hybrid_energy_exact,
    hybrid_energy_sampled,
    hybrid_energy_shots,
    hybrid_expectations_exact,
    hybrid_expectations_sampled,
    nn_gradient_exact,
    nn_gradient_of_energy,
    param_shift_gradient,
    plan_circuit_count,
    qwc_groups,
    sample_amplitude_batch,
    sample_shot_batch,
    sampled_energy_and_gradients,
    shifted_strings,
    vqe_energy_shots,
    w_generators,
)
from svqnhe.neural import AmplitudeModel
from svqnhe.pauli import Hamiltonian, PauliString, build_heisenberg_2d, build_ising_1d, build_j1j2_1d
from svqnhe.qsim import Statevector, bitstrings


def random_hamiltonian(n, m, rng):
    words = ["".join(rng.choice(list("IXYZ"), n)) for _ in range(m)]
    return Hamiltonian(n, [(float(rng.normal()), PauliString(w)) for w in words])


def heisenberg_setup(seed=1, layers=1):
    h = build_heisenberg_2d(1, 3, 1.0, 1.0)
    ans = build_sign_ansatz(3, h.interaction_edges(), layers)
    ans = ans.with_params(init_params(list(ans.params), np.random.default_rng(seed)))
    return h, ans, AmplitudeModel(3, seed=seed + 1)


# -- exact mode -----------------------------------------------------------------


def test_identity_model_is_plain_expectation():
    rng = np.random.default_rng(0)
    h = random_hamiltonian(3, 5, rng)
    psi = Statevector.haar_random(3, rng)
    plain = sum(c * np.vdot(psi.amps, pauli_matrix(p.ops) @ psi.amps).real for c, p in h.terms)
    assert hybrid_energy_exact(psi, None, h).value == pytest.approx(plain, abs=1e-12)


def test_constant_model_is_scale_invariant():
    rng = np.random.default_rng(1)
    h = random_hamiltonian(3, 5, rng)
    psi = Statevector.haar_random(3, rng)
    m = AmplitudeModel(3, (2,), seed=0)
    m.set_flat(np.zeros(m.n_params))
    assert hybrid_energy_exact(psi, m, h).value == pytest.approx(hybrid_energy_exact(psi, None, h).value, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_hybrid_energy_matches_dense_rayleigh(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    h = random_hamiltonian(n, 5, rng)
    psi = Statevector.haar_random(n, rng)
    m = AmplitudeModel(n, seed=seed, output_mode="complex" if seed % 2 else "nonneg")
    m.set_flat(rng.normal(size=m.n_params))
    expected = hybrid_rayleigh(psi.amps, m.forward(bitstrings(n)), dense_hamiltonian(h))
    assert abs(hybrid_energy_exact(psi, m, h).value - expected) < 1e-10


def test_exact_estimate_has_no_error_bar():
    with pytest.raises(ValueError):
        EnergyEstimate(1.0, 0.1, 0, "exact")


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        hybrid_energy_exact(Statevector.zero(2), None, build_ising_1d(3))


# -- sampled modes ---------------------------------------------------------------


def test_sampled_amplitude_converges_to_exact():
    h, ans, m = heisenberg_setup()
    psi = ans.circuit(trailing=True).simulate()
    exact = hybrid_energy_exact(psi, m, h).value
    est = hybrid_energy_sampled(psi, m, h, 10**5, seed=3)
    assert abs(est.value - exact) < 5 * est.std_error
    assert est.mode == "sampled_amplitude" and est.n_shots_used == 10**5


def test_sampled_identity_model_is_standard_estimation():
    h, ans, _ = heisenberg_setup()
    psi = ans.circuit(trailing=True).simulate()
    est = hybrid_energy_sampled(psi, None, h, 10**5, seed=4)
    assert abs(est.value - h.expectation(psi.amps)) < 5 * est.std_error


def test_sampled_is_deterministic():
    h, ans, m = heisenberg_setup()
    psi = ans.circuit(trailing=True).simulate()
    a = hybrid_energy_sampled(psi, m, h, 1000, seed=5)
    b = hybrid_energy_sampled(psi, m, h, 1000, seed=5)
    assert a.value == b.value and a.std_error == b.std_error


def test_sampled_rejects_tiny_sample():
    h, ans, m = heisenberg_setup()
    with pytest.raises(ValueError):
        hybrid_energy_sampled(ans.circuit().simulate(), m, h, 10, seed=0)


def test_shots_diagonal_uses_only_computational_basis():
    h = build_ising_1d(3, 1.0, 0.4)
    _, ans, m = heisenberg_setup()
    circ = ans.circuit(trailing=True)
    plan = build_measurement_plan(h)
    assert plan.circuit_count == 1
    est = hybrid_energy_shots(circ, m, h, 20000, seed=1, plan=plan)
    exact = hybrid_energy_exact(circ.simulate(), m, h).value
    assert abs(est.value - exact) < 5 * est.std_error


def test_shots_single_x_on_plus():
    h = Hamiltonian(1, [(1.0, PauliString("X"))])
    circ = Circuit(1, [GateOp("H", (0,))])
    est = hybrid_energy_shots(circ, None, h, 1000, seed=0)
    assert est.value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_shots_heisenberg_converges_to_exact(seed):
    h, ans, m = heisenberg_setup(seed)
    circ = ans.circuit(trailing=True)
    est = hybrid_energy_shots(circ, m, h, 10**5, seed=seed)
    exact = hybrid_energy_exact(circ.simulate(), m, h).value
    assert abs(est.value - exact) < 5 * est.std_error


@pytest.mark.parametrize("seed", [0, 1])
def test_shots_with_y_strings_converge_to_exact(seed):
    rng = np.random.default_rng(seed + 10)
    h = Hamiltonian(3, [(float(rng.normal()), PauliString(w)) for w in ["XYZ", "YYI", "IYX", "YIY", "ZXI", "XXX"]])
    _, ans, m = heisenberg_setup(seed)
    circ = ans.circuit(trailing=True)
    est = hybrid_energy_shots(circ, m, h, 10**5, seed=seed)
    exact = hybrid_energy_exact(circ.simulate(), m, h).value
    assert abs(est.value - exact) < 5 * est.std_error


def test_hybrid_expectations_sampled_match_exact():
    h, ans, m = heisenberg_setup(2)
    circ = ans.circuit(upto=1)
    strings = [p for _, p in h.terms]
    batch = sample_shot_batch(circ, build_measurement_plan(h), 10**5, seed=6)
    got = hybrid_expectations_sampled(batch, m, strings)
    exact = hybrid_expectations_exact(circ.simulate(), m, strings)
    np.testing.assert_allclose(got, exact, atol=0.03)


# -- measurement plans -------------------------------------------------------------


def test_j1j2_plan_has_28_circuits():
    h = build_j1j2_1d(6, 1.0, 0.6)
    ans = build_sign_ansatz(6, h.interaction_edges(), 1)
    assert build_measurement_plan(h, ans, 1).circuit_count == 28
    assert build_measurement_plan(h, ans, 1, keep_strings=False).circuit_count == 28


def test_plan_covers_every_term_and_shifted_string():
    h, ans, _ = heisenberg_setup()
    plan = build_measurement_plan(h, ans, 1)
    gens = [g for _, _, g in w_generators(ans.w_block(1))]
    assert all(plan.covers(p) for _, p in h.terms)
    assert all(plan.covers(s) for _, p in h.terms for g in gens if (s := shifted_strings(p, g)) is not None)


def test_diagonal_everything_needs_one_circuit():
    h = build_ising_1d(4)
    ans = build_sign_ansatz(4, [(0, 1), (1, 2), (2, 3), (0, 3)], 1)
    assert build_measurement_plan(h, ans, 1).circuit_count == 1


def test_count_invariant_under_more_rzz():
    h = build_j1j2_1d(6)
    few = build_sign_ansatz(6, h.interaction_edges(), 1)
    full = build_sign_ansatz(6, [(a, b) for a in range(6) for b in range(a + 1, 6)], 1)
    assert build_measurement_plan(h, few, 1).circuit_count == build_measurement_plan(h, full, 1).circuit_count


def test_mask_count_matches_plan():
    h, ans, _ = heisenberg_setup()
    gz = [g.z for _, _, g in w_generators(ans.w_block(1))]
    assert plan_circuit_count([p for _, p in h.terms], gz) == build_measurement_plan(h, ans, 1).circuit_count


def conjugation_oracle(term, gen):
    """(W(pi/2)^dag P W(pi/2) - W(-pi/2)^dag P W(-pi/2)) / 2 with W(t) = exp(-i t G / 2)."""
    p, g = pauli_matrix(term.ops) * term.phase, pauli_matrix(gen.ops)
    d = len(p)

    def w(t):
        return math.cos(t / 2) * np.eye(d) - 1j * math.sin(t / 2) * g

    return (w(math.pi / 2).conj().T @ p @ w(math.pi / 2) - w(-math.pi / 2).conj().T @ p @ w(-math.pi / 2)) / 2


@pytest.mark.parametrize("term,gen", [("XX", "ZZ"), ("XX", "ZI"), ("XY", "IZ"), ("YZ", "ZI"), ("XIY", "ZIZ"), ("YYX", "IZZ")])
def test_shifted_string_matches_dense_conjugation(term, gen):
    t, g = PauliString(term), PauliString(gen)
    s = shifted_strings(t, g)
    oracle = conjugation_oracle(t, g)
    if s is None:
        assert np.allclose(oracle, 0)
    else:
        np.testing.assert_allclose(pauli_matrix(s.ops) * s.phase, oracle, atol=1e-12)


def test_xx_with_rzz_and_rz_plan():
    h = Hamiltonian(2, [(1.0, PauliString("XX"))])
    only_zz = Circuit(2, [GateOp("Rzz", (0, 1), "t")])
    assert build_measurement_plan(h, only_zz).circuit_count == 2
    with_z = Circuit(2, [GateOp("Rzz", (0, 1), "t"), GateOp("Rz", (0,), "u")])
    # the shifted string Y0 X1 from Rz on qubit 0 needs one extra gadget
    assert build_measurement_plan(h, with_z).circuit_count == 3


def test_w_generators_reject_non_diagonal():
    with pytest.raises(ValueError):
        w_generators(Circuit(1, [GateOp("Ry", (0,), "a")]))


# -- gradients -----------------------------------------------------------------------


def test_param_shift_on_single_rz():
    h = Hamiltonian(1, [(1.0, PauliString("X"))])
    circ = Circuit(1, [GateOp("H", (0,)), GateOp("Rz", (0,), "t")])

    def energy(p):
        return h.expectation(circ.bind(p).simulate().amps)

    for t in np.linspace(-3, 3, 7):
        assert energy({"t": t}) == pytest.approx(math.cos(t), abs=1e-12)
        assert param_shift_gradient(energy, {"t": t}, ["t"])[0] == pytest.approx(-math.sin(t), abs=1e-12)


def test_param_shift_commuting_gate_is_zero():
    h = build_ising_1d(2)
    circ = Circuit(2, [GateOp("Ry", (0,), "a"), GateOp("Rz", (1,), "b")])

    def energy(p):
        return h.expectation(circ.bind(p).simulate().amps)

    assert param_shift_gradient(energy, {"a": 0.3, "b": 1.1}, ["b"])[0] == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(KeyError):
        param_shift_gradient(energy, {"a": 0.3}, ["zz"])


@pytest.mark.parametrize("seed", range(5))
def test_w_gradient_matches_shift_rule_and_finite_differences(seed):
    h = build_j1j2_1d(4, 1.0, 0.6)
    ans = build_sign_ansatz(4, h.interaction_edges(), 1)
    rng = np.random.default_rng(seed)
    ans = ans.with_params(init_params(ans.w_names(1), rng))
    m = AmplitudeModel(4, seed=seed)
    names, scales, rows = diagonal_generators(ans.w_block(1))

    def energy(p):
        return hybrid_energy_exact(ans.with_params(p).circuit().simulate(), m, h).value

    _, _, wgrad = exact_hybrid_gradients(ans.circuit().simulate(), m, h, rows, scales)
    shift = param_shift_gradient(energy, ans.params, names)
    theta = np.array([ans.params[k] for k in names])
    fd = finite_difference(lambda x: energy(dict(zip(names, x))), theta)
    np.testing.assert_allclose(wgrad, shift, atol=1e-10)
    assert np.max(np.abs(shift - fd)) < 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_adjoint_gradient_matches_finite_differences(seed):
    h = build_heisenberg_2d(1, 3, 1.0, 1.0)
    circ = build_hea(3, 2)
    p = init_params(circ.parameter_names, np.random.default_rng(seed))
    e, g = adjoint_gradient(circ.bind(p), h)
    names = circ.parameter_names
    fd = finite_difference(lambda x: h.expectation(circ.bind(dict(zip(names, x))).simulate().amps), np.array([p[k] for k in names]))
    assert e == pytest.approx(h.expectation(circ.bind(p).simulate().amps))
    np.testing.assert_allclose([g[k] for k in names], fd, atol=1e-7)


def test_nn_gradient_vanishes_at_eigenstate():
    h = build_ising_1d(3, 1.0, 0.5)
    m = AmplitudeModel(3, seed=0)
    m.set_flat(np.zeros(m.n_params))
    g = nn_gradient_of_energy(Statevector.from_bitstring("000"), m, h)
    assert np.max(np.abs(g)) < 1e-14


@pytest.mark.parametrize("mode", ["nonneg", "complex"])
@pytest.mark.parametrize("seed", range(4))
def test_nn_gradient_matches_finite_differences(mode, seed):
    h, ans, _ = heisenberg_setup(seed)
    m = AmplitudeModel(3, seed=seed, output_mode=mode)
    rng = np.random.default_rng(seed)
    w0 = rng.normal(scale=0.5, size=m.n_params)
    m.set_flat(w0)
    psi = ans.circuit(trailing=True).simulate()

    def energy(w):
        m.set_flat(w)
        return hybrid_energy_exact(psi, m, h).value

    fd = finite_difference(energy, w0)
    m.set_flat(w0)
    _, g = nn_gradient_exact(psi, m, h)
    assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(fd)))


def test_sampled_nn_gradient_is_unbiased():
    h, ans, m = heisenberg_setup(3)
    psi = ans.circuit(trailing=True).simulate()
    exact = nn_gradient_of_energy(psi, m, h)
    draws = np.array([nn_gradient_of_energy(sample_amplitude_batch(psi, 4000, s), m, h) for s in range(50)])
    sem = draws.std(axis=0, ddof=1) / math.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - exact) < 5 * sem + 1e-3)


def test_sampled_w_gradient_matches_exact():
    h, ans, m = heisenberg_setup(4)
    block = ans.w_block(1)
    names, scales, rows = diagonal_generators(block)
    circ = ans.circuit(upto=1)
    _, _, exact = exact_hybrid_gradients(circ.simulate(), m, h, rows, scales)
    plan = build_measurement_plan(h, block)
    batch = sample_shot_batch(circ, plan, 10**5, seed=8)
    _, _, got = sampled_energy_and_gradients(batch, m, h, w_generators(block))
    np.testing.assert_allclose(got, exact, atol=0.05)


# -- plain VQE estimation and statistics ------------------------------------------------


def test_qwc_groups_are_compatible():
    strings = [PauliString(w) for w in ["XXI", "XIZ", "ZZI", "IZZ", "YIY", "XII"]]
    groups = qwc_groups(strings)
    assert sorted(i for g in groups for i in g) == list(range(len(strings)))
    for g in groups:
        for a in g:
            for b in g:
                assert all(x == "I" or y == "I" or x == y for x, y in zip(strings[a].ops, strings[b].ops))


def test_vqe_shot_energy_matches_exact():
    h = build_heisenberg_2d(1, 3, 1.0, 1.0)
    circ = build_hea(3, 1)
    circ = circ.bind(init_params(circ.parameter_names, np.random.default_rng(0)))
    est, n_circ = vqe_energy_shots(circ, h, 50000, rng=1)
    assert n_circ == 3
    assert abs(est.value - h.expectation(circ.simulate().amps)) < 5 * est.std_error


def test_cv_statistic():
    assert cv_statistic([2.0, 2.0, 2.0]) == 0.0
    assert cv_statistic([1.0, 3.0]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        cv_statistic([1.0])
    with pytest.raises(ZeroDivisionError):
        cv_statistic([-1.0, 1.0])
