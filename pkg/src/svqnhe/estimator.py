"""Hybrid energy estimation, measurement plans and gradients.

The hybrid state is ``|phi> = F|psi>`` with ``F = diag(f)``; every estimator
targets ``<phi|H|phi> / <phi|phi>``.

Sampled estimators reduce to *bilinear forms* in the amplitudes: a quantity
``Q = mean_j w_j f(a_j) f(b_j)`` over the samples of one measurement basis.
Energies, their jackknife errors and their gradients with respect to the
network all follow from that representation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .ansatz import Circuit, GateOp, SignAnsatz, decompose_native
from .neural import AmplitudeModel
from .pauli import Hamiltonian, PauliString, parity
from .qsim import NoiseSpec, Statevector, apply_matrix, bitstrings, run_noisy_trajectories, sample_indices

MODES = ("exact", "sampled_amplitude", "shot_protocol")
N_JACKKNIFE_BLOCKS = 20


@dataclass
class EnergyEstimate:
    value: float
    std_error: float = 0.0
    n_shots_used: int = 0
    mode: str = "exact"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "exact" and self.std_error != 0.0:
            raise ValueError("exact estimates carry no statistical error")


def _amps(state) -> np.ndarray:
    return state.amps if isinstance(state, Statevector) else np.asarray(state, dtype=complex)


def all_amplitudes(model: AmplitudeModel, n: int) -> np.ndarray:
    return model.forward(bitstrings(n))


# -- exact mode ---------------------------------------------------------------


def hybrid_energy_exact(state, model: AmplitudeModel | None, h: Hamiltonian) -> EnergyEstimate:
    """``<psi|F H F|psi> / <psi|F F|psi>`` by direct statevector arithmetic.

    ``model=None`` means ``F`` is the identity.
    """
    psi = _amps(state)
    if psi.size != 2**h.n_qubits:
        raise ValueError("state and Hamiltonian dimensions differ")
    phi = psi if model is None else all_amplitudes(model, h.n_qubits) * psi
    den = np.vdot(phi, phi).real
    if den <= 1e-300:
        raise ZeroDivisionError("hybrid state has zero norm")
    return EnergyEstimate(float(np.vdot(phi, h.apply(phi)).real / den))


def exact_hybrid_gradients(
    state, model: AmplitudeModel | None, h: Hamiltonian, zrows: np.ndarray | None = None, scales: np.ndarray | None = None
) -> tuple[float, np.ndarray | None, np.ndarray]:
    """Energy, ``dE/dw`` over the model and ``dE/dtheta`` over trailing diagonal rotations.

    With ``phi = f * a``: ``dE/d|f|(s) = 2 Re(conj(u_s a_s) (H phi)_s)/D - 2 |f_s| |a_s|^2 E / D``
    where ``u_s`` is the unit phase of ``f``; the phase head gets
    ``dE/dphi_s = 2 Im(conj(phi_s) (H phi)_s) / D``. A rotation
    ``exp(-i/2 scale theta Z_row)`` at the end of the circuit commutes with
    ``F``, so ``dE/dtheta = scale * Im(<H phi| Z_row phi>) / D``.
    """
    psi = _amps(state)
    n = h.n_qubits
    bits = bitstrings(n)
    f = np.ones(2**n) if model is None else model.forward(bits)
    phi = f * psi
    hphi = h.apply(phi)
    den = np.vdot(phi, phi).real
    if den <= 1e-300:
        raise ZeroDivisionError("hybrid state has zero norm")
    e = float(np.vdot(phi, hphi).real / den)
    wgrad = np.zeros(0)
    if zrows is not None and len(zrows):
        wgrad = np.asarray(scales) * (zrows @ np.imag(np.conj(hphi) * phi)) / den
    if model is None:
        return e, None, wgrad
    r = np.abs(f)
    unit = np.where(r > 0, f / np.where(r > 0, r, 1.0), 1.0)
    up_r = (2.0 * np.real(np.conj(unit * psi) * hphi) - 2.0 * r * np.abs(psi) ** 2 * e) / den
    up_phi = 2.0 * np.imag(np.conj(phi) * hphi) / den if model.output_mode == "complex" else None
    return e, model.backward(bits, up_r, up_phi), wgrad


def nn_gradient_exact(state, model: AmplitudeModel, h: Hamiltonian) -> tuple[float, np.ndarray]:
    """Energy and ``dE/dw`` over the model parameters (see :func:`exact_hybrid_gradients`)."""
    e, g, _ = exact_hybrid_gradients(state, model, h)
    return e, g


def hybrid_expectations_exact(state, model: AmplitudeModel | None, strings: Sequence[PauliString]) -> np.ndarray:
    """``<phi|S|phi>/<phi|phi>`` for each string."""
    psi = _amps(state)
    n = int(round(math.log2(psi.size)))
    phi = psi if model is None else model.forward(bitstrings(n)) * psi
    den = np.vdot(phi, phi).real
    return np.array([np.vdot(phi, p.apply(phi)).real / den for p in strings])


def plain_energy_gradient(amps: np.ndarray, h: Hamiltonian) -> tuple[float, np.ndarray]:
    """Rayleigh quotient of a real amplitude vector and ``dE/da``."""
    ha = h.apply(amps)
    den = float(np.vdot(amps, amps).real)
    e = float(np.vdot(amps, ha).real / den)
    return e, 2.0 * (np.real(ha) - e * np.real(amps)) / den


# -- gradients over circuit parameters ---------------------------------------


def param_shift_gradient(energy_fn: Callable[[dict], float], params: dict[str, float], which: Sequence[str]) -> np.ndarray:
    """``dE/dtheta = (E(theta + pi/2) - E(theta - pi/2)) / 2`` for each named parameter.

    Every named parameter must enter through a single half-angle rotation.
    """
    grads = np.zeros(len(which))
    for i, name in enumerate(which):
        if name not in params:
            raise KeyError(f"unknown parameter {name!r}")
        plus, minus = dict(params), dict(params)
        plus[name] += math.pi / 2
        minus[name] -= math.pi / 2
        grads[i] = 0.5 * (energy_fn(plus) - energy_fn(minus))
    return grads


_GENERATORS = {
    "Rx": np.array([[0, 1], [1, 0]], dtype=complex),
    "Ry": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Rz": np.diag([1.0 + 0j, -1.0]),
    "Rzz": np.diag([1.0 + 0j, -1.0, -1.0, 1.0]),
}


def adjoint_gradient(circuit: Circuit, h: Hamiltonian, initial=None) -> tuple[float, dict[str, float]]:
    """``<psi|H|psi>`` and its exact gradient by reverse-mode (adjoint) differentiation."""
    n = circuit.n_qubits
    gates = circuit.bound_gates()
    psi = circuit.simulate(initial).amps
    lam = h.apply(psi)
    energy = float(np.vdot(psi, lam).real)
    grads = {name: 0.0 for name in circuit.parameter_names}
    for op, g in zip(reversed(circuit.ops), reversed(gates)):
        if op.param is not None:
            gpsi = apply_matrix(psi, _GENERATORS[op.kind], g.targets, n)
            grads[op.param] += op.scale * float(np.vdot(lam, gpsi).imag)
        udag = g.matrix.conj().T
        psi = apply_matrix(psi, udag, g.targets, n)
        lam = apply_matrix(lam, udag, g.targets, n)
    return energy, grads


def shifted_strings(term: PauliString, generator: PauliString) -> PauliString | None:
    """``L = W^dag(pi/2) P W(pi/2) - W^dag(-pi/2) P W(-pi/2)`` halves to ``-i P G``.

    Returns the Hermitian string ``-i P G`` or ``None`` when ``P`` and ``G``
    commute (the parameter then has no effect on this term).
    """
    if term.commutes(generator):
        return None
    return (term * generator).scaled(-1j)


def rotation_generator(op: GateOp, n: int) -> PauliString:
    if op.kind == "Rz":
        return PauliString.single(n, op.targets[0], "Z")
    if op.kind == "Rzz":
        a, b = op.targets
        return PauliString.on(n, {a: "Z", b: "Z"})
    raise ValueError(f"{op.kind} is not a diagonal rotation")


# -- measurement plan ----------------------------------------------------------


def basis_key(p: PauliString) -> tuple[int, int]:
    """Gadget circuit needed for ``p``: (flip mask, Y-count mod 4); ``(0, 0)`` is the computational basis."""
    if p.is_diagonal:
        return (0, 0)
    return (p.x, p.n_y % 4)


@dataclass
class MeasurementBasis:
    """Pair-merging gadget for one flip set.

    CNOT from the pivot (lowest qubit of the flip set) onto the rest of the
    set maps each pair ``(r, r ^ flip)`` onto ``r`` and ``r`` with the pivot
    set; a phase ``(-i)^phase_power`` on the pivot followed by H turns the
    pivot outcome into ``Re(i^q conj(psi_{r^flip}) psi_r)``.
    """

    n_qubits: int
    flip_mask: int
    phase_power: int
    terms: list[str] = field(default_factory=list)
    shifted: list[str] = field(default_factory=list)

    @property
    def is_computational(self) -> bool:
        return self.flip_mask == 0

    @property
    def pivot(self) -> int | None:
        if self.is_computational:
            return None
        return self.n_qubits - self.flip_mask.bit_length()

    @property
    def flip_qubits(self) -> list[int]:
        n = self.n_qubits
        return [q for q in range(n) if (self.flip_mask >> (n - 1 - q)) & 1]

    def gadget(self) -> Circuit:
        if self.is_computational:
            return Circuit(self.n_qubits)
        p = self.pivot
        ops = [GateOp("CNOT", (p, q)) for q in self.flip_qubits if q != p]
        ops += {0: [], 1: [GateOp("Sdg", (p,))], 2: [GateOp("Z", (p,))], 3: [GateOp("S", (p,))]}[self.phase_power]
        ops.append(GateOp("H", (p,)))
        return Circuit(self.n_qubits, ops)

    def to_dict(self) -> dict:
        word = "".join("F" if q in self.flip_qubits else "." for q in range(self.n_qubits))
        return {
            "flip": word,
            "pivot": self.pivot,
            "phase_power": self.phase_power,
            "terms": list(self.terms),
            "shifted": list(self.shifted),
        }


@dataclass
class MeasurementPlan:
    n_qubits: int
    bases: dict[tuple[int, int], MeasurementBasis]

    @property
    def circuit_count(self) -> int:
        return len(self.bases)

    def basis_for(self, p: PauliString) -> MeasurementBasis:
        return self.bases[basis_key(p)]

    def covers(self, p: PauliString) -> bool:
        return basis_key(p) in self.bases

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "circuit_count": self.circuit_count, "bases": [b.to_dict() for b in self.bases.values()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def w_generators(block: Circuit) -> list[tuple[str, float, PauliString]]:
    """``(parameter, scale, generator)`` for every parameterized gate of a diagonal block."""
    out = []
    for op in block.ops:
        if op.kind not in ("Z", "S", "Sdg", "CZ", "Rz", "Rzz"):
            raise ValueError(f"non-diagonal gate {op.kind} in W block")
        if op.param is not None:
            out.append((op.param, op.scale, rotation_generator(op, block.n_qubits)))
    return out


def build_measurement_plan(h: Hamiltonian, ansatz: SignAnsatz | Circuit | None = None, layer_index: int | None = None, keep_strings: bool = True) -> MeasurementPlan:
    """Bases for every term of ``h`` and every shifted string from the layer's W gates.

    ``ansatz`` may be a :class:`SignAnsatz` (with ``layer_index``), a bare
    diagonal W block, or ``None`` for energy-only plans. Strings that share a
    flip set and Y-count class share one gadget circuit; all diagonal strings
    and the normalization share the computational basis.
    """
    n = h.n_qubits
    bases: dict[tuple[int, int], MeasurementBasis] = {(0, 0): MeasurementBasis(n, 0, 0)}

    def add(p: PauliString, shifted: bool):
        key = basis_key(p)
        b = bases.get(key)
        if b is None:
            b = bases[key] = MeasurementBasis(n, key[0], key[1])
        if keep_strings:
            (b.shifted if shifted else b.terms).append(p.ops)

    for _, p in h.terms:
        add(p, False)
    if ansatz is not None:
        block = ansatz.w_block(layer_index or ansatz.n_layers) if isinstance(ansatz, SignAnsatz) else ansatz
        gens = w_generators(block)
        if keep_strings:
            for _, p in h.terms:
                for _, _, g in gens:
                    s = shifted_strings(p, g)
                    if s is not None:
                        add(s, True)
        else:
            for key in shifted_basis_keys([p for _, p in h.terms], [g.z for _, _, g in gens]):
                if key not in bases:
                    bases[key] = MeasurementBasis(n, key[0], key[1])
    return MeasurementPlan(n, bases)


def shifted_basis_keys(terms: Sequence[PauliString], generator_z: Sequence[int]) -> set[tuple[int, int]]:
    """Basis keys of every shifted string, by mask arithmetic alone.

    The shifted string of a term and a diagonal generator keeps the term's
    flip mask and toggles its z mask, so no string objects are built. Works
    at any qubit count, which keeps large plans countable.
    """
    keys = set()
    for p in terms:
        for z in generator_z:
            if (p.x & z).bit_count() % 2:
                keys.add((p.x, (p.x & (p.z ^ z)).bit_count() % 4))
    return keys


def plan_circuit_count(terms: Sequence[PauliString], generator_z: Sequence[int] = ()) -> int:
    """Number of distinct measurement circuits for ``terms`` plus their shifted strings."""
    keys = {(0, 0)} | {basis_key(p) for p in terms}
    return len(keys | shifted_basis_keys(terms, generator_z))


def qwc_groups(strings: Sequence[PauliString]) -> list[list[int]]:
    """Greedy qubit-wise-commuting grouping in input order; returns index groups."""
    groups: list[tuple[dict[int, str], list[int]]] = []
    for i, p in enumerate(strings):
        ops = {q: c for q, c in enumerate(p.ops) if c != "I"}
        for basis, members in groups:
            if all(basis.get(q, c) == c for q, c in ops.items()):
                basis.update(ops)
                members.append(i)
                break
        else:
            groups.append((dict(ops), [i]))
    return [m for _, m in groups]


# -- sampling -------------------------------------------------------------------


@dataclass
class Bilinear:
    """``Q = (1/N) sum_j w_j f(a_j) f(b_j)`` over ``N`` samples split into jackknife blocks."""

    a: np.ndarray
    b: np.ndarray
    w: np.ndarray
    block: np.ndarray

    @property
    def n(self) -> int:
        return self.a.size


@dataclass
class SampleBatch:
    """Samples backing one estimate.

    ``kind="amplitude"``: ``samples`` are basis indices drawn from ``|psi|^2``
    and ``psi`` is kept for amplitude ratios. ``kind="shots"``: one outcome
    array per gadget basis of ``plan``.
    """

    n_qubits: int
    kind: str
    seed: int | None
    samples: np.ndarray | None = None
    psi: np.ndarray | None = None
    outcomes: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    plan: MeasurementPlan | None = None

    @property
    def n_shots(self) -> int:
        if self.kind == "amplitude":
            return int(self.samples.size)
        return int(sum(o.size for o in self.outcomes.values()))

    def f_values(self, model: AmplitudeModel) -> np.ndarray:
        """Amplitudes ``f(s)`` of the computational-basis samples."""
        s = self.samples if self.kind == "amplitude" else self.outcomes[(0, 0)]
        return model.forward(bitstrings(self.n_qubits)[s])


def _blocks(n: int) -> np.ndarray:
    return (np.arange(n) * N_JACKKNIFE_BLOCKS) // max(n, 1)


def sample_amplitude_batch(state, n_s: int, seed) -> SampleBatch:
    psi = _amps(state)
    n = int(round(math.log2(psi.size)))
    rng = np.random.default_rng(seed)
    idx = sample_indices(np.abs(psi) ** 2, n_s, rng)
    return SampleBatch(n, "amplitude", seed if isinstance(seed, (int, np.integer)) else None, samples=idx, psi=psi)


def _basis_circuit(circuit: Circuit, basis: MeasurementBasis, native: bool) -> Circuit:
    c = circuit + basis.gadget()
    return decompose_native(c) if native else c


def sample_shot_batch(circuit: Circuit, plan: MeasurementPlan, shots_per_basis: int, noise: NoiseSpec | None = None, seed=None) -> SampleBatch:
    """Run every basis circuit of ``plan`` for ``shots_per_basis`` shots.

    Without noise the outcome distribution is read off the final state; with
    noise each shot is its own Monte-Carlo trajectory of the native-gate circuit.
    """
    if shots_per_basis < 1:
        raise ValueError("need at least one shot per basis")
    noise = noise or NoiseSpec()
    rng = np.random.default_rng(seed)
    n = circuit.n_qubits
    outcomes = {}
    base = None if not noise.is_noiseless else circuit.simulate()
    for key, basis in plan.bases.items():
        if noise.is_noiseless:
            final = basis.gadget().simulate(base).amps
            outcomes[key] = sample_indices(np.abs(final) ** 2, shots_per_basis, rng)
        else:
            traj = run_noisy_trajectories(_basis_circuit(circuit, basis, True), noise, shots_per_basis, rng)
            probs = np.abs(traj) ** 2
            cdf = np.cumsum(probs, axis=1)
            u = rng.random(shots_per_basis) * cdf[:, -1]
            outcomes[key] = np.minimum((cdf < u[:, None]).sum(axis=1), 2**n - 1)
    return SampleBatch(n, "shots", seed if isinstance(seed, (int, np.integer)) else None, outcomes=outcomes, plan=plan)


def _bilinears(batch: SampleBatch, strings: Sequence[tuple[float, PauliString]]) -> list[Bilinear]:
    """Bilinear forms whose sum estimates ``sum_i c_i <phi|S_i|phi>``."""
    n = batch.n_qubits
    if batch.kind == "amplitude":
        s = batch.samples
        psi = batch.psi
        w = np.zeros(s.size)
        groups: dict[int, np.ndarray] = {}
        for c, p in strings:
            t = s ^ p.x
            fac = p.basis_factors()[t] * psi[t] / psi[s]
            groups.setdefault(p.x, np.zeros(s.size))
            groups[p.x] += c * fac.real
        blk = _blocks(s.size)
        return [Bilinear(s, s ^ x, wx, blk) for x, wx in groups.items()]
    forms = {}
    for c, p in strings:
        key = basis_key(p)
        if key not in batch.outcomes:
            raise KeyError(f"no measurement basis covers {p.ops}")
        m = batch.outcomes[key]
        if key == (0, 0):
            wv = c * p.phase.real * (1.0 - 2.0 * parity(m & p.z))
            a = b = m
        else:
            pivot_bit = 1 << (p.x.bit_length() - 1)
            r = m & ~pivot_bit
            sigma = np.where(m & pivot_bit, -1.0, 1.0)
            wv = c * p.phase.real * sigma * (1.0 - 2.0 * parity(r & p.z))
            a, b = r, r ^ p.x
        if key in forms:
            forms[key][2] += wv
        else:
            forms[key] = [a, b, wv]
    return [Bilinear(a, b, w, _blocks(a.size)) for a, b, w in forms.values()]


def _denominator(batch: SampleBatch) -> Bilinear:
    s = batch.samples if batch.kind == "amplitude" else batch.outcomes[(0, 0)]
    return Bilinear(s, s, np.ones(s.size), _blocks(s.size))


def _f_table(batch: SampleBatch, model: AmplitudeModel | None) -> np.ndarray:
    """``f`` over every basis index (cheap for the simulated sizes, and shared by all forms)."""
    if model is None:
        return np.ones(2**batch.n_qubits)
    f = model.forward(bitstrings(batch.n_qubits))
    if np.iscomplexobj(f):
        raise ValueError("sampled estimators require a real amplitude model")
    return f


def _block_sums(form: Bilinear, f: np.ndarray) -> np.ndarray:
    vals = form.w * f[form.a] * f[form.b]
    return np.bincount(form.block, weights=vals, minlength=N_JACKKNIFE_BLOCKS)


def _block_counts(form: Bilinear) -> np.ndarray:
    return np.bincount(form.block, minlength=N_JACKKNIFE_BLOCKS).astype(float)


def _ratio_with_jackknife(num_forms: list[Bilinear], den: Bilinear, f: np.ndarray) -> tuple[float, float, float]:
    """Ratio of summed form means over the denominator mean, with jackknife std error."""
    num_full, num_loo = 0.0, np.zeros(N_JACKKNIFE_BLOCKS)
    for form in num_forms:
        s, c = _block_sums(form, f), _block_counts(form)
        num_full += s.sum() / c.sum()
        num_loo += (s.sum() - s) / np.maximum(c.sum() - c, 1)
    s, c = _block_sums(den, f), _block_counts(den)
    den_full = s.sum() / c.sum()
    den_loo = (s.sum() - s) / np.maximum(c.sum() - c, 1)
    if den_full < 1e-12:
        raise ZeroDivisionError(f"normalization estimate {den_full:.3e} below 1e-12")
    est = num_full / den_full
    loo = num_loo / den_loo
    b = N_JACKKNIFE_BLOCKS
    err = math.sqrt((b - 1) / b * np.sum((loo - loo.mean()) ** 2))
    return float(est), float(err), float(den_full)


def _form_upstream(forms: list[Bilinear], f: np.ndarray, scale: float, out: np.ndarray) -> None:
    for form in forms:
        k = scale / form.n
        np.add.at(out, form.a, k * form.w * f[form.b])
        np.add.at(out, form.b, k * form.w * f[form.a])


def sampled_energy_and_gradients(
    batch: SampleBatch,
    model: AmplitudeModel | None,
    h: Hamiltonian,
    generators: Sequence[tuple[str, float, PauliString]] = (),
    want_nn_grad: bool = True,
) -> tuple[EnergyEstimate, np.ndarray | None, np.ndarray]:
    """Energy, network gradient and W-parameter gradient from one sample batch.

    W gradient: ``dE/dtheta_k = scale_k * sum_i c_i <F L_ik F> / <F F>`` with
    ``L_ik = -i P_i G_k``; this is the shift rule with the shifted gate moved
    past the diagonal ``F`` to the end of the circuit.
    """
    n = h.n_qubits
    f = _f_table(batch, model)
    mode = "sampled_amplitude" if batch.kind == "amplitude" else "shot_protocol"
    num_forms = _bilinears(batch, h.terms)
    den = _denominator(batch)
    e, err, d = _ratio_with_jackknife(num_forms, den, f)
    wgrad = np.zeros(len(generators))
    for k, (_, scale, g) in enumerate(generators):
        strings = [(c, s) for c, p in h.terms if (s := shifted_strings(p, g)) is not None]
        if strings:
            forms = _bilinears(batch, strings)
            wgrad[k] = scale * sum(_block_sums(fm, f).sum() / fm.n for fm in forms) / d
    nn_grad = None
    if want_nn_grad and model is not None:
        up = np.zeros(2**n)
        _form_upstream(num_forms, f, 1.0 / d, up)
        _form_upstream([den], f, -e / d, up)
        nz = np.nonzero(up)[0]
        nn_grad = model.backward(bitstrings(n)[nz], up[nz]) if nz.size else np.zeros(model.n_params)
    return EnergyEstimate(e, err, batch.n_shots, mode), nn_grad, wgrad


def hybrid_expectations_sampled(batch: SampleBatch, model: AmplitudeModel | None, strings: Sequence[PauliString]) -> np.ndarray:
    """``<phi|S|phi>/<phi|phi>`` for each string, from one batch."""
    f = _f_table(batch, model)
    den = _denominator(batch)
    d = _block_sums(den, f).sum() / den.n
    out = np.zeros(len(strings))
    for i, p in enumerate(strings):
        out[i] = sum(_block_sums(fm, f).sum() / fm.n for fm in _bilinears(batch, [(1.0, p)])) / d
    return out


def hybrid_energy_sampled(state, model: AmplitudeModel | None, h: Hamiltonian, n_s: int, seed=None) -> EnergyEstimate:
    """Draw ``s ~ |psi|^2`` and average local values; amplitude ratios come from the simulator."""
    if n_s < 100:
        raise ValueError(f"n_s must be at least 100, got {n_s}")
    batch = sample_amplitude_batch(state, n_s, seed)
    est, _, _ = sampled_energy_and_gradients(batch, model, h, want_nn_grad=False)
    return est


def hybrid_energy_shots(
    circuit: Circuit,
    model: AmplitudeModel | None,
    h: Hamiltonian,
    shots_per_basis: int,
    noise: NoiseSpec | None = None,
    seed=None,
    plan: MeasurementPlan | None = None,
) -> EnergyEstimate:
    """Hardware-style estimate using only measured bitstrings and ``f`` evaluations."""
    plan = plan or build_measurement_plan(h)
    batch = sample_shot_batch(circuit, plan, shots_per_basis, noise, seed)
    for key, o in batch.outcomes.items():
        if o.size == 0:
            raise ValueError(f"empty sample set for basis {key}")
    est, _, _ = sampled_energy_and_gradients(batch, model, h, want_nn_grad=False)
    return est


def nn_gradient_of_energy(state_or_samples, model: AmplitudeModel, h: Hamiltonian) -> np.ndarray:
    """Exact gradient for a statevector; empirical-functional gradient for a :class:`SampleBatch`."""
    if isinstance(state_or_samples, SampleBatch):
        _, g, _ = sampled_energy_and_gradients(state_or_samples, model, h)
        return g
    return nn_gradient_exact(state_or_samples, model, h)[1]


# -- plain (no-F) shot estimation for VQE baselines ------------------------------


def _rotation_ops(basis: dict[int, str]) -> list[GateOp]:
    ops = []
    for q, c in sorted(basis.items()):
        if c == "X":
            ops.append(GateOp("H", (q,)))
        elif c == "Y":
            ops += [GateOp("Sdg", (q,)), GateOp("H", (q,))]
    return ops


def qwc_expectations_shots(circuit: Circuit, strings: Sequence[PauliString], shots_per_group: int, noise: NoiseSpec | None = None, rng=None) -> tuple[np.ndarray, np.ndarray, int]:
    """Expectation of each string measured in greedy qubit-wise-commuting groups.

    Returns (means, standard errors, number of circuits).
    """
    rng = np.random.default_rng(rng)
    noise = noise or NoiseSpec()
    n = circuit.n_qubits
    means, errs = np.zeros(len(strings)), np.zeros(len(strings))
    groups = qwc_groups(strings)
    base = circuit.simulate() if noise.is_noiseless else None
    for members in groups:
        basis = {}
        for i in members:
            basis.update({q: c for q, c in enumerate(strings[i].ops) if c != "I"})
        rot = Circuit(n, _rotation_ops(basis))
        if noise.is_noiseless:
            probs = np.abs(rot.simulate(base).amps) ** 2
            m = sample_indices(probs, shots_per_group, rng)
        else:
            traj = run_noisy_trajectories(decompose_native(circuit + rot), noise, shots_per_group, rng)
            cdf = np.cumsum(np.abs(traj) ** 2, axis=1)
            u = rng.random(shots_per_group) * cdf[:, -1]
            m = np.minimum((cdf < u[:, None]).sum(axis=1), 2**n - 1)
        for i in members:
            p = strings[i]
            v = p.phase.real * (1.0 - 2.0 * parity(m & (p.x | p.z)))
            means[i] = v.mean()
            errs[i] = v.std() / math.sqrt(v.size)
    return means, errs, len(groups)


def vqe_energy_shots(circuit: Circuit, h: Hamiltonian, shots_per_group: int, noise=None, rng=None) -> tuple[EnergyEstimate, int]:
    strings = [p for _, p in h.terms]
    coeffs = np.array([c for c, _ in h.terms])
    means, errs, n_circ = qwc_expectations_shots(circuit, strings, shots_per_group, noise, rng)
    value = float(coeffs @ means)
    err = float(math.sqrt(np.sum((coeffs * errs) ** 2)))
    return EnergyEstimate(value, err, n_circ * shots_per_group, "shot_protocol"), n_circ


# -- statistics ---------------------------------------------------------------------


def cv_statistic(series: Sequence[float]) -> float:
    """Coefficient of variation ``std / |mean|`` with the population std."""
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two entries")
    mean = x.mean()
    if mean == 0.0:
        raise ZeroDivisionError("coefficient of variation undefined for zero mean")
    return float(x.std() / abs(mean))
