"""Optimization loops, run configuration, traces and metrics.

Every run draws its randomness from named substreams of one integer seed,
so the circuit initialization, network initialization, sampling and
transfer can be reseeded independently.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .ansatz import (
    Circuit,
    GateOp,
    SignAnsatz,
    build_brickwork,
    build_hea,
    build_qaoa,
    build_sign_ansatz,
    default_brickwork_depth,
    diagonal_generators,
    init_params,
)
from .estimator import (
    EnergyEstimate,
    adjoint_gradient,
    build_measurement_plan,
    cv_statistic,
    exact_hybrid_gradients,
    hybrid_expectations_exact,
    hybrid_expectations_sampled,
    param_shift_gradient,
    plain_energy_gradient,
    qwc_expectations_shots,
    qwc_groups,
    sample_amplitude_batch,
    sample_shot_batch,
    sampled_energy_and_gradients,
    w_generators,
)
from .neural import Adam, AmplitudeModel
from .pauli import Graph, Hamiltonian, PauliString, brute_force_maxcut, build_model, ground_state, maxcut_encode
from .qsim import NoiseSpec, Statevector, bitstrings
from .transfer import TransferConfig, transfer_step

log = logging.getLogger(__name__)

SCHEMA_VERSION = "v1"
METHODS = ("svqnhe", "vqe", "layered_vqe", "nn", "qaoa")
MODES = ("exact", "sampled_amplitude", "shot_protocol")
ANSATZ_KINDS = ("sign", "hea", "brickwork", "qaoa")
STREAMS = {"circuit": 0, "nn": 1, "sampling": 2, "noise": 3, "transfer": 4}
SUCCESS_FRACTION = 0.9945


class ConfigError(ValueError):
    pass


class RunError(RuntimeError):
    pass


def substream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), STREAMS[name]])


# -- configuration -----------------------------------------------------------------


@dataclass
class RunConfig:
    """One experiment: a Hamiltonian, a method, an ansatz and optimizer settings.

    ``model`` is ``{"name": ..., "params": {...}}`` for :func:`pauli.build_model`.
    ``ansatz`` holds ``kind`` plus ``layers`` (sign), ``reps`` (hea), ``depth``
    (brickwork) or ``p`` (qaoa), and ``edges`` ("hamiltonian", "all" or a list)
    for the sign ansatz. ``shots`` is shots per basis in shot-protocol mode and
    the sample count in sampled-amplitude mode.
    """

    method: str = "svqnhe"
    model: dict = field(default_factory=lambda: {"name": "j1j2", "params": {"n": 6}})
    ansatz: dict = field(default_factory=lambda: {"kind": "sign", "layers": 1})
    mode: str = "exact"
    noise: dict = field(default_factory=lambda: {"p1": 0.0, "p2": 0.0})
    max_iter: int = 400
    eps_conv: float | None = None
    patience: int = 10
    seeds: list = field(default_factory=lambda: [0])
    nn: dict = field(default_factory=lambda: {"hidden": None, "lr": 0.01, "positive": "softplus"})
    circuit_lr: float = 0.05
    shots: int = 1000
    complex_last_layer: bool = False
    revisit_g: bool = False
    transfer: dict = field(default_factory=dict)
    label: str | None = None
    version: str = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config version {self.version!r}; expected {SCHEMA_VERSION!r}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.ansatz.get("kind", "sign") not in ANSATZ_KINDS:
            raise ConfigError(f"unknown ansatz kind {self.ansatz.get('kind')!r}")
        for name in ("max_iter", "patience", "shots"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.eps_conv is not None and not self.eps_conv > 0:
            raise ConfigError("eps_conv must be positive")
        if self.circuit_lr <= 0 or float(self.nn.get("lr", 0.01)) <= 0:
            raise ConfigError("learning rates must be positive")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if "name" not in self.model:
            raise ConfigError("model needs a 'name'")
        if self.method == "nn" and self.mode != "exact":
            raise ConfigError("the NN baseline is an exact Rayleigh-quotient method")
        if (self.complex_last_layer or self.revisit_g) and self.mode != "exact":
            raise ConfigError("complex_last_layer and revisit_g need exact mode")
        if self.method in ("svqnhe", "layered_vqe") and self.ansatz.get("kind", "sign") != "sign":
            raise ConfigError(f"{self.method} needs the sign ansatz")
        try:
            _ = self.noise_spec
            TransferConfig(**self.transfer)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @property
    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(float(self.noise.get("p1", 0.0)), float(self.noise.get("p2", 0.0)))

    @property
    def transfer_config(self) -> TransferConfig:
        return TransferConfig(**self.transfer)

    @property
    def convergence_threshold(self) -> float:
        if self.eps_conv is not None:
            return float(self.eps_conv)
        return 1e-6 if self.mode == "exact" else 1e-3

    @property
    def n_layers(self) -> int:
        return int(self.ansatz.get("layers", 1))

    def hamiltonian(self) -> Hamiltonian:
        """Named builder, or ``{"name": "inline", "hamiltonian": {...}}`` for an explicit term list."""
        try:
            if self.model["name"] == "inline":
                return Hamiltonian.from_dict(self.model["hamiltonian"])
            return build_model(self.model["name"], self.model.get("params", {}))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot build model: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from None


# -- traces ----------------------------------------------------------------------------


@dataclass
class IterationRecord:
    iteration: int
    layer: int
    energy: float
    std_error: float
    shots: int
    circuit_count: int
    wall_time: float
    cut: float | None = None


@dataclass
class RunTrace:
    method: str
    model: str
    seed: int
    mode: str
    records: list[IterationRecord] = field(default_factory=list)
    e0: float | None = None
    transfers: list[dict] = field(default_factory=list)
    final_params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def add(self, rec: IterationRecord) -> None:
        if self.records and rec.iteration != self.records[-1].iteration + 1:
            raise RunError("iterations must be consecutive")
        self.records.append(rec)

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def final_energy(self) -> float:
        return float(self.records[-1].energy)

    @property
    def best_energy(self) -> float:
        return float(self.energies.min())

    @property
    def shots_total(self) -> int:
        return int(sum(r.shots for r in self.records))

    @property
    def circuits_per_iter(self) -> int:
        return max((r.circuit_count for r in self.records), default=0)

    def layer_energies(self, layer: int) -> np.ndarray:
        return np.array([r.energy for r in self.records if r.layer == layer])

    def cv_layer(self, layer: int, window: int = 50) -> float | None:
        e = self.layer_energies(layer)
        if e.size < 2:
            return None
        return cv_statistic(e[-window:])

    def steps_to(self, target: float) -> float:
        """First iteration (1-based) whose energy is at or below ``target``; ``inf`` if never."""
        hit = np.nonzero(self.energies <= target)[0]
        return float(hit[0] + 1) if hit.size else math.inf

    def to_jsonl(self) -> str:
        head = {
            "type": "run",
            "method": self.method,
            "model": self.model,
            "seed": self.seed,
            "mode": self.mode,
            "e0": self.e0,
            "final_energy": self.final_energy if self.records else None,
            "final_params": self.final_params,
            "extra": self.extra,
        }
        lines = [json.dumps(head)]
        lines += [json.dumps({"type": "iteration", **asdict(r)}) for r in self.records]
        lines += [json.dumps({"type": "transfer", **t}) for t in self.transfers]
        return "\n".join(lines) + "\n"


def check_variational_bound(trace: RunTrace, tol: float = 1e-8) -> None:
    """Exact-mode energies may never undercut the ground energy."""
    if trace.mode != "exact" or trace.e0 is None or not trace.records:
        return
    low = trace.energies.min()
    if low < trace.e0 - tol:
        raise RunError(f"energy {low:.12g} below ground energy {trace.e0:.12g}")


class _Convergence:
    def __init__(self, eps: float, patience: int):
        self.eps, self.patience = eps, patience
        self.prev, self.calm = None, 0

    def update(self, e: float) -> bool:
        if self.prev is not None and abs(e - self.prev) < self.eps:
            self.calm += 1
        else:
            self.calm = 0
        self.prev = e
        return self.calm >= self.patience


# -- objectives ---------------------------------------------------------------------------


class EnergyObjective:
    """Minimize ``<H>``; linear in the term expectations."""

    def __init__(self, h: Hamiltonian):
        self.h = h
        self.strings = [p for _, p in h.terms]
        self.coeffs = np.array([c for c, _ in h.terms])

    @property
    def plan_hamiltonian(self) -> Hamiltonian:
        return self.h

    def value_and_weights(self, expectations: np.ndarray) -> tuple[float, np.ndarray]:
        return float(self.coeffs @ expectations), self.coeffs

    def effective(self, expectations=None) -> Hamiltonian:
        return self.h

    def cut(self, expectations) -> float | None:
        return None


class MaxCutObjective:
    """Minimize the tanh-relaxed cut loss of the encoded correlations."""

    def __init__(self, encoding):
        self.encoding = encoding
        self.strings = encoding.observables
        self.n_qubits = encoding.n_qubits

    @property
    def plan_hamiltonian(self) -> Hamiltonian:
        return self.encoding.as_hamiltonian(np.ones(len(self.strings)))

    def value_and_weights(self, expectations: np.ndarray) -> tuple[float, np.ndarray]:
        return self.encoding.loss(expectations), self.encoding.loss_gradient(expectations)

    def effective(self, expectations) -> Hamiltonian:
        """Linearization ``sum_u dL/d<P_u> P_u``: its gradient is the loss gradient."""
        _, g = self.value_and_weights(expectations)
        return Hamiltonian(self.n_qubits, [(float(c), p) for c, p in zip(g, self.strings) if c != 0.0] or [(0.0, self.strings[0])])

    def cut(self, expectations) -> float:
        return self.encoding.cut(expectations)


# -- sVQNHE -------------------------------------------------------------------------------------


def _sign_edges(config: RunConfig, h: Hamiltonian, n: int) -> list[tuple[int, int]]:
    spec = config.ansatz.get("edges", "hamiltonian")
    if spec == "hamiltonian":
        return h.interaction_edges()
    if spec == "all":
        return [(a, b) for a in range(n) for b in range(a + 1, n)]
    if spec == "none":
        return []
    return [tuple(e) for e in spec]


def _nn_model(config: RunConfig, n: int, seed: int, output_mode: str) -> AmplitudeModel:
    hidden = config.nn.get("hidden")
    return AmplitudeModel(n, hidden, output_mode, seed=substream(seed, "nn"), positive=config.nn.get("positive", "softplus"))


def _with_context(fn, what: str):
    try:
        return fn()
    except (ZeroDivisionError, FloatingPointError, ValueError, KeyError) as exc:
        raise RunError(f"{what}: {exc}") from exc


def _svqnhe_loop(config: RunConfig, objective, n: int, seed: int, trace: RunTrace, h_oracle: Hamiltonian | None) -> tuple[SignAnsatz, AmplitudeModel]:
    L = config.n_layers
    ans = build_sign_ansatz(n, _sign_edges(config, objective.plan_hamiltonian, n), L)
    rng_c = substream(seed, "circuit")
    init = init_params(ans.w_names(1), rng_c)
    ans = ans.with_params(init)
    model = _nn_model(config, n, seed, "nonneg")
    rng_s = substream(seed, "sampling")
    rng_t = substream(seed, "transfer")
    noise = config.noise_spec
    it = 0
    for l in range(1, L + 1):
        if l >= 2:
            ans, model, rep = transfer_step(ans, model, l, config.transfer_config, seed=rng_t, h=h_oracle)
            trace.transfers.append({"layer": l, **rep.to_dict()})
        if config.complex_last_layer and l == L:
            model = model.to_complex()
        block = ans.w_block(l)
        names, scales, zrows = diagonal_generators(block)
        gens = w_generators(block)
        plan = build_measurement_plan(objective.plan_hamiltonian, block, keep_strings=False)
        prefix = (ans.circuit(upto=l - 1) + ans.g_block(l)).simulate().amps
        theta = np.array([ans.params[k] for k in names])
        opt_nn, opt_w = Adam(float(config.nn.get("lr", 0.01))), Adam(config.circuit_lr)
        opt_g = Adam(config.circuit_lr) if (config.revisit_g and l >= 2) else None
        conv = _Convergence(config.convergence_threshold, config.patience)
        for _ in range(config.max_iter):
            t0 = time.perf_counter()
            it += 1
            current = ans.with_params(dict(zip(names, theta)))
            if opt_g is not None:
                prefix = (current.circuit(upto=l - 1) + current.g_block(l)).simulate().amps
            psi = prefix * np.exp(-0.5j * ((scales * theta) @ zrows))
            where = f"layer {l}, iteration {it}"
            shots, cut = 0, None
            if config.mode == "exact":
                corr = hybrid_expectations_exact(psi, model, objective.strings) if isinstance(objective, MaxCutObjective) else None
                heff = objective.effective(corr)
                e, g_nn, g_w = _with_context(lambda: exact_hybrid_gradients(psi, model, heff, zrows, scales), where)
                err = 0.0
                if corr is not None:
                    e = objective.value_and_weights(corr)[0]
                    cut = objective.cut(corr)
            else:
                if config.mode == "sampled_amplitude":
                    batch = sample_amplitude_batch(psi, config.shots, rng_s)
                else:
                    batch = sample_shot_batch(current.circuit(upto=l), plan, config.shots, noise, rng_s)
                shots = batch.n_shots
                corr = None
                if isinstance(objective, MaxCutObjective):
                    corr = _with_context(lambda: hybrid_expectations_sampled(batch, model, objective.strings), where)
                heff = objective.effective(corr)
                est, g_nn, g_w = _with_context(lambda: sampled_energy_and_gradients(batch, model, heff, gens), where)
                e, err = est.value, est.std_error
                if corr is not None:
                    e, err = objective.value_and_weights(corr)[0], 0.0
                    cut = objective.cut(corr)
            trace.add(IterationRecord(it, l, float(e), float(err), shots, plan.circuit_count, time.perf_counter() - t0, cut))
            if opt_g is not None:
                gnames = current.g_names(l)
                gp = current.params

                def energy_at(p):
                    return exact_hybrid_gradients(current.with_params(p).circuit(upto=l).simulate(), model, heff)[0]

                g_g = param_shift_gradient(energy_at, gp, gnames)
                newg = opt_g.step(np.array([gp[k] for k in gnames]), g_g)
                ans = current.with_params(dict(zip(gnames, newg)))
            model.set_flat(opt_nn.step(model.get_flat(), g_nn))
            theta = opt_w.step(theta, g_w)
            if conv.update(float(e)):
                break
        ans = ans.with_params(dict(zip(names, theta)))
    return ans, model


def run_svqnhe(config: RunConfig, seed: int | None = None) -> RunTrace:
    """Layer loop: transfer (layers >= 2), then joint network and W updates until converged."""
    seed = int(config.seeds[0] if seed is None else seed)
    h = config.hamiltonian()
    e0, _ = ground_state(h)
    trace = RunTrace("svqnhe", config.model["name"], seed, config.mode, e0=e0)
    ans, model = _svqnhe_loop(config, EnergyObjective(h), h.n_qubits, seed, trace, h)
    trace.final_params = ans.params
    trace.extra["model"] = model.to_dict()
    check_variational_bound(trace)
    return trace


# -- VQE family -------------------------------------------------------------------------------------


def _expanded(circuit: Circuit, values: dict[str, float], free: Sequence[str]) -> tuple[Circuit, list[tuple[str, float, str]]]:
    """One private parameter per rotation gate of the free parameters.

    Returns the rewritten circuit (scale 1 throughout) and ``(gate param,
    scale, original param)`` so that ``dE/dtheta = sum scale * dE/dgate``.
    """
    free = set(free)
    ops, params, links = [], {}, []
    for j, op in enumerate(circuit.ops):
        if op.param is not None and op.param in free:
            name = f"_g{j}"
            ops.append(GateOp(op.kind, op.targets, name))
            params[name] = op.scale * values[op.param]
            links.append((name, op.scale, op.param))
        elif op.param is not None:
            ops.append(GateOp(op.kind, op.targets, angle=op.scale * values[op.param]))
        else:
            ops.append(op)
    return Circuit(circuit.n_qubits, ops, params), links


class _Measurer:
    """Expectations of the objective's strings from a circuit in a sampled mode."""

    def __init__(self, config: RunConfig, strings, rng):
        self.config, self.strings, self.rng = config, strings, rng
        self.n_groups = len(qwc_groups(strings)) if config.mode == "shot_protocol" else 1

    def __call__(self, circuit: Circuit) -> tuple[np.ndarray, int]:
        if self.config.mode == "shot_protocol":
            means, _, n_circ = qwc_expectations_shots(circuit, self.strings, self.config.shots, self.config.noise_spec, self.rng)
            return means, n_circ * self.config.shots
        batch = sample_amplitude_batch(circuit.simulate(), self.config.shots, self.rng)
        return hybrid_expectations_sampled(batch, None, self.strings), batch.n_shots


def _vqe_loop(config: RunConfig, objective, circuit: Circuit, stages: list[list[str]], seed: int, trace: RunTrace) -> dict[str, float]:
    """Adam on the free parameters of each stage; earlier stages stay frozen."""
    values = dict(circuit.params)
    rng_s = substream(seed, "sampling")
    measure = _Measurer(config, objective.strings, rng_s)
    it = 0
    for stage, free in enumerate(stages, start=1):
        opt = Adam(config.circuit_lr)
        conv = _Convergence(config.convergence_threshold, config.patience)
        theta = np.array([values[k] for k in free])
        n_gate = sum(1 for op in circuit.ops if op.param in set(free))
        n_circ = 1 if config.mode != "shot_protocol" else (2 * n_gate + 1) * measure.n_groups
        for _ in range(config.max_iter):
            t0 = time.perf_counter()
            it += 1
            values.update(zip(free, theta))
            bound = circuit.bind(values)
            cut, shots = None, 0
            if config.mode == "exact":
                psi = bound.simulate()
                corr = hybrid_expectations_exact(psi, None, objective.strings)
                e, w = objective.value_and_weights(corr)
                _, grads = adjoint_gradient(bound, objective.effective(corr))
                grad = np.array([grads[k] for k in free])
            else:
                corr, shots = measure(bound)
                e, w = objective.value_and_weights(corr)
                expanded, links = _expanded(circuit, values, free)
                grad = np.zeros(len(free))
                index = {k: i for i, k in enumerate(free)}
                for gname, scale, pname in links:
                    plus, minus = dict(expanded.params), dict(expanded.params)
                    plus[gname] += math.pi / 2
                    minus[gname] -= math.pi / 2
                    cp, sp = measure(expanded.bind(plus))
                    cm, sm = measure(expanded.bind(minus))
                    shots += sp + sm
                    grad[index[pname]] += scale * 0.5 * float(w @ (cp - cm))
            cut = objective.cut(corr)
            trace.add(IterationRecord(it, stage, float(e), 0.0, shots, n_circ, time.perf_counter() - t0, cut))
            theta = opt.step(theta, grad)
            if conv.update(float(e)):
                break
        values.update(zip(free, theta))
    return values


def _vqe_circuit(config: RunConfig, h: Hamiltonian, n: int) -> Circuit:
    spec = config.ansatz
    kind = spec.get("kind", "sign")
    if kind == "sign":
        return build_sign_ansatz(n, _sign_edges(config, h, n), int(spec.get("layers", 1))).circuit(trailing=bool(spec.get("trailing", True)))
    if kind == "hea":
        return build_hea(n, int(spec.get("reps", 2)))
    if kind == "brickwork":
        return build_brickwork(n, int(spec.get("depth", 2)))
    return build_qaoa(h, int(spec.get("p", 1)))


def _init_circuit(circuit: Circuit, seed: int) -> Circuit:
    return circuit.bind(init_params(circuit.parameter_names, substream(seed, "circuit")))


def run_vqe(config: RunConfig, seed: int | None = None) -> RunTrace:
    """Standard VQE: every parameter optimized jointly from U(-2pi, 2pi)."""
    seed = int(config.seeds[0] if seed is None else seed)
    h = config.hamiltonian()
    e0, _ = ground_state(h)
    circuit = _init_circuit(_vqe_circuit(config, h, h.n_qubits), seed)
    trace = RunTrace(config.method, config.model["name"], seed, config.mode, e0=e0)
    trace.final_params = _vqe_loop(config, EnergyObjective(h), circuit, [circuit.parameter_names], seed, trace)
    check_variational_bound(trace)
    return trace


def run_qaoa(config: RunConfig, seed: int | None = None) -> RunTrace:
    cfg = RunConfig.from_dict({**config.to_dict(), "method": "qaoa", "ansatz": {"kind": "qaoa", **{k: v for k, v in config.ansatz.items() if k != "kind"}}})
    return run_vqe(cfg, seed)


def run_layered_vqe(config: RunConfig, seed: int | None = None) -> RunTrace:
    """Stage ``l`` optimizes ``W_l`` and the Ry block after it; earlier stages are frozen.

    Later stages start at zero so that adding a stage leaves the state unchanged.
    """
    seed = int(config.seeds[0] if seed is None else seed)
    h = config.hamiltonian()
    e0, _ = ground_state(h)
    n = h.n_qubits
    ans = build_sign_ansatz(n, _sign_edges(config, h, n), config.n_layers)
    stages = [ans.w_names(l) + ans.g_names(l + 1) for l in range(1, ans.n_layers + 1)]
    circuit = ans.circuit(trailing=True).bind(init_params(stages[0], substream(seed, "circuit")))
    trace = RunTrace("layered_vqe", config.model["name"], seed, config.mode, e0=e0)
    trace.final_params = _vqe_loop(config, EnergyObjective(h), circuit, stages, seed, trace)
    check_variational_bound(trace)
    return trace


def run_nn_baseline(config: RunConfig, seed: int | None = None) -> RunTrace:
    """Real MLP wavefunction ``psi(s) = z(s)``; exact Rayleigh quotient over all basis states."""
    seed = int(config.seeds[0] if seed is None else seed)
    h = config.hamiltonian()
    n = h.n_qubits
    if n > 12:
        raise ConfigError("the NN baseline enumerates all basis states; n <= 12")
    e0, _ = ground_state(h)
    model = _nn_model(config, n, seed, "signed")
    bits = bitstrings(n)
    opt = Adam(float(config.nn.get("lr", 0.01)))
    conv = _Convergence(config.convergence_threshold, config.patience)
    trace = RunTrace("nn", config.model["name"], seed, "exact", e0=e0)
    for it in range(1, config.max_iter + 1):
        t0 = time.perf_counter()
        amps = model.forward(bits)
        e, g_amp = _with_context(lambda: plain_energy_gradient(amps, h), f"iteration {it}")
        trace.add(IterationRecord(it, 1, e, 0.0, 0, 0, time.perf_counter() - t0))
        model.set_flat(opt.step(model.get_flat(), model.backward(bits, g_amp)))
        if conv.update(e):
            break
    trace.extra["model"] = model.to_dict()
    check_variational_bound(trace)
    return trace


RUNNERS = {"svqnhe": run_svqnhe, "vqe": run_vqe, "layered_vqe": run_layered_vqe, "nn": run_nn_baseline, "qaoa": run_qaoa}


def run(config: RunConfig, seed: int | None = None) -> RunTrace:
    return RUNNERS[config.method](config, seed)


def run_all_seeds(config: RunConfig) -> list[RunTrace]:
    return [run(config, s) for s in config.seeds]


# -- metrics -----------------------------------------------------------------------------------------


@dataclass
class MetricsReport:
    mae: float
    var: float
    mae0: float | None = None
    var0: float | None = None
    r_mae: float | None = None
    r_var: float | None = None
    success_probability: float | None = None
    success_probability0: float | None = None
    median_steps: float | None = None
    median_steps0: float | None = None
    r_e: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _mae_var(traces: Sequence[RunTrace], e0: float) -> tuple[float, float]:
    finals = np.array([t.final_energy for t in traces])
    return float(np.mean(np.abs(finals - e0))), float(np.var(finals, ddof=1))


def _success(traces: Sequence[RunTrace], target: float) -> tuple[float, float]:
    steps = np.array([t.steps_to(target) for t in traces])
    ok = np.isfinite(steps)
    return float(ok.mean()), float(np.median(steps[ok])) if ok.any() else math.inf


def relative_change(new: float, old: float) -> float:
    if old == 0:
        raise ZeroDivisionError("baseline value is zero")
    return (new - old) / old


def compute_metrics(traces: Sequence[RunTrace], baseline_traces: Sequence[RunTrace] | None = None, target: float | None = None) -> MetricsReport:
    """MAE and variance of final energies, their relative change against a baseline, and success rates.

    ``target`` defaults to 99.45% of the ground energy; a run succeeds if any
    iteration reaches it, and ``median_steps`` is over successful runs.
    """
    if len(traces) < 2 or (baseline_traces is not None and len(baseline_traces) < 2):
        raise ValueError("need at least two traces per side")
    e0 = traces[0].e0
    if e0 is None:
        raise ValueError("traces carry no ground energy")
    target = SUCCESS_FRACTION * e0 if target is None else target
    mae, var = _mae_var(traces, e0)
    rep = MetricsReport(mae, var)
    rep.success_probability, rep.median_steps = _success(traces, target)
    if baseline_traces is not None:
        rep.mae0, rep.var0 = _mae_var(baseline_traces, e0)
        rep.r_mae = relative_change(mae, rep.mae0)
        rep.r_var = relative_change(var, rep.var0)
        rep.success_probability0, rep.median_steps0 = _success(baseline_traces, target)
    return rep


# -- MaxCut ----------------------------------------------------------------------------------------------

MAXCUT_METHODS = ("svqnhe", "sign_vqe", "brickwork_vqe")


@dataclass
class MaxCutResult:
    method: str
    cut: float
    final_cut: float
    circuits_per_iter: int
    trace: RunTrace


@dataclass
class MaxCutReport:
    n_vertices: int
    n_edges: int
    seed: int
    optimum: float | None
    results: dict[str, MaxCutResult]

    @property
    def best_found(self) -> float:
        return max(r.cut for r in self.results.values())

    def r_e(self, method: str) -> float:
        """Cut of ``method`` over the best cut any method found."""
        best = self.best_found
        return self.results[method].cut / best if best > 0 else 1.0

    def r_e_optimum(self, method: str) -> float | None:
        if self.optimum is None:
            return None
        return self.results[method].cut / self.optimum if self.optimum > 0 else 1.0

    def rows(self) -> list[dict]:
        return [
            {
                "method": m,
                "cut": r.cut,
                "final_cut": r.final_cut,
                "optimum": self.optimum,
                "r_e": self.r_e(m),
                "r_e_optimum": self.r_e_optimum(m),
                "circuits_per_iter": r.circuits_per_iter,
                "shots_total": r.trace.shots_total,
            }
            for m, r in self.results.items()
        ]


def _maxcut_result(method: str, trace: RunTrace) -> MaxCutResult:
    cuts = [r.cut for r in trace.records if r.cut is not None]
    return MaxCutResult(method, float(max(cuts)), float(cuts[-1]), trace.circuits_per_iter, trace)


def run_maxcut(graph: Graph, config: RunConfig, seed: int | None = None, n_qubits: int | None = None, k: int = 2, alpha: float = 2.0, methods: Sequence[str] = MAXCUT_METHODS) -> MaxCutReport:
    """Solve one instance with each method; cuts are the best rounded cut seen during optimization.

    sVQNHE and sign-VQE share the sign ansatz (``config.ansatz.layers`` layers on
    all qubit pairs; sign-VQE runs it without network and transfer), brickwork-VQE
    uses depth ``ceil(sqrt(m))``.
    """
    seed = int(config.seeds[0] if seed is None else seed)
    params = config.model.get("params", {})
    n = int(n_qubits or params.get("n_qubits", 3))
    k = int(params.get("k", k))
    alpha = float(params.get("alpha", alpha))
    try:
        enc = maxcut_encode(graph, n, k, alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    objective = MaxCutObjective(enc)
    optimum = brute_force_maxcut(graph)[0] if graph.n_vertices <= 20 else None
    results = {}
    for method in methods:
        trace = RunTrace(method, "maxcut", seed, config.mode)
        if method == "svqnhe":
            cfg = RunConfig.from_dict({**config.to_dict(), "method": "svqnhe", "ansatz": {**config.ansatz, "kind": "sign", "edges": "all"}})
            _svqnhe_loop(cfg, objective, n, seed, trace, None)
        elif method == "sign_vqe":
            ans = build_sign_ansatz(n, [(a, b) for a in range(n) for b in range(a + 1, n)], config.n_layers)
            circuit = _init_circuit(ans.circuit(trailing=False), seed)
            _vqe_loop(config, objective, circuit, [circuit.parameter_names], seed, trace)
        elif method == "brickwork_vqe":
            depth = int(config.ansatz.get("depth", default_brickwork_depth(graph.n_vertices)))
            circuit = _init_circuit(build_brickwork(n, depth), seed)
            _vqe_loop(config, objective, circuit, [circuit.parameter_names], seed, trace)
        else:
            raise ConfigError(f"unknown MaxCut method {method!r}; choose from {MAXCUT_METHODS}")
        results[method] = _maxcut_result(method, trace)
    return MaxCutReport(graph.n_vertices, len(graph.edges), seed, optimum, results)


# -- estimator-style wrapper ---------------------------------------------------------------------------------


class Eigensolver(BaseEstimator):
    """Scikit-learn style front end: ``fit(hamiltonian)`` runs one configured solver.

    After fitting, ``energy_`` is the final energy, ``trace_`` the full
    :class:`RunTrace`, and (for network methods) ``model_`` the amplitude model.
    """

    def __init__(self, method="svqnhe", ansatz="sign", n_layers=1, mode="exact", max_iter=400, eps_conv=None, nn_lr=0.01, circuit_lr=0.05, hidden=None, shots=1000, seed=0):
        self.method = method
        self.ansatz = ansatz
        self.n_layers = n_layers
        self.mode = mode
        self.max_iter = max_iter
        self.eps_conv = eps_conv
        self.nn_lr = nn_lr
        self.circuit_lr = circuit_lr
        self.hidden = hidden
        self.shots = shots
        self.seed = seed

    def _config(self, h: Hamiltonian) -> RunConfig:
        return RunConfig(
            method=self.method,
            model={"name": "inline", "hamiltonian": h.to_dict()},
            ansatz={"kind": self.ansatz, "layers": self.n_layers, "reps": self.n_layers, "depth": self.n_layers, "p": self.n_layers},
            mode=self.mode,
            max_iter=self.max_iter,
            eps_conv=self.eps_conv,
            seeds=[self.seed],
            nn={"hidden": self.hidden, "lr": self.nn_lr},
            circuit_lr=self.circuit_lr,
            shots=self.shots,
        )

    def fit(self, hamiltonian: Hamiltonian, y=None) -> "Eigensolver":
        if not isinstance(hamiltonian, Hamiltonian):
            raise TypeError("fit expects a Hamiltonian")
        cfg = self._config(hamiltonian)
        self.trace_ = run(cfg, self.seed)
        self.energy_ = self.trace_.final_energy
        if "model" in self.trace_.extra:
            self.model_ = AmplitudeModel.from_dict(self.trace_.extra["model"])
        return self

    def score(self, hamiltonian: Hamiltonian, y=None) -> float:
        """Negative final energy, so that larger is better."""
        return -float(self.energy_)
