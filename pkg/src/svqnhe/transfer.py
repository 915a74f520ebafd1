"""Amplitude transfer from the network into a new simulatable circuit block.

Before layer ``l`` starts, the Ry block ``G_l`` is fitted so that it
redistributes probability the way ``F_{l-1}`` did, then the network is reset
to (nearly) the identity. The circuit carries the amplitude profile from then
on and the network only learns the residual.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .ansatz import Circuit, SignAnsatz
from .estimator import hybrid_energy_exact
from .neural import AmplitudeModel, reset_to_identity
from .qsim import Statevector, apply_matrix, bitstrings

log = logging.getLogger(__name__)

KL_DIRECTIONS = ("f_to_g", "g_to_f")
_FLOOR = 1e-300


@dataclass
class TransferConfig:
    n_test_states: int = 8
    lr: float = 0.05
    max_iter: int = 500
    tol: float = 1e-10
    kl_direction: str = "f_to_g"
    energy_tolerance: float = 0.1
    strict: bool = False

    def __post_init__(self):
        if self.n_test_states < 1 or self.max_iter < 1 or self.lr <= 0:
            raise ValueError("n_test_states, max_iter and lr must be positive")
        if self.kl_direction not in KL_DIRECTIONS:
            raise ValueError(f"kl_direction must be one of {KL_DIRECTIONS}")


@dataclass
class TransferReport:
    angles: dict[str, float]
    residual: float
    iterations: int
    n_test_states: int
    converged: bool
    objective_history: list[float] = field(default_factory=list)
    energy_before: float | None = None
    energy_after: float | None = None
    f2_var_before: float | None = None
    f2_var_after: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.residual) or self.residual < -1e-12:
            raise ValueError(f"residual must be finite and non-negative, got {self.residual}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("objective_history")
        return d


class TransferError(RuntimeError):
    pass


def kl_divergence(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``sum_s p log(p/q)`` along the last axis, with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    q = np.maximum(np.asarray(q, dtype=float), _FLOOR)
    mask = p > 0
    ratio = np.where(mask, p / q, 1.0)
    return np.sum(np.where(mask, p * np.log(np.where(mask, ratio, 1.0)), 0.0), axis=-1)


def _ry_targets(template: Circuit) -> list[tuple[str, int]]:
    out = []
    for op in template.ops:
        if op.kind != "Ry" or op.param is None or op.scale != 1.0:
            raise ValueError("transfer template must be a layer of parameterized Ry gates")
        out.append((op.param, op.targets[0]))
    if len({q for _, q in out}) != len(out):
        raise ValueError("transfer template must have one Ry per qubit")
    return out


def _ry(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def probe_states(prev_state: Statevector, n_test_states: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """``prev_state`` (weight 1/2) plus Haar states sharing the other half.

    A single test state gets the full weight.
    """
    n = prev_state.n_qubits
    states = [prev_state.amps] + [Statevector.haar_random(n, rng).amps for _ in range(n_test_states - 1)]
    if n_test_states == 1:
        weights = np.ones(1)
    else:
        weights = np.full(n_test_states, 0.5 / (n_test_states - 1))
        weights[0] = 0.5
    return np.array(states), weights


def _kl_and_grad(angles, targets, states, weights, p_f, direction):
    """Objective and gradient over the Ry angles for a batch of test states."""
    n = int(round(math.log2(states.shape[1])))
    out = states
    for (_, q), t in zip(targets, angles):
        out = apply_matrix(out, _ry(t), (q,), n)
    p_g = np.abs(out) ** 2
    p_g_safe = np.maximum(p_g, _FLOOR)
    if direction == "f_to_g":
        obj = float(weights @ kl_divergence(p_f, p_g))
        coef = -np.where(p_f > 0, p_f / p_g_safe, 0.0)
    else:
        obj = float(weights @ kl_divergence(p_g, p_f))
        coef = np.where(p_g > 0, np.log(p_g_safe / np.maximum(p_f, _FLOOR)), 0.0)
    grad = np.zeros(len(targets))
    for i, ((_, q), t) in enumerate(zip(targets, angles)):
        # dRy(t)/dt = Ry(t + pi) / 2, applied on top of the already rotated state
        d = apply_matrix(out, 0.5 * _ry(t + math.pi) @ _ry(-t), (q,), n)
        dp = 2.0 * np.real(np.conj(out) * d)
        grad[i] = float(weights @ np.sum(coef * dp, axis=1))
    return obj, grad


def fit_g_to_f(
    model: AmplitudeModel,
    prev_state: Statevector,
    g_template: Circuit,
    n_test_states: int = 8,
    seed=None,
    config: TransferConfig | None = None,
) -> TransferReport:
    """Fit Ry angles so that ``|<s|G|psi_k>|^2`` matches ``|f(s) psi_k(s)|^2 / norm``.

    Adam on the angles starting from zero (``G`` = identity). A step that
    raises the objective is rejected and the learning rate halved, so accepted
    steps never increase the objective.
    """
    cfg = config or TransferConfig(n_test_states=n_test_states)
    if model.output_mode != "nonneg":
        raise ValueError("transfer needs a nonneg amplitude model")
    targets = _ry_targets(g_template)
    rng = np.random.default_rng(seed)
    states, weights = probe_states(prev_state, cfg.n_test_states, rng)
    f = model.forward(bitstrings(prev_state.n_qubits))
    p_f = np.abs(f[None, :] * states) ** 2
    p_f /= p_f.sum(axis=1, keepdims=True)

    theta = np.zeros(len(targets))
    obj, grad = _kl_and_grad(theta, targets, states, weights, p_f, cfg.kl_direction)
    history = [obj]
    m, v = np.zeros_like(theta), np.zeros_like(theta)
    lr, b1, b2, eps = cfg.lr, 0.9, 0.999, 1e-8
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        if obj < cfg.tol or np.linalg.norm(grad) < 1e-10:
            converged = True
            break
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad**2
        step = lr * (m / (1 - b1**it)) / (np.sqrt(v / (1 - b2**it)) + eps)
        cand = theta - step
        new_obj, new_grad = _kl_and_grad(cand, targets, states, weights, p_f, cfg.kl_direction)
        if new_obj > obj:
            lr *= 0.5
            if lr < 1e-12:
                converged = True
                break
            continue
        if obj - new_obj < cfg.tol * max(1.0, obj):
            converged = True
        theta, obj, grad = cand, new_obj, new_grad
        history.append(obj)
        if converged:
            break
    if not converged:
        log.warning("transfer fit hit %d iterations, residual %.3e", cfg.max_iter, obj)
    angles = {name: float(t) for (name, _), t in zip(targets, theta)}
    return TransferReport(angles, max(obj, 0.0), it, cfg.n_test_states, converged, history)


def frobenius_fit(model: AmplitudeModel, g_template: Circuit, seed=None) -> tuple[dict[str, float], float]:
    """Minimize ``min_a ||G(theta) - a F||_F^2`` over a non-product template.

    For a layer of single-qubit rotations the diagonal of ``G`` does not depend
    on the amplitude profile, so the objective carries no information about
    ``f``; such templates are rejected.
    """
    if all(len(op.targets) == 1 for op in g_template.ops):
        raise ValueError("Frobenius transfer is degenerate for product templates; use the KL fit")
    n = g_template.n_qubits
    names = g_template.parameter_names
    f = model.forward(bitstrings(n))
    fnorm2 = float(np.sum(np.abs(f) ** 2))

    def unitary(theta):
        c = g_template.bind(dict(zip(names, theta)))
        return np.array([c.simulate(col).amps for col in np.eye(2**n, dtype=complex)]).T

    def objective(theta):
        overlap = np.sum(np.conj(np.diag(unitary(theta))) * f)
        return 2**n - abs(overlap) ** 2 / fnorm2

    rng = np.random.default_rng(seed)
    res = minimize(objective, rng.uniform(-0.1, 0.1, len(names)), method="BFGS")
    return dict(zip(names, map(float, res.x))), float(res.fun)


def f2_variance(state: Statevector, model: AmplitudeModel) -> float:
    """``Var_{s ~ |psi|^2} f(s)^2`` with ``f`` normalized so that ``E[f^2] = 1``."""
    p = state.probabilities()
    f2 = np.abs(model.forward(bitstrings(state.n_qubits))) ** 2
    f2 = f2 / float(p @ f2)
    return float(p @ (f2 - 1.0) ** 2)


def transfer_step(
    ansatz: SignAnsatz,
    model: AmplitudeModel,
    layer_index: int,
    config: TransferConfig | None = None,
    seed=None,
    h=None,
) -> tuple[SignAnsatz, AmplitudeModel, TransferReport]:
    """Fit ``G_layer`` to the current network, then reset the network.

    When ``h`` is given, the exact hybrid energies before and after are logged
    in the report; a jump larger than ``energy_tolerance * |E|`` is a warning,
    or a :class:`TransferError` with ``strict=True``.
    """
    cfg = config or TransferConfig()
    if layer_index < 2 or layer_index > ansatz.n_layers:
        raise ValueError(f"transfer applies to layers 2..{ansatz.n_layers}, got {layer_index}")
    rng = np.random.default_rng(seed)
    prev = ansatz.circuit(upto=layer_index - 1).simulate()
    report = fit_g_to_f(model, prev, ansatz.g_block(layer_index), cfg.n_test_states, rng, cfg)
    new_ansatz = ansatz.with_params(report.angles)
    new_model = reset_to_identity(model, seed=rng)
    after = new_ansatz.circuit(upto=layer_index).simulate()
    report.f2_var_before = f2_variance(prev, model)
    report.f2_var_after = f2_variance(after, new_model)
    if h is not None:
        report.energy_before = hybrid_energy_exact(prev, model, h).value
        report.energy_after = hybrid_energy_exact(after, new_model, h).value
        jump = report.energy_after - report.energy_before
        if jump > cfg.energy_tolerance * abs(report.energy_before):
            msg = f"transfer into layer {layer_index} raised the energy by {jump:.4g}"
            if cfg.strict:
                raise TransferError(msg)
            log.warning(msg)
    return new_ansatz, new_model, report
