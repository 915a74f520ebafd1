"""Dense statevector simulation.

Basis index convention: qubit 0 is the most significant bit, so the
amplitude of ``|s_0 s_1 ... s_{n-1}>`` sits at ``int("s_0s_1...", 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 14

_SQ2 = 1.0 / math.sqrt(2.0)

PARAMETERIZED = frozenset({"Rx", "Ry", "Rz", "Rzz"})
TWO_QUBIT = frozenset({"Rzz", "CNOT", "CZ"})
DIAGONAL = frozenset({"Z", "S", "Sdg", "Rz", "Rzz", "CZ"})
GATE_KINDS = frozenset(
    {"H", "X", "Y", "Z", "S", "Sdg", "Rx", "Ry", "Rz", "Rzz", "CNOT", "CZ", "XP", "XM", "YP", "YM"}
)


def _rx(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _ry(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def _rzz(t):
    a, b = np.exp(-0.5j * t), np.exp(0.5j * t)
    return np.diag([a, b, b, a])


# XP/XM/YP/YM are quarter turns: exp(-i (pi/4) P) == R_P(+-pi/2).
_FIXED = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0 + 0j, -1.0]),
    "S": np.diag([1.0 + 0j, 1j]),
    "Sdg": np.diag([1.0 + 0j, -1j]),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1.0 + 0j, 1, 1, -1]),
    "XP": _rx(math.pi / 2),
    "XM": _rx(-math.pi / 2),
    "YP": _ry(math.pi / 2),
    "YM": _ry(-math.pi / 2),
}
_ROTATIONS = {"Rx": _rx, "Ry": _ry, "Rz": _rz, "Rzz": _rzz}


@dataclass(frozen=True)
class Gate:
    """A concrete gate: kind, target qubits and (for rotations) an angle in radians.

    For ``CNOT`` the first target is the control.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        width = 2 if self.kind in TWO_QUBIT else 1
        if len(self.targets) != width:
            raise ValueError(f"{self.kind} acts on {width} qubit(s), got {self.targets}")
        if len(set(self.targets)) != width:
            raise ValueError(f"targets must be distinct, got {self.targets}")
        if self.kind in PARAMETERIZED:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle, got {self.angle}")
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def matrix(self) -> np.ndarray:
        if self.kind in _ROTATIONS:
            return _ROTATIONS[self.kind](float(self.angle))
        return _FIXED[self.kind]

    @property
    def is_diagonal(self) -> bool:
        return self.kind in DIAGONAL


@dataclass(frozen=True)
class NoiseSpec:
    """Per-gate depolarizing probabilities.

    A depolarizing event with probability ``p`` replaces the qubit state by the
    maximally mixed state, i.e. applies a uniformly random element of
    ``{I, X, Y, Z}``. Two-qubit gates depolarize each involved qubit
    independently with ``p2``.
    """

    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        for p in (self.p1, self.p2):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"noise probabilities must lie in [0, 1], got {p}")

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0


@dataclass
class Statevector:
    amps: np.ndarray
    n_qubits: int = field(init=False)

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        n = int(round(math.log2(self.amps.size))) if self.amps.size else -1
        if n < 1 or 2**n != self.amps.size:
            raise ValueError(f"amplitude count must be 2**n with n >= 1, got {self.amps.size}")
        if n > MAX_QUBITS:
            raise ValueError(f"at most {MAX_QUBITS} qubits are supported, got {n}")
        self.n_qubits = n

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def from_bitstring(cls, bits: str) -> "Statevector":
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(amps)

    @classmethod
    def haar_random(cls, n_qubits: int, rng: np.random.Generator) -> "Statevector":
        v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
        return cls(v / np.linalg.norm(v))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amps) ** 2
        return p / p.sum()

    def copy(self) -> "Statevector":
        return Statevector(self.amps.copy())


def apply_matrix(amps: np.ndarray, mat: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Apply a ``2^k x 2^k`` matrix to ``targets``; leading axes of ``amps`` are batch axes."""
    k = len(targets)
    batch = amps.shape[:-1]
    psi = amps.reshape(batch + (2,) * n)
    axes = [len(batch) + t for t in targets]
    out = np.tensordot(mat.reshape((2,) * (2 * k)), psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(amps.shape)


def _check_targets(gate: Gate, n: int) -> None:
    for t in gate.targets:
        if not 0 <= t < n:
            raise ValueError(f"qubit index {t} out of range for {n} qubits")


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    """Return ``gate |state>`` as a new statevector."""
    _check_targets(gate, state.n_qubits)
    return Statevector(apply_matrix(state.amps, gate.matrix, gate.targets, state.n_qubits))


def apply_gates(amps: np.ndarray, gates: Iterable[Gate], n: int) -> np.ndarray:
    for g in gates:
        _check_targets(g, n)
        amps = apply_matrix(amps, g.matrix, g.targets, n)
    return amps


def pauli_expectation(state: Statevector, p) -> float:
    """``<psi|P|psi>`` for a Hermitian Pauli string ``p``."""
    if p.n_qubits > state.n_qubits:
        raise ValueError(f"Pauli string on {p.n_qubits} qubits, state has {state.n_qubits}")
    if p.n_qubits < state.n_qubits:
        p = p.padded(state.n_qubits)
    val = np.vdot(state.amps, p.apply(state.amps))
    return float(val.real)


def bitstrings(n: int) -> np.ndarray:
    """All ``2^n`` basis states as a ``(2^n, n)`` 0/1 array, qubit 0 first."""
    idx = np.arange(2**n)
    return ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int8)


def index_to_bits(idx: np.ndarray, n: int) -> np.ndarray:
    idx = np.asarray(idx)
    return ((idx[..., None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int8)


def sample_indices(probs: np.ndarray, n_s: int, rng: np.random.Generator) -> np.ndarray:
    if n_s < 1:
        raise ValueError(f"need at least one sample, got {n_s}")
    probs = np.asarray(probs, dtype=float)
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return np.minimum(np.searchsorted(cdf, rng.random(n_s), side="right"), probs.size - 1)


def sample_bitstrings(state: Statevector, n_s: int, seed: int | np.random.Generator | None = None) -> list[str]:
    rng = np.random.default_rng(seed)
    idx = sample_indices(state.probabilities(), n_s, rng)
    fmt = f"0{state.n_qubits}b"
    return [format(int(i), fmt) for i in idx]


def _depolarize(batch: np.ndarray, qubit: int, p: float, n: int, rng: np.random.Generator) -> np.ndarray:
    if p <= 0.0:
        return batch
    t = batch.shape[0]
    hit = rng.random(t) < p
    which = rng.integers(0, 4, size=t)  # 0=I, 1=X, 2=Y, 3=Z
    flip = hit & ((which == 1) | (which == 2))
    phase = hit & ((which == 2) | (which == 3))
    if not (flip.any() or phase.any()):
        return batch
    psi = batch.reshape((t,) + (2,) * n)
    if phase.any():
        sign = np.ones(2)
        sign[1] = -1.0
        shape = [1] * (n + 1)
        shape[qubit + 1] = 2
        psi = np.where(phase.reshape((t,) + (1,) * n), psi * sign.reshape(shape), psi)
    if flip.any():
        psi = np.where(flip.reshape((t,) + (1,) * n), np.flip(psi, axis=qubit + 1), psi)
    # Y = i X Z, the global factor i is irrelevant per trajectory
    return psi.reshape(batch.shape)


def run_noisy_trajectories(circuit, noise: NoiseSpec, n_traj: int, seed=None, initial: np.ndarray | None = None) -> np.ndarray:
    """Simulate ``n_traj`` independent Monte-Carlo trajectories at once.

    ``circuit`` is anything exposing ``n_qubits`` and ``bound_gates()``.
    Returns an ``(n_traj, 2^n)`` array of normalized statevectors.
    """
    rng = np.random.default_rng(seed)
    n = circuit.n_qubits
    if initial is None:
        batch = np.zeros((n_traj, 2**n), dtype=complex)
        batch[:, 0] = 1.0
    else:
        batch = np.tile(np.asarray(initial, dtype=complex).reshape(1, -1), (n_traj, 1))
    for g in circuit.bound_gates():
        _check_targets(g, n)
        batch = apply_matrix(batch, g.matrix, g.targets, n)
        p = noise.p2 if len(g.targets) == 2 else noise.p1
        for q in g.targets:
            batch = _depolarize(batch, q, p, n, rng)
    return batch


def run_noisy_trajectory(circuit, noise: NoiseSpec, seed=None, initial: np.ndarray | None = None) -> Statevector:
    """One Monte-Carlo trajectory of ``circuit`` under depolarizing gate noise."""
    return Statevector(run_noisy_trajectories(circuit, noise, 1, seed, initial)[0])
