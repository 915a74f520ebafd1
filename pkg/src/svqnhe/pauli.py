"""Pauli strings, benchmark Hamiltonians, exact diagonalization and MaxCut encoding."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as sla

from .qsim import MAX_QUBITS, Statevector

_PHASES = (1, 1j, -1, -1j)
_SYMBOL = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


def _phase_index(phase: complex) -> int:
    for k, p in enumerate(_PHASES):
        if abs(phase - p) < 1e-12:
            return k
    raise ValueError(f"Pauli phase must be one of +-1, +-i, got {phase}")


def _popcount(x: int) -> int:
    return int(x).bit_count()


def parity(arr: np.ndarray) -> np.ndarray:
    """Bit parity of each non-negative integer in ``arr``."""
    return (np.bitwise_count(np.asarray(arr, dtype=np.int64)) & 1).astype(np.int64)


class PauliString:
    """``phase * (op_0 ⊗ op_1 ⊗ ... ⊗ op_{n-1})`` with ops in {I, X, Y, Z}.

    Stored as symplectic bit masks: qubit ``q`` maps to bit ``n-1-q`` so that
    masks line up with statevector indices. ``x`` marks X/Y positions,
    ``z`` marks Z/Y positions.
    """

    __slots__ = ("n_qubits", "x", "z", "_k")

    def __init__(self, ops: str, phase: complex = 1):
        ops = ops.upper()
        if not ops or any(c not in "IXYZ" for c in ops):
            raise ValueError(f"invalid Pauli word {ops!r}")
        n = len(ops)
        x = z = 0
        for q, c in enumerate(ops):
            bit = 1 << (n - 1 - q)
            if c in "XY":
                x |= bit
            if c in "ZY":
                z |= bit
        self.n_qubits, self.x, self.z = n, x, z
        self._k = _phase_index(phase)

    @classmethod
    def from_masks(cls, n: int, x: int, z: int, phase_index: int = 0) -> "PauliString":
        p = cls.__new__(cls)
        p.n_qubits, p.x, p.z, p._k = n, int(x), int(z), phase_index % 4
        return p

    @classmethod
    def single(cls, n: int, qubit: int, op: str, phase: complex = 1) -> "PauliString":
        return cls.on(n, {qubit: op}, phase)

    @classmethod
    def on(cls, n: int, ops: dict[int, str], phase: complex = 1) -> "PauliString":
        word = ["I"] * n
        for q, c in ops.items():
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for {n} qubits")
            word[q] = c
        return cls("".join(word), phase)

    @property
    def phase(self) -> complex:
        return _PHASES[self._k]

    @property
    def ops(self) -> str:
        n = self.n_qubits
        return "".join(
            _SYMBOL[((self.x >> (n - 1 - q)) & 1, (self.z >> (n - 1 - q)) & 1)] for q in range(n)
        )

    @property
    def flip_mask(self) -> int:
        return self.x

    @property
    def z_mask(self) -> int:
        return self.z

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def is_diagonal(self) -> bool:
        return self.x == 0

    @property
    def is_hermitian(self) -> bool:
        return self._k in (0, 2)

    def qubits(self, mask: int | None = None) -> list[int]:
        mask = (self.x | self.z) if mask is None else mask
        n = self.n_qubits
        return [q for q in range(n) if (mask >> (n - 1 - q)) & 1]

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise ValueError("Pauli strings act on different numbers of qubits")
        x, z = self.x ^ other.x, self.z ^ other.z
        k = (
            self._k
            + other._k
            + _popcount(self.x & self.z)
            + _popcount(other.x & other.z)
            - _popcount(x & z)
            + 2 * _popcount(self.z & other.x)
        )
        return PauliString.from_masks(self.n_qubits, x, z, k)

    def scaled(self, phase: complex) -> "PauliString":
        return PauliString.from_masks(self.n_qubits, self.x, self.z, self._k + _phase_index(phase))

    def commutes(self, other: "PauliString") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def stripped(self) -> "PauliString":
        return PauliString.from_masks(self.n_qubits, self.x, self.z, 0)

    def padded(self, n: int) -> "PauliString":
        return PauliString(self.ops + "I" * (n - self.n_qubits), self.phase)

    def basis_factors(self) -> np.ndarray:
        """``c(s)`` with ``P|s> = c(s)|s ^ x>`` for every basis index ``s``."""
        s = np.arange(2**self.n_qubits)
        sign = 1.0 - 2.0 * parity(s & self.z)
        return (self.phase * 1j ** self.n_y) * sign

    def apply(self, amps: np.ndarray) -> np.ndarray:
        """``P |psi>``; leading axes of ``amps`` are batch axes."""
        idx = np.arange(2**self.n_qubits) ^ self.x
        return (self.basis_factors() * amps)[..., idx]

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        m = np.zeros((dim, dim), dtype=complex)
        s = np.arange(dim)
        m[s ^ self.x, s] = self.basis_factors()
        return m

    def _key(self):
        return (self.n_qubits, self.x, self.z, self._k)

    def __eq__(self, other):
        return isinstance(other, PauliString) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        sign = {0: "", 1: "i", 2: "-", 3: "-i"}[self._k]
        return f"PauliString({sign}{self.ops})"


@dataclass
class Hamiltonian:
    """``H = sum_i c_i P_i`` with real coefficients and Hermitian Pauli strings."""

    n_qubits: int
    terms: list[tuple[float, PauliString]] = field(default_factory=list)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        clean = []
        for c, p in self.terms:
            c = float(np.real_if_close(c))
            if not math.isfinite(c):
                raise ValueError(f"non-finite coefficient {c}")
            if p.n_qubits != self.n_qubits:
                raise ValueError(f"term {p} does not act on {self.n_qubits} qubits")
            if not p.is_hermitian:
                raise ValueError(f"term {p} is not Hermitian")
            # fold a -1 phase into the coefficient
            if p.phase == -1:
                c, p = -c, p.stripped()
            clean.append((c, p))
        self.terms = clean

    @property
    def m_terms(self) -> int:
        return len(self.terms)

    @property
    def is_diagonal(self) -> bool:
        return all(p.is_diagonal for _, p in self.terms)

    @cached_property
    def _grouped(self) -> list[tuple[np.ndarray, np.ndarray]]:
        dim = 2**self.n_qubits
        s = np.arange(dim)
        acc: dict[int, np.ndarray] = {}
        for c, p in self.terms:
            acc.setdefault(p.x, np.zeros(dim, dtype=complex))
            acc[p.x] += c * p.basis_factors()
        return [(s ^ x, coef) for x, coef in acc.items()]

    def apply(self, amps: np.ndarray) -> np.ndarray:
        """``H |psi>``; leading axes of ``amps`` are batch axes."""
        out = np.zeros(np.shape(amps), dtype=complex)
        for idx, coef in self._grouped:
            out += (coef * amps)[..., idx]
        return out

    def expectation(self, amps: np.ndarray) -> float:
        amps = np.asarray(amps)
        return float(np.real(np.vdot(amps, self.apply(amps)) / np.vdot(amps, amps)))

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        m = np.zeros((dim, dim), dtype=complex)
        for idx, coef in self._grouped:
            m[idx, np.arange(dim)] += coef
        return m

    def diagonal(self) -> np.ndarray:
        if not self.is_diagonal:
            raise ValueError("Hamiltonian has off-diagonal terms")
        return np.real(sum(coef for _, coef in self._grouped)) if self.terms else np.zeros(2**self.n_qubits)

    def interaction_edges(self) -> list[tuple[int, int]]:
        """Sorted qubit pairs touched by two-body terms."""
        edges = set()
        for _, p in self.terms:
            qs = p.qubits()
            if len(qs) == 2:
                edges.add(tuple(qs))
        return sorted(edges)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "terms": [{"coeff": c, "pauli": p.ops} for c, p in self.terms],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hamiltonian":
        return cls(int(d["n_qubits"]), [(float(t["coeff"]), PauliString(t["pauli"])) for t in d["terms"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Hamiltonian":
        return cls.from_dict(json.loads(text))


def _heisenberg_bond(n, a, b, jxy, jz):
    out = []
    for op, c in (("X", jxy), ("Y", jxy), ("Z", jz)):
        if c != 0.0:
            out.append((c, PauliString.on(n, {a: op, b: op})))
    return out


def build_j1j2_1d(n: int, J1: float = 1.0, J2: float = 0.6, delta1: float = 1.0, delta2: float = 1.0, B_H: float = 0.0) -> Hamiltonian:
    """Open 1D J1-J2 chain with XXZ anisotropies and a uniform Z field."""
    if n < 3:
        raise ValueError(f"J1-J2 chain needs n >= 3, got {n}")
    terms = []
    for i in range(n - 1):
        terms += _heisenberg_bond(n, i, i + 1, J1, J1 * delta1)
    for i in range(n - 2):
        terms += _heisenberg_bond(n, i, i + 2, J2, J2 * delta2)
    if B_H != 0.0:
        terms += [(B_H, PauliString.single(n, i, "Z")) for i in range(n)]
    return Hamiltonian(n, terms)


def grid_edges(rows: int, cols: int) -> list[tuple[int, int]]:
    edges = []
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                edges.append((q, q + 1))
            if r + 1 < rows:
                edges.append((q, q + cols))
    return sorted(edges)


def build_heisenberg_2d(rows: int, cols: int, h: float = 1.0, J: float = 1.0) -> Hamiltonian:
    """``h sum_i Z_i + J sum_<ij> (XX + YY + ZZ)`` on an open rows x cols grid."""
    n = rows * cols
    if rows < 1 or cols < 1 or n > MAX_QUBITS:
        raise ValueError(f"grid {rows}x{cols} outside 1..{MAX_QUBITS} sites")
    terms = [(h, PauliString.single(n, i, "Z")) for i in range(n)] if h != 0.0 else []
    for a, b in grid_edges(rows, cols):
        terms += _heisenberg_bond(n, a, b, J, J)
    return Hamiltonian(n, terms)


def build_tfim_1d(n: int, J: float = 1.0, g: float = 1.0) -> Hamiltonian:
    """``-J sum Z_i Z_{i+1} - g sum X_i`` on an open chain."""
    if n < 2:
        raise ValueError(f"TFIM chain needs n >= 2, got {n}")
    terms = [(-J, PauliString.on(n, {i: "Z", i + 1: "Z"})) for i in range(n - 1)]
    terms += [(-g, PauliString.single(n, i, "X")) for i in range(n)]
    return Hamiltonian(n, terms)


def build_ising_1d(n: int, J: float = 1.0, h: float = 0.0) -> Hamiltonian:
    """Classical chain ``-J sum Z_i Z_{i+1} - h sum Z_i``."""
    if n < 2:
        raise ValueError(f"Ising chain needs n >= 2, got {n}")
    terms = [(-J, PauliString.on(n, {i: "Z", i + 1: "Z"})) for i in range(n - 1)]
    if h != 0.0:
        terms += [(-h, PauliString.single(n, i, "Z")) for i in range(n)]
    return Hamiltonian(n, terms)


MODELS = {
    "j1j2": lambda p: build_j1j2_1d(
        int(p["n"]), p.get("J1", 1.0), p.get("J2", 0.6), p.get("delta1", 1.0), p.get("delta2", 1.0), p.get("B_H", 0.0)
    ),
    "heisenberg2d": lambda p: build_heisenberg_2d(int(p.get("rows", 1)), int(p.get("cols", p.get("n", 3))), p.get("h", 1.0), p.get("J", 1.0)),
    "tfim1d": lambda p: build_tfim_1d(int(p["n"]), p.get("J", 1.0), p.get("g", 1.0)),
    "ising1d": lambda p: build_ising_1d(int(p["n"]), p.get("J", 1.0), p.get("h", 0.0)),
}


def build_model(name: str, params: dict) -> Hamiltonian:
    try:
        builder = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return builder(params)


def ground_energy_dense(h: Hamiltonian) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of the full matrix; real arithmetic when the matrix is real."""
    m = h.to_matrix()
    if not np.any(m.imag):
        m = m.real
    w, v = la.eigh(m, subset_by_index=[0, 0])
    return float(w[0]), v[:, 0].astype(complex)


def ground_energy_lanczos(h: Hamiltonian, tol: float = 1e-12, seed: int = 0) -> tuple[float, np.ndarray]:
    """Matrix-free Lanczos (ARPACK) on ``h.apply``; no matrix is formed."""
    dim = 2**h.n_qubits
    op = sla.LinearOperator((dim, dim), matvec=lambda v: h.apply(v.ravel()), dtype=complex)
    v0 = np.random.default_rng(seed).normal(size=dim).astype(complex)
    w, v = sla.eigsh(op, k=1, which="SA", tol=tol, v0=v0, ncv=min(dim - 1, 40))
    return float(w[0]), v[:, 0]


def ground_state(h: Hamiltonian, method: str = "auto") -> tuple[float, Statevector]:
    """Lowest eigenpair. Dense for n <= 10, matrix-free Lanczos above."""
    if method == "auto":
        method = "dense" if h.n_qubits <= 10 else "lanczos"
    if method == "dense":
        if h.n_qubits > 12:
            raise ValueError("dense diagonalization is limited to 12 qubits")
        e, v = ground_energy_dense(h)
    elif method == "lanczos":
        if h.n_qubits < 2:
            e, v = ground_energy_dense(h)
        else:
            e, v = ground_energy_lanczos(h)
    else:
        raise ValueError(f"unknown method {method!r}")
    v = v / np.linalg.norm(v)
    resid = np.linalg.norm(h.apply(v) - e * v)
    if resid > 1e-8:
        raise RuntimeError(f"eigen-solver residual {resid:.2e} exceeds 1e-8")
    return e, Statevector(v)


# --- MaxCut -----------------------------------------------------------------


@dataclass
class Graph:
    n_vertices: int
    edges: list[tuple[int, int]]

    def __post_init__(self):
        clean = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v or not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"invalid edge ({u}, {v}) for {self.n_vertices} vertices")
            clean.add((min(u, v), max(u, v)))
        self.edges = sorted(clean)


def erdos_renyi(n_vertices: int, p: float = 0.3, seed=None) -> Graph:
    rng = np.random.default_rng(seed)
    edges = [(u, v) for u, v in itertools.combinations(range(n_vertices), 2) if rng.random() < p]
    return Graph(n_vertices, edges)


def write_edge_list(graph: Graph, path) -> None:
    lines = [f"# vertices {graph.n_vertices}"] + [f"{u} {v}" for u, v in graph.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path, n_vertices: int | None = None) -> Graph:
    edges, declared = [], None
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "vertices":
                declared = int(parts[1])
            continue
        u, v = line.split()[:2]
        edges.append((int(u), int(v)))
    if n_vertices is None:
        n_vertices = declared if declared is not None else 1 + max((max(e) for e in edges), default=-1)
    return Graph(n_vertices, edges)


def cut_value(graph: Graph, x: Sequence[int]) -> float:
    x = np.asarray(x)
    return float(sum((1 - x[u] * x[v]) / 2 for u, v in graph.edges))


def brute_force_maxcut(graph: Graph) -> tuple[float, np.ndarray]:
    """Optimal cut by enumeration; the last vertex is pinned to +1 by symmetry."""
    m = graph.n_vertices
    if m > 24:
        raise ValueError("brute force limited to 24 vertices")
    free = (np.arange(2 ** (m - 1))[:, None] >> np.arange(m - 1)) & 1
    full = np.hstack([1 - 2 * free, np.ones((free.shape[0], 1), dtype=int)])
    cuts = np.zeros(full.shape[0], dtype=int)
    if graph.edges:
        e = np.array(graph.edges)
        cuts = ((1 - full[:, e[:, 0]] * full[:, e[:, 1]]) // 2).sum(axis=1)
    i = int(np.argmax(cuts))
    return float(cuts[i]), full[i]


def encoding_capacity(n: int, k: int) -> int:
    return 3 * math.comb(n, k)


@dataclass
class MaxCutEncoding:
    """Vertex ``u`` is carried by the sign of a same-basis k-body correlation ``<P_u>``."""

    graph: Graph
    n_qubits: int
    k: int
    alpha: float
    variable_map: list[tuple[str, tuple[int, ...]]]

    @cached_property
    def observables(self) -> list[PauliString]:
        return [PauliString.on(self.n_qubits, {q: b for q in qs}) for b, qs in self.variable_map]

    @property
    def capacity(self) -> int:
        return encoding_capacity(self.n_qubits, self.k)

    def as_hamiltonian(self, coeffs: Sequence[float]) -> Hamiltonian:
        return Hamiltonian(self.n_qubits, list(zip(map(float, coeffs), self.observables)))

    def loss(self, corr: np.ndarray) -> float:
        t = np.tanh(self.alpha * np.asarray(corr))
        return float(sum(t[u] * t[v] for u, v in self.graph.edges))

    def loss_gradient(self, corr: np.ndarray) -> np.ndarray:
        """``dL/d<P_u>`` for every vertex."""
        t = np.tanh(self.alpha * np.asarray(corr))
        g = np.zeros_like(t)
        for u, v in self.graph.edges:
            g[u] += t[v]
            g[v] += t[u]
        return g * self.alpha * (1 - t**2)

    def round(self, corr: np.ndarray) -> np.ndarray:
        # ties break to +1
        return np.where(np.asarray(corr) < 0, -1, 1)

    def cut(self, corr: np.ndarray) -> float:
        return cut_value(self.graph, self.round(corr))


def maxcut_encode(graph: Graph, n: int, k: int = 2, alpha: float = 2.0) -> MaxCutEncoding:
    if k < 2 or k > n:
        raise ValueError(f"encoding order k must satisfy 2 <= k <= n, got k={k}, n={n}")
    cap = encoding_capacity(n, k)
    if graph.n_vertices > cap:
        raise ValueError(f"{graph.n_vertices} vertices exceed capacity 3*C({n},{k}) = {cap}")
    slots = [(b, qs) for b in "ZXY" for qs in itertools.combinations(range(n), k)]
    return MaxCutEncoding(graph, n, k, float(alpha), slots[: graph.n_vertices])


def pauli_words(strings: Iterable[PauliString]) -> list[str]:
    return [p.ops for p in strings]
