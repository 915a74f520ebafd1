"""Parameterized circuits and the ansatz families used by the solvers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .pauli import Hamiltonian, parity
from .qsim import DIAGONAL, PARAMETERIZED, Gate, Statevector, apply_gates

SIMULATABLE = frozenset({"H", "Ry"})


@dataclass(frozen=True)
class GateOp:
    """Gate template. Rotation angle is ``scale * params[param]`` or the fixed ``angle``."""

    kind: str
    targets: tuple[int, ...]
    param: str | None = None
    scale: float = 1.0
    angle: float | None = None

    def bind(self, params: dict[str, float]) -> Gate:
        if self.param is not None:
            return Gate(self.kind, self.targets, self.scale * params[self.param])
        return Gate(self.kind, self.targets, self.angle)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "targets": list(self.targets)}
        if self.param is not None:
            d["param"] = self.param
            if self.scale != 1.0:
                d["scale"] = self.scale
        if self.angle is not None:
            d["angle"] = self.angle
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GateOp":
        return cls(d["kind"], tuple(d["targets"]), d.get("param"), float(d.get("scale", 1.0)), d.get("angle"))


@dataclass
class Circuit:
    n_qubits: int
    ops: list[GateOp] = field(default_factory=list)
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.ops = list(self.ops)
        self.params = {k: float(v) for k, v in self.params.items()}
        for op in self.ops:
            if op.param is not None:
                if op.kind not in PARAMETERIZED:
                    raise ValueError(f"{op.kind} cannot carry a parameter")
                self.params.setdefault(op.param, 0.0)
            for t in op.targets:
                if not 0 <= t < self.n_qubits:
                    raise ValueError(f"qubit {t} out of range for {self.n_qubits} qubits")

    @property
    def parameter_names(self) -> list[str]:
        seen = {}
        for op in self.ops:
            if op.param is not None:
                seen.setdefault(op.param, None)
        return list(seen)

    @property
    def n_params(self) -> int:
        return len(self.parameter_names)

    def bind(self, values: dict[str, float] | None = None) -> "Circuit":
        params = dict(self.params)
        for k, v in (values or {}).items():
            if k not in params:
                raise KeyError(f"unknown parameter {k!r}")
            params[k] = float(v)
        return Circuit(self.n_qubits, self.ops, params)

    def bound_gates(self) -> list[Gate]:
        return [op.bind(self.params) for op in self.ops]

    def simulate(self, initial: Statevector | np.ndarray | None = None) -> Statevector:
        if initial is None:
            amps = Statevector.zero(self.n_qubits).amps
        else:
            amps = initial.amps if isinstance(initial, Statevector) else np.asarray(initial, dtype=complex)
        return Statevector(apply_gates(amps, self.bound_gates(), self.n_qubits))

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot compose circuits of different widths")
        return Circuit(self.n_qubits, self.ops + other.ops, {**self.params, **other.params})

    @property
    def is_diagonal(self) -> bool:
        return all(op.kind in DIAGONAL for op in self.ops)

    def count(self, kind: str) -> int:
        return sum(op.kind == kind for op in self.ops)

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "gates": [op.to_dict() for op in self.ops], "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        return cls(int(d["n_qubits"]), [GateOp.from_dict(g) for g in d["gates"]], d.get("params", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


def _z_signs(n: int, q: int) -> np.ndarray:
    return 1.0 - 2.0 * ((np.arange(2**n) >> (n - 1 - q)) & 1)


def diagonal_generators(block: Circuit) -> tuple[list[str], np.ndarray, np.ndarray]:
    """For a diagonal block: parameter name, scale and Z-eigenvalue row of every rotation.

    A rotation contributes ``exp(-i/2 * scale * theta * row)`` to the diagonal.
    """
    names, scales, rows = [], [], []
    for op in block.ops:
        if op.param is None:
            continue
        if op.kind == "Rz":
            row = _z_signs(block.n_qubits, op.targets[0])
        elif op.kind == "Rzz":
            row = _z_signs(block.n_qubits, op.targets[0]) * _z_signs(block.n_qubits, op.targets[1])
        else:
            raise ValueError(f"{op.kind} is not a diagonal rotation")
        names.append(op.param)
        scales.append(op.scale)
        rows.append(row)
    z = np.array(rows) if rows else np.zeros((0, 2**block.n_qubits))
    return names, np.array(scales), z


def diagonal_phases(block: Circuit, params: dict[str, float] | None = None) -> np.ndarray:
    """The diagonal of a circuit made only of diagonal gates."""
    params = block.params if params is None else {**block.params, **params}
    n = block.n_qubits
    s = np.arange(2**n)
    d = np.ones(2**n, dtype=complex)
    for op in block.ops:
        bit = [(s >> (n - 1 - t)) & 1 for t in op.targets]
        if op.kind == "Rz" or op.kind == "Rzz":
            theta = op.scale * params[op.param] if op.param is not None else op.angle
            zz = np.prod([1 - 2 * b for b in bit], axis=0)
            d *= np.exp(-0.5j * theta * zz)
        elif op.kind == "Z":
            d *= 1 - 2 * bit[0]
        elif op.kind == "S":
            d *= np.where(bit[0] == 1, 1j, 1.0)
        elif op.kind == "Sdg":
            d *= np.where(bit[0] == 1, -1j, 1.0)
        elif op.kind == "CZ":
            d *= 1 - 2 * (bit[0] & bit[1])
        else:
            raise ValueError(f"{op.kind} is not diagonal")
    return d


@dataclass
class SignAnsatz:
    """Alternating simulatable blocks ``G_l`` and diagonal blocks ``W_l``.

    Execution order is ``G_1 W_1 G_2 W_2 ... G_L W_L`` followed by a trailing
    per-qubit Ry block. ``G_1`` is the Hadamard layer; ``G_l`` for ``l >= 2``
    is the Ry block that trailed ``W_{l-1}``, so each layer owns one Ry block.
    """

    n_qubits: int
    edges: list[tuple[int, int]]
    layers: list[tuple[Circuit, Circuit]]
    trailing: Circuit

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def params(self) -> dict[str, float]:
        out = {}
        for g, w in self.layers:
            out.update(g.params)
            out.update(w.params)
        out.update(self.trailing.params)
        return out

    @property
    def n_params(self) -> int:
        return len(self.params)

    def g_names(self, layer: int) -> list[str]:
        """Ry parameters of ``G_layer`` (1-based); ``G_{L+1}`` is the trailing block."""
        if layer == self.n_layers + 1:
            return self.trailing.parameter_names
        return self.layers[layer - 1][0].parameter_names

    def w_names(self, layer: int) -> list[str]:
        return self.layers[layer - 1][1].parameter_names

    def g_block(self, layer: int) -> Circuit:
        return self.trailing if layer == self.n_layers + 1 else self.layers[layer - 1][0]

    def w_block(self, layer: int) -> Circuit:
        return self.layers[layer - 1][1]

    def circuit(self, upto: int | None = None, trailing: bool = False) -> Circuit:
        """Circuit ``G_1 W_1 ... G_upto W_upto`` (plus the trailing block if asked)."""
        upto = self.n_layers if upto is None else upto
        c = Circuit(self.n_qubits)
        for g, w in self.layers[:upto]:
            c = c + g + w
        if trailing:
            c = c + (self.trailing if upto == self.n_layers else self.layers[upto][0])
        return c

    def with_params(self, values: dict[str, float]) -> "SignAnsatz":
        def upd(block: Circuit) -> Circuit:
            return block.bind({k: v for k, v in values.items() if k in block.params})

        unknown = set(values) - set(self.params)
        if unknown:
            raise KeyError(f"unknown parameters {sorted(unknown)}")
        return SignAnsatz(
            self.n_qubits, list(self.edges), [(upd(g), upd(w)) for g, w in self.layers], upd(self.trailing)
        )

    def validate(self) -> None:
        for l, (g, w) in enumerate(self.layers, start=1):
            bad = [op.kind for op in w.ops if op.kind not in DIAGONAL]
            if bad:
                raise ValueError(f"W_{l} contains non-diagonal gates {bad}")
            bad = [op.kind for op in g.ops if op.kind not in SIMULATABLE]
            if bad:
                raise ValueError(f"G_{l} contains non-simulatable gates {bad}")
        if any(op.kind not in SIMULATABLE for op in self.trailing.ops):
            raise ValueError("trailing block must be simulatable")
        if self.layers and any(op.kind != "H" for op in self.layers[0][0].ops):
            raise ValueError("G_1 must be the Hadamard layer")
        seen: set[str] = set()
        for block in [b for pair in self.layers for b in pair] + [self.trailing]:
            names = set(block.parameter_names)
            if names & seen:
                raise ValueError(f"parameters shared across blocks: {sorted(names & seen)}")
            seen |= names

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "edges": [list(e) for e in self.edges],
            "layers": [{"G": g.to_dict(), "W": w.to_dict()} for g, w in self.layers],
            "trailing": self.trailing.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SignAnsatz":
        return cls(
            int(d["n_qubits"]),
            [tuple(e) for e in d["edges"]],
            [(Circuit.from_dict(x["G"]), Circuit.from_dict(x["W"])) for x in d["layers"]],
            Circuit.from_dict(d["trailing"]),
        )


def _ry_block(n: int, prefix: str) -> Circuit:
    return Circuit(n, [GateOp("Ry", (q,), f"{prefix}_ry{q}") for q in range(n)])


def _w_block(n: int, edges, prefix: str) -> Circuit:
    ops = [GateOp("Rz", (q,), f"{prefix}_rz{q}") for q in range(n)]
    ops += [GateOp("Rzz", (a, b), f"{prefix}_rzz{a}_{b}") for a, b in edges]
    return Circuit(n, ops)


def _check_edges(n, edges) -> list[tuple[int, int]]:
    out = []
    for e in edges:
        a, b = (int(v) for v in e)
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"invalid edge {e} for {n} qubits")
        out.append((a, b))
    return out


def build_sign_ansatz(n: int, edges: Iterable[Sequence[int]], n_layers: int = 1) -> SignAnsatz:
    """Sign ansatz with all parameters at zero; see :class:`SignAnsatz`."""
    if n_layers < 1:
        raise ValueError(f"need at least one layer, got {n_layers}")
    edges = _check_edges(n, edges)
    layers = [(Circuit(n, [GateOp("H", (q,)) for q in range(n)]), _w_block(n, edges, "w1"))]
    for l in range(2, n_layers + 1):
        layers.append((_ry_block(n, f"g{l}"), _w_block(n, edges, f"w{l}")))
    ans = SignAnsatz(n, edges, layers, _ry_block(n, f"g{n_layers + 1}"))
    ans.validate()
    return ans


def build_hea(n: int, reps: int = 1) -> Circuit:
    """Hardware-efficient ansatz: ``reps`` x (Ry, Rz, CNOT chain) then a final Ry+Rz layer.

    ``reps=0`` is the single Ry+Rz layer.
    """
    if reps < 0:
        raise ValueError(f"reps must be >= 0, got {reps}")
    ops = []
    for r in range(reps + 1):
        ops += [GateOp("Ry", (q,), f"hea{r}_ry{q}") for q in range(n)]
        ops += [GateOp("Rz", (q,), f"hea{r}_rz{q}") for q in range(n)]
        if r < reps:
            ops += [GateOp("CNOT", (q, q + 1)) for q in range(n - 1)]
    return Circuit(n, ops)


def build_qaoa(h: Hamiltonian, p_layers: int) -> Circuit:
    """``H^n`` then ``p`` rounds of ``exp(-i gamma_l H_C) exp(-i beta_l sum X)``."""
    if p_layers < 1:
        raise ValueError(f"need at least one QAOA layer, got {p_layers}")
    if not h.is_diagonal:
        raise ValueError("QAOA cost Hamiltonian must be diagonal")
    n = h.n_qubits
    ops = [GateOp("H", (q,)) for q in range(n)]
    for l in range(1, p_layers + 1):
        for c, pstr in h.terms:
            qs = pstr.qubits()
            if len(qs) == 1:
                ops.append(GateOp("Rz", tuple(qs), f"gamma{l}", 2.0 * c))
            elif len(qs) == 2:
                ops.append(GateOp("Rzz", tuple(qs), f"gamma{l}", 2.0 * c))
            elif len(qs) > 2:
                raise ValueError(f"cost terms beyond two-body are not supported: {pstr}")
        ops += [GateOp("Rx", (q,), f"beta{l}", 2.0) for q in range(n)]
    return Circuit(n, ops)


def default_brickwork_depth(m_variables: int) -> int:
    return max(1, math.ceil(math.sqrt(m_variables)))


def build_brickwork(n: int, depth: int) -> Circuit:
    """``depth`` layers of (Ry on every qubit, CZ on alternating neighbour pairs)."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    ops = []
    for d in range(depth):
        ops += [GateOp("Ry", (q,), f"bw{d}_ry{q}") for q in range(n)]
        ops += [GateOp("CZ", (q, q + 1)) for q in range(d % 2, n - 1, 2)]
    return Circuit(n, ops)


def decompose_native(circuit: Circuit) -> Circuit:
    """Rewrite Rzz, Ry, Rx and CNOT into {XP, XM, YP, YM, CZ, Rz, H, ...}.

    Rzz(a,b)  = YM_b CZ YP_b Rz_b YM_b CZ YP_b   (CNOT . Rz_b . CNOT)
    CNOT(c,t) = YM_t CZ YP_t
    Ry        = XP Rz XM
    Rx        = YM Rz YP
    (sequences in time order)
    """
    ops = []
    for op in circuit.ops:
        rz = replace(op, kind="Rz", targets=(op.targets[-1],))
        if op.kind == "Rzz":
            a, b = op.targets
            cnot = [GateOp("YM", (b,)), GateOp("CZ", (a, b)), GateOp("YP", (b,))]
            ops += cnot + [rz] + cnot
        elif op.kind == "CNOT":
            c, t = op.targets
            ops += [GateOp("YM", (t,)), GateOp("CZ", (c, t)), GateOp("YP", (t,))]
        elif op.kind == "Ry":
            q = op.targets[0]
            ops += [GateOp("XP", (q,)), rz, GateOp("XM", (q,))]
        elif op.kind == "Rx":
            q = op.targets[0]
            ops += [GateOp("YM", (q,)), rz, GateOp("YP", (q,))]
        else:
            ops.append(op)
    return Circuit(circuit.n_qubits, ops, dict(circuit.params))


def init_params(names: Iterable[str], rng: np.random.Generator, low: float = -2 * math.pi, high: float = 2 * math.pi) -> dict[str, float]:
    return {k: float(rng.uniform(low, high)) for k in names}


def z_parity_signs(n: int, mask: int) -> np.ndarray:
    return 1.0 - 2.0 * parity(np.arange(2**n) & mask)
