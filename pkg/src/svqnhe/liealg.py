"""Dimension of the Lie closure of Pauli-sum generators.

An element ``i * sum_P c_P P`` is stored as the real vector ``c`` over the
``4^n`` Pauli strings, indexed by ``x * 2^n + z`` for ``sigma(x, z)``. The
commutator of ``iP`` and ``iQ`` is zero when they commute and ``-2 w iR``
(with ``PQ = w R``, ``w = +-i``) otherwise, so the bracket stays real.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliString

MAX_QUBITS = 5
TOL = 1e-9


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


@lru_cache(maxsize=None)
def _tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Product index and bracket coefficient for every pair of basis strings."""
    dim = 4**n
    idx = np.arange(dim, dtype=np.int64)
    x, z = idx >> n, idx & (2**n - 1)
    x1, z1, x2, z2 = x[:, None], z[:, None], x[None, :], z[None, :]
    xr, zr = x1 ^ x2, z1 ^ z2
    expo = (_popcount(x1 & z1) + _popcount(x2 & z2) - _popcount(xr & zr) + 2 * _popcount(z1 & x2)) % 4
    anti = (_popcount(x1 & z2) + _popcount(z1 & x2)) % 2 == 1
    # anticommuting pairs have w = i (expo 1) or w = -i (expo 3); bracket coefficient is 2 i w
    coef = np.where(anti, np.where(expo == 1, -2.0, 2.0), 0.0)
    return (xr << n | zr), coef


def pauli_index(p: PauliString) -> int:
    return (p.x << p.n_qubits) | p.z


def element(n: int, terms: Iterable[tuple[float, str | PauliString]]) -> np.ndarray:
    """Real coefficient vector of ``i * sum c P`` (phases of the strings are dropped)."""
    v = np.zeros(4**n)
    for c, p in terms:
        p = PauliString(p) if isinstance(p, str) else p
        if p.n_qubits != n:
            raise ValueError(f"string {p.ops} is not on {n} qubits")
        v[pauli_index(p.stripped())] += c
    return v


def commutator(u: np.ndarray, v: np.ndarray, n: int) -> np.ndarray:
    prod, coef = _tables(n)
    a, b = np.nonzero(u)[0], np.nonzero(v)[0]
    if a.size == 0 or b.size == 0:
        return np.zeros_like(u)
    w = u[a][:, None] * v[b][None, :] * coef[np.ix_(a, b)]
    return np.bincount(prod[np.ix_(a, b)].ravel(), weights=w.ravel(), minlength=u.size)


@dataclass
class AlgebraBasis:
    """Spanning set of the closure: raw elements plus an orthonormal copy for rank checks."""

    n_qubits: int
    elements: list[np.ndarray]
    ortho: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.elements)


def _residual(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    if q.shape[0] == 0:
        return v
    r = v - q.T @ (q @ v)
    return r - q.T @ (q @ r)


def lie_closure(generators: Sequence[np.ndarray], n: int) -> AlgebraBasis:
    """Add brackets of new elements with every basis element until nothing new appears."""
    if n > MAX_QUBITS:
        raise ValueError(f"closure limited to {MAX_QUBITS} qubits")
    elements: list[np.ndarray] = []
    ortho = np.zeros((0, 4**n))

    def insert(v: np.ndarray) -> bool:
        nonlocal ortho
        norm = np.linalg.norm(v)
        if norm < TOL:
            return False
        r = _residual(ortho, v / norm)
        rn = np.linalg.norm(r)
        if rn < TOL:
            return False
        elements.append(v / norm)
        ortho = np.vstack([ortho, r / rn])
        return True

    for g in generators:
        insert(np.asarray(g, dtype=float))
    frontier = 0
    while frontier < len(elements):
        new = elements[frontier]
        for j in range(frontier):
            insert(commutator(new, elements[j], n))
        frontier += 1
    return AlgebraBasis(n, elements, ortho)


def closure_dimension(generators: Sequence[np.ndarray], n: int) -> int:
    return lie_closure(generators, n).dimension


def _z_on(n: int, qubits: Sequence[int]) -> str:
    return "".join("Z" if q in qubits else "I" for q in range(n))


def _single(n: int, q: int, op: str) -> str:
    return "".join(op if k == q else "I" for k in range(n))


def individual_generators(n: int, m: int) -> list[np.ndarray]:
    """Each even-size Z string (sizes 2, 4, ..., up to m) and each single-qubit Y separately."""
    _check(n, m)
    gens = [element(n, [(1.0, _z_on(n, s))]) for j in range(1, m // 2 + 1) for s in combinations(range(n), 2 * j)]
    return gens + [element(n, [(1.0, _single(n, q, "Y"))]) for q in range(n)]


def summed_generators(n: int, m: int) -> list[np.ndarray]:
    """One summed Z string per even size (2, 4, ..., up to m) and the summed X field."""
    _check(n, m)
    gens = [element(n, [(1.0, _z_on(n, s)) for s in combinations(range(n), 2 * j)]) for j in range(1, m // 2 + 1)]
    return gens + [element(n, [(1.0, _single(n, q, "X")) for q in range(n)])]


def _check(n: int, m: int) -> None:
    if not 2 <= m <= n:
        raise ValueError(f"m must lie in 2..n, got m={m}, n={n}")
    if n > MAX_QUBITS:
        raise ValueError(f"closure limited to {MAX_QUBITS} qubits")


def compare_generator_sets(n: int, m: int) -> tuple[int, int, bool]:
    """``(dim of individual-generator algebra, dim of summed-generator algebra, second < first)``."""
    d1 = closure_dimension(individual_generators(n, m), n)
    d2 = closure_dimension(summed_generators(n, m), n)
    return d1, d2, d2 < d1


def block_algebra_dimension(n: int) -> int:
    """``2 (4^(n-1) - 1)``, the dimension of two copies of su(2^(n-1))."""
    return 2 * (4 ** (n - 1) - 1)
