"""Slow, independent reference implementations used only by the tests.

Everything here is built from Kronecker products of 2x2 matrices and dense
linear algebra, sharing no code with the package's fast paths.
"""

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def kron_all(mats):
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def pauli_matrix(word):
    """Dense matrix of a word like "XIZ"; qubit 0 is the leftmost factor."""
    return kron_all(PAULI[c] for c in word)


def embed_1q(mat, q, n):
    return kron_all(mat if k == q else I2 for k in range(n))


def embed_2q(mat, a, b, n):
    """Embed a 4x4 matrix on qubits (a, b), ``a`` being the first tensor factor of ``mat``."""
    out = np.zeros((2**n, 2**n), dtype=complex)
    # expand mat = sum_{ij,kl} m[ij,kl] |ij><kl| into |i><k| on a and |j><l| on b
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    c = mat[2 * i + j, 2 * k + l]
                    if c == 0:
                        continue
                    ops = []
                    for q in range(n):
                        if q == a:
                            ops.append(np.outer(np.eye(2)[i], np.eye(2)[k]))
                        elif q == b:
                            ops.append(np.outer(np.eye(2)[j], np.eye(2)[l]))
                        else:
                            ops.append(I2)
                    out += c * kron_all(ops)
    return out


def rot(pauli, theta):
    """exp(-i theta P / 2) from the power series identity cos - i sin P."""
    return np.cos(theta / 2) * np.eye(len(pauli)) - 1j * np.sin(theta / 2) * pauli


def dense_gate(kind, targets, angle, n):
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    one = {
        "H": h,
        "X": X,
        "Y": Y,
        "Z": Z,
        "S": np.diag([1, 1j]),
        "Sdg": np.diag([1, -1j]),
        "XP": rot(X, np.pi / 2),
        "XM": rot(X, -np.pi / 2),
        "YP": rot(Y, np.pi / 2),
        "YM": rot(Y, -np.pi / 2),
    }
    if kind in one:
        return embed_1q(one[kind], targets[0], n)
    if kind in ("Rx", "Ry", "Rz"):
        return embed_1q(rot(PAULI[kind[1].upper()], angle), targets[0], n)
    a, b = targets
    if kind == "Rzz":
        zz = embed_1q(Z, a, n) @ embed_1q(Z, b, n)
        return rot(zz, angle)
    if kind == "CZ":
        return np.eye(2**n) - 2 * embed_1q(P1, a, n) @ embed_1q(P1, b, n)
    if kind == "CNOT":
        return embed_1q(P0, a, n) + embed_1q(P1, a, n) @ embed_1q(X, b, n)
    raise ValueError(kind)


def dense_unitary(gates, n):
    u = np.eye(2**n, dtype=complex)
    for g in gates:
        u = dense_gate(g.kind, g.targets, g.angle, n) @ u
    return u


def dense_hamiltonian(h):
    return sum(c * pauli_matrix(p.ops) * p.phase for c, p in h.terms)


def rayleigh(psi, mat):
    return float(np.real(np.vdot(psi, mat @ psi) / np.vdot(psi, psi)))


def hybrid_rayleigh(psi, f, hmat):
    """<psi|F H F|psi> / <psi|F^2|psi> with F = diag(f)."""
    phi = f * psi
    return float(np.real(np.vdot(phi, hmat @ phi) / np.vdot(phi, phi)))


def depolarize_rho(rho, q, p, n):
    """Single-qubit depolarizing channel: (1 - p) rho + p * average over {I, X, Y, Z}."""
    twirl = sum(embed_1q(P, q, n) @ rho @ embed_1q(P, q, n).conj().T for P in (I2, X, Y, Z)) / 4
    return (1 - p) * rho + p * twirl


def noisy_density_matrix(gates, n, p1, p2):
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1
    for g in gates:
        u = dense_gate(g.kind, g.targets, g.angle, n)
        rho = u @ rho @ u.conj().T
        p = p2 if len(g.targets) == 2 else p1
        for q in g.targets:
            rho = depolarize_rho(rho, q, p, n)
    return rho


def power_iteration_ground(hmat, iters=20000, seed=0):
    """Lowest eigenvalue of a Hermitian matrix by shifted power iteration."""
    rng = np.random.default_rng(seed)
    shift = np.abs(hmat).sum(axis=1).max()
    a = shift * np.eye(len(hmat)) - hmat
    v = rng.normal(size=len(hmat)) + 0j
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = a @ v
        lam_new = np.real(np.vdot(v, w))
        v = w / np.linalg.norm(w)
        if abs(lam_new - lam) < 1e-15 * max(1.0, abs(lam_new)):
            break
        lam = lam_new
    return rayleigh(v, hmat)


def finite_difference(fn, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g
