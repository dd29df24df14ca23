"""Independent reference implementations used as test oracles.

Nothing here imports the code under test, except for plain data containers.
"""
import itertools
from functools import lru_cache

import numpy as np


# ---------------------------------------------------------------- integers

@lru_cache(maxsize=None)
def row_solutions(m, value):
    """Every nonnegative g with g . m == value, in lexicographic order (nested loops)."""
    out = []

    def rec(e, rest, prefix):
        if e == len(m) - 1:
            if rest % m[e] == 0:
                out.append(prefix + (rest // m[e],))
            return
        for t in range(rest // m[e] + 1):
            rec(e + 1, rest - t * m[e], prefix + (t,))

    rec(0, value, ())
    return tuple(out)


def brute_solutions(m, n, inclusion=True):
    """All matrices G >= 0 with G m = n, row-major lexicographic."""
    m, n = tuple(m), tuple(n)
    per_row = [row_solutions(m, v) for v in n]
    for rows in itertools.product(*per_row):
        if inclusion and not all(any(r[c] for r in rows) for c in range(len(m))):
            continue
        yield rows


def brute_divides(m, n):
    """Lexicographically first inclusion witness as a tuple of rows, or None."""
    return next(brute_solutions(m, n), None)


def brute_morphism_count(m, n):
    """(total, injective) counts of mapping matrices from dims m into dims n."""
    total = injective = 0
    for rows in brute_solutions(m, n, inclusion=False):
        total += 1
        injective += all(any(r[c] for r in rows) for c in range(len(m)))
    return total, injective


def matmul_int(a, b):
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(len(b)))
                       for j in range(len(b[0]))) for i in range(len(a)))


# ---------------------------------------------------------------- spectra

def jacobi_eigh(h, sweeps=100, tol=1e-14):
    """Cyclic Jacobi for a complex Hermitian matrix; eigenvalues ascending.

    Each rotation first removes the phase of the pivot, then applies a real
    Givens rotation.
    """
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2))
        if off < tol * max(1.0, np.abs(a).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                phase = apq / abs(apq)
                d = np.eye(n, dtype=complex)
                d[q, q] = phase
                a = d.conj().T @ a @ d
                v = v @ d
                app, aqq, r = a[p, p].real, a[q, q].real, a[p, q].real
                theta = 0.5 * np.arctan2(2 * r, aqq - app)
                c, s = np.cos(theta), np.sin(theta)
                g = np.eye(n, dtype=complex)
                g[p, p] = c
                g[q, q] = c
                g[p, q] = s
                g[q, p] = -s
                a = g.T @ a @ g
                v = v @ g
    w = np.diag(a).real
    order = np.argsort(w)
    return w[order], v[:, order]


def apply_spectral(f, h):
    w, v = jacobi_eigh(h)
    return (v * np.array([f(x) for x in w])) @ v.conj().T


# ---------------------------------------------------------------- positivity

def amplified(phi_apply, X, n):
    """(id_k (x) phi)(X) for X in M_k(M_n), evaluating phi block by block."""
    k = X.shape[0] // n
    blocks = [[phi_apply(X[i * n:(i + 1) * n, j * n:(j + 1) * n]) for j in range(k)]
              for i in range(k)]
    return np.block(blocks)


def k_positivity_min(phi_apply, n, k, rng, samples=8):
    """Smallest eigenvalue of (id_k (x) phi)(vv*) over random v in C^k (x) C^n.

    With k = n and a generic v this is congruent to the Choi matrix, so by
    Sylvester's law of inertia the sign is exact.
    """
    worst = np.inf
    for _ in range(samples):
        v = rng.standard_normal(k * n) + 1j * rng.standard_normal(k * n)
        v /= np.linalg.norm(v)
        out = amplified(phi_apply, np.outer(v, v.conj()), n)
        worst = min(worst, np.linalg.eigvalsh((out + out.conj().T) / 2)[0])
    return worst


# ---------------------------------------------------------------- operators

def commutator_norm(a, p):
    return np.linalg.norm(a @ p - p @ a, 2)


def coordinate_projection(d, idx):
    p = np.zeros((d, d))
    for i in idx:
        p[i, i] = 1
    return p
