"""Acceptance suite: one test per criterion, each timed against its limit.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists a
PASS/FAIL line per criterion.
"""
import itertools

import numpy as np
import pytest

from afembed.algebra import MappingMatrix, mapping_matrix_of, random_unitary, realize
from afembed.bratteli import (BratteliChain, classify_morphisms, make_compatible, uhf_check,
                              validate_matrix_sequence)
from afembed.cpmaps import CpMap, is_cp, random_cp_map, stinespring, transpose_map
from afembed.divisibility import divides, enumerate_witnesses
from afembed.errors import NonConvergent
from afembed.matnum import (correct_near_contraction, correct_projection, lift_partial_isometry,
                            projection_defect)
from afembed.qdcert import certify, search_subspace, truncated_shift
from afembed.algebra import BlockMatrix
from afembed.ultrasim import IndexedFamily, UltraElement, quotient_algebra_check, up_norm

from oracles import brute_divides, brute_morphism_count, brute_solutions, k_positivity_min, matmul_int
from strategies import random_chain, random_dims, random_hermitian, random_mapping, random_projection


def _op(x):
    return np.linalg.norm(x, 2)


def _is_projection(p, tol=1e-10):
    return _op(p @ p - p) <= tol and _op(p - p.conj().T) <= tol


def test_criterion_01_divisibility_example(criterion):
    with criterion(1, "divisibility example (1,1,2) | (10)", 1):
        wit = divides((1, 1, 2), (10,))
        assert wit is not None and wit.check()
        gammas = {w.gamma.entries for w in enumerate_witnesses((1, 1, 2), (10,))}
        assert ((2, 2, 3),) in gammas and ((3, 3, 2),) in gammas
        assert gammas == set(brute_solutions((1, 1, 2), (10,)))


def test_criterion_02_divides_matches_brute_force(criterion):
    vectors = [v for length in (1, 2, 3) for v in itertools.product(range(1, 9), repeat=length)]
    with criterion(2, f"divides vs brute force on all {len(vectors) ** 2} pairs", 60):
        for m in vectors:
            for n in vectors:
                wit = divides(m, n)
                expected = brute_divides(m, n)
                if expected is None:
                    assert wit is None, (m, n)
                else:
                    assert wit is not None and wit.gamma.entries == expected, (m, n)


def test_criterion_03_classification_count(criterion):
    with criterion(3, "classify C in C+C into M_3", 1):
        chain = BratteliChain.from_dims([(1,), (1, 1)], [[[1], [1]]])
        classes = classify_morphisms(chain, (3,))
        assert len(classes) == 4
        assert sum(c.injective for c in classes) == 2
        assert brute_morphism_count((1, 1), (3,)) == (4, 2)
        deep = sorted(c.gammas[-1].entries for c in classes)
        assert deep == sorted(brute_solutions((1, 1), (3,), inclusion=False))


def test_criterion_04_round_trip(criterion):
    rng = np.random.default_rng(104)
    with criterion(4, "mapping_matrix_of(realize(L)) = L, 1000 samples", 10):
        for _ in range(1000):
            rows, cols = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            lam = MappingMatrix(random_mapping(rng, rows, cols, max_entry=4))
            source = random_dims(rng, cols, 4)
            target = matmul_int(lam.entries, [[d] for d in source])
            phi = realize(lam, source, tuple(r[0] for r in target))
            assert mapping_matrix_of(phi) == lam


def test_criterion_05_back_propagation(criterion):
    rng = np.random.default_rng(105)
    with criterion(5, "back-propagation on 200 chains", 30):
        for _ in range(200):
            dims, incs = random_chain(rng, int(rng.integers(1, 5)), max_dim=6)
            chain = BratteliChain.from_dims(dims, incs)
            deepest = dims[-1]
            g = random_mapping(rng, int(rng.integers(1, 3)), len(deepest), max_entry=3,
                               inclusion=True)
            target = tuple(sum(a * b for a, b in zip(row, deepest)) for row in g)
            wit = divides(deepest, target)
            assert wit is not None
            seq = make_compatible(chain, wit.gamma)
            assert validate_matrix_sequence(chain, seq).valid
            assert all(gk.is_inclusion() for gk in seq.gammas)


def test_criterion_06_projection_correction(criterion):
    rng = np.random.default_rng(106)
    with criterion(6, "projection correction, 500 samples", 10):
        done = 0
        while done < 500:
            n = int(rng.integers(1, 13))
            p = random_projection(rng, n, int(rng.integers(0, n + 1)))
            x = p + random_hermitian(rng, n, 10 ** rng.uniform(-7, -3.5))
            delta = projection_defect(x)
            if delta > 1e-3:
                continue
            q = correct_projection(x)
            assert _is_projection(q)
            assert _op(q - x) <= 2 * delta
            done += 1


def test_criterion_07_partial_isometry(criterion):
    rng = np.random.default_rng(107)
    with criterion(7, "partial-isometry lift, 500 samples", 10):
        for _ in range(500):
            n = int(rng.integers(2, 9))
            r_p, r_q = int(rng.integers(1, n + 1)), int(rng.integers(1, n + 1))
            p, q = random_projection(rng, n, r_p), random_projection(rng, n, r_q)
            vp = np.linalg.eigh(p)[1][:, -r_p:]
            vq = np.linalg.eigh(q)[1][:, -r_q:]
            k = min(r_p, r_q)
            # singular values clear of the gap (1/3, 2/3) of b*b
            sv = np.where(rng.random(k) < 0.5, rng.uniform(0.0, 0.5, k), rng.uniform(0.85, 1.1, k))
            core = np.zeros((r_q, r_p))
            core[:k, :k] = np.diag(sv)
            b = vq @ random_unitary(r_q, rng) @ core @ random_unitary(r_p, rng) @ vp.conj().T
            w = lift_partial_isometry(b, p, q)
            init, fin = w.conj().T @ w, w @ w.conj().T
            assert _is_projection(init) and _is_projection(fin)
            assert _op(p @ init - init) <= 1e-10
            assert _op(q @ fin - fin) <= 1e-10


def test_criterion_08_near_contraction(criterion):
    rng = np.random.default_rng(108)
    with criterion(8, "near-contraction correction, 500 samples", 10):
        for _ in range(100):
            n = int(rng.integers(1, 7))
            u = random_unitary(n, rng)
            c = 1 + rng.uniform(0, 1e-2)
            assert _op(correct_near_contraction(c * u) - u) <= 1e-10
        for _ in range(500):
            n = int(rng.integers(1, 7))
            v = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            v *= rng.uniform(0.5, 1.01) / _op(v)
            w = correct_near_contraction(v)
            assert _op(w) <= 1 + 1e-12
            assert _op(w - v) <= max(_op(v) - 1, 0) + 1e-8


def _random_hermitian_map(rng, n, target, negative):
    d = sum(target)
    z = rng.standard_normal((n * d, n * d)) + 1j * rng.standard_normal((n * d, n * d))
    h = (z + z.conj().T) / 2
    mask = np.zeros((d, d), dtype=bool)
    off = 0
    for f in target:
        mask[off:off + f, off:off + f] = True
        off += f
    h = h * np.kron(np.ones((n, n)), mask)
    w, v = np.linalg.eigh(h)
    if negative:
        w = np.where(w < 0, np.minimum(w, -0.05), w)
        w[0] = min(w[0], -0.5)
    else:
        w = np.abs(w) + 0.05
    return CpMap(n, tuple(target), (v * w) @ v.conj().T)


def test_criterion_09_choi_cp(criterion):
    rng = np.random.default_rng(109)
    with criterion(9, "Choi/CP verdicts vs k-positivity, 200 maps", 30):
        verdict = is_cp(transpose_map(2))
        assert not verdict.cp
        assert abs(verdict.min_eigenvalue + 1) <= 1e-10
        for trial in range(200):
            n = int(rng.integers(2, 4))
            target = tuple(int(v) for v in rng.integers(1, 3, size=int(rng.integers(1, 3))))
            m = _random_hermitian_map(rng, n, target, negative=trial % 2 == 0)
            cp = is_cp(m).cp
            # k = n is exact for a generic vector; smaller k are necessary conditions
            assert cp == (k_positivity_min(m, n, n, rng, samples=2) >= -1e-9)
            if cp:
                for k in range(1, n):
                    assert k_positivity_min(m, n, k, rng, samples=2) >= -1e-9


def test_criterion_10_stinespring(criterion):
    rng = np.random.default_rng(110)
    with criterion(10, "Stinespring reconstruction, 200 maps", 30):
        for _ in range(200):
            n = int(rng.choice([2, 3]))
            total = int(rng.integers(1, 10))
            blocks = []
            while sum(blocks) < total:
                blocks.append(int(rng.integers(1, total - sum(blocks) + 1)))
            m = random_cp_map(n, tuple(blocks), rng, n_kraus=int(rng.integers(1, 4)),
                              scale=float(rng.uniform(0.1, 3)))
            st = stinespring(m)
            for i in range(n):
                for j in range(n):
                    e = np.zeros((n, n))
                    e[i, j] = 1
                    assert _op(st(e) - m.value(i, j)) <= 1e-10


def test_criterion_11_ultraproduct(criterion):
    rng = np.random.default_rng(111)
    with criterion(11, "ultraproduct norm, divergence and C*-identity", 30):
        fam = IndexedFamily.constant((1,), 256, 32)
        x = UltraElement(fam, [BlockMatrix((1,), [np.array([[2 + 1 / i]])])
                               for i in fam.indices()], 3.0)
        assert abs(up_norm(x) - 2) <= 1e-4
        alt = UltraElement(fam, [BlockMatrix((1,), [np.array([[float(i % 2)]])])
                                 for i in fam.indices()])
        with pytest.raises(NonConvergent):
            up_norm(alt)

        fam = IndexedFamily.constant((2, 3), 256, 32)
        samples = []
        for _ in range(100):
            a = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in (2, 3)]
            b = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in (2, 3)]
            bound = max(_op(m) for m in a) + max(_op(m) for m in b)
            samples.append(UltraElement.from_function(
                fam, lambda i, alg, a=a, b=b: BlockMatrix((2, 3), [x + y / i for x, y in zip(a, b)]),
                bound))
        for k in range(0, 100, 10):
            rep = quotient_algebra_check(fam, samples[k:k + 10])
            assert rep.passed
            assert rep.cstar_residual <= rep.tol


def test_criterion_12_qd_certificate(criterion):
    rng = np.random.default_rng(112)
    with criterion(12, "QD certificates: shift commutator, diagonal search", 60):
        cert = certify([truncated_shift(32)], np.eye(32)[:, :16])
        assert abs(cert.per_element[0].commutator_norm - 1) <= 1e-10
        for d, count, max_dim in [(8, 2, 3), (12, 3, 4), (16, 4, 6), (24, 3, 5), (32, 5, 8)]:
            fam = [np.diag(rng.standard_normal(d) + 1j * rng.standard_normal(d))
                   for _ in range(count)]
            found = search_subspace(fam, max_dim, budget=1000, seed=0)
            assert found.epsilon_achieved <= 1e-6


def test_criterion_13_uhf_prime(criterion):
    with criterion(13, "UHF chains against M_101", 1):
        for k in range(2, 101):
            assert not uhf_check([k], 101)
            assert divides((k,), (101,)) is None
            # every chain with k as a later or earlier modulus
            for d in range(2, k):
                if k % d == 0:
                    assert not uhf_check([d, k], 101)
            for j in range(2, 200 // k + 1):
                assert not uhf_check([k, k * j], 101)
        assert uhf_check([1, 101], 101)
