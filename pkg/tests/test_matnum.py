import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afembed.algebra import BlockMatrix, matrix_unit_defect, matrix_units, random_unitary
from afembed.errors import (DefectTooLarge, InconsistentDimensions, NotHermitian,
                            NotNearContraction, SpectrumInGap)
from afembed.matnum import (AlmostProjection, correct_near_contraction, correct_projection,
                            func_calc, h_function, lift_matrix_units, lift_partial_isometry,
                            projection_defect, spectral_decomposition)

from oracles import apply_spectral, jacobi_eigh
from strategies import random_hermitian, random_projection


def _op(x):
    return np.linalg.norm(x, 2)


def _is_projection(p, tol=1e-10):
    return _op(p @ p - p) <= tol and _op(p - p.conj().T) <= tol


def _below(p, q, tol=1e-10):
    """p <= q for projections, i.e. qp = p."""
    return _op(q @ p - p) <= tol


def test_spectral_decomposition_matches_jacobi():
    rng = np.random.default_rng(0)
    for n in (1, 2, 5, 8):
        x = random_hermitian(rng, n)
        dec = spectral_decomposition(x)
        w, _ = jacobi_eigh(x)
        assert np.allclose(dec.eigenvalues, w, atol=1e-10)
        assert _op(dec.reconstruct() - x) <= 1e-10 * max(1, _op(x))
        u = dec.eigenvectors
        assert _op(u.conj().T @ u - np.eye(n)) <= 1e-10


def test_func_calc_examples():
    x = np.diag([1.0, 2.0])
    assert np.allclose(func_calc(lambda t: t * t, x), np.diag([1.0, 4.0]))
    rng = np.random.default_rng(1)
    h = random_hermitian(rng, 4)
    assert np.allclose(func_calc(lambda t: t, h), h, atol=1e-12)


def test_h_function_values():
    assert h_function(4 / 9) == pytest.approx(0.40825, abs=1e-5)
    # closed form: (4/9 - 1/3) / (1/3) * sqrt(3/2)
    assert h_function(4 / 9) == pytest.approx((1 / 3) * np.sqrt(1.5), rel=1e-12)
    assert h_function(1 / 3) == 0.0
    assert h_function(0.1) == 0.0
    assert h_function(2 / 3) == pytest.approx((2 / 3) ** -0.5)
    assert h_function(4.0) == pytest.approx(0.5)
    y = func_calc(h_function, np.diag([4 / 9]))
    assert y[0, 0].real == pytest.approx(0.40825, abs=1e-5)


def test_func_calc_not_hermitian():
    with pytest.raises(NotHermitian):
        func_calc(abs, np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_func_calc_block_matrix():
    x = BlockMatrix((1, 2), [np.array([[2.0]]), np.diag([3.0, -1.0])])
    y = func_calc(abs, x)
    assert y.norm() == pytest.approx(3.0)
    assert np.allclose(y.blocks[1], np.diag([3.0, 1.0]))


@given(st.integers(1, 6), st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_func_calc_against_jacobi_oracle(n, seed):
    rng = np.random.default_rng(seed)
    x = random_hermitian(rng, n)
    for f in (np.exp, np.abs, lambda t: t ** 3 - 2 * t, h_function):
        assert _op(func_calc(f, x) - apply_spectral(f, x)) <= 1e-9 * max(1, _op(x)) ** 3


def test_func_calc_multiplicative_on_polynomials():
    rng = np.random.default_rng(2)
    x = random_hermitian(rng, 6)
    f = func_calc(lambda t: t ** 2 + 1, x)
    g = func_calc(lambda t: t - 3, x)
    fg = func_calc(lambda t: (t ** 2 + 1) * (t - 3), x)
    assert _op(f @ g - fg) <= 1e-10 * _op(fg)
    assert _op(func_calc(np.sin, x)) == pytest.approx(
        max(abs(np.sin(np.linalg.eigvalsh(x)))), abs=1e-12)


def test_func_calc_continuity_rate():
    # Lipschitz f: ||f(x_i) - f(x)|| shrinks with ||x_i - x||
    rng = np.random.default_rng(3)
    x = random_hermitian(rng, 5)
    e = random_hermitian(rng, 5)
    f = lambda t: np.sqrt(1 + t * t)
    errs = [_op(func_calc(f, x + s * e) - func_calc(f, x)) for s in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 10 * 1e-4 * _op(e) * np.sqrt(5)


def test_correct_projection_examples():
    rng = np.random.default_rng(4)
    p = random_projection(rng, 5, 2)
    assert _op(correct_projection(p) - p) <= 1e-12
    q = correct_projection(np.diag([0.999, 0.003]))
    assert np.allclose(q, np.diag([1.0, 0.0]))


def test_correct_projection_random_bound():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 10))
        p = random_projection(rng, n, int(rng.integers(0, n + 1)))
        x = p + random_hermitian(rng, n, 1e-4)
        delta = projection_defect(x)
        q = correct_projection(x)
        assert _is_projection(q)
        assert _op(q - x) <= 2 * delta + 1e-15


def test_correct_projection_idempotent():
    rng = np.random.default_rng(6)
    x = random_projection(rng, 6, 3) + random_hermitian(rng, 6, 1e-3)
    q = correct_projection(x)
    assert _op(correct_projection(q) - q) <= 1e-12


def test_correct_projection_rejects_large_defect():
    with pytest.raises(DefectTooLarge):
        correct_projection(np.diag([0.5, 1.0]))


def test_projection_rigidity():
    # an exact projection within distance < 1 of the identity is the identity
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = np.eye(4) + random_hermitian(rng, 4, 1e-2)
        q = correct_projection(x)
        assert _op(np.eye(4) - q) < 1
        assert np.allclose(q, np.eye(4), atol=1e-12)


def test_almost_projection_requires_hermitian():
    with pytest.raises(NotHermitian):
        AlmostProjection.of(np.array([[1.0, 1e-6], [0.0, 0.0]]))


def test_lift_partial_isometry_examples():
    rng = np.random.default_rng(8)
    u = random_unitary(4, rng)
    b = u @ np.diag([1, 1, 0, 0]) @ random_unitary(4, rng)
    assert _op(lift_partial_isometry(b) - b) <= 1e-12

    b = np.zeros((3, 3))
    b[1, 0] = 0.999
    w = lift_partial_isometry(b)
    expected = np.zeros((3, 3))
    expected[1, 0] = 1.0
    assert _op(w - expected) <= 1e-14


def test_lift_partial_isometry_ordering():
    rng = np.random.default_rng(9)
    n = 6
    p = random_projection(rng, n, 3)
    q = random_projection(rng, n, 3)
    # b maps range(p) into range(q) with singular values sqrt(0.98), sqrt(0.01)
    vp = np.linalg.eigh(p)[1][:, -3:]
    vq = np.linalg.eigh(q)[1][:, -3:]
    s = np.diag([np.sqrt(0.98), np.sqrt(0.98), np.sqrt(0.01)])
    b = vq @ s @ vp.conj().T + random_hermitian(rng, n, 1e-3)
    w = lift_partial_isometry(b, p, q)
    init, fin = w.conj().T @ w, w @ w.conj().T
    assert _is_projection(init) and _is_projection(fin)
    assert _below(init, p) and _below(fin, q)
    assert round(np.trace(init).real) == 2


def test_lift_partial_isometry_gap():
    b = np.diag([np.sqrt(0.5), 1.0])
    with pytest.raises(SpectrumInGap):
        lift_partial_isometry(b)


@given(st.integers(1, 6), st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_partial_isometry_norm_is_zero_or_one(n, seed):
    rng = np.random.default_rng(seed)
    u, v = random_unitary(n, rng), random_unitary(n, rng)
    sv = rng.choice([0.0, 0.05, 0.97, 1.02], size=n)
    w = lift_partial_isometry(u @ np.diag(sv) @ v)
    init = w.conj().T @ w
    assert _op(init @ init - init) <= 1e-10
    nw = _op(w)
    assert nw <= 1e-10 or abs(nw - 1) <= 1e-10


def test_near_contraction_examples():
    rng = np.random.default_rng(10)
    u = random_unitary(5, rng)
    assert _op(correct_near_contraction(1.001 * u) - u) <= 1e-12
    v = 0.7 * u
    assert np.array_equal(correct_near_contraction(v), v)
    with pytest.raises(NotNearContraction):
        correct_near_contraction(2 * u)


def test_near_contraction_random_bound():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(1, 7))
        v = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        v *= 1.01 / _op(v)
        w = correct_near_contraction(v)
        assert _op(w) <= 1 + 1e-10
        assert _op(w - v) <= 0.01 + 1e-8


def test_near_contraction_matches_singular_value_clipping():
    rng = np.random.default_rng(12)
    v = rng.standard_normal((4, 4))
    v *= 1.3 / _op(v)
    u, s, vh = np.linalg.svd(v)
    w = correct_near_contraction(v)
    assert np.allclose(w, u @ np.diag(np.minimum(s, 1)) @ vh, atol=1e-12)


def _dense_units(dims):
    return {k: v.to_dense() for k, v in matrix_units(dims).items()}


def test_lift_matrix_units_exact_unchanged():
    units = _dense_units((2, 1))
    out = lift_matrix_units(units, (2, 1))
    for k in units:
        assert _op(out[k] - units[k]) <= 1e-12


def test_lift_matrix_units_conjugated_by_near_identity():
    rng = np.random.default_rng(13)
    dims = (2, 2)
    units = _dense_units(dims)
    size = 4
    h = random_hermitian(rng, size)
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(1j * 1e-3 * w)) @ v.conj().T
    almost = {k: u.conj().T @ e @ u for k, e in units.items()}
    out = lift_matrix_units(almost, dims)
    assert matrix_unit_defect(out, dims) <= 1e-10
    assert max(_op(out[k] - almost[k]) for k in units) <= 5e-3


def test_lift_matrix_units_additive_noise():
    rng = np.random.default_rng(14)
    dims = (3,)
    units = {k: np.kron(np.eye(2), e) for k, e in _dense_units(dims).items()}
    almost = {k: e + 1e-4 * (rng.standard_normal(e.shape) + 1j * rng.standard_normal(e.shape))
              for k, e in units.items()}
    out = lift_matrix_units(almost, dims)
    assert matrix_unit_defect(out, dims) <= 1e-10
    assert max(_op(out[k] - units[k]) for k in units) <= 5e-3


def test_lift_matrix_units_rank_failure():
    # M_2 units of multiplicity 2 padded into M_5: diagonal ranks sum to 4, not 5
    units = {}
    for k, e in _dense_units((2,)).items():
        big = np.zeros((5, 5), dtype=complex)
        big[:4, :4] = np.kron(np.eye(2), e)
        units[k] = big
    with pytest.raises(InconsistentDimensions):
        lift_matrix_units(units, (2,))


def test_lift_matrix_units_defect_too_large():
    units = _dense_units((2,))
    units[(0, 0, 1)] = units[(0, 0, 1)] * 1.5
    with pytest.raises(DefectTooLarge):
        lift_matrix_units(units, (2,))


def test_lift_matrix_units_block_matrices():
    rng = np.random.default_rng(15)
    target = (4,)
    units = {k: BlockMatrix(target, [np.kron(np.eye(2), e) + 1e-5 * random_hermitian(rng, 4)])
             for k, e in _dense_units((2,)).items()}
    out = lift_matrix_units(units, (2,))
    assert isinstance(out[(0, 0, 0)], BlockMatrix)
    assert matrix_unit_defect(out, (2,)) <= 1e-10
