"""Numerical lifting: functional calculus and exact repair of almost-relations.

Every routine accepts either a dense ``numpy`` array or a ``BlockMatrix``;
block matrices are processed block by block and returned as block matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .algebra import BlockMatrix, UnitIndex, as_dims, matrix_unit_defect, unit_indices
from .errors import (DefectTooLarge, InconsistentDimensions, NotHermitian,
                     NotNearContraction, ShapeMismatch, SpectrumInGap)

HERMITIAN_TOL = 1e-12
MAX_PROJECTION_DEFECT = 1 / 8
MAX_UNIT_DEFECT = 1e-2
MAX_CONTRACTION_EXCESS = 0.5


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _dense_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x, 2)) if x.size else 0.0


def norm(x) -> float:
    return x.norm() if isinstance(x, BlockMatrix) else _dense_norm(np.asarray(x))


def _check_hermitian(x: np.ndarray):
    scale = max(1.0, _dense_norm(x))
    if _dense_norm(x - x.conj().T) > HERMITIAN_TOL * scale:
        raise NotHermitian("matrix is not Hermitian")


def spectral_decomposition(x: np.ndarray) -> SpectralDecomposition:
    x = np.asarray(x, dtype=complex)
    _check_hermitian(x)
    w, v = np.linalg.eigh((x + x.conj().T) / 2)
    return SpectralDecomposition(w, v)


def _func_calc_dense(f, x: np.ndarray) -> np.ndarray:
    dec = spectral_decomposition(x)
    vals = np.array([f(float(lam)) for lam in dec.eigenvalues])
    v = dec.eigenvectors
    return (v * vals) @ v.conj().T


def func_calc(f: Callable[[float], float], x):
    """``f(x)`` for Hermitian ``x``: apply ``f`` to the eigenvalues and reassemble."""
    if isinstance(x, BlockMatrix):
        return x.map_blocks(lambda b: _func_calc_dense(f, b))
    return _func_calc_dense(f, np.asarray(x, dtype=complex))


def h_function(theta: float) -> float:
    """0 on ``(-inf, 1/3]``, ``theta**-0.5`` on ``[2/3, inf)``, linear in between."""
    if theta <= 1 / 3:
        return 0.0
    if theta >= 2 / 3:
        return theta ** -0.5
    return (theta - 1 / 3) * 3 * (2 / 3) ** -0.5


def projection_defect(x) -> float:
    """``||x^2 - x||``."""
    if isinstance(x, BlockMatrix):
        return (x @ x - x).norm()
    x = np.asarray(x)
    return _dense_norm(x @ x - x)


@dataclass(frozen=True)
class AlmostProjection:
    x: object
    defect: float

    @classmethod
    def of(cls, x) -> "AlmostProjection":
        if isinstance(x, BlockMatrix):
            for b in x.blocks:
                _check_hermitian(b)
        else:
            x = np.asarray(x, dtype=complex)
            _check_hermitian(x)
        return cls(x, projection_defect(x))


def correct_projection(x, max_defect: float = MAX_PROJECTION_DEFECT):
    """Nearest exact projection: spectral indicator of eigenvalues above 1/2.

    If ``||x^2 - x|| = d <= 1/8`` every eigenvalue is within ``2d`` of 0 or 1,
    so the result is within ``2d`` of ``x``.
    """
    ap = x if isinstance(x, AlmostProjection) else AlmostProjection.of(x)
    if ap.defect > max_defect:
        raise DefectTooLarge(f"projection defect {ap.defect:.3g} exceeds {max_defect:.3g}")
    return func_calc(lambda lam: 1.0 if lam > 0.5 else 0.0, ap.x)


def _rank(p: np.ndarray) -> int:
    return int(round(float(np.trace(p).real)))


def lift_partial_isometry(b, p=None, p_final=None, gap_margin: float = 0.0):
    """Exact partial isometry ``w = b' h(b'* b')`` with ``b' = p_final b p``.

    ``w*w`` is a projection below ``p`` and ``ww*`` one below ``p_final``. The
    eigenvalues of ``b'* b'`` must avoid ``(1/3 + gap_margin, 2/3 - gap_margin)``;
    with the default margin of 0 the whole open middle band is rejected, since
    any eigenvalue there makes ``w`` inexact.
    """
    if isinstance(b, BlockMatrix):
        ps = p.blocks if p is not None else [None] * len(b.blocks)
        qs = p_final.blocks if p_final is not None else [None] * len(b.blocks)
        return BlockMatrix(b.dims, [lift_partial_isometry(bb, pp, qq, gap_margin)
                                    for bb, pp, qq in zip(b.blocks, ps, qs)])
    b = np.asarray(b, dtype=complex)
    if p is not None:
        b = b @ np.asarray(p)
    if p_final is not None:
        b = np.asarray(p_final) @ b
    x = b.conj().T @ b
    x = (x + x.conj().T) / 2
    w, v = np.linalg.eigh(x)
    lo, hi = 1 / 3 + gap_margin, 2 / 3 - gap_margin
    bad = w[(w > lo) & (w < hi)]
    if bad.size:
        raise SpectrumInGap(f"eigenvalue {bad[0]:.6g} of b*b lies in ({lo:.4g}, {hi:.4g})")
    hvals = np.array([h_function(float(lam)) for lam in w])
    return b @ ((v * hvals) @ v.conj().T)


def _sqrt_f(lam: float) -> float:
    return 1.0 if lam < 1 else lam ** -0.5


def correct_near_contraction(V: np.ndarray, max_excess: float = MAX_CONTRACTION_EXCESS) -> np.ndarray:
    """Contraction ``W = V sqrt(f(V*V))`` with ``f = 1`` below 1 and ``1/t`` above.

    Singular values above 1 are pulled down to 1, the rest are untouched, so
    ``||W - V|| = max(||V|| - 1, 0)``.
    """
    V = np.asarray(V, dtype=complex)
    nv = _dense_norm(V)
    if nv > 1 + max_excess:
        raise NotNearContraction(f"||V|| = {nv:.6g} exceeds 1 + {max_excess}")
    if nv <= 1:
        return V.copy()
    T = V.conj().T @ V
    w, u = np.linalg.eigh((T + T.conj().T) / 2)
    s = np.array([_sqrt_f(float(lam)) for lam in w])
    return V @ ((u * s) @ u.conj().T)


def _hermitian_part(x: np.ndarray) -> np.ndarray:
    return (x + x.conj().T) / 2


def lift_matrix_units(almost: Dict[UnitIndex, object], dims, max_defect: float = MAX_UNIT_DEFECT):
    """Replace an almost system of matrix units by an exact one nearby.

    Works through the reduced system: the diagonal units are corrected into
    mutually orthogonal projections (each compressed to the complement of the
    earlier ones), their sum is then forced to be exactly 1 (a projection
    within distance < 1 of the identity is the identity), each ``e_j1`` is
    lifted to a partial isometry from ``p_1`` onto ``p_j``, and the rest of the
    system is rebuilt as ``e_ij = e_i1 e_1j``.
    """
    dims = as_dims(dims)
    keys = list(unit_indices(dims))
    missing = [k for k in keys if k not in almost]
    if missing:
        raise ShapeMismatch(f"missing almost matrix units {missing[:3]}")
    first = almost[keys[0]]
    if isinstance(first, BlockMatrix):
        target_dims = first.dims
        dense = {k: almost[k].to_dense() for k in keys}
        out = _lift_units_dense(dense, dims, max_defect)
        return {k: BlockMatrix.from_dense(target_dims, v) for k, v in out.items()}
    return _lift_units_dense({k: np.asarray(almost[k], dtype=complex) for k in keys},
                             dims, max_defect)


def _lift_units_dense(units: Dict[UnitIndex, np.ndarray], dims, max_defect: float):
    # A bad unit sum is diagnosed below by the rank count instead.
    defect = matrix_unit_defect(units, dims, unital=False)
    if defect > max_defect:
        raise DefectTooLarge(f"matrix-unit defect {defect:.3g} exceeds {max_defect:.3g}")
    size = next(iter(units.values())).shape[0]
    eye = np.eye(size, dtype=complex)

    diag: Dict[Tuple[int, int], np.ndarray] = {}
    taken = np.zeros((size, size), dtype=complex)
    for k, n in enumerate(dims):
        for i in range(n):
            rest = eye - taken
            y = rest @ _hermitian_part(units[(k, i, i)]) @ rest
            p = correct_projection(_hermitian_part(y))
            diag[(k, i)] = p
            taken = taken + p
    # taken is an exact projection; it is 1 or at distance 1 from 1
    missing_rank = size - _rank(taken)
    if missing_rank != 0:
        raise InconsistentDimensions(
            f"corrected diagonal units have total rank {size - missing_rank}, "
            f"ambient size is {size}")
    for k, n in enumerate(dims):
        ranks = {_rank(diag[(k, i)]) for i in range(n)}
        if len(ranks) != 1 or 0 in ranks:
            raise InconsistentDimensions(
                f"diagonal units of block {k} have ranks {sorted(ranks)}; they must agree")

    exact: Dict[UnitIndex, np.ndarray] = {}
    for k, n in enumerate(dims):
        p1 = diag[(k, 0)]
        col = [p1]
        for j in range(1, n):
            w = lift_partial_isometry(units[(k, j, 0)], p1, diag[(k, j)])
            if _rank(w.conj().T @ w) != _rank(p1):
                raise InconsistentDimensions(
                    f"lifted e[{k}]({j},0) has initial rank {_rank(w.conj().T @ w)}, "
                    f"expected {_rank(p1)}")
            col.append(w)
        for i in range(n):
            for j in range(n):
                exact[(k, i, j)] = col[i] @ col[j].conj().T
    return exact
