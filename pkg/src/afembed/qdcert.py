"""Quasidiagonality certificates.

For a finite set of matrices and a subspace ``K`` with orthogonal projection
``P``, the certificate records ``||x||``, the compression norm ``||P x P||``
and the commutator norm ``||[x, P]||``. Its ``epsilon_achieved`` is the
largest of the defects ``||x|| - ||P x P||`` and ``||[x, P]||``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import BlockMatrix, DimensionVector, as_dims
from .errors import DegenerateSubspace, EmptyFamily, NotAMorphism, ShapeMismatch

RANK_TOL = 1e-8
MORPHISM_TOL = 1e-8


def _opnorm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x, 2)) if x.size else 0.0


def _dense(x) -> np.ndarray:
    return x.to_dense() if isinstance(x, BlockMatrix) else np.asarray(x, dtype=complex)


@dataclass(frozen=True)
class ElementReport:
    norm: float
    compression_norm: float
    commutator_norm: float

    @property
    def defect(self) -> float:
        return max(self.norm - self.compression_norm, self.commutator_norm)


@dataclass(frozen=True, eq=False)
class QdCertificate:
    subspace_dim: int
    basis: np.ndarray
    per_element: Tuple[ElementReport, ...]
    epsilon_achieved: float

    @property
    def projection(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def to_dict(self):
        return {
            "subspace_dim": self.subspace_dim,
            "epsilon_achieved": self.epsilon_achieved,
            "per_element": [
                {"norm": r.norm, "compression_norm": r.compression_norm,
                 "commutator_norm": r.commutator_norm} for r in self.per_element],
            "basis": self.basis,
        }


def orthonormal_basis(K: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    K = np.asarray(K, dtype=complex)
    if K.ndim != 2 or K.shape[1] == 0:
        raise DegenerateSubspace("subspace basis must be a non-empty 2-d array")
    u, s, _ = np.linalg.svd(K, full_matrices=False)
    if s[0] == 0 or s[-1] < rank_tol * s[0]:
        raise DegenerateSubspace(
            f"basis is rank deficient: singular values span {s[-1]:.3g} .. {s[0]:.3g}")
    return u


def certify(elements: Sequence, K: np.ndarray) -> QdCertificate:
    """Compression and commutator norms of each element against ``span(K)``."""
    mats = [_dense(x) for x in elements]
    Q = orthonormal_basis(K)
    d = Q.shape[0]
    for x in mats:
        if x.shape != (d, d):
            raise ShapeMismatch(f"element of shape {x.shape} on an ambient space of dim {d}")
    return _certify_orthonormal(mats, Q)


def _certify_orthonormal(mats: List[np.ndarray], Q: np.ndarray) -> QdCertificate:
    P = Q @ Q.conj().T
    reports = []
    for x in mats:
        nx = _opnorm(x)
        # ||P x P|| = ||Q* x Q|| and never exceeds ||x||
        nc = min(_opnorm(Q.conj().T @ x @ Q), nx)
        reports.append(ElementReport(nx, nc, _opnorm(x @ P - P @ x)))
    eps = max((r.defect for r in reports), default=0.0)
    return QdCertificate(Q.shape[1], Q, tuple(reports), max(eps, 0.0))


def compression_commutator_gap(T: np.ndarray, K: np.ndarray) -> Tuple[float, float]:
    """``(||P T^2 P - (P T P)^2||, ||[T, P]||)`` for Hermitian ``T``.

    The first equals ``||(1-P) T P||^2`` and the second ``||(1-P) T P||``, so
    a small compression defect forces a small commutator.
    """
    T = np.asarray(T, dtype=complex)
    Q = orthonormal_basis(K)
    P = Q @ Q.conj().T
    c = P @ T @ P
    return _opnorm(P @ T @ T @ P - c @ c), _opnorm(T @ P - P @ T)


def _krylov(mats: List[np.ndarray], seed: np.ndarray, dim: int) -> Optional[np.ndarray]:
    """Orthonormal basis of the span of words in ``mats`` and adjoints applied to ``seed``."""
    ops = mats + [x.conj().T for x in mats]
    basis: List[np.ndarray] = []

    def add(v) -> bool:
        for b in basis:
            v = v - b * np.vdot(b, v)
        n = np.linalg.norm(v)
        if n < 1e-10:
            return False
        basis.append(v / n)
        return True

    add(seed)
    frontier = 0
    while len(basis) < dim and frontier < len(basis):
        v = basis[frontier]
        frontier += 1
        for op in ops:
            if len(basis) >= dim:
                break
            add(op @ v)
    if not basis:
        return None
    return np.stack(basis, axis=1)


def _joint_eigenbasis(mats: List[np.ndarray], rng: np.random.Generator) -> np.ndarray:
    """Eigenbasis of a generic real combination of the Hermitian and skew parts."""
    d = mats[0].shape[0]
    H = np.zeros((d, d), dtype=complex)
    for x in mats:
        a, b = rng.standard_normal(2)
        H += a * (x + x.conj().T) + 1j * b * (x - x.conj().T)
    _, v = np.linalg.eigh((H + H.conj().T) / 2)
    return v


def _norm_attaining_vectors(mats: List[np.ndarray], basis: np.ndarray) -> List[int]:
    """For each element, the basis column where ``||x v||`` is largest."""
    picks = []
    for x in mats:
        scores = np.linalg.norm(x @ basis, axis=0)
        picks.append(int(np.argmax(scores)))
    return picks


def _columns_with_fill(picks: List[int], order: Sequence[int], dim: int) -> List[int]:
    cols = []
    for p in list(picks) + list(order):
        if p not in cols:
            cols.append(p)
        if len(cols) == dim:
            break
    return cols


def search_subspace(elements: Sequence, max_dim: int, budget: int = 1000,
                    seed: int = 0) -> QdCertificate:
    """Heuristic search for a subspace of dimension ``<= max_dim`` minimizing ``epsilon``.

    Candidates, in a fixed order, until ``budget`` have been scored:
    coordinate subspaces (all of them when few enough, otherwise those built
    around each element's norm-attaining coordinates), subspaces spanned by
    joint eigenvectors and by top eigenvectors of ``sum x* x``, and Krylov
    subspaces grown from norm-attaining vectors and random seeds. Ties go to
    the earlier candidate, so the result depends only on ``seed``.
    """
    mats = [_dense(x) for x in elements]
    if not mats:
        raise EmptyFamily("no elements to certify")
    d = mats[0].shape[0]
    if not 1 <= max_dim <= d:
        raise ShapeMismatch(f"max_dim {max_dim} must lie in 1..{d}")
    rng = np.random.default_rng(seed)
    eye = np.eye(d, dtype=complex)
    best: Optional[QdCertificate] = None
    spent = 0

    def score(Q: Optional[np.ndarray]) -> bool:
        nonlocal best, spent
        if spent >= budget:
            return False
        if Q is None or Q.shape[1] == 0 or Q.shape[1] > max_dim:
            return True
        spent += 1
        cert = _certify_orthonormal(mats, Q)
        if best is None or cert.epsilon_achieved < best.epsilon_achieved:
            best = cert
        return True

    def candidates():
        n_coord = sum(_binom(d, m) for m in range(1, max_dim + 1))
        if n_coord <= budget // 2:
            for m in range(1, max_dim + 1):
                for cols in itertools.combinations(range(d), m):
                    yield eye[:, list(cols)]
        else:
            col_norms = sum(np.linalg.norm(x, axis=0) for x in mats)
            order = list(np.argsort(-col_norms, kind="stable"))
            picks = _norm_attaining_vectors(mats, eye)
            for m in range(1, max_dim + 1):
                yield eye[:, _columns_with_fill(picks, order, m)]
                yield eye[:, list(range(m))]
                yield eye[:, list(range(d - m, d))]
        gram = sum(x.conj().T @ x + x @ x.conj().T for x in mats)
        _, gv = np.linalg.eigh((gram + gram.conj().T) / 2)
        gv = gv[:, ::-1]
        for attempt in range(3):
            jb = _joint_eigenbasis(mats, rng)
            picks = _norm_attaining_vectors(mats, jb)
            order = list(np.argsort(-sum(np.linalg.norm(x @ jb, axis=0) for x in mats),
                                    kind="stable"))
            for m in range(1, max_dim + 1):
                cols = _columns_with_fill(picks, order, m)
                yield _orthonormal_or_none(jb[:, cols])
        for m in range(1, max_dim + 1):
            yield gv[:, :m]
        seeds = []
        for x in mats:
            _, _, vh = np.linalg.svd(x)
            seeds.append(vh[0].conj())
        while True:
            for v in seeds:
                for m in range(1, max_dim + 1):
                    yield _krylov(mats, v, m)
            seeds = [rng.standard_normal(d) + 1j * rng.standard_normal(d)]

    for Q in candidates():
        if not score(Q):
            break
    return best


def _orthonormal_or_none(K: np.ndarray) -> Optional[np.ndarray]:
    try:
        return orthonormal_basis(K)
    except DegenerateSubspace:
        return None


def _binom(n: int, k: int) -> int:
    from math import comb
    return comb(n, k)


@dataclass
class RfdReport:
    dims: DimensionVector
    sample_norms: List[float]
    rep_norms: List[List[float]]
    separation: List[float]
    separating: bool

    def to_dict(self):
        return {"dims": list(self.dims), "sample_norms": self.sample_norms,
                "rep_norms": self.rep_norms, "separation": self.separation,
                "separating": self.separating}


@dataclass
class RfdSum:
    reps: List[Callable]
    dims: DimensionVector
    report: RfdReport

    def __call__(self, x) -> BlockMatrix:
        return BlockMatrix(self.dims, [np.asarray(r(x), dtype=complex) for r in self.reps])


def rfd_sum(reps: Sequence[Callable], samples: Sequence, N: Optional[int] = None,
            tol: float = MORPHISM_TOL) -> RfdSum:
    """Direct sum ``x -> phi_1(x) + ... + phi_N(x)`` of finite-dimensional representations.

    Each ``phi_k`` must be multiplicative and adjoint-preserving on the
    samples. The report lists, per sample, ``max_k ||phi_k(x)|| / ||x||``.
    """
    reps = list(reps)[:N] if N is not None else list(reps)
    if not reps:
        raise EmptyFamily("the family of representations is empty")
    samples = list(samples)
    sizes = []
    for k, rep in enumerate(reps):
        imgs = [np.asarray(rep(x), dtype=complex) for x in samples]
        if not imgs:
            raise EmptyFamily("no samples to evaluate representations on")
        sizes.append(imgs[0].shape[0])
        for a, x in enumerate(samples):
            xa = _adjoint_any(x)
            if _opnorm(np.asarray(rep(xa)) - imgs[a].conj().T) > tol:
                raise NotAMorphism(f"representation {k} does not preserve the adjoint")
            for b, y in enumerate(samples):
                if _opnorm(np.asarray(rep(_mul_any(x, y))) - imgs[a] @ imgs[b]) > tol:
                    raise NotAMorphism(f"representation {k} is not multiplicative")
    dims = as_dims(sizes)
    sample_norms = [_norm_any(x) for x in samples]
    rep_norms = [[_opnorm(np.asarray(r(x), dtype=complex)) for r in reps] for x in samples]
    separation = [(max(rn) / sn if sn > 0 else 1.0) for rn, sn in zip(rep_norms, sample_norms)]
    separating = all(max(rn) > tol for rn, sn in zip(rep_norms, sample_norms) if sn > tol)
    return RfdSum(reps, dims, RfdReport(dims, sample_norms, rep_norms, separation, separating))


def _adjoint_any(x):
    return x.adjoint() if isinstance(x, BlockMatrix) else np.conj(np.asarray(x)).T


def _mul_any(x, y):
    return x @ y if isinstance(x, BlockMatrix) else np.asarray(x) @ np.asarray(y)


def _norm_any(x) -> float:
    return x.norm() if isinstance(x, BlockMatrix) else _opnorm(np.asarray(x, dtype=complex))


@dataclass(frozen=True)
class ObstructionReport:
    verdict: str
    is_isometry: bool
    is_proper: bool
    trace_vstar_v: float
    trace_v_vstar: float
    message: str

    def to_dict(self):
        return dict(self.__dict__)


def proper_isometry_obstruction(v, tol: float = 1e-10) -> ObstructionReport:
    """Decide whether ``v`` could be a proper isometry (``v*v = 1 != vv*``).

    In ``M_n`` it never can: ``tr(v*v) = tr(vv*)``, so ``v*v = 1`` forces
    ``vv* = 1``. Verdict ``NOT_PROPER_ISOMETRY`` when ``v`` is not even an
    isometry, ``IMPOSSIBLE`` otherwise.
    """
    v = _dense(v)
    if v.shape[0] != v.shape[1]:
        raise ShapeMismatch(f"{v.shape} is not a square matrix")
    n = v.shape[0]
    eye = np.eye(n)
    vsv, vvs = v.conj().T @ v, v @ v.conj().T
    is_iso = _opnorm(vsv - eye) <= tol
    is_unitary_range = _opnorm(vvs - eye) <= tol
    t1, t2 = float(np.trace(vsv).real), float(np.trace(vvs).real)
    if not is_iso:
        lam = float(np.linalg.eigvalsh((vsv + vsv.conj().T) / 2)[0])
        return ObstructionReport(
            "NOT_PROPER_ISOMETRY", False, False, t1, t2,
            f"v*v != 1 (smallest eigenvalue of v*v is {lam:.6g}); v is not an isometry")
    return ObstructionReport(
        "IMPOSSIBLE", True, is_iso and not is_unitary_range, t1, t2,
        f"v*v = 1 in M_{n}; tr(vv*) = tr(v*v) = {t1:.6g} = n forces vv* = 1, "
        "so no proper isometry exists in a finite-dimensional algebra")


def truncated_shift(d: int) -> np.ndarray:
    """``S e_i = e_{i+1}``, ``S e_d = 0``."""
    return np.eye(d, k=-1, dtype=complex)
