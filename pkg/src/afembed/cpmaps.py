"""Completely positive maps ``M_n -> M_{m_1} + ... + M_{m_s}`` stored by their Choi matrix.

The target is realized block-diagonally in ``M_D`` with ``D = sum m_f``. The
Choi matrix is ``C = sum_ij E_ij (x) psi(E_ij)``, an ``nD x nD`` matrix whose
``(i, j)`` block of size ``D`` is ``psi(E_ij)``; ``psi`` is CP iff ``C >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .algebra import BlockMatrix, DimensionVector, FdAlgebra, as_algebra, as_dims
from .errors import NotCP, NotHermitian, NotInvertibleUnitImage, NotNearContraction, ShapeMismatch
from .matnum import correct_near_contraction

CP_TOL = 1e-10
KRAUS_CUTOFF = 1e-12
HERMITIAN_TOL = 1e-10
MIN_UNIT_EIGENVALUE = 1e-6
MAX_NORM_EXCESS = 0.5


def _opnorm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x, 2)) if x.size else 0.0


@dataclass(frozen=True, eq=False)
class CpMap:
    """Linear, Hermitian-preserving map given by its Choi matrix.

    The name follows the intended use; complete positivity itself is decided
    by :func:`is_cp`, not enforced at construction.
    """

    source_dim: int
    target: FdAlgebra
    choi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "target", as_algebra(self.target))
        choi = np.asarray(self.choi, dtype=complex)
        size = self.source_dim * self.target_size
        if choi.shape != (size, size):
            raise ShapeMismatch(f"Choi matrix is {choi.shape}, expected ({size}, {size})")
        scale = max(1.0, _opnorm(choi))
        if _opnorm(choi - choi.conj().T) > HERMITIAN_TOL * scale:
            raise NotHermitian("Choi matrix is not Hermitian (map does not preserve adjoints)")
        choi = (choi + choi.conj().T) / 2
        choi.setflags(write=False)
        object.__setattr__(self, "choi", choi)

    @property
    def target_dims(self) -> DimensionVector:
        return self.target.dims

    @property
    def target_size(self) -> int:
        return self.target.dims.size

    def _blocks(self) -> np.ndarray:
        n, d = self.source_dim, self.target_size
        return self.choi.reshape(n, d, n, d)

    def value(self, i: int, j: int) -> np.ndarray:
        """``psi(E_ij)`` as a dense ``D x D`` matrix."""
        d = self.target_size
        return np.array(self.choi[i * d:(i + 1) * d, j * d:(j + 1) * d])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.source_dim, self.source_dim):
            raise ShapeMismatch(f"input is {x.shape}, map acts on M_{self.source_dim}")
        return np.einsum("ij,iajb->ab", x, self._blocks())

    def apply_block(self, x) -> BlockMatrix:
        return BlockMatrix.from_dense(self.target_dims, self(x))

    def unit_image(self) -> np.ndarray:
        return self(np.eye(self.source_dim))

    def amplify(self, X: np.ndarray, k: int) -> np.ndarray:
        """``(id_k (x) psi)(X)`` for ``X`` in ``M_k(M_n)``."""
        n, d = self.source_dim, self.target_size
        X = np.asarray(X, dtype=complex).reshape(k, n, k, n)
        out = np.einsum("aibj,iujv->aubv", X, self._blocks())
        return out.reshape(k * d, k * d)

    def to_dict(self):
        return {
            "source_dim": self.source_dim,
            "target_dims": list(self.target_dims),
            "choi": self.choi,
        }


def choi_of(values, source_dim: Optional[int] = None, target=None) -> CpMap:
    """Build the Choi matrix from the images of the source matrix units.

    ``values`` is either a mapping ``(i, j) -> psi(E_ij)`` or a callable
    evaluated on each ``E_ij``. Images may be dense arrays or block matrices.
    """
    if callable(values) and not isinstance(values, Mapping):
        if source_dim is None:
            raise ShapeMismatch("source_dim is required when values is a callable")
        func = values
        values = {}
        for i in range(source_dim):
            for j in range(source_dim):
                e = np.zeros((source_dim, source_dim), dtype=complex)
                e[i, j] = 1
                values[(i, j)] = func(e)
    if source_dim is None:
        source_dim = int(round(len(values) ** 0.5))
    if len(values) != source_dim ** 2:
        raise ShapeMismatch(f"need {source_dim ** 2} unit images, got {len(values)}")
    sample = values[(0, 0)]
    if target is None:
        target = sample.dims if isinstance(sample, BlockMatrix) else (np.shape(sample)[0],)
    target = as_algebra(target)
    d = target.dims.size
    choi = np.zeros((source_dim * d, source_dim * d), dtype=complex)
    for i in range(source_dim):
        for j in range(source_dim):
            if (i, j) not in values:
                raise ShapeMismatch(f"missing image of E_{i}{j}")
            v = values[(i, j)]
            v = v.to_dense() if isinstance(v, BlockMatrix) else np.asarray(v, dtype=complex)
            if v.shape != (d, d):
                raise ShapeMismatch(f"image of E_{i}{j} is {v.shape}, expected ({d}, {d})")
            choi[i * d:(i + 1) * d, j * d:(j + 1) * d] = v
    return CpMap(source_dim, target, choi)


def from_kraus(kraus: Sequence[np.ndarray], target=None) -> CpMap:
    """The map ``x -> sum_a K_a x K_a*``."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    d, n = kraus[0].shape
    target = as_algebra(target if target is not None else (d,))
    choi = np.zeros((n * d, n * d), dtype=complex)
    for k in kraus:
        vec = k.T.reshape(-1)  # index i*d + alpha holds K[alpha, i]
        choi += np.outer(vec, vec.conj())
    return CpMap(n, target, choi)


@dataclass(frozen=True)
class CpVerdict:
    cp: bool
    min_eigenvalue: float

    def to_dict(self):
        return {"cp": self.cp, "min_eigenvalue": self.min_eigenvalue}


def is_cp(m: CpMap, tol: float = CP_TOL) -> CpVerdict:
    lam_min = float(np.linalg.eigvalsh(m.choi)[0])
    return CpVerdict(lam_min >= -tol, lam_min)


def cp_norm(m: CpMap) -> float:
    """``||psi|| = ||psi(1)||``, valid for CP maps."""
    return _opnorm(m.unit_image())


def hermitian_map_norm_bound(m: CpMap) -> float:
    """Upper bound on ``||psi||`` for a Hermitian-preserving map.

    Splits the Choi matrix into positive and negative parts, both CP, and adds
    their norms ``||psi_+(1)|| + ||psi_-(1)||``.
    """
    w, v = np.linalg.eigh(m.choi)
    pos = (v * np.clip(w, 0, None)) @ v.conj().T
    neg = (v * np.clip(-w, 0, None)) @ v.conj().T
    return (cp_norm(CpMap(m.source_dim, m.target, pos))
            + cp_norm(CpMap(m.source_dim, m.target, neg)))


def difference(a: CpMap, b: CpMap) -> CpMap:
    if a.source_dim != b.source_dim or a.target_dims != b.target_dims:
        raise ShapeMismatch("maps have different shapes")
    return CpMap(a.source_dim, a.target, a.choi - b.choi)


@dataclass(frozen=True, eq=False)
class StinespringData:
    """``psi(x) = V* rho(x) V`` with ``rho(x) = x (+) ... (+) x`` (``multiplicity`` copies)."""

    V: np.ndarray
    source_dim: int
    multiplicity: int
    target: FdAlgebra

    @property
    def rho(self) -> List[int]:
        return [self.multiplicity]

    def kraus(self) -> List[np.ndarray]:
        n = self.source_dim
        return [self.V[a * n:(a + 1) * n, :].conj().T for a in range(self.multiplicity)]

    def rho_of(self, x) -> np.ndarray:
        return np.kron(np.eye(self.multiplicity), np.asarray(x, dtype=complex))

    def __call__(self, x) -> np.ndarray:
        return self.V.conj().T @ self.rho_of(x) @ self.V

    def to_map(self) -> CpMap:
        if self.multiplicity == 0:
            n, d = self.source_dim, self.target.dims.size
            return CpMap(n, self.target, np.zeros((n * d, n * d)))
        return from_kraus(self.kraus(), self.target)


def stinespring(m: CpMap, tol: float = CP_TOL) -> StinespringData:
    """Dilation built from the Choi eigendecomposition.

    Each eigenpair ``(lam, v)`` with ``lam > KRAUS_CUTOFF`` gives a Kraus
    operator ``K[alpha, i] = sqrt(lam) v[i*D + alpha]``; ``V`` stacks the ``K*``.
    """
    w, vecs = np.linalg.eigh(m.choi)
    if w[0] < -tol:
        raise NotCP(f"Choi matrix has eigenvalue {w[0]:.6g}")
    n, d = m.source_dim, m.target_size
    rows = []
    for lam, vec in zip(w[::-1], vecs.T[::-1]):
        if lam <= KRAUS_CUTOFF:
            break
        k = np.sqrt(lam) * vec.reshape(n, d).T
        rows.append(k.conj().T)
    V = np.vstack(rows) if rows else np.zeros((0, d), dtype=complex)
    return StinespringData(V, n, len(rows), m.target)


def cp_near_contraction_fix(m: CpMap, max_excess: float = MAX_NORM_EXCESS) -> CpMap:
    """CP contraction ``x -> W* rho(x) W`` with ``W`` the contraction nearest the dilation ``V``."""
    verdict = is_cp(m)
    if not verdict.cp:
        raise NotCP(f"Choi matrix has eigenvalue {verdict.min_eigenvalue:.6g}")
    nm = cp_norm(m)
    if nm > 1 + max_excess:
        raise NotNearContraction(f"||psi|| = {nm:.6g} exceeds 1 + {max_excess}")
    if nm <= 1:
        return m
    dil = stinespring(m)
    # ||V||^2 = ||psi|| <= 1.5, inside the contraction-correction range
    W = correct_near_contraction(dil.V)
    return StinespringData(W, dil.source_dim, dil.multiplicity, dil.target).to_map()


def unitalize(m: CpMap, min_eigenvalue: float = MIN_UNIT_EIGENVALUE) -> CpMap:
    """``x -> a^{-1/2} psi(x) a^{-1/2}`` with ``a = psi(1)``."""
    a = m.unit_image()
    a = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(a)
    if w[0] < min_eigenvalue:
        raise NotInvertibleUnitImage(f"psi(1) has eigenvalue {w[0]:.6g}")
    if _opnorm(a - np.eye(len(a))) == 0:
        return m
    s = (v * w ** -0.5) @ v.conj().T
    big = np.kron(np.eye(m.source_dim), s)
    return CpMap(m.source_dim, m.target, big @ m.choi @ big)


def compose(outer: CpMap, inner: CpMap) -> CpMap:
    """``outer o inner``; the target of ``inner`` must be the full matrix algebra ``outer`` acts on."""
    if inner.target_size != outer.source_dim or len(inner.target_dims) != 1:
        raise ShapeMismatch(
            f"inner target {list(inner.target_dims)} is not M_{outer.source_dim}")
    return choi_of({(i, j): outer(inner.value(i, j))
                    for i in range(inner.source_dim) for j in range(inner.source_dim)},
                   inner.source_dim, outer.target)


@dataclass(frozen=True)
class FactorizationReport:
    valid: bool
    residual: float
    psi_cp_contraction: bool
    rho_cp_contraction: bool

    def to_dict(self):
        return {
            "valid": self.valid,
            "residual": self.residual,
            "psi_cp_contraction": self.psi_cp_contraction,
            "rho_cp_contraction": self.rho_cp_contraction,
        }


def is_cp_contraction(m: CpMap, tol: float = CP_TOL) -> bool:
    return is_cp(m, tol).cp and cp_norm(m) <= 1 + tol


def matricial_factor_check(phi: CpMap, psi: CpMap, rho: CpMap, tol: float = 1e-8) -> FactorizationReport:
    """Whether ``phi = rho o psi`` through ``M_k`` with both factors CP contractions."""
    if phi.source_dim != psi.source_dim:
        raise ShapeMismatch("phi and psi must share their source")
    if len(psi.target_dims) != 1 or psi.target_size != rho.source_dim:
        raise ShapeMismatch("target of psi must be the source of rho")
    if rho.target_dims != phi.target_dims:
        raise ShapeMismatch("rho and phi must share their target")
    n = phi.source_dim
    residual = 0.0
    for i in range(n):
        for j in range(n):
            residual = max(residual, _opnorm(rho(psi.value(i, j)) - phi.value(i, j)))
    psi_ok, rho_ok = is_cp_contraction(psi), is_cp_contraction(rho)
    return FactorizationReport(residual <= tol and psi_ok and rho_ok, residual, psi_ok, rho_ok)


def repair_sequence(maps: Sequence[CpMap], max_excess: float = MAX_NORM_EXCESS
                    ) -> Tuple[List[CpMap], List[float]]:
    """Repair per-index representatives into CP contractions.

    Returns the repaired maps and, per index, the Choi-distance moved, which
    serves as the defect profile of the sequence.
    """
    repaired, defects = [], []
    for m in maps:
        fixed = cp_near_contraction_fix(m, max_excess)
        repaired.append(fixed)
        defects.append(_opnorm(fixed.choi - m.choi))
    return repaired, defects


def identity_map(n: int) -> CpMap:
    return from_kraus([np.eye(n)])


def transpose_map(n: int) -> CpMap:
    return choi_of(lambda x: x.T, n)


def depolarizing_map(n: int, p: float) -> CpMap:
    return choi_of(lambda x: (1 - p) * x + p * np.trace(x) * np.eye(n) / n, n)


def trace_map(n: int) -> CpMap:
    """``x -> tr(x)/n . 1``."""
    return choi_of(lambda x: np.trace(x) / n * np.eye(n), n)


def random_cp_map(source_dim: int, target, rng: np.random.Generator, n_kraus: int = 3,
                  scale: float = 1.0) -> CpMap:
    """Random CP map into ``target``; each Kraus operator lands in a single block."""
    target = as_algebra(target)
    d = target.dims.size
    kraus = []
    for _ in range(n_kraus):
        for off, mf in zip(target.dims.offsets(), target.dims):
            k = np.zeros((d, source_dim), dtype=complex)
            k[off:off + mf] = (rng.standard_normal((mf, source_dim))
                               + 1j * rng.standard_normal((mf, source_dim)))
            kraus.append(k)
    m = from_kraus(kraus, target)
    return CpMap(source_dim, target, m.choi * (scale / cp_norm(m)))
