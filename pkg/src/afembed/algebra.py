"""Finite-dimensional C*-algebras ``M_{n_1} + ... + M_{n_r}`` and their unital morphisms.

A unital morphism between two such algebras is determined up to inner
conjugacy by its mapping matrix: entry ``(f, e)`` is the multiplicity of
source block ``e`` inside target block ``f``. This module holds the integer
side (dimension vectors, mapping matrices, composition) and the concrete
side (block matrices, explicit realizations, multiplicity extraction and
conjugating unitaries).

Block indices, and the row/column indices of matrix units, are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidMatrix, InvariantViolation, NotAMorphism, ShapeMismatch

UnitIndex = Tuple[int, int, int]

MULTIPLICITY_TOL = 1e-6


@dataclass(frozen=True)
class DimensionVector:
    """Block sizes ``(n_1, ..., n_r)``. Entries are Python ints, so arbitrarily large."""

    entries: Tuple[int, ...]

    def __init__(self, entries):
        if isinstance(entries, DimensionVector):
            entries = entries.entries
        entries = tuple(entries)
        if len(entries) == 0:
            raise InvariantViolation("dimension vector must have at least one entry")
        for pos, n in enumerate(entries):
            if isinstance(n, bool) or int(n) != n:
                raise InvariantViolation(f"dims[{pos}] = {n!r} is not an integer")
            if n < 1:
                raise InvariantViolation(f"dims[{pos}] = {n} must be a positive integer")
        object.__setattr__(self, "entries", tuple(int(n) for n in entries))

    def __len__(self):
        return len(self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    @property
    def size(self) -> int:
        """Side length of the block-diagonal realization, ``sum n_k``."""
        return sum(self.entries)

    @property
    def algebra_dim(self) -> int:
        return sum(n * n for n in self.entries)

    def offsets(self) -> Tuple[int, ...]:
        out, acc = [], 0
        for n in self.entries:
            out.append(acc)
            acc += n
        return tuple(out)

    def __repr__(self):
        return f"DimensionVector({list(self.entries)})"


def as_dims(value) -> DimensionVector:
    if isinstance(value, FdAlgebra):
        return value.dims
    if isinstance(value, DimensionVector):
        return value
    if isinstance(value, int):
        return DimensionVector((value,))
    return DimensionVector(value)


@dataclass(frozen=True)
class FdAlgebra:
    dims: DimensionVector
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "dims", as_dims(self.dims))

    @property
    def total_dimension(self) -> int:
        return self.dims.algebra_dim

    def identity(self) -> "BlockMatrix":
        return BlockMatrix.identity(self.dims)


def as_algebra(value) -> FdAlgebra:
    if isinstance(value, FdAlgebra):
        return value
    return FdAlgebra(as_dims(value))


@dataclass(frozen=True)
class MappingMatrix:
    """Nonnegative integer matrix indexed (target block, source block)."""

    entries: Tuple[Tuple[int, ...], ...]

    def __init__(self, entries):
        if isinstance(entries, MappingMatrix):
            entries = entries.entries
        if isinstance(entries, np.ndarray):
            entries = entries.tolist()
        rows = tuple(tuple(row) for row in entries)
        if not rows or not rows[0]:
            raise InvariantViolation("mapping matrix must be non-empty")
        width = len(rows[0])
        for r, row in enumerate(rows):
            if len(row) != width:
                raise InvariantViolation(f"row {r} has {len(row)} entries, expected {width}")
            for c, v in enumerate(row):
                if isinstance(v, bool) or int(v) != v or v < 0:
                    raise InvariantViolation(
                        f"entry ({r}, {c}) = {v!r} is not a nonnegative integer")
        object.__setattr__(self, "entries", tuple(tuple(int(v) for v in row) for row in rows))

    @classmethod
    def identity(cls, n: int) -> "MappingMatrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, idx):
        r, c = idx
        return self.entries[r][c]

    def column(self, c: int) -> Tuple[int, ...]:
        return tuple(row[c] for row in self.entries)

    def rows_positive(self) -> bool:
        return all(any(v > 0 for v in row) for row in self.entries)

    def columns_positive(self) -> bool:
        return all(any(row[c] > 0 for row in self.entries) for c in range(self.cols))

    def is_mapping(self) -> bool:
        return self.rows_positive()

    def is_inclusion(self) -> bool:
        return self.rows_positive() and self.columns_positive()

    def apply(self, dims) -> Tuple[int, ...]:
        vec = tuple(dims)
        if len(vec) != self.cols:
            raise ShapeMismatch(f"matrix has {self.cols} columns, vector has {len(vec)} entries")
        return tuple(sum(a * b for a, b in zip(row, vec)) for row in self.entries)

    def __matmul__(self, other: "MappingMatrix") -> "MappingMatrix":
        return compose(self, other)

    def flat(self) -> Tuple[int, ...]:
        return tuple(v for row in self.entries for v in row)

    def tolist(self):
        return [list(row) for row in self.entries]

    def __repr__(self):
        return f"MappingMatrix({self.tolist()})"


@dataclass(frozen=True)
class MappingReport:
    dimension_equation: bool
    is_mapping: bool
    is_inclusion: bool
    image: Tuple[int, ...]
    expected: Tuple[int, ...]

    @property
    def valid(self) -> bool:
        return self.dimension_equation and self.is_mapping

    def to_dict(self):
        return {
            "valid": self.valid,
            "dimension_equation": self.dimension_equation,
            "is_mapping": self.is_mapping,
            "is_inclusion": self.is_inclusion,
            "image": list(self.image),
            "expected": list(self.expected),
        }


def validate_mapping(lam: MappingMatrix, source, target) -> MappingReport:
    """Check ``lam . dims(source) == dims(target)`` plus the row and column conditions."""
    a, b = as_dims(source), as_dims(target)
    if lam.shape != (len(b), len(a)):
        raise ShapeMismatch(
            f"mapping matrix is {lam.rows}x{lam.cols}, algebras need {len(b)}x{len(a)}")
    image = lam.apply(a)
    return MappingReport(
        dimension_equation=image == b.entries,
        is_mapping=lam.rows_positive(),
        is_inclusion=lam.is_inclusion(),
        image=image,
        expected=b.entries,
    )


def compose(lam_g: MappingMatrix, lam_h: MappingMatrix) -> MappingMatrix:
    """Mapping matrix of ``g o h``: the exact integer product ``lam_g @ lam_h``."""
    if lam_g.cols != lam_h.rows:
        raise ShapeMismatch(f"cannot compose {lam_g.shape} with {lam_h.shape}")
    cols_h = [lam_h.column(c) for c in range(lam_h.cols)]
    return MappingMatrix(
        [[sum(a * b for a, b in zip(row, col)) for col in cols_h] for row in lam_g.entries])


class BlockMatrix:
    """Element of ``M_{n_1} + ... + M_{n_r}`` stored as one dense block per summand."""

    __slots__ = ("dims", "blocks")

    def __init__(self, dims, blocks: Sequence[np.ndarray]):
        dims = as_dims(dims)
        blocks = tuple(np.asarray(b, dtype=complex) for b in blocks)
        if len(blocks) != len(dims):
            raise ShapeMismatch(f"{len(blocks)} blocks for {len(dims)} summands")
        for k, (n, b) in enumerate(zip(dims, blocks)):
            if b.shape != (n, n):
                raise ShapeMismatch(f"block {k} has shape {b.shape}, expected ({n}, {n})")
        self.dims = dims
        self.blocks = blocks

    @classmethod
    def zeros(cls, dims) -> "BlockMatrix":
        dims = as_dims(dims)
        return cls(dims, [np.zeros((n, n), dtype=complex) for n in dims])

    @classmethod
    def identity(cls, dims) -> "BlockMatrix":
        dims = as_dims(dims)
        return cls(dims, [np.eye(n, dtype=complex) for n in dims])

    @classmethod
    def from_dense(cls, dims, dense: np.ndarray) -> "BlockMatrix":
        """Take the diagonal blocks of ``dense``; off-diagonal blocks are discarded."""
        dims = as_dims(dims)
        dense = np.asarray(dense)
        if dense.shape != (dims.size, dims.size):
            raise ShapeMismatch(f"dense matrix {dense.shape} vs block size {dims.size}")
        return cls(dims, [dense[o:o + n, o:o + n] for o, n in zip(dims.offsets(), dims)])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dims.size, self.dims.size), dtype=complex)
        for o, b in zip(self.dims.offsets(), self.blocks):
            out[o:o + b.shape[0], o:o + b.shape[0]] = b
        return out

    def _check(self, other: "BlockMatrix"):
        if not isinstance(other, BlockMatrix):
            raise TypeError(f"expected BlockMatrix, got {type(other).__name__}")
        if other.dims != self.dims:
            raise ShapeMismatch(f"dims {list(self.dims)} vs {list(other.dims)}")

    def __add__(self, other):
        self._check(other)
        return BlockMatrix(self.dims, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        self._check(other)
        return BlockMatrix(self.dims, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return BlockMatrix(self.dims, [-b for b in self.blocks])

    def __mul__(self, scalar):
        return BlockMatrix(self.dims, [scalar * b for b in self.blocks])

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        return BlockMatrix(self.dims, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def adjoint(self) -> "BlockMatrix":
        return BlockMatrix(self.dims, [b.conj().T for b in self.blocks])

    @property
    def H(self) -> "BlockMatrix":
        return self.adjoint()

    def norm(self) -> float:
        """Operator norm: the largest block spectral norm."""
        return max((float(np.linalg.norm(b, 2)) if b.size else 0.0) for b in self.blocks)

    def trace(self) -> complex:
        return complex(sum(np.trace(b) for b in self.blocks))

    def block_traces(self) -> Tuple[complex, ...]:
        return tuple(complex(np.trace(b)) for b in self.blocks)

    def map_blocks(self, func) -> "BlockMatrix":
        return BlockMatrix(self.dims, [func(b) for b in self.blocks])

    def __repr__(self):
        return f"BlockMatrix(dims={list(self.dims)})"


def matrix_unit(dims, k: int, i: int, j: int) -> BlockMatrix:
    dims = as_dims(dims)
    out = BlockMatrix.zeros(dims)
    out.blocks[k][i, j] = 1.0
    return out


def unit_indices(dims) -> Iterator[UnitIndex]:
    for k, n in enumerate(as_dims(dims)):
        for i in range(n):
            for j in range(n):
                yield k, i, j


def matrix_units(dims) -> Dict[UnitIndex, BlockMatrix]:
    dims = as_dims(dims)
    return {idx: matrix_unit(dims, *idx) for idx in unit_indices(dims)}


def _norm(x) -> float:
    if isinstance(x, BlockMatrix):
        return x.norm()
    return float(np.linalg.norm(x, 2)) if np.size(x) else 0.0


def _identity_like(x):
    if isinstance(x, BlockMatrix):
        return BlockMatrix.identity(x.dims)
    return np.eye(np.shape(x)[0], dtype=complex)


def _adj(x):
    return x.adjoint() if isinstance(x, BlockMatrix) else np.conj(x).T


def matrix_unit_defect(units: Dict[UnitIndex, object], dims, unital: bool = True) -> float:
    """Largest violation of the matrix-unit relations.

    Checks ``e_ij e_lm = delta_jl e_im`` within each block, vanishing products
    across blocks, ``e_ij* = e_ji`` and, if ``unital``, ``sum_k,i e^k_ii = 1``.
    """
    dims = as_dims(dims)
    worst = 0.0
    keys = list(unit_indices(dims))
    for key in keys:
        if key not in units:
            raise ShapeMismatch(f"missing matrix unit {key}")
    for k, i, j in keys:
        e = units[(k, i, j)]
        worst = max(worst, _norm(_adj(e) - units[(k, j, i)]))
        for k2, l, m in keys:
            prod = e @ units[(k2, l, m)]
            if k2 == k and l == j:
                prod = prod - units[(k, i, m)]
            worst = max(worst, _norm(prod))
    if not unital:
        return worst
    first = units[keys[0]]
    total = _identity_like(first) * 0
    for k, n in enumerate(dims):
        for i in range(n):
            total = total + units[(k, i, i)]
    worst = max(worst, _norm(total - _identity_like(first)))
    return worst


@dataclass(frozen=True)
class RealizedMorphism:
    """A unital morphism given by the images of the source matrix units."""

    source: FdAlgebra
    target: FdAlgebra
    images: Dict[UnitIndex, BlockMatrix] = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "source", as_algebra(self.source))
        object.__setattr__(self, "target", as_algebra(self.target))
        for idx in unit_indices(self.source.dims):
            img = self.images.get(idx)
            if img is None:
                raise ShapeMismatch(f"no image for matrix unit {idx}")
            if img.dims != self.target.dims:
                raise ShapeMismatch(f"image of {idx} lives in {list(img.dims)}")

    def __call__(self, x: BlockMatrix) -> BlockMatrix:
        if x.dims != self.source.dims:
            raise ShapeMismatch(f"argument dims {list(x.dims)} vs source {list(self.source.dims)}")
        out = BlockMatrix.zeros(self.target.dims)
        for (k, i, j), img in self.images.items():
            c = x.blocks[k][i, j]
            if c != 0:
                out = out + c * img
        return out

    def then(self, outer: "RealizedMorphism") -> "RealizedMorphism":
        """``outer o self``."""
        if outer.source.dims != self.target.dims:
            raise ShapeMismatch("cannot compose: target of inner is not source of outer")
        return RealizedMorphism(
            self.source, outer.target, {idx: outer(img) for idx, img in self.images.items()})

    def conjugate(self, u: BlockMatrix) -> "RealizedMorphism":
        """The morphism ``x -> u* phi(x) u``."""
        uh = u.adjoint()
        return RealizedMorphism(
            self.source, self.target, {idx: uh @ img @ u for idx, img in self.images.items()})

    def unit_defect(self) -> float:
        return matrix_unit_defect(self.images, self.source.dims)


def realize(lam: MappingMatrix, source, target) -> RealizedMorphism:
    """Canonical block embedding with mapping matrix ``lam``.

    Inside target block ``f`` the source blocks appear in index order, block
    ``e`` repeated ``lam[f, e]`` times contiguously.
    """
    a, b = as_algebra(source), as_algebra(target)
    report = validate_mapping(lam, a, b)
    if not report.is_mapping:
        raise InvalidMatrix("some row of the mapping matrix is zero (morphism not unital)")
    if not report.dimension_equation:
        raise InvalidMatrix(
            f"dimension equation fails: lam . {list(a.dims)} = {list(report.image)} "
            f"!= {list(b.dims)}")
    images = {}
    starts = {}  # (f, e) -> offsets of the copies of block e inside block f
    for f in range(lam.rows):
        pos = 0
        for e, n in enumerate(a.dims):
            starts[(f, e)] = [pos + r * n for r in range(lam[f, e])]
            pos += lam[f, e] * n
    for k, i, j in unit_indices(a.dims):
        img = BlockMatrix.zeros(b.dims)
        for f in range(lam.rows):
            for off in starts[(f, k)]:
                img.blocks[f][off + i, off + j] = 1.0
        images[(k, i, j)] = img
    return RealizedMorphism(a, b, images)


def _multiplicities(phi: RealizedMorphism) -> np.ndarray:
    mult = np.zeros((len(phi.target.dims), len(phi.source.dims)))
    for e in range(len(phi.source.dims)):
        traces = phi.images[(e, 0, 0)].block_traces()
        mult[:, e] = [t.real for t in traces]
    return mult


def mapping_matrix_of(phi: RealizedMorphism, tol: float = MULTIPLICITY_TOL) -> MappingMatrix:
    """Multiplicities ``trace(central projection f . phi(e^e_11))``, rounded."""
    mult = _multiplicities(phi)
    rounded = np.rint(mult)
    err = float(np.max(np.abs(mult - rounded))) if mult.size else 0.0
    if err > tol:
        raise NotAMorphism(f"multiplicities are {err:.3g} away from integers")
    if np.any(rounded < 0):
        raise NotAMorphism("negative multiplicity")
    return MappingMatrix(rounded.astype(int).tolist())


def _range_basis(p: np.ndarray, rank: int) -> np.ndarray:
    w, v = np.linalg.eigh((p + p.conj().T) / 2)
    return v[:, np.argsort(w)[::-1][:rank]]


def _aligned_basis(q: np.ndarray, reference: np.ndarray, rank: int) -> np.ndarray:
    """Orthonormal basis of ``range(q)`` closest to ``reference`` (polar alignment)."""
    if rank == 0:
        return reference[:, :0]
    proj = q @ reference
    a, s, bh = np.linalg.svd(proj, full_matrices=False)
    if s.min() > 1e-6:
        return a @ bh
    return _range_basis(q, rank)


def inner_conjugacy(phi: RealizedMorphism, psi: RealizedMorphism) -> Optional[BlockMatrix]:
    """A unitary ``u`` in the target with ``psi(x) = u* phi(x) u``, or None.

    None means the mapping matrices differ, so the morphisms are not inner
    conjugate. Otherwise ``u`` is assembled from matched orthonormal frames:
    for each source block ``e``, bases of the ranges of ``phi(e_11)`` and
    ``psi(e_11)`` are transported by ``phi(e_i1)`` and ``psi(e_i1)``.
    """
    if phi.source.dims != psi.source.dims or phi.target.dims != psi.target.dims:
        raise ShapeMismatch("morphisms must share source and target")
    lam = mapping_matrix_of(phi)
    if lam != mapping_matrix_of(psi):
        return None
    blocks = []
    for f, m in enumerate(phi.target.dims):
        u = np.zeros((m, m), dtype=complex)
        for e, n in enumerate(phi.source.dims):
            mult = lam[f, e]
            if mult == 0:
                continue
            p_phi = phi.images[(e, 0, 0)].blocks[f]
            p_psi = psi.images[(e, 0, 0)].blocks[f]
            v = _range_basis(p_phi, mult)
            w = _aligned_basis(p_psi, v, mult)
            for i in range(n):
                left = phi.images[(e, i, 0)].blocks[f] @ v
                right = psi.images[(e, i, 0)].blocks[f] @ w
                u += left @ right.conj().T
        blocks.append(u)
    return BlockMatrix(phi.target.dims, blocks)


def intertwining_defect(phi: RealizedMorphism, psi: RealizedMorphism, u: BlockMatrix) -> float:
    """``max ||u* phi(e) u - psi(e)||`` over source matrix units."""
    uh = u.adjoint()
    return max((uh @ phi.images[idx] @ u - psi.images[idx]).norm() for idx in phi.images)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_block_unitary(dims, rng: np.random.Generator) -> BlockMatrix:
    dims = as_dims(dims)
    return BlockMatrix(dims, [random_unitary(n, rng) for n in dims])
