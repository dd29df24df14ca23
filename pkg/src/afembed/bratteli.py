"""Inductive chains ``A_1 -> A_2 -> ... -> A_K`` and their morphisms into a fixed target.

Morphisms from the chain into ``M_{N_1} + ... + M_{N_s}`` are classified up
to inner conjugacy by matrix sequences ``G_1, ..., G_K`` with
``G_k dims(A_k) = N`` and ``G_{k+1} L_k = G_k``, where ``L_k`` is the
inclusion matrix of the k-th connecting map. Only finite depth ``K`` is
handled; going deeper can merge classes, never split them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .algebra import DimensionVector, FdAlgebra, MappingMatrix, as_algebra, as_dims, compose
from .divisibility import divides, iter_solutions
from .errors import NotAUHFChain, ShapeMismatch


@dataclass(frozen=True)
class BratteliChain:
    algebras: Tuple[FdAlgebra, ...]
    inclusions: Tuple[MappingMatrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "algebras", tuple(as_algebra(a) for a in self.algebras))
        object.__setattr__(self, "inclusions", tuple(MappingMatrix(m) for m in self.inclusions))
        if not self.algebras:
            raise ShapeMismatch("a chain needs at least one algebra")
        if len(self.inclusions) != len(self.algebras) - 1:
            raise ShapeMismatch(
                f"{len(self.algebras)} algebras need {len(self.algebras) - 1} inclusions, "
                f"got {len(self.inclusions)}")

    @classmethod
    def from_dims(cls, dims: Sequence, inclusions: Sequence) -> "BratteliChain":
        return cls(tuple(FdAlgebra(as_dims(d)) for d in dims), tuple(inclusions))

    @property
    def depth(self) -> int:
        return len(self.algebras)

    def dims(self, k: int) -> DimensionVector:
        return self.algebras[k].dims


@dataclass(frozen=True)
class ChainReport:
    valid: bool
    failure_index: Optional[int] = None
    reason: str = ""

    def to_dict(self):
        return {"valid": self.valid, "failure_index": self.failure_index, "reason": self.reason}


@dataclass(frozen=True)
class MatrixSequence:
    gammas: Tuple[MappingMatrix, ...]
    target: DimensionVector

    @property
    def injective(self) -> bool:
        return all(g.is_inclusion() for g in self.gammas)

    def to_dict(self):
        return {
            "target": list(self.target),
            "gammas": [g.tolist() for g in self.gammas],
            "injective": self.injective,
        }


def validate_chain(chain: BratteliChain) -> ChainReport:
    for k, lam in enumerate(chain.inclusions):
        src, dst = chain.dims(k), chain.dims(k + 1)
        if lam.shape != (len(dst), len(src)):
            return ChainReport(False, k, f"inclusion {k} has shape {lam.shape}, "
                                         f"expected {(len(dst), len(src))}")
        if lam.apply(src) != dst.entries:
            return ChainReport(False, k, f"inclusion {k} maps {list(src)} to "
                                         f"{list(lam.apply(src))}, not {list(dst)}")
        if not lam.rows_positive():
            return ChainReport(False, k, f"inclusion {k} has a zero row: not unital")
        if not lam.columns_positive():
            return ChainReport(False, k, f"inclusion {k} has a zero column: not injective")
    return ChainReport(True)


def validate_matrix_sequence(chain: BratteliChain, seq: MatrixSequence) -> ChainReport:
    if len(seq.gammas) != chain.depth:
        raise ShapeMismatch(f"{len(seq.gammas)} matrices for a chain of depth {chain.depth}")
    for k, g in enumerate(seq.gammas):
        if g.shape != (len(seq.target), len(chain.dims(k))):
            raise ShapeMismatch(f"gamma {k} has shape {g.shape}")
    for k, g in enumerate(seq.gammas):
        if g.apply(chain.dims(k)) != seq.target.entries:
            return ChainReport(False, k, f"gamma {k} . dims(A_{k}) != target")
        if not g.rows_positive():
            return ChainReport(False, k, f"gamma {k} has a zero row")
    for k, lam in enumerate(chain.inclusions):
        if compose(seq.gammas[k + 1], lam) != seq.gammas[k]:
            return ChainReport(False, k, f"gamma {k + 1} . L_{k} != gamma {k}")
    return ChainReport(True)


def make_compatible(chain: BratteliChain, gamma_deep: MappingMatrix) -> MatrixSequence:
    """Back-propagate the deepest matrix: ``G_k = G_K L_{K-1} ... L_k``."""
    deepest = chain.dims(chain.depth - 1)
    if gamma_deep.cols != len(deepest):
        raise ShapeMismatch(
            f"deepest matrix has {gamma_deep.cols} columns, A_K has {len(deepest)} blocks")
    gammas = [gamma_deep]
    for lam in reversed(chain.inclusions):
        gammas.append(compose(gammas[-1], lam))
    gammas.reverse()
    return MatrixSequence(tuple(gammas), DimensionVector(gamma_deep.apply(deepest)))


def classify_morphisms(chain: BratteliChain, target) -> List[MatrixSequence]:
    """One matrix sequence per inner-conjugacy class of unital morphisms at depth K.

    Ordered lexicographically by the deepest matrix.
    """
    target = as_dims(target)
    deepest = chain.dims(chain.depth - 1)
    return [make_compatible(chain, g) for g in iter_solutions(deepest, target, inclusion=False)]


@dataclass(frozen=True)
class EmbeddingVerdict:
    embeds: bool
    witness: Optional[MatrixSequence] = None

    def to_dict(self):
        return {
            "verdict": "EMBEDS" if self.embeds else "NO",
            "witness": self.witness.to_dict() if self.witness else None,
        }


def decide_embedding(chain: BratteliChain, target) -> EmbeddingVerdict:
    """Embeddable iff the deepest dimension vector divides the target."""
    target = as_dims(target)
    wit = divides(chain.dims(chain.depth - 1), target)
    if wit is None:
        return EmbeddingVerdict(False)
    return EmbeddingVerdict(True, make_compatible(chain, wit.gamma))


def uhf_check(moduli: Sequence[int], N: int) -> bool:
    """A UHF chain ``n_1 | n_2 | ...`` embeds unitally in ``M_N`` iff every ``n_k`` divides ``N``."""
    moduli = [int(n) for n in moduli]
    if not moduli or any(n < 1 for n in moduli):
        raise NotAUHFChain("moduli must be positive integers")
    if N < 1:
        raise NotAUHFChain("N must be a positive integer")
    for a, b in zip(moduli, moduli[1:]):
        if b % a:
            raise NotAUHFChain(f"{a} does not divide {b}")
    return all(N % n == 0 for n in moduli)


def uhf_chain(moduli: Sequence[int]) -> BratteliChain:
    """The chain ``M_{n_1} -> M_{n_2} -> ...`` with 1x1 inclusion matrices ``n_{k+1}/n_k``."""
    moduli = [int(n) for n in moduli]
    for a, b in zip(moduli, moduli[1:]):
        if b % a:
            raise NotAUHFChain(f"{a} does not divide {b}")
    return BratteliChain.from_dims([(n,) for n in moduli],
                                   [[[b // a]] for a, b in zip(moduli, moduli[1:])])
