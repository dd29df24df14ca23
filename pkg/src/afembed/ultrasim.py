"""Finite-truncation model of ultraproducts of finite-dimensional algebras.

An element is a bounded sequence ``x_1, ..., x_T`` with ``x_i`` in ``B_i``.
The free ultrafilter is replaced by an eventual-tail filter: the ultralimit
of a scalar sequence is read off the last ``W`` terms. Those terms are fitted
by a polynomial in ``1/i`` (by default ``L + c/i + d/i^2``) and ``L`` is
reported. When the fit residual exceeds the tolerance the limit is declared
undetermined (:class:`NonConvergent`) rather than guessed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import BlockMatrix, FdAlgebra, UnitIndex, as_algebra, as_dims
from .errors import (AfembedError, InvariantViolation, NeverAdmissible, NonConvergent,
                     ShapeMismatch)
from .matnum import MAX_UNIT_DEFECT, lift_matrix_units

DEFAULT_T = 256
DEFAULT_W = 32
DEFAULT_TOL = 1e-6
DEFAULT_DEGREE = 2
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class IndexedFamily:
    algebras: Tuple[FdAlgebra, ...]
    window: int = DEFAULT_W
    # polynomial degree in 1/i for the tail fit; 0 means "window mean"
    degree: int = DEFAULT_DEGREE

    def __post_init__(self):
        object.__setattr__(self, "algebras", tuple(as_algebra(a) for a in self.algebras))
        if self.window < 3:
            raise InvariantViolation(f"window {self.window} must be at least 3")
        if len(self.algebras) < self.window:
            raise InvariantViolation(
                f"truncation {len(self.algebras)} is shorter than the window {self.window}")
        if not 0 <= self.degree < self.window - 1:
            raise InvariantViolation(f"fit degree {self.degree} is out of range")

    @classmethod
    def constant(cls, dims, T: int = DEFAULT_T, window: int = DEFAULT_W,
                 degree: int = DEFAULT_DEGREE) -> "IndexedFamily":
        alg = FdAlgebra(as_dims(dims))
        return cls(tuple([alg] * T), window, degree)

    @property
    def T(self) -> int:
        return len(self.algebras)

    def indices(self) -> range:
        """1-based indices of the truncation."""
        return range(1, self.T + 1)


class UltraElement:
    """A bounded sequence of block matrices over an :class:`IndexedFamily`."""

    __slots__ = ("family", "terms", "declared_bound", "_norms")

    def __init__(self, family: IndexedFamily, terms: Sequence[BlockMatrix],
                 declared_bound: Optional[float] = None):
        terms = tuple(terms)
        if len(terms) != family.T:
            raise ShapeMismatch(f"{len(terms)} terms for a family of length {family.T}")
        norms = []
        for i, (t, alg) in enumerate(zip(terms, family.algebras), start=1):
            if t.dims != alg.dims:
                raise ShapeMismatch(f"term {i} has dims {list(t.dims)}, expected {list(alg.dims)}")
            norms.append(t.norm())
        top = max(norms)
        if declared_bound is None:
            declared_bound = top
        elif top > declared_bound * (1 + BOUND_SLACK) + BOUND_SLACK:
            bad = next(i for i, n in enumerate(norms, start=1) if n > declared_bound)
            raise InvariantViolation(
                f"term {bad} has norm {norms[bad - 1]:.6g} above the declared bound {declared_bound}")
        self.family = family
        self.terms = terms
        self.declared_bound = float(declared_bound)
        self._norms = norms

    @classmethod
    def _derived(cls, family: IndexedFamily, terms, declared_bound: float) -> "UltraElement":
        # results of algebra operations: dims and bound follow from the operands,
        # so term norms are computed only when asked for
        x = cls.__new__(cls)
        x.family = family
        x.terms = tuple(terms)
        x.declared_bound = float(declared_bound)
        x._norms = None
        return x

    @classmethod
    def from_function(cls, family: IndexedFamily, func: Callable[[int, FdAlgebra], BlockMatrix],
                      declared_bound: Optional[float] = None) -> "UltraElement":
        """Terms ``func(i, B_i)`` for 1-based ``i``."""
        return cls(family, [func(i, a) for i, a in zip(family.indices(), family.algebras)],
                   declared_bound)

    def _zip(self, other: "UltraElement"):
        if other.family != self.family:
            raise ShapeMismatch("elements live over different families")
        return zip(self.terms, other.terms)

    def __add__(self, other):
        return UltraElement._derived(self.family, [a + b for a, b in self._zip(other)],
                            self.declared_bound + other.declared_bound)

    def __sub__(self, other):
        return UltraElement._derived(self.family, [a - b for a, b in self._zip(other)],
                            self.declared_bound + other.declared_bound)

    def __mul__(self, scalar):
        return UltraElement._derived(self.family, [scalar * t for t in self.terms],
                            abs(scalar) * self.declared_bound)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return UltraElement._derived(self.family, [a @ b for a, b in self._zip(other)],
                            self.declared_bound * other.declared_bound)

    def adjoint(self) -> "UltraElement":
        return UltraElement._derived(self.family, [t.adjoint() for t in self.terms], self.declared_bound)

    def map_terms(self, func: Callable[[BlockMatrix], BlockMatrix],
                  declared_bound: Optional[float] = None) -> "UltraElement":
        return UltraElement(self.family, [func(t) for t in self.terms], declared_bound)

    def norms(self) -> List[float]:
        if self._norms is None:
            self._norms = [t.norm() for t in self.terms]
        return list(self._norms)

    def tail_norms(self, window: int) -> List[float]:
        """Norms of the last ``window`` terms."""
        if self._norms is not None:
            return self._norms[-window:]
        return [t.norm() for t in self.terms[-window:]]


@dataclass(frozen=True)
class TailLimit:
    value: float
    residual: float
    spread: float
    tol: float


def default_tol(bound: float) -> float:
    return DEFAULT_TOL * bound if bound > 0 else DEFAULT_TOL


def tail_limit(values: Sequence[float], window: int, degree: int = DEFAULT_DEGREE,
               tol: float = DEFAULT_TOL, start_index: int = 1) -> TailLimit:
    """Ultralimit of a scalar sequence under the eventual-tail model.

    ``values[k]`` belongs to index ``start_index + k``. Raises
    :class:`NonConvergent` when the last ``window`` values are not fitted to
    within ``tol`` by a degree-``degree`` polynomial in ``1/i``.
    """
    vals = np.asarray(values, dtype=float)
    if len(vals) < window:
        raise ShapeMismatch(f"{len(vals)} values for a window of {window}")
    tail = vals[-window:]
    idx = np.arange(start_index + len(vals) - window, start_index + len(vals), dtype=float)
    spread = float(tail.max() - tail.min())
    if degree == 0:
        value = math.fsum(tail.tolist()) / window
        residual = spread
    else:
        # 1/i is rescaled to [0, 1] on the window so the fit is well conditioned
        u = 1.0 / idx
        lo, hi = u.min(), u.max()
        s = (u - lo) / (hi - lo)
        A = np.vander(s, degree + 1, increasing=True)
        coef, *_ = np.linalg.lstsq(A, tail, rcond=None)
        residual = float(np.max(np.abs(A @ coef - tail)))
        s0 = (0.0 - lo) / (hi - lo)
        value = float(np.polyval(coef[::-1], s0))
    if residual > tol:
        raise NonConvergent(
            f"tail of length {window} is not settled: fit residual {residual:.3g} > tol {tol:.3g}")
    return TailLimit(value, residual, spread, tol)


def up_norm(x: UltraElement, tol: Optional[float] = None) -> float:
    """``lim_U ||x_i||`` modelled on the tail window."""
    if tol is None:
        tol = default_tol(x.declared_bound)
    W = x.family.window
    res = tail_limit(x.tail_norms(W), W, x.family.degree, tol, start_index=x.family.T - W + 1)
    return max(res.value, 0.0)


def pi_equal(x: UltraElement, y: UltraElement, tol: Optional[float] = None) -> bool:
    """Equality in the quotient by the null sequences: ``up_norm(x - y) <= tol``."""
    d = x - y
    if tol is None:
        tol = default_tol(max(x.declared_bound, y.declared_bound))
    return up_norm(d, tol) <= tol


@dataclass
class QuotientReport:
    passed: bool
    tol: float
    cstar_residual: float = 0.0
    submultiplicativity_excess: float = 0.0
    triangle_excess: float = 0.0
    adjoint_residual: float = 0.0
    ideal_residual: float = 0.0
    checks: int = 0

    def to_dict(self):
        return dict(self.__dict__)


def quotient_algebra_check(family: IndexedFamily, samples: Sequence[UltraElement],
                           tol: Optional[float] = None) -> QuotientReport:
    """C*-algebra identities of the quotient, evaluated on ``samples``.

    Checks the C*-identity ``|x x*| = |x|^2``, submultiplicativity, the
    triangle inequality, isometry of the adjoint, and that products with a
    null sequence (``x_i / i``) are null, so the quotient map is a
    *-homomorphism with a well-defined product.
    """
    samples = list(samples)
    for s in samples:
        if s.family != family:
            raise ShapeMismatch("sample over a different family")
    if tol is None:
        tol = default_tol(max([s.declared_bound for s in samples] + [1.0]))
    rep = QuotientReport(True, tol)
    norms = [up_norm(s) for s in samples]
    for s, ns in zip(samples, norms):
        rep.cstar_residual = max(rep.cstar_residual,
                                 abs(up_norm(s @ s.adjoint()) - ns ** 2) / (1 + ns) ** 2)
        rep.adjoint_residual = max(rep.adjoint_residual, abs(up_norm(s.adjoint()) - ns))
        null = UltraElement.from_function(
            family, lambda i, a, s=s: s.terms[i - 1] * (1.0 / i), s.declared_bound)
        rep.ideal_residual = max(rep.ideal_residual, up_norm(s @ null), up_norm(null @ s))
        rep.checks += 4
        if rep.cstar_residual > tol:
            rep.passed = False
    for a, (x, nx) in enumerate(zip(samples, norms)):
        for y, ny in zip(samples[a + 1:], norms[a + 1:]):
            rep.submultiplicativity_excess = max(rep.submultiplicativity_excess,
                                                 up_norm(x @ y) - nx * ny)
            rep.triangle_excess = max(rep.triangle_excess, up_norm(x + y) - nx - ny)
            rep.checks += 2
    slack = 2 * tol * (1 + max(norms + [0.0])) ** 2
    if (rep.submultiplicativity_excess > slack or rep.triangle_excess > slack
            or rep.adjoint_residual > slack or rep.ideal_residual > slack):
        rep.passed = False
    return rep


@dataclass
class UnitLiftResult:
    units: List[Optional[Dict[UnitIndex, BlockMatrix]]]
    threshold_index: int
    failures: Dict[int, str] = field(default_factory=dict)

    def to_dict(self):
        return {"threshold_index": self.threshold_index,
                "failures": {str(k): v for k, v in sorted(self.failures.items())}}


def lift_units_along(family: IndexedFamily, almost: Sequence[Dict[UnitIndex, BlockMatrix]],
                     dims, max_defect: float = MAX_UNIT_DEFECT) -> UnitLiftResult:
    """Lift per-index almost matrix units; report the 1-based index from which all succeed."""
    if len(almost) != family.T:
        raise ShapeMismatch(f"{len(almost)} unit systems for a family of length {family.T}")
    dims = as_dims(dims)
    units: List[Optional[Dict[UnitIndex, BlockMatrix]]] = []
    failures: Dict[int, str] = {}
    for i, cand in enumerate(almost, start=1):
        try:
            units.append(lift_matrix_units(cand, dims, max_defect))
        except AfembedError as exc:
            units.append(None)
            failures[i] = exc.code
    if units[-1] is None:
        raise NeverAdmissible("no tail index admits a correction")
    i0 = family.T
    while i0 > 1 and units[i0 - 2] is not None:
        i0 -= 1
    return UnitLiftResult(units, i0, failures)


@dataclass(frozen=True)
class MergeResult:
    index: int
    unitary_level: int
    depth: int

    def to_dict(self):
        return {"index": self.index, "unitary_level": self.unitary_level, "depth": self.depth}


def _dense(x) -> np.ndarray:
    return x.to_dense() if isinstance(x, BlockMatrix) else np.asarray(x, dtype=complex)


def conjugacy_merge(family: IndexedFamily, phi_levels, psi_levels, unitaries,
                    tol: float = DEFAULT_TOL) -> MergeResult:
    """Pick the index and intertwiner reaching the deepest level of the chain.

    ``phi_levels[i][l]`` and ``psi_levels[i][l]`` list the images, at family
    index ``i``, of the generators of the l-th chain algebra;
    ``unitaries[i][l]`` is the candidate intertwiner for level ``l``. A unitary
    ``u`` reaches depth ``d`` when ``||u* phi(g) u - psi(g)|| <= tol`` for
    every generator of levels ``1..d``. Indices and levels are reported
    1-based; depth 0 means nothing intertwines.
    """
    if not (len(phi_levels) == len(psi_levels) == len(unitaries) == family.T):
        raise ShapeMismatch("phi, psi and unitaries must have one entry per family index")
    best = MergeResult(1, 0, 0)
    for i in range(family.T):
        phis, psis = phi_levels[i], psi_levels[i]
        for l, u in enumerate(unitaries[i]):
            if u is None:
                continue
            u = _dense(u)
            uh = u.conj().T
            depth = 0
            for gens_phi, gens_psi in zip(phis, psis):
                worst = max((float(np.linalg.norm(uh @ _dense(a) @ u - _dense(b), 2))
                             for a, b in zip(gens_phi, gens_psi)), default=0.0)
                if worst > tol:
                    break
                depth += 1
            if depth > best.depth:
                best = MergeResult(i + 1, l + 1, depth)
    return best
