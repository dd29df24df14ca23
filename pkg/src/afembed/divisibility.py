"""Divisibility of dimension vectors: ``m | n`` iff ``n = G m`` for an inclusion matrix ``G``.

Each row of ``G`` is a nonnegative solution of ``sum_e G[r, e] m_e = n_r``
(a coin problem); the rows are coupled only through column positivity. A
value ``v`` is representable by coins ``c_1 < ... `` iff ``v`` is at least the
smallest representable value in its residue class modulo ``c_1``. Those class
minima come from a shortest-path pass over residues, so the search cost does
not depend on the size of ``n`` and targets may be huge integers.

Witnesses are produced in lexicographic order of their row-major entries by
a depth-first walk which only ever steps to entries that admit a completion.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Optional, Tuple

from .algebra import DimensionVector, MappingMatrix, as_dims


@dataclass(frozen=True)
class DivisibilityWitness:
    gamma: MappingMatrix
    source: DimensionVector
    target: DimensionVector

    def check(self) -> bool:
        """Exact integer check of ``gamma . source == target`` and column positivity."""
        return (self.gamma.apply(self.source) == self.target.entries
                and self.gamma.is_inclusion())

    def to_dict(self):
        return {
            "source": list(self.source),
            "target": list(self.target),
            "gamma": self.gamma.tolist(),
        }


@lru_cache(maxsize=4096)
def _residue_minima(coins: Tuple[int, ...]) -> Tuple[int, ...]:
    """Smallest representable value in each residue class mod ``min(coins)``.

    Unreachable classes hold -1.
    """
    q = coins[0]
    dist = [-1] * q
    dist[0] = 0
    heap = [(0, 0)]
    settled = [False] * q
    while heap:
        d, r = heapq.heappop(heap)
        if settled[r]:
            continue
        settled[r] = True
        for c in coins[1:]:
            nr = (r + c) % q
            nd = d + c
            if not settled[nr] and (dist[nr] < 0 or nd < dist[nr]):
                dist[nr] = nd
                heapq.heappush(heap, (nd, nr))
    return tuple(dist)


def representable(value: int, coins) -> bool:
    """Whether ``value`` is a nonnegative integer combination of ``coins``."""
    if value < 0:
        return False
    coins = tuple(sorted(set(coins)))
    if not coins:
        return value == 0
    dist = _residue_minima(coins)
    d = dist[value % coins[0]]
    return d >= 0 and value >= d


class _Walker:
    """Lexicographic enumeration of ``G`` with ``G m = n`` (columns optionally covered).

    Sets of columns still to be covered are bitmasks.
    """

    def __init__(self, m: Tuple[int, ...], n: Tuple[int, ...], cover_columns: bool):
        self.m = m
        self.n = n
        self.R = len(n)
        self.E = len(m)
        self.cover = cover_columns
        E = self.E
        self._msum_cache = {0: 0}
        self.all_q, self.all_dist = self._coin_table(m)
        # coins available to the columns after e
        self.tail_mask = [((1 << E) - 1) & ~((1 << (e + 1)) - 1) for e in range(E)]
        self.tail_table = [self._coin_table(m[e + 1:]) if e + 1 < E else None for e in range(E)]
        self._later_cache = {}

    def _msum(self, mask: int) -> int:
        hit = self._msum_cache.get(mask)
        if hit is None:
            hit = sum(self.m[c] for c in range(self.E) if mask >> c & 1)
            self._msum_cache[mask] = hit
        return hit

    @staticmethod
    def _coin_table(coins):
        coins = tuple(sorted(set(coins)))
        return coins[0], _residue_minima(coins)

    @staticmethod
    def _rep(value: int, table) -> bool:
        if value < 0:
            return False
        q, dist = table
        d = dist[value % q]
        return d >= 0 and value >= d

    @staticmethod
    def _submasks(mask: int):
        sub = mask
        while True:
            yield sub
            if sub == 0:
                return
            sub = (sub - 1) & mask

    def _later_ok(self, r: int, pending: int) -> bool:
        """Can the ``pending`` columns be covered by rows ``r+1 .. R-1``?"""
        key = (r, pending)
        hit = self._later_cache.get(key)
        if hit is not None:
            return hit
        if r == self.R - 1:
            ok = not pending
        else:
            value = self.n[r + 1]
            table = (self.all_q, self.all_dist)
            ok = any(self._rep(value - self._msum(chosen), table)
                     and self._later_ok(r + 1, pending & ~chosen)
                     for chosen in self._submasks(pending))
        self._later_cache[key] = ok
        return ok

    def _first_feasible(self, r: int, e: int, residual: int, uncovered: int,
                        start: int) -> Optional[int]:
        """Smallest ``t >= start`` such that ``G[r, e] = t`` admits a completion."""
        m_e = self.m[e]
        bit = 1 << e
        if start * m_e > residual:
            return None
        table = self.tail_table[e]
        if table is None:
            if residual % m_e:
                return None
            t = residual // m_e
            if t < start:
                return None
            left = uncovered & ~bit if t > 0 else uncovered
            return t if self._later_ok(r, left) else None

        q = table[0]
        # t = 0 and t > 0 differ in whether column e becomes covered.
        options = [(0, False)] if start == 0 else []
        options.append((max(start, 1), True))
        best = None
        for lo, positive in options:
            left = uncovered & ~bit if positive else uncovered
            for here in self._submasks(left & self.tail_mask[e]):
                if not self._later_ok(r, left & ~here):
                    continue
                base = residual - self._msum(here)
                # rest(t) mod q has period dividing q, and within one residue
                # class feasibility only degrades as t grows.
                for t in range(lo, lo + q if positive else 1):
                    if best is not None and t >= best:
                        break
                    rest = base - t * m_e
                    if rest < 0:
                        break
                    if self._rep(rest, table):
                        best = t
                        break
            if best is not None:
                return best
        return best

    def feasible(self) -> bool:
        full = (1 << self.E) - 1 if self.cover else 0
        return self._later_ok(-1, full)

    def walk(self) -> Iterator[Tuple[Tuple[int, ...], ...]]:
        if not self.feasible():
            return
        grid = [[0] * self.E for _ in range(self.R)]
        start_uncovered = (1 << self.E) - 1 if self.cover else 0

        def step(r, e, residual, uncovered):
            if r == self.R:
                yield tuple(tuple(row) for row in grid)
                return
            t = self._first_feasible(r, e, residual, uncovered, 0)
            while t is not None:
                grid[r][e] = t
                nxt_unc = uncovered & ~(1 << e) if t > 0 else uncovered
                rest = residual - t * self.m[e]
                if e + 1 < self.E:
                    yield from step(r, e + 1, rest, nxt_unc)
                elif r + 1 < self.R:
                    yield from step(r + 1, 0, self.n[r + 1], nxt_unc)
                else:
                    yield from step(r + 1, 0, 0, nxt_unc)
                t = self._first_feasible(r, e, residual, uncovered, t + 1)
            grid[r][e] = 0

        yield from step(0, 0, self.n[0], start_uncovered)


def iter_solutions(m, n, *, inclusion: bool = True) -> Iterator[MappingMatrix]:
    """All ``G >= 0`` with ``G m = n`` in lexicographic order.

    With ``inclusion`` every column of ``G`` must also be positive. Rows are
    automatically nonzero because ``n`` has positive entries.
    """
    m, n = as_dims(m), as_dims(n)
    for grid in _Walker(m.entries, n.entries, inclusion).walk():
        yield MappingMatrix(grid)


def divides(m, n) -> Optional[DivisibilityWitness]:
    """The lexicographically first inclusion matrix ``G`` with ``n = G m``, or None."""
    m, n = as_dims(m), as_dims(n)
    gamma = next(iter_solutions(m, n), None)
    if gamma is None:
        return None
    return DivisibilityWitness(gamma, m, n)


def enumerate_witnesses(m, n, limit: Optional[int] = None) -> List[DivisibilityWitness]:
    """Distinct witnesses of ``m | n`` in lexicographic order, at most ``limit`` of them."""
    if limit is not None and limit < 1:
        raise ValueError("limit must be at least 1")
    m, n = as_dims(m), as_dims(n)
    return [DivisibilityWitness(g, m, n)
            for g in itertools.islice(iter_solutions(m, n), limit)]
