"""Factoring a permutation of omega into two interval-local permutations.

Breakpoints 0 = a(0) < a(1) < ... are chosen least-first so that the images
and preimages of [0, a(i-1)) stay inside [0, a(i)); then upward and downward
crossers at every second boundary are exchanged, giving a first factor that
preserves each [a(2i), a(2i+2)) and a cofactor preserving each
[a(2i-1), a(2i+1)).
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import PreconditionError
from .perm import Permutation, WordPermutation


class Breakpoints:
    """Lazily extended breakpoint sequence for a fixed permutation.

    The running maximum of images and preimages is tracked incrementally, so
    extending to n breakpoints costs one pass over [0, a(n))."""

    def __init__(self, f: Permutation, count: int = 1):
        self.f = f
        self.a: List[int] = [0]
        self._scanned = 0
        self._max_seen = 0
        self.ensure(count)

    def ensure(self, count: int) -> None:
        while len(self.a) <= count:
            prev = self.a[-1]
            while self._scanned < prev:
                x = self._scanned
                self._max_seen = max(self._max_seen, self.f.forward(x) + 1,
                                     self.f.backward(x) + 1)
                self._scanned += 1
            self.a.append(max(prev + 1, self._max_seen))

    def value(self, i: int) -> int:
        self.ensure(i)
        return self.a[i]

    def interval(self, i: int) -> Tuple[int, int]:
        """The half-open interval S_i = [a(i), a(i+1)); S_{-1} is empty."""
        if i < 0:
            return (0, 0)
        return (self.value(i), self.value(i + 1))

    def index_of(self, m: int) -> int:
        while self.a[-1] <= m:
            self.ensure(len(self.a))
        return bisect.bisect_right(self.a, m) - 1

    def crossing_counts(self, i: int) -> Tuple[int, int]:
        """Elements moved up past a(i) - 1/2 from S_{i-1}, and down into it."""
        lo, mid = self.interval(i - 1)
        _, hi = self.interval(i)
        ups = sum(1 for x in range(lo, mid) if self.f.forward(x) >= mid)
        downs = sum(1 for x in range(mid, hi) if self.f.forward(x) < mid)
        return ups, downs


def breakpoints(f: Permutation, count: int) -> Breakpoints:
    return Breakpoints(f, count)


class _PairedExchanger(Permutation):
    """The first local factor: swaps paired crossers inside [a(2i), a(2i+2))."""

    form = "local-factor"

    def __init__(self, bp: Breakpoints):
        super().__init__()
        self.bp = bp
        self._cache: dict = {}
        if bp.f.support_bound is not None:
            i = 0
            while bp.value(2 * i) < bp.f.support_bound:
                i += 1
            self.support_bound = bp.value(2 * i)

    def _pairing(self, i: int) -> dict:
        if i in self._cache:
            return self._cache[i]
        lo, mid = self.bp.interval(2 * i)
        _, hi = self.bp.interval(2 * i + 1)
        f = self.bp.f
        ups = [x for x in range(lo, mid) if f.forward(x) >= mid]
        downs = [x for x in range(mid, hi) if f.forward(x) < mid]
        if len(ups) != len(downs):
            raise PreconditionError(
                f"crossing counts differ at boundary {mid}: this cannot happen "
                f"for a two-sided permutation if the breakpoints are valid")
        mapping = {}
        for a, b in zip(ups, downs):
            mapping[a] = b
            mapping[b] = a
        self._cache[i] = mapping
        return mapping

    def _fwd(self, alpha):
        i = self.bp.index_of(alpha) // 2
        return self._pairing(i).get(alpha, alpha)

    _bwd = _fwd

    def inverse(self):
        return self


def decompose_local(f: Permutation, count: int = 8) -> Tuple[Permutation, Permutation]:
    """f = g . h with g preserving each [a(2i), a(2i+2)) and h = g^-1 f
    preserving each [a(2i-1), a(2i+1))."""
    bp = Breakpoints(f, count)
    g = _PairedExchanger(bp)
    h = WordPermutation([g.inverse(), f])
    if g.support_bound is not None and f.support_bound is not None:
        h.support_bound = max(g.support_bound, f.support_bound)
    return g, h


@dataclass
class LocalityReport:
    answer: str  # "yes" | "no-at-budget" | "unknown"
    invariant_prefixes: List[int]
    stuck_at: Optional[int] = None
    probe: int = 0
    basis: str = ""


def is_local(f: Permutation, probe_prefix: int) -> LocalityReport:
    """Look for invariant initial segments [0, j).

    Certified finite support gives a genuine yes.  Otherwise the answer is
    yes when witnesses keep appearing in the upper half of the probed range,
    and no-at-budget when the largest witness leaves the rest of the range
    bare.
    """
    if probe_prefix <= 0:
        return LocalityReport("unknown", [], probe=probe_prefix,
                              basis="empty probe")
    witnesses = []
    running_max = -1
    for j in range(1, probe_prefix + 1):
        running_max = max(running_max, f.forward(j - 1), f.backward(j - 1))
        if running_max < j:
            witnesses.append(j)
    if f.support_bound is not None:
        return LocalityReport("yes", witnesses, probe=probe_prefix,
                              basis="finite support certificate")
    if witnesses and witnesses[-1] > probe_prefix // 2:
        return LocalityReport("yes", witnesses, probe=probe_prefix,
                              basis="invariant prefixes persist through the probe")
    stuck = witnesses[-1] if witnesses else 0
    return LocalityReport("no-at-budget", witnesses, stuck_at=stuck,
                          probe=probe_prefix,
                          basis=f"no invariant prefix in ({stuck}, {probe_prefix}]")
