"""Generalized metrics on the naturals, with exact arithmetic.

Distances are exact rationals or the single value INF; comparisons are never
floating point.  The square-root metric is supported comparison-only: it can
compare a distance with a rational threshold exactly (via squared integer
arithmetic) but cannot return the distance itself.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import (
    InsufficientSetError,
    NoCertificateError,
    NotUncrowdedError,
    ParseError,
    PreconditionError,
    UnsupportedMetricError,
)
from .partitions import Partition, parse_partition
from .perm import (
    FiniteSupportPermutation,
    Permutation,
    RulePermutation,
    WordPermutation,
    identity,
    nat_to_z,
    parse_perm,
    verify_window,
    z_to_nat,
)


class _Infinity:
    """The top element of the distance order."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __eq__(self, other):
        return isinstance(other, _Infinity)

    def __hash__(self):
        return hash("symkit-infinity")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, _Infinity)

    def __gt__(self, other):
        return not isinstance(other, _Infinity)

    def __ge__(self, other):
        return True

    def __add__(self, other):
        return self

    def __radd__(self, other):
        return self


INF = _Infinity()

Distance = Union[int, Fraction, _Infinity]

BALL_CAP = 4096


def is_finite(d: Distance) -> bool:
    return not isinstance(d, _Infinity)


def _cmp(a, b) -> int:
    return (a > b) - (a < b)


class GeneralizedMetric:
    """Distance oracle with exact comparisons and finite ball enumeration."""

    key = "abstract"
    value_class = "rational"      # or "comparison-only"
    all_finite = False            # every pairwise distance is finite
    discrete_infinite = False     # distinct points sit at distance INF
    uniform_bound: Optional[Callable[[Fraction], int]] = None
    partition: Optional[Partition] = None

    def dist(self, a: int, b: int) -> Distance:
        raise NotImplementedError

    def dist_cmp(self, a: int, b: int, r: Fraction) -> int:
        """Exact comparison of d(a, b) against the rational threshold r."""
        d = self.dist(a, b)
        if isinstance(d, _Infinity):
            return 1
        return _cmp(d, r)

    def ball(self, a: int, r: Fraction, cap: int = BALL_CAP) -> List[int]:
        """The open ball B(a, r), raising NotUncrowdedError past ``cap``."""
        raise NotImplementedError

    def __repr__(self):
        return f"<metric {self.key}>"


class StandardOmega(GeneralizedMetric):
    key = "standard-omega"
    all_finite = True

    def __init__(self):
        self.uniform_bound = lambda r: 2 * _ceil_int(r) + 1

    def dist(self, a, b):
        return abs(a - b)

    def ball(self, a, r, cap=BALL_CAP):
        lo = max(0, _floor_strict(a - r) + 1) if a - r >= 0 else 0
        hi = _ceil_strict(a + r) - 1
        out = [m for m in range(lo, hi + 1) if abs(m - a) < r]
        if len(out) > cap:
            raise NotUncrowdedError("ball exceeds cap", center=a, radius=r)
        return out


class StandardZ(GeneralizedMetric):
    """Standard distance on the integers, carried to the naturals."""

    key = "standard-z"
    all_finite = True

    def __init__(self):
        self.uniform_bound = lambda r: 2 * _ceil_int(r) + 1

    def dist(self, a, b):
        return abs(nat_to_z(a) - nat_to_z(b))

    def ball(self, a, r, cap=BALL_CAP):
        z = nat_to_z(a)
        out = []
        k = _ceil_int(r)
        for dz in range(-k, k + 1):
            if abs(dz) < r:
                out.append(z_to_nat(z + dz))
        if len(out) > cap:
            raise NotUncrowdedError("ball exceeds cap", center=a, radius=r)
        return sorted(out)


def _ceil_int(r) -> int:
    f = Fraction(r)
    return -((-f.numerator) // f.denominator)


def _floor_int(r) -> int:
    f = Fraction(r)
    return f.numerator // f.denominator


def _floor_strict(r) -> int:
    """Largest integer strictly below r."""
    f = Fraction(r)
    return (f.numerator - 1) // f.denominator


def _ceil_strict(r) -> int:
    """Smallest integer strictly above r."""
    return -_floor_strict(-Fraction(r))


class SqrtMetric(GeneralizedMetric):
    """Points n stand for sqrt(n) on the real line; comparison-only."""

    key = "sqrt"
    value_class = "comparison-only"
    all_finite = True

    def dist(self, a, b):
        raise UnsupportedMetricError(
            "sqrt metric is comparison-only; use dist_cmp")

    def dist_cmp(self, a, b, r):
        r = Fraction(r)
        if a == b:
            return _cmp(Fraction(0), r)
        if r < 0:
            return 1
        if r == 0:
            return 1
        # |sqrt(a) - sqrt(b)| vs r  <=>  (a + b - r^2) vs 2 sqrt(ab)
        lhs = Fraction(a) + b - r * r
        if lhs < 0:
            return -1
        return _cmp(lhs * lhs, 4 * Fraction(a) * b)

    def ball(self, a, r, cap=BALL_CAP):
        r = Fraction(r)
        if r <= 0:
            return []
        out = [a]
        m = a - 1
        while m >= 0 and self.dist_cmp(a, m, r) < 0:
            out.append(m)
            m -= 1
        m = a + 1
        while self.dist_cmp(a, m, r) < 0:
            out.append(m)
            m += 1
            if len(out) > cap:
                raise NotUncrowdedError("ball exceeds cap", center=a, radius=r)
        if len(out) > cap:
            raise NotUncrowdedError("ball exceeds cap", center=a, radius=r)
        return sorted(out)


class UltraBase2(GeneralizedMetric):
    """d(a, b) is the position (from 1) of the highest differing binary digit."""

    key = "ultra-base2"
    all_finite = True

    def __init__(self):
        self.uniform_bound = lambda r: 2 ** max(0, _floor_strict(r))

    def dist(self, a, b):
        if a == b:
            return 0
        return (a ^ b).bit_length()

    def ball(self, a, r, cap=BALL_CAP):
        k = _floor_strict(r)
        if k < 0:
            return []
        size = 2 ** k
        if size > cap:
            raise NotUncrowdedError("ball exceeds cap", center=a, radius=r)
        base = a - (a % size)
        return list(range(base, base + size))


class PartitionMetric(GeneralizedMetric):
    """Distance 1 inside a block, INF across blocks."""

    def __init__(self, A: Partition):
        if A.profile.kind == "infinite-block":
            raise UnsupportedMetricError(
                "partition metric needs finite blocks (balls must be finite)")
        self.partition = A
        self.key = f"partition@{A.key}"
        if A.profile.kind == "bounded":
            n = A.profile.n
            self.uniform_bound = lambda r, n=n: 1 if r <= 1 else n

    def dist(self, a, b):
        if a == b:
            return 0
        return 1 if self.partition.block_of(a) == self.partition.block_of(b) else INF

    def ball(self, a, r, cap=BALL_CAP):
        if r <= 0:
            return []
        if r <= 1:
            return [a]
        members = self.partition.block_members(self.partition.block_of(a))
        if len(members) > cap:
            raise NotUncrowdedError("ball exceeds cap", center=a, radius=r)
        return list(members)


class DiscreteInfinite(GeneralizedMetric):
    """Distinct points all at distance INF; every finite ball is a singleton."""

    key = "discrete"
    discrete_infinite = True

    def __init__(self):
        self.uniform_bound = lambda r: 1

    def dist(self, a, b):
        return 0 if a == b else INF

    def ball(self, a, r, cap=BALL_CAP):
        return [a] if r > 0 else []


class UniformHalf(GeneralizedMetric):
    """Distinct points all at distance 1/2: the unit ball is infinite."""

    key = "uniform-half"
    all_finite = True

    def dist(self, a, b):
        return Fraction(0) if a == b else Fraction(1, 2)

    def ball(self, a, r, cap=BALL_CAP):
        if r <= 0:
            return []
        if r <= Fraction(1, 2):
            return [a]
        raise NotUncrowdedError("unit ball is infinite", center=a, radius=r)


class CayleyZ2(GeneralizedMetric):
    """Path metric on the grid Z^2; points coded by a fixed pairing."""

    key = "cayley-z2"
    all_finite = True

    def __init__(self):
        def bound(r):
            k = max(0, _ceil_int(r) - 1)
            return 2 * k * k + 2 * k + 1

        self.uniform_bound = bound

    @staticmethod
    def decode(m: int) -> Tuple[int, int]:
        w = (math.isqrt(8 * m + 1) - 1) // 2
        while (w + 1) * (w + 2) // 2 <= m:
            w += 1
        while w * (w + 1) // 2 > m:
            w -= 1
        v = m - w * (w + 1) // 2
        u = w - v
        return nat_to_z(u), nat_to_z(v)

    @staticmethod
    def encode(x: int, y: int) -> int:
        u, v = z_to_nat(x), z_to_nat(y)
        return (u + v) * (u + v + 1) // 2 + v

    def dist(self, a, b):
        xa, ya = self.decode(a)
        xb, yb = self.decode(b)
        return abs(xa - xb) + abs(ya - yb)

    def ball(self, a, r, cap=BALL_CAP):
        x, y = self.decode(a)
        k = max(0, _ceil_int(r) - 1)
        out = []
        for dx in range(-k, k + 1):
            rem = k - abs(dx)
            for dy in range(-rem, rem + 1):
                if abs(dx) + abs(dy) < r:
                    out.append(self.encode(x + dx, y + dy))
        if len(out) > cap:
            raise NotUncrowdedError("ball exceeds cap", center=a, radius=r)
        return sorted(out)


class CayleyF2(GeneralizedMetric):
    """Word metric on the free group on two generators.

    Points are reduced words enumerated by length then lexicographically over
    the alphabet a, A, b, B (capital = inverse).
    """

    key = "cayley-f2"
    all_finite = True
    _letters = "aAbB"
    _inv = {"a": "A", "A": "a", "b": "B", "B": "b"}

    def __init__(self):
        def bound(r):
            k = max(0, _ceil_int(r) - 1)
            return 2 * 3 ** k - 1 if k > 0 else 1

        self.uniform_bound = bound

    @classmethod
    def index_to_word(cls, m: int) -> str:
        if m == 0:
            return ""
        length = 1
        offset = 1
        count = 4
        while m >= offset + count:
            offset += count
            count *= 3
            length += 1
        rank = m - offset
        first = cls._letters[rank // 3 ** (length - 1)]
        word = first
        rank %= 3 ** (length - 1)
        for pos in range(length - 1):
            allowed = [c for c in cls._letters if c != cls._inv[word[-1]]]
            step = 3 ** (length - 2 - pos)
            word += allowed[rank // step]
            rank %= step
        return word

    @classmethod
    def word_to_index(cls, w: str) -> int:
        if not w:
            return 0
        offset = 1
        count = 4
        for _ in range(len(w) - 1):
            offset += count
            count *= 3
        rank = cls._letters.index(w[0]) * 3 ** (len(w) - 1)
        for pos in range(1, len(w)):
            allowed = [c for c in cls._letters if c != cls._inv[w[pos - 1]]]
            rank += allowed.index(w[pos]) * 3 ** (len(w) - 1 - pos)
        return offset + rank

    @classmethod
    def reduce(cls, w: str) -> str:
        out: list = []
        for c in w:
            if out and out[-1] == cls._inv[c]:
                out.pop()
            else:
                out.append(c)
        return "".join(out)

    @classmethod
    def invert(cls, w: str) -> str:
        return "".join(cls._inv[c] for c in reversed(w))

    def dist(self, a, b):
        wa = self.index_to_word(a)
        wb = self.index_to_word(b)
        return len(self.reduce(self.invert(wa) + wb))

    def ball(self, a, r, cap=BALL_CAP):
        k = max(0, _ceil_int(r) - 1)
        w = self.index_to_word(a)
        out = []
        frontier = [""]
        for _ in range(k + 1):
            next_frontier = []
            for x in frontier:
                if len(x) < r:
                    out.append(self.word_to_index(self.reduce(w + x)))
                if len(x) < k:
                    allowed = self._letters if not x else [
                        c for c in self._letters if c != self._inv[x[-1]]]
                    next_frontier.extend(x + c for c in allowed)
            frontier = next_frontier
        if len(out) > cap:
            raise NotUncrowdedError("ball exceeds cap", center=a, radius=r)
        return sorted(set(out))


def metric_from_partition(A: Partition) -> PartitionMetric:
    return PartitionMetric(A)


# --------------------------------------------------------------------------
# Refinement: shortest alternating paths mixing base-metric segments with
# unit-cost moves by the permutations of U.


@dataclass
class BudgetedDistance:
    kind: str  # "exact" | "atleast"
    value: Distance

    def lower(self) -> Distance:
        return self.value

    def upper(self) -> Distance:
        return self.value if self.kind == "exact" else INF


class RefinedMetric(GeneralizedMetric):
    def __init__(self, base: GeneralizedMetric, U: Sequence[Permutation],
                 default_radius: Fraction = Fraction(8), verify_win: int = 64):
        if base.value_class != "rational":
            raise UnsupportedMetricError(
                "refinement needs a rational-valued base metric")
        for u in U:
            rep = verify_window(u, verify_win)
            if not rep.ok:
                raise PreconditionError(
                    f"refinement input fails verify_window: {rep.failure}")
        self.base = base
        self.U = list(U)
        self._moves = []
        for u in self.U:
            self._moves.append(u)
            self._moves.append(u.inverse())
        self.default_radius = Fraction(default_radius)
        self.key = f"refine({base.key};|U|={len(self.U)})"
        self.all_finite = base.all_finite
        self._neighbor_cache: dict = {}
        if base.uniform_bound is not None:
            nmoves = len(self._moves)
            base_bound = base.uniform_bound

            def bound(r, nmoves=nmoves, base_bound=base_bound):
                total = 0
                n = 0
                while n < r:  # each unit-cost move contributes 1 to the sum
                    total += base_bound(r) ** (n + 1) * max(1, nmoves) ** n
                    n += 1
                return total

            self.uniform_bound = bound

    def _neighbors(self, x: int, radius: Fraction, cap: int) -> list:
        """Weighted edges out of x, cached per (point, radius).

        The base ball is taken at the full radius: surplus neighbors relax to
        costs past the budget and get pruned, so the answer is unchanged.
        """
        key = (x, radius)
        if key not in self._neighbor_cache:
            edges = [(y, self.base.dist(x, y))
                     for y in self.base.ball(x, radius, cap=cap)]
            edges.extend((u.forward(x), 1) for u in self._moves)
            self._neighbor_cache[key] = edges
        return self._neighbor_cache[key]

    def _search(self, start: int, radius: Fraction, cap: int = BALL_CAP) -> dict:
        radius = Fraction(radius)
        dist = {start: Fraction(0)}
        settled: dict = {}
        heap = [(Fraction(0), start)]
        while heap:
            v, x = heapq.heappop(heap)
            if x in settled:
                continue
            if v >= radius:
                break
            settled[x] = v
            if len(settled) > cap:
                raise NotUncrowdedError(
                    "refined ball exceeds cap", center=start, radius=radius)
            for y, step in self._neighbors(x, radius, cap):
                w = v + step
                if w < radius and (y not in dist or w < dist[y]):
                    dist[y] = w
                    heapq.heappush(heap, (w, y))
        return settled

    def dist_budgeted(self, a: int, b: int, radius: Fraction) -> BudgetedDistance:
        radius = Fraction(radius)
        if a == b:
            return BudgetedDistance("exact", Fraction(0))
        settled = self._search(a, radius)
        if b in settled:
            return BudgetedDistance("exact", settled[b])
        return BudgetedDistance("atleast", radius)

    def dist(self, a, b):
        base_d = self.base.dist(a, b)
        if is_finite(base_d):
            return self.dist_budgeted(a, b, Fraction(base_d) + 1).value
        res = self.dist_budgeted(a, b, self.default_radius)
        if res.kind == "exact":
            return res.value
        raise UnsupportedMetricError(
            f"distance exceeds the search radius {self.default_radius}; "
            f"use dist_budgeted")

    def ball(self, a, r, cap=BALL_CAP):
        return sorted(self._search(a, Fraction(r), cap=cap))


def refine_metric(d: GeneralizedMetric, U: Sequence[Permutation],
                  default_radius: Fraction = Fraction(8)) -> RefinedMetric:
    return RefinedMetric(d, U, default_radius=default_radius)


# --------------------------------------------------------------------------
# Norms and boundedness.


@dataclass
class NormReport:
    lower_bound: Distance
    certificate: str            # "finite" | "infinite" | "unknown"
    bound: Optional[Distance] = None
    witness_pairs: Optional[list] = None

    @property
    def certified_finite(self):
        return self.certificate == "finite"

    @property
    def certified_infinite(self):
        return self.certificate == "infinite"


def _support_norm(g: Permutation, d: GeneralizedMetric) -> Distance:
    """Exact norm of a certified finite-support permutation."""
    best: Distance = 0
    for a in range(g.support_bound or 0):
        b = g.forward(a)
        if b == a:
            continue
        v = d.dist(a, b)
        if v > best:
            best = v
    return best


def _certified_bound(g: Permutation, d: GeneralizedMetric) -> Optional[Distance]:
    if d.key in g.displacement_bounds:
        return g.displacement_bounds[d.key]
    if g.support_bound is not None:
        if d.value_class != "rational":
            return None
        return _support_norm(g, d)
    if isinstance(g, WordPermutation):
        parts = [_certified_bound(f, d) for f in g.factors]
        if all(p is not None for p in parts):
            return sum(parts, 0)
    return None


def _lower_bound(g: Permutation, d: GeneralizedMetric, window: int) -> Distance:
    if d.value_class == "rational":
        best: Distance = 0
        for a in range(window):
            v = d.dist(a, g.forward(a))
            if v > best:
                best = v
                if isinstance(best, _Infinity):
                    break
        return best
    # comparison-only: the largest integer threshold some probed pair meets
    best_t = 0
    for a in range(window):
        b = g.forward(a)
        if b == a:
            continue
        t = best_t
        while d.dist_cmp(a, b, Fraction(t + 1)) >= 0 and t < window:
            t += 1
        best_t = max(best_t, t)
    return best_t


def norm(g: Permutation, d: GeneralizedMetric, window: int = 256) -> NormReport:
    lower = _lower_bound(g, d, window)
    witness = g.growth_witnesses.get(d.key)
    if witness is not None:
        pairs = []
        for j in range(1, min(window, 16) + 1):
            a, b = witness(j)
            if d.dist_cmp(a, b, Fraction(j)) < 0:
                raise PreconditionError(
                    f"growth witness pair {j} is closer than {j}")
            pairs.append((a, b))
        return NormReport(max(lower, len(pairs)), "infinite",
                          witness_pairs=pairs)
    bound = _certified_bound(g, d)
    if bound is not None:
        return NormReport(lower, "finite", bound=max(bound, lower))
    return NormReport(lower, "unknown")


@dataclass
class ContainsReport:
    answer: str  # "yes" | "no" | "unknown"
    report: NormReport


def fn_contains(g: Permutation, d: GeneralizedMetric, window: int = 256) -> ContainsReport:
    rep = norm(g, d, window)
    if rep.certified_finite:
        return ContainsReport("yes", rep)
    if rep.certified_infinite:
        return ContainsReport("no", rep)
    return ContainsReport("unknown", rep)


# --------------------------------------------------------------------------
# Unbounded-element witnesses.


def unbounded_witness(d: GeneralizedMetric, sigma: Iterable[int], J: int,
                      scan_cap: int = 100_000) -> FiniteSupportPermutation:
    """Swap pairs (a_j, b_j), j = 1..J, drawn from sigma with d(a_j, b_j) >= j.

    a_j is the first unused point of sigma; b_j the first unused point of
    sigma outside the open ball B(a_j, j).  All chosen points lie in sigma,
    so the witness preserves any block containing sigma.
    """
    points = []
    it = iter(sigma)
    used: set = set()
    mapping: dict = {}

    def pull(n):
        while len(points) < n:
            try:
                points.append(next(it))
            except StopIteration:
                raise InsufficientSetError(
                    f"point enumeration exhausted after {len(points)} points")
            if len(points) > scan_cap:
                raise InsufficientSetError("scan cap exceeded")

    pos = 0
    for j in range(1, J + 1):
        a = None
        while a is None:
            pull(pos + 1)
            cand = points[pos]
            pos += 1
            if cand not in used:
                a = cand
        used.add(a)
        b = None
        i = 0
        while b is None:
            pull(i + 1)
            cand = points[i]
            i += 1
            if cand in used or cand == a:
                continue
            if d.dist_cmp(a, cand, Fraction(j)) >= 0:
                b = cand
            if i > scan_cap:
                raise InsufficientSetError(
                    f"no point at distance >= {j} from {a} within the scanned "
                    f"prefix of sigma")
        used.add(b)
        mapping[a] = b
        mapping[b] = a
    return FiniteSupportPermutation(mapping)


def unbounded_witness_in_stabilizer(d: GeneralizedMetric, A: Partition,
                                    J: int, scan_cap: int = 100_000
                                    ) -> FiniteSupportPermutation:
    """A block-preserving permutation of unbounded norm under d.

    Each pair (a_j, b_j) is drawn from a single block of A whose diameter
    under d exceeds j, so the swaps preserve every block while the distances
    grow without bound.  Needs unbounded block sizes (and a metric whose
    within-block distances grow with block size, e.g. the standard metric
    over growing intervals).
    """
    mapping: dict = {}
    used: set = set()
    blocks = A.iter_blocks()
    for j in range(1, J + 1):
        found = False
        scanned = 0
        while not found:
            try:
                bid = next(blocks)
            except StopIteration:
                raise InsufficientSetError("partition ran out of blocks")
            scanned += 1
            if scanned > scan_cap:
                raise InsufficientSetError("scan cap exceeded")
            members = [m for m in A.block_members(bid) if m not in used]
            for a in members:
                far = [b for b in members
                       if b != a and d.dist_cmp(a, b, Fraction(j)) >= 0]
                if far:
                    b = far[0]
                    mapping[a] = b
                    mapping[b] = a
                    used.update((a, b))
                    found = True
                    break
    return FiniteSupportPermutation(mapping)


def unbounded_witness_rule(d: GeneralizedMetric, sigma_fn: Callable[[int], int],
                           prebuild: int = 16) -> RulePermutation:
    """A rule permutation swapping an endless family of certified-far pairs.

    ``sigma_fn(i)`` enumerates the ground set.  A single forward-only scan
    picks a_j as the next point and b_j as the next point at distance >= j;
    points skipped in between stay fixed forever, so membership is decidable.
    The permutation carries a growth witness for ``d``, letting norm()
    certify an infinite norm.
    """
    state = {"pos": 0, "partner": {}, "scanned": set(), "pairs": [],
             "last": None, "ascending": True}

    def pull():
        v = sigma_fn(state["pos"])
        state["pos"] += 1
        state["scanned"].add(v)
        if state["last"] is not None and v <= state["last"]:
            state["ascending"] = False
        state["last"] = v
        return v

    def extend(upto_j):
        while len(state["pairs"]) < upto_j:
            j = len(state["pairs"]) + 1
            a = pull()
            while True:
                cand = pull()
                if d.dist_cmp(a, cand, Fraction(j)) >= 0:
                    break
            state["partner"][a] = cand
            state["partner"][cand] = a
            state["pairs"].append((a, cand))

    extend(prebuild)

    def lookup(m):
        guard = 0
        while m not in state["partner"] and m not in state["scanned"]:
            if state["ascending"] and state["last"] is not None and state["last"] > m:
                return m  # the enumeration passed m without producing it
            extend(len(state["pairs"]) + 1)
            guard += 1
            if guard > 4096:
                raise NotUncrowdedError(
                    "witness scan cannot locate the queried point")
        return state["partner"].get(m, m)

    p = RulePermutation("unbounded-witness", lookup, lookup,
                        params={"metric": d.key})

    def witness(j):
        extend(j)
        return state["pairs"][j - 1]

    p.growth_witnesses[d.key] = witness
    return p


# --------------------------------------------------------------------------
# Ball-growth classification.


@dataclass
class MetricCaseReport:
    case: str        # "CaseI" | "CaseII" | "CaseIII" | "CaseIV" | "Unknown"
    evidence: dict


DEFAULT_RADII = (Fraction(1), Fraction(2), Fraction(4), Fraction(8))


def _probe_centers(count: int) -> List[int]:
    centers = list(range(min(count, max(16, count - 16))))
    k = 8
    while len(centers) < count and k <= 14:
        centers.append(2 ** k)
        centers.append(3 * 2 ** (k - 1))
        k += 1
    return sorted(set(centers))[:count]


def classify_metric(d: GeneralizedMetric, radii: Sequence[Fraction] = DEFAULT_RADII,
                    centers: int = 512, ball_cap: int = BALL_CAP) -> MetricCaseReport:
    """Sort a metric into the four ball-growth cases, at the stated budgets.

    CaseI: some probed ball exceeds the cap (not uncrowded, at budget).
    CaseII: balls finite but with sizes growing past every sampled bound.
    CaseIII: sizes bounded at budget, with nonsingleton balls persisting
             throughout the probe range for some radius.
    CaseIV: for each radius, nonsingleton balls are confined to a finite
            prefix of the probe range.
    """
    probe = _probe_centers(centers)
    evidence: dict = {"radii": [str(Fraction(r)) for r in radii],
                      "centers": len(probe), "center_list": list(probe),
                      "ball_cap": ball_cap, "per_radius": []}
    growth_detected = False
    persistent_nonsingleton = False
    confined = True
    for r in radii:
        cap_r = ball_cap
        if d.uniform_bound is not None:
            # a declared uniform bound certifies every ball finite; stretch
            # the cap to it so the budget cannot masquerade as crowding
            cap_r = max(ball_cap, d.uniform_bound(Fraction(r)))
        sizes = []
        for c in probe:
            try:
                try:
                    ball = d.ball(c, Fraction(r), cap=cap_r)
                except NotUncrowdedError:
                    # one stretched retry: a big finite ball is growth, not
                    # crowding; only a genuinely unbounded enumeration is CaseI
                    ball = d.ball(c, Fraction(r), cap=cap_r * 64)
                    evidence.setdefault("stretched", []).append(
                        {"center": c, "radius": str(Fraction(r))})
                if d.uniform_bound is not None and \
                        len(ball) > d.uniform_bound(Fraction(r)):
                    raise NotUncrowdedError(
                        "ball exceeds its declared uniform bound",
                        center=c, radius=r)
                sizes.append((c, len(ball)))
            except NotUncrowdedError:
                evidence["overflow"] = {"center": c, "radius": str(Fraction(r))}
                return MetricCaseReport("CaseI", evidence)
        records = []
        best = 0
        for c, s in sizes:
            if s > best:
                best = s
                records.append({"center": c, "size": s})
        nonsingle = [c for c, s in sizes if s > 1]
        stats = {
            "radius": str(Fraction(r)),
            "max_size": best,
            "size_records": records,
            "nonsingleton_count": len(nonsingle),
            "last_nonsingleton": nonsingle[-1] if nonsingle else None,
        }
        evidence["per_radius"].append(stats)
        top = probe[-1]
        if len(records) >= 4 and records[-1]["center"] > top // 2:
            growth_detected = True
        if nonsingle and nonsingle[-1] > (3 * top) // 4 and len(nonsingle) >= 16:
            persistent_nonsingleton = True
        if nonsingle and (nonsingle[-1] > top // 4 or len(nonsingle) > len(probe) // 2):
            confined = False
    if growth_detected:
        evidence["rule"] = "size records persist into the top of the probe range"
        return MetricCaseReport("CaseII", evidence)
    if persistent_nonsingleton:
        evidence["rule"] = "bounded sizes; nonsingleton balls persist"
        return MetricCaseReport("CaseIII", evidence)
    if confined:
        evidence["rule"] = "nonsingleton balls confined to a finite prefix"
        return MetricCaseReport("CaseIV", evidence)
    return MetricCaseReport("Unknown", evidence)


# --------------------------------------------------------------------------
# Net flow across cuts of the integers.


@dataclass
class FlowValue:
    per_cut: dict
    common_value: Optional[int]


def net_flow(f: Permutation, cuts: Iterable[int] = range(-4, 5),
             metric_key: str = "standard-z") -> FlowValue:
    """Upward minus downward crossers past each cut, in integer coordinates.

    Needs a certified displacement bound for the standard metric on the
    integers: only points within the bound of a cut can cross it.
    """
    bound = _certified_bound(f, StandardZ())
    if bound is None:
        raise NoCertificateError(
            "net_flow needs a certified standard-z displacement bound")
    b = _ceil_int(bound) if bound else 1
    per_cut = {}
    for c in cuts:
        up = down = 0
        for z in range(c - b, c + b):
            image = nat_to_z(f.forward(z_to_nat(z)))
            if z < c <= image:
                up += 1
            if image < c <= z:
                down += 1
        per_cut[c] = up - down
    values = set(per_cut.values())
    return FlowValue(per_cut, values.pop() if len(values) == 1 else None)


# --------------------------------------------------------------------------
# Factorization of bounded permutations of omega into two interval-local parts.


class _CrosserPairing(Permutation):
    """Exchanges upward and downward crossers at every second interval boundary.

    Intervals are [a_i, a_{i+1}) for a supplied breakpoint function; within
    each union a_{2i} <= x < a_{2i+2} the upward crossers at the middle
    boundary are paired with the downward crossers in increasing order and
    swapped; everything else is fixed.
    """

    form = "crosser-pairing"

    def __init__(self, f: Permutation, boundary: Callable[[int], int],
                 uniform_width: Optional[int] = None):
        super().__init__()
        self.f = f
        self.boundary = boundary
        self.uniform_width = uniform_width
        self._cache: dict = {}
        if f.support_bound is not None:
            self.support_bound = self._support_from(f)

    def _support_from(self, f):
        b = f.support_bound
        i = 0
        while self.boundary(2 * i) < b:
            i += 1
        return self.boundary(2 * i)

    def _pairing(self, i: int) -> dict:
        if i in self._cache:
            return self._cache[i]
        lo, mid, hi = self.boundary(2 * i), self.boundary(2 * i + 1), self.boundary(2 * i + 2)
        ups = [x for x in range(lo, mid) if self.f.forward(x) >= mid]
        downs = [x for x in range(mid, hi) if self.f.forward(x) < mid]
        if len(ups) != len(downs):
            raise PreconditionError(
                f"crossing counts differ at boundary {mid}: {len(ups)} up vs "
                f"{len(downs)} down (is the permutation bounded as certified?)")
        mapping = {}
        for a, b in zip(ups, downs):
            mapping[a] = b
            mapping[b] = a
        self._cache[i] = mapping
        return mapping

    def _interval_index(self, m: int) -> int:
        if self.uniform_width is not None:
            return m // (2 * self.uniform_width)
        i = 0
        while self.boundary(2 * (i + 1)) <= m:
            i += 1
        return i

    def _fwd(self, alpha):
        return self._pairing(self._interval_index(alpha)).get(alpha, alpha)

    _bwd = _fwd  # an involution

    def inverse(self):
        return self


def factor_fn_omega(f: Permutation, d: Optional[GeneralizedMetric] = None,
                    bound: Optional[int] = None) -> Tuple[Permutation, Permutation]:
    """Split a norm-certified permutation of omega into two interval-local parts.

    With ||f|| <= n and intervals S_i = [n i, n(i+1)), the first factor
    preserves every S_{2i} u S_{2i+1} and the second every S_{2i-1} u S_{2i},
    with product f.
    """
    if d is None:
        d = StandardOmega()
    if bound is None:
        rep = norm(f, d, window=max(16, (f.support_bound or 0)))
        if not rep.certified_finite:
            raise NoCertificateError("factor_fn_omega needs a certified finite norm")
        bound = _ceil_int(rep.bound)
    n = int(bound)
    if n == 0:
        return identity(), identity()
    b1 = _CrosserPairing(f, lambda i: n * i, uniform_width=n)
    b2 = WordPermutation([b1.inverse(), f])
    if b1.support_bound is not None and f.support_bound is not None:
        b2.support_bound = max(b1.support_bound, f.support_bound)
    return b1, b2


# --------------------------------------------------------------------------
# Metric spec strings.


def parse_metric(spec: str) -> GeneralizedMetric:
    s = spec.strip()
    if s.startswith("metric:"):
        s = s[len("metric:"):]
    if s == "standard-omega":
        return StandardOmega()
    if s == "standard-z":
        return StandardZ()
    if s == "sqrt":
        return SqrtMetric()
    if s == "ultra-base2":
        return UltraBase2()
    if s == "discrete":
        return DiscreteInfinite()
    if s == "uniform-half":
        return UniformHalf()
    if s == "cayley-z2":
        return CayleyZ2()
    if s == "cayley-f2":
        return CayleyF2()
    if s.startswith("partition@"):
        return PartitionMetric(parse_partition(s[len("partition@"):]))
    if s.startswith("refine(") and s.endswith(")"):
        inner = s[len("refine("):-1]
        parts = inner.split(";", 1)
        base = parse_metric(parts[0])
        perms: List[Permutation] = []
        if len(parts) > 1:
            u = parts[1].strip()
            if not u.startswith("U="):
                raise ParseError(f"expected U=... in {spec!r}")
            body = u[2:].strip()
            if not (body.startswith("[") and body.endswith("]")):
                raise ParseError(f"U needs [...] in {spec!r}")
            inner_list = body[1:-1].strip()
            if inner_list:
                from .perm import _split_top

                perms = [parse_perm(p) for p in _split_top(inner_list, ",")]
        return refine_metric(base, perms)
    raise ParseError(f"unknown metric {spec!r}")
