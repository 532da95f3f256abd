"""Constructive witnesses for the pairwise equivalences of stabilizer groups.

Every "choose any" step is made deterministic: blocks are consumed in
increasing id order, packing prefers the smallest sufficient block, chains
are ordered by point value, and the one free bit in the commutator solve is
an explicit anchor.  Constructions record exactly what was verified.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import (
    EvaluationBudgetError,
    NoCertificateError,
    PreconditionError,
    ProfileViolationError,
)
from .partitions import (
    BoundedBy,
    Partition,
    a0,
    classify_partition,
    conjugator,
    stabilizer_membership,
    z_block_id,
)
from .perm import (
    FiniteSupportPermutation,
    Permutation,
    WordPermutation,
    nat_to_z,
    z_to_nat,
)


class _Flip(Permutation):
    """The inverse of an underlying permutation, sharing its lazy state."""

    form = "inverse"

    def __init__(self, base: Permutation):
        super().__init__()
        self.base = base
        self.support_bound = base.support_bound

    def _fwd(self, alpha):
        return self.base._bwd(alpha)

    def _bwd(self, alpha):
        return self.base._fwd(alpha)

    def inverse(self):
        return self.base


# --------------------------------------------------------------------------
# Packing one partition's blocks inside block images of another.


class _PackerPermutation(Permutation):
    """Carries A-blocks onto a chosen half of B's blocks, lazily.

    Round k packs the k-th target block (the B-blocks of the chosen index
    parity) inside the image of a sufficiently large fresh A-block; one
    additional eligible A-block per round is released whole to the leftover
    pool, which is drained onto the points of the other half of B.  That
    keeps the leftover supply infinite, so the map is onto.
    """

    form = "packer"

    def __init__(self, A: Partition, B: Partition, side: int,
                 round_cap: int = 50_000):
        super().__init__()
        self.A = A
        self.B = B
        self.side = side
        self.round_cap = round_cap
        self._fmap: dict = {}
        self._bmap: dict = {}
        self._a_blocks = A.iter_blocks()
        self._b_blocks = B.iter_blocks()
        self._b_index = 0
        self._pending_targets: list = []
        self._fill_queue: list = []   # points of the other half, in order
        self._leftovers: list = []
        self._rounds = 0
        self.packing: list = []

    def _pull_b(self) -> None:
        b = next(self._b_blocks)
        if self._b_index % 2 == self.side:
            self._pending_targets.append(b)
        else:
            self._fill_queue.extend(self.B.block_members(b))
        self._b_index += 1

    def _next_target_block(self) -> int:
        while not self._pending_targets:
            self._pull_b()
        return self._pending_targets.pop(0)

    def _next_eligible_a(self, need: int) -> list:
        scanned = 0
        while True:
            a = next(self._a_blocks)
            members = self.A.block_members(a)
            if len(members) >= need:
                return members
            self._leftovers.extend(members)
            scanned += 1
            if scanned > self.round_cap:
                raise ProfileViolationError(
                    f"{self.A.key}: no block of size >= {need} within "
                    f"{scanned} blocks despite an unbounded-sizes profile")

    def _round(self) -> None:
        self._rounds += 1
        if self._rounds > self.round_cap:
            raise EvaluationBudgetError("packer round cap exceeded")
        target = self._next_target_block()
        tgt_members = self.B.block_members(target)
        sacrifice = self._next_eligible_a(len(tgt_members))
        self._leftovers.extend(sacrifice)
        src_members = self._next_eligible_a(len(tgt_members))
        for s, t in zip(src_members, tgt_members):
            self._fmap[s] = t
            self._bmap[t] = s
        self._leftovers.extend(src_members[len(tgt_members):])
        while len(self._fill_queue) < len(self._leftovers):
            self._pull_b()
        for s in self._leftovers:
            t = self._fill_queue.pop(0)
            self._fmap[s] = t
            self._bmap[t] = s
        self._leftovers = []
        self.packing.append({"target": target,
                             "source": self.A.block_of(src_members[0])})

    def ensure_rounds(self, k: int) -> None:
        while self._rounds < k:
            self._round()

    def _fwd(self, alpha):
        while alpha not in self._fmap:
            self._round()
        return self._fmap[alpha]

    def _bwd(self, alpha):
        while alpha not in self._bmap:
            self._round()
        return self._bmap[alpha]

    def inverse(self):
        return _Flip(self)


@dataclass
class PWitness:
    f: Permutation
    g: Permutation
    b1_blocks: List[int]
    b2_blocks: List[int]
    packing_f: list
    packing_g: list
    A_key: str
    B_key: str


def p_equiv_witness(A: Partition, B: Partition, depth: int) -> PWitness:
    """Two permutations whose block images absorb the two halves of B.

    B is split into its even-indexed blocks (B1) and odd-indexed blocks (B2);
    f packs every probed B1-block inside the image of one A-block and g does
    the same for B2.  Needs unbounded finite block sizes on both sides.
    """
    for part in (A, B):
        tag = classify_partition(part)
        if tag.tag != "InP":
            raise ProfileViolationError(
                f"{part.key} is not in the unbounded-finite class: {tag.reason}")
    f = _PackerPermutation(A, B, side=0)
    g = _PackerPermutation(A, B, side=1)
    f.ensure_rounds(depth)
    g.ensure_rounds(depth)
    it = B.iter_blocks()
    b_ids = [next(it) for _ in range(2 * depth)]
    return PWitness(f=f, g=g,
                    b1_blocks=b_ids[0::2], b2_blocks=b_ids[1::2],
                    packing_f=list(f.packing), packing_g=list(g.packing),
                    A_key=A.key, B_key=B.key)


class _HalfRestriction(Permutation):
    """Agrees with h on the blocks of one parity of B, fixes the rest."""

    form = "half-restriction"

    def __init__(self, h: Permutation, B: Partition, side: int):
        super().__init__()
        self.h = h
        self.B = B
        self.side = side
        self._parity: dict = {}
        self._cursor = B.iter_blocks()
        self._count = 0
        if h.support_bound is not None:
            self.support_bound = h.support_bound

    def _mine(self, block_id: int) -> bool:
        while block_id not in self._parity:
            b = next(self._cursor)
            self._parity[b] = self._count % 2
            self._count += 1
        return self._parity[block_id] == self.side

    def _fwd(self, alpha):
        return self.h.forward(alpha) if self._mine(self.B.block_of(alpha)) else alpha

    def _bwd(self, alpha):
        return self.h.backward(alpha) if self._mine(self.B.block_of(alpha)) else alpha

    def inverse(self):
        return _HalfRestriction(self.h.inverse(), self.B, self.side)


def factor_through(h: Permutation, w: PWitness, B: Partition,
                   window: int = 1000) -> Tuple[Permutation, Permutation]:
    """Split h (certified to preserve B's blocks) as p . q where p moves only
    points of B1-blocks and q only points of B2-blocks."""
    membership = stabilizer_membership(h, B, window)
    if membership.answer != "yes":
        raise NoCertificateError(
            f"factor_through needs a block certificate for {B.key}: "
            f"{membership.basis}")
    return _HalfRestriction(h, B, side=0), _HalfRestriction(h, B, side=1)


# --------------------------------------------------------------------------
# The even-subgroup shift.


class EvenShiftWitness(Permutation):
    """Shifts the marked points by two: marked(i) -> marked(i+2), i over Z.

    The marked points at indices 4i..4i+3 are the four least elements of the
    i-th nonsingleton block; negative indices walk the singleton points in
    increasing order.  Unmarked points are fixed.  Conjugation by this map
    shifts the coordinates of the pairs {marked(2j), marked(2j+1)} by one.
    """

    form = "even-shift"

    def __init__(self, A: Partition, scan_cap: int = 200_000):
        super().__init__()
        self.A = A
        self.scan_cap = scan_cap
        self._nonsingleton_ids: list = []
        self._singleton_pts: list = []
        self._iter = A.iter_blocks()
        self._max_block_seen = -1
        self._index_of: dict = {}

    def _extend(self) -> None:
        b = next(self._iter)
        self._max_block_seen = max(self._max_block_seen, b)
        members = self.A.block_members(b)
        if len(members) == 1:
            k = len(self._singleton_pts)
            self._singleton_pts.append(members[0])
            self._index_of[members[0]] = -(k + 1)
        else:
            if len(members) < 4:
                raise ProfileViolationError(
                    f"{self.A.key}: nonsingleton block {b} has fewer than 4 points")
            i = len(self._nonsingleton_ids)
            self._nonsingleton_ids.append(b)
            for j, pt in enumerate(members[:4]):
                self._index_of[pt] = 4 * i + j

    def marked(self, i: int) -> int:
        if i >= 0:
            block_idx, off = divmod(i, 4)
            while len(self._nonsingleton_ids) <= block_idx:
                self._extend()
            return self.A.block_members(self._nonsingleton_ids[block_idx])[off]
        k = -i - 1
        while len(self._singleton_pts) <= k:
            self._extend()
        return self._singleton_pts[k]

    def _index(self, m: int) -> Optional[int]:
        # blocks arrive in increasing id order: once the cursor passes m's
        # block id, m is marked iff it was recorded
        target = self.A.block_of(m)
        guard = 0
        while self._max_block_seen < target:
            self._extend()
            guard += 1
            if guard > self.scan_cap:
                raise EvaluationBudgetError("even-shift scan cap exceeded")
        return self._index_of.get(m)

    def _fwd(self, alpha):
        i = self._index(alpha)
        return alpha if i is None else self.marked(i + 2)

    def _bwd(self, alpha):
        i = self._index(alpha)
        return alpha if i is None else self.marked(i - 2)

    def inverse(self):
        return _Flip(self)


def even_shift_witness(A: Partition) -> EvenShiftWitness:
    return EvenShiftWitness(A)


def decompose_z2(bits: Sequence[int]) -> Tuple[List[int], List[int]]:
    """Split a bit string a into x + y with x_{2i} = x_{2i+1}, y_0 = 0 and
    y_{2i+1} = y_{2i+2}, by the forced left-to-right recurrence."""
    if len(bits) % 2 != 0:
        raise PreconditionError("prefix must have even length")
    x: List[int] = []
    y: List[int] = []
    for i, a in enumerate(bits):
        a &= 1
        if i == 0:
            y.append(0)
            x.append(a)
        elif i % 2 == 1:
            x.append(x[i - 1])
            y.append(a ^ x[i])
        else:
            y.append(y[i - 1])
            x.append(a ^ y[i])
    return x, y


# --------------------------------------------------------------------------
# Bounded-block-size witnesses: chains, alternating edge colors, factorization.


class _EdgeColoring:
    """Chain each block in increasing point order; color edges alternately.

    The terminal edge color is forced to alternate red, green, red, ... over
    the nonsingleton blocks in id order, so both terminal colors occur
    infinitely often whatever the block sizes do.
    """

    def __init__(self, A: Partition, scan_cap: int = 500_000):
        self.A = A
        self.scan_cap = scan_cap
        self._cursor = A.iter_blocks()
        self._max_seen = -1
        self._rank = 0
        self._edges: dict = {}

    def _extend(self) -> None:
        b = next(self._cursor)
        self._max_seen = max(self._max_seen, b)
        members = self.A.block_members(b)
        if len(members) < 2:
            self._edges[b] = []
            return
        desired = "red" if self._rank % 2 == 0 else "green"
        self._rank += 1
        m = len(members)
        start = desired if (m - 2) % 2 == 0 else (
            "green" if desired == "red" else "red")
        colors = ("red", "green")
        c = colors.index(start)
        edges = []
        for i in range(1, m):
            edges.append((members[i - 1], members[i], colors[c]))
            c ^= 1
        self._edges[b] = edges

    def edges_of(self, block_id: int) -> list:
        guard = 0
        while block_id not in self._edges:
            if self._max_seen >= block_id:
                raise PreconditionError(f"{block_id} is not a block id of {self.A.key}")
            self._extend()
            guard += 1
            if guard > self.scan_cap:
                raise EvaluationBudgetError("coloring scan cap exceeded")
        return self._edges[block_id]

    def matching_partition(self, color: str) -> Partition:
        def pair_of(m: int):
            for lo, hi, c in self.edges_of(self.A.block_of(m)):
                if c == color and m in (lo, hi):
                    return lo, hi
            return None

        def block_of(m: int) -> int:
            pair = pair_of(m)
            return m if pair is None else pair[0]

        def members(b: int) -> list:
            pair = pair_of(b)
            if pair is None or pair[0] != b:
                return [b]
            return [pair[0], pair[1]]

        return Partition(f"{color}@{self.A.key}", block_of, members,
                         BoundedBy(2, "infinite"))


@dataclass
class QWitness:
    f: Permutation
    g: Permutation
    red: Partition
    green: Partition
    coloring: _EdgeColoring
    A: Partition
    bound: int

    def factorize(self, h: Permutation, window: int = 1000):
        return _q_factorize(self, h, window)


def q_equiv_witness(A: Partition, depth: int = 8) -> QWitness:
    """Chain coloring for a bounded partition with infinitely many pairs.

    Red edges and green edges each form partial matchings isomorphic to the
    canonical pairs-and-singletons layout; the returned conjugators carry that
    layout onto each matching, and ``factorize`` writes any block permutation
    as a word of single-edge transpositions, each a member of one of the two
    conjugated stabilizers.
    """
    tag = classify_partition(A)
    if tag.tag != "InQ":
        raise ProfileViolationError(
            f"{A.key} is not in the bounded class: {tag.reason}")
    coloring = _EdgeColoring(A)
    red = coloring.matching_partition("red")
    green = coloring.matching_partition("green")
    f = conjugator(a0(), red, depth=depth)
    g = conjugator(a0(), green, depth=depth)
    return QWitness(f=f, g=g, red=red, green=green, coloring=coloring,
                    A=A, bound=A.profile.n)


def _adjacent_word(members: List[int], images: List[int]) -> List[int]:
    """Edge positions (1-based chain edges) realizing members -> images as a
    left-to-right product of adjacent transpositions; bubble-sort length."""
    m = len(members)
    pos_image = [members.index(x) for x in images]
    # pos_image[i] = final position of the point starting at position i
    arr = list(pos_image)
    swaps: List[int] = []
    changed = True
    while changed:
        changed = False
        for i in range(m - 1):
            if arr[i] > arr[i + 1]:
                arr[i], arr[i + 1] = arr[i + 1], arr[i]
                swaps.append(i)
                changed = True
    assert len(swaps) <= m * (m - 1) // 2
    return swaps


def _q_factorize(w: QWitness, h: Permutation, window: int):
    """Write h as single-edge factors over the blocks meeting the window.

    Returns (factors, product_word) where factors is a list of
    (transposition, color) pairs whose left-to-right product agrees with h on
    every fully processed block.
    """
    factors: List[Tuple[FiniteSupportPermutation, str]] = []
    for b in w.A.blocks_within(window):
        members = w.A.block_members(b)
        if len(members) < 2:
            if h.forward(members[0]) != members[0]:
                raise NoCertificateError(
                    f"h moves the singleton block {b}")
            continue
        images = [h.forward(x) for x in members]
        if sorted(images) != members:
            raise NoCertificateError(f"h does not preserve block {b}")
        if images == list(members):
            continue
        edges = w.coloring.edges_of(b)
        for pos in _adjacent_word(members, images):
            lo, hi, color = edges[pos]
            factors.append((FiniteSupportPermutation({lo: hi, hi: lo}), color))
    product = WordPermutation([f for f, _ in factors])
    return factors, product


# --------------------------------------------------------------------------
# The two-block commutator solve.
#
# Two-point blocks {3k, 3k+1} are indexed by the integers through k; the
# points 3k+2 lie outside every block.


class _BitActivated(Permutation):
    """Transposes the integer-indexed two-point block i exactly when bit(i)."""

    form = "bit-blocks"

    def __init__(self, bit: Callable[[int], int]):
        super().__init__()
        self.bit = bit

    def _step(self, alpha):
        b = alpha % 3
        if b == 2:
            return alpha
        i = nat_to_z(alpha // 3)
        if not self.bit(i):
            return alpha
        return alpha + 1 if b == 0 else alpha - 1

    _fwd = _step
    _bwd = _step

    def inverse(self):
        return self


class _BlockShift(Permutation):
    """Sends block i to block i+1 in index order, fixing the out points."""

    form = "block-shift"

    def __init__(self, step: int = 1):
        super().__init__()
        self.step = step

    def _fwd(self, alpha):
        if alpha % 3 == 2:
            return alpha
        return 3 * z_to_nat(nat_to_z(alpha // 3) + self.step) + alpha % 3

    def _bwd(self, alpha):
        if alpha % 3 == 2:
            return alpha
        return 3 * z_to_nat(nat_to_z(alpha // 3) - self.step) + alpha % 3

    def inverse(self):
        return _BlockShift(-self.step)


@dataclass
class CommutatorSolution:
    f_bits: Dict[int, int]
    f: Permutation
    h: Permutation
    commutator: Permutation
    lo: int
    hi: int
    anchor: int


def commutator_solve(target: Dict[int, int], anchor: int = 0) -> CommutatorSolution:
    """Choose which two-point blocks f transposes so that the commutator
    h^-1 f^-1 h f (h the block shift) realizes the target pattern.

    The commutator acts on block i exactly when f acts on exactly one of the
    blocks i-1 and i, so the activation bits satisfy c_i = f_{i-1} xor f_i
    and accumulate from the anchor, the value of f just left of the target
    range.  The two solutions differ by a global complement; the anchor
    selects one.  Since h fixes every point outside the blocks, so does the
    commutator.
    """
    if not target:
        raise PreconditionError("empty target pattern")
    lo, hi = min(target), max(target)
    if set(target) != set(range(lo, hi + 1)):
        raise PreconditionError("target indices must form a contiguous range")
    bits: Dict[int, int] = {}
    prev = anchor & 1
    for i in range(lo, hi + 1):
        prev = prev ^ (target[i] & 1)
        bits[i] = prev

    def bit(i: int) -> int:
        if i < lo:
            return anchor & 1
        if i > hi:
            return bits[hi]
        return bits[i]

    f = _BitActivated(bit)
    h = _BlockShift()
    comm = WordPermutation([h.inverse(), f.inverse(), h, f])
    return CommutatorSolution(f_bits=bits, f=f, h=h, commutator=comm,
                              lo=lo, hi=hi, anchor=anchor & 1)


def commutator_action_on_block(sol: CommutatorSolution, i: int) -> int:
    """1 when the realized commutator transposes block i, 0 when it fixes it."""
    base = z_block_id(i)
    img = sol.commutator.forward(base)
    if img == base:
        return 0
    if img == base + 1:
        return 1
    raise AssertionError(f"commutator left block {i}: {base} -> {img}")


# --------------------------------------------------------------------------
# Finite-support machinery: three-cycles and the finite classes.


def three_cycle_extract(g: Permutation, s: Permutation) -> FiniteSupportPermutation:
    """The commutator s^-1 g^-1 s g, verified to be a three-cycle.

    Requires the supports to meet in exactly one point.
    """
    supp_g = set(g.moved_points())
    supp_s = set(s.moved_points())
    meet = supp_g & supp_s
    if len(meet) != 1:
        raise PreconditionError(
            f"supports must meet in exactly one point, got {sorted(meet)}")
    comm = WordPermutation([s.inverse(), g.inverse(), s, g])
    bound = max(supp_g | supp_s) + 1
    mapping = {a: comm.forward(a) for a in range(bound)
               if comm.forward(a) != a}
    result = FiniteSupportPermutation(mapping)
    cycs = result.cycles()
    if len(cycs) != 1 or len(cycs[0]) != 3:
        raise AssertionError(f"commutator is not a three-cycle: cycles {cycs}")
    return result


def sfinite_class(gens: Sequence[Permutation], cap: int = 400_000) -> str:
    """Which finite class the generated group falls in: "trivial",
    "even-finite" (nontrivial, all elements even), or "odd-finite".

    Generators must carry finite-support certificates; the group then lives
    inside the symmetric group on the support union and is enumerated by
    closure.
    """
    for g in gens:
        if g.support_bound is None:
            raise PreconditionError("generators must be certified finite-support")
    points = sorted({a for g in gens for a in g.moved_points()})
    if not points:
        return "trivial"
    idx = {a: i for i, a in enumerate(points)}
    tables = []
    for g in gens:
        images = [g.forward(a) for a in points]
        if any(b not in idx for b in images):
            raise PreconditionError(
                "generator moves a support point outside the union")
        tables.append(tuple(idx[b] for b in images))
    ident = tuple(range(len(points)))
    seen = {ident}
    frontier = [ident]
    while frontier:
        state = frontier.pop()
        for table in tables:
            new = tuple(table[s] for s in state)
            if new not in seen:
                if len(seen) >= cap:
                    raise EvaluationBudgetError("group closure exceeds the size cap")
                seen.add(new)
                frontier.append(new)
    if len(seen) == 1:
        return "trivial"

    def is_even(state: tuple) -> bool:
        visited = [False] * len(state)
        trans = 0
        for i in range(len(state)):
            if visited[i]:
                continue
            j = i
            length = 0
            while not visited[j]:
                visited[j] = True
                j = state[j]
                length += 1
            trans += length - 1
        return trans % 2 == 0

    return "even-finite" if all(is_even(s) for s in seen) else "odd-finite"
