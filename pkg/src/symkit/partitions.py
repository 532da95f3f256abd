"""Computable partitions of the naturals into blocks.

A partition is an oracle pair (block_of, block_members) plus a declared size
profile.  Profiles are declared by the constructor and spot-verified, never
inferred: whether the block sizes are really unbounded, or whether infinitely
many blocks are nonsingletons, cannot be decided from finitely many probes,
so the library records exactly what was checked.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Union

from .errors import NotIsomorphicError, ParseError, PreconditionError, ProfileViolationError
from .perm import Permutation, nat_to_z, z_to_nat


@dataclass(frozen=True)
class BoundedBy:
    n: int
    nonsingletons: Union[int, str]  # a count, or "infinite"

    kind = "bounded"


@dataclass(frozen=True)
class UnboundedFinite:
    kind = "unbounded-finite"


@dataclass(frozen=True)
class HasInfiniteBlock:
    block: int

    kind = "infinite-block"


Profile = Union[BoundedBy, UnboundedFinite, HasInfiniteBlock]


class Partition:
    """Blocks are identified by their least element."""

    def __init__(self, key: str, block_of: Callable[[int], int],
                 block_members: Callable[[int], List[int]], profile: Profile):
        self.key = key
        self._block_of = block_of
        self._block_members = block_members
        self.profile = profile
        self.certificate_samples: list = []

    def block_of(self, alpha: int) -> int:
        return self._block_of(alpha)

    def block_members(self, block_id: int) -> List[int]:
        return self._block_members(block_id)

    def blocks_within(self, window: int) -> List[int]:
        """Ids of the blocks meeting [0, window), in increasing order."""
        seen = []
        found = set()
        for a in range(window):
            b = self._block_of(a)
            if b not in found:
                found.add(b)
                seen.append(b)
        return sorted(seen)

    def iter_blocks(self):
        """All blocks in increasing id order (infinite iterator)."""
        a = 0
        emitted: set = set()
        while True:
            b = self._block_of(a)
            if b not in emitted:
                emitted.add(b)
                yield b
            a += 1

    def spot_verify(self, window: int) -> None:
        """Check coverage, disjointness, and the declared profile on a window."""
        sizes_seen: dict = {}
        for a in range(window):
            b = self._block_of(a)
            members = self._block_members(b)
            if a not in members:
                raise ProfileViolationError(
                    f"{self.key}: point {a} missing from its block {b}")
            if members != sorted(set(members)):
                raise ProfileViolationError(
                    f"{self.key}: block {b} members not sorted/unique")
            if min(members) != b:
                raise ProfileViolationError(
                    f"{self.key}: block id {b} is not its least member")
            for m in members:
                if self._block_of(m) != b:
                    raise ProfileViolationError(
                        f"{self.key}: blocks overlap at point {m}")
            sizes_seen[b] = len(members)
        if isinstance(self.profile, BoundedBy):
            for b, s in sizes_seen.items():
                if s > self.profile.n:
                    raise ProfileViolationError(
                        f"{self.key}: block {b} has size {s} > declared bound "
                        f"{self.profile.n}")
        self.certificate_samples.append({"window": window,
                                         "blocks": len(sizes_seen)})

    def sample_growing_blocks(self, count: int, scan_cap: int = 10**6) -> List[int]:
        """Ids of blocks with strictly increasing sizes (UnboundedFinite evidence)."""
        out = []
        best = 0
        a = 0
        seen: set = set()
        while len(out) < count and a < scan_cap:
            b = self._block_of(a)
            if b not in seen:
                seen.add(b)
                s = len(self._block_members(b))
                if s > best:
                    best = s
                    out.append(b)
            a += 1
        if len(out) < count:
            raise ProfileViolationError(
                f"{self.key}: declared unbounded sizes but found only "
                f"{len(out)} growing blocks within {scan_cap} points")
        return out

    def sample_nonsingleton_blocks(self, count: int, start: int = 0,
                                   scan_cap: int = 10**6) -> List[int]:
        out = []
        a = start
        seen: set = set()
        while len(out) < count and a < start + scan_cap:
            b = self._block_of(a)
            if b not in seen:
                seen.add(b)
                if len(self._block_members(b)) > 1:
                    out.append(b)
            a += 1
        if len(out) < count:
            raise ProfileViolationError(
                f"{self.key}: declared infinitely many nonsingletons but found "
                f"only {len(out)} past {start}")
        return out


# --------------------------------------------------------------------------
# Built-in partitions.


def pairs() -> Partition:
    """Blocks {2m, 2m+1}."""
    return Partition(
        "pairs",
        lambda a: a - a % 2,
        lambda b: [b, b + 1],
        BoundedBy(2, "infinite"),
    )


def pairs_shifted() -> Partition:
    """Blocks {2m+1, 2m+2} plus the singleton {0}."""

    def block_of(a):
        if a == 0:
            return 0
        return a if a % 2 == 1 else a - 1

    def members(b):
        return [0] if b == 0 else [b, b + 1]

    return Partition("pairs-shifted", block_of, members, BoundedBy(2, "infinite"))


def a0() -> Partition:
    """Pairs {4k, 4k+1} and singletons {4k+2}, {4k+3}.

    Infinitely many one-element blocks, infinitely many two-element blocks,
    and no others.
    """

    def block_of(a):
        return a - 1 if a % 4 == 1 else a

    def members(b):
        return [b, b + 1] if b % 4 == 0 else [b]

    return Partition("a0", block_of, members, BoundedBy(2, "infinite"))


def _tri(k: int) -> int:
    return k * (k + 1) // 2


def _tri_root(a: int) -> int:
    k = (math.isqrt(8 * a + 1) - 1) // 2
    while _tri(k + 1) <= a:
        k += 1
    while _tri(k) > a:
        k -= 1
    return k


def intervals_growing() -> Partition:
    """Consecutive intervals of sizes 1, 2, 3, ..."""

    def block_of(a):
        return _tri(_tri_root(a))

    def members(b):
        k = _tri_root(b)
        return list(range(_tri(k), _tri(k + 1)))

    return Partition("intervals-growing", block_of, members, UnboundedFinite())


def singletons() -> Partition:
    return Partition("singletons", lambda a: a, lambda b: [b], BoundedBy(1, 0))


def spread() -> Partition:
    """Blocks of sizes 4, 5, 6, ... interleaved with runs of singletons.

    Unbounded finite sizes with infinitely many singletons and every
    nonsingleton block of size at least 4.
    """
    # segment k = [start_k, start_{k+1}) holds one block of size 4+k and
    # four singletons, with start_k = k(k+15)/2
    def start(k):
        return k * (k + 15) // 2

    def block_index(a):
        k = 0
        while start(k + 1) <= a:
            k += 1
        return k

    def block_of(a):
        k = block_index(a)
        lo = start(k)
        return lo if a < lo + 4 + k else a

    def members(b):
        k = block_index(b)
        lo = start(k)
        if b == lo:
            return list(range(lo, lo + 4 + k))
        return [b]

    return Partition("spread", block_of, members, UnboundedFinite())


def evens_block() -> Partition:
    """One infinite block (the evens) plus odd singletons.

    Representable through block_of, but the infinite block has no finite
    member list, so everything that needs one refuses it.
    """

    def members(b):
        if b == 0:
            raise ProfileViolationError(
                "the even block is infinite and has no finite member list")
        return [b]

    return Partition("evens-block", lambda a: 0 if a % 2 == 0 else a,
                     members, HasInfiniteBlock(0))


def z_pair_blocks() -> Partition:
    """Two-point blocks {3k, 3k+1} indexed by the integers through k, with
    every point 3k+2 a singleton outside the indexed family.

    The integer index of the block at {3k, 3k+1} is nat_to_z(k); the shift on
    indices is realized by :func:`z_block_shift`.
    """

    def block_of(a):
        return a - a % 3 if a % 3 < 2 else a

    def members(b):
        return [b] if b % 3 == 2 else [b, b + 1]

    return Partition("z-pair-blocks", block_of, members, BoundedBy(2, "infinite"))


def z_block_index(block_id: int) -> int:
    if block_id % 3 != 0:
        raise ValueError("not an indexed two-point block")
    return nat_to_z(block_id // 3)


def z_block_id(z: int) -> int:
    return 3 * z_to_nat(z)


def explicit(blocks: List[List[int]], profile: Profile,
             rest_singletons: bool = True, key: str = "explicit") -> Partition:
    block_map: dict = {}
    members_map: dict = {}
    for blk in blocks:
        blk = sorted(set(blk))
        bid = blk[0]
        members_map[bid] = blk
        for a in blk:
            if a in block_map:
                raise ProfileViolationError(f"explicit blocks overlap at {a}")
            block_map[a] = bid
    if not rest_singletons:
        raise PreconditionError("explicit partitions must cover the rest with singletons")

    def block_of(a):
        return block_map.get(a, a)

    def members(b):
        return members_map.get(b, [b])

    return Partition(key, block_of, members, profile)


def from_file(path: str) -> Partition:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    prof = payload.get("profile", {})
    kind = prof.get("kind")
    if kind == "bounded":
        profile: Profile = BoundedBy(int(prof["n"]), prof.get("nonsingletons", "infinite"))
    elif kind == "unbounded-finite":
        profile = UnboundedFinite()
    elif kind == "infinite-block":
        profile = HasInfiniteBlock(int(prof["block"]))
    else:
        raise ParseError(f"unknown profile kind {kind!r}")
    if payload.get("rest") != "singletons":
        raise ParseError("explicit partition file must declare rest:singletons")
    return explicit(payload["blocks"], profile, key=payload.get("key", "explicit"))


BUILTIN_PARTITIONS = {
    "pairs": pairs,
    "pairs-shifted": pairs_shifted,
    "a0": a0,
    "intervals-growing": intervals_growing,
    "singletons": singletons,
    "spread": spread,
    "evens-block": evens_block,
    "z-pair-blocks": z_pair_blocks,
}


def parse_partition(spec: str) -> Partition:
    s = spec.strip()
    if s.startswith("partition:"):
        s = s[len("partition:"):]
    if s.startswith("explicit@"):
        return from_file(s[len("explicit@"):])
    if s in BUILTIN_PARTITIONS:
        return BUILTIN_PARTITIONS[s]()
    raise ParseError(f"unknown partition {spec!r}")


def canonical_A0() -> Partition:
    return a0()


# --------------------------------------------------------------------------
# Classification and membership.


@dataclass
class PartitionClassTag:
    tag: str  # "InP" | "InQ" | "Neither"
    reason: str


def classify_partition(A: Partition) -> PartitionClassTag:
    p = A.profile
    if isinstance(p, UnboundedFinite):
        samples = A.sample_growing_blocks(4)
        A.certificate_samples.append({"growing-blocks": samples})
        return PartitionClassTag(
            "InP", f"declared unbounded finite sizes; growing blocks {samples}")
    if isinstance(p, BoundedBy):
        if p.n >= 2 and p.nonsingletons == "infinite":
            samples = A.sample_nonsingleton_blocks(4)
            A.certificate_samples.append({"nonsingleton-blocks": samples})
            return PartitionClassTag(
                "InQ",
                f"sizes bounded by {p.n} with infinitely many nonsingletons; "
                f"samples {samples}")
        return PartitionClassTag(
            "Neither", f"sizes bounded by {p.n} with nonsingletons={p.nonsingletons}")
    return PartitionClassTag("Neither", "has an infinite block")


@dataclass
class MembershipReport:
    answer: str  # "yes" | "no" | "unknown"
    witness_block: Optional[int] = None
    checked_blocks: int = 0
    basis: str = ""


def stabilizer_membership(f: Permutation, A: Partition, window: int) -> MembershipReport:
    """Does f preserve every block of A?  Exact for finite support."""
    if f.support_bound is not None:
        touched = sorted({A.block_of(a) for a in f.moved_points()})
        for b in touched:
            members = A.block_members(b)
            image = sorted(f.forward(x) for x in members)
            if image != members:
                return MembershipReport("no", witness_block=b,
                                        checked_blocks=len(touched),
                                        basis="finite support, block not preserved")
        return MembershipReport("yes", checked_blocks=len(touched),
                                basis="finite support, all touched blocks preserved")
    checked = 0
    for b in A.blocks_within(window):
        members = A.block_members(b)
        image = sorted(f.forward(x) for x in members)
        checked += 1
        if image != members:
            return MembershipReport("no", witness_block=b, checked_blocks=checked,
                                    basis="probed block not preserved")
    cert = getattr(f, "block_cert_keys", frozenset())
    if A.key in cert:
        return MembershipReport("yes", checked_blocks=checked,
                                basis="construction certificate, probes consistent")
    return MembershipReport("unknown", checked_blocks=checked,
                            basis="probes consistent, no certificate")


# --------------------------------------------------------------------------
# Conjugation: a permutation carrying the blocks of A onto the blocks of B.


class ConjugatorPermutation(Permutation):
    """Greedy size-matched assignment in increasing block-id order.

    The k-th A-block of size s (in id order) is carried onto the k-th B-block
    of size s, least points first.  Evaluation extends the matching on demand
    and fails with NotIsomorphicError when one side runs out within the scan cap.
    """

    form = "conjugator"

    def __init__(self, A: Partition, B: Partition, scan_cap: int = 200_000):
        super().__init__()
        self.A = A
        self.B = B
        self.scan_cap = scan_cap
        self._a_iter = A.iter_blocks()
        self._b_iter = B.iter_blocks()
        self._b_queues: dict = {}  # size -> list of unused B-block ids
        self._match: dict = {}     # A block id -> B block id
        self._rmatch: dict = {}
        self._a_scanned = 0
        self._b_scanned = 0

    def _pull_b(self) -> None:
        b = next(self._b_iter)
        self._b_scanned += 1
        size = len(self.B.block_members(b))
        self._b_queues.setdefault(size, []).append(b)

    def _advance_a(self) -> None:
        a = next(self._a_iter)
        self._a_scanned += 1
        size = len(self.A.block_members(a))
        queue = self._b_queues.get(size, [])
        while not queue:
            if self._b_scanned >= self.scan_cap:
                raise NotIsomorphicError(
                    f"no unused block of size {size} found in {self.B.key} "
                    f"after scanning {self._b_scanned} blocks")
            self._pull_b()
            queue = self._b_queues.get(size, [])
        b = queue.pop(0)
        self._match[a] = b
        self._rmatch[b] = a

    def ensure_blocks(self, count: int) -> None:
        while len(self._match) < count:
            self._advance_a()

    def _ensure_a_block(self, a_block: int) -> None:
        while a_block not in self._match:
            if self._a_scanned >= self.scan_cap:
                raise NotIsomorphicError(
                    f"A-block {a_block} not reached within scan cap")
            self._advance_a()

    def _ensure_b_block(self, b_block: int) -> None:
        while b_block not in self._rmatch:
            if self._a_scanned >= self.scan_cap:
                raise NotIsomorphicError(
                    f"B-block {b_block} never matched within scan cap")
            self._advance_a()

    def _fwd(self, alpha):
        a_block = self.A.block_of(alpha)
        self._ensure_a_block(a_block)
        src = self.A.block_members(a_block)
        dst = self.B.block_members(self._match[a_block])
        return dst[src.index(alpha)]

    def _bwd(self, alpha):
        b_block = self.B.block_of(alpha)
        self._ensure_b_block(b_block)
        dst = self.B.block_members(b_block)
        src = self.A.block_members(self._rmatch[b_block])
        return src[dst.index(alpha)]

    def inverse(self):
        inv = ConjugatorPermutation(self.B, self.A, self.scan_cap)
        return inv

    def matched_blocks(self) -> dict:
        return dict(self._match)


def conjugator(A: Partition, B: Partition, depth: int,
               scan_cap: int = 20_000) -> ConjugatorPermutation:
    """A permutation f carrying (probed) A-blocks onto B-blocks of equal size.

    The k-th block of each size on the A side is matched with the k-th block
    of that size on the B side.  The first ``depth`` blocks of both sides
    must find partners within the scan cap, otherwise NotIsomorphicError is
    raised: the probed size multiplicities disagree.
    """
    f = ConjugatorPermutation(A, B, scan_cap=scan_cap)
    f.ensure_blocks(depth)
    check = ConjugatorPermutation(B, A, scan_cap=scan_cap)
    check.ensure_blocks(depth)
    return f
