"""Lazy two-sided permutations of the naturals.

Permutations act on the right: ``apply(p, a)`` is the image of ``a`` under
``p``, and a word ``[p, q]`` applies ``p`` first, then ``q``.  Every
permutation carries both directions explicitly; a rule is never inverted by
search.  Evaluation is lazy and budgeted: a single query may spend at most
``DEFAULT_STEP_BUDGET`` primitive applications unless a different budget is
installed with :func:`evaluation_budget`.

Values are immutable after construction and safe to share across threads;
memo tables fill idempotently.  User-supplied rules must be pure -- that is
a stated contract, not something the library can enforce.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import (
    ConvergenceError,
    EvaluationBudgetError,
    NoSupportCertificateError,
    ParseError,
)

DEFAULT_STEP_BUDGET = 10**6

_state = threading.local()


def _charge(n: int = 1) -> None:
    remaining = getattr(_state, "remaining", None)
    if remaining is None:
        return
    remaining -= n
    if remaining < 0:
        _state.remaining = None
        raise EvaluationBudgetError("evaluation step budget exhausted")
    _state.remaining = remaining


@contextmanager
def evaluation_budget(limit: int = DEFAULT_STEP_BUDGET):
    """Install a primitive-application budget for the enclosed queries."""
    previous = getattr(_state, "remaining", None)
    _state.remaining = limit
    try:
        yield
    finally:
        _state.remaining = previous


def _entry(fn):
    """Open a default budget around a public evaluation entry point."""

    def wrapped(self, alpha):
        if getattr(_state, "remaining", None) is None:
            with evaluation_budget(DEFAULT_STEP_BUDGET):
                return fn(self, alpha)
        return fn(self, alpha)

    return wrapped


# --------------------------------------------------------------------------
# The fixed bijection between the integers and the naturals: n >= 0 maps to
# 2n, n < 0 maps to -2n - 1.  All integer-indexed constructions live on the
# naturals through this coding.


def z_to_nat(z: int) -> int:
    return 2 * z if z >= 0 else -2 * z - 1


def nat_to_z(m: int) -> int:
    return m // 2 if m % 2 == 0 else -(m + 1) // 2


class ZEmbedding:
    to_nat = staticmethod(z_to_nat)
    from_nat = staticmethod(nat_to_z)


# --------------------------------------------------------------------------


class Permutation:
    """Base class.  Subclasses implement ``_fwd`` and ``_bwd``."""

    form = "abstract"

    def __init__(self):
        self.support_bound: Optional[int] = None
        # metric key -> certified bound on sup d(a, a.f)
        self.displacement_bounds: dict = {}
        # metric key -> callable j -> (a_j, b_j) with d(a_j, b_j) >= j and
        # a_j.f == b_j (a certified growth witness; see metrics.norm)
        self.growth_witnesses: dict = {}

    def _fwd(self, alpha: int) -> int:
        raise NotImplementedError

    def _bwd(self, alpha: int) -> int:
        raise NotImplementedError

    forward = _entry(lambda self, alpha: self._fwd(alpha))
    backward = _entry(lambda self, alpha: self._bwd(alpha))

    def inverse(self) -> "Permutation":
        raise NotImplementedError

    def moved_points(self) -> list:
        """Exact support, available only with a finite-support certificate."""
        if self.support_bound is None:
            raise NoSupportCertificateError(
                f"{self.form} permutation carries no finite-support certificate"
            )
        return [a for a in range(self.support_bound) if self.forward(a) != a]

    def __repr__(self):
        return f"<{type(self).__name__} {format_perm(self)!r}>"


class FiniteSupportPermutation(Permutation):
    form = "cycles"

    def __init__(self, mapping: dict):
        super().__init__()
        fwd = {a: b for a, b in mapping.items() if a != b}
        if len(set(fwd.values())) != len(fwd) or set(fwd.values()) != set(fwd):
            raise ValueError("mapping is not a bijection with finite support")
        if any(a < 0 or b < 0 for a, b in fwd.items()):
            raise ValueError("points must be naturals")
        self._map = fwd
        self._inv = {b: a for a, b in fwd.items()}
        self.support_bound = max(fwd) + 1 if fwd else 0

    @classmethod
    def from_cycles(cls, cycles: Sequence[Sequence[int]]) -> "FiniteSupportPermutation":
        mapping: dict = {}
        seen: set = set()
        for cyc in cycles:
            if len(set(cyc)) != len(cyc):
                raise ValueError(f"cycle {cyc} repeats a point")
            if seen & set(cyc):
                raise ValueError("cycles are not disjoint")
            seen |= set(cyc)
            for i, a in enumerate(cyc):
                mapping[a] = cyc[(i + 1) % len(cyc)]
        return cls(mapping)

    def _fwd(self, alpha):
        _charge()
        return self._map.get(alpha, alpha)

    def _bwd(self, alpha):
        _charge()
        return self._inv.get(alpha, alpha)

    def inverse(self):
        return FiniteSupportPermutation(self._inv)

    def cycles(self) -> list:
        """Disjoint cycles, each rotated to start at its least point, sorted."""
        out = []
        seen = set()
        for start in sorted(self._map):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            b = self._map[start]
            while b != start:
                cyc.append(b)
                seen.add(b)
                b = self._map[b]
            out.append(tuple(cyc))
        return out


def identity() -> FiniteSupportPermutation:
    return FiniteSupportPermutation({})


class RulePermutation(Permutation):
    """A named rule with both directions supplied by the caller."""

    form = "rule"

    def __init__(self, name, fwd, bwd, params=None, support_bound=None,
                 displacement_bounds=None, inverted=False):
        super().__init__()
        self.name = name
        self.params = dict(params or {})
        self._f = fwd
        self._b = bwd
        self.inverted = inverted
        self.support_bound = support_bound
        self.displacement_bounds = dict(displacement_bounds or {})

    def _fwd(self, alpha):
        _charge()
        return self._f(alpha)

    def _bwd(self, alpha):
        _charge()
        return self._b(alpha)

    def inverse(self):
        inv = RulePermutation(
            self.name, self._b, self._f, self.params,
            support_bound=self.support_bound,
            displacement_bounds=self.displacement_bounds,
            inverted=not self.inverted,
        )
        return inv


class WordPermutation(Permutation):
    """Left-to-right composition of factors."""

    form = "word"

    def __init__(self, factors: Sequence[Permutation], memo: bool = False):
        super().__init__()
        self.factors = list(factors)
        bounds = [f.support_bound for f in self.factors]
        if all(b is not None for b in bounds):
            self.support_bound = max(bounds, default=0)
        keys = None
        for f in self.factors:
            ks = set(f.displacement_bounds)
            keys = ks if keys is None else keys & ks
        for k in keys or ():
            self.displacement_bounds[k] = sum(
                f.displacement_bounds[k] for f in self.factors
            )
        self._memo_f: Optional[dict] = {} if memo else None
        self._memo_b: Optional[dict] = {} if memo else None

    def _fwd(self, alpha):
        if self._memo_f is not None and alpha in self._memo_f:
            return self._memo_f[alpha]
        value = alpha
        for f in self.factors:
            value = f._fwd(value)
        if self._memo_f is not None:
            self._memo_f[alpha] = value
        return value

    def _bwd(self, alpha):
        if self._memo_b is not None and alpha in self._memo_b:
            return self._memo_b[alpha]
        value = alpha
        for f in reversed(self.factors):
            value = f._bwd(value)
        if self._memo_b is not None:
            self._memo_b[alpha] = value
        return value

    def inverse(self):
        return WordPermutation([f.inverse() for f in reversed(self.factors)],
                               memo=self._memo_f is not None)


def word(*factors: Permutation, memo: bool = False) -> WordPermutation:
    return WordPermutation(list(factors), memo=memo)


def conjugate(f: Permutation, t: Permutation) -> WordPermutation:
    """The product f^-1 t f (apply f^-1 first).

    When ``t`` has finite support the result does too, with the support
    computed through ``f``, so block-membership checks stay exact.
    """
    c = WordPermutation([f.inverse(), t, f])
    if t.support_bound is not None:
        moved = t.moved_points()
        if moved:
            c.support_bound = max(f.forward(a) for a in moved) + 1
        else:
            c.support_bound = 0
    return c


# --------------------------------------------------------------------------
# Convergent sequences and their limits.


class ConvergentSequence:
    """A sequence j -> (g_j, Gamma_j) meant to converge in the function topology.

    The conditions verified at each level j >= 1 are:

    * containment: {0..j-1} and their preimages under g_{j-1} lie in Gamma_j;
    * coset: g_j agrees with g_{j-1} on every point of Gamma_j.

    Together they force g_j to stabilize on the point j-1 in both directions
    from level j on, so the pointwise limit is again a permutation.
    """

    def __init__(self, terms: Callable[[int], tuple], description: str = ""):
        self._producer = terms
        self._cache: dict = {}
        self.verified_depth = 0
        self.description = description

    def term(self, j: int):
        if j not in self._cache:
            g, gamma = self._producer(j)
            self._cache[j] = (g, frozenset(gamma))
        return self._cache[j]

    def verify_to(self, depth: int) -> None:
        for j in range(self.verified_depth + 1, depth + 1):
            self._check_level(j)
            self.verified_depth = j

    def _check_level(self, j: int) -> None:
        g_prev, _ = self.term(j - 1)
        g_j, gamma_j = self.term(j)
        for i in range(j):
            if i not in gamma_j:
                raise ConvergenceError(
                    f"point {i} missing from Gamma_{j}", level=j, point=i,
                    condition="containment")
            pre = g_prev.backward(i)
            if pre not in gamma_j:
                raise ConvergenceError(
                    f"preimage {pre} of point {i} under g_{j-1} missing from Gamma_{j}",
                    level=j, point=i, condition="containment")
        for c in sorted(gamma_j):
            if g_j.forward(c) != g_prev.forward(c):
                raise ConvergenceError(
                    f"g_{j} disagrees with g_{j-1} at {c} of Gamma_{j}",
                    level=j, point=c, condition="coset")


def constant_tail(seq_terms: Callable[[int], tuple], depth: int):
    """Extend finitely many terms with a constant continuation.

    Beyond ``depth`` the permutation is repeated and the Gamma sets grow to
    keep both convergence conditions trivially true, so the limit machinery
    can evaluate at arbitrary points.
    """

    def terms(j: int):
        if j < depth:
            return seq_terms(j)
        g, gamma = seq_terms(depth - 1) if depth > 0 else seq_terms(0)
        extra = set(gamma)
        for m in range(j):
            extra.add(m)
            extra.add(g.backward(m))
        return g, frozenset(extra)

    return terms


class LimitPermutation(Permutation):
    form = "limit"

    def __init__(self, seq: ConvergentSequence, inverted: bool = False):
        super().__init__()
        self.seq = seq
        self.inverted = inverted
        self._memo_f: dict = {}
        self._memo_b: dict = {}

    def _eval(self, alpha, back):
        memo = self._memo_b if back else self._memo_f
        if alpha in memo:
            return memo[alpha]
        self.seq.verify_to(alpha + 1)
        g, _ = self.seq.term(alpha + 1)
        value = g._bwd(alpha) if back else g._fwd(alpha)
        memo[alpha] = value
        return value

    def _fwd(self, alpha):
        return self._eval(alpha, back=self.inverted)

    def _bwd(self, alpha):
        return self._eval(alpha, back=not self.inverted)

    def inverse(self):
        return LimitPermutation(self.seq, inverted=not self.inverted)


def limit(seq: ConvergentSequence, depth: int) -> LimitPermutation:
    """Verify the sequence to ``depth`` and return its limit permutation."""
    seq.verify_to(depth)
    return LimitPermutation(seq)


# --------------------------------------------------------------------------
# Operations.


def apply(p: Permutation, alpha: int) -> int:
    return p.forward(alpha)


def inverse(p: Permutation) -> Permutation:
    return p.inverse()


@dataclass
class WindowReport:
    ok: bool
    window: int
    failure: Optional[dict] = None

    def __bool__(self):
        return self.ok


def verify_window(p: Permutation, n: int) -> WindowReport:
    """Check two-sided consistency and injectivity of ``p`` on [0, n)."""
    seen: dict = {}
    for alpha in range(n):
        try:
            beta = p.forward(alpha)
            if not isinstance(beta, int) or beta < 0:
                return WindowReport(False, n, {
                    "kind": "forward-not-natural", "point": alpha, "value": beta})
            if beta in seen and seen[beta] != alpha:
                return WindowReport(False, n, {
                    "kind": "forward-collision", "point": alpha,
                    "other": seen[beta], "value": beta})
            seen[beta] = alpha
            if p.backward(beta) != alpha:
                return WindowReport(False, n, {
                    "kind": "backward-of-forward", "point": alpha, "value": beta})
            gamma = p.backward(alpha)
            if not isinstance(gamma, int) or gamma < 0:
                return WindowReport(False, n, {
                    "kind": "backward-not-natural", "point": alpha, "value": gamma})
            if p.forward(gamma) != alpha:
                return WindowReport(False, n, {
                    "kind": "forward-of-backward", "point": alpha, "value": gamma})
        except EvaluationBudgetError:
            raise
        except Exception as exc:  # a user rule misbehaved: report, don't raise
            return WindowReport(False, n, {
                "kind": "exception", "point": alpha, "error": repr(exc)})
    return WindowReport(True, n)


def parity(p: Permutation) -> str:
    """Sign of a certified finite-support permutation: "even" or "odd"."""
    moved = p.moved_points()
    mapping = {a: p.forward(a) for a in moved}
    seen: set = set()
    transpositions = 0
    for start in mapping:
        if start in seen:
            continue
        length = 0
        b = start
        while b not in seen:
            seen.add(b)
            b = mapping[b]
            length += 1
        transpositions += length - 1
    return "even" if transpositions % 2 == 0 else "odd"


def agrees_on_window(p: Permutation, q: Permutation, n: int) -> bool:
    return all(p.forward(a) == q.forward(a) for a in range(n))


# --------------------------------------------------------------------------
# Built-in rules.


def _shift_z():
    def fwd(m):
        return z_to_nat(nat_to_z(m) + 1)

    def bwd(m):
        return z_to_nat(nat_to_z(m) - 1)

    return RulePermutation("shift-z", fwd, bwd,
                           displacement_bounds={"standard-z": 1})


def _swap_pairs():
    def step(m):
        return m ^ 1

    return RulePermutation("swap-pairs", step, step,
                           displacement_bounds={"standard-omega": 1})


def _block_rotate(size: int):
    size = int(size)
    if size < 1:
        raise ValueError("size must be positive")

    def fwd(m):
        q, r = divmod(m, size)
        return q * size + (r + 1) % size

    def bwd(m):
        q, r = divmod(m, size)
        return q * size + (r - 1) % size

    return RulePermutation("block-rotate", fwd, bwd, params={"size": size},
                           displacement_bounds={"standard-omega": size - 1})


def _identity_rule():
    return RulePermutation("identity", lambda m: m, lambda m: m,
                           support_bound=0,
                           displacement_bounds={})


BUILTIN_RULES = {
    "identity": lambda params: _identity_rule(),
    "shift-z": lambda params: _shift_z(),
    "swap-pairs": lambda params: _swap_pairs(),
    "block-rotate": lambda params: _block_rotate(params.get("size", 2)),
}


def rule(name: str, **params) -> RulePermutation:
    if name not in BUILTIN_RULES:
        raise ParseError(f"unknown rule {name!r}")
    return BUILTIN_RULES[name](params)


# --------------------------------------------------------------------------
# Text and JSON formats.
#
#   cycles:(0 1 2)(5 6)      finite support
#   rule:shift-z             built-in rule; parameters as ;key=value
#   word:[p1,p2^-1,...]      factors composed left to right
#
# A trailing ^-1 on any form denotes the inverse.


def format_perm(p: Permutation) -> str:
    if isinstance(p, FiniteSupportPermutation):
        cycs = p.cycles()
        if not cycs:
            return "cycles:()"
        return "cycles:" + "".join(
            "(" + " ".join(str(a) for a in c) + ")" for c in cycs)
    if isinstance(p, RulePermutation):
        s = "rule:" + p.name
        for k, v in sorted(p.params.items()):
            s += f";{k}={v}"
        if p.inverted:
            s += "^-1"
        return s
    if isinstance(p, WordPermutation):
        return "word:[" + ",".join(format_perm(f) for f in p.factors) + "]"
    return f"{p.form}:<opaque>"


def _split_top(s: str, sep: str) -> list:
    parts = []
    depth = 0
    cur = []
    for ch in s:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_perm(text: str, pos: int = 0) -> Permutation:
    s = text.strip()
    inverted = False
    if s.endswith("^-1"):
        inverted = True
        s = s[: -3].strip()
    if s.startswith("cycles:"):
        body = s[len("cycles:"):]
        cycles = []
        i = 0
        while i < len(body):
            if body[i] != "(":
                raise ParseError(f"expected '(' in {text!r}", pos + i)
            j = body.find(")", i)
            if j < 0:
                raise ParseError(f"unclosed cycle in {text!r}", pos + i)
            inner = body[i + 1:j].replace(",", " ").split()
            if inner:
                try:
                    cycles.append([int(x) for x in inner])
                except ValueError:
                    raise ParseError(f"bad cycle entry in {text!r}", pos + i)
            i = j + 1
        p = FiniteSupportPermutation.from_cycles(cycles)
    elif s.startswith("rule:"):
        body = s[len("rule:"):]
        pieces = body.split(";")
        name = pieces[0]
        params = {}
        for piece in pieces[1:]:
            if "=" not in piece:
                raise ParseError(f"bad rule parameter {piece!r}", pos)
            k, v = piece.split("=", 1)
            params[k] = int(v) if v.lstrip("-").isdigit() else v
        if name not in BUILTIN_RULES:
            raise ParseError(f"unknown rule {name!r}", pos)
        p = BUILTIN_RULES[name](params)
    elif s.startswith("word:"):
        body = s[len("word:"):].strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ParseError(f"word needs [...] in {text!r}", pos)
        inner = body[1:-1].strip()
        factors = []
        if inner:
            for part in _split_top(inner, ","):
                factors.append(parse_perm(part, pos))
        p = WordPermutation(factors)
    else:
        raise ParseError(f"unknown permutation form {text!r}", pos)
    return p.inverse() if inverted else p


def perm_to_json(p: Permutation) -> dict:
    if isinstance(p, FiniteSupportPermutation):
        return {"form": "cycles", "cycles": [list(c) for c in p.cycles()]}
    if isinstance(p, RulePermutation):
        out = {"form": "rule", "rule": p.name, "params": p.params}
        if p.inverted:
            out["inverse"] = True
        return out
    if isinstance(p, WordPermutation):
        return {"form": "word", "factors": [perm_to_json(f) for f in p.factors]}
    return {"form": p.form}


def perm_from_json(obj: dict) -> Permutation:
    form = obj.get("form")
    if form == "cycles":
        return FiniteSupportPermutation.from_cycles(obj["cycles"])
    if form == "rule":
        name = obj["rule"]
        if name not in BUILTIN_RULES:
            raise ParseError(f"unknown rule {name!r}")
        p = BUILTIN_RULES[name](obj.get("params") or {})
        return p.inverse() if obj.get("inverse") else p
    if form == "word":
        return WordPermutation([perm_from_json(f) for f in obj["factors"]])
    raise ParseError(f"unknown permutation form {form!r}")
