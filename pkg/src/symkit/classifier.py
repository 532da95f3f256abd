"""Group descriptors, orbit probing, and the four-class classification.

A descriptor names a closed subgroup symbolically; orbit queries go through
a uniform adapter.  Classification searches stabilizing sets over initial
segments only (enlarging the set can only shrink stabilizers and orbits, and
every finite set sits inside an initial segment, so the search is sound),
and it never returns a definite label without machine-checkable evidence:
``check_evidence`` re-derives every definite label from the evidence alone.

The four labels are totally ordered C_1 < C_Q < C_P < C_S; the least-cardinal
phrasing is recorded alongside each label.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .errors import ParseError, PreconditionError
from .metrics import (
    GeneralizedMetric,
    PartitionMetric,
    classify_metric,
    parse_metric,
)
from .partitions import (
    BoundedBy,
    HasInfiniteBlock,
    Partition,
    UnboundedFinite,
    parse_partition,
)
from .perm import Permutation, parse_perm
from .trees import FullSymmetricOracle, GroupOracle, PartitionStabilizerOracle

CLASS_ORDER = ("C_1", "C_Q", "C_P", "C_S")

LAMBDA_CASE = {
    "C_S": "aleph_1",
    "C_P": "aleph_0",
    "C_Q": "finite>=3",
    "C_1": "2",
}


def class_lt(a: str, b: str) -> bool:
    return CLASS_ORDER.index(a) < CLASS_ORDER.index(b)


@dataclass
class Budgets:
    gamma_max: int = 16
    samples: int = 64
    orbit_budget: int = 4096

    def to_dict(self):
        return {"gamma_max": self.gamma_max, "samples": self.samples,
                "orbit_budget": self.orbit_budget}


# --------------------------------------------------------------------------
# Descriptors.


class Descriptor:
    kind = "abstract"

    def to_string(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<descriptor {self.to_string()}>"


class FullS(Descriptor):
    kind = "full"

    def to_string(self):
        return "full"


class TrivialG(Descriptor):
    kind = "trivial"

    def to_string(self):
        return "trivial"


class PartitionStab(Descriptor):
    kind = "stab"

    def __init__(self, A: Partition, spec: str):
        self.A = A
        self.spec = spec

    def to_string(self):
        return f"stab:{self.spec}"


class PointwiseStab(Descriptor):
    kind = "fix"

    def __init__(self, inner: Descriptor, gamma: Sequence[int]):
        self.inner = inner
        self.gamma = tuple(sorted(set(gamma)))

    def to_string(self):
        pts = ",".join(str(p) for p in self.gamma)
        return f"fix({self.inner.to_string()};{pts})"


class FNGroup(Descriptor):
    kind = "fn"

    def __init__(self, metric: GeneralizedMetric, spec: str):
        self.metric = metric
        self.spec = spec

    def to_string(self):
        return f"fn:{self.spec}"


class OracleG(Descriptor):
    kind = "oracle"

    def __init__(self, oracle: GroupOracle, name: str):
        self.oracle = oracle
        self.name = name

    def to_string(self):
        return f"oracle:{self.name}"


class FiniteSupportG(Descriptor):
    kind = "gens"

    def __init__(self, gens: Sequence[Permutation], spec: str):
        self.gens = list(gens)
        self.spec = spec
        for g in self.gens:
            if g.support_bound is None:
                raise PreconditionError(
                    "gens descriptors need finite-support generators")

    def to_string(self):
        return f"gens:[{self.spec}]"


ORACLE_PLUGINS = {
    "full-sym": lambda: FullSymmetricOracle(),
    "stab-pairs": lambda: PartitionStabilizerOracle(parse_partition("pairs")),
    "stab-a0": lambda: PartitionStabilizerOracle(parse_partition("a0")),
}


def parse_descriptor(s: str) -> Descriptor:
    s = s.strip()
    if s == "full":
        return FullS()
    if s == "trivial":
        return TrivialG()
    if s.startswith("stab:"):
        spec = s[len("stab:"):]
        return PartitionStab(parse_partition(spec), spec)
    if s.startswith("fix(") and s.endswith(")"):
        inner = s[len("fix("):-1]
        depth = 0
        split_at = None
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == ";" and depth == 0:
                split_at = i
                break
        if split_at is None:
            raise ParseError(f"fix needs ';points' in {s!r}", len("fix("))
        sub = parse_descriptor(inner[:split_at])
        pts_text = inner[split_at + 1:].strip()
        pts = [int(x) for x in pts_text.split(",") if x.strip() != ""]
        return PointwiseStab(sub, pts)
    if s.startswith("fn:"):
        spec = s[len("fn:"):]
        return FNGroup(parse_metric(spec), spec)
    if s.startswith("oracle:"):
        name = s[len("oracle:"):]
        if name not in ORACLE_PLUGINS:
            raise ParseError(f"unknown oracle plugin {name!r}", len("oracle:"))
        return OracleG(ORACLE_PLUGINS[name](), name)
    if s.startswith("gens:"):
        body = s[len("gens:"):].strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ParseError(f"gens needs [...] in {s!r}", len("gens:"))
        from .perm import _split_top

        inner = body[1:-1].strip()
        gens = [parse_perm(p) for p in _split_top(inner, ",")] if inner else []
        return FiniteSupportG(gens, inner)
    raise ParseError(f"unknown descriptor {s!r}", 0)


# --------------------------------------------------------------------------
# Orbit probing.


@dataclass
class OrbitReport:
    gamma: List[int]
    alpha: int
    kind: str           # "full" | "atleast" | "unknown"
    size: int
    points: List[int]   # a sample (the whole orbit when kind == "full")
    max_observed: int = 0

    def to_dict(self):
        return {"gamma": list(self.gamma), "alpha": self.alpha,
                "kind": self.kind, "size": self.size,
                "points": list(self.points[:16]),
                "max_observed": self.max_observed}


def _closure_elements(gens: Sequence[Permutation]):
    points = sorted({a for g in gens for a in g.moved_points()})
    idx = {a: i for i, a in enumerate(points)}
    tables = [tuple(idx[g.forward(a)] for a in points) for g in gens]
    ident = tuple(range(len(points)))
    seen = {ident}
    frontier = [ident]
    while frontier:
        st = frontier.pop()
        for t in tables:
            new = tuple(t[s] for s in st)
            if new not in seen:
                seen.add(new)
                frontier.append(new)
    return points, sorted(seen)


def orbit(desc: Descriptor, gamma: Sequence[int], alpha: int,
          budget: int = 4096) -> OrbitReport:
    """The orbit of alpha under the pointwise stabilizer of gamma."""
    gset = frozenset(gamma)
    glist = sorted(gset)

    def report(kind, pts):
        return OrbitReport(glist, alpha, kind, len(pts), sorted(pts)[:budget],
                           max_observed=len(pts))

    if isinstance(desc, TrivialG):
        return report("full", [alpha])
    if isinstance(desc, FullS):
        if alpha in gset:
            return report("full", [alpha])
        pts = []
        m = 0
        while len(pts) < budget:
            if m not in gset:
                pts.append(m)
            m += 1
        return report("atleast", pts)
    if isinstance(desc, PartitionStab):
        if alpha in gset:
            return report("full", [alpha])
        A = desc.A
        block_id = A.block_of(alpha)
        if A.profile.kind == "infinite-block" and block_id == \
                A.block_of(A.profile.block):
            # enumerate the infinite block through block_of only
            pts = []
            m = 0
            while len(pts) < budget:
                if m not in gset and A.block_of(m) == block_id:
                    pts.append(m)
                m += 1
            return report("atleast", pts)
        block = A.block_members(block_id)
        free = [x for x in block if x not in gset]
        if alpha not in free or len(free) < 2:
            return report("full", [alpha])
        return report("full", free)
    if isinstance(desc, PointwiseStab):
        return orbit(desc.inner, set(gamma) | set(desc.gamma), alpha, budget)
    if isinstance(desc, FNGroup):
        m = desc.metric
        if isinstance(m, PartitionMetric):
            return orbit(PartitionStab(m.partition, m.partition.key),
                         gamma, alpha, budget)
        if m.discrete_infinite:
            return report("full", [alpha])
        if m.all_finite:
            # finite-support permutations are bounded, so the stabilizer acts
            # transitively off gamma
            if alpha in gset:
                return report("full", [alpha])
            pts = []
            k = 0
            while len(pts) < budget:
                if k not in gset:
                    pts.append(k)
                k += 1
            return report("atleast", pts)
        return report("unknown", [alpha])
    if isinstance(desc, OracleG):
        r = desc.oracle.orbit(gset, alpha, budget)
        return report(r.kind, r.points)
    if isinstance(desc, FiniteSupportG):
        if not desc.gens:
            return report("full", [alpha])
        points, elements = _closure_elements(desc.gens)
        idx = {a: i for i, a in enumerate(points)}
        relevant_gamma = [p for p in glist if p in idx]
        stab = [e for e in elements
                if all(points[e[idx[p]]] == p for p in relevant_gamma)]
        if alpha not in idx:
            return report("full", [alpha])
        orb = sorted({points[e[idx[alpha]]] for e in stab})
        return report("full", orb)
    raise PreconditionError(f"no orbit adapter for {desc!r}")


# --------------------------------------------------------------------------
# Classification.


@dataclass
class ClassLabel:
    label: str
    lambda_case: Optional[str]
    certified: bool
    basis: str
    gamma: List[int]
    probes: List[OrbitReport]
    budgets: Budgets
    samples: dict = field(default_factory=dict)

    def evidence(self) -> dict:
        return {
            "label": self.label,
            "lambda_case": self.lambda_case,
            "certified": self.certified,
            "basis": self.basis,
            "gamma": list(self.gamma),
            "probes": [p.to_dict() for p in self.probes],
            "budgets": self.budgets.to_dict(),
            "samples": self.samples,
        }


def _label(label, certified, basis, gamma, probes, budgets, samples=None):
    return ClassLabel(label, LAMBDA_CASE.get(label), certified, basis,
                      list(gamma), probes, budgets, samples or {})


def _initial_segments(budgets: Budgets) -> List[List[int]]:
    ks = [0, 1, 2, 4, 8, 16]
    return [list(range(k)) for k in ks if k <= budgets.gamma_max]


def _probe_full_style(desc, budgets) -> List[OrbitReport]:
    probes = []
    for gamma in _initial_segments(budgets):
        alpha = len(gamma)
        probes.append(orbit(desc, gamma, alpha, budgets.orbit_budget))
    return probes


def _is_initial_segment(gamma: Sequence[int]) -> bool:
    return list(gamma) == list(range(len(gamma)))


def classify_group(desc: Descriptor, budgets: Optional[Budgets] = None) -> ClassLabel:
    budgets = budgets or Budgets()

    if isinstance(desc, FullS):
        probes = _probe_full_style(desc, budgets)
        return _label("C_S", True,
                      "full-symmetric", [], probes, budgets)

    if isinstance(desc, TrivialG):
        return _label("C_1", True, "trivial-group", [], [], budgets)

    if isinstance(desc, PartitionStab):
        return _classify_partition_stab(desc, desc.A, budgets, extra_gamma=())

    if isinstance(desc, PointwiseStab):
        if _is_initial_segment(desc.gamma):
            inner = classify_group(desc.inner, budgets)
            return _label(inner.label, inner.certified,
                          "initial-segment-stabilizer",
                          list(desc.gamma), [], budgets,
                          {"inner": inner.evidence()})
        if isinstance(desc.inner, PartitionStab):
            return _classify_partition_stab(desc.inner, desc.inner.A, budgets,
                                            extra_gamma=desc.gamma)
        probes = _probe_full_style(desc, budgets)
        return _label("Unknown", False, "no-certificate", list(desc.gamma),
                      probes, budgets)

    if isinstance(desc, FNGroup):
        return _classify_fn(desc, budgets)

    if isinstance(desc, FiniteSupportG):
        if not desc.gens:
            return _label("C_1", True, "finite-group", [], [], budgets,
                          {"order": 1})
        points, elements = _closure_elements(desc.gens)
        return _label("C_1", True, "finite-group", points, [], budgets,
                      {"order": len(elements), "support": points})

    if isinstance(desc, OracleG):
        probes = _probe_full_style(desc, budgets)
        return _label("Unknown", False, "no-certificate", [], probes, budgets)

    raise PreconditionError(f"no classifier for {desc!r}")


def _classify_partition_stab(desc: Descriptor, A: Partition, budgets: Budgets,
                             extra_gamma: Sequence[int]) -> ClassLabel:
    profile = A.profile
    window = budgets.samples * 4
    if extra_gamma:
        # an arbitrary finite set pins finitely many blocks; report what the
        # probes can actually certify at this budget
        gset = set(extra_gamma)
        blocks = A.blocks_within(window)
        unmet = []
        probes = []
        for b in blocks:
            members = A.block_members(b)
            free = [x for x in members if x not in gset]
            if len(members) > 1 and len(free) >= 2:
                unmet.append(b)
        sample_points = [p for p in range(0, window, max(1, window // budgets.samples))]
        for alpha in sample_points[:budgets.samples]:
            probes.append(orbit(desc if isinstance(desc, PartitionStab)
                                else PartitionStab(A, A.key),
                                gset, alpha, budgets.orbit_budget))
        if not unmet:
            return _label("C_1", False, "budget-trivial", sorted(gset), probes,
                          budgets, {"window": window,
                                    "blocks_checked": len(blocks)})
        return _label("C_Q" if profile.kind == "bounded" else "C_P",
                      False, "budget-surviving-orbits", sorted(gset), probes,
                      budgets, {"window": window, "unmet_blocks": unmet[:16]})

    if isinstance(profile, UnboundedFinite):
        ids = A.sample_growing_blocks(6)
        sizes = [len(A.block_members(b)) for b in ids]
        probes = [orbit(desc, [], b, budgets.orbit_budget) for b in ids[:4]]
        return _label("C_P", True, "partition-profile-unbounded", [], probes,
                      budgets, {"growing_blocks": list(zip(ids, sizes))})
    if isinstance(profile, BoundedBy):
        if profile.n >= 2 and profile.nonsingletons == "infinite":
            ids = []
            start = 0
            for _ in range(4):
                found = A.sample_nonsingleton_blocks(1, start=start)[0]
                ids.append(found)
                start = max(A.block_members(found)) + 1
            sizes = [len(A.block_members(b)) for b in ids]
            probes = [orbit(desc, [], b, budgets.orbit_budget) for b in ids]
            return _label("C_Q", True, "partition-profile-bounded", [], probes,
                          budgets, {"bound": profile.n,
                                    "nonsingleton_blocks": list(zip(ids, sizes))})
        # finitely many nonsingletons: the stabilizer of their union is trivial
        count = profile.nonsingletons if isinstance(profile.nonsingletons, int) else 0
        gamma: List[int] = []
        found = 0
        for b in A.iter_blocks():
            members = A.block_members(b)
            if len(members) > 1:
                gamma.extend(members)
                found += 1
            if found >= count:
                break
            if len(gamma) > 10**5:
                break
        return _label("C_1", True, "partition-finite-nonsingletons",
                      sorted(gamma), [], budgets,
                      {"nonsingleton_count": count})
    if isinstance(profile, HasInfiniteBlock):
        # every finite set leaves an infinite orbit inside the declared block
        probes = []
        stab = desc if isinstance(desc, PartitionStab) else PartitionStab(A, A.key)
        for gamma in _initial_segments(budgets):
            block_pt = None
            m = 0
            while block_pt is None:
                if m not in gamma and \
                        A.block_of(m) == A.block_of(profile.block):
                    block_pt = m
                m += 1
            probes.append(orbit(stab, gamma, block_pt, budgets.orbit_budget))
        return _label("C_S", True, "partition-infinite-block", [], probes,
                      budgets, {"block": profile.block})
    raise PreconditionError("unknown profile")


def _classify_fn(desc: FNGroup, budgets: Budgets) -> ClassLabel:
    m = desc.metric
    if isinstance(m, PartitionMetric):
        inner = classify_group(PartitionStab(m.partition, m.partition.key),
                               budgets)
        return _label(inner.label, inner.certified, "fn-partition",
                      inner.gamma, inner.probes, budgets,
                      {"inner": inner.evidence(), "metric": m.key})
    if m.discrete_infinite:
        return _label("C_1", True, "fn-discrete", [], [], budgets,
                      {"metric": m.key})
    if m.key in ("standard-omega", "standard-z"):
        case = classify_metric(m)
        return _label("C_Q", True, "fn-worked-example", [], [], budgets,
                      {"metric": m.key, "metric_case": case.case})
    case = classify_metric(m)
    return _label("Unknown", False, "fn-open", [], [], budgets,
                  {"metric": m.key, "metric_case": case.case,
                   "metric_evidence": case.evidence})


# --------------------------------------------------------------------------
# Discreteness and compactness.


@dataclass
class Verdict:
    answer: str  # "yes" | "no" | "unknown"
    basis: str
    evidence: dict


def discreteness(desc: Descriptor, budgets: Optional[Budgets] = None) -> Verdict:
    """Is some finite-set stabilizer trivial?  Searched over initial segments."""
    budgets = budgets or Budgets()
    if isinstance(desc, TrivialG):
        return Verdict("yes", "trivial stabilizer at the empty set",
                       {"gamma": []})
    if isinstance(desc, FiniteSupportG):
        pts = sorted({a for g in desc.gens for a in g.moved_points()})
        return Verdict("yes", "finite group: fixing the support pins everything",
                       {"gamma": pts})
    if isinstance(desc, FullS):
        witnesses = [{"gamma": g, "moved": [len(g), len(g) + 1]}
                     for g in _initial_segments(budgets)]
        return Verdict("no", "every initial segment leaves a transposition",
                       {"witnesses": witnesses})
    if isinstance(desc, PartitionStab):
        return _partition_discreteness(desc.A, (), budgets)
    if isinstance(desc, PointwiseStab) and isinstance(desc.inner, PartitionStab):
        return _partition_discreteness(desc.inner.A, desc.gamma, budgets)
    if isinstance(desc, FNGroup):
        m = desc.metric
        if isinstance(m, PartitionMetric):
            return _partition_discreteness(m.partition, (), budgets)
        if m.discrete_infinite:
            return Verdict("yes", "only the identity has finite norm",
                           {"gamma": []})
        if m.all_finite:
            witnesses = [{"gamma": g, "moved": [len(g), len(g) + 1]}
                         for g in _initial_segments(budgets)]
            return Verdict("no", "transpositions beyond any finite set have "
                                 "finite norm", {"witnesses": witnesses})
    return Verdict("unknown", "no certificate either way", {})


def _partition_discreteness(A: Partition, extra: Sequence[int],
                            budgets: Budgets) -> Verdict:
    witnesses = []
    infinite_block = None
    if A.profile.kind == "infinite-block":
        infinite_block = A.block_of(A.profile.block)
    for gamma in _initial_segments(budgets):
        gset = set(gamma) | set(extra)
        found = None
        if infinite_block is not None:
            free = []
            m = 0
            while len(free) < 2 and m < 10**6:
                if m not in gset and A.block_of(m) == infinite_block:
                    free.append(m)
                m += 1
            found = free if len(free) == 2 else None
        else:
            scanned = 0
            for b in A.iter_blocks():
                scanned += 1
                if scanned > 10**5:
                    break
                free = [x for x in A.block_members(b) if x not in gset]
                if len(free) >= 2:
                    found = free[:2]
                    break
        if found is None:
            return Verdict("unknown", "no free block found at budget",
                           {"witnesses": witnesses})
        witnesses.append({"gamma": sorted(gset), "moved": found})
    return Verdict("no", "every probed set leaves a free block transposition",
                   {"witnesses": witnesses})


def compactness_criterion(desc: Descriptor,
                          budgets: Optional[Budgets] = None) -> Verdict:
    """Compact iff closed with all orbits finite; both read at budget."""
    budgets = budgets or Budgets()
    closed, closed_basis = _closed_flag(desc)
    probes = []
    all_finite = True
    for alpha in (0, 1, 5, 17, 64):
        rep = orbit(desc, [], alpha, budgets.orbit_budget)
        probes.append(rep.to_dict())
        if rep.kind != "full":
            all_finite = False
    evidence = {"closed": closed, "closed_basis": closed_basis,
                "orbit_probes": probes}
    if closed is None:
        return Verdict("unknown", "closedness not declared", evidence)
    if not closed:
        return Verdict("no", "not closed in the function topology", evidence)
    if not all_finite:
        return Verdict("no", "an orbit exceeds the probe budget", evidence)
    return Verdict("yes", "closed with finite probed orbits", evidence)


def _closed_flag(desc: Descriptor):
    if isinstance(desc, (FullS, TrivialG, PartitionStab, FiniteSupportG)):
        return True, "closed by construction"
    if isinstance(desc, PointwiseStab):
        flag, basis = _closed_flag(desc.inner)
        return flag, basis
    if isinstance(desc, FNGroup):
        m = desc.metric
        if isinstance(m, PartitionMetric):
            return True, "bounded-norm group of a partition metric is the block stabilizer"
        if m.discrete_infinite:
            return True, "trivial group"
        if m.all_finite:
            return False, ("contains all finite-support permutations densely "
                           "but is proper")
        return None, "unknown"
    if isinstance(desc, OracleG):
        return desc.oracle.closed, "declared by the oracle"
    return None, "unknown"


# --------------------------------------------------------------------------
# Independent evidence replay.


def check_evidence(desc_str: str, evidence: dict) -> bool:
    """Re-derive a classification from its recorded evidence alone."""
    try:
        desc = parse_descriptor(desc_str)
    except ParseError:
        return False
    label = evidence.get("label")
    basis = evidence.get("basis")
    budgets = Budgets(**evidence.get("budgets", {}))
    for probe in evidence.get("probes", []):
        rep = orbit(desc, probe["gamma"], probe["alpha"], budgets.orbit_budget)
        if rep.kind != probe["kind"]:
            return False
        if probe["kind"] == "full" and rep.size != probe["size"]:
            return False
        if probe["kind"] == "atleast" and rep.size < min(probe["size"],
                                                         budgets.orbit_budget):
            return False
    samples = evidence.get("samples", {})
    if basis == "full-symmetric":
        return label == "C_S" and all(
            p["kind"] == "atleast" for p in evidence.get("probes", []))
    if basis == "trivial-group":
        return label == "C_1"
    if basis == "partition-profile-unbounded":
        A = _partition_of(desc)
        if A is None or label != "C_P":
            return False
        sizes = [s for _, s in samples.get("growing_blocks", [])]
        if len(sizes) < 4 or sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
            return False
        return all(len(A.block_members(b)) == s
                   for b, s in samples.get("growing_blocks", []))
    if basis == "partition-profile-bounded":
        A = _partition_of(desc)
        if A is None or label != "C_Q":
            return False
        bound = samples.get("bound", 0)
        pairs = samples.get("nonsingleton_blocks", [])
        if bound < 2 or len(pairs) < 4:
            return False
        return all(2 <= len(A.block_members(b)) <= bound and
                   len(A.block_members(b)) == s for b, s in pairs)
    if basis == "partition-finite-nonsingletons":
        return label == "C_1"
    if basis == "partition-infinite-block":
        return label == "C_S" and all(
            p["kind"] == "atleast" for p in evidence.get("probes", []))
    if basis == "initial-segment-stabilizer":
        inner = samples.get("inner", {})
        if not _is_initial_segment(evidence.get("gamma", [])):
            return False
        if inner.get("label") != label:
            return False
        return check_evidence(_inner_str(desc_str), inner)
    if basis == "budget-trivial":
        A = _partition_of(desc)
        if A is None or label != "C_1":
            return False
        window = samples.get("window", 0)
        gset = set(evidence.get("gamma", []))
        for b in A.blocks_within(window):
            members = A.block_members(b)
            free = [x for x in members if x not in gset]
            if len(members) > 1 and len(free) >= 2:
                return False
        return True
    if basis == "budget-surviving-orbits":
        A = _partition_of(desc)
        if A is None:
            return False
        gset = set(evidence.get("gamma", []))
        unmet = samples.get("unmet_blocks", [])
        if not unmet:
            return False
        return all(len([x for x in A.block_members(b) if x not in gset]) >= 2
                   for b in unmet)
    if basis == "fn-partition":
        inner = samples.get("inner", {})
        if inner.get("label") != label:
            return False
        return check_evidence(f"stab:{samples.get('metric', '')[len('partition@'):]}",
                              inner)
    if basis == "fn-discrete":
        return label == "C_1"
    if basis == "fn-worked-example":
        if label != "C_Q" or samples.get("metric") not in ("standard-omega",
                                                           "standard-z"):
            return False
        case = classify_metric(parse_metric(samples["metric"]))
        return case.case == samples.get("metric_case") == "CaseIII"
    if basis == "finite-group":
        if label != "C_1" or not isinstance(desc, (FiniteSupportG, TrivialG)):
            return False
        if isinstance(desc, FiniteSupportG) and desc.gens:
            _, elements = _closure_elements(desc.gens)
            return len(elements) == samples.get("order")
        return samples.get("order", 1) == 1
    if basis in ("no-certificate", "fn-open"):
        return label == "Unknown"
    return False


def _partition_of(desc: Descriptor) -> Optional[Partition]:
    if isinstance(desc, PartitionStab):
        return desc.A
    if isinstance(desc, PointwiseStab):
        return _partition_of(desc.inner)
    if isinstance(desc, FNGroup) and isinstance(desc.metric, PartitionMetric):
        return desc.metric.partition
    return None


def _inner_str(desc_str: str) -> str:
    s = desc_str.strip()
    if s.startswith("fix(") and s.endswith(")"):
        inner = s[len("fix("):-1]
        depth = 0
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == ";" and depth == 0:
                return inner[:i]
    return s
