"""The contra-polymatroidal rate region and its corner points.

Fixing an augmented joint, write for every nonempty group I of
description indices

    g(I) = I(X_I ; Z_I | Z_{I^c}, S)

where ``Z_m = X_m`` for the losslessly observed sources ``m <= J`` and
``I^c`` is the complement of I within ``{1..M}``.  The achievable rate
set studied here is

    { R >= 0 :  sum_{i in I} R_i >= g(I)  for every nonempty I }.

This set is convex and upward closed, and g is supermodular, so the set
has exactly M! extreme points, one per processing order: for a
permutation ``pi`` of the sources, position i of the corner is

    R_{pi(i)} = I(X_{pi(i)} ; Z_{pi(i)} | Z_{pi(1..i-1)}, S),

a telescoping of g along the order.  At such a corner the tight
constraints are exactly the nested suffix groups
``{pi(m), ..., pi(M)}``, and more generally the tight constraints at any
point of the region form a chain under inclusion (no two tight groups
can cross).  Distinctness of all M! corners requires a nondegeneracy
condition: no group of descriptions may be conditionally independent of
a disjoint group given the remaining descriptions and S.

:func:`verify_chain_identities` numerically exercises the decomposition
identities of g that drive all of the above (chain rules that peel
elements off a group one at a time, and the superadditivity inequality
bounding g(I) by a sum of single-index corner rates).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .augment import AugmentedPmf
from .errors import BudgetError, PreconditionError, StructuralError
from .pmf import JointPmf, VarSet, mi_sets

ACTIVE_TOL = 1e-9
DISTINCT_TOL = 1e-6
NONDEGENERACY_THRESHOLD = 1e-7
MAX_SOURCES_FOR_ENUMERATION = 6

Permutation = tuple[int, ...]
RateVector = np.ndarray


def identity_permutation(m: int) -> Permutation:
    return tuple(range(1, m + 1))


def check_permutation(perm: Sequence[int], m: int) -> Permutation:
    perm = tuple(int(i) for i in perm)
    if sorted(perm) != list(range(1, m + 1)):
        raise StructuralError(f"{perm} is not a permutation of 1..{m}")
    return perm


def _group(indices: Iterable[int], m: int) -> tuple[int, ...]:
    out = tuple(sorted({int(i) for i in indices}))
    if not out:
        raise StructuralError("description group must be nonempty")
    if out[0] < 1 or out[-1] > m:
        raise StructuralError(f"group {out} outside 1..{m}")
    return out


def _groups_in_mask_order(m: int) -> list[tuple[int, ...]]:
    """All nonempty groups, ordered by their bitmask over sources 1..M."""
    return [
        tuple(i + 1 for i in range(m) if mask >> i & 1)
        for mask in range(1, 1 << m)
    ]


def _mi_xz(aug: AugmentedPmf, left: Sequence[int], cond: Sequence[int]) -> float:
    """I(X_left ; Z_left | Z_cond, S) on the augmented joint."""
    a = aug.x_set(left)
    b = aug.z_set(left)
    c = aug.z_set(cond) | aug.s_vs
    return mi_sets(aug.joint, a, b, c)


def _mi_zz(aug: AugmentedPmf, left: Sequence[int], right: Sequence[int],
           cond: Sequence[int]) -> float:
    """I(Z_left ; Z_right | Z_cond, S) on the augmented joint."""
    a = aug.z_set(left)
    b = aug.z_set(right)
    c = aug.z_set(cond) | aug.s_vs
    return mi_sets(aug.joint, a, b, c)


def rate_lhs(aug: AugmentedPmf, group: Iterable[int]) -> float:
    """g(I) = I(X_I ; Z_I | Z_{I^c}, S) for a nonempty group I of 1..M."""
    g = _group(group, aug.m)
    comp = tuple(i for i in range(1, aug.m + 1) if i not in g)
    return _mi_xz(aug, g, comp)


@dataclass(frozen=True)
class ConstraintEntry:
    group: tuple[int, ...]
    lhs: float           # g(I), the information bound
    rate_sum: float      # sum of R_i over the group
    slack: float         # rate_sum - lhs
    active: bool


@dataclass(frozen=True)
class ConstraintReport:
    entries: tuple[ConstraintEntry, ...]
    tol: float

    @property
    def is_member(self) -> bool:
        return all(e.slack >= -self.tol for e in self.entries)

    @property
    def active_groups(self) -> tuple[tuple[int, ...], ...]:
        return tuple(e.group for e in self.entries if e.active)

    def entry(self, group: Iterable[int]) -> ConstraintEntry:
        key = tuple(sorted(group))
        for e in self.entries:
            if e.group == key:
                return e
        raise StructuralError(f"no constraint entry for group {key}")


def membership(aug: AugmentedPmf, rates: RateVector, tol: float = ACTIVE_TOL) -> ConstraintReport:
    """Evaluate every group constraint at ``rates``.

    ``rates`` must have one nonnegative entry per source (entries within
    ``-1e-12`` are treated as zero).  Entries come back in bitmask order,
    so reports are deterministic and comparable across runs.
    """
    r = np.asarray(rates, dtype=float)
    if r.shape != (aug.m,):
        raise StructuralError(f"rate vector has shape {r.shape}, expected ({aug.m},)")
    if r.min(initial=0.0) < -1e-12:
        raise StructuralError(f"rate vector has a negative entry: {r}")
    entries = []
    for group in _groups_in_mask_order(aug.m):
        lhs = rate_lhs(aug, group)
        rate_sum = float(sum(r[i - 1] for i in group))
        slack = rate_sum - lhs
        entries.append(
            ConstraintEntry(group, lhs, rate_sum, slack, abs(slack) <= tol)
        )
    return ConstraintReport(tuple(entries), tol)


def corner_point(aug: AugmentedPmf, perm: Sequence[int]) -> RateVector:
    """The extreme point of the region associated with processing order ``perm``.

    Source ``perm[i]`` pays the information its description adds on top of
    the descriptions of ``perm[0..i-1]`` and S.  Tiny negatives from float
    cancellation clamp to 0 so the result is a valid rate vector.
    """
    perm = check_permutation(perm, aug.m)
    rates = np.zeros(aug.m)
    for pos in range(aug.m):
        target = perm[pos]
        prefix = perm[:pos]
        rates[target - 1] = max(0.0, _mi_xz(aug, (target,), prefix))
    return rates


def enumerate_extreme_points(aug: AugmentedPmf) -> list[tuple[Permutation, RateVector]]:
    """All M! corner points, in lexicographic permutation order.

    Refuses instances with more than ``MAX_SOURCES_FOR_ENUMERATION``
    sources; factorially many corners past that are not desk-scale.
    """
    if aug.m > MAX_SOURCES_FOR_ENUMERATION:
        raise BudgetError(
            f"enumerating {math.factorial(aug.m)} corners for M={aug.m} exceeds "
            f"the M <= {MAX_SOURCES_FOR_ENUMERATION} budget"
        )
    return [
        (perm, corner_point(aug, perm))
        for perm in itertools.permutations(range(1, aug.m + 1))
    ]


def distinct_count(points: Sequence[tuple[Permutation, RateVector]],
                   tol: float = DISTINCT_TOL) -> int:
    """Number of pairwise-distinct rate vectors under the max-norm gap ``tol``."""
    reps: list[np.ndarray] = []
    for _, r in points:
        if not any(np.abs(r - seen).max() <= tol for seen in reps):
            reps.append(np.asarray(r, dtype=float))
    return len(reps)


def expected_active_groups(perm: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    """The nested suffix groups {perm[m..M]} tight at the perm's corner."""
    perm = tuple(perm)
    return tuple(tuple(sorted(perm[pos:])) for pos in range(len(perm)))


def verify_noncrossing(aug: AugmentedPmf, rates: RateVector, tol: float = ACTIVE_TOL) -> bool:
    """Check that the constraints tight at ``rates`` form an inclusion chain.

    ``rates`` must belong to the region (precondition).  Returns True when
    every pair of tight groups is nested; crossing tight groups would
    contradict supermodularity of g, so False indicates broken inputs.
    """
    report = membership(aug, rates, tol)
    if not report.is_member:
        worst = min(e.slack for e in report.entries)
        raise PreconditionError(
            f"rate vector is outside the region (worst slack {worst:.3e})"
        )
    active = [set(g) for g in report.active_groups]
    for a, b in itertools.combinations(active, 2):
        if not (a <= b or b <= a):
            return False
    return True


# ---- nondegeneracy ----------------------------------------------------------


@dataclass(frozen=True)
class NondegeneracyReport:
    """Minimum cross-group dependence over all disjoint description groups."""

    entries: tuple[tuple[tuple[int, ...], tuple[int, ...], float], ...]
    threshold: float

    @property
    def min_value(self) -> float:
        return min((v for _, _, v in self.entries), default=float("inf"))

    @property
    def degenerate(self) -> bool:
        return self.min_value < self.threshold


def nondegeneracy_report(aug: AugmentedPmf,
                         threshold: float = NONDEGENERACY_THRESHOLD) -> NondegeneracyReport:
    """Probe every disjoint pair of description groups for vanishing dependence.

    Degeneracy here means I(Z_I ; Z_I' | Z_{(I u I')^c}, S) ~ 0 for some
    disjoint nonempty I, I': exactly the condition under which corner
    points collide and tight-set uniqueness fails.  M = 1 is vacuously
    nondegenerate.
    """
    m = aug.m
    entries = []
    for mask_a in range(1, 1 << m):
        rest = [i for i in range(m) if not mask_a >> i & 1]
        group_a = tuple(i + 1 for i in range(m) if mask_a >> i & 1)
        for r in range(1, len(rest) + 1):
            for combo in itertools.combinations(rest, r):
                mask_b = sum(1 << i for i in combo)
                if mask_b < mask_a:
                    continue  # unordered pairs once
                group_b = tuple(i + 1 for i in combo)
                cond = tuple(
                    i + 1 for i in range(m)
                    if not (mask_a >> i & 1 or mask_b >> i & 1)
                )
                value = _mi_zz(aug, group_a, group_b, cond)
                entries.append((group_a, group_b, value))
    return NondegeneracyReport(tuple(entries), threshold)


def source_nondegeneracy_report(source: JointPmf, m: int,
                                threshold: float = NONDEGENERACY_THRESHOLD) -> NondegeneracyReport:
    """Source-level preflight: dependence between disjoint source groups given S.

    Channels are not known at load time, but if two source groups are
    already conditionally independent given S alone, no channel choice can
    make their descriptions dependent, so the instance is degenerate for
    every channel bank.  Conditioning deliberately excludes the remaining
    sources: a Markov-structured source is fine once its descriptions are
    noisy, and must not be flagged here.
    """
    entries = []
    s = source.varset("S")
    for mask_a in range(1, 1 << m):
        group_a = tuple(i + 1 for i in range(m) if mask_a >> i & 1)
        rest = [i for i in range(m) if not mask_a >> i & 1]
        for r in range(1, len(rest) + 1):
            for combo in itertools.combinations(rest, r):
                mask_b = sum(1 << i for i in combo)
                if mask_b < mask_a:
                    continue
                group_b = tuple(i + 1 for i in combo)
                a = VarSet.of(source.axis_index(f"X{i}") for i in group_a)
                b = VarSet.of(source.axis_index(f"X{i}") for i in group_b)
                entries.append((group_a, group_b, mi_sets(source, a, b, s)))
    return NondegeneracyReport(tuple(entries), threshold)


# ---- decomposition identities ------------------------------------------------


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    trials: int
    worst_violation: float
    failures: tuple[dict, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass(frozen=True)
class ChainIdentityReport:
    checks: tuple[IdentityCheck, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> IdentityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise StructuralError(f"no identity check named {name!r}")


def _draw_disjoint_pair(rng: np.random.Generator, m: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    while True:
        assignment = rng.integers(0, 3, size=m)
        a = tuple(i + 1 for i in range(m) if assignment[i] == 0)
        b = tuple(i + 1 for i in range(m) if assignment[i] == 1)
        if a and b:
            return a, b


def verify_chain_identities(aug: AugmentedPmf, trials: int = 200,
                            tol: float = ACTIVE_TOL, seed: int = 0) -> ChainIdentityReport:
    """Randomized numeric check of the decomposition identities of g.

    Each trial draws disjoint nonempty groups I, I', a superset group for
    the restricted variant, a random element order, and a split point m,
    then evaluates:

    * ``condition-drop-split``: dropping Z_I' from the conditioning of
      g's numerator costs exactly I(Z_I; Z_I' | Z_{(I u I')^c}, S);
    * ``disjoint-union-split``: g over I u I' splits into an I-term
      conditioned on (I u I')^c and the plain g(I');
    * ``restricted-union-split``: the same split inside an arbitrary
      superset group, with outside variables marginalized out;
    * ``element-peel-chain``: g(I) telescopes into single-element terms,
      each conditioned on everything except the not-yet-peeled elements;
    * ``prefix-chain`` / ``suffix-chain``: the telescoping specialized to
      prefixes 1..m and suffixes m+1..M of the natural order;
    * ``corner-sum-bound``: g(I) <= sum over I of the natural-order corner
      rates (superadditivity; checked as an inequality).

    Equalities must hold within ``tol``; the report records the worst
    violation and full counterexamples for anything beyond it.
    """
    if trials < 1:
        raise StructuralError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    m = aug.m
    full = tuple(range(1, m + 1))
    names = (
        "condition-drop-split",
        "disjoint-union-split",
        "restricted-union-split",
        "element-peel-chain",
        "prefix-chain",
        "suffix-chain",
        "corner-sum-bound",
    )
    worst = {n: 0.0 for n in names}
    failures: dict[str, list[dict]] = {n: [] for n in names}
    counts = {n: 0 for n in names}

    corner_rates = {i: _mi_xz(aug, (i,), tuple(range(1, i))) for i in full}

    def record(name: str, violation: float, context: dict) -> None:
        counts[name] += 1
        if violation > worst[name]:
            worst[name] = violation
        if violation > tol:
            failures[name].append({"violation": violation, **context})

    for _ in range(trials):
        if m >= 2:
            ga, gb = _draw_disjoint_pair(rng, m)
            union = tuple(sorted(ga + gb))
            comp_union = tuple(i for i in full if i not in union)
            comp_a = tuple(i for i in full if i not in ga)
            comp_b = tuple(i for i in full if i not in gb)

            lhs = _mi_xz(aug, ga, comp_union)
            rhs = _mi_xz(aug, ga, comp_a) + _mi_zz(aug, ga, gb, comp_union)
            record("condition-drop-split", abs(lhs - rhs), {"I": ga, "I2": gb})

            lhs = _mi_xz(aug, union, comp_union)
            rhs = _mi_xz(aug, ga, comp_union) + _mi_xz(aug, gb, comp_b)
            record("disjoint-union-split", abs(lhs - rhs), {"I": ga, "I2": gb})

            outside = [i for i in full if i not in union]
            chosen = [i for i in outside if rng.integers(0, 2)]
            sup = tuple(sorted(union + tuple(chosen)))
            sup_minus_union = tuple(i for i in sup if i not in union)
            sup_minus_b = tuple(i for i in sup if i not in gb)
            lhs = _mi_xz(aug, union, sup_minus_union)
            rhs = _mi_xz(aug, ga, sup_minus_union) + _mi_xz(aug, gb, sup_minus_b)
            record("restricted-union-split", abs(lhs - rhs),
                   {"I": ga, "I2": gb, "superset": sup})

        size = int(rng.integers(1, m + 1))
        members = [int(x) + 1 for x in rng.choice(m, size=size, replace=False)]
        group = tuple(sorted(members))
        order = list(members)
        rng.shuffle(order)
        lhs = rate_lhs(aug, group)
        rhs = 0.0
        for pos, elem in enumerate(order):
            not_yet_peeled = set(order[pos:])
            cond = tuple(i for i in full if i not in not_yet_peeled)
            rhs += _mi_xz(aug, (elem,), cond)
        record("element-peel-chain", abs(lhs - rhs), {"I": group, "order": tuple(order)})

        rhs_single = sum(corner_rates[i] for i in group)
        record("corner-sum-bound", max(0.0, lhs - rhs_single), {"I": group})

        split = int(rng.integers(1, m + 1))
        prefix = tuple(range(1, split + 1))
        lhs = _mi_xz(aug, prefix, ())
        rhs = sum(corner_rates[i] for i in prefix)
        record("prefix-chain", abs(lhs - rhs), {"m": split})

        if split < m:
            suffix = tuple(range(split + 1, m + 1))
            lhs = _mi_xz(aug, suffix, prefix)
            rhs = sum(corner_rates[i] for i in suffix)
            record("suffix-chain", abs(lhs - rhs), {"m": split})

    checks = tuple(
        IdentityCheck(n, counts[n], worst[n], tuple(failures[n])) for n in names
    )
    return ChainIdentityReport(checks, tol)
