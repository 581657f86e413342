from __future__ import annotations

import math

import numpy as np
import pytest

from canonical_region import (
    BudgetError,
    PreconditionError,
    ProblemSpec,
    StructuralError,
    attach_channels,
    check_permutation,
    constant_channel,
    corner_point,
    distinct_count,
    entropy,
    enumerate_extreme_points,
    expected_active_groups,
    identity_channel,
    identity_permutation,
    membership,
    nondegeneracy_report,
    random_channels,
    rate_lhs,
    source_nondegeneracy_report,
    verify_chain_identities,
    verify_noncrossing,
)
from conftest import make_spec


def loop_entropy_of(arr, keep_axes):
    # reference entropy of a marginal, plain python accumulation
    drop = tuple(i for i in range(arr.ndim) if i not in keep_axes)
    marg = arr.sum(axis=drop) if drop else arr
    total = 0.0
    for v in np.asarray(marg).ravel():
        if v > 0.0:
            total -= v * math.log2(v)
    return total


def loop_cmi(arr, a, b, c):
    ha_c = loop_entropy_of(arr, tuple(a) + tuple(c))
    hb_c = loop_entropy_of(arr, tuple(b) + tuple(c))
    hab_c = loop_entropy_of(arr, tuple(a) + tuple(b) + tuple(c))
    hc = loop_entropy_of(arr, tuple(c))
    return ha_c + hb_c - hab_c - hc


def test_permutation_helpers():
    assert identity_permutation(3) == (1, 2, 3)
    assert check_permutation([3, 1, 2], 3) == (3, 1, 2)
    with pytest.raises(StructuralError):
        check_permutation([1, 1], 2)
    with pytest.raises(StructuralError):
        check_permutation([0, 1], 2)


def test_rate_lhs_validation():
    rng = np.random.default_rng(0)
    spec = make_spec(rng, m=2, j=0, l=1)
    aug = attach_channels(spec, random_channels(spec, rng))
    with pytest.raises(StructuralError):
        rate_lhs(aug, [])
    with pytest.raises(StructuralError):
        rate_lhs(aug, [3])


def test_identity_channels_corner_is_entropy_chain():
    rng = np.random.default_rng(31)
    spec = make_spec(rng, m=3, j=0, l=1)
    aug = attach_channels(spec, [identity_channel(a) for a in spec.x_alphabets])
    for perm in [(1, 2, 3), (3, 1, 2), (2, 3, 1)]:
        # oracle first, from the source law alone: H(X_t | X_prefix, S)
        src = spec.source
        expected = np.zeros(3)
        for pos, target in enumerate(perm):
            given = src.varset(*(f"X{i}" for i in perm[:pos]), "S")
            expected[target - 1] = entropy(src, src.varset(f"X{target}"), given)
        got = corner_point(aug, perm)
        assert np.abs(got - expected).max() < 1e-10


def test_constant_channels_collapse_to_zero():
    rng = np.random.default_rng(32)
    spec = make_spec(rng, m=2, j=0, l=1)
    aug = attach_channels(spec, [constant_channel(a) for a in spec.x_alphabets])
    points = enumerate_extreme_points(aug)
    assert len(points) == 2
    for _, r in points:
        assert np.abs(r).max() < 1e-9
    report = membership(aug, np.zeros(2))
    assert report.is_member
    assert distinct_count(points) == 1
    assert nondegeneracy_report(aug).degenerate


def test_two_source_membership_against_direct_formula():
    rng = np.random.default_rng(33)
    spec = make_spec(rng, m=2, j=0, l=1, max_alphabet=2)
    chans = random_channels(spec, rng)
    aug = attach_channels(spec, chans)
    arr = aug.joint.probs          # axes X1 X2 S V Z1 Z2
    # oracle first: the three group bounds via raw four-entropy sums
    g1 = loop_cmi(arr, (0,), (4,), (5, 2))
    g2 = loop_cmi(arr, (1,), (5,), (4, 2))
    g12 = loop_cmi(arr, (0, 1), (4, 5), (2,))
    assert abs(rate_lhs(aug, [1]) - g1) < 1e-10
    assert abs(rate_lhs(aug, [2]) - g2) < 1e-10
    assert abs(rate_lhs(aug, [1, 2]) - g12) < 1e-10
    # corners telescope g along the two orders
    assert np.abs(corner_point(aug, (1, 2)) - [g12 - g2, g2]).max() < 1e-10
    assert np.abs(corner_point(aug, (2, 1)) - [g1, g12 - g1]).max() < 1e-10
    # membership agrees with the three explicit inequalities
    hi = 1.3 * max(g12, 1e-3)
    for _ in range(200):
        r = rng.uniform(0.0, hi, size=2)
        expected = r[0] >= g1 - 1e-9 and r[1] >= g2 - 1e-9 and r[0] + r[1] >= g12 - 1e-9
        assert membership(aug, r).is_member == expected


def test_membership_validation_and_order():
    rng = np.random.default_rng(34)
    spec = make_spec(rng, m=2, j=0, l=1)
    aug = attach_channels(spec, random_channels(spec, rng))
    with pytest.raises(StructuralError):
        membership(aug, np.zeros(3))
    with pytest.raises(StructuralError):
        membership(aug, np.array([-0.5, 1.0]))
    report = membership(aug, np.full(2, 10.0))
    assert [e.group for e in report.entries] == [(1,), (2,), (1, 2)]
    assert report.entry((2, 1)).group == (1, 2)
    with pytest.raises(StructuralError):
        report.entry((3,))


def test_corner_active_sets_are_the_suffix_chain():
    rng = np.random.default_rng(35)
    spec = make_spec(rng, m=3, j=1, l=1)
    chans = random_channels(spec, rng)
    aug = attach_channels(spec, chans)
    nondegenerate = not nondegeneracy_report(aug).degenerate
    for perm, rates in enumerate_extreme_points(aug):
        report = membership(aug, rates)
        assert report.is_member
        expected = set(expected_active_groups(perm))
        got = set(report.active_groups)
        assert expected <= got
        if nondegenerate:
            assert expected == got
        assert verify_noncrossing(aug, rates)


def test_expected_active_groups_explicit():
    assert expected_active_groups((2, 1, 3)) == ((1, 2, 3), (1, 3), (3,))
    assert expected_active_groups((1,)) == ((1,),)


def test_corner_perturbation_leaves_region():
    rng = np.random.default_rng(36)
    spec = make_spec(rng, m=2, j=0, l=1)
    aug = attach_channels(spec, [identity_channel(a) for a in spec.x_alphabets])
    perm = (1, 2)
    corner = corner_point(aug, perm)
    assert corner[1] > 1e-2            # seed chosen so the last rate is not tiny
    shaved = corner.copy()
    shaved[1] -= 1e-3
    assert not membership(aug, shaved).is_member
    with pytest.raises(PreconditionError):
        verify_noncrossing(aug, shaved)


def test_interior_point_has_no_active_groups():
    rng = np.random.default_rng(37)
    spec = make_spec(rng, m=2, j=0, l=1)
    aug = attach_channels(spec, random_channels(spec, rng))
    inside = corner_point(aug, (1, 2)) + 0.1
    report = membership(aug, inside)
    assert report.is_member and report.active_groups == ()
    assert verify_noncrossing(aug, inside)


def test_enumeration_budget():
    m = 7
    shape = (2,) * m + (1, 2)
    rng = np.random.default_rng(38)
    probs = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    spec = ProblemSpec(m, m, 0, [2] * m, 1, 2, [], probs, [])
    aug = attach_channels(spec, [])
    with pytest.raises(BudgetError):
        enumerate_extreme_points(aug)
    # membership itself stays available past the enumeration budget
    assert membership(aug, np.full(m, 10.0)).is_member


def test_product_source_degenerates_every_bank():
    rng = np.random.default_rng(39)
    p1 = rng.dirichlet(np.ones(2))
    p2 = rng.dirichlet(np.ones(2))
    probs = np.zeros((2, 2, 1, 2))
    for x1 in range(2):
        for x2 in range(2):
            probs[x1, x2, 0, x1 ^ x2] = p1[x1] * p2[x2]
    spec = ProblemSpec(2, 0, 1, [2, 2], 1, 2, [2],
                       probs, [[[0.0, 1.0], [1.0, 0.0]]])
    assert source_nondegeneracy_report(spec.source, 2).degenerate
    aug = attach_channels(spec, random_channels(spec, rng))
    assert nondegeneracy_report(aug).degenerate
    points = enumerate_extreme_points(aug)
    assert distinct_count(points) == 1
    g1 = rate_lhs(aug, [1])
    g2 = rate_lhs(aug, [2])
    assert abs(rate_lhs(aug, [1, 2]) - (g1 + g2)) < 1e-9


def test_source_preflight_keeps_markov_sources():
    # X2 a noisy copy of X1: dependent given trivial S, so not flagged
    q = np.array([[0.8, 0.2], [0.3, 0.7]])
    p1 = np.array([0.6, 0.4])
    probs = np.zeros((2, 2, 1, 2))
    for x1 in range(2):
        for x2 in range(2):
            probs[x1, x2, 0, x1] = p1[x1] * q[x1, x2]
    spec = ProblemSpec(2, 0, 0, [2, 2], 1, 2, [], probs, [])
    report = source_nondegeneracy_report(spec.source, 2)
    assert not report.degenerate
    assert report.min_value > 1e-3


def test_chain_identities_pass_on_random_instances():
    rng = np.random.default_rng(40)
    expected_names = {
        "condition-drop-split", "disjoint-union-split", "restricted-union-split",
        "element-peel-chain", "prefix-chain", "suffix-chain", "corner-sum-bound",
    }
    for m in (1, 2, 3):
        spec = make_spec(rng, m=m, l=1)
        aug = attach_channels(spec, random_channels(spec, rng))
        report = verify_chain_identities(aug, trials=40, seed=m)
        assert report.passed
        assert {c.name for c in report.checks} == expected_names
        for check in report.checks:
            assert check.worst_violation <= 1e-9
            if m >= 2 or check.name in (
                "element-peel-chain", "prefix-chain", "corner-sum-bound",
            ):
                assert check.trials > 0
        assert report.check("prefix-chain").passed
        with pytest.raises(StructuralError):
            report.check("no-such-identity")
    with pytest.raises(StructuralError):
        verify_chain_identities(aug, trials=0)


def test_corner_sum_rate_is_permutation_invariant():
    rng = np.random.default_rng(41)
    spec = make_spec(rng, m=3, j=0, l=1)
    aug = attach_channels(spec, random_channels(spec, rng))
    full = rate_lhs(aug, range(1, 4))
    for _, rates in enumerate_extreme_points(aug):
        assert abs(float(rates.sum()) - full) < 1e-9
