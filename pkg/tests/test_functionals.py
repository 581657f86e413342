from __future__ import annotations

import itertools

import numpy as np
import pytest

from canonical_region import (
    Direction,
    Estimator,
    FunctionalContext,
    StructuralError,
    attach_channels,
    constant_channel,
    corner_point,
    direct_weighted_value,
    distortion_component,
    entropy,
    estimator_distortion,
    forward_to_reverse,
    identity_channel,
    mi_sets,
    observation_axes,
    phi,
    phi_parts,
    psi,
    random_channels,
    random_direction,
    theta,
    verify_linear_decomposition,
)
from canonical_region.functionals import check_simplex_point
from conftest import make_spec


def test_direction_validation():
    d = Direction(2, 0, 1, np.array([0.6, 0.8]) / np.sqrt(2.0),
                  np.array([1.0]) / np.sqrt(2.0))
    assert abs(np.linalg.norm(d.coords) - 1.0) < 1e-12
    with pytest.raises(StructuralError):
        Direction(2, 0, 1, np.array([1.0, 1.0]), np.array([1.0]))  # not unit norm
    with pytest.raises(StructuralError):
        Direction(2, 0, 1, np.array([1.0]), np.array([0.0]))       # wrong shape
    with pytest.raises(StructuralError):
        Direction.normalized(2, 0, 1, [1.0, -1.0, 0.5])
    with pytest.raises(StructuralError):
        Direction.normalized(2, 0, 1, [0.0, 0.0, 0.0])
    d = Direction.normalized(2, 1, 2, [3.0, 0.0, 4.0])
    assert abs(d.rate_weight(2) - 0.6) < 1e-12
    assert abs(d.distortion_weight(2) - 0.8) < 1e-12
    with pytest.raises(StructuralError):
        d.rate_weight(1)                                           # lossless side
    with pytest.raises(StructuralError):
        d.distortion_weight(3)
    rng = np.random.default_rng(0)
    r = random_direction(3, 1, 2, rng)
    assert abs(np.linalg.norm(r.coords) - 1.0) < 1e-12
    assert r.coords.min() >= 0.0


def test_check_simplex_point():
    assert np.allclose(check_simplex_point([0.25, 0.75], 2), [0.25, 0.75])
    with pytest.raises(StructuralError):
        check_simplex_point([0.25, 0.75], 3)
    with pytest.raises(StructuralError):
        check_simplex_point([0.6, 0.6], 2)
    with pytest.raises(StructuralError):
        check_simplex_point([-0.2, 1.2], 2)


def test_bayes_distortion_extreme_channels(bwz):
    ident = attach_channels(bwz, [identity_channel(bwz.x_alphabets[0])])
    value, est = distortion_component(ident, 1)
    assert abs(value) < 1e-12
    assert est.u_axes == ("Z1", "S")
    const = attach_channels(bwz, [constant_channel(bwz.x_alphabets[0])])
    value, _ = distortion_component(const, 1)
    assert abs(value - 0.25) < 1e-12


def test_bayes_matches_exhaustive_tables(bwz):
    aug = attach_channels(bwz, [identity_channel(bwz.x_alphabets[0])])
    # oracle first: evaluate all 16 deterministic tables by plain loops
    joint = aug.joint.probs                  # axes X1 S V Z1
    m_zsv = np.zeros((2, 2, 2))
    for x in range(2):
        for s in range(2):
            for v in range(2):
                for z in range(2):
                    m_zsv[z, s, v] += joint[x, s, v, z]
    dtab = bwz.distortions[0]
    best = np.inf
    values = {}
    for flat in itertools.product(range(2), repeat=4):
        table = np.array(flat).reshape(2, 2)
        val = 0.0
        for z in range(2):
            for s in range(2):
                for v in range(2):
                    val += m_zsv[z, s, v] * dtab[v, table[z, s]]
        values[flat] = val
        best = min(best, val)
    value, est = distortion_component(aug, 1)
    assert abs(value - best) < 1e-12
    assert abs(estimator_distortion(aug, 1, est.table) - value) < 1e-12
    # and every explicit table is reproduced, not just the optimum
    for flat, val in values.items():
        table = np.array(flat).reshape(2, 2)
        assert abs(estimator_distortion(aug, 1, table) - val) < 1e-12


def test_random_tables_never_beat_bayes():
    rng = np.random.default_rng(50)
    spec = make_spec(rng, m=2, j=1, l=2)
    aug = attach_channels(spec, random_channels(spec, rng))
    for l in (1, 2):
        value, est = distortion_component(aug, l)
        assert abs(estimator_distortion(aug, l, est.table) - value) < 1e-12
        vhat = spec.vhat_alphabets[l - 1].size
        for _ in range(50):
            table = rng.integers(0, vhat, size=est.table.shape)
            assert estimator_distortion(aug, l, table) >= value - 1e-12


def test_estimator_validation():
    with pytest.raises(StructuralError):
        Estimator(1, ("Z1",), np.array([0, 2]), vhat_size=2)
    with pytest.raises(StructuralError):
        Estimator(1, ("Z1",), np.array([0, 1]), vhat_size=0)
    rng = np.random.default_rng(51)
    spec = make_spec(rng, m=1, j=0, l=1)
    aug = attach_channels(spec, random_channels(spec, rng))
    with pytest.raises(StructuralError):
        distortion_component(aug, 2)
    with pytest.raises(StructuralError):
        estimator_distortion(aug, 1, np.zeros((1, 1), dtype=int))


def test_observation_axes_layout():
    rng = np.random.default_rng(52)
    spec = make_spec(rng, m=3, j=1, l=1)
    assert observation_axes(spec) == ("X1", "Z2", "Z3", "S")


def test_phi_first_part_constant_at_own_slot():
    rng = np.random.default_rng(53)
    spec = make_spec(rng, m=3, j=1, l=1)
    chans = random_channels(spec, rng)
    slots = spec.channel_slots
    k = 3
    frozen = {kk: ch for kk, ch in zip(slots, chans) if kk != k}
    ctx = FunctionalContext(spec, k, frozen)
    # oracle: the constant from the full augmented joint (slot k attached too)
    aug = attach_channels(spec, chans)
    cond = aug.joint.varset("X1", "Z2", "S")
    expected = entropy(aug.joint, aug.joint.varset("X3"), cond)
    n = spec.x_alphabets[k - 1].size
    seen = []
    for _ in range(10):
        t = rng.dirichlet(np.ones(n))
        part1, _ = phi_parts(ctx, k, t)
        seen.append(part1)
    assert np.ptp(seen) < 1e-12
    assert abs(seen[0] - expected) < 1e-10


def test_phi_mixture_reproduces_rates():
    rng = np.random.default_rng(54)
    spec = make_spec(rng, m=3, j=1, l=1)
    chans = random_channels(spec, rng)
    slots = spec.channel_slots             # (2, 3)
    aug = attach_channels(spec, chans)
    k = 2
    frozen = {kk: ch for kk, ch in zip(slots, chans) if kk != k}
    ctx = FunctionalContext(spec, k, frozen)
    pair = forward_to_reverse(spec, k, chans[0])
    for i in (2, 3):
        # oracle first: the rate straight off the augmented joint
        cond_names = ["X1"] + [f"Z{t}" for t in range(2, i)] + ["S"]
        expected = mi_sets(
            aug.joint,
            aug.joint.varset(f"X{i}"),
            aug.joint.varset(f"Z{i}"),
            aug.joint.varset(*cond_names),
        )
        mixed = sum(
            pair.weights[z] * phi(ctx, i, pair.columns[z])
            for z in range(pair.out_size)
        )
        assert abs(mixed - expected) < 1e-9


def test_psi_mixture_reproduces_distortion():
    rng = np.random.default_rng(55)
    spec = make_spec(rng, m=2, j=0, l=2)
    chans = random_channels(spec, rng)
    aug = attach_channels(spec, chans)
    k = 1
    ctx = FunctionalContext(spec, k, {2: chans[1]})
    pair = forward_to_reverse(spec, k, chans[0])
    for l in (1, 2):
        expected = distortion_component(aug, l)[0]
        mixed = sum(
            pair.weights[z] * psi(ctx, l, pair.columns[z])
            for z in range(pair.out_size)
        )
        assert abs(mixed - expected) < 1e-9


def test_psi_is_concave():
    rng = np.random.default_rng(56)
    spec = make_spec(rng, m=1, j=0, l=1)
    ctx = FunctionalContext(spec, 1, {})
    n = spec.x_alphabets[0].size
    for _ in range(30):
        t1 = rng.dirichlet(np.ones(n))
        t2 = rng.dirichlet(np.ones(n))
        lam = float(rng.uniform())
        mix = lam * t1 + (1.0 - lam) * t2
        assert psi(ctx, 1, mix) >= lam * psi(ctx, 1, t1) + (1 - lam) * psi(ctx, 1, t2) - 1e-12


def test_theta_requires_direction_and_matches_manual_sum():
    rng = np.random.default_rng(57)
    spec = make_spec(rng, m=3, j=0, l=1)
    chans = random_channels(spec, rng)
    slots = spec.channel_slots
    k = 2
    frozen = {kk: ch for kk, ch in zip(slots, chans) if kk != k}
    bare = FunctionalContext(spec, k, frozen)
    n = spec.x_alphabets[k - 1].size
    t = rng.dirichlet(np.ones(n))
    with pytest.raises(StructuralError):
        theta(bare, t)
    d = random_direction(3, 0, 1, rng)
    ctx = FunctionalContext(spec, k, frozen, d)
    manual = (
        d.rate_weight(1) * ctx.rate_constant(1)
        + d.rate_weight(2) * phi(ctx, 2, t)
        + d.rate_weight(3) * phi(ctx, 3, t)
        + d.distortion_weight(1) * psi(ctx, 1, t)
    )
    assert abs(theta(ctx, t) - manual) < 1e-12


def test_functional_context_validation():
    rng = np.random.default_rng(58)
    spec = make_spec(rng, m=2, j=1, l=1)
    chans = random_channels(spec, rng)
    with pytest.raises(StructuralError):
        FunctionalContext(spec, 1, {})             # slot 1 is lossless
    with pytest.raises(StructuralError):
        FunctionalContext(spec, 2, {2: chans[0]})  # frozen must exclude k
    d = random_direction(3, 0, 1, rng)
    with pytest.raises(StructuralError):
        FunctionalContext(spec, 2, {}, d)          # direction shape mismatch
    ctx = FunctionalContext(spec, 2, {})
    with pytest.raises(StructuralError):
        phi(ctx, 1, np.ones(2) / 2)                # i < k has no functional
    with pytest.raises(StructuralError):
        psi(ctx, 2, np.ones(spec.x_alphabets[1].size) / spec.x_alphabets[1].size)
    with pytest.raises(StructuralError):
        ctx.rate_constant(2)


def test_decomposition_holds_across_shapes(dsbs):
    rng = np.random.default_rng(59)
    for trial in range(8):
        spec = make_spec(rng, l=int(rng.integers(0, 3)))
        chans = random_channels(spec, rng)
        if spec.m == spec.j and spec.l == 0:
            continue                                # no objective terms at all
        d = random_direction(spec.m, spec.j, spec.l, rng)
        report = verify_linear_decomposition(spec, chans, d)
        assert report.passed
        assert report.worst_error <= 1e-9
        assert len(report.entries) == len(spec.channel_slots)
    # vacuous case: every source lossless, nothing to optimize per slot
    spec = make_spec(rng, m=2, j=2, l=1)
    d = random_direction(2, 2, 1, rng)
    report = verify_linear_decomposition(spec, [], d)
    assert report.passed and report.entries == ()
    with pytest.raises(StructuralError):
        verify_linear_decomposition(dsbs, [], random_direction(2, 0, 1, rng))


def test_direct_weighted_value_composition(dsbs):
    rng = np.random.default_rng(60)
    chans = random_channels(dsbs, rng)
    d = random_direction(2, 0, 1, rng)
    aug = attach_channels(dsbs, chans)
    rates = corner_point(aug, (1, 2))
    expected = (
        d.rate_weight(1) * rates[0]
        + d.rate_weight(2) * rates[1]
        + d.distortion_weight(1) * distortion_component(aug, 1)[0]
    )
    assert abs(direct_weighted_value(dsbs, chans, d) - expected) < 1e-12
