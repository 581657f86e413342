"""Per-channel objective functionals on the input simplex.

Fix a channel slot k and freeze the channels of every other slot.  Any
candidate channel for slot k can be written in reverse form: output
weights ``p'(z)`` and reverse conditionals ``t_z = q'(. | z)``, points of
the simplex over ``X_k`` mixing back to the source marginal ``p_k``.
The central fact exploited by the optimizer is that every term of the
weighted rate-distortion objective is such a mixture

    sum_z p'(z) * F(t_z)

of a fixed functional F evaluated at the reverse columns:

* ``phi(ctx, i, t)`` covers the rate of description ``i >= k``.  It is a
  difference ``phi1 - phi2`` of mixture-entropy expressions built from
  the conditionals ``r(x_i, u | x_k)`` of the frozen-channel joint, where
  ``u`` collects the lossless sources, the earlier descriptions (without
  ``Z_k``), and S; ``phi2`` extends ``u`` with ``Z_i``.  For ``i = k``
  the first expression degenerates to the constant
  ``H(X_k | X_{1..J}, Z_{J+1..k-1}, S)`` independent of ``t`` (the
  mechanical formula would be wrong there), while the second uses the
  diagonal conditional ``r(x_i, u | x_k) = [x_i = x_k] r(u | x_k)``.
* ``psi(ctx, l, t)`` covers distortion measure l: the Bayes-optimal
  expected distortion of reconstructing V from the full observation
  tuple, concave in ``t`` as a sum of pointwise minima of linear maps.
* ``theta(ctx, t)`` combines them along a direction of nonnegative
  weights over the free rates and the distortions.  Rate terms of
  descriptions ``i < k`` do not depend on slot k's channel at all and
  enter as precomputed constants, so the mixture of theta over a reverse
  pair reproduces the full weighted objective exactly.

:func:`verify_linear_decomposition` checks that reproduction numerically
for every slot.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .augment import (
    AugmentedPmf,
    Channel,
    ProblemSpec,
    attach_channels,
    forward_to_reverse,
)
from .errors import StructuralError
from .pmf import JointPmf, entropy, mi_sets
from .region import corner_point, identity_permutation

SIMPLEX_TOL = 1e-9
DECOMPOSITION_TOL = 1e-9


def check_simplex_point(t, size: int) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape != (size,):
        raise StructuralError(f"simplex point has shape {t.shape}, expected ({size},)")
    if not np.all(np.isfinite(t)) or t.min(initial=0.0) < -1e-12:
        raise StructuralError("simplex point entries must be finite and >= 0")
    if abs(float(t.sum()) - 1.0) > SIMPLEX_TOL:
        raise StructuralError(f"simplex point mass {t.sum()!r} is not 1")
    return np.maximum(t, 0.0)


@dataclass(frozen=True, eq=False)
class Direction:
    """Nonnegative weights over the free rates and distortions, unit 2-norm.

    ``rate_weights[idx]`` weighs the rate of description ``j + 1 + idx``;
    descriptions ``1..j`` are lossless and carry no weight.
    """

    m: int
    j: int
    l: int
    rate_weights: np.ndarray = field(repr=False)
    distortion_weights: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        rates = np.array(self.rate_weights, dtype=float)
        dists = np.array(self.distortion_weights, dtype=float)
        if rates.shape != (self.m - self.j,) or dists.shape != (self.l,):
            raise StructuralError(
                f"direction needs {self.m - self.j} rate and {self.l} distortion "
                f"weights, got shapes {rates.shape}, {dists.shape}"
            )
        coords = np.concatenate([rates, dists])
        if not np.all(np.isfinite(coords)) or coords.min(initial=0.0) < 0.0:
            raise StructuralError("direction weights must be finite and >= 0")
        norm = float(np.linalg.norm(coords))
        if abs(norm - 1.0) > 1e-12:
            raise StructuralError(f"direction must have unit 2-norm, got {norm!r}")
        rates.setflags(write=False)
        dists.setflags(write=False)
        object.__setattr__(self, "rate_weights", rates)
        object.__setattr__(self, "distortion_weights", dists)

    @classmethod
    def normalized(cls, m: int, j: int, l: int, raw) -> "Direction":
        raw = np.asarray(raw, dtype=float)
        if raw.shape != (m - j + l,):
            raise StructuralError(
                f"direction needs {m - j + l} coordinates, got shape {raw.shape}"
            )
        if not np.all(np.isfinite(raw)) or raw.min(initial=0.0) < 0.0:
            raise StructuralError("direction weights must be finite and >= 0")
        norm = float(np.linalg.norm(raw))
        if norm <= 0.0:
            raise StructuralError("direction must have a positive coordinate")
        unit = raw / norm
        return cls(m, j, l, unit[: m - j], unit[m - j:])

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.rate_weights, self.distortion_weights])

    def rate_weight(self, i: int) -> float:
        if not self.j + 1 <= i <= self.m:
            raise StructuralError(f"description {i} has no free rate weight")
        return float(self.rate_weights[i - self.j - 1])

    def distortion_weight(self, l: int) -> float:
        if not 1 <= l <= self.l:
            raise StructuralError(f"distortion index {l} outside 1..{self.l}")
        return float(self.distortion_weights[l - 1])


def random_direction(m: int, j: int, l: int, rng: np.random.Generator) -> Direction:
    while True:
        raw = np.abs(rng.normal(size=m - j + l))
        if np.linalg.norm(raw) > 1e-3:
            return Direction.normalized(m, j, l, raw)


# ---- distortion side ---------------------------------------------------------


def observation_axes(spec: ProblemSpec) -> tuple[str, ...]:
    """Decoder observables feeding every estimator: lossless X's, all Z's, S."""
    names = [f"X{i}" for i in range(1, spec.j + 1)]
    names += [f"Z{k}" for k in spec.channel_slots]
    names.append("S")
    return tuple(names)


@dataclass(frozen=True, eq=False)
class Estimator:
    """A deterministic reconstruction table for one distortion measure.

    ``table[u]`` is the chosen symbol of ``Vhat_l`` for each tuple ``u``
    over ``u_axes``.  Ties in expected distortion break toward the lowest
    symbol index, and zero-probability tuples map to symbol 0, so the
    table is a deterministic function of the augmented joint.
    """

    l: int
    u_axes: tuple[str, ...]
    table: np.ndarray = field(repr=False)
    vhat_size: int = 0

    def __post_init__(self) -> None:
        tab = np.array(self.table, dtype=int)
        if self.vhat_size < 1:
            raise StructuralError("estimator needs vhat_size >= 1")
        if tab.min(initial=0) < 0 or tab.max(initial=0) >= self.vhat_size:
            raise StructuralError("estimator table entries outside the target alphabet")
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)


def _observation_law(aug: AugmentedPmf) -> np.ndarray:
    names = list(observation_axes(aug.spec)) + ["V"]
    return aug.joint.marginal(names)


def distortion_component(aug: AugmentedPmf, l: int) -> tuple[float, Estimator]:
    """Bayes-optimal expected distortion for measure l, with its estimator.

    For each observable tuple the decoder picks the reconstruction symbol
    minimizing conditional expected distortion; the returned value sums
    those minima against the joint law.
    """
    spec = aug.spec
    if not 1 <= l <= spec.l:
        raise StructuralError(f"distortion index {l} outside 1..{spec.l}")
    m_uv = _observation_law(aug)                       # (*u, v)
    d = spec.distortions[l - 1]                        # (v, vhat)
    scores = np.tensordot(m_uv, d, axes=([-1], [0]))   # (*u, vhat)
    value = float(scores.min(axis=-1).sum())
    table = np.argmin(scores, axis=-1)
    est = Estimator(l, observation_axes(spec), table, vhat_size=d.shape[1])
    return value, est


def estimator_distortion(aug: AugmentedPmf, l: int, table: np.ndarray) -> float:
    """Expected distortion of an arbitrary reconstruction table for measure l."""
    spec = aug.spec
    if not 1 <= l <= spec.l:
        raise StructuralError(f"distortion index {l} outside 1..{spec.l}")
    m_uv = _observation_law(aug)
    d = spec.distortions[l - 1]
    tab = np.asarray(table, dtype=int)
    if tab.shape != m_uv.shape[:-1]:
        raise StructuralError(
            f"table shape {tab.shape} does not match observation axes {m_uv.shape[:-1]}"
        )
    picked = np.moveaxis(d[:, tab], 0, -1)             # (*u, v)
    return float((m_uv * picked).sum())


# ---- rate side ---------------------------------------------------------------


def _mixture_entropy(arr: np.ndarray) -> float:
    """-sum a log2 a over positive cells (the array need not sum to 1)."""
    flat = arr[arr > 0.0]
    return float(-(flat * np.log2(flat)).sum())


class FunctionalContext:
    """Everything needed to evaluate the slot-k functionals.

    Holds the spec, the slot index k, the frozen channels of every other
    slot, and optionally the direction (required by :func:`theta`) and the
    incumbent reverse columns (used by the optimizer's candidate pool).
    Precomputes the frozen-channel joint (the augmented law *without*
    slot k) and caches the conditional tensors each functional needs.
    """

    __slots__ = (
        "spec", "k", "frozen", "direction", "incumbent_columns",
        "base", "p_k", "_phi_cache", "_psi_cache", "_rate_const_cache",
    )

    def __init__(
        self,
        spec: ProblemSpec,
        k: int,
        frozen: Mapping[int, Channel],
        direction: Direction | None = None,
        incumbent_columns: np.ndarray | None = None,
    ) -> None:
        if k not in spec.channel_slots:
            raise StructuralError(f"slot {k} is not in {spec.channel_slots}")
        expected = set(spec.channel_slots) - {k}
        if set(frozen) != expected:
            raise StructuralError(
                f"frozen channels must cover slots {sorted(expected)}, got {sorted(frozen)}"
            )
        if direction is not None and (direction.m, direction.j, direction.l) != (
            spec.m, spec.j, spec.l,
        ):
            raise StructuralError("direction dimensions do not match the spec")

        arr = spec.source.probs
        axes = list(spec.source.axes)
        for kk in sorted(frozen):
            ch = frozen[kk]
            if ch.input != spec.x_alphabet(kk):
                raise StructuralError(
                    f"frozen channel for slot {kk} has input {ch.input}, "
                    f"expected {spec.x_alphabet(kk)}"
                )
            shape = [1] * arr.ndim + [ch.output.size]
            shape[kk - 1] = ch.input.size
            arr = arr[..., None] * ch.rows.reshape(shape)
            axes.append((f"Z{kk}", ch.output))

        self.spec = spec
        self.k = k
        self.frozen = dict(frozen)
        self.direction = direction
        self.base = JointPmf(axes, arr)
        self.p_k = spec.x_marginal(k)
        if incumbent_columns is not None:
            cols = np.array(incumbent_columns, dtype=float)
            if cols.ndim != 2 or cols.shape[1] != self.p_k.size:
                raise StructuralError(
                    f"incumbent columns have shape {cols.shape}, expected (*, {self.p_k.size})"
                )
            self.incumbent_columns = cols
        else:
            self.incumbent_columns = None
        self._phi_cache: dict[int, tuple] = {}
        self._psi_cache: dict[int, np.ndarray] = {}
        self._rate_const_cache: dict[int, float] = {}

    # conditioning tuple u for description i: lossless X's, earlier Z's
    # excluding Z_k (and including Z_i itself when include_zi), then S
    def _u_names(self, i: int, include_zi: bool) -> list[str]:
        hi = i if include_zi else i - 1
        names = [f"X{t}" for t in range(1, self.spec.j + 1)]
        names += [f"Z{t}" for t in range(self.spec.j + 1, hi + 1) if t != self.k]
        names.append("S")
        return names

    def _cond_given_xk(self, names: Sequence[str]) -> np.ndarray:
        """Array (x_k, *names) of conditionals given X_k; zero rows for p_k = 0."""
        m = self.base.marginal([f"X{self.k}"] + list(names))
        shape = (self.p_k.size,) + (1,) * (m.ndim - 1)
        pk = self.p_k.reshape(shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(pk > 0.0, m / np.where(pk > 0.0, pk, 1.0), 0.0)

    def _phi_tensors(self, i: int):
        data = self._phi_cache.get(i)
        if data is not None:
            return data
        u1 = self._u_names(i, include_zi=False)
        u2 = self._u_names(i, include_zi=True)
        if i == self.k:
            const = entropy(
                self.base,
                self.base.varset(f"X{self.k}"),
                self.base.varset(*u1),
            )
            cond = self._cond_given_xk(u2)             # u2 == u1 at i == k
            n = self.p_k.size
            a2 = np.zeros((n, n) + cond.shape[1:])
            for x in range(n):
                a2[x, x] = cond[x]
            data = (None, a2, const)
        else:
            a1 = self._cond_given_xk([f"X{i}"] + u1)   # (x_k, x_i, *u1)
            a2 = self._cond_given_xk([f"X{i}"] + u2)   # (x_k, x_i, *u2)
            data = (a1, a2, None)
        self._phi_cache[i] = data
        return data

    def _psi_tensor(self, l: int) -> np.ndarray:
        arr = self._psi_cache.get(l)
        if arr is None:
            u = self._u_names(self.spec.m, include_zi=True)
            arr = self._cond_given_xk(["V"] + u)       # (x_k, v, *u)
            self._psi_cache[l] = arr
        return arr

    def rate_constant(self, i: int) -> float:
        """Rate of description i < k; independent of slot k's channel."""
        if not self.spec.j + 1 <= i < self.k:
            raise StructuralError(f"description {i} is not a pre-k slot")
        value = self._rate_const_cache.get(i)
        if value is None:
            target = self.base.varset(f"X{i}")
            desc = self.base.varset(f"Z{i}")
            cond_names = [f"X{t}" for t in range(1, self.spec.j + 1)]
            cond_names += [f"Z{t}" for t in range(self.spec.j + 1, i)]
            cond_names.append("S")
            value = mi_sets(self.base, target, desc, self.base.varset(*cond_names))
            self._rate_const_cache[i] = value
        return value


def phi_parts(ctx: FunctionalContext, i: int, t) -> tuple[float, float]:
    """The two mixture-entropy expressions whose difference is phi.

    Defined for ``k <= i <= M`` only: descriptions before slot k do not
    depend on its channel and have no simplex functional.
    """
    if not ctx.k <= i <= ctx.spec.m:
        raise StructuralError(
            f"phi index {i} outside {ctx.k}..{ctx.spec.m} for slot {ctx.k}"
        )
    t = check_simplex_point(t, ctx.p_k.size)
    a1, a2, const = ctx._phi_tensors(i)
    if a1 is None:
        phi1 = const
    else:
        m1 = np.tensordot(t, a1, axes=(0, 0))          # (x_i, *u1)
        phi1 = _mixture_entropy(m1) - _mixture_entropy(m1.sum(axis=0))
    m2 = np.tensordot(t, a2, axes=(0, 0))              # (x_i, *u2)
    phi2 = _mixture_entropy(m2) - _mixture_entropy(m2.sum(axis=0))
    return float(phi1), float(phi2)


def phi(ctx: FunctionalContext, i: int, t) -> float:
    """Rate functional of description ``i >= k`` at simplex point ``t``."""
    phi1, phi2 = phi_parts(ctx, i, t)
    return phi1 - phi2


def psi(ctx: FunctionalContext, l: int, t) -> float:
    """Distortion functional for measure l at simplex point ``t``.

    Concave in ``t``: a sum over observable tuples of minima of linear
    functions of ``t``.
    """
    if not 1 <= l <= ctx.spec.l:
        raise StructuralError(f"distortion index {l} outside 1..{ctx.spec.l}")
    t = check_simplex_point(t, ctx.p_k.size)
    b = ctx._psi_tensor(l)
    mixed = np.tensordot(t, b, axes=(0, 0))            # (v, *u)
    d = ctx.spec.distortions[l - 1]
    scores = np.tensordot(mixed, d, axes=([0], [0]))   # (*u, vhat)
    return float(scores.min(axis=-1).sum())


def theta(ctx: FunctionalContext, t) -> float:
    """Direction-weighted objective contribution of one simplex point.

    Requires the context to carry a direction.  Mixing theta over a
    reverse pair's columns with its weights reproduces the full weighted
    objective: free-rate terms of descriptions ``i >= k`` and all
    distortion terms vary with ``t``, and terms of descriptions ``i < k``
    enter as channel-independent constants.
    """
    if ctx.direction is None:
        raise StructuralError("theta requires a FunctionalContext with a direction")
    t = check_simplex_point(t, ctx.p_k.size)
    total = 0.0
    for i in ctx.spec.channel_slots:
        weight = ctx.direction.rate_weight(i)
        if weight == 0.0:
            continue
        total += weight * (ctx.rate_constant(i) if i < ctx.k else phi(ctx, i, t))
    for l in range(1, ctx.spec.l + 1):
        weight = ctx.direction.distortion_weight(l)
        if weight != 0.0:
            total += weight * psi(ctx, l, t)
    return total


# ---- the mixture identity ----------------------------------------------------


def direct_weighted_value(spec: ProblemSpec, channels: Sequence[Channel],
                          direction: Direction) -> float:
    """The weighted objective evaluated directly on the augmented joint."""
    aug = attach_channels(spec, channels)
    rates = corner_point(aug, identity_permutation(spec.m))
    total = 0.0
    for i in spec.channel_slots:
        total += direction.rate_weight(i) * rates[i - 1]
    for l in range(1, spec.l + 1):
        weight = direction.distortion_weight(l)
        if weight != 0.0:
            total += weight * distortion_component(aug, l)[0]
    return float(total)


@dataclass(frozen=True)
class DecompositionEntry:
    k: int
    functional_value: float
    direct_value: float
    error: float
    passed: bool


@dataclass(frozen=True)
class DecompositionReport:
    entries: tuple[DecompositionEntry, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def worst_error(self) -> float:
        return max((e.error for e in self.entries), default=0.0)


def verify_linear_decomposition(
    spec: ProblemSpec,
    channels: Sequence[Channel],
    direction: Direction,
    tol: float = DECOMPOSITION_TOL,
) -> DecompositionReport:
    """Check the mixture identity for every slot.

    For each slot k, the weights/columns mixture of theta over slot k's
    reverse pair must equal the direct weighted objective of the full
    channel bank.  Disagreement beyond ``tol`` indicates a broken
    functional, not noise: both sides are finite sums of the same joint.
    """
    slots = spec.channel_slots
    if len(channels) != len(slots):
        raise StructuralError(f"expected {len(slots)} channels, got {len(channels)}")
    direct = direct_weighted_value(spec, channels, direction)
    entries = []
    for pos, k in enumerate(slots):
        frozen = {kk: ch for kk, ch in zip(slots, channels) if kk != k}
        ctx = FunctionalContext(spec, k, frozen, direction)
        pair = forward_to_reverse(spec, k, channels[pos])
        value = 0.0
        for z in range(pair.out_size):
            if pair.weights[z] > 0.0:
                value += pair.weights[z] * theta(ctx, pair.columns[z])
        err = abs(value - direct)
        entries.append(DecompositionEntry(k, value, direct, err, err <= tol))
    return DecompositionReport(tuple(entries), tol)
