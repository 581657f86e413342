"""Problem instances, test channels, and the augmented joint they induce.

A :class:`ProblemSpec` fixes the finite-alphabet setting: M source
variables ``X1..XM``, the first J of which are observed losslessly at the
decoder side (their coded description is the variable itself), a side
information variable ``S``, a reconstruction target ``V``, and L bounded
per-letter distortion tables mapping ``V x Vhat_l`` to costs.

The remaining sources ``k = J+1..M`` are quantized through memoryless
test channels ``q_k(z | x_k)``.  Attaching a full bank of channels to the
source law produces the augmented joint

    p(x_1..x_M, s, v) * prod_k q_k(z_k | x_k),

an ordinary :class:`~canonical_region.pmf.JointPmf` over axes
``X1..XM, S, V, Z_{J+1}..Z_M``, on which every downstream rate and
distortion quantity is evaluated.  For ``m <= J`` the description
variable is ``X_m`` itself; helpers here resolve that aliasing so callers
can speak uniformly of "description m".

A channel can equivalently be written as a mixture over its output
symbols: weights ``p'(z)`` and reverse conditionals ``q'(x | z)`` with
``sum_z p'(z) q'(x | z) = p_k(x)``.  That reverse form is the coordinate
the optimizer works in, so lossless conversion in both directions lives
here as well.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DegeneracyWarning,
    NumericIntegrityError,
    PreconditionError,
    StructuralError,
)
from .pmf import Alphabet, JointPmf, VarSet, cmi

ROW_TOL = 1e-12
MARGINAL_TOL = 1e-12
FACTORIZATION_TOL = 1e-10
MIXTURE_TOL = 1e-10
MIXTURE_INPUT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Channel:
    """A row-stochastic test channel from ``input`` symbols to ``output`` symbols."""

    input: Alphabet
    output: Alphabet
    rows: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.array(self.rows, dtype=float)
        if arr.shape != (self.input.size, self.output.size):
            raise StructuralError(
                f"channel matrix has shape {arr.shape}, expected "
                f"({self.input.size}, {self.output.size})"
            )
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0:
            raise StructuralError("channel matrix entries must be finite and >= 0")
        sums = arr.sum(axis=1)
        worst = float(np.abs(sums - 1.0).max())
        if worst > ROW_TOL:
            raise StructuralError(
                f"channel rows must each sum to 1 within {ROW_TOL}; worst error {worst:.3e}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "rows", arr)


def identity_channel(alphabet: Alphabet) -> Channel:
    """Noiseless channel: Z = X."""
    return Channel(alphabet, Alphabet(alphabet.label + "_copy", alphabet.size),
                   np.eye(alphabet.size))


def constant_channel(alphabet: Alphabet, out_size: int = 1) -> Channel:
    """Channel whose output carries no information (all rows identical)."""
    rows = np.zeros((alphabet.size, out_size))
    rows[:, 0] = 1.0
    return Channel(alphabet, Alphabet(alphabet.label + "_const", out_size), rows)


def random_channel(alphabet: Alphabet, out_size: int, rng: np.random.Generator) -> Channel:
    rows = rng.dirichlet(np.ones(out_size), size=alphabet.size)
    return Channel(alphabet, Alphabet(alphabet.label + "_rand", out_size), rows)


class ProblemSpec:
    """Validated, immutable description of one coding problem instance.

    Parameters
    ----------
    m, j, l:
        Number of sources, number of losslessly observed sources
        (``0 <= j <= m``), and number of distortion measures (``l >= 0``).
    x_sizes, s_size, v_size, vhat_sizes:
        Alphabet sizes.
    source_probs:
        Dense row-major tensor over ``(X1..XM, S, V)``.  Converted to
        exact rationals, normalized exactly, then lowered to float64, so
        a spec survives serialization round-trips bit-for-bit.
    distortions:
        One ``|V| x |Vhat_l|`` nonnegative table per measure; the bound
        ``d_max`` of each is simply its largest entry.
    exact_probs:
        Optional pre-parsed rationals overriding the float view of
        ``source_probs`` (used by the problem-file loader).
    """

    __slots__ = (
        "name", "notes", "m", "j", "l", "x_alphabets", "s_alphabet", "v_alphabet",
        "vhat_alphabets", "source", "source_fractions", "distortions",
    )

    def __init__(
        self,
        m: int,
        j: int,
        l: int,
        x_sizes: Sequence[int],
        s_size: int,
        v_size: int,
        vhat_sizes: Sequence[int],
        source_probs,
        distortions: Sequence,
        name: str = "",
        notes: str = "",
        exact_probs: Sequence[Fraction] | None = None,
    ) -> None:
        if not (isinstance(m, int) and m >= 1):
            raise StructuralError(f"M must be an integer >= 1, got {m!r}")
        if not (isinstance(j, int) and 0 <= j <= m):
            raise StructuralError(f"J must satisfy 0 <= J <= M; got J={j!r}, M={m}")
        if not (isinstance(l, int) and l >= 0):
            raise StructuralError(f"L must be an integer >= 0, got {l!r}")
        if len(x_sizes) != m:
            raise StructuralError(f"expected {m} source alphabet sizes, got {len(x_sizes)}")
        if len(vhat_sizes) != l:
            raise StructuralError(
                f"expected {l} reconstruction alphabet sizes, got {len(vhat_sizes)}"
            )
        if len(distortions) != l:
            raise StructuralError(f"expected {l} distortion tables, got {len(distortions)}")

        x_alphabets = tuple(Alphabet(f"X{i}", int(n)) for i, n in enumerate(x_sizes, start=1))
        s_alphabet = Alphabet("S", int(s_size))
        v_alphabet = Alphabet("V", int(v_size))
        vhat_alphabets = tuple(
            Alphabet(f"Vhat{i}", int(n)) for i, n in enumerate(vhat_sizes, start=1)
        )

        shape = tuple(a.size for a in x_alphabets) + (s_alphabet.size, v_alphabet.size)
        if exact_probs is not None:
            fracs = [Fraction(f) for f in exact_probs]
            if len(fracs) != int(np.prod(shape)):
                raise StructuralError(
                    f"expected {int(np.prod(shape))} probabilities, got {len(fracs)}"
                )
        else:
            arr = np.array(source_probs, dtype=float)
            if arr.shape != shape:
                raise StructuralError(
                    f"source tensor has shape {arr.shape}, expected {shape}"
                )
            fracs = [Fraction(float(x)) for x in arr.ravel()]
        if any(f < 0 for f in fracs):
            raise StructuralError("source probabilities must be nonnegative")
        total = sum(fracs)
        if total <= 0:
            raise StructuralError("source probabilities sum to zero")
        fracs = tuple(f / total for f in fracs)
        floats = np.array([float(f) for f in fracs]).reshape(shape)

        axes = [(a.label, a) for a in x_alphabets] + [("S", s_alphabet), ("V", v_alphabet)]
        source = JointPmf(axes, floats)

        tables = []
        for li, d in enumerate(distortions, start=1):
            t = np.array(d, dtype=float)
            if t.shape != (v_alphabet.size, vhat_alphabets[li - 1].size):
                raise StructuralError(
                    f"distortion table {li} has shape {t.shape}, expected "
                    f"({v_alphabet.size}, {vhat_alphabets[li - 1].size})"
                )
            if not np.all(np.isfinite(t)) or t.min(initial=0.0) < 0.0:
                raise StructuralError(
                    f"distortion table {li} must be finite and nonnegative"
                )
            t.setflags(write=False)
            tables.append(t)

        object.__setattr__(self, "name", str(name))
        object.__setattr__(self, "notes", str(notes))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "x_alphabets", x_alphabets)
        object.__setattr__(self, "s_alphabet", s_alphabet)
        object.__setattr__(self, "v_alphabet", v_alphabet)
        object.__setattr__(self, "vhat_alphabets", vhat_alphabets)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "source_fractions", fracs)
        object.__setattr__(self, "distortions", tuple(tables))

        self._warn_on_zero_symbols()

    def __setattr__(self, name, value):
        raise AttributeError("ProblemSpec is immutable")

    def _warn_on_zero_symbols(self) -> None:
        for alphabet in (*self.x_alphabets, self.s_alphabet):
            marg = self.source.marginal([alphabet.label])
            if (marg <= 0.0).any():
                warnings.warn(
                    f"symbols of {alphabet.label} have zero probability: "
                    f"{np.flatnonzero(marg <= 0.0).tolist()}",
                    DegeneracyWarning,
                    stacklevel=3,
                )

    # ---- accessors ---------------------------------------------------------

    @property
    def channel_slots(self) -> tuple[int, ...]:
        """Source indices that carry a test channel: J+1..M (1-based)."""
        return tuple(range(self.j + 1, self.m + 1))

    def x_alphabet(self, k: int) -> Alphabet:
        if not 1 <= k <= self.m:
            raise StructuralError(f"source index {k} outside 1..{self.m}")
        return self.x_alphabets[k - 1]

    def x_marginal(self, k: int) -> np.ndarray:
        return self.source.marginal([f"X{k}"])

    def d_max(self, l: int) -> float:
        if not 1 <= l <= self.l:
            raise StructuralError(f"distortion index {l} outside 1..{self.l}")
        return float(self.distortions[l - 1].max(initial=0.0))

    def equals(self, other: "ProblemSpec") -> bool:
        """Exact field-by-field equality (rationals, not float tolerance)."""
        return (
            isinstance(other, ProblemSpec)
            and (self.name, self.notes) == (other.name, other.notes)
            and (self.m, self.j, self.l) == (other.m, other.j, other.l)
            and self.x_alphabets == other.x_alphabets
            and self.s_alphabet == other.s_alphabet
            and self.v_alphabet == other.v_alphabet
            and self.vhat_alphabets == other.vhat_alphabets
            and self.source_fractions == other.source_fractions
            and all(
                np.array_equal(a, b)
                for a, b in zip(self.distortions, other.distortions)
            )
        )


def random_channels(
    spec: ProblemSpec,
    rng: np.random.Generator,
    sizes: Sequence[int] | None = None,
) -> list[Channel]:
    """One random channel per slot; default output sizes are ``|X_k|``."""
    slots = spec.channel_slots
    if sizes is None:
        sizes = [spec.x_alphabet(k).size for k in slots]
    if len(sizes) != len(slots):
        raise StructuralError(f"expected {len(slots)} output sizes, got {len(sizes)}")
    return [
        random_channel(spec.x_alphabet(k), int(n), rng) for k, n in zip(slots, sizes)
    ]


class AugmentedPmf:
    """The source law with a full channel bank attached.

    Constructed by :func:`attach_channels`; carries the joint tensor, the
    originating spec, and the channels keyed by slot.  Helper methods map
    description indices to tensor axes, with the ``m <= J`` aliasing
    (description m is ``X_m`` itself) resolved transparently.
    """

    __slots__ = ("joint", "spec", "channels")

    def __init__(self, joint: JointPmf, spec: ProblemSpec, channels: Mapping[int, Channel]):
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "channels", dict(channels))

    def __setattr__(self, name, value):
        raise AttributeError("AugmentedPmf is immutable")

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def j(self) -> int:
        return self.spec.j

    def x_vs(self, i: int) -> VarSet:
        if not 1 <= i <= self.m:
            raise StructuralError(f"source index {i} outside 1..{self.m}")
        return self.joint.varset(f"X{i}")

    def z_vs(self, i: int) -> VarSet:
        """Axis of description i: Z_i for i > J, X_i itself for i <= J."""
        if not 1 <= i <= self.m:
            raise StructuralError(f"description index {i} outside 1..{self.m}")
        return self.joint.varset(f"Z{i}" if i > self.j else f"X{i}")

    def x_set(self, group) -> VarSet:
        out = VarSet()
        for i in group:
            out = out | self.x_vs(i)
        return out

    def z_set(self, group) -> VarSet:
        out = VarSet()
        for i in group:
            out = out | self.z_vs(i)
        return out

    @property
    def s_vs(self) -> VarSet:
        return self.joint.varset("S")

    @property
    def v_vs(self) -> VarSet:
        return self.joint.varset("V")


def attach_channels(spec: ProblemSpec, channels: Sequence[Channel]) -> AugmentedPmf:
    """Build the augmented joint from the source law and one channel per slot.

    ``channels[i]`` serves slot ``spec.channel_slots[i]`` and must have the
    matching input alphabet.  Two guarantees are enforced on the result:
    each ``Z_k`` is conditionally independent of everything else given
    ``X_k``, and marginalizing the Z axes returns the source law exactly.
    """
    slots = spec.channel_slots
    if len(channels) != len(slots):
        raise StructuralError(
            f"expected {len(slots)} channels for slots {slots}, got {len(channels)}"
        )
    arr = spec.source.probs
    axes = list(spec.source.axes)
    for k, ch in zip(slots, channels):
        if ch.input != spec.x_alphabet(k):
            raise StructuralError(
                f"channel for slot {k} has input {ch.input}, expected {spec.x_alphabet(k)}"
            )
        shape = [1] * arr.ndim + [ch.output.size]
        shape[k - 1] = ch.input.size
        arr = arr[..., None] * ch.rows.reshape(shape)
        axes.append((f"Z{k}", ch.output))
    joint = JointPmf(axes, arr)
    aug = AugmentedPmf(joint, spec, dict(zip(slots, channels)))

    back = joint.marginal([name for name, _ in spec.source.axes])
    err = float(np.abs(back - spec.source.probs).max())
    if err > MARGINAL_TOL:
        raise NumericIntegrityError(
            f"augmented joint fails to marginalize back to the source "
            f"(max error {err:.3e})"
        )
    everything = joint.all_axes()
    for k in slots:
        z, x = aug.z_vs(k), aug.x_vs(k)
        rest = everything - z - x
        if rest and cmi(joint, z, rest, x) > FACTORIZATION_TOL:
            raise NumericIntegrityError(
                f"Z{k} is not conditionally independent of the rest given X{k}"
            )
    return aug


@dataclass(frozen=True, eq=False)
class ReverseChannelPair:
    """Mixture form of a channel: output weights plus reverse conditionals.

    ``weights[z]`` is the output probability ``p'(z)`` and ``columns[z]``
    the conditional ``q'(x | z)`` on the input simplex.  Symbols listed in
    ``zero_weight`` have ``p'(z) = 0``; their columns are uniform fillers
    and carry no information.
    """

    weights: np.ndarray = field(repr=False)
    columns: np.ndarray = field(repr=False)
    zero_weight: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        cols = np.array(self.columns, dtype=float)
        if w.ndim != 1 or cols.ndim != 2 or cols.shape[0] != w.shape[0]:
            raise StructuralError(
                f"weights {w.shape} and columns {cols.shape} are inconsistent"
            )
        if w.min(initial=0.0) < 0.0 or abs(float(w.sum()) - 1.0) > ROW_TOL:
            raise StructuralError("weights must be a probability vector")
        if cols.min(initial=0.0) < 0.0 or np.abs(cols.sum(axis=1) - 1.0).max() > 1e-9:
            raise StructuralError("each column must be a probability vector")
        w.setflags(write=False)
        cols.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "zero_weight", tuple(int(z) for z in self.zero_weight))

    @property
    def out_size(self) -> int:
        return int(self.weights.shape[0])

    def mixture(self) -> np.ndarray:
        """The input law this pair represents: sum_z p'(z) q'(x|z)."""
        return self.weights @ self.columns


def mixture_error(spec: ProblemSpec, k: int, pair: ReverseChannelPair) -> float:
    """Max absolute gap between the pair's mixture and the source marginal p_k."""
    return float(np.abs(pair.mixture() - spec.x_marginal(k)).max())


def forward_to_reverse(spec: ProblemSpec, k: int, q: Channel) -> ReverseChannelPair:
    """Convert a channel on slot k to its (weights, reverse columns) form."""
    if k not in spec.channel_slots:
        raise StructuralError(f"slot {k} is not in {spec.channel_slots}")
    if q.input != spec.x_alphabet(k):
        raise StructuralError(
            f"channel input {q.input} does not match source {spec.x_alphabet(k)}"
        )
    p_k = spec.x_marginal(k)
    joint = p_k[:, None] * q.rows            # (x, z) joint law
    weights = joint.sum(axis=0)
    cols = np.full((q.output.size, q.input.size), 1.0 / q.input.size)
    positive = weights > 0.0
    cols[positive] = joint[:, positive].T / weights[positive, None]
    zero = tuple(int(z) for z in np.flatnonzero(~positive))
    pair = ReverseChannelPair(weights, cols, zero)
    err = mixture_error(spec, k, pair)
    if err > MIXTURE_TOL:
        raise NumericIntegrityError(
            f"reverse pair mixture misses the source marginal by {err:.3e}"
        )
    return pair


def reverse_to_forward(spec: ProblemSpec, k: int, pair: ReverseChannelPair) -> Channel:
    """Convert a reverse pair back to a channel, dropping zero-weight symbols.

    Requires the mixture identity to hold within ``MIXTURE_INPUT_TOL``.
    A source symbol with zero probability gets a uniform channel row (its
    conditional is undefined) and triggers a :class:`DegeneracyWarning`.
    """
    if k not in spec.channel_slots:
        raise StructuralError(f"slot {k} is not in {spec.channel_slots}")
    err = mixture_error(spec, k, pair)
    if err > MIXTURE_INPUT_TOL:
        raise PreconditionError(
            f"reverse pair violates the mixture identity by {err:.3e}"
        )
    p_k = spec.x_marginal(k)
    keep = np.flatnonzero(pair.weights > 0.0)
    if keep.size == 0:
        raise StructuralError("reverse pair has no positive-weight symbols")
    w = pair.weights[keep]
    cols = pair.columns[keep]
    rows = np.empty((p_k.size, keep.size))
    zero_inputs = np.flatnonzero(p_k <= 0.0)
    if zero_inputs.size:
        warnings.warn(
            f"source symbols {zero_inputs.tolist()} of X{k} have zero probability; "
            "their channel rows are arbitrary (set to uniform)",
            DegeneracyWarning,
            stacklevel=2,
        )
    for x in range(p_k.size):
        if p_k[x] > 0.0:
            rows[x] = w * cols[:, x] / p_k[x]
        else:
            rows[x] = 1.0 / keep.size
    sums = rows.sum(axis=1)
    if np.abs(sums - 1.0).max() > 1e-8:
        raise NumericIntegrityError(
            f"reconstructed channel rows sum to {sums}, too far from 1"
        )
    rows /= sums[:, None]
    return Channel(spec.x_alphabet(k), Alphabet(f"Z{k}", keep.size), rows)
