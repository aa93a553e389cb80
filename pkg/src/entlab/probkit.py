"""Exact finite probability distributions and information measures.

Probabilities are `fractions.Fraction` throughout, so every identity that
holds in probability space holds bit-for-bit here.  Only the final logarithm
evaluation is floating point; all comparisons against theory use the global
tolerance `TOL` (1e-9).  Logarithms are base 2, so every reported quantity is
in bits.

Outcomes are tuples of fixed-width bit strings (one string per block).  The
failure symbol `BOT` is allowed as a block value in any position; it carries
no width and is used by simulators that may give up.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

TOL = 1e-9

BOT = "⊥"

Outcome = tuple[str, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


class EntlabError(Exception):
    """Base error for this package."""


class OutOfSupport(EntlabError):
    """A queried outcome has zero probability."""


class SupportViolation(EntlabError):
    """The left distribution puts mass where the right one has none."""


class WidthMismatch(EntlabError):
    """Block widths are inconsistent with the declared shape."""


class NotFlat(EntlabError):
    """A distribution required to be flat is not uniform on its support."""


class DomainError(EntlabError, ValueError):
    """A parameter violates a required inequality."""


class BudgetExceeded(EntlabError):
    """An enumeration exceeded its configured cap."""


class IdentityViolation(EntlabError):
    """A numerically checked identity failed; indicates an implementation bug."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"probabilities must be exact rationals, got {type(value).__name__}")


def log2_fraction(ratio: Fraction) -> float:
    """log2 of a positive rational, evaluated on the integer parts.

    math.log2 on a Python int is accurate well past 2**53, so this keeps
    full precision even for products of many block probabilities.
    """
    if ratio <= 0:
        raise ValueError("log2 of a non-positive rational")
    return math.log2(ratio.numerator) - math.log2(ratio.denominator)


def _check_block(block: str) -> None:
    if block == BOT:
        return
    if not isinstance(block, str) or any(c not in "01" for c in block):
        raise WidthMismatch(f"block {block!r} is not a bit string")


class FiniteDist:
    """Exact pmf over a finite set of equal-shape bit-string tuples.

    Construction canonicalizes: duplicate outcomes are merged, zero-mass
    entries dropped, and outcomes stored in lexicographic order, so two
    distributions are equal as rational pmfs iff their canonical forms match.
    """

    __slots__ = ("outcomes", "probs", "widths", "_index")

    def __init__(self, items: Iterable[tuple[Outcome, Fraction]], widths: Sequence[int] | None = None):
        acc: dict[Outcome, Fraction] = {}
        for outcome, prob in items:
            outcome = tuple(outcome)
            p = _as_fraction(prob)
            if p < 0:
                raise ValueError(f"negative probability {p} for {outcome}")
            if p == 0:
                continue
            acc[outcome] = acc.get(outcome, ZERO) + p
        if not acc:
            raise ValueError("distribution has empty support")
        total = sum(acc.values())
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")
        outcomes = sorted(acc)
        arity = len(outcomes[0])
        for o in outcomes:
            if len(o) != arity:
                raise WidthMismatch(f"outcome {o} has arity {len(o)}, expected {arity}")
            for block in o:
                _check_block(block)
        if widths is None:
            inferred: list[int | None] = [None] * arity
            for o in outcomes:
                for i, block in enumerate(o):
                    if block != BOT and inferred[i] is None:
                        inferred[i] = len(block)
            if any(w is None for w in inferred):
                raise WidthMismatch("cannot infer a block width from an all-failure position; pass widths=")
            widths = [w for w in inferred if w is not None]
        widths = tuple(int(w) for w in widths)
        if len(widths) != arity:
            raise WidthMismatch(f"{len(widths)} widths for arity-{arity} outcomes")
        for o in outcomes:
            for i, block in enumerate(o):
                if block != BOT and len(block) != widths[i]:
                    raise WidthMismatch(f"block {block!r} at position {i} should have width {widths[i]}")
        self.outcomes: tuple[Outcome, ...] = tuple(outcomes)
        self.probs: tuple[Fraction, ...] = tuple(acc[o] for o in outcomes)
        self.widths: tuple[int, ...] = widths
        self._index: dict[Outcome, Fraction] = dict(zip(self.outcomes, self.probs))

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_mapping(cls, mapping: Mapping[Outcome, Fraction], widths: Sequence[int] | None = None) -> "FiniteDist":
        return cls(mapping.items(), widths=widths)

    @classmethod
    def point_mass(cls, outcome: Outcome, widths: Sequence[int] | None = None) -> "FiniteDist":
        return cls([(tuple(outcome), ONE)], widths=widths)

    @classmethod
    def uniform(cls, outcomes: Sequence[Outcome], widths: Sequence[int] | None = None) -> "FiniteDist":
        outs = [tuple(o) for o in outcomes]
        if len(set(outs)) != len(outs):
            raise ValueError("uniform() requires distinct outcomes")
        p = Fraction(1, len(outs))
        return cls([(o, p) for o in outs], widths=widths)

    @classmethod
    def uniform_tuples(cls, widths: Sequence[int]) -> "FiniteDist":
        """Uniform over all bit-string tuples of the given per-block widths."""
        outs = list(iter_tuples(widths))
        return cls.uniform(outs, widths=widths)

    @classmethod
    def bernoulli(cls, p_one: Fraction) -> "FiniteDist":
        """One-bit, one-block distribution with P[("1",)] = p_one."""
        p = _as_fraction(p_one)
        return cls([(("0",), 1 - p), (("1",), p)], widths=(1,))

    # -- queries ------------------------------------------------------------

    @property
    def arity(self) -> int:
        return len(self.widths)

    def p(self, outcome: Outcome) -> Fraction:
        return self._index.get(tuple(outcome), ZERO)

    def items(self) -> Iterator[tuple[Outcome, Fraction]]:
        return iter(zip(self.outcomes, self.probs))

    @property
    def support(self) -> tuple[Outcome, ...]:
        return self.outcomes

    def __contains__(self, outcome: Outcome) -> bool:
        return tuple(outcome) in self._index

    def __len__(self) -> int:
        return len(self.outcomes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteDist):
            return NotImplemented
        return self.widths == other.widths and self.outcomes == other.outcomes and self.probs == other.probs

    def __repr__(self) -> str:
        return f"FiniteDist({len(self.outcomes)} outcomes, widths={self.widths})"

    def is_flat(self) -> bool:
        return all(p == self.probs[0] for p in self.probs)

    # -- transforms ---------------------------------------------------------

    def marginal(self, positions: Sequence[int]) -> "FiniteDist":
        pos = tuple(positions)
        acc: dict[Outcome, Fraction] = {}
        for o, p in self.items():
            key = tuple(o[i] for i in pos)
            acc[key] = acc.get(key, ZERO) + p
        return FiniteDist(acc.items(), widths=tuple(self.widths[i] for i in pos))

    def map_outcomes(self, fn: Callable[[Outcome], Outcome], widths: Sequence[int] | None = None) -> "FiniteDist":
        acc: dict[Outcome, Fraction] = {}
        for o, p in self.items():
            key = tuple(fn(o))
            acc[key] = acc.get(key, ZERO) + p
        return FiniteDist(acc.items(), widths=widths)

    def product(self, other: "FiniteDist") -> "FiniteDist":
        items = []
        for oa, pa in self.items():
            for ob, pb in other.items():
                items.append((oa + ob, pa * pb))
        return FiniteDist(items, widths=self.widths + other.widths)

    # -- serialization ------------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "arity": self.arity,
            "widths": list(self.widths),
            "entries": [
                {"outcome": list(o), "num": p.numerator, "den": p.denominator}
                for o, p in self.items()
            ],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "FiniteDist":
        items = [
            (tuple(e["outcome"]), Fraction(e["num"], e["den"]))
            for e in doc["entries"]
        ]
        return cls(items, widths=doc["widths"])

    def dumps(self) -> str:
        return canonical_json(self.to_doc())

    @classmethod
    def loads(cls, text: str) -> "FiniteDist":
        return cls.from_doc(json.loads(text))


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def iter_tuples(widths: Sequence[int]) -> Iterator[Outcome]:
    """All bit-string tuples of the given widths, in lexicographic order."""
    if len(widths) == 0:
        yield ()
        return
    head_width = widths[0]
    for head in bitstrings(head_width):
        for tail in iter_tuples(widths[1:]):
            yield (head,) + tail


def bitstrings(width: int) -> list[str]:
    if width == 0:
        return [""]
    return [format(v, f"0{width}b") for v in range(1 << width)]


@dataclass(frozen=True)
class SampleValue:
    """A log-ratio sample, carried both as a float and as the exact rational
    it is the log2 of (when one exists)."""

    value: float
    ratio: Fraction | None = None

    def __post_init__(self):
        if self.ratio is not None:
            exact = log2_fraction(self.ratio)
            if abs(exact - self.value) > TOL:
                raise IdentityViolation(f"sample value {self.value} != log2({self.ratio})")


@dataclass(frozen=True)
class CondQuery:
    """A joint distribution together with the coordinate positions that act
    as the conditioning variable."""

    joint: FiniteDist
    condition_positions: tuple[int, ...]

    def __post_init__(self):
        pos = tuple(self.condition_positions)
        object.__setattr__(self, "condition_positions", pos)
        if any(i < 0 or i >= self.joint.arity for i in pos):
            raise ValueError(f"condition positions {pos} out of range for arity {self.joint.arity}")
        if len(set(pos)) != len(pos):
            raise ValueError("duplicate condition positions")

    @property
    def value_positions(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.joint.arity) if i not in self.condition_positions)

    def split(self, outcome: Outcome) -> tuple[Outcome, Outcome]:
        """(value part, condition part) of an outcome."""
        return (
            tuple(outcome[i] for i in self.value_positions),
            tuple(outcome[i] for i in self.condition_positions),
        )

    def condition_mass(self, cond: Outcome) -> Fraction:
        total = ZERO
        for o, p in self.joint.items():
            if tuple(o[i] for i in self.condition_positions) == cond:
                total += p
        return total


# ---------------------------------------------------------------------------
# Entropy
# ---------------------------------------------------------------------------


def entropy(d: FiniteDist) -> float:
    """Expected sample entropy, sum of p*log2(1/p), in bits."""
    return float(sum(float(p) * log2_fraction(1 / p) for p in d.probs))


def sample_entropy(d: FiniteDist, outcome: Outcome) -> SampleValue:
    p = d.p(outcome)
    if p == 0:
        raise OutOfSupport(f"{outcome} has zero probability")
    ratio = 1 / p
    return SampleValue(log2_fraction(ratio), ratio)


def cond_entropy(q: CondQuery) -> float:
    """Expected conditional sample entropy of the value part given the
    conditioning part."""
    cond_mass: dict[Outcome, Fraction] = {}
    for o, p in q.joint.items():
        _, cond = q.split(o)
        cond_mass[cond] = cond_mass.get(cond, ZERO) + p
    total = 0.0
    for o, p in q.joint.items():
        _, cond = q.split(o)
        conditional = p / cond_mass[cond]
        total += float(p) * log2_fraction(1 / conditional)
    return total


# ---------------------------------------------------------------------------
# Relative entropy
# ---------------------------------------------------------------------------


def _ratio(a: FiniteDist, b: FiniteDist, outcome: Outcome) -> Fraction:
    pa = a.p(outcome)
    if pa == 0:
        raise OutOfSupport(f"{outcome} not in the support of the left distribution")
    pb = b.p(outcome)
    if pb == 0:
        raise SupportViolation(f"{outcome} has positive left mass but zero right mass")
    return pa / pb


def rel_entropy(a: FiniteDist, b: FiniteDist) -> float:
    """Expected sample relative entropy of a with respect to b (bits, >= 0)."""
    total = 0.0
    for o, p in a.items():
        total += float(p) * log2_fraction(_ratio(a, b, o))
    return total


def sample_rel_entropy(a: FiniteDist, b: FiniteDist, outcome: Outcome) -> SampleValue:
    ratio = _ratio(a, b, outcome)
    return SampleValue(log2_fraction(ratio), ratio)


def cond_rel_entropy(aq: CondQuery, bq: CondQuery) -> float:
    """Expected conditional sample relative entropy between two
    (value | condition) pairs, averaged under the left joint."""
    if len(aq.value_positions) != len(bq.value_positions):
        raise WidthMismatch("conditional queries have different value arities")
    if len(aq.condition_positions) != len(bq.condition_positions):
        raise WidthMismatch("conditional queries have different condition arities")
    total = 0.0
    for o, p in aq.joint.items():
        total += float(p) * log2_fraction(sample_cond_ratio(aq, bq, o))
    return total


def sample_cond_ratio(aq: CondQuery, bq: CondQuery, outcome: Outcome) -> Fraction:
    """Exact ratio P_a(value|cond) / P_b(value|cond) at an outcome of aq's joint."""
    value, cond = aq.split(outcome)
    pa_joint = aq.joint.p(outcome)
    if pa_joint == 0:
        raise OutOfSupport(f"{outcome} not in the left joint support")
    pa_cond = aq.condition_mass(cond)
    b_joint_mass = ZERO
    b_cond_mass = ZERO
    for ob, pb in bq.joint.items():
        vb, cb = bq.split(ob)
        if cb == cond:
            b_cond_mass += pb
            if vb == value:
                b_joint_mass += pb
    if b_cond_mass == 0 or b_joint_mass == 0:
        raise SupportViolation(f"right side gives zero conditional mass to {value} given {cond}")
    return (pa_joint / pa_cond) / (b_joint_mass / b_cond_mass)


# ---------------------------------------------------------------------------
# Quantiles (delta-min relative entropy)
# ---------------------------------------------------------------------------


def quantile_of_ratios(samples: Iterable[tuple[Fraction | None, Fraction]], delta: Fraction) -> float:
    """Smallest D with Pr[log2(ratio) <= D] >= delta, with exact rational
    cumulative weights.  ratio None means +infinity (a support violation kept
    as an infinite sample).  delta = 0 gives -inf (every D satisfies the
    vacuous requirement)."""
    delta = _as_fraction(delta)
    if delta < 0 or delta > 1:
        raise DomainError(f"delta must be in [0,1], got {delta}")
    if delta == 0:
        return float("-inf")
    finite = [(r, w) for r, w in samples if r is not None]
    infinite_mass = sum((w for r, w in samples if r is None), ZERO)
    finite.sort(key=lambda rw: rw[0])
    cumulative = ZERO
    for ratio, weight in finite:
        cumulative += weight
        if cumulative >= delta:
            return log2_fraction(ratio)
    if cumulative + infinite_mass >= delta:
        return float("inf")
    raise DomainError("sample weights sum to less than delta")


def min_rel_entropy(a: FiniteDist, b: FiniteDist, delta: Fraction) -> float:
    """Quantile of level delta of the sample relative entropy of a wrt b."""
    samples = [(_ratio(a, b, o), p) for o, p in a.items()]
    return quantile_of_ratios(samples, delta)


# ---------------------------------------------------------------------------
# Data processing
# ---------------------------------------------------------------------------


def dp_check(a: FiniteDist, b: FiniteDist, fn: Callable[[Outcome], Outcome]) -> tuple[float, float]:
    """Returns (KL(a||b), KL(f(a)||f(b))) and checks the first dominates.

    A violation beyond tolerance is an implementation bug, not a data error,
    so it raises IdentityViolation.
    """
    for o in b.support:
        fn(o)  # must be total on the right support
    kl_raw = rel_entropy(a, b)
    fa = a.map_outcomes(fn)
    fb = b.map_outcomes(fn, widths=fa.widths)
    kl_mapped = rel_entropy(fa, fb)
    if kl_raw < kl_mapped - TOL:
        raise IdentityViolation(f"data processing violated: {kl_raw} < {kl_mapped}")
    return kl_raw, kl_mapped
