"""Hardness and entropy notions as exact functionals of concrete objects.

Every notion returns a NotionValue holding the expectation form, the full
per-sample decomposition with exact rational ratios, and (on request) the
delta-quantile form.  Sample ratios are rationals, so quantiles and identity
checks are computed with exact cumulative weights; only the final log2 is a
float.

A support failure on the simulator side raises SupportViolation by default.
Passing allow_infinite=True instead records those samples as +inf, which the
sweep verifiers use to keep vacuously-true bound checks in scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .genkit import (
    BlockGenerator,
    OnlineGenerator,
    SearchProblem,
    Relation,
    online_supported_on,
    supported_on,
)
from .probkit import (
    BOT,
    FiniteDist,
    Outcome,
    SupportViolation,
    TOL,
    log2_fraction,
    quantile_of_ratios,
)
from .simkit import OnlineSimulator, Simulator

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class SampleTerm:
    """One outcome of the left-hand (generator-side) joint: its weight there,
    and the exact ratio whose log2 is the per-sample value.  ratio None means
    the sample is +inf (right side has no mass)."""

    outcome: Outcome
    weight: Fraction
    ratio: Fraction | None
    value: float


@dataclass
class NotionValue:
    """A computed notion: scalar expectation, per-sample ledger, optional
    per-block terms and delta-quantile.

    For the relative-entropy notions `value` equals the weighted sample mean
    (within TOL).  For the entropy-gap notion the defining expectation uses
    the target's own conditional entropies, which coincides with the sample
    mean only on flat targets; `sample_mean()` exposes the latter.
    """

    value: float
    samples: list[SampleTerm]
    terms: list[float] | None = None
    delta: Fraction | None = None
    delta_quantile: float | None = None
    cost: dict = field(default_factory=dict)

    def sample_mean(self) -> float:
        return sum(float(t.weight) * t.value for t in self.samples)

    def quantile(self, delta: Fraction) -> float:
        return quantile_of_ratios([(t.ratio, t.weight) for t in self.samples], delta)

    def max_sample(self) -> float:
        return max(t.value for t in self.samples)


@dataclass(frozen=True)
class AdversaryPair:
    """A generator together with the simulator that argues for it."""

    generator: BlockGenerator | OnlineGenerator
    simulator: Simulator | OnlineSimulator | None = None


def _finish(
    samples: list[SampleTerm],
    delta: Fraction | None,
    terms: list[float] | None = None,
    cost: dict | None = None,
    value: float | None = None,
) -> NotionValue:
    if value is None:
        value = sum(float(t.weight) * t.value for t in samples)
    nv = NotionValue(value=value, samples=samples, terms=terms, cost=cost or {})
    if delta is not None:
        nv.delta = Fraction(delta)
        nv.delta_quantile = nv.quantile(nv.delta)
    return nv


def _ratio_term(outcome: Outcome, weight: Fraction, left: Fraction, right: Fraction, allow_infinite: bool) -> SampleTerm:
    if right == 0:
        if not allow_infinite:
            raise SupportViolation(f"simulator side gives zero mass to {outcome}")
        return SampleTerm(outcome, weight, None, float("inf"))
    ratio = left / right
    return SampleTerm(outcome, weight, ratio, log2_fraction(ratio))


# ---------------------------------------------------------------------------
# Whole-string notions
# ---------------------------------------------------------------------------


def hardness_re(
    problem: SearchProblem,
    adv: AdversaryPair,
    delta: Fraction | None = None,
    allow_infinite: bool = False,
) -> NotionValue:
    """Divergence between (seed, generated instance) and (simulated seed,
    real instance).  Zero means the pair both matches the instance
    distribution and simulates its own coins perfectly."""
    g = adv.generator
    s = adv.simulator
    if not isinstance(g, BlockGenerator) or g.num_blocks != 2:
        raise ValueError("needs a two-block generator (instance block, witness block)")
    if not isinstance(s, Simulator):
        raise ValueError("needs a whole-string simulator")
    if not supported_on(g, problem.relation):
        raise ValueError("generator emits pairs outside the relation")
    seed_mass = Fraction(1, 1 << g.seed_width)
    mu = {o[0]: p for o, p in problem.instance_dist.items()}
    samples = []
    for r in g.seeds():
        y = g.block(0, r)
        right = mu.get(y, ZERO)
        if right != 0:
            right *= s.table.get(y, {}).get(r, ZERO)
        samples.append(_ratio_term((r, y), seed_mass, seed_mass, right, allow_infinite))
    cost = {"generator_table": 1 << g.seed_width, "simulator_entries": sum(len(d) for d in s.table.values())}
    return _finish(samples, delta, cost=cost)


def witness_hardness_re(
    rel: Relation,
    yw: FiniteDist,
    adv: AdversaryPair,
    delta: Fraction | None = None,
    allow_infinite: bool = False,
) -> NotionValue:
    """Three-component divergence that also scores how well the generator's
    witness block matches the target witness distribution.

    Accepts either a two-block generator with a whole-string simulator, or an
    (m+1)-block online generator with an online simulator for its first m
    blocks (the induced pair of the block reduction).
    """
    g = adv.generator
    s = adv.simulator
    if isinstance(g, BlockGenerator):
        if g.num_blocks != 2 or not isinstance(s, Simulator):
            raise ValueError("two-block form needs (BlockGenerator, Simulator)")
        if yw.arity != 2:
            raise ValueError("target (instance, witness) distribution must have two blocks")
        if not supported_on(g, rel):
            raise ValueError("generator emits pairs outside the relation")
        seed_mass = Fraction(1, 1 << g.seed_width)
        samples = []
        for r in g.seeds():
            y, w = g.run(r)
            right = yw.p((y, w))
            if right != 0:
                right *= s.table.get(y, {}).get(r, ZERO)
            samples.append(_ratio_term((r, y, w), seed_mass, seed_mass, right, allow_infinite))
        cost = {"generator_table": 1 << g.seed_width}
        return _finish(samples, delta, cost=cost)

    if not isinstance(g, OnlineGenerator) or not isinstance(s, OnlineSimulator):
        raise ValueError("online form needs (OnlineGenerator, OnlineSimulator)")
    m = g.num_blocks - 1
    if s.num_steps != m:
        raise ValueError("online simulator must cover exactly the instance blocks")
    if yw.widths != g.block_widths:
        raise ValueError("generator block widths do not match the target distribution")
    if not online_supported_on(g, yw):
        raise ValueError("generator output leaves the target support")

    left = _grouped_left_joint(g, m)
    right: dict[Outcome, Fraction] = {}
    for o, p in yw.items():
        for path, q in s.path_dist(o[:m]).items():
            if q == 0:
                continue
            key = path + o
            right[key] = right.get(key, ZERO) + p * q
    samples = [
        _ratio_term(o, mass, mass, right.get(o, ZERO), allow_infinite)
        for o, mass in sorted(left.items())
    ]
    cost = {"generator_table": sum(len(t) for t in g.block_maps)}
    return _finish(samples, delta, cost=cost)


def _grouped_left_joint(g: OnlineGenerator, m: int) -> dict[Outcome, Fraction]:
    """Joint of (first m seed blocks, all output blocks) under uniform seeds;
    trailing seed blocks are marginalized out."""
    total = 1
    for s in g.seed_widths:
        total <<= s
    mass = Fraction(1, total)
    left: dict[Outcome, Fraction] = {}
    for seeds in g.seed_tuples():
        key = seeds[:m] + g.run(seeds)
        left[key] = left.get(key, ZERO) + mass
    return left


def relative_pseudoentropy(
    yw: FiniteDist,
    s: Simulator,
    delta: Fraction | None = None,
    allow_infinite: bool = False,
) -> NotionValue:
    """How badly the simulator misses the conditional witness distribution:
    divergence of (Y, W) from (Y, S(Y))."""
    if yw.arity != 2:
        raise ValueError("needs a two-block (instance, witness) distribution")
    mu: dict[str, Fraction] = {}
    for (y, _w), p in yw.items():
        mu[y] = mu.get(y, ZERO) + p
    samples = []
    for (y, w), p in yw.items():
        right = mu[y] * s.table.get(y, {}).get(w, ZERO)
        samples.append(_ratio_term((y, w), p, p, right, allow_infinite))
    return _finish(samples, delta)


# ---------------------------------------------------------------------------
# Blockwise notions
# ---------------------------------------------------------------------------


def _target_prefix_masses(y: FiniteDist) -> list[dict[Outcome, Fraction]]:
    """masses[i][y_{<=i}] for i = 0..m (masses[0][()] = 1)."""
    m = y.arity
    masses: list[dict[Outcome, Fraction]] = [dict() for _ in range(m + 1)]
    masses[0][()] = ONE
    for o, p in y.items():
        for i in range(1, m + 1):
            key = o[:i]
            masses[i][key] = masses[i].get(key, ZERO) + p
    return masses


def _generator_block_probs(g: OnlineGenerator) -> list[dict[tuple[Outcome, str], Fraction]]:
    """probs[i][(r_{<i}, y_i)] = Pr[block i equals y_i given the seed prefix]."""
    from .probkit import bitstrings, iter_tuples

    out = []
    for i in range(g.num_blocks):
        space = 1 << g.seed_widths[i]
        table: dict[tuple[Outcome, str], Fraction] = {}
        for r_prefix in iter_tuples(g.seed_widths[:i]):
            for r in bitstrings(g.seed_widths[i]):
                y_i = g.block(i, r_prefix + (r,))
                key = (r_prefix, y_i)
                table[key] = table.get(key, ZERO) + Fraction(1, space)
        out.append(table)
    return out


def nb_hardness_re(
    y: FiniteDist,
    g: OnlineGenerator,
    s: OnlineSimulator,
    delta: Fraction | None = None,
    allow_infinite: bool = False,
) -> NotionValue:
    """Blockwise divergence between the generator's (seed, block) process and
    the simulator-driven process on the real target, summed over blocks.  By
    the chain rule the per-sample sum equals the whole-string divergence of
    the flattened pair."""
    m = g.num_blocks
    if y.arity != m or y.widths != g.block_widths:
        raise ValueError("target distribution shape does not match the generator")
    if s.num_steps != m:
        raise ValueError("online simulator must cover every block")
    if not online_supported_on(g, y):
        raise ValueError("generator output leaves the target support")

    total = 1
    for sw in g.seed_widths:
        total <<= sw
    seed_mass = Fraction(1, total)

    left_prefix: list[dict[Outcome, Fraction]] = [dict() for _ in range(m + 1)]
    left_prefix[0][()] = ONE
    left_items: list[tuple[Outcome, Outcome]] = []
    for seeds in g.seed_tuples():
        outputs = g.run(seeds)
        left_items.append((seeds, outputs))
        for i in range(1, m + 1):
            key = seeds[:i] + outputs[:i]
            left_prefix[i][key] = left_prefix[i].get(key, ZERO) + seed_mass

    right_prefix: list[dict[Outcome, Fraction]] = [dict() for _ in range(m + 1)]
    right_prefix[0][()] = ONE
    for o, p in y.items():
        for path, q in s.path_dist(o).items():
            mass = p * q
            if mass == 0:
                continue
            for i in range(1, m + 1):
                key = path[:i] + o[:i]
                right_prefix[i][key] = right_prefix[i].get(key, ZERO) + mass

    samples: list[SampleTerm] = []
    term_totals = [0.0] * m
    for seeds, outputs in left_items:
        ratio: Fraction | None = ONE
        for i in range(1, m + 1):
            lk = seeds[:i] + outputs[:i]
            lk_prev = seeds[: i - 1] + outputs[: i - 1]
            l_cond = left_prefix[i][lk] / left_prefix[i - 1][lk_prev]
            r_num = right_prefix[i].get(lk, ZERO)
            r_den = right_prefix[i - 1].get(lk_prev, ZERO)
            if r_num == 0 or r_den == 0:
                if not allow_infinite:
                    raise SupportViolation(
                        f"simulator side gives zero conditional mass at block {i} of {seeds + outputs}"
                    )
                ratio = None
                term_totals[i - 1] = float("inf")
                break
            term_ratio = l_cond / (r_num / r_den)
            term_totals[i - 1] += float(seed_mass) * log2_fraction(term_ratio)
            ratio = ratio * term_ratio
        if ratio is None:
            samples.append(SampleTerm(seeds + outputs, seed_mass, None, float("inf")))
        else:
            samples.append(SampleTerm(seeds + outputs, seed_mass, ratio, log2_fraction(ratio)))
    cost = {
        "generator_table": sum(len(t) for t in g.block_maps),
        "simulator_entries": sum(len(t) for t in s.step_tables),
    }
    return _finish(samples, delta, terms=term_totals, cost=cost)


def _blockwise_gap_ratios(y: FiniteDist, g: OnlineGenerator):
    """Shared machinery for the simulator-free blockwise notions.

    For each full seed tuple, the per-block exact ratios
    Pr[generator block | seed prefix] / Pr[target block | target prefix].
    """
    m = g.num_blocks
    if y.arity != m or y.widths != g.block_widths:
        raise ValueError("target distribution shape does not match the generator")
    if not online_supported_on(g, y):
        raise ValueError("generator output leaves the target support")
    target = _target_prefix_masses(y)
    gen_probs = _generator_block_probs(g)
    total = 1
    for sw in g.seed_widths:
        total <<= sw
    seed_mass = Fraction(1, total)
    rows = []
    for seeds in g.seed_tuples():
        outputs = g.run(seeds)
        ratios = []
        for i in range(m):
            p_gen = gen_probs[i][(seeds[:i], outputs[i])]
            t_num = target[i + 1].get(outputs[: i + 1], ZERO)
            t_den = target[i].get(outputs[:i], ZERO)
            if t_num == 0 or t_den == 0:
                raise SupportViolation(f"target gives zero mass to prefix {outputs[: i + 1]}")
            ratios.append(p_gen / (t_num / t_den))
        rows.append((seeds, outputs, ratios, seed_mass))
    return rows, target, gen_probs


def nb_inaccessible_re(y: FiniteDist, g: OnlineGenerator, delta: Fraction | None = None) -> NotionValue:
    """Simulator-free blockwise divergence: how far the generator's online
    conditional block distributions sit from the target's.  Always
    nonnegative, whatever the target's shape."""
    rows, _target, _gen = _blockwise_gap_ratios(y, g)
    m = g.num_blocks
    samples = []
    term_totals = [0.0] * m
    for seeds, outputs, ratios, mass in rows:
        prod = ONE
        for i, ratio in enumerate(ratios):
            term_totals[i] += float(mass) * log2_fraction(ratio)
            prod *= ratio
        samples.append(SampleTerm(seeds + outputs, mass, prod, log2_fraction(prod)))
    cost = {"generator_table": sum(len(t) for t in g.block_maps)}
    return _finish(samples, delta, terms=term_totals, cost=cost)


def inaccessible_entropy(y: FiniteDist, g: OnlineGenerator, delta: Fraction | None = None) -> NotionValue:
    """Gap between the target's real conditional entropies and the entropy
    the online generator actually achieves, block by block.

    The expectation form can be negative on non-flat targets (a generator
    may be *more* random than the target); the sample form coincides with the
    blockwise divergence samples, so `value` equals `sample_mean()` exactly
    when the target is flat.
    """
    rows, target, gen_probs = _blockwise_gap_ratios(y, g)
    m = g.num_blocks

    gap_terms = []
    for i in range(m):
        real = 0.0
        for key, mass in target[i + 1].items():
            cond = mass / target[i][key[:i]]
            real += float(mass) * log2_fraction(1 / cond)
        accessible = 0.0
        prefix_mass: dict[Outcome, Fraction] = {}
        for (r_prefix, y_i), p in gen_probs[i].items():
            prefix_mass[r_prefix] = prefix_mass.get(r_prefix, ZERO) + p
        total_prefixes = len(prefix_mass)
        for (r_prefix, y_i), p in gen_probs[i].items():
            accessible += (1.0 / total_prefixes) * float(p) * log2_fraction(1 / p)
        gap_terms.append(real - accessible)

    samples = []
    for seeds, outputs, ratios, mass in rows:
        prod = ONE
        for ratio in ratios:
            prod *= ratio
        samples.append(SampleTerm(seeds + outputs, mass, prod, log2_fraction(prod)))
    cost = {"generator_table": sum(len(t) for t in g.block_maps)}
    return _finish(samples, delta, terms=gap_terms, cost=cost, value=sum(gap_terms))


def padded_target_joint(y: FiniteDist, g: OnlineGenerator) -> FiniteDist:
    """The target distribution padded with independent uniform dummy seed
    coordinates, so that both sides of each blockwise divergence live on
    syntactically identical outcome spaces."""
    dummy = FiniteDist.uniform_tuples(g.seed_widths)
    return dummy.product(y)
